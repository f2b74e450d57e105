#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <string>
#include <vector>

namespace mtg {

constexpr int kNumActions = 478;

/// Fixed action vocabulary. Index ranges are frozen; see actions.cpp for the table.
enum class ActionCategory : std::uint8_t {
    PASS = 0,
    KEEP = 1,
    MULLIGAN = 2,
    CONFIRM = 3,
    CANCEL = 4,
    AUTO_PAY = 5,
    BOTTOM = 6,
    DISCARD = 7,
    PLAY_LAND = 8,
    CAST_SORCERY = 9,
    CAST_INSTANT = 10,
    ACTIVATE = 11,
    ATTACK_TOGGLE = 12,
    BLOCK_SELECT_ATTACKER = 13,
    BLOCK_SELECT_BLOCKER = 14,
    TARGET = 15,
    MANA_SOURCE = 16,
};
constexpr int kNumActionCategories = 17;

struct ActionRange {
    ActionCategory category;
    int offset;  // first action index of the block
    int count;   // block width
};

/// The frozen layout, in index order. Offsets partition [0, 478).
const std::array<ActionRange, kNumActionCategories>& action_layout();

/// Category and slot (index - offset) for an action index.
ActionCategory action_category(int action);
int action_slot(int action);

/// Inverse: action index for (category, slot). Throws on out-of-range slot.
int action_index(ActionCategory category, int slot);

const char* action_category_name(ActionCategory c);

/// Human-readable form like "TARGET[61]" used in traces and error messages.
std::string action_name(int action);

/// TARGET slot semantics: battlefield ordinals then players, own side first.
constexpr int kTargetOwnPlayerSlot = 120;
constexpr int kTargetOppPlayerSlot = 121;

struct ActionMask {
    std::bitset<kNumActions> bits;

    bool test(int action) const { return bits.test(static_cast<std::size_t>(action)); }
    void set(int action) { bits.set(static_cast<std::size_t>(action)); }
    void set(ActionCategory category, int slot) { set(action_index(category, slot)); }
    int count() const { return static_cast<int>(bits.count()); }
    std::vector<int> legal() const;
    bool operator==(const ActionMask& other) const { return bits == other.bits; }
};

/// Layout export for external consumers; stable across runs, versioned.
std::string action_layout_json();

}  // namespace mtg
