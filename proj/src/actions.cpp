#include "mtg/actions.hpp"

#include <stdexcept>

#include <json.hpp>

namespace mtg {

const std::array<ActionRange, kNumActionCategories>& action_layout() {
    // Frozen table: category, offset, count. Do not reorder or resize; trained
    // checkpoints and trace files depend on these indices.
    static const std::array<ActionRange, kNumActionCategories> table = {{
        {ActionCategory::PASS, 0, 1},
        {ActionCategory::KEEP, 1, 1},
        {ActionCategory::MULLIGAN, 2, 1},
        {ActionCategory::CONFIRM, 3, 1},
        {ActionCategory::CANCEL, 4, 1},
        {ActionCategory::AUTO_PAY, 5, 1},
        {ActionCategory::BOTTOM, 6, 10},
        {ActionCategory::DISCARD, 16, 10},
        {ActionCategory::PLAY_LAND, 26, 10},
        {ActionCategory::CAST_SORCERY, 36, 10},
        {ActionCategory::CAST_INSTANT, 46, 10},
        {ActionCategory::ACTIVATE, 56, 60},
        {ActionCategory::ATTACK_TOGGLE, 116, 60},
        {ActionCategory::BLOCK_SELECT_ATTACKER, 176, 60},
        {ActionCategory::BLOCK_SELECT_BLOCKER, 236, 60},
        {ActionCategory::TARGET, 296, 122},
        {ActionCategory::MANA_SOURCE, 418, 60},
    }};
    return table;
}

ActionCategory action_category(int action) {
    if (action < 0 || action >= kNumActions)
        throw std::out_of_range("action index " + std::to_string(action));
    const auto& layout = action_layout();
    for (int i = kNumActionCategories - 1; i >= 0; --i)
        if (action >= layout[static_cast<std::size_t>(i)].offset)
            return layout[static_cast<std::size_t>(i)].category;
    throw std::logic_error("unreachable");
}

int action_slot(int action) {
    const auto& layout = action_layout();
    return action - layout[static_cast<std::size_t>(action_category(action))].offset;
}

int action_index(ActionCategory category, int slot) {
    const auto& range = action_layout()[static_cast<std::size_t>(category)];
    if (slot < 0 || slot >= range.count)
        throw std::out_of_range(std::string(action_category_name(category)) + " slot " +
                                std::to_string(slot) + " outside [0, " +
                                std::to_string(range.count) + ")");
    return range.offset + slot;
}

const char* action_category_name(ActionCategory c) {
    static const char* names[] = {
        "PASS",     "KEEP",          "MULLIGAN",      "CONFIRM",
        "CANCEL",   "AUTO_PAY",      "BOTTOM",        "DISCARD",
        "PLAY_LAND", "CAST_SORCERY", "CAST_INSTANT",  "ACTIVATE",
        "ATTACK_TOGGLE", "BLOCK_SELECT_ATTACKER", "BLOCK_SELECT_BLOCKER",
        "TARGET",   "MANA_SOURCE",
    };
    return names[static_cast<int>(c)];
}

std::string action_name(int action) {
    const ActionCategory c = action_category(action);
    const auto& range = action_layout()[static_cast<std::size_t>(c)];
    std::string s = action_category_name(c);
    if (range.count > 1) s += "[" + std::to_string(action - range.offset) + "]";
    return s;
}

std::vector<int> ActionMask::legal() const {
    std::vector<int> out;
    out.reserve(bits.count());
    for (int a = 0; a < kNumActions; ++a)
        if (bits.test(static_cast<std::size_t>(a))) out.push_back(a);
    return out;
}

std::string action_layout_json() {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["num_actions"] = kNumActions;
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& r : action_layout()) {
        blocks.push_back({{"category", action_category_name(r.category)},
                          {"offset", r.offset},
                          {"count", r.count}});
    }
    doc["blocks"] = blocks;
    doc["target_slots"] = {
        {"own_battlefield", {0, 59}},
        {"opponent_battlefield", {60, 119}},
        {"own_player", kTargetOwnPlayerSlot},
        {"opponent_player", kTargetOppPlayerSlot},
    };
    return doc.dump(2);
}

}  // namespace mtg
