#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtg/actions.hpp"
#include "mtg/cards.hpp"
#include "mtg/rng.hpp"

namespace mtg {

constexpr int kDefaultTurnCap = 30;
constexpr int kBattlefieldSlots = 60;
/// Hard per-game step budget; exceeding it forces a draw. Normal games finish
/// within a few hundred steps, so only agent action cycles ever reach this.
constexpr std::uint64_t kStepSafetyCap = 100000;
/// Repetition rule: visiting the exact same game state this many times within
/// a single turn ends the game as a draw. Reversible action pairs (casting
/// then cancelling, toggling an attacker) otherwise let a deterministic agent
/// loop forever without advancing the turn.
constexpr int kRepetitionLimit = 4;
constexpr int kMaxHandEncoded = 10;   // hand positions addressable by actions
constexpr int kHandLimit = 7;         // discard down to this at end of turn
constexpr int kMaxMulligans = 3;

enum class Phase : std::uint8_t {
    beginning = 0,
    main1 = 1,
    combat_attack = 2,
    combat_block = 3,
    combat_damage = 4,
    main2 = 5,
    end_step = 6,
};
constexpr int kNumPhases = 7;

enum class PendingKind : std::uint8_t {
    none = 0,
    mulligan = 1,
    bottoming = 2,
    discard = 3,
    choose_target = 4,
    pay_mana = 5,
    respond = 6,
    choose_block_target = 7,
};
constexpr int kNumPendingKinds = 8;

enum class Outcome : std::uint8_t { p0_win = 0, p1_win = 1, draw = 2 };

inline Outcome win_for(int player) { return player == 0 ? Outcome::p0_win : Outcome::p1_win; }

struct Permanent {
    CardId card = 0;
    int slot = -1;          // stable battlefield index, 0..59; lowest free at entry
    bool token = false;
    bool tapped = false;
    bool sick = false;      // entered this turn; cleared at controller's turn start
    int damage = 0;
    int pump_power = 0;     // until end of turn
    int pump_toughness = 0;
    bool attacking = false;
    int blocking = -1;      // slot of the enemy attacker this creature blocks
};

inline int effective_power(const Permanent& p, const CardDef& d) {
    return d.power + p.pump_power;
}
inline int effective_toughness(const Permanent& p, const CardDef& d) {
    return d.toughness + p.pump_toughness;
}

struct PlayerState {
    int life = 20;
    std::vector<CardId> library;  // back() is the top, front() is the bottom
    std::vector<CardId> hand;
    std::vector<Permanent> battlefield;  // kept sorted by slot
    std::vector<CardId> graveyard;
    int mulligans_taken = 0;
    bool kept = false;
    bool land_played = false;
    int mana_spent_this_turn = 0;

    const Permanent* find(int slot) const {
        for (const auto& p : battlefield)
            if (p.slot == slot) return &p;
        return nullptr;
    }
    Permanent* find(int slot) {
        for (auto& p : battlefield)
            if (p.slot == slot) return &p;
        return nullptr;
    }
};

/// A spell that has been announced and is moving through target/payment/response.
struct PendingSpell {
    CardId card = 0;
    int caster = 0;
    int target_code = -1;  // TARGET slot once chosen; -1 for untargeted spells
    int generic_remaining = 0;
    std::array<int, kNumColors> pips_remaining{};
    std::vector<int> tapped_for_cost;  // battlefield slots tapped so far (refunded on CANCEL)

    int total_remaining() const {
        int n = generic_remaining;
        for (int p : pips_remaining) n += p;
        return n;
    }
};

struct GameState {
    std::array<PlayerState, 2> players;
    int turn = 1;               // global player-turn counter, 1-based
    Phase phase = Phase::beginning;
    int active = 0;             // whose turn it is
    int decision = 0;           // who must act now
    PendingKind pending = PendingKind::none;
    int bottoming_remaining = 0;
    std::optional<PendingSpell> spell;     // the spell being cast
    std::optional<PendingSpell> response;  // a counter being paid for in response
    int pending_blocker = -1;              // blocker slot awaiting BLOCK_SELECT_ATTACKER
    std::optional<Outcome> outcome;
    int turn_cap = kDefaultTurnCap;
    Rng rng;                    // consumed only by shuffles
    std::uint64_t step_count = 0;
    std::vector<std::uint64_t> seen_this_turn;  // state hashes for the repetition rule
};

/// Per-perspective step accounting. events[p] is the step as seen by player p.
struct StepEvents {
    int damage_to_opponent = 0;   // damage dealt to the other player
    int cards_drawn = 0;          // cards this player drew
    int creatures_entered = 0;    // creatures that entered under this player's control
    int permanents_destroyed = 0; // the other player's permanents that were destroyed
    int life_gained = 0;          // life this player gained from effects
};

struct StepResult {
    std::array<StepEvents, 2> events{};
    std::optional<Outcome> outcome;
};

struct IllegalActionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/**
 * Deterministic rules engine. Stateless apart from the catalog reference; all
 * game state lives in GameState, so states copy and hash freely. Randomness
 * enters only through shuffles driven by the state's own generator.
 */
class Engine {
  public:
    explicit Engine(const Catalog& catalog) : catalog_(catalog) {}

    GameState new_game(const Deck& deck0, const Deck& deck1, std::uint64_t seed,
                       int turn_cap = kDefaultTurnCap) const;

    /// Exactly the executable actions: step() succeeds iff the bit is set.
    ActionMask legal_mask(const GameState& state) const;
    std::vector<int> legal_actions(const GameState& state) const {
        return legal_mask(state).legal();
    }

    /// Applies one action in place. Throws IllegalActionError on a masked-out action.
    StepResult step(GameState& state, int action) const;

    bool is_terminal(const GameState& state) const { return state.outcome.has_value(); }

    /// FNV-1a over the full state including hidden zones and the shuffle generator.
    std::uint64_t state_hash(const GameState& state) const;

    /// The same position with the two players exchanged; used by symmetry checks.
    GameState mirrored(const GameState& state) const;

    const Catalog& catalog() const { return catalog_; }
    const CardDef& def(CardId id) const { return catalog_[id]; }

    /// True when the permanent could be tapped for mana right now.
    bool mana_ready(const Permanent& p) const;

    /// Feasibility of paying `cost` from the player's untapped sources.
    bool affordable(const GameState& state, int player, const CardDef& card) const;

    /// Valid TARGET slots for a card cast by `caster` in this state.
    std::vector<int> valid_targets(const GameState& state, int caster,
                                   const CardDef& card) const;

  private:
    const Catalog& catalog_;
};

}  // namespace mtg
