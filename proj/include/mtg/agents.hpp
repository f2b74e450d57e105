#pragma once

#include <optional>

#include "mtg/actions.hpp"
#include "mtg/cards.hpp"
#include "mtg/engine.hpp"
#include "mtg/rng.hpp"

namespace mtg {

/// Uniform choice over the set bits of the mask. Throws on an empty mask.
int random_act(const ActionMask& mask, Rng& rng);

enum class Aggression : std::uint8_t { attack_all, favorable_trades, defensive };

struct HeuristicParams {
    int mulligan_land_lo = 2;
    int mulligan_land_hi = 5;
    Aggression aggression = Aggression::favorable_trades;
    std::optional<int> defensive_life_threshold;  // absent for the all-out attackers

    static HeuristicParams for_archetype(Archetype a);
};

/**
 * Scripted reference opponent. Deterministic: no randomness, fixed priority
 * order (mulligan rule, land drop, highest-cost affordable spell with removal
 * aimed at the largest threat, archetype attack policy, lethal-preventing and
 * threshold-gated favorable blocks, PASS). Always returns a masked-in action.
 */
class HeuristicAgent {
  public:
    HeuristicAgent(const Engine& engine, Archetype archetype)
        : HeuristicAgent(engine, archetype, HeuristicParams::for_archetype(archetype)) {}
    HeuristicAgent(const Engine& engine, Archetype archetype, HeuristicParams params)
        : engine_(engine), archetype_(archetype), params_(params) {}

    int act(const GameState& state) const;

    Archetype archetype() const { return archetype_; }
    const HeuristicParams& params() const { return params_; }

  private:
    int act_mulligan(const GameState& state, const ActionMask& mask) const;
    int act_bottom_or_discard(const GameState& state, const ActionMask& mask,
                              ActionCategory category) const;
    /// The target this agent would pick for `card` among the legal codes, or
    /// -1 when none is acceptable. act_main consults this before casting so a
    /// spell is never cast and then cancelled at the target prompt.
    int preferred_target(const GameState& state, int p, const CardDef& card,
                         const std::vector<int>& codes) const;
    int act_choose_target(const GameState& state, const ActionMask& mask) const;
    int act_block_target(const GameState& state, const ActionMask& mask) const;
    int act_main(const GameState& state, const ActionMask& mask) const;
    int act_attack(const GameState& state, const ActionMask& mask) const;
    int act_block(const GameState& state, const ActionMask& mask) const;

    const Engine& engine_;
    Archetype archetype_;
    HeuristicParams params_;
};

}  // namespace mtg
