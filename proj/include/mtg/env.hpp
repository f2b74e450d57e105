#pragma once

#include <cstdint>
#include <vector>

#include "mtg/agents.hpp"
#include "mtg/cards.hpp"
#include "mtg/engine.hpp"
#include "mtg/observe.hpp"
#include "mtg/rewards.hpp"
#include "mtg/scm.hpp"

namespace mtg {

struct EnvConfig {
    RewardScheme scheme = RewardScheme::shaped;
    Archetype agent_archetype = Archetype::mono_red_aggro;
    std::vector<Archetype> opponent_pool{
        Archetype::mono_red_aggro, Archetype::azorius_control, Archetype::dimir_midrange,
        Archetype::domain_ramp, Archetype::boros_convoke};
    int turn_cap = kDefaultTurnCap;
    bool compute_eps = true;  // per-action structural effects; off for plain PPO speed
    ShapingCoeffs shaping;
    DenseCoeffs dense;
};

/// One agent decision point. `eps` is the model-predicted factor delta for the
/// action just taken; `vars` describes the resulting decision point.
struct EnvStep {
    std::vector<double> obs;
    ActionMask mask;
    double reward = 0.0;
    bool terminal = false;
    bool won = false;
    bool draw = false;
    FactorVec factor_rewards{};
    FactorVec eps{};
    CausalVars vars;
    StepEvents events;
};

/**
 * Single-agent view of a two-player game. The opponent is a scripted archetype
 * drawn uniformly from the pool each episode; the learning seat alternates
 * between going first and second. One step() spans everything from the agent's
 * action to its next decision point (or the end of the game), with rewards and
 * events accumulated from the agent's side.
 */
class ArenaEnv {
  public:
    ArenaEnv(const Engine& engine, const DeckList& decks, const Scm& scm, EnvConfig config,
             std::uint64_t seed);

    EnvStep reset(std::uint64_t episode);
    EnvStep step(int action);

    bool terminal() const { return started_ && engine_.is_terminal(state_); }
    int agent_seat() const { return agent_seat_; }
    Archetype opponent_archetype() const { return opponent_archetype_; }
    const GameState& state() const { return state_; }
    const EnvConfig& config() const { return config_; }

  private:
    void play_opponent(EnvStep& out);
    void finish_step(EnvStep& out, const CausalVars& vars_before);

    const Engine& engine_;
    const DeckList& decks_;
    const Scm& scm_;
    Observer observer_;
    EnvConfig config_;
    std::uint64_t seed_;
    std::vector<HeuristicAgent> opponents_;  // one per archetype

    GameState state_;
    bool started_ = false;
    int agent_seat_ = 0;
    Archetype opponent_archetype_ = Archetype::mono_red_aggro;
    CausalVars vars_now_;
};

}  // namespace mtg
