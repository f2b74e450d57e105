#include "mtg/env.hpp"

#include <stdexcept>

namespace mtg {

namespace {
void accumulate(StepEvents& into, const StepEvents& from) {
    into.damage_to_opponent += from.damage_to_opponent;
    into.cards_drawn += from.cards_drawn;
    into.creatures_entered += from.creatures_entered;
    into.permanents_destroyed += from.permanents_destroyed;
    into.life_gained += from.life_gained;
}
}  // namespace

ArenaEnv::ArenaEnv(const Engine& engine, const DeckList& decks, const Scm& scm,
                   EnvConfig config, std::uint64_t seed)
    : engine_(engine),
      decks_(decks),
      scm_(scm),
      observer_(engine),
      config_(std::move(config)),
      seed_(seed) {
    if (config_.opponent_pool.empty())
        throw std::invalid_argument("environment needs at least one opponent archetype");
    opponents_.reserve(kNumArchetypes);
    for (int a = 0; a < kNumArchetypes; ++a)
        opponents_.emplace_back(engine_, static_cast<Archetype>(a));
}

EnvStep ArenaEnv::reset(std::uint64_t episode) {
    Rng ep_rng(Rng::mix(seed_, episode));
    const std::size_t pick = ep_rng.next_below(config_.opponent_pool.size());
    opponent_archetype_ = config_.opponent_pool[pick];
    agent_seat_ = static_cast<int>(episode % 2);  // alternate going first and second

    const Deck& agent_deck = decks_.deck(config_.agent_archetype);
    const Deck& opp_deck = decks_.deck(opponent_archetype_);
    const std::uint64_t game_seed = ep_rng.next_u64();
    state_ = agent_seat_ == 0
                 ? engine_.new_game(agent_deck, opp_deck, game_seed, config_.turn_cap)
                 : engine_.new_game(opp_deck, agent_deck, game_seed, config_.turn_cap);
    started_ = true;

    EnvStep out;
    play_opponent(out);
    vars_now_ = scm_.extract(state_, agent_seat_);
    out.vars = vars_now_;
    out.obs = observer_.encode(state_, agent_seat_);
    if (!engine_.is_terminal(state_)) out.mask = engine_.legal_mask(state_);
    return out;
}

void ArenaEnv::play_opponent(EnvStep& out) {
    while (!engine_.is_terminal(state_) && state_.decision != agent_seat_) {
        const HeuristicAgent& opp =
            opponents_[static_cast<std::size_t>(opponent_archetype_)];
        const StepResult r = engine_.step(state_, opp.act(state_));
        accumulate(out.events, r.events[static_cast<std::size_t>(agent_seat_)]);
    }
}

EnvStep ArenaEnv::step(int action) {
    if (!started_) throw std::logic_error("step before reset");
    if (engine_.is_terminal(state_)) throw std::logic_error("step on a finished episode");

    EnvStep out;
    const CausalVars vars_before = vars_now_;
    if (config_.compute_eps) out.eps = scm_.intervention_effect(state_, action);

    const StepResult r = engine_.step(state_, action);
    accumulate(out.events, r.events[static_cast<std::size_t>(agent_seat_)]);
    play_opponent(out);
    finish_step(out, vars_before);
    return out;
}

void ArenaEnv::finish_step(EnvStep& out, const CausalVars& vars_before) {
    vars_now_ = scm_.extract(state_, agent_seat_);
    out.vars = vars_now_;
    out.terminal = engine_.is_terminal(state_);

    double terminal_reward = 0.0;
    if (out.terminal) {
        const Outcome outcome = *state_.outcome;
        out.won = outcome == win_for(agent_seat_);
        out.draw = outcome == Outcome::draw;
        terminal_reward = sparse_reward(outcome, agent_seat_);
    }
    out.reward = step_reward(config_.scheme, vars_before, vars_now_, out.events,
                             terminal_reward, config_.shaping, config_.dense, out.terminal);
    out.factor_rewards = factor_rewards(vars_before.factors(), vars_now_.factors());
    out.obs = observer_.encode(state_, agent_seat_);
    if (!out.terminal) out.mask = engine_.legal_mask(state_);
}

}  // namespace mtg
