#include "mtg/rewards.hpp"

#include <stdexcept>

namespace mtg {

const char* reward_scheme_name(RewardScheme s) {
    switch (s) {
        case RewardScheme::sparse: return "sparse";
        case RewardScheme::shaped: return "shaped";
        case RewardScheme::dense: return "dense";
    }
    throw std::logic_error("unreachable");
}

RewardScheme reward_scheme_from_name(const std::string& name) {
    if (name == "sparse") return RewardScheme::sparse;
    if (name == "shaped") return RewardScheme::shaped;
    if (name == "dense") return RewardScheme::dense;
    throw std::invalid_argument("unknown reward scheme '" + name + "'");
}

double potential(const CausalVars& vars, const ShapingCoeffs& coeffs) {
    return coeffs.alpha[0] * vars[Var::mana_t] + coeffs.alpha[1] * vars[Var::card_adv] +
           coeffs.alpha[2] * vars[Var::board_press] + coeffs.alpha[3] * vars[Var::tempo] +
           coeffs.alpha[4] * vars[Var::life_buffer];
}

double sparse_reward(Outcome outcome, int perspective) {
    switch (outcome) {
        case Outcome::p0_win: return perspective == 0 ? 1.0 : -1.0;
        case Outcome::p1_win: return perspective == 1 ? 1.0 : -1.0;
        case Outcome::draw: return 0.0;
    }
    throw std::logic_error("unreachable");
}

double shaped_reward(const CausalVars& vars_t, const CausalVars& vars_t1, double terminal,
                     const ShapingCoeffs& coeffs, bool episode_over) {
    const double next_potential = episode_over ? 0.0 : potential(vars_t1, coeffs);
    return coeffs.gamma * next_potential - potential(vars_t, coeffs) + terminal;
}

double dense_reward(const StepEvents& events, const DenseCoeffs& coeffs) {
    if (events.damage_to_opponent < 0 || events.cards_drawn < 0 ||
        events.creatures_entered < 0)
        throw std::invalid_argument("step events must be non-negative counts");
    return coeffs.damage * events.damage_to_opponent + coeffs.draw * events.cards_drawn +
           coeffs.creature * events.creatures_entered;
}

FactorVec factor_rewards(const FactorVec& phi_t, const FactorVec& phi_t1) {
    FactorVec out;
    for (int k = 0; k < kNumFactors; ++k) out[k] = phi_t1[k] - phi_t[k];
    return out;
}

double step_reward(RewardScheme scheme, const CausalVars& vars_t, const CausalVars& vars_t1,
                   const StepEvents& events, double terminal, const ShapingCoeffs& coeffs,
                   const DenseCoeffs& dense, bool episode_over) {
    switch (scheme) {
        case RewardScheme::sparse:
            return terminal;
        case RewardScheme::shaped:
            return shaped_reward(vars_t, vars_t1, terminal, coeffs, episode_over);
        case RewardScheme::dense:
            return shaped_reward(vars_t, vars_t1, terminal, coeffs, episode_over) +
                   dense_reward(events, dense);
    }
    throw std::logic_error("unreachable");
}

}  // namespace mtg
