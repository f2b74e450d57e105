#pragma once

#include <array>
#include <string>

#include "mtg/engine.hpp"
#include "mtg/scm.hpp"

namespace mtg {

enum class RewardScheme : std::uint8_t { sparse, shaped, dense };

const char* reward_scheme_name(RewardScheme s);
RewardScheme reward_scheme_from_name(const std::string& name);

/// Potential coefficients over (mana_t, card_adv, board_press, tempo, life_buffer).
struct ShapingCoeffs {
    std::array<double, 5> alpha{0.02, 0.05, 0.05, 0.1, 0.05};
    double gamma = 0.995;
};

/// Per-event coefficients for (damage_to_opponent, cards_drawn, creatures_entered).
struct DenseCoeffs {
    double damage = 0.1;
    double draw = 0.05;
    double creature = 0.05;
};

double potential(const CausalVars& vars, const ShapingCoeffs& coeffs);

double sparse_reward(Outcome outcome, int perspective);

/// gamma * Phi(s') - Phi(s) + terminal. Terminal states carry zero potential,
/// which makes the undiscounted episode return telescope to the terminal
/// reward exactly.
double shaped_reward(const CausalVars& vars_t, const CausalVars& vars_t1, double terminal,
                     const ShapingCoeffs& coeffs, bool episode_over = false);

/// Event bonus only; the dense scheme adds this on top of the shaped channel.
double dense_reward(const StepEvents& events, const DenseCoeffs& coeffs);

/// r_k = phi_k(s_{t+1}) - phi_k(s_t), componentwise over the six factors.
FactorVec factor_rewards(const FactorVec& phi_t, const FactorVec& phi_t1);

/// Full per-step reward under the selected scheme.
double step_reward(RewardScheme scheme, const CausalVars& vars_t, const CausalVars& vars_t1,
                   const StepEvents& events, double terminal, const ShapingCoeffs& coeffs,
                   const DenseCoeffs& dense, bool episode_over = false);

}  // namespace mtg
