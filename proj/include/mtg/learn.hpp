#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mtg/actions.hpp"
#include "mtg/nn.hpp"
#include "mtg/observe.hpp"
#include "mtg/rng.hpp"
#include "mtg/scm.hpp"

namespace mtg {

struct PolicyConfig {
    int obs_dim = kObsDim;
    int num_actions = kNumActions;
    std::vector<int> hidden{512, 256};
    int gate_hidden = 32;

    bool operator==(const PolicyConfig& o) const {
        return obs_dim == o.obs_dim && num_actions == o.num_actions && hidden == o.hidden &&
               gate_hidden == o.gate_hidden;
    }
};

/**
 * Actor-critic parameters: a masked-softmax actor, a critic trunk whose latent
 * feeds the scalar value head, the six-factor value head, and the sigmoid gate
 * head, plus the learnable mixture logits beta over the factor heads.
 */
struct PolicyParams {
    PolicyConfig config;
    Mlp actor;        // obs -> hidden -> num_actions, final layer scaled by 0.01
    Mlp trunk;        // obs -> hidden; latent = relu(trunk output)
    Mlp value_head;   // latent -> 1
    Mlp factor_head;  // latent -> 6
    Mlp gate_head;    // latent -> gate_hidden -> 1 logit; zero-initialized so g = 0.5
    std::array<double, kNumFactors> beta{};

    static PolicyParams make(const PolicyConfig& config, Rng& rng);
};

std::array<double, kNumFactors> softmax6(const std::array<double, kNumFactors>& beta);

/// beta_k = log(max(w_k, 1e-3) / sum_j max(w_j, 1e-3)); preserves ranking of
/// the positive logistic weights while flooring non-positive ones.
std::array<double, kNumFactors> beta_from_weights(const std::array<double, kNumFactors>& w);

std::size_t policy_param_count(const PolicyParams& params);
std::vector<double> policy_to_flat(const PolicyParams& params);
void policy_from_flat(PolicyParams& params, const std::vector<double>& flat);

struct PolicyGrads {
    MlpGrads actor, trunk, value_head, factor_head, gate_head;
    std::array<double, kNumFactors> beta{};

    static PolicyGrads zeros_like(const PolicyParams& params);
    void zero();
    std::vector<double> to_flat(const PolicyParams& params) const;
};

struct PolicyForward {
    Matrix logp;                 // [n, A] masked log-probs; -inf on illegal entries
    std::vector<double> value;   // [n]
    Matrix factor_values;        // [n, K]
    std::vector<double> gate;    // [n], sigmoid of the gate logit
    Matrix gate_logit;           // [n, 1]
    Matrix latent;               // [n, h] post-relu trunk features
    MlpCache actor_cache, trunk_cache, value_cache, factor_cache, gate_cache;
};

PolicyForward policy_forward(const PolicyParams& params, const Matrix& obs,
                             const std::vector<ActionMask>& masks);

struct ActResult {
    int action = 0;
    double logp = 0.0;
    double value = 0.0;
    FactorVec factor_values{};
    double gate = 0.5;
};

/// Sampling inference for rollout collection.
ActResult policy_act(const PolicyParams& params, const std::vector<double>& obs,
                     const ActionMask& mask, Rng& rng);
/// Deterministic evaluation: argmax over legal log-probs, ties to the lowest index.
int policy_act_argmax(const PolicyParams& params, const std::vector<double>& obs,
                      const ActionMask& mask);

struct RolloutBuffer {
    int obs_dim = 0;
    int capacity = 0;
    int size = 0;
    Matrix obs;
    std::vector<ActionMask> masks;
    std::vector<int> actions;
    std::vector<double> logp;
    std::vector<double> rewards;
    std::vector<FactorVec> factor_rewards;
    std::vector<FactorVec> eps;  // SCM-predicted factor deltas for the taken action
    std::vector<double> values;
    std::vector<FactorVec> factor_values;
    std::vector<double> gates;
    std::vector<std::uint8_t> dones;
    double bootstrap_value = 0.0;
    FactorVec bootstrap_factor_values{};

    RolloutBuffer(int obs_dim_, int capacity_);
    void clear();
    void add(const std::vector<double>& obs_row, const ActionMask& mask, int action,
             double logp_, double reward, const FactorVec& r_factor, const FactorVec& eps_,
             double value, const FactorVec& v_factor, double gate, bool done);
    bool full() const { return size == capacity; }
};

/// Truncated GAE with episode boundaries; bootstrap applies only past the last
/// step when it is not terminal.
std::vector<double> gae(const std::vector<double>& rewards, const std::vector<double>& values,
                        const std::vector<std::uint8_t>& dones, double bootstrap_value,
                        double gamma, double lambda);

/// Channelwise GAE over the six factor channels against the factor value head.
std::vector<FactorVec> factor_gae(const std::vector<FactorVec>& rewards,
                                  const std::vector<FactorVec>& values,
                                  const std::vector<std::uint8_t>& dones,
                                  const FactorVec& bootstrap_values, double gamma,
                                  double lambda);

double blend_advantage(double a_scalar, const FactorVec& a_k, double g,
                       const std::array<double, kNumFactors>& w);

/// -(1/K) sum_k Cov(A_k, eps_k) / (sigma_{A_k} * sigma_{eps_k} + delta), with the
/// per-factor sigma_A clamped below by delta.
double calibration_loss(const std::vector<FactorVec>& a, const std::vector<FactorVec>& e,
                        double delta);

struct TrainCoeffs {
    double lr_start = 3e-4;
    double lr_end = 1e-5;
    int minibatch = 256;
    int epochs = 10;
    int n_steps = 2048;
    double gamma = 0.995;
    double lambda = 0.95;
    double clip = 0.2;
    double c_ppo = 1.0;  // coefficient on the clipped surrogate itself
    double c_v = 0.5;
    double c_h_start = 0.05;
    double c_h_end = 0.005;
    double c_f = 0.5;
    double c_c = 0.1;
    double c_e = 0.0;
    double grad_norm_max = 0.5;
    double delta = 1e-6;

    double lr_at(double anneal) const { return lr_start + (lr_end - lr_start) * anneal; }
    double c_h_at(double anneal) const { return c_h_start + (c_h_end - c_h_start) * anneal; }
};

/// forced_zero is the scalar-only control (blend bypassed entirely);
/// constant_half freezes g at 0.5 for the no-gate ablation.
enum class GateMode : std::uint8_t { learned, forced_zero, constant_half };

struct SampleBatch {
    Matrix obs;
    std::vector<ActionMask> masks;
    std::vector<int> actions;
    std::vector<double> logp_old;
    std::vector<double> returns;
    std::vector<double> adv;  // normalized scalar advantage (plain route)
    // factored route extras; empty on the plain route
    std::vector<double> adv_scalar;         // raw scalar advantage
    std::vector<FactorVec> adv_factor;      // frozen per-factor advantages
    std::vector<FactorVec> returns_factor;  // per-factor GAE returns
    std::vector<FactorVec> eps;
    double blend_mean = 0.0;
    double blend_std = 1.0;
};

struct LossTerms {
    double ppo = 0.0, value = 0.0, entropy = 0.0, factor = 0.0, cal = 0.0, gate = 0.0;
    double total = 0.0;
    double approx_kl = 0.0, clip_fraction = 0.0;
};

/// Loss and analytic gradients for one minibatch; grads may be null for
/// loss-only evaluation (used by the finite-difference checks).
LossTerms ppo_loss_grad(const PolicyParams& params, const SampleBatch& batch,
                        const TrainCoeffs& coeffs, double c_h, PolicyGrads* grads);
LossTerms cgfa_loss_grad(const PolicyParams& params, const SampleBatch& batch,
                         const TrainCoeffs& coeffs, double c_h, GateMode gate_mode,
                         PolicyGrads* grads);

/// Max relative error between analytic and central-difference gradients over
/// every parameter, for the loss configured by `coeffs` on the given route.
double gradient_check(const PolicyParams& params, const SampleBatch& batch,
                      const TrainCoeffs& coeffs, double c_h, GateMode gate_mode,
                      bool factored_route, double fd_step = 1e-5);

struct UpdateMetrics {
    double loss_ppo = 0.0, loss_value = 0.0, loss_entropy = 0.0;
    double loss_factor = 0.0, loss_cal = 0.0, loss_gate = 0.0;
    double approx_kl = 0.0, clip_fraction = 0.0, grad_norm = 0.0;
    double lr = 0.0, c_h = 0.0;
    FactorVec pearson{};       // corr(A_k, eps_k) over the rollout
    FactorVec sign_agree{};    // -1 marks an undefined (no both-nonzero pairs) entry
    FactorVec credit_share{};  // |w_k A_k| aggregated over the rollout, normalized
    FactorVec mix_weights{};   // softmax(beta) after the update
    double gate_mean = 0.0, gate_min = 0.0, gate_max = 0.0;
};

/// Plain masked PPO: clipped surrogate on the rollout-normalized scalar
/// advantage, value regression, entropy bonus.
UpdateMetrics ppo_update(const RolloutBuffer& buffer, PolicyParams& params, Adam& opt,
                         const TrainCoeffs& coeffs, double anneal, Rng& rng);

/// Factored update: per-factor GAE, residual gate blend recomputed inside each
/// minibatch with the current gate and mixture logits under rollout-frozen
/// normalization constants, factor value loss, and the correlation
/// calibration loss. Shares only low-level primitives with ppo_update.
UpdateMetrics cgfa_update(const RolloutBuffer& buffer, PolicyParams& params, Adam& opt,
                          const TrainCoeffs& coeffs, double anneal, Rng& rng,
                          GateMode gate_mode = GateMode::learned);

struct CwmConfig {
    int emb_dim = 32;
    int hidden = 128;
    double lr = 1e-3;
    std::size_t replay_capacity = 20000;
    int steps_per_update = 16;
    int minibatch = 128;
};

struct CwmTransition {
    CausalVars cv;
    int action = 0;
    CausalVars cv_next;
    bool has_outcome = false;  // false for drawn episodes; win loss masked out
    bool won = false;
};

/**
 * Causal world model for the CWM-augmented baseline: embeds the action,
 * concatenates the range-scaled causal variables, and predicts the next-step
 * variable deltas plus an eventual-win logit from a replay of transitions.
 */
class Cwm {
  public:
    Cwm(const CwmConfig& config, std::uint64_t seed);

    void observe(const CwmTransition& t);
    /// 16 sampled minibatches per call; no-op until the replay holds one minibatch.
    void update(Rng& rng);

    std::array<double, kNumVars> predict_delta(const CausalVars& cv, int action) const;
    double predict_win(const CausalVars& cv, int action) const;
    /// Projected factor movement sum_k (w_k / std_k) * delta_phi_k.
    double score(const CausalVars& cv, int action, const WinWeights& w) const;

    std::size_t replay_size() const { return replay_.size(); }
    const CwmConfig& config() const { return config_; }
    double last_aux_loss() const { return last_aux_loss_; }
    double last_win_loss() const { return last_win_loss_; }

  private:
    void forward_row(const CausalVars& cv, int action, std::vector<double>& input,
                     Matrix& out, MlpCache& cache) const;

    CwmConfig config_;
    Matrix embedding_;  // [num_actions, emb_dim]
    Mlp net_;           // [13 + emb, hidden, 14]: 13 deltas + win logit
    Adam opt_;
    std::vector<CwmTransition> replay_;
    std::size_t replay_next_ = 0;
    double last_aux_loss_ = 0.0;
    double last_win_loss_ = 0.0;
};

/// Epsilon-greedy blend of policy log-probability and the CWM projection:
/// argmax over legal a of logpi(a) + lambda * score(a), ties to lowest index.
int cwm_act(const double* logp_row, const ActionMask& mask, const CausalVars& cv,
            const Cwm& cwm, const WinWeights& w, double lambda, double eps_explore, Rng& rng);

struct Checkpoint {
    std::string meta_json;  // free-form run description
    PolicyConfig config;
    std::vector<double> params;  // flat policy parameters including beta
    std::vector<double> adam_m, adam_v;
    std::int64_t adam_steps = 0;
    WinWeights weights;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint make_checkpoint(const PolicyParams& params, const Adam& opt,
                           const WinWeights& weights, const std::string& meta_json);
void restore_checkpoint(const Checkpoint& ck, PolicyParams& params, Adam& opt,
                        WinWeights& weights);

}  // namespace mtg
