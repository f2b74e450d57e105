#include "mtg/learn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mtg/stats.hpp"

namespace mtg {

namespace {

void add_into(Matrix& dst, const Matrix& src) {
    for (std::size_t i = 0; i < dst.a.size(); ++i) dst.a[i] += src.a[i];
}

std::pair<double, double> mean_std(const std::vector<double>& x) {
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    return {mean, std::sqrt(var / n)};
}

// Per-sample clipped-surrogate pieces shared by both update routes.
struct SurrogateTerms {
    double loss;  // -min(r*a, clip(r)*a), unscaled
    double dlp;   // d loss / d lp_new
    double dadv;  // d loss / d adv_hat
    bool clipped;
};

SurrogateTerms clipped_surrogate(double lp_new, double lp_old, double adv_hat, double clip) {
    const double r = std::exp(lp_new - lp_old);
    const double rc = std::min(1.0 + clip, std::max(1.0 - clip, r));
    const double u1 = r * adv_hat;
    const double u2 = rc * adv_hat;
    SurrogateTerms out;
    out.clipped = std::abs(r - 1.0) > clip;
    if (u1 <= u2) {
        out.loss = -u1;
        out.dlp = -u1;  // d(r*a)/dlp = r*a
        out.dadv = -r;
    } else {
        out.loss = -u2;
        out.dlp = 0.0;  // rc is flat in lp on this branch
        out.dadv = -rc;
    }
    return out;
}

// dlogits_j += dlp_action * (1[j==a] - p_j) + ent_scale * p_j * (lp_j + h)
void policy_sample_grad(const double* logp_row, const ActionMask& mask, int action,
                        double dlp_action, double ent_scale, double h, double* dlogits_row) {
    for (int j = 0; j < kNumActions; ++j) {
        if (!mask.test(j)) continue;
        const double p = std::exp(logp_row[j]);
        double g = -dlp_action * p + ent_scale * p * (logp_row[j] + h);
        if (j == action) g += dlp_action;
        dlogits_row[j] += g;
    }
}

double bernoulli_entropy(double g) {
    const double eps = 1e-12;
    const double p = std::min(1.0 - eps, std::max(eps, g));
    return -p * std::log(p) - (1.0 - p) * std::log(1.0 - p);
}

}  // namespace

PolicyParams PolicyParams::make(const PolicyConfig& config, Rng& rng) {
    if (config.hidden.empty()) throw std::invalid_argument("policy needs hidden layers");
    PolicyParams p;
    p.config = config;
    std::vector<int> actor_sizes{config.obs_dim};
    actor_sizes.insert(actor_sizes.end(), config.hidden.begin(), config.hidden.end());
    actor_sizes.push_back(config.num_actions);
    p.actor = Mlp::make(actor_sizes, 0.01, rng);

    std::vector<int> trunk_sizes{config.obs_dim};
    trunk_sizes.insert(trunk_sizes.end(), config.hidden.begin(), config.hidden.end());
    p.trunk = Mlp::make(trunk_sizes, std::sqrt(2.0), rng);

    const int latent = config.hidden.back();
    p.value_head = Mlp::make({latent, 1}, 1.0, rng);
    p.factor_head = Mlp::make({latent, kNumFactors}, 1.0, rng);
    p.gate_head = Mlp::make({latent, config.gate_hidden, 1}, 1.0, rng);
    p.gate_head.layers.back().w.zero();  // g starts at exactly sigmoid(0) = 0.5
    std::fill(p.gate_head.layers.back().b.begin(), p.gate_head.layers.back().b.end(), 0.0);
    p.beta.fill(0.0);
    return p;
}

std::array<double, kNumFactors> softmax6(const std::array<double, kNumFactors>& beta) {
    double maxv = beta[0];
    for (double b : beta) maxv = std::max(maxv, b);
    std::array<double, kNumFactors> w{};
    double sum = 0.0;
    for (int k = 0; k < kNumFactors; ++k) {
        w[k] = std::exp(beta[k] - maxv);
        sum += w[k];
    }
    for (double& x : w) x /= sum;
    return w;
}

std::array<double, kNumFactors> beta_from_weights(const std::array<double, kNumFactors>& w) {
    std::array<double, kNumFactors> floored{};
    double sum = 0.0;
    for (int k = 0; k < kNumFactors; ++k) {
        floored[k] = std::max(w[k], 1e-3);
        sum += floored[k];
    }
    std::array<double, kNumFactors> beta{};
    for (int k = 0; k < kNumFactors; ++k) beta[k] = std::log(floored[k] / sum);
    return beta;
}

std::size_t policy_param_count(const PolicyParams& p) {
    return mlp_param_count(p.actor) + mlp_param_count(p.trunk) +
           mlp_param_count(p.value_head) + mlp_param_count(p.factor_head) +
           mlp_param_count(p.gate_head) + kNumFactors;
}

std::vector<double> policy_to_flat(const PolicyParams& p) {
    std::vector<double> flat(policy_param_count(p));
    double* out = flat.data();
    mlp_copy_params(p.actor, out);
    out += mlp_param_count(p.actor);
    mlp_copy_params(p.trunk, out);
    out += mlp_param_count(p.trunk);
    mlp_copy_params(p.value_head, out);
    out += mlp_param_count(p.value_head);
    mlp_copy_params(p.factor_head, out);
    out += mlp_param_count(p.factor_head);
    mlp_copy_params(p.gate_head, out);
    out += mlp_param_count(p.gate_head);
    std::copy(p.beta.begin(), p.beta.end(), out);
    return flat;
}

void policy_from_flat(PolicyParams& p, const std::vector<double>& flat) {
    if (flat.size() != policy_param_count(p))
        throw std::invalid_argument("policy_from_flat size mismatch");
    const double* in = flat.data();
    mlp_load_params(p.actor, in);
    in += mlp_param_count(p.actor);
    mlp_load_params(p.trunk, in);
    in += mlp_param_count(p.trunk);
    mlp_load_params(p.value_head, in);
    in += mlp_param_count(p.value_head);
    mlp_load_params(p.factor_head, in);
    in += mlp_param_count(p.factor_head);
    mlp_load_params(p.gate_head, in);
    in += mlp_param_count(p.gate_head);
    std::copy(in, in + kNumFactors, p.beta.begin());
}

PolicyGrads PolicyGrads::zeros_like(const PolicyParams& p) {
    PolicyGrads g;
    g.actor = MlpGrads::zeros_like(p.actor);
    g.trunk = MlpGrads::zeros_like(p.trunk);
    g.value_head = MlpGrads::zeros_like(p.value_head);
    g.factor_head = MlpGrads::zeros_like(p.factor_head);
    g.gate_head = MlpGrads::zeros_like(p.gate_head);
    g.beta.fill(0.0);
    return g;
}

void PolicyGrads::zero() {
    actor.zero();
    trunk.zero();
    value_head.zero();
    factor_head.zero();
    gate_head.zero();
    beta.fill(0.0);
}

std::vector<double> PolicyGrads::to_flat(const PolicyParams& p) const {
    std::vector<double> flat(policy_param_count(p));
    double* out = flat.data();
    mlp_grads_copy(actor, out);
    out += mlp_param_count(p.actor);
    mlp_grads_copy(trunk, out);
    out += mlp_param_count(p.trunk);
    mlp_grads_copy(value_head, out);
    out += mlp_param_count(p.value_head);
    mlp_grads_copy(factor_head, out);
    out += mlp_param_count(p.factor_head);
    mlp_grads_copy(gate_head, out);
    out += mlp_param_count(p.gate_head);
    std::copy(beta.begin(), beta.end(), out);
    return flat;
}

PolicyForward policy_forward(const PolicyParams& params, const Matrix& obs,
                             const std::vector<ActionMask>& masks) {
    PolicyForward f;
    const Matrix& logits = mlp_forward(params.actor, obs, f.actor_cache);
    masked_log_softmax(logits, masks, f.logp);
    f.latent = mlp_forward(params.trunk, obs, f.trunk_cache);
    relu_inplace(f.latent);
    const Matrix& v = mlp_forward(params.value_head, f.latent, f.value_cache);
    f.value.resize(static_cast<std::size_t>(obs.rows));
    for (int i = 0; i < obs.rows; ++i) f.value[static_cast<std::size_t>(i)] = v.at(i, 0);
    f.factor_values = mlp_forward(params.factor_head, f.latent, f.factor_cache);
    f.gate_logit = mlp_forward(params.gate_head, f.latent, f.gate_cache);
    f.gate.resize(static_cast<std::size_t>(obs.rows));
    for (int i = 0; i < obs.rows; ++i)
        f.gate[static_cast<std::size_t>(i)] = sigmoid(f.gate_logit.at(i, 0));
    return f;
}

ActResult policy_act(const PolicyParams& params, const std::vector<double>& obs,
                     const ActionMask& mask, Rng& rng) {
    Matrix x(1, static_cast<int>(obs.size()));
    std::copy(obs.begin(), obs.end(), x.row(0));
    PolicyForward f = policy_forward(params, x, {mask});
    ActResult out;
    out.action = sample_masked(f.logp.row(0), mask, rng);
    out.logp = f.logp.at(0, out.action);
    out.value = f.value[0];
    for (int k = 0; k < kNumFactors; ++k) out.factor_values[k] = f.factor_values.at(0, k);
    out.gate = f.gate[0];
    return out;
}

int policy_act_argmax(const PolicyParams& params, const std::vector<double>& obs,
                      const ActionMask& mask) {
    Matrix x(1, static_cast<int>(obs.size()));
    std::copy(obs.begin(), obs.end(), x.row(0));
    PolicyForward f = policy_forward(params, x, {mask});
    return argmax_legal(f.logp.row(0), mask);
}

RolloutBuffer::RolloutBuffer(int obs_dim_, int capacity_)
    : obs_dim(obs_dim_), capacity(capacity_), obs(capacity_, obs_dim_) {
    masks.reserve(static_cast<std::size_t>(capacity));
}

void RolloutBuffer::clear() {
    size = 0;
    masks.clear();
    actions.clear();
    logp.clear();
    rewards.clear();
    factor_rewards.clear();
    eps.clear();
    values.clear();
    factor_values.clear();
    gates.clear();
    dones.clear();
    bootstrap_value = 0.0;
    bootstrap_factor_values.fill(0.0);
}

void RolloutBuffer::add(const std::vector<double>& obs_row, const ActionMask& mask,
                        int action, double logp_, double reward, const FactorVec& r_factor,
                        const FactorVec& eps_, double value, const FactorVec& v_factor,
                        double gate, bool done) {
    if (size >= capacity) throw std::runtime_error("rollout buffer overflow");
    if (static_cast<int>(obs_row.size()) != obs_dim)
        throw std::invalid_argument("rollout observation width mismatch");
    std::copy(obs_row.begin(), obs_row.end(), obs.row(size));
    masks.push_back(mask);
    actions.push_back(action);
    logp.push_back(logp_);
    rewards.push_back(reward);
    factor_rewards.push_back(r_factor);
    eps.push_back(eps_);
    values.push_back(value);
    factor_values.push_back(v_factor);
    gates.push_back(gate);
    dones.push_back(done ? 1 : 0);
    ++size;
}

std::vector<double> gae(const std::vector<double>& rewards, const std::vector<double>& values,
                        const std::vector<std::uint8_t>& dones, double bootstrap_value,
                        double gamma, double lambda) {
    const std::size_t T = rewards.size();
    if (values.size() != T || dones.size() != T)
        throw std::invalid_argument("gae length mismatch");
    std::vector<double> adv(T, 0.0);
    double carry = 0.0;
    for (std::size_t ti = T; ti-- > 0;) {
        const bool done = dones[ti] != 0;
        const double next_value = done ? 0.0 : (ti + 1 < T ? values[ti + 1] : bootstrap_value);
        const double delta = rewards[ti] + gamma * next_value - values[ti];
        carry = delta + gamma * lambda * (done ? 0.0 : carry);
        adv[ti] = carry;
    }
    return adv;
}

std::vector<FactorVec> factor_gae(const std::vector<FactorVec>& rewards,
                                  const std::vector<FactorVec>& values,
                                  const std::vector<std::uint8_t>& dones,
                                  const FactorVec& bootstrap_values, double gamma,
                                  double lambda) {
    const std::size_t T = rewards.size();
    if (values.size() != T || dones.size() != T)
        throw std::invalid_argument("factor_gae length mismatch");
    std::vector<FactorVec> adv(T);
    for (int k = 0; k < kNumFactors; ++k) {
        double carry = 0.0;
        for (std::size_t ti = T; ti-- > 0;) {
            const bool done = dones[ti] != 0;
            const double next_value =
                done ? 0.0 : (ti + 1 < T ? values[ti + 1][k] : bootstrap_values[k]);
            const double delta = rewards[ti][k] + gamma * next_value - values[ti][k];
            carry = delta + gamma * lambda * (done ? 0.0 : carry);
            adv[ti][k] = carry;
        }
    }
    return adv;
}

double blend_advantage(double a_scalar, const FactorVec& a_k, double g,
                       const std::array<double, kNumFactors>& w) {
    double mix = 0.0;
    for (int k = 0; k < kNumFactors; ++k) mix += w[k] * a_k[k];
    return (1.0 - g) * a_scalar + g * mix;
}

double calibration_loss(const std::vector<FactorVec>& a, const std::vector<FactorVec>& e,
                        double delta) {
    if (a.size() != e.size() || a.empty())
        throw std::invalid_argument("calibration_loss batch mismatch");
    const double n = static_cast<double>(a.size());
    double loss = 0.0;
    for (int k = 0; k < kNumFactors; ++k) {
        double ma = 0.0, me = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            ma += a[i][k];
            me += e[i][k];
        }
        ma /= n;
        me /= n;
        double cov = 0.0, va = 0.0, ve = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double da = a[i][k] - ma;
            const double de = e[i][k] - me;
            cov += da * de;
            va += da * da;
            ve += de * de;
        }
        cov /= n;
        const double sa = std::max(std::sqrt(va / n), delta);
        const double se = std::sqrt(ve / n);
        loss += -cov / (sa * se + delta);
    }
    return loss / kNumFactors;
}

LossTerms ppo_loss_grad(const PolicyParams& params, const SampleBatch& batch,
                        const TrainCoeffs& coeffs, double c_h, PolicyGrads* grads) {
    const int n = batch.obs.rows;
    PolicyForward f = policy_forward(params, batch.obs, batch.masks);
    LossTerms terms;
    Matrix dlogits(n, params.config.num_actions);
    Matrix d_value_out(n, 1);

    for (int i = 0; i < n; ++i) {
        const std::size_t si = static_cast<std::size_t>(i);
        const int a = batch.actions[si];
        const double lp_new = f.logp.at(i, a);
        const double adv_hat = batch.adv[si];
        const SurrogateTerms s =
            clipped_surrogate(lp_new, batch.logp_old[si], adv_hat, coeffs.clip);
        terms.ppo += s.loss / n;
        terms.approx_kl += (batch.logp_old[si] - lp_new) / n;
        terms.clip_fraction += s.clipped ? 1.0 / n : 0.0;

        const double h = masked_entropy_row(f.logp.row(i), batch.masks[si]);
        terms.entropy += h / n;

        const double verr = f.value[si] - batch.returns[si];
        terms.value += verr * verr / n;

        if (grads) {
            policy_sample_grad(f.logp.row(i), batch.masks[si], a,
                               coeffs.c_ppo * s.dlp / n, c_h / n, h, dlogits.row(i));
            d_value_out.at(i, 0) = coeffs.c_v * 2.0 * verr / n;
        }
    }
    terms.total = coeffs.c_ppo * terms.ppo + coeffs.c_v * terms.value - c_h * terms.entropy;

    if (grads) {
        mlp_backward(params.actor, f.actor_cache, dlogits, grads->actor);
        Matrix dlat;
        mlp_backward(params.value_head, f.value_cache, d_value_out, grads->value_head, &dlat);
        relu_backward(f.latent, dlat);
        mlp_backward(params.trunk, f.trunk_cache, dlat, grads->trunk);
    }
    return terms;
}

LossTerms cgfa_loss_grad(const PolicyParams& params, const SampleBatch& batch,
                         const TrainCoeffs& coeffs, double c_h, GateMode gate_mode,
                         PolicyGrads* grads) {
    const int n = batch.obs.rows;
    PolicyForward f = policy_forward(params, batch.obs, batch.masks);
    const std::array<double, kNumFactors> w = softmax6(params.beta);
    LossTerms terms;
    Matrix dlogits(n, params.config.num_actions);
    Matrix d_value_out(n, 1);
    Matrix d_factor_out(n, kNumFactors);
    Matrix d_gate_out(n, 1);
    const bool factor_on = coeffs.c_f != 0.0;
    const bool cal_on = coeffs.c_c != 0.0;
    const bool gate_learned = gate_mode == GateMode::learned;
    const bool gate_ent_on = coeffs.c_e != 0.0 && gate_learned;

    // Current per-factor advantages for the calibration loss.
    std::vector<FactorVec> a_cur;
    if (cal_on) {
        a_cur.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < kNumFactors; ++k)
                a_cur[static_cast<std::size_t>(i)][k] =
                    batch.returns_factor[static_cast<std::size_t>(i)][k] -
                    f.factor_values.at(i, k);
    }

    for (int i = 0; i < n; ++i) {
        const std::size_t si = static_cast<std::size_t>(i);
        const int a = batch.actions[si];
        const double lp_new = f.logp.at(i, a);

        double adv_hat, mix = 0.0, g_used = 0.0;
        if (gate_mode == GateMode::forced_zero) {
            adv_hat = (batch.adv_scalar[si] - batch.blend_mean) / batch.blend_std;
        } else {
            g_used = gate_mode == GateMode::constant_half ? 0.5 : f.gate[si];
            for (int k = 0; k < kNumFactors; ++k) mix += w[k] * batch.adv_factor[si][k];
            const double blended =
                (1.0 - g_used) * batch.adv_scalar[si] + g_used * mix;
            adv_hat = (blended - batch.blend_mean) / batch.blend_std;
        }

        const SurrogateTerms s =
            clipped_surrogate(lp_new, batch.logp_old[si], adv_hat, coeffs.clip);
        terms.ppo += s.loss / n;
        terms.approx_kl += (batch.logp_old[si] - lp_new) / n;
        terms.clip_fraction += s.clipped ? 1.0 / n : 0.0;

        const double h = masked_entropy_row(f.logp.row(i), batch.masks[si]);
        terms.entropy += h / n;

        const double verr = f.value[si] - batch.returns[si];
        terms.value += verr * verr / n;

        if (factor_on) {
            for (int k = 0; k < kNumFactors; ++k) {
                const double ferr = f.factor_values.at(i, k) - batch.returns_factor[si][k];
                terms.factor += ferr * ferr / (kNumFactors * n);
                if (grads)
                    d_factor_out.at(i, k) +=
                        coeffs.c_f * 2.0 * ferr / (kNumFactors * n);
            }
        }
        if (gate_learned) terms.gate += bernoulli_entropy(f.gate[si]) / n;

        if (grads) {
            policy_sample_grad(f.logp.row(i), batch.masks[si], a,
                               coeffs.c_ppo * s.dlp / n, c_h / n, h, dlogits.row(i));
            d_value_out.at(i, 0) = coeffs.c_v * 2.0 * verr / n;

            if (gate_mode != GateMode::forced_zero) {
                const double d_blend =
                    coeffs.c_ppo * (s.dadv / n) / batch.blend_std;
                for (int k = 0; k < kNumFactors; ++k)
                    grads->beta[k] += d_blend * g_used * w[k] * (batch.adv_factor[si][k] - mix);
                if (gate_learned) {
                    double dg = d_blend * (mix - batch.adv_scalar[si]);
                    if (gate_ent_on)
                        dg += -(coeffs.c_e / n) *
                              std::log((1.0 - f.gate[si]) / f.gate[si]);
                    d_gate_out.at(i, 0) = dg * f.gate[si] * (1.0 - f.gate[si]);
                }
            }
        }
    }

    if (cal_on) {
        const double nn = static_cast<double>(n);
        for (int k = 0; k < kNumFactors; ++k) {
            double ma = 0.0, me = 0.0;
            for (int i = 0; i < n; ++i) {
                ma += a_cur[static_cast<std::size_t>(i)][k];
                me += batch.eps[static_cast<std::size_t>(i)][k];
            }
            ma /= nn;
            me /= nn;
            double cov = 0.0, va = 0.0;
            for (int i = 0; i < n; ++i) {
                const double da = a_cur[static_cast<std::size_t>(i)][k] - ma;
                const double de = batch.eps[static_cast<std::size_t>(i)][k] - me;
                cov += da * de;
                va += da * da;
            }
            cov /= nn;
            const double sa_raw = std::sqrt(va / nn);
            const double sa = std::max(sa_raw, coeffs.delta);
            double ve = 0.0;
            for (int i = 0; i < n; ++i) {
                const double de = batch.eps[static_cast<std::size_t>(i)][k] - me;
                ve += de * de;
            }
            const double se = std::sqrt(ve / nn);
            const double denom = sa * se + coeffs.delta;
            terms.cal += (-cov / denom) / kNumFactors;
            if (grads) {
                for (int i = 0; i < n; ++i) {
                    const std::size_t si = static_cast<std::size_t>(i);
                    const double da = a_cur[si][k] - ma;
                    const double de = batch.eps[si][k] - me;
                    const double dcov = de / nn;
                    const double dsa = sa_raw > coeffs.delta ? da / (nn * sa_raw) : 0.0;
                    const double ddenom = se * dsa;
                    const double dterm =
                        -(dcov * denom - cov * ddenom) / (denom * denom) / kNumFactors;
                    // A_k = G_k - V_k, so dL/dV_k = -dL/dA_k
                    d_factor_out.at(i, k) += coeffs.c_c * (-dterm);
                }
            }
        }
    }

    terms.total = coeffs.c_ppo * terms.ppo + coeffs.c_v * terms.value - c_h * terms.entropy +
                  coeffs.c_f * terms.factor + coeffs.c_c * terms.cal -
                  coeffs.c_e * terms.gate;

    if (grads) {
        mlp_backward(params.actor, f.actor_cache, dlogits, grads->actor);
        Matrix dlat;
        mlp_backward(params.value_head, f.value_cache, d_value_out, grads->value_head, &dlat);
        if (factor_on || cal_on) {
            Matrix dlat_f;
            mlp_backward(params.factor_head, f.factor_cache, d_factor_out,
                         grads->factor_head, &dlat_f);
            add_into(dlat, dlat_f);
        }
        if (gate_learned) {
            Matrix dlat_g;
            mlp_backward(params.gate_head, f.gate_cache, d_gate_out, grads->gate_head,
                         &dlat_g);
            add_into(dlat, dlat_g);
        }
        relu_backward(f.latent, dlat);
        mlp_backward(params.trunk, f.trunk_cache, dlat, grads->trunk);
    }
    return terms;
}

double gradient_check(const PolicyParams& params, const SampleBatch& batch,
                      const TrainCoeffs& coeffs, double c_h, GateMode gate_mode,
                      bool factored_route, double fd_step) {
    PolicyParams work = params;
    PolicyGrads grads = PolicyGrads::zeros_like(work);
    const auto eval = [&](PolicyGrads* g) {
        return factored_route ? cgfa_loss_grad(work, batch, coeffs, c_h, gate_mode, g)
                              : ppo_loss_grad(work, batch, coeffs, c_h, g);
    };
    eval(&grads);
    const std::vector<double> analytic = grads.to_flat(work);
    std::vector<double> flat = policy_to_flat(work);
    double max_rel = 0.0;
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const double saved = flat[i];
        flat[i] = saved + fd_step;
        policy_from_flat(work, flat);
        const double lp = eval(nullptr).total;
        flat[i] = saved - fd_step;
        policy_from_flat(work, flat);
        const double lm = eval(nullptr).total;
        flat[i] = saved;
        policy_from_flat(work, flat);
        const double fd = (lp - lm) / (2.0 * fd_step);
        const double denom = std::max(std::abs(analytic[i]) + std::abs(fd), 1e-3);
        max_rel = std::max(max_rel, std::abs(analytic[i] - fd) / denom);
    }
    return max_rel;
}

namespace {

void check_finite(const LossTerms& terms, const char* route) {
    if (!std::isfinite(terms.total)) {
        std::ostringstream msg;
        msg << route << " produced a non-finite loss: ppo=" << terms.ppo
            << " value=" << terms.value << " entropy=" << terms.entropy
            << " factor=" << terms.factor << " cal=" << terms.cal << " gate=" << terms.gate;
        throw std::runtime_error(msg.str());
    }
}

std::vector<int> shuffled_indices(int n, Rng& rng) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    rng.shuffle(idx);
    return idx;
}

void gather_common(const RolloutBuffer& buffer, const std::vector<int>& idx, int start,
                   int count, SampleBatch& batch) {
    batch.obs = Matrix(count, buffer.obs_dim);
    batch.masks.resize(static_cast<std::size_t>(count));
    batch.actions.resize(static_cast<std::size_t>(count));
    batch.logp_old.resize(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const int t = idx[static_cast<std::size_t>(start + i)];
        std::copy(buffer.obs.row(t), buffer.obs.row(t) + buffer.obs_dim, batch.obs.row(i));
        batch.masks[static_cast<std::size_t>(i)] = buffer.masks[static_cast<std::size_t>(t)];
        batch.actions[static_cast<std::size_t>(i)] =
            buffer.actions[static_cast<std::size_t>(t)];
        batch.logp_old[static_cast<std::size_t>(i)] =
            buffer.logp[static_cast<std::size_t>(t)];
    }
}

}  // namespace

UpdateMetrics ppo_update(const RolloutBuffer& buffer, PolicyParams& params, Adam& opt,
                         const TrainCoeffs& coeffs, double anneal, Rng& rng) {
    if (buffer.size == 0) throw std::invalid_argument("ppo_update: empty buffer");
    const int T = buffer.size;
    const double lr = coeffs.lr_at(anneal);
    const double c_h = coeffs.c_h_at(anneal);

    const std::vector<double> adv_raw = gae(buffer.rewards, buffer.values, buffer.dones,
                                            buffer.bootstrap_value, coeffs.gamma,
                                            coeffs.lambda);
    std::vector<double> returns(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t)
        returns[static_cast<std::size_t>(t)] =
            adv_raw[static_cast<std::size_t>(t)] + buffer.values[static_cast<std::size_t>(t)];
    const auto [mu, sigma_raw] = mean_std(adv_raw);
    const double sigma = std::max(sigma_raw, 1e-8);
    std::vector<double> adv_norm(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t)
        adv_norm[static_cast<std::size_t>(t)] = (adv_raw[static_cast<std::size_t>(t)] - mu) / sigma;

    if (opt.m.empty()) opt = Adam(policy_param_count(params));

    UpdateMetrics metrics;
    metrics.lr = lr;
    metrics.c_h = c_h;
    PolicyGrads grads = PolicyGrads::zeros_like(params);
    long batches = 0;

    for (int epoch = 0; epoch < coeffs.epochs; ++epoch) {
        const std::vector<int> idx = shuffled_indices(T, rng);
        for (int start = 0; start < T; start += coeffs.minibatch) {
            const int count = std::min(coeffs.minibatch, T - start);
            SampleBatch batch;
            gather_common(buffer, idx, start, count, batch);
            batch.returns.resize(static_cast<std::size_t>(count));
            batch.adv.resize(static_cast<std::size_t>(count));
            for (int i = 0; i < count; ++i) {
                const int t = idx[static_cast<std::size_t>(start + i)];
                batch.returns[static_cast<std::size_t>(i)] =
                    returns[static_cast<std::size_t>(t)];
                batch.adv[static_cast<std::size_t>(i)] =
                    adv_norm[static_cast<std::size_t>(t)];
            }
            grads.zero();
            const LossTerms terms = ppo_loss_grad(params, batch, coeffs, c_h, &grads);
            check_finite(terms, "ppo_update");
            std::vector<double> flat_g = grads.to_flat(params);
            metrics.grad_norm += clip_grad_norm(flat_g, coeffs.grad_norm_max);
            std::vector<double> flat_p = policy_to_flat(params);
            opt.step(flat_p, flat_g, lr);
            policy_from_flat(params, flat_p);

            metrics.loss_ppo += terms.ppo;
            metrics.loss_value += terms.value;
            metrics.loss_entropy += terms.entropy;
            metrics.approx_kl += terms.approx_kl;
            metrics.clip_fraction += terms.clip_fraction;
            ++batches;
        }
    }
    const double nb = static_cast<double>(std::max(1L, batches));
    metrics.loss_ppo /= nb;
    metrics.loss_value /= nb;
    metrics.loss_entropy /= nb;
    metrics.approx_kl /= nb;
    metrics.clip_fraction /= nb;
    metrics.grad_norm /= nb;
    metrics.mix_weights = softmax6(params.beta);
    return metrics;
}

UpdateMetrics cgfa_update(const RolloutBuffer& buffer, PolicyParams& params, Adam& opt,
                          const TrainCoeffs& coeffs, double anneal, Rng& rng,
                          GateMode gate_mode) {
    if (buffer.size == 0) throw std::invalid_argument("cgfa_update: empty buffer");
    const int T = buffer.size;
    const double lr = coeffs.lr_at(anneal);
    const double c_h = coeffs.c_h_at(anneal);

    const std::vector<double> adv_scalar = gae(buffer.rewards, buffer.values, buffer.dones,
                                               buffer.bootstrap_value, coeffs.gamma,
                                               coeffs.lambda);
    std::vector<double> returns(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t)
        returns[static_cast<std::size_t>(t)] = adv_scalar[static_cast<std::size_t>(t)] +
                                               buffer.values[static_cast<std::size_t>(t)];
    const std::vector<FactorVec> adv_factor =
        factor_gae(buffer.factor_rewards, buffer.factor_values, buffer.dones,
                   buffer.bootstrap_factor_values, coeffs.gamma, coeffs.lambda);
    std::vector<FactorVec> returns_factor(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t)
        for (int k = 0; k < kNumFactors; ++k)
            returns_factor[static_cast<std::size_t>(t)][k] =
                adv_factor[static_cast<std::size_t>(t)][k] +
                buffer.factor_values[static_cast<std::size_t>(t)][k];

    // Rollout-level blend with collection-time gates and the current mixture
    // logits fixes the normalization constants for every minibatch.
    const std::array<double, kNumFactors> w0 = softmax6(params.beta);
    std::vector<double> a_used(static_cast<std::size_t>(T));
    if (gate_mode == GateMode::forced_zero) {
        for (int t = 0; t < T; ++t)
            a_used[static_cast<std::size_t>(t)] = adv_scalar[static_cast<std::size_t>(t)];
    } else {
        for (int t = 0; t < T; ++t) {
            const std::size_t st = static_cast<std::size_t>(t);
            const double g =
                gate_mode == GateMode::constant_half ? 0.5 : buffer.gates[st];
            a_used[st] = blend_advantage(adv_scalar[st], adv_factor[st], g, w0);
        }
    }
    const auto [mu, sigma_raw] = mean_std(a_used);
    const double sigma = std::max(sigma_raw, 1e-8);

    if (opt.m.empty()) opt = Adam(policy_param_count(params));

    UpdateMetrics metrics;
    metrics.lr = lr;
    metrics.c_h = c_h;
    PolicyGrads grads = PolicyGrads::zeros_like(params);
    long batches = 0;

    for (int epoch = 0; epoch < coeffs.epochs; ++epoch) {
        const std::vector<int> idx = shuffled_indices(T, rng);
        for (int start = 0; start < T; start += coeffs.minibatch) {
            const int count = std::min(coeffs.minibatch, T - start);
            SampleBatch batch;
            gather_common(buffer, idx, start, count, batch);
            batch.returns.resize(static_cast<std::size_t>(count));
            batch.adv_scalar.resize(static_cast<std::size_t>(count));
            batch.adv_factor.resize(static_cast<std::size_t>(count));
            batch.returns_factor.resize(static_cast<std::size_t>(count));
            batch.eps.resize(static_cast<std::size_t>(count));
            batch.blend_mean = mu;
            batch.blend_std = sigma;
            for (int i = 0; i < count; ++i) {
                const int t = idx[static_cast<std::size_t>(start + i)];
                const std::size_t st = static_cast<std::size_t>(t);
                const std::size_t si = static_cast<std::size_t>(i);
                batch.returns[si] = returns[st];
                batch.adv_scalar[si] = adv_scalar[st];
                batch.adv_factor[si] = adv_factor[st];
                batch.returns_factor[si] = returns_factor[st];
                batch.eps[si] = buffer.eps[st];
            }
            grads.zero();
            const LossTerms terms =
                cgfa_loss_grad(params, batch, coeffs, c_h, gate_mode, &grads);
            check_finite(terms, "cgfa_update");
            std::vector<double> flat_g = grads.to_flat(params);
            metrics.grad_norm += clip_grad_norm(flat_g, coeffs.grad_norm_max);
            std::vector<double> flat_p = policy_to_flat(params);
            opt.step(flat_p, flat_g, lr);
            policy_from_flat(params, flat_p);

            metrics.loss_ppo += terms.ppo;
            metrics.loss_value += terms.value;
            metrics.loss_entropy += terms.entropy;
            metrics.loss_factor += terms.factor;
            metrics.loss_cal += terms.cal;
            metrics.loss_gate += terms.gate;
            metrics.approx_kl += terms.approx_kl;
            metrics.clip_fraction += terms.clip_fraction;
            ++batches;
        }
    }
    const double nb = static_cast<double>(std::max(1L, batches));
    metrics.loss_ppo /= nb;
    metrics.loss_value /= nb;
    metrics.loss_entropy /= nb;
    metrics.loss_factor /= nb;
    metrics.loss_cal /= nb;
    metrics.loss_gate /= nb;
    metrics.approx_kl /= nb;
    metrics.clip_fraction /= nb;
    metrics.grad_norm /= nb;

    // Rollout-level diagnostics per the training-loop contract.
    const std::array<double, kNumFactors> w1 = softmax6(params.beta);
    metrics.mix_weights = w1;
    double share_denom = 0.0;
    FactorVec share_num{};
    for (int t = 0; t < T; ++t) {
        const std::size_t st = static_cast<std::size_t>(t);
        for (int k = 0; k < kNumFactors; ++k) {
            const double c = std::abs(w1[k] * adv_factor[st][k]);
            share_num[k] += c;
            share_denom += c;
        }
    }
    std::vector<double> ak(static_cast<std::size_t>(T)), ek(static_cast<std::size_t>(T));
    for (int k = 0; k < kNumFactors; ++k) {
        metrics.credit_share[k] = share_denom > 0.0 ? share_num[k] / share_denom : 0.0;
        for (int t = 0; t < T; ++t) {
            ak[static_cast<std::size_t>(t)] = adv_factor[static_cast<std::size_t>(t)][k];
            ek[static_cast<std::size_t>(t)] = buffer.eps[static_cast<std::size_t>(t)][k];
        }
        metrics.pearson[k] = pearson(ak, ek);
        const std::optional<double> agree = sign_agreement(ak, ek);
        metrics.sign_agree[k] = agree ? *agree : -1.0;
    }
    double gmin = 1.0, gmax = 0.0, gsum = 0.0;
    for (double g : buffer.gates) {
        gmin = std::min(gmin, g);
        gmax = std::max(gmax, g);
        gsum += g;
    }
    metrics.gate_mean = gsum / T;
    metrics.gate_min = gmin;
    metrics.gate_max = gmax;
    return metrics;
}

Cwm::Cwm(const CwmConfig& config, std::uint64_t seed) : config_(config) {
    if (config.replay_capacity == 0 || config.minibatch <= 0 || config.emb_dim <= 0)
        throw std::invalid_argument("invalid world-model configuration");
    Rng rng(seed);
    embedding_ = Matrix(kNumActions, config.emb_dim);
    for (double& x : embedding_.a) x = 0.1 * rng.next_gaussian();
    net_ = Mlp::make({kNumVars + config.emb_dim, config.hidden, kNumVars + 1}, 0.01, rng);
    opt_ = Adam(embedding_.a.size() + mlp_param_count(net_));
    replay_.reserve(std::min<std::size_t>(config.replay_capacity, 4096));
}

void Cwm::observe(const CwmTransition& t) {
    if (replay_.size() < config_.replay_capacity) {
        replay_.push_back(t);
    } else {
        replay_[replay_next_] = t;
    }
    replay_next_ = (replay_next_ + 1) % config_.replay_capacity;
}

namespace {
double var_scale(Var v) {
    const VarRange r = var_range(v);
    return std::max(std::abs(r.lo), std::abs(r.hi));
}
}  // namespace

void Cwm::forward_row(const CausalVars& cv, int action, std::vector<double>& input,
                      Matrix& out, MlpCache& cache) const {
    input.assign(static_cast<std::size_t>(kNumVars + config_.emb_dim), 0.0);
    for (int i = 0; i < kNumVars; ++i)
        input[static_cast<std::size_t>(i)] =
            cv.v[static_cast<std::size_t>(i)] / var_scale(static_cast<Var>(i));
    const double* emb = embedding_.row(action);
    for (int e = 0; e < config_.emb_dim; ++e)
        input[static_cast<std::size_t>(kNumVars + e)] = emb[e];
    Matrix x(1, kNumVars + config_.emb_dim);
    std::copy(input.begin(), input.end(), x.row(0));
    out = mlp_forward(net_, x, cache);
}

std::array<double, kNumVars> Cwm::predict_delta(const CausalVars& cv, int action) const {
    std::vector<double> input;
    Matrix out;
    MlpCache cache;
    forward_row(cv, action, input, out, cache);
    std::array<double, kNumVars> delta{};
    for (int i = 0; i < kNumVars; ++i) delta[static_cast<std::size_t>(i)] = out.at(0, i);
    return delta;
}

double Cwm::predict_win(const CausalVars& cv, int action) const {
    std::vector<double> input;
    Matrix out;
    MlpCache cache;
    forward_row(cv, action, input, out, cache);
    return sigmoid(out.at(0, kNumVars));
}

double Cwm::score(const CausalVars& cv, int action, const WinWeights& w) const {
    const std::array<double, kNumVars> delta = predict_delta(cv, action);
    double s = 0.0;
    for (int k = 0; k < kNumFactors; ++k) {
        const Var v = factor_var(static_cast<Factor>(k));
        s += (w.w[k] / std::max(w.stdev[k], 1e-6)) * delta[static_cast<std::size_t>(v)];
    }
    return s;
}

void Cwm::update(Rng& rng) {
    const int mb = config_.minibatch;
    if (replay_.size() < static_cast<std::size_t>(mb)) return;
    const int in_dim = kNumVars + config_.emb_dim;
    MlpGrads net_grads = MlpGrads::zeros_like(net_);
    Matrix emb_grads(kNumActions, config_.emb_dim);

    for (int step = 0; step < config_.steps_per_update; ++step) {
        std::vector<std::size_t> pick(static_cast<std::size_t>(mb));
        for (auto& p : pick) p = rng.next_below(replay_.size());
        Matrix x(mb, in_dim);
        for (int i = 0; i < mb; ++i) {
            const CwmTransition& tr = replay_[pick[static_cast<std::size_t>(i)]];
            double* row = x.row(i);
            for (int d = 0; d < kNumVars; ++d)
                row[d] = tr.cv.v[static_cast<std::size_t>(d)] /
                         var_scale(static_cast<Var>(d));
            const double* emb = embedding_.row(tr.action);
            for (int e = 0; e < config_.emb_dim; ++e) row[kNumVars + e] = emb[e];
        }
        MlpCache cache;
        const Matrix& out = mlp_forward(net_, x, cache);

        int n_pos = 0, n_out = 0;
        for (int i = 0; i < mb; ++i) {
            const CwmTransition& tr = replay_[pick[static_cast<std::size_t>(i)]];
            if (tr.has_outcome) {
                ++n_out;
                if (tr.won) ++n_pos;
            }
        }
        const int n_neg = n_out - n_pos;
        const double w_pos = n_out > 0 ? n_out / (2.0 * std::max(1, n_pos)) : 0.0;
        const double w_neg = n_out > 0 ? n_out / (2.0 * std::max(1, n_neg)) : 0.0;

        Matrix dout(mb, kNumVars + 1);
        double aux = 0.0, wp = 0.0;
        for (int i = 0; i < mb; ++i) {
            const CwmTransition& tr = replay_[pick[static_cast<std::size_t>(i)]];
            for (int d = 0; d < kNumVars; ++d) {
                const double target = tr.cv_next.v[static_cast<std::size_t>(d)] -
                                      tr.cv.v[static_cast<std::size_t>(d)];
                const double err = out.at(i, d) - target;
                aux += err * err / (mb * kNumVars);
                dout.at(i, d) = 2.0 * err / (mb * kNumVars);
            }
            if (tr.has_outcome && n_out > 0) {
                const double z = out.at(i, kNumVars);
                const double p = sigmoid(z);
                const double y = tr.won ? 1.0 : 0.0;
                const double wgt = tr.won ? w_pos : w_neg;
                const double pc = std::min(1.0 - 1e-12, std::max(1e-12, p));
                wp += -wgt * (y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc)) / n_out;
                dout.at(i, kNumVars) = 0.5 * wgt * (p - y) / n_out;
            }
        }
        last_aux_loss_ = aux;
        last_win_loss_ = wp;

        net_grads.zero();
        emb_grads.zero();
        Matrix dx;
        mlp_backward(net_, cache, dout, net_grads, &dx);
        for (int i = 0; i < mb; ++i) {
            const CwmTransition& tr = replay_[pick[static_cast<std::size_t>(i)]];
            double* erow = emb_grads.row(tr.action);
            const double* drow = dx.row(i);
            for (int e = 0; e < config_.emb_dim; ++e) erow[e] += drow[kNumVars + e];
        }

        std::vector<double> flat_p(embedding_.a.size() + mlp_param_count(net_));
        std::copy(embedding_.a.begin(), embedding_.a.end(), flat_p.begin());
        mlp_copy_params(net_, flat_p.data() + embedding_.a.size());
        std::vector<double> flat_g(flat_p.size());
        std::copy(emb_grads.a.begin(), emb_grads.a.end(), flat_g.begin());
        mlp_grads_copy(net_grads, flat_g.data() + embedding_.a.size());
        opt_.step(flat_p, flat_g, config_.lr);
        std::copy(flat_p.begin(), flat_p.begin() + static_cast<long>(embedding_.a.size()),
                  embedding_.a.begin());
        mlp_load_params(net_, flat_p.data() + embedding_.a.size());
    }
}

int cwm_act(const double* logp_row, const ActionMask& mask, const CausalVars& cv,
            const Cwm& cwm, const WinWeights& w, double lambda, double eps_explore,
            Rng& rng) {
    const std::vector<int> legal = mask.legal();
    if (legal.empty()) throw std::invalid_argument("cwm_act: empty mask");
    if (eps_explore > 0.0 && rng.next_double() < eps_explore)
        return legal[rng.next_below(legal.size())];
    int best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int a : legal) {
        double s = logp_row[a];
        if (lambda != 0.0) s += lambda * cwm.score(cv, a, w);
        if (s > best_score) {
            best_score = s;
            best = a;
        }
    }
    return best;
}

namespace {

void write_bytes(std::ofstream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void write_u64(std::ofstream& out, std::uint64_t v) { write_bytes(out, &v, sizeof v); }

void write_doubles(std::ofstream& out, const std::vector<double>& v) {
    write_u64(out, v.size());
    write_bytes(out, v.data(), v.size() * sizeof(double));
}

void read_bytes(std::ifstream& in, void* p, std::size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in) throw std::runtime_error("truncated checkpoint file");
}

std::uint64_t read_u64(std::ifstream& in) {
    std::uint64_t v = 0;
    read_bytes(in, &v, sizeof v);
    return v;
}

std::vector<double> read_doubles(std::ifstream& in) {
    const std::uint64_t n = read_u64(in);
    std::vector<double> v(n);
    read_bytes(in, v.data(), n * sizeof(double));
    return v;
}

constexpr char kCheckpointMagic[8] = {'M', 'T', 'G', 'C', 'K', 'P', 'T', '1'};

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path);
    write_bytes(out, kCheckpointMagic, sizeof kCheckpointMagic);
    write_u64(out, ck.meta_json.size());
    write_bytes(out, ck.meta_json.data(), ck.meta_json.size());
    write_u64(out, static_cast<std::uint64_t>(ck.config.obs_dim));
    write_u64(out, static_cast<std::uint64_t>(ck.config.num_actions));
    write_u64(out, static_cast<std::uint64_t>(ck.config.gate_hidden));
    write_u64(out, ck.config.hidden.size());
    for (int h : ck.config.hidden) write_u64(out, static_cast<std::uint64_t>(h));
    write_doubles(out, ck.params);
    write_doubles(out, ck.adam_m);
    write_doubles(out, ck.adam_v);
    write_u64(out, static_cast<std::uint64_t>(ck.adam_steps));
    std::vector<double> w(ck.weights.w.begin(), ck.weights.w.end());
    w.push_back(ck.weights.intercept);
    w.insert(w.end(), ck.weights.mean.begin(), ck.weights.mean.end());
    w.insert(w.end(), ck.weights.stdev.begin(), ck.weights.stdev.end());
    write_doubles(out, w);
    if (!out) throw std::runtime_error("failed writing checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path);
    char magic[8];
    read_bytes(in, magic, sizeof magic);
    if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    Checkpoint ck;
    const std::uint64_t meta_len = read_u64(in);
    ck.meta_json.resize(meta_len);
    if (meta_len > 0) read_bytes(in, ck.meta_json.data(), meta_len);
    ck.config.obs_dim = static_cast<int>(read_u64(in));
    ck.config.num_actions = static_cast<int>(read_u64(in));
    ck.config.gate_hidden = static_cast<int>(read_u64(in));
    const std::uint64_t nh = read_u64(in);
    ck.config.hidden.clear();
    for (std::uint64_t i = 0; i < nh; ++i)
        ck.config.hidden.push_back(static_cast<int>(read_u64(in)));
    ck.params = read_doubles(in);
    ck.adam_m = read_doubles(in);
    ck.adam_v = read_doubles(in);
    ck.adam_steps = static_cast<std::int64_t>(read_u64(in));
    const std::vector<double> w = read_doubles(in);
    if (w.size() != kNumFactors * 3 + 1)
        throw std::runtime_error("checkpoint weight block malformed");
    std::copy(w.begin(), w.begin() + kNumFactors, ck.weights.w.begin());
    ck.weights.intercept = w[kNumFactors];
    std::copy(w.begin() + kNumFactors + 1, w.begin() + 2 * kNumFactors + 1,
              ck.weights.mean.begin());
    std::copy(w.begin() + 2 * kNumFactors + 1, w.end(), ck.weights.stdev.begin());
    return ck;
}

Checkpoint make_checkpoint(const PolicyParams& params, const Adam& opt,
                           const WinWeights& weights, const std::string& meta_json) {
    Checkpoint ck;
    ck.meta_json = meta_json;
    ck.config = params.config;
    ck.params = policy_to_flat(params);
    ck.adam_m = opt.m;
    ck.adam_v = opt.v;
    ck.adam_steps = opt.step_count;
    ck.weights = weights;
    return ck;
}

void restore_checkpoint(const Checkpoint& ck, PolicyParams& params, Adam& opt,
                        WinWeights& weights) {
    Rng scratch(0);
    params = PolicyParams::make(ck.config, scratch);
    policy_from_flat(params, ck.params);
    opt = Adam(ck.params.size());
    if (!ck.adam_m.empty()) {
        if (ck.adam_m.size() != ck.params.size() || ck.adam_v.size() != ck.params.size())
            throw std::runtime_error("checkpoint optimizer state size mismatch");
        opt.m = ck.adam_m;
        opt.v = ck.adam_v;
        opt.step_count = ck.adam_steps;
    }
    weights = ck.weights;
}

}  // namespace mtg
