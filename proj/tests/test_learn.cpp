#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <mtg/learn.hpp>
#include <mtg/rng.hpp>

using namespace mtg;

namespace {

PolicyConfig tiny_config() {
    PolicyConfig c;
    c.obs_dim = 12;
    c.num_actions = kNumActions;
    c.hidden = {16, 8};
    c.gate_hidden = 4;
    return c;
}

std::vector<double> random_obs(int dim, Rng& rng) {
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (double& x : v) x = rng.next_gaussian();
    return v;
}

ActionMask random_mask(Rng& rng, int bits = 6) {
    ActionMask m;
    m.set(0);
    for (int i = 0; i < bits; ++i)
        m.set(static_cast<int>(rng.next_below(kNumActions)));
    return m;
}

/// A synthetic but internally consistent rollout: observations are random,
/// masks are sparse, logp/value/gate come from the policy itself.
RolloutBuffer synthetic_rollout(const PolicyParams& params, int steps, Rng& rng) {
    RolloutBuffer buffer(params.config.obs_dim, steps);
    for (int t = 0; t < steps; ++t) {
        const std::vector<double> obs = random_obs(params.config.obs_dim, rng);
        const ActionMask mask = random_mask(rng);
        const ActResult act = policy_act(params, obs, mask, rng);
        FactorVec fr{}, eps{};
        for (int k = 0; k < kNumFactors; ++k) {
            fr[k] = 0.3 * rng.next_gaussian();
            eps[k] = fr[k] + 0.1 * rng.next_gaussian();  // informative predictions
        }
        const bool done = (t % 37) == 36;
        const double reward = 0.05 * rng.next_gaussian() + (done ? 1.0 : 0.0);
        buffer.add(obs, mask, act.action, act.logp, reward, fr, eps, act.value,
                   act.factor_values, act.gate, done);
    }
    buffer.bootstrap_value = 0.25;
    for (int k = 0; k < kNumFactors; ++k) buffer.bootstrap_factor_values[k] = 0.1;
    return buffer;
}

SampleBatch synthetic_batch(const PolicyParams& params, int n, Rng& rng) {
    SampleBatch batch;
    batch.obs = Matrix(n, params.config.obs_dim);
    for (double& x : batch.obs.a) x = rng.next_gaussian();
    batch.masks.resize(static_cast<std::size_t>(n));
    for (auto& m : batch.masks) m = random_mask(rng);
    PolicyForward f = policy_forward(params, batch.obs, batch.masks);
    batch.actions.resize(static_cast<std::size_t>(n));
    batch.logp_old.resize(static_cast<std::size_t>(n));
    batch.returns.resize(static_cast<std::size_t>(n));
    batch.adv.resize(static_cast<std::size_t>(n));
    batch.adv_scalar.resize(static_cast<std::size_t>(n));
    batch.adv_factor.resize(static_cast<std::size_t>(n));
    batch.returns_factor.resize(static_cast<std::size_t>(n));
    batch.eps.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const std::size_t si = static_cast<std::size_t>(i);
        batch.actions[si] = sample_masked(f.logp.row(i), batch.masks[si], rng);
        // Slightly stale log-probs so the PPO ratios are not exactly one.
        batch.logp_old[si] = f.logp.at(i, batch.actions[si]) + 0.05 * rng.next_gaussian();
        batch.returns[si] = rng.next_gaussian();
        batch.adv[si] = rng.next_gaussian();
        batch.adv_scalar[si] = rng.next_gaussian();
        for (int k = 0; k < kNumFactors; ++k) {
            batch.adv_factor[si][k] = rng.next_gaussian();
            batch.returns_factor[si][k] = rng.next_gaussian();
            batch.eps[si][k] = rng.next_gaussian();
        }
    }
    batch.blend_mean = 0.1;
    batch.blend_std = 1.3;
    return batch;
}

}  // namespace

TEST_CASE("gae matches hand-computed values on a three-step episode") {
    const std::vector<double> rewards{1.0, 0.0, 2.0};
    const std::vector<double> values{0.5, 1.0, 1.5};
    const double gamma = 0.9, lambda = 0.8;

    // Episode ends at the last step: no bootstrap leaks in.
    std::vector<double> adv =
        gae(rewards, values, {0, 0, 1}, 99.0, gamma, lambda);
    const double d2 = 2.0 - 1.5;
    const double d1 = 0.0 + gamma * 1.5 - 1.0;
    const double d0 = 1.0 + gamma * 1.0 - 0.5;
    CHECK(adv[2] == doctest::Approx(d2).epsilon(1e-12));
    CHECK(adv[1] == doctest::Approx(d1 + gamma * lambda * d2).epsilon(1e-12));
    CHECK(adv[0] ==
          doctest::Approx(d0 + gamma * lambda * (d1 + gamma * lambda * d2)).epsilon(1e-12));

    // Truncated rollout: the bootstrap value extends the last step.
    adv = gae(rewards, values, {0, 0, 0}, 2.0, gamma, lambda);
    const double b2 = 2.0 + gamma * 2.0 - 1.5;
    CHECK(adv[2] == doctest::Approx(b2).epsilon(1e-12));
    CHECK(adv[1] == doctest::Approx(d1 + gamma * lambda * b2).epsilon(1e-12));

    // A mid-buffer terminal cuts the credit flow.
    adv = gae({1.0, 1.0}, {0.0, 0.0}, {1, 0}, 5.0, 1.0, 1.0);
    CHECK(adv[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(adv[1] == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("factor gae is scalar gae applied per channel") {
    Rng rng(8);
    const int T = 40;
    std::vector<FactorVec> fr(T), fv(T);
    std::vector<std::uint8_t> dones(T, 0);
    dones[17] = 1;
    FactorVec bootstrap{};
    for (int t = 0; t < T; ++t)
        for (int k = 0; k < kNumFactors; ++k) {
            fr[t][k] = rng.next_gaussian();
            fv[t][k] = rng.next_gaussian();
        }
    for (int k = 0; k < kNumFactors; ++k) bootstrap[k] = rng.next_gaussian();
    const std::vector<FactorVec> fa = factor_gae(fr, fv, dones, bootstrap, 0.99, 0.9);
    for (int k = 0; k < kNumFactors; ++k) {
        std::vector<double> r(T), v(T);
        for (int t = 0; t < T; ++t) {
            r[t] = fr[t][k];
            v[t] = fv[t][k];
        }
        const std::vector<double> a = gae(r, v, dones, bootstrap[k], 0.99, 0.9);
        for (int t = 0; t < T; ++t)
            CHECK(fa[t][k] == doctest::Approx(a[t]).epsilon(1e-12));
    }
}

TEST_CASE("advantage blending interpolates between the two routes") {
    const FactorVec a_k{1, -2, 3, 0, 1, -1};
    const std::array<double, kNumFactors> w{0.5, 0.1, 0.1, 0.1, 0.1, 0.1};
    double mix = 0;
    for (int k = 0; k < kNumFactors; ++k) mix += w[k] * a_k[k];
    CHECK(blend_advantage(2.0, a_k, 0.0, w) == doctest::Approx(2.0));
    CHECK(blend_advantage(2.0, a_k, 1.0, w) == doctest::Approx(mix));
    CHECK(blend_advantage(2.0, a_k, 0.25, w) ==
          doctest::Approx(0.75 * 2.0 + 0.25 * mix));
}

TEST_CASE("calibration loss hits -1 on perfectly correlated channels") {
    Rng rng(4);
    std::vector<FactorVec> a(200), e(200);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (int k = 0; k < kNumFactors; ++k) {
            a[i][k] = rng.next_gaussian();
            e[i][k] = 2.0 * a[i][k] + 3.0;  // affine image: correlation one
        }
    CHECK(calibration_loss(a, e, 1e-6) == doctest::Approx(-1.0).epsilon(1e-3));
    // Anti-correlated channels push the loss to +1.
    for (std::size_t i = 0; i < a.size(); ++i)
        for (int k = 0; k < kNumFactors; ++k) e[i][k] = -a[i][k];
    CHECK(calibration_loss(a, e, 1e-6) == doctest::Approx(1.0).epsilon(1e-3));
    // Constant channels contribute nothing instead of dividing by zero.
    for (std::size_t i = 0; i < a.size(); ++i)
        for (int k = 0; k < kNumFactors; ++k) e[i][k] = 7.0;
    CHECK(std::abs(calibration_loss(a, e, 1e-6)) < 1e-9);
    CHECK_THROWS(calibration_loss({}, {}, 1e-6));
}

TEST_CASE("softmax6 and beta_from_weights behave") {
    const std::array<double, kNumFactors> beta{0, 0, 0, 0, 0, 0};
    const std::array<double, kNumFactors> w = softmax6(beta);
    for (int k = 0; k < kNumFactors; ++k)
        CHECK(w[k] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    double total = 0;
    const std::array<double, kNumFactors> w2 = softmax6({1, 2, 3, -1, 0, 0.5});
    for (int k = 0; k < kNumFactors; ++k) total += w2[k];
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w2[2] > w2[1]);
    CHECK(w2[1] > w2[0]);

    const std::array<double, kNumFactors> raw{0.4, 0.2, -0.3, 0.1, 0.0, 0.05};
    const std::array<double, kNumFactors> beta2 = beta_from_weights(raw);
    const std::array<double, kNumFactors> back = softmax6(beta2);
    CHECK(back[0] > back[1]);
    CHECK(back[1] > back[3]);
    CHECK(back[3] > back[5]);
    // Floored entries tie at the bottom instead of going negative.
    CHECK(back[2] == doctest::Approx(back[4]).epsilon(1e-9));
    CHECK(back[2] > 0.0);
}

TEST_CASE("policy parameters make, flatten and restore consistently") {
    Rng rng(31);
    PolicyParams params = PolicyParams::make(tiny_config(), rng);
    const std::size_t n = policy_param_count(params);
    const std::vector<double> flat = policy_to_flat(params);
    REQUIRE(flat.size() == n);
    PolicyParams other = PolicyParams::make(tiny_config(), rng);
    policy_from_flat(other, flat);
    CHECK(policy_to_flat(other) == flat);
    // Fresh gate heads start neutral: g = 0.5 everywhere.
    Matrix obs(3, params.config.obs_dim);
    Rng rng2(9);
    for (double& x : obs.a) x = rng2.next_gaussian();
    std::vector<ActionMask> masks(3);
    for (auto& m : masks) m = random_mask(rng2);
    const PolicyForward f = policy_forward(params, obs, masks);
    for (const double g : f.gate) CHECK(g == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("policy_act samples legal actions and argmax is deterministic") {
    Rng rng(17);
    PolicyParams params = PolicyParams::make(tiny_config(), rng);
    Rng rng2(3);
    for (int i = 0; i < 50; ++i) {
        const std::vector<double> obs = random_obs(params.config.obs_dim, rng2);
        const ActionMask mask = random_mask(rng2);
        const ActResult r = policy_act(params, obs, mask, rng2);
        CHECK(mask.test(r.action));
        CHECK(std::isfinite(r.logp));
        CHECK(r.logp <= 0.0);
        const int a1 = policy_act_argmax(params, obs, mask);
        const int a2 = policy_act_argmax(params, obs, mask);
        CHECK(a1 == a2);
        CHECK(mask.test(a1));
    }
}

TEST_CASE("analytic gradients match finite differences on every route") {
    Rng rng(23);
    PolicyParams params = PolicyParams::make(tiny_config(), rng);
    const SampleBatch batch = synthetic_batch(params, 12, rng);
    TrainCoeffs coeffs;
    coeffs.minibatch = 12;
    const double c_h = 0.02;
    CHECK(gradient_check(params, batch, coeffs, c_h, GateMode::learned, false) < 1e-4);
    CHECK(gradient_check(params, batch, coeffs, c_h, GateMode::learned, true) < 1e-4);
    CHECK(gradient_check(params, batch, coeffs, c_h, GateMode::forced_zero, true) < 1e-4);
    CHECK(gradient_check(params, batch, coeffs, c_h, GateMode::constant_half, true) < 1e-4);
}

TEST_CASE("ppo and cgfa updates are reproducible bit for bit") {
    Rng rng(41);
    PolicyParams params = PolicyParams::make(tiny_config(), rng);
    Rng rollout_rng(7);
    const RolloutBuffer buffer = synthetic_rollout(params, 96, rollout_rng);
    TrainCoeffs coeffs;
    coeffs.minibatch = 32;
    coeffs.epochs = 2;

    auto run_ppo = [&]() {
        PolicyParams p = params;
        Adam opt(policy_param_count(p));
        Rng r(55);
        ppo_update(buffer, p, opt, coeffs, 0.0, r);
        return policy_to_flat(p);
    };
    CHECK(run_ppo() == run_ppo());

    auto run_cgfa = [&](GateMode mode) {
        PolicyParams p = params;
        Adam opt(policy_param_count(p));
        Rng r(56);
        cgfa_update(buffer, p, opt, coeffs, 0.0, r, mode);
        return policy_to_flat(p);
    };
    CHECK(run_cgfa(GateMode::learned) == run_cgfa(GateMode::learned));
    // The three gate modes genuinely change the update.
    CHECK(run_cgfa(GateMode::learned) != run_cgfa(GateMode::forced_zero));
    CHECK(run_cgfa(GateMode::learned) != run_cgfa(GateMode::constant_half));
}

TEST_CASE("updates move parameters and report sane metrics") {
    Rng rng(61);
    PolicyParams params = PolicyParams::make(tiny_config(), rng);
    const std::vector<double> before = policy_to_flat(params);
    Rng rollout_rng(13);
    RolloutBuffer buffer = synthetic_rollout(params, 128, rollout_rng);
    TrainCoeffs coeffs;
    coeffs.minibatch = 64;
    coeffs.epochs = 3;
    Adam opt(policy_param_count(params));
    Rng update_rng(99);
    const UpdateMetrics m = cgfa_update(buffer, params, opt, coeffs, 0.5, update_rng);
    CHECK(policy_to_flat(params) != before);
    CHECK(std::isfinite(m.loss_ppo));
    CHECK(std::isfinite(m.loss_value));
    // Reported as the mean policy entropy, so positive and at most log(A).
    CHECK(m.loss_entropy >= 0.0);
    CHECK(m.loss_entropy <= std::log(static_cast<double>(kNumActions)) + 1e-9);
    CHECK(m.lr == doctest::Approx(coeffs.lr_at(0.5)));
    CHECK(m.c_h == doctest::Approx(coeffs.c_h_at(0.5)));
    CHECK(m.gate_min >= 0.0);
    CHECK(m.gate_max <= 1.0);
    CHECK(m.gate_min <= m.gate_mean);
    CHECK(m.gate_mean <= m.gate_max);
    double mix_total = 0;
    for (int k = 0; k < kNumFactors; ++k) {
        CHECK(m.mix_weights[k] > 0.0);
        mix_total += m.mix_weights[k];
        CHECK(m.pearson[k] >= -1.0 - 1e-9);
        CHECK(m.pearson[k] <= 1.0 + 1e-9);
        CHECK(m.credit_share[k] >= 0.0);
    }
    CHECK(mix_total == doctest::Approx(1.0).epsilon(1e-9));
    // The synthetic eps tracks the factor rewards, so correlations skew positive.
    double mean_pearson = 0;
    for (int k = 0; k < kNumFactors; ++k) mean_pearson += m.pearson[k] / kNumFactors;
    CHECK(mean_pearson > 0.0);
}

TEST_CASE("checkpoints round trip through disk exactly") {
    Rng rng(71);
    PolicyParams params = PolicyParams::make(tiny_config(), rng);
    Adam opt(policy_param_count(params));
    // Take one update so the optimizer state is nontrivial.
    Rng rollout_rng(3);
    RolloutBuffer buffer = synthetic_rollout(params, 64, rollout_rng);
    TrainCoeffs coeffs;
    coeffs.minibatch = 64;
    coeffs.epochs = 1;
    Rng update_rng(5);
    ppo_update(buffer, params, opt, coeffs, 0.0, update_rng);

    WinWeights w;
    w.w = {0.3, -0.1, 0.2, 0.0, 0.05, 0.15};
    w.intercept = -0.4;
    w.mean = {1, 2, 3, 4, 5, 6};
    w.stdev = {1, 2, 1, 2, 1, 2};
    const Checkpoint ck = make_checkpoint(params, opt, w, "{\"run\":\"unit\"}");

    const std::string path =
        (std::filesystem::temp_directory_path() / "ck_roundtrip.bin").string();
    save_checkpoint(path, ck);
    const Checkpoint back = load_checkpoint(path);
    std::remove(path.c_str());

    CHECK(back.meta_json == ck.meta_json);
    CHECK(back.config == ck.config);
    CHECK(back.params == ck.params);
    CHECK(back.adam_m == ck.adam_m);
    CHECK(back.adam_v == ck.adam_v);
    CHECK(back.adam_steps == ck.adam_steps);
    CHECK(back.weights.w == w.w);
    CHECK(back.weights.intercept == w.intercept);
    CHECK(back.weights.mean == w.mean);
    CHECK(back.weights.stdev == w.stdev);

    PolicyParams restored = PolicyParams::make(tiny_config(), rng);
    Adam opt2;
    WinWeights w2;
    restore_checkpoint(back, restored, opt2, w2);
    CHECK(policy_to_flat(restored) == policy_to_flat(params));
    CHECK(opt2.m == opt.m);
    CHECK(opt2.v == opt.v);
    CHECK(opt2.step_count == opt.step_count);
}

TEST_CASE("corrupt checkpoint files fail loudly") {
    const std::string path =
        (std::filesystem::temp_directory_path() / "ck_corrupt.bin").string();
    {
        std::FILE* fp = std::fopen(path.c_str(), "wb");
        REQUIRE(fp);
        std::fputs("not a checkpoint", fp);
        std::fclose(fp);
    }
    CHECK_THROWS(load_checkpoint(path));
    std::remove(path.c_str());
    CHECK_THROWS(load_checkpoint("/nonexistent/dir/ck.bin"));
}

TEST_CASE("the causal world model learns planted action effects") {
    CwmConfig config;
    config.emb_dim = 8;
    config.hidden = 32;
    config.steps_per_update = 8;
    config.minibatch = 64;
    Cwm cwm(config, 2024);
    Rng rng(12);
    // Action 3 raises card advantage by one and wins; action 4 lowers it and
    // loses. Everything else about the state is noise.
    auto make_cv = [&]() {
        CausalVars cv;
        cv[Var::card_adv] = 4.0 * (rng.next_double() - 0.5);
        cv[Var::life_buffer] = 8.0 * (rng.next_double() - 0.5);
        return cv;
    };
    for (int i = 0; i < 600; ++i) {
        const int action = (i % 2 == 0) ? 3 : 4;
        CwmTransition t;
        t.cv = make_cv();
        t.action = action;
        t.cv_next = t.cv;
        t.cv_next[Var::card_adv] += (action == 3) ? 1.0 : -1.0;
        t.has_outcome = true;
        t.won = action == 3;
        cwm.observe(t);
    }
    CHECK(cwm.replay_size() == 600);
    for (int i = 0; i < 30; ++i) cwm.update(rng);
    const CausalVars probe = make_cv();
    const auto d3 = cwm.predict_delta(probe, 3);
    const auto d4 = cwm.predict_delta(probe, 4);
    CHECK(d3[static_cast<int>(Var::card_adv)] > 0.5);
    CHECK(d4[static_cast<int>(Var::card_adv)] < -0.5);
    CHECK(cwm.predict_win(probe, 3) > 0.8);
    CHECK(cwm.predict_win(probe, 4) < 0.2);
    // The projection score prefers the advantage-raising action.
    WinWeights w;
    w.w = {0.5, 0.1, 0.1, 0.1, 0.1, 0.1};
    CHECK(cwm.score(probe, 3, w) > cwm.score(probe, 4, w));
}

TEST_CASE("cwm_act trades off policy log-probs against the model score") {
    CwmConfig config;
    config.emb_dim = 4;
    config.hidden = 16;
    Cwm cwm(config, 1);  // untrained: scores are near zero
    WinWeights w;
    ActionMask mask;
    mask.set(2);
    mask.set(9);
    std::vector<double> logp(kNumActions, -std::numeric_limits<double>::infinity());
    logp[2] = std::log(0.9);
    logp[9] = std::log(0.1);
    CausalVars cv;
    Rng rng(6);
    // Zero exploration, zero lambda: pure argmax of the policy.
    CHECK(cwm_act(logp.data(), mask, cv, cwm, w, 0.0, 0.0, rng) == 2);
    // Full exploration: uniform over legal actions, still masked.
    std::set<int> seen;
    for (int i = 0; i < 100; ++i)
        seen.insert(cwm_act(logp.data(), mask, cv, cwm, w, 0.0, 1.0, rng));
    CHECK(seen == std::set<int>{2, 9});
}

TEST_CASE("rollout buffer enforces its capacity and clears clean") {
    RolloutBuffer buffer(4, 3);
    CHECK(!buffer.full());
    std::vector<double> obs{1, 2, 3, 4};
    ActionMask m;
    m.set(0);
    for (int i = 0; i < 3; ++i)
        buffer.add(obs, m, 0, -0.1, 0.0, FactorVec{}, FactorVec{}, 0.0, FactorVec{}, 0.5,
                   false);
    CHECK(buffer.full());
    CHECK(buffer.size == 3);
    CHECK_THROWS(buffer.add(obs, m, 0, -0.1, 0.0, FactorVec{}, FactorVec{}, 0.0,
                            FactorVec{}, 0.5, false));
    buffer.clear();
    CHECK(buffer.size == 0);
    CHECK(!buffer.full());
}
