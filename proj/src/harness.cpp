#include "mtg/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>
#include <openssl/opensslv.h>
#include <sys/utsname.h>
#include <unistd.h>

#include <json.hpp>

namespace mtg {

using nlohmann::json;

namespace {

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

ArenaContext::ArenaContext(const std::string& dir)
    : catalog(Catalog::load_file(dir + "/cards.json")),
      engine(catalog),
      decks(DeckList::load_file(dir + "/decks.json", catalog)),
      scm(engine, read_text_file(dir + "/interventions.json")),
      observer(engine) {}

std::unique_ptr<ArenaContext> ArenaContext::load(const std::string& dir) {
    return std::unique_ptr<ArenaContext>(new ArenaContext(dir));
}

const char* policy_kind_name(PolicyKind k) {
    switch (k) {
        case PolicyKind::random_policy: return "random";
        case PolicyKind::heuristic: return "heuristic";
        case PolicyKind::learned: return "learned";
        case PolicyKind::cwm_augmented: return "cwm";
    }
    throw std::invalid_argument("unknown policy kind");
}

PolicyKind policy_kind_from_name(const std::string& name) {
    if (name == "random") return PolicyKind::random_policy;
    if (name == "heuristic") return PolicyKind::heuristic;
    if (name == "learned") return PolicyKind::learned;
    if (name == "cwm") return PolicyKind::cwm_augmented;
    throw std::invalid_argument("unknown policy kind: " + name);
}

namespace {

class RandomActor final : public Actor {
  public:
    explicit RandomActor(const Engine& engine) : engine_(engine) {}
    int act(const GameState& state, int, Rng& rng) override {
        return random_act(engine_.legal_mask(state), rng);
    }
    std::string name() const override { return "random"; }

  private:
    const Engine& engine_;
};

class HeuristicActor final : public Actor {
  public:
    HeuristicActor(const Engine& engine, Archetype archetype)
        : agent_(engine, archetype), archetype_(archetype) {}
    int act(const GameState& state, int, Rng&) override { return agent_.act(state); }
    std::string name() const override {
        return std::string("heuristic:") + archetype_slug(archetype_);
    }

  private:
    HeuristicAgent agent_;
    Archetype archetype_;
};

class PolicyActor final : public Actor {
  public:
    PolicyActor(const ArenaContext& ctx, PolicyParams params)
        : ctx_(ctx), params_(std::move(params)) {}
    int act(const GameState& state, int seat, Rng&) override {
        const std::vector<double> obs = ctx_.observer.encode(state, seat);
        return policy_act_argmax(params_, obs, ctx_.engine.legal_mask(state));
    }
    std::string name() const override { return "learned"; }

  private:
    const ArenaContext& ctx_;
    PolicyParams params_;
};

class CwmActor final : public Actor {
  public:
    CwmActor(const ArenaContext& ctx, PolicyParams params, std::shared_ptr<const Cwm> cwm,
             WinWeights weights, double lambda)
        : ctx_(ctx),
          params_(std::move(params)),
          cwm_(std::move(cwm)),
          weights_(weights),
          lambda_(lambda) {}
    int act(const GameState& state, int seat, Rng& rng) override {
        const std::vector<double> obs = ctx_.observer.encode(state, seat);
        const ActionMask mask = ctx_.engine.legal_mask(state);
        Matrix x(1, static_cast<int>(obs.size()));
        std::copy(obs.begin(), obs.end(), x.row(0));
        const PolicyForward f = policy_forward(params_, x, {mask});
        const CausalVars cv = ctx_.scm.extract(state, seat);
        return cwm_act(f.logp.row(0), mask, cv, *cwm_, weights_, lambda_, 0.0, rng);
    }
    std::string name() const override { return "cwm"; }

  private:
    const ArenaContext& ctx_;
    PolicyParams params_;
    std::shared_ptr<const Cwm> cwm_;
    WinWeights weights_;
    double lambda_;
};

}  // namespace

std::unique_ptr<Actor> make_random_actor(const ArenaContext& ctx) {
    return std::make_unique<RandomActor>(ctx.engine);
}

std::unique_ptr<Actor> make_heuristic_actor(const ArenaContext& ctx, Archetype archetype) {
    return std::make_unique<HeuristicActor>(ctx.engine, archetype);
}

std::unique_ptr<Actor> make_policy_actor(const ArenaContext& ctx, PolicyParams params) {
    return std::make_unique<PolicyActor>(ctx, std::move(params));
}

std::unique_ptr<Actor> make_cwm_actor(const ArenaContext& ctx, PolicyParams params,
                                      std::shared_ptr<const Cwm> cwm, WinWeights weights,
                                      double lambda) {
    return std::make_unique<CwmActor>(ctx, std::move(params), std::move(cwm), weights, lambda);
}

std::unique_ptr<Actor> make_actor(const ArenaContext& ctx, const PolicySpec& spec) {
    switch (spec.kind) {
        case PolicyKind::random_policy: return make_random_actor(ctx);
        case PolicyKind::heuristic: return make_heuristic_actor(ctx, spec.deck);
        case PolicyKind::learned: {
            if (spec.checkpoint.empty())
                throw std::invalid_argument("learned agent needs a checkpoint path");
            const Checkpoint ck = load_checkpoint(spec.checkpoint);
            PolicyParams params;
            Adam opt;
            WinWeights weights;
            restore_checkpoint(ck, params, opt, weights);
            if (params.config.obs_dim != kObsDim || params.config.num_actions != kNumActions)
                throw std::runtime_error("checkpoint dimensions do not match this build");
            return make_policy_actor(ctx, std::move(params));
        }
        case PolicyKind::cwm_augmented:
            throw std::invalid_argument(
                "cwm agents carry in-memory world-model state; train and evaluate them "
                "in one run");
    }
    throw std::invalid_argument("unknown policy kind");
}

std::string match_spec_to_json(const MatchSpec& spec) {
    const auto side = [](const PolicySpec& p) {
        return json{{"kind", policy_kind_name(p.kind)},
                    {"deck", archetype_slug(p.deck)},
                    {"checkpoint", p.checkpoint},
                    {"cwm_lambda", p.cwm_lambda}};
    };
    json j{{"agent_a", side(spec.agent_a)},
           {"agent_b", side(spec.agent_b)},
           {"episodes", spec.episodes},
           {"seeds", spec.seeds},
           {"turn_cap", spec.turn_cap}};
    return j.dump(2);
}

MatchSpec match_spec_from_json(const std::string& text) {
    const json j = json::parse(text);
    const auto side = [](const json& p) {
        PolicySpec out;
        out.kind = policy_kind_from_name(p.at("kind").get<std::string>());
        out.deck = archetype_from_slug(p.at("deck").get<std::string>());
        out.checkpoint = p.value("checkpoint", std::string());
        out.cwm_lambda = p.value("cwm_lambda", 0.6);
        return out;
    };
    MatchSpec spec;
    spec.agent_a = side(j.at("agent_a"));
    spec.agent_b = side(j.at("agent_b"));
    spec.episodes = j.at("episodes").get<int>();
    spec.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    spec.turn_cap = j.value("turn_cap", kDefaultTurnCap);
    return spec;
}

MatchResult run_match(const ArenaContext& ctx, Actor& a, Actor& b, Archetype deck_a,
                      Archetype deck_b, int episodes, const std::vector<std::uint64_t>& seeds,
                      int turn_cap) {
    if (episodes <= 0) throw std::invalid_argument("run_match needs episodes >= 1");
    if (seeds.empty()) throw std::invalid_argument("run_match needs at least one seed");
    MatchResult result;
    for (const std::uint64_t seed : seeds) {
        for (int ep = 0; ep < episodes; ++ep) {
            const int seat_a = ep % 2;
            const std::uint64_t ep_seed = Rng::mix(seed, static_cast<std::uint64_t>(ep));
            const Deck& deck0 = ctx.decks.deck(seat_a == 0 ? deck_a : deck_b);
            const Deck& deck1 = ctx.decks.deck(seat_a == 0 ? deck_b : deck_a);
            GameState state = ctx.engine.new_game(deck0, deck1, ep_seed, turn_cap);
            Rng rng_a(Rng::mix(ep_seed, 101));
            Rng rng_b(Rng::mix(ep_seed, 202));
            Fnv1a trace;
            long guard = 0;
            while (!ctx.engine.is_terminal(state)) {
                if (++guard > 200000) throw std::runtime_error("runaway episode");
                const int seat = state.decision;
                const bool is_a = seat == seat_a;
                const int action = (is_a ? a : b).act(state, seat, is_a ? rng_a : rng_b);
                ctx.engine.step(state, action);
                trace.add_u64(static_cast<std::uint64_t>(seat));
                trace.add_u64(static_cast<std::uint64_t>(action));
                trace.add_u64(ctx.engine.state_hash(state));
            }
            EpisodeRow row;
            row.seed = seed;
            row.episode = ep;
            row.seat_a = seat_a;
            row.turns = state.turn;
            row.trace_hash = trace.h;
            const Outcome outcome = *state.outcome;
            if (outcome == Outcome::draw) {
                row.winner = 2;
                ++result.draws;
            } else {
                const int winning_seat = outcome == Outcome::p0_win ? 0 : 1;
                row.winner = winning_seat == seat_a ? 0 : 1;
                ++(row.winner == 0 ? result.wins_a : result.wins_b);
            }
            result.rows.push_back(row);
        }
    }
    return result;
}

MatchResult run_match(const ArenaContext& ctx, const MatchSpec& spec) {
    const std::unique_ptr<Actor> a = make_actor(ctx, spec.agent_a);
    const std::unique_ptr<Actor> b = make_actor(ctx, spec.agent_b);
    return run_match(ctx, *a, *b, spec.agent_a.deck, spec.agent_b.deck, spec.episodes,
                     spec.seeds, spec.turn_cap);
}

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

const std::vector<std::string>& ablation_variants() {
    static const std::vector<std::string> v{"ppo", "cwm", "scalar", "no_gate", "no_cal",
                                            "full"};
    return v;
}

bool variant_factored(const std::string& variant) {
    if (variant == "ppo" || variant == "cwm") return false;
    if (variant == "scalar" || variant == "no_gate" || variant == "no_cal" ||
        variant == "full")
        return true;
    throw std::invalid_argument("unknown training variant: " + variant);
}

TrainCoeffs variant_coeffs(const std::string& variant, TrainCoeffs base) {
    variant_factored(variant);  // validates the name
    if (variant == "scalar") {
        base.c_f = 0.0;
        base.c_c = 0.0;
        base.c_e = 0.0;
    } else if (variant == "no_cal") {
        base.c_c = 0.0;
    }
    return base;
}

GateMode variant_gate(const std::string& variant) {
    variant_factored(variant);
    if (variant == "scalar") return GateMode::forced_zero;
    if (variant == "no_gate") return GateMode::constant_half;
    return GateMode::learned;
}

TrainResult train_agent(const ArenaContext& ctx, const TrainConfig& config) {
    const bool factored = variant_factored(config.variant);
    const bool use_cwm = config.variant == "cwm";
    const TrainCoeffs coeffs = variant_coeffs(config.variant, config.coeffs);
    const GateMode gate = variant_gate(config.variant);
    if (config.total_steps < coeffs.n_steps)
        throw std::invalid_argument("total_steps below one rollout");

    Scm scm = ctx.scm;  // local copy so online refits stay inside this run
    EnvConfig env_cfg;
    env_cfg.scheme = config.scheme;
    env_cfg.agent_archetype = config.deck;
    env_cfg.opponent_pool = config.opponents;
    env_cfg.turn_cap = config.turn_cap;
    env_cfg.compute_eps = factored;
    ArenaEnv env(ctx.engine, ctx.decks, scm, env_cfg, Rng::mix(config.seed, 11));

    Rng rng_init(Rng::mix(config.seed, 12));
    Rng rng_roll(Rng::mix(config.seed, 13));
    Rng rng_update(Rng::mix(config.seed, 14));
    Rng rng_cwm(Rng::mix(config.seed, 15));

    TrainResult result{PolicyParams::make(config.policy, rng_init), Adam{}, WinWeights{},
                       {}, 0, 0, nullptr};
    PolicyParams& params = result.params;
    if (factored) params.beta = beta_from_weights(scm.weights().w);
    result.opt = Adam(policy_param_count(params));
    if (use_cwm) result.cwm = std::make_shared<Cwm>(config.cwm, Rng::mix(config.seed, 16));

    RolloutBuffer buffer(config.policy.obs_dim, coeffs.n_steps);
    OutcomeBuffer outcomes;
    std::vector<CwmTransition> pending;

    std::uint64_t episode = 0;
    EnvStep cur = env.reset(episode);
    long steps_done = 0;
    long games = 0;
    const long num_updates = (config.total_steps + coeffs.n_steps - 1) / coeffs.n_steps;

    const auto forward_one = [&](const std::vector<double>& obs, const ActionMask& mask) {
        Matrix x(1, static_cast<int>(obs.size()));
        std::copy(obs.begin(), obs.end(), x.row(0));
        return policy_forward(params, x, {mask});
    };

    for (long update = 0; update < num_updates; ++update) {
        buffer.clear();
        while (!buffer.full()) {
            int action;
            double logp, value, gate_val;
            FactorVec fvals{};
            if (use_cwm) {
                const PolicyForward f = forward_one(cur.obs, cur.mask);
                const double frac =
                    static_cast<double>(steps_done) / static_cast<double>(config.total_steps);
                const double eps = config.cwm_eps_start +
                                   (config.cwm_eps_end - config.cwm_eps_start) *
                                       std::min(1.0, frac);
                action = cwm_act(f.logp.row(0), cur.mask, cur.vars, *result.cwm,
                                 scm.weights(), config.cwm_lambda, eps, rng_roll);
                logp = f.logp.at(0, action);
                value = f.value[0];
                for (int k = 0; k < kNumFactors; ++k) fvals[k] = f.factor_values.at(0, k);
                gate_val = f.gate[0];
            } else {
                const ActResult r = policy_act(params, cur.obs, cur.mask, rng_roll);
                action = r.action;
                logp = r.logp;
                value = r.value;
                fvals = r.factor_values;
                gate_val = r.gate;
            }

            const CausalVars vars_before = cur.vars;
            EnvStep nxt = env.step(action);
            buffer.add(cur.obs, cur.mask, action, logp, nxt.reward, nxt.factor_rewards,
                       nxt.eps, value, fvals, gate_val, nxt.terminal);
            ++steps_done;
            if (use_cwm)
                pending.push_back({vars_before, action, nxt.vars, false, false});

            if (nxt.terminal) {
                ++games;
                ++result.episodes_completed;
                if (!nxt.draw) outcomes.push(nxt.vars.factors(), nxt.won);
                if (use_cwm) {
                    for (CwmTransition& t : pending) {
                        t.has_outcome = !nxt.draw;
                        t.won = nxt.won;
                        result.cwm->observe(t);
                    }
                    pending.clear();
                }
                if (config.winprob_refit_games > 0 &&
                    games % config.winprob_refit_games == 0)
                    scm.fit(outcomes);
                cur = env.reset(++episode);
            } else {
                cur = std::move(nxt);
            }
        }

        const PolicyForward tail = forward_one(cur.obs, cur.mask);
        buffer.bootstrap_value = tail.value[0];
        for (int k = 0; k < kNumFactors; ++k)
            buffer.bootstrap_factor_values[k] = tail.factor_values.at(0, k);

        const double anneal =
            num_updates > 1 ? static_cast<double>(update) / (num_updates - 1) : 0.0;
        const UpdateMetrics metrics =
            factored ? cgfa_update(buffer, params, result.opt, coeffs, anneal, rng_update,
                                   gate)
                     : ppo_update(buffer, params, result.opt, coeffs, anneal, rng_update);
        result.series.push_back(metrics);
        if (use_cwm) result.cwm->update(rng_cwm);
    }

    result.steps_done = steps_done;
    result.weights = scm.weights();
    return result;
}

std::vector<EvalCell> evaluate_vs_pool(const ArenaContext& ctx, Actor& actor, Archetype deck,
                                       const std::vector<Archetype>& opponents, int episodes,
                                       const std::vector<std::uint64_t>& seeds,
                                       int turn_cap) {
    if (opponents.empty()) throw std::invalid_argument("empty opponent pool");
    std::vector<EvalCell> cells;
    for (const Archetype opp : opponents) {
        const std::unique_ptr<Actor> rival = make_heuristic_actor(ctx, opp);
        for (const std::uint64_t seed : seeds) {
            const MatchResult r =
                run_match(ctx, actor, *rival, deck, opp, episodes, {seed}, turn_cap);
            EvalCell cell;
            cell.opponent = opp;
            cell.seed = seed;
            cell.wins = r.wins_a;
            cell.losses = r.wins_b;
            cell.draws = r.draws;
            cells.push_back(cell);
        }
    }
    return cells;
}

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

std::string report_to_json(const StatReport& report) {
    json tables = json::array();
    for (const Table& t : report.tables)
        tables.push_back({{"name", t.name}, {"columns", t.columns}, {"rows", t.rows}});
    return json{{"tables", tables}}.dump(2);
}

StatReport report_from_json(const std::string& text) {
    const json j = json::parse(text);
    StatReport report;
    for (const json& t : j.at("tables")) {
        Table table;
        table.name = t.at("name").get<std::string>();
        table.columns = t.at("columns").get<std::vector<std::string>>();
        table.rows = t.at("rows").get<std::vector<std::vector<std::string>>>();
        report.tables.push_back(std::move(table));
    }
    return report;
}

void write_report(const StatReport& report, const std::string& dir,
                  const std::string& format) {
    if (report.tables.empty()) throw std::invalid_argument("empty report");
    std::filesystem::create_directories(dir);
    if (format == "json") {
        std::ofstream out(dir + "/report.json");
        out << report_to_json(report) << "\n";
        if (!out) throw std::runtime_error("failed writing report.json");
        return;
    }
    if (format != "csv") throw std::invalid_argument("unknown report format: " + format);
    for (const Table& t : report.tables) {
        std::ofstream out(dir + "/" + t.name + ".csv");
        for (std::size_t c = 0; c < t.columns.size(); ++c)
            out << (c ? "," : "") << t.columns[c];
        out << "\n";
        for (const auto& row : t.rows) {
            if (row.size() != t.columns.size())
                throw std::runtime_error("ragged row in table " + t.name);
            for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
            out << "\n";
        }
        if (!out) throw std::runtime_error("failed writing table " + t.name);
    }
}

Table calibration_series_table(const std::vector<UpdateMetrics>& series) {
    Table t;
    t.name = "calibration_series";
    t.columns = {"update",        "loss_ppo",  "loss_value", "loss_entropy",
                 "loss_factor",   "loss_cal",  "loss_gate",  "approx_kl",
                 "clip_fraction", "grad_norm", "lr",         "c_h",
                 "gate_mean",     "gate_min",  "gate_max"};
    for (int k = 0; k < kNumFactors; ++k) {
        const std::string slug = factor_name(static_cast<Factor>(k));
        t.columns.push_back("pearson_" + slug);
        t.columns.push_back("share_" + slug);
        t.columns.push_back("mix_" + slug);
    }
    for (std::size_t i = 0; i < series.size(); ++i) {
        const UpdateMetrics& m = series[i];
        std::vector<std::string> row{
            std::to_string(i),    fmt(m.loss_ppo),      fmt(m.loss_value),
            fmt(m.loss_entropy),  fmt(m.loss_factor),   fmt(m.loss_cal),
            fmt(m.loss_gate),     fmt(m.approx_kl),     fmt(m.clip_fraction),
            fmt(m.grad_norm),     fmt(m.lr),            fmt(m.c_h),
            fmt(m.gate_mean),     fmt(m.gate_min),      fmt(m.gate_max)};
        for (int k = 0; k < kNumFactors; ++k) {
            row.push_back(fmt(m.pearson[k]));
            row.push_back(fmt(m.credit_share[k]));
            row.push_back(fmt(m.mix_weights[k]));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table case_study_table(const ArenaContext& ctx, const PolicyParams& params,
                       const TrainCoeffs& coeffs, Archetype deck, Archetype opponent,
                       std::uint64_t seed, int turn_cap) {
    Scm scm = ctx.scm;
    EnvConfig cfg;
    cfg.scheme = RewardScheme::shaped;
    cfg.agent_archetype = deck;
    cfg.opponent_pool = {opponent};
    cfg.turn_cap = turn_cap;
    cfg.compute_eps = true;
    ArenaEnv env(ctx.engine, ctx.decks, scm, cfg, seed);

    std::vector<int> turns, actions;
    std::vector<FactorVec> values, rewards, effects;
    std::vector<std::uint8_t> dones;

    EnvStep cur = env.reset(0);
    long guard = 0;
    while (!cur.terminal) {
        if (++guard > 100000) throw std::runtime_error("runaway case-study episode");
        Matrix x(1, static_cast<int>(cur.obs.size()));
        std::copy(cur.obs.begin(), cur.obs.end(), x.row(0));
        const PolicyForward f = policy_forward(params, x, {cur.mask});
        const int action = argmax_legal(f.logp.row(0), cur.mask);

        FactorVec v{};
        for (int k = 0; k < kNumFactors; ++k) v[k] = f.factor_values.at(0, k);
        turns.push_back(env.state().turn);
        actions.push_back(action);
        values.push_back(v);

        const EnvStep nxt = env.step(action);
        rewards.push_back(nxt.factor_rewards);
        effects.push_back(nxt.eps);
        dones.push_back(nxt.terminal ? 1 : 0);
        cur = nxt;
    }
    const std::vector<FactorVec> adv =
        factor_gae(rewards, values, dones, FactorVec{}, coeffs.gamma, coeffs.lambda);

    Table t;
    t.name = "case_study";
    t.columns = {"step", "turn", "action"};
    for (int k = 0; k < kNumFactors; ++k) {
        const std::string slug = factor_name(static_cast<Factor>(k));
        t.columns.push_back("v_" + slug);
        t.columns.push_back("a_" + slug);
        t.columns.push_back("eps_" + slug);
    }
    for (std::size_t i = 0; i < turns.size(); ++i) {
        std::vector<std::string> row{std::to_string(i), std::to_string(turns[i]),
                                     std::to_string(actions[i])};
        for (int k = 0; k < kNumFactors; ++k) {
            row.push_back(fmt(values[i][k]));
            row.push_back(fmt(adv[i][k]));
            row.push_back(fmt(effects[i][k]));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

// ---------------------------------------------------------------------------
// protocols
// ---------------------------------------------------------------------------

ProtocolConfig ProtocolConfig::paper() {
    ProtocolConfig c;
    c.seeds = {1, 2, 3, 4, 5, 6, 7};
    c.eval_episodes = 300;
    c.train_steps = 1000000;
    c.policy = PolicyConfig{};
    c.coeffs = TrainCoeffs{};
    return c;
}

namespace {

const std::vector<Archetype>& all_archetypes() {
    static const std::vector<Archetype> v{
        Archetype::mono_red_aggro, Archetype::azorius_control, Archetype::dimir_midrange,
        Archetype::domain_ramp, Archetype::boros_convoke};
    return v;
}

struct PooledCounts {
    int wins = 0, losses = 0, draws = 0;

    void add(const EvalCell& c) {
        wins += c.wins;
        losses += c.losses;
        draws += c.draws;
    }
    double rate() const {
        const int decided = wins + losses;
        return decided > 0 ? static_cast<double>(wins) / decided : 0.0;
    }
};

void append_rate_row(Table& t, const std::string& deck, const std::string& agent,
                     const PooledCounts& counts, const std::vector<double>& cell_rates,
                     std::uint64_t boot_seed) {
    const int decided = counts.wins + counts.losses;
    const Interval wi = decided > 0 ? wilson_interval(counts.wins, decided)
                                    : Interval{0.0, 1.0};
    Interval boot{counts.rate(), counts.rate()};
    if (cell_rates.size() >= 2)
        boot = percentile_bootstrap_ci(cell_rates, kDefaultResamples, 0.95, boot_seed);
    t.rows.push_back({deck, agent, std::to_string(counts.wins),
                      std::to_string(counts.losses), std::to_string(counts.draws),
                      fmt(counts.rate()), fmt(wi.lo), fmt(wi.hi), fmt(boot.lo), fmt(boot.hi),
                      "percentile-bootstrap", std::to_string(cell_rates.size())});
}

std::vector<double> cell_rates_of(const std::vector<EvalCell>& cells) {
    std::vector<double> rates;
    rates.reserve(cells.size());
    for (const EvalCell& c : cells) rates.push_back(c.rate());
    return rates;
}

TrainConfig protocol_train_config(const ProtocolConfig& pc, const std::string& variant,
                                  Archetype deck, const std::vector<Archetype>& opponents,
                                  std::uint64_t seed) {
    TrainConfig tc;
    tc.variant = variant;
    tc.deck = deck;
    tc.opponents = opponents;
    tc.scheme = pc.scheme;
    tc.total_steps = pc.train_steps;
    tc.seed = seed;
    tc.turn_cap = pc.turn_cap;
    tc.policy = pc.policy;
    tc.coeffs = pc.coeffs;
    return tc;
}

std::unique_ptr<Actor> trained_actor(const ArenaContext& ctx, const std::string& variant,
                                     const TrainResult& result, double cwm_lambda) {
    if (variant == "cwm")
        return make_cwm_actor(ctx, result.params, result.cwm, result.weights, cwm_lambda);
    return make_policy_actor(ctx, result.params);
}

}  // namespace

StatReport run_headline(const ArenaContext& ctx, const ProtocolConfig& config) {
    if (config.seeds.empty()) throw std::invalid_argument("headline needs paired seeds");
    StatReport report;
    Table rates;
    rates.name = "headline";
    rates.columns = {"deck",      "agent",     "wins",    "losses",
                     "draws",     "rate",      "wilson_lo", "wilson_hi",
                     "boot_lo",   "boot_hi",   "ci_method", "n_cells"};
    Table pairwise;
    pairwise.name = "headline_pairwise";
    pairwise.columns = {"family", "deck", "delta", "p_boot", "p_holm"};

    std::vector<double> raw_ps;
    std::vector<std::string> deck_names;
    std::vector<double> deltas;
    std::uint64_t boot_tag = 0xB001;

    for (const Archetype deck : all_archetypes()) {
        const std::string deck_slug = archetype_slug(deck);
        // anchors
        for (const char* anchor : {"random", "heuristic"}) {
            std::unique_ptr<Actor> actor = anchor == std::string("random")
                                               ? make_random_actor(ctx)
                                               : make_heuristic_actor(ctx, deck);
            const std::vector<EvalCell> cells =
                evaluate_vs_pool(ctx, *actor, deck, all_archetypes(), config.eval_episodes,
                                 config.seeds, config.turn_cap);
            PooledCounts counts;
            for (const EvalCell& c : cells) counts.add(c);
            append_rate_row(rates, deck_slug, anchor, counts, cell_rates_of(cells),
                            ++boot_tag);
        }
        // learned agents, trained per seed on the full pool
        std::vector<double> ppo_rates, cgfa_rates;
        PooledCounts ppo_counts, cgfa_counts;
        for (const std::string& variant : {std::string("ppo"), std::string("full")}) {
            for (const std::uint64_t seed : config.seeds) {
                const TrainResult trained = train_agent(
                    ctx,
                    protocol_train_config(config, variant, deck, all_archetypes(), seed));
                const std::unique_ptr<Actor> actor =
                    trained_actor(ctx, variant, trained, 0.6);
                const std::vector<EvalCell> cells =
                    evaluate_vs_pool(ctx, *actor, deck, all_archetypes(),
                                     config.eval_episodes, {seed}, config.turn_cap);
                for (const EvalCell& c : cells) {
                    (variant == "ppo" ? ppo_counts : cgfa_counts).add(c);
                    (variant == "ppo" ? ppo_rates : cgfa_rates).push_back(c.rate());
                }
            }
        }
        append_rate_row(rates, deck_slug, "ppo", ppo_counts, ppo_rates, ++boot_tag);
        append_rate_row(rates, deck_slug, "cgfa", cgfa_counts, cgfa_rates, ++boot_tag);

        const TestResult test =
            paired_bootstrap_test(cgfa_rates, ppo_rates, kDefaultResamples, ++boot_tag);
        raw_ps.push_back(test.p_value);
        deck_names.push_back(deck_slug);
        deltas.push_back(cgfa_counts.rate() - ppo_counts.rate());
    }

    const std::vector<double> holm = holm_bonferroni(raw_ps);
    for (std::size_t i = 0; i < raw_ps.size(); ++i)
        pairwise.rows.push_back(
            {"headline", deck_names[i], fmt(deltas[i]), fmt(raw_ps[i]), fmt(holm[i])});
    report.tables.push_back(std::move(rates));
    report.tables.push_back(std::move(pairwise));
    return report;
}

StatReport run_transfer(const ArenaContext& ctx, const ProtocolConfig& config) {
    if (config.seeds.empty()) throw std::invalid_argument("transfer needs paired seeds");
    StatReport report;
    Table folds;
    folds.name = "transfer_folds";
    folds.columns = {"agent", "held_out", "seed", "in_rate", "out_rate"};
    Table summary;
    summary.name = "transfer_summary";
    summary.columns = {"agent",           "in_pooled",        "out_pooled",
                       "delta_pp_pooled", "in_fold_mean",     "out_fold_mean",
                       "delta_pp_fold_mean", "p_boot",        "p_holm"};

    struct AgentAgg {
        std::string name;
        PooledCounts in_counts, out_counts;
        std::vector<double> in_rates, out_rates;  // per (fold, seed)
        std::vector<double> fold_in_means, fold_out_means;
        double p = 1.0;
    };
    std::vector<AgentAgg> aggs;

    for (const std::string& variant : {std::string("ppo"), std::string("full")}) {
        AgentAgg agg;
        agg.name = variant == "ppo" ? "ppo" : "cgfa";
        for (const Archetype held_out : all_archetypes()) {
            std::vector<Archetype> pool;
            for (const Archetype a : all_archetypes())
                if (a != held_out) pool.push_back(a);
            double fold_in = 0.0, fold_out = 0.0;
            for (const std::uint64_t seed : config.seeds) {
                const TrainResult trained = train_agent(
                    ctx, protocol_train_config(config, variant, Archetype::mono_red_aggro,
                                               pool, seed));
                const std::unique_ptr<Actor> actor =
                    trained_actor(ctx, variant, trained, 0.6);
                PooledCounts in_c, out_c;
                for (const EvalCell& c :
                     evaluate_vs_pool(ctx, *actor, Archetype::mono_red_aggro, pool,
                                      config.eval_episodes, {seed}, config.turn_cap))
                    in_c.add(c);
                for (const EvalCell& c :
                     evaluate_vs_pool(ctx, *actor, Archetype::mono_red_aggro, {held_out},
                                      config.eval_episodes, {seed}, config.turn_cap))
                    out_c.add(c);
                agg.in_counts.add(EvalCell{held_out, seed, in_c.wins, in_c.losses,
                                           in_c.draws});
                agg.out_counts.add(EvalCell{held_out, seed, out_c.wins, out_c.losses,
                                            out_c.draws});
                agg.in_rates.push_back(in_c.rate());
                agg.out_rates.push_back(out_c.rate());
                fold_in += in_c.rate();
                fold_out += out_c.rate();
                folds.rows.push_back({agg.name, archetype_slug(held_out),
                                      std::to_string(seed), fmt(in_c.rate()),
                                      fmt(out_c.rate())});
            }
            agg.fold_in_means.push_back(fold_in / config.seeds.size());
            agg.fold_out_means.push_back(fold_out / config.seeds.size());
        }
        agg.p = paired_bootstrap_test(agg.in_rates, agg.out_rates, kDefaultResamples,
                                      0xF01D + aggs.size())
                    .p_value;
        aggs.push_back(std::move(agg));
    }

    std::vector<double> ps;
    for (const AgentAgg& a : aggs) ps.push_back(a.p);
    const std::vector<double> holm = holm_bonferroni(ps);
    for (std::size_t i = 0; i < aggs.size(); ++i) {
        const AgentAgg& a = aggs[i];
        const double in_fold =
            std::accumulate(a.fold_in_means.begin(), a.fold_in_means.end(), 0.0) /
            a.fold_in_means.size();
        const double out_fold =
            std::accumulate(a.fold_out_means.begin(), a.fold_out_means.end(), 0.0) /
            a.fold_out_means.size();
        summary.rows.push_back({a.name, fmt(a.in_counts.rate()), fmt(a.out_counts.rate()),
                                fmt(transfer_gap_pp(a.in_counts.rate(),
                                                    a.out_counts.rate())),
                                fmt(in_fold), fmt(out_fold),
                                fmt(transfer_gap_pp(in_fold, out_fold)), fmt(ps[i]),
                                fmt(holm[i])});
    }
    report.tables.push_back(std::move(folds));
    report.tables.push_back(std::move(summary));
    return report;
}

StatReport run_ablation(const ArenaContext& ctx, const ProtocolConfig& config) {
    if (config.seeds.empty()) throw std::invalid_argument("ablation needs paired seeds");
    StatReport report;
    Table rates;
    rates.name = "ablation";
    rates.columns = {"variant",   "wins",      "losses",  "draws",
                     "rate",      "wilson_lo", "wilson_hi", "boot_lo",
                     "boot_hi",   "ci_method", "n_cells"};
    Table pairwise;
    pairwise.name = "ablation_pairwise";
    pairwise.columns = {"family", "variant", "delta_vs_full", "p_boot", "p_holm"};

    std::map<std::string, std::vector<double>> variant_rates;
    std::map<std::string, PooledCounts> variant_counts;
    std::uint64_t boot_tag = 0xAB1A;

    for (const std::string& variant : ablation_variants()) {
        for (const std::uint64_t seed : config.seeds) {
            const TrainResult trained = train_agent(
                ctx, protocol_train_config(config, variant, Archetype::mono_red_aggro,
                                           all_archetypes(), seed));
            const std::unique_ptr<Actor> actor = trained_actor(ctx, variant, trained, 0.6);
            const std::vector<EvalCell> cells =
                evaluate_vs_pool(ctx, *actor, Archetype::mono_red_aggro, all_archetypes(),
                                 config.eval_episodes, {seed}, config.turn_cap);
            for (const EvalCell& c : cells) {
                variant_counts[variant].add(c);
                variant_rates[variant].push_back(c.rate());
            }
        }
    }
    for (const std::string& variant : ablation_variants()) {
        Table tmp;
        tmp.columns = rates.columns;
        append_rate_row(tmp, "", variant, variant_counts[variant], variant_rates[variant],
                        ++boot_tag);
        std::vector<std::string> row = tmp.rows.front();
        row.erase(row.begin());  // drop the deck column used by append_rate_row
        rates.rows.push_back(std::move(row));
    }

    std::vector<double> ps;
    std::vector<std::string> names;
    std::vector<double> deltas;
    for (const std::string& variant : ablation_variants()) {
        if (variant == "full") continue;
        const TestResult test =
            paired_bootstrap_test(variant_rates["full"], variant_rates[variant],
                                  kDefaultResamples, ++boot_tag);
        ps.push_back(test.p_value);
        names.push_back(variant);
        deltas.push_back(variant_counts["full"].rate() - variant_counts[variant].rate());
    }
    const std::vector<double> holm = holm_bonferroni(ps);
    for (std::size_t i = 0; i < ps.size(); ++i)
        pairwise.rows.push_back(
            {"ablation", names[i], fmt(deltas[i]), fmt(ps[i]), fmt(holm[i])});
    report.tables.push_back(std::move(rates));
    report.tables.push_back(std::move(pairwise));
    return report;
}

StatReport headline_from_fixture(const std::string& fixture_json) {
    const json j = json::parse(fixture_json);
    const std::vector<double> family = j.at("family").get<std::vector<double>>();
    const std::vector<std::string> decks =
        j.value("decks", std::vector<std::string>(family.size(), ""));
    if (decks.size() != family.size())
        throw std::invalid_argument("fixture decks/family size mismatch");
    std::vector<double> deltas(family.size(), 0.0);
    if (j.contains("deltas")) {
        deltas = j.at("deltas").get<std::vector<double>>();
        if (deltas.size() != family.size())
            throw std::invalid_argument("fixture deltas/family size mismatch");
    }
    const std::vector<double> holm = holm_bonferroni(family);
    StatReport report;
    Table t;
    t.name = "headline_pairwise";
    t.columns = {"family", "deck", "delta", "p_boot", "p_holm"};
    for (std::size_t i = 0; i < family.size(); ++i)
        t.rows.push_back({"headline", decks[i], fmt(deltas[i]), fmt(family[i]),
                          fmt(holm[i])});
    report.tables.push_back(std::move(t));
    return report;
}

StatReport transfer_from_rates(const std::vector<std::string>& agents,
                               const std::vector<double>& in_dist,
                               const std::vector<double>& held_out) {
    if (agents.size() != in_dist.size() || agents.size() != held_out.size())
        throw std::invalid_argument("transfer fixture size mismatch");
    StatReport report;
    Table t;
    t.name = "transfer_summary";
    t.columns = {"agent", "in_pooled", "out_pooled", "delta_pp_pooled"};
    for (std::size_t i = 0; i < agents.size(); ++i)
        t.rows.push_back({agents[i], fmt(in_dist[i]), fmt(held_out[i]),
                          fmt(transfer_gap_pp(in_dist[i], held_out[i]))});
    report.tables.push_back(std::move(t));
    return report;
}

// ---------------------------------------------------------------------------
// manifests
// ---------------------------------------------------------------------------

std::string sha256_file_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    EVP_MD_CTX* md = EVP_MD_CTX_new();
    if (!md) throw std::runtime_error("digest allocation failed");
    EVP_DigestInit_ex(md, EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0)
            EVP_DigestUpdate(md, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char out[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(md, out, &len);
    EVP_MD_CTX_free(md);
    std::string hex;
    hex.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        char b[3];
        std::snprintf(b, sizeof b, "%02x", out[i]);
        hex += b;
    }
    return hex;
}

namespace {

std::string repo_root() {
    if (const char* env = std::getenv("MTG_REPO_ROOT")) return env;
    return std::string(MTG_BUNDLED_DATA_DIR) + "/..";
}

std::string run_command(const std::string& cmd) {
    FILE* pipe = popen((cmd + " 2>/dev/null").c_str(), "r");
    if (!pipe) return "";
    std::string out;
    char line[512];
    while (fgets(line, sizeof line, pipe)) out += line;
    pclose(pipe);
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
    return out;
}

std::string iso_timestamp() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

json environment_section() {
    json env = json::object();
    for (const char* key : {"MTG_DATA_DIR", "MTG_LOCKFILE", "MTG_REPO_ROOT",
                            "OMP_NUM_THREADS"}) {
        const char* v = std::getenv(key);
        env[key] = v ? json(v) : json(nullptr);
    }
    return env;
}

}  // namespace

std::string lockfile_path() {
    if (const char* env = std::getenv("MTG_LOCKFILE")) return env;
    return repo_root() + "/deps.lock";
}

std::string build_manifest(const ManifestInfo& info) {
    const std::string root = repo_root();
    const std::string git = "git -C '" + root + "' ";
    utsname uts{};
    uname(&uts);
    char host[256] = "unknown";
    gethostname(host, sizeof host - 1);

    json seeds_json = json::array();
    json prints = json::array();
    for (const std::uint64_t s : info.seeds) {
        seeds_json.push_back(s);
        prints.push_back(hex64(Rng(s).fingerprint()));
    }
    const std::string commit = run_command(git + "rev-parse HEAD");
    const std::string branch = run_command(git + "rev-parse --abbrev-ref HEAD");
    const std::string dirty = run_command(git + "status --porcelain");

    json m;
    m["run"] = {{"schema_version", 1},
                {"name", info.run_name},
                {"timestamp", iso_timestamp()}};
    m["vcs"] = {{"commit", commit.empty() ? "unknown" : commit},
                {"branch", branch.empty() ? "unknown" : branch},
                {"dirty", !dirty.empty()}};
    m["runtime"] = {{"compiler",
#ifdef __VERSION__
                     __VERSION__
#else
                     "unknown"
#endif
                    },
                    {"platform", std::string(uts.sysname) + " " + uts.release + " " +
                                     uts.machine},
                    {"openmp",
#ifdef _OPENMP
                     _OPENMP
#else
                     0
#endif
                    },
                    {"libraries", {{"openssl", OPENSSL_VERSION_TEXT}}}};
    m["lockfile"] = {{"path", lockfile_path()}, {"sha256", sha256_file_hex(lockfile_path())}};
    m["invocation"] = {{"args", info.argv}, {"host", host}};
    m["environment"] = environment_section();
    m["config"] = json::parse(info.config_json);
    m["seeds"] = {{"list", seeds_json}, {"fingerprints", prints}};
    if (!info.eval_json.empty()) m["eval"] = json::parse(info.eval_json);
    return m.dump(2);
}

void write_manifest(const std::string& path, const ManifestInfo& info) {
    const std::string text = build_manifest(info);
    std::ofstream out(path);
    out << text << "\n";
    if (!out) throw std::runtime_error("failed writing manifest " + path);
}

VerifyResult verify_manifest(const ArenaContext& ctx, const std::string& path) {
    VerifyResult result;
    json m;
    try {
        m = json::parse(read_text_file(path));
    } catch (const std::exception& e) {
        result.ok = false;
        result.problems.push_back(std::string("unreadable manifest: ") + e.what());
        return result;
    }
    try {
        const std::string lock = m.at("lockfile").at("path").get<std::string>();
        const std::string want = m.at("lockfile").at("sha256").get<std::string>();
        const std::string got = sha256_file_hex(lock);
        if (got != want)
            result.problems.push_back("lockfile digest mismatch: " + got + " != " + want);
    } catch (const std::exception& e) {
        result.problems.push_back(std::string("lockfile check failed: ") + e.what());
    }
    try {
        const auto seeds = m.at("seeds").at("list").get<std::vector<std::uint64_t>>();
        const auto prints = m.at("seeds").at("fingerprints").get<std::vector<std::string>>();
        if (seeds.size() != prints.size()) {
            result.problems.push_back("seed list and fingerprints differ in length");
        } else {
            for (std::size_t i = 0; i < seeds.size(); ++i)
                if (hex64(Rng(seeds[i]).fingerprint()) != prints[i])
                    result.problems.push_back("fingerprint mismatch for seed " +
                                              std::to_string(seeds[i]));
        }
    } catch (const std::exception& e) {
        result.problems.push_back(std::string("seed check failed: ") + e.what());
    }
    if (m.contains("eval")) {
        try {
            const json& eval = m.at("eval");
            const MatchSpec spec = match_spec_from_json(eval.at("match").dump());
            const auto want = eval.at("trace_hashes").get<std::vector<std::string>>();
            const MatchResult replay = run_match(ctx, spec);
            if (want.size() != replay.rows.size()) {
                result.problems.push_back("replay episode count mismatch");
            } else {
                for (std::size_t i = 0; i < want.size(); ++i)
                    if (hex64(replay.rows[i].trace_hash) != want[i]) {
                        result.problems.push_back("trace hash mismatch at episode " +
                                                  std::to_string(i));
                        break;
                    }
            }
        } catch (const std::exception& e) {
            result.problems.push_back(std::string("replay check failed: ") + e.what());
        }
    }
    result.ok = result.problems.empty();
    return result;
}

}  // namespace mtg
