#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mtg/agents.hpp"
#include "mtg/cards.hpp"
#include "mtg/engine.hpp"
#include "mtg/env.hpp"
#include "mtg/learn.hpp"
#include "mtg/observe.hpp"
#include "mtg/scm.hpp"
#include "mtg/stats.hpp"

namespace mtg {

/**
 * Everything a run needs, loaded and validated once. Self-referential (the
 * engine holds the catalog by reference), so it lives behind a unique_ptr and
 * never moves.
 */
class ArenaContext {
  public:
    static std::unique_ptr<ArenaContext> load(const std::string& dir = data_dir());

    Catalog catalog;
    Engine engine;
    DeckList decks;
    Scm scm;
    Observer observer;

  private:
    explicit ArenaContext(const std::string& dir);
};

enum class PolicyKind : std::uint8_t { random_policy, heuristic, learned, cwm_augmented };

const char* policy_kind_name(PolicyKind k);
PolicyKind policy_kind_from_name(const std::string& name);

struct PolicySpec {
    PolicyKind kind = PolicyKind::random_policy;
    Archetype deck = Archetype::mono_red_aggro;
    std::string checkpoint;  // required for learned agents
    double cwm_lambda = 0.6;
};

/// A resolved match participant. Learned agents evaluate deterministically:
/// argmax over legal log-probabilities, ties to the lowest action index.
class Actor {
  public:
    virtual ~Actor() = default;
    virtual int act(const GameState& state, int seat, Rng& rng) = 0;
    virtual std::string name() const = 0;
};

std::unique_ptr<Actor> make_actor(const ArenaContext& ctx, const PolicySpec& spec);
std::unique_ptr<Actor> make_random_actor(const ArenaContext& ctx);
std::unique_ptr<Actor> make_heuristic_actor(const ArenaContext& ctx, Archetype archetype);
std::unique_ptr<Actor> make_policy_actor(const ArenaContext& ctx, PolicyParams params);
std::unique_ptr<Actor> make_cwm_actor(const ArenaContext& ctx, PolicyParams params,
                                      std::shared_ptr<const Cwm> cwm, WinWeights weights,
                                      double lambda);

struct MatchSpec {
    PolicySpec agent_a, agent_b;
    int episodes = 30;  // per seed; first seat alternates with episode parity
    std::vector<std::uint64_t> seeds{1, 2};
    int turn_cap = kDefaultTurnCap;
};

std::string match_spec_to_json(const MatchSpec& spec);
MatchSpec match_spec_from_json(const std::string& text);

struct EpisodeRow {
    std::uint64_t seed = 0;
    int episode = 0;
    int seat_a = 0;  // seat agent_a occupied this episode
    int winner = 2;  // 0 = agent_a, 1 = agent_b, 2 = draw
    int turns = 0;
    std::uint64_t trace_hash = 0;  // FNV over (actor, action, post-step state hash)
};

struct MatchResult {
    std::vector<EpisodeRow> rows;
    int wins_a = 0, wins_b = 0, draws = 0;
};

MatchResult run_match(const ArenaContext& ctx, const MatchSpec& spec);
MatchResult run_match(const ArenaContext& ctx, Actor& a, Actor& b, Archetype deck_a,
                      Archetype deck_b, int episodes, const std::vector<std::uint64_t>& seeds,
                      int turn_cap = kDefaultTurnCap);

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

/// ppo | cwm | scalar | no_gate | no_cal | full
bool variant_factored(const std::string& variant);
TrainCoeffs variant_coeffs(const std::string& variant, TrainCoeffs base);
GateMode variant_gate(const std::string& variant);
const std::vector<std::string>& ablation_variants();

struct TrainConfig {
    std::string variant = "full";
    Archetype deck = Archetype::mono_red_aggro;
    std::vector<Archetype> opponents{
        Archetype::mono_red_aggro, Archetype::azorius_control, Archetype::dimir_midrange,
        Archetype::domain_ramp, Archetype::boros_convoke};
    RewardScheme scheme = RewardScheme::shaped;
    long total_steps = 50000;
    std::uint64_t seed = 1;
    int turn_cap = kDefaultTurnCap;
    PolicyConfig policy{kObsDim, kNumActions, {64, 64}, 32};  // desk profile
    TrainCoeffs coeffs = desk_coeffs();
    CwmConfig cwm;
    double cwm_lambda = 0.6;
    double cwm_eps_start = 0.10;
    double cwm_eps_end = 0.01;
    int winprob_refit_games = 200;

    static TrainCoeffs desk_coeffs() {
        TrainCoeffs c;
        c.n_steps = 512;
        return c;
    }
};

struct TrainResult {
    PolicyParams params;
    Adam opt;
    WinWeights weights;
    std::vector<UpdateMetrics> series;  // one row per update (Figure-style series)
    long steps_done = 0;
    long episodes_completed = 0;
    std::shared_ptr<Cwm> cwm;  // only for the cwm variant
};

TrainResult train_agent(const ArenaContext& ctx, const TrainConfig& config);

struct EvalCell {
    Archetype opponent;
    std::uint64_t seed = 0;
    int wins = 0, losses = 0, draws = 0;

    double rate() const {
        const int decided = wins + losses;
        return decided > 0 ? static_cast<double>(wins) / decided : 0.0;
    }
};

/// Deterministic evaluation of one actor against each opponent archetype,
/// `episodes` per (opponent, seed) cell, first seat alternating.
std::vector<EvalCell> evaluate_vs_pool(const ArenaContext& ctx, Actor& actor, Archetype deck,
                                       const std::vector<Archetype>& opponents, int episodes,
                                       const std::vector<std::uint64_t>& seeds,
                                       int turn_cap = kDefaultTurnCap);

// ---------------------------------------------------------------------------
// reports and protocols
// ---------------------------------------------------------------------------

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

struct StatReport {
    std::vector<Table> tables;
};

std::string report_to_json(const StatReport& report);
StatReport report_from_json(const std::string& text);
/// format: "csv" writes one <table>.csv per table; "json" writes report.json.
void write_report(const StatReport& report, const std::string& dir,
                  const std::string& format = "csv");

Table calibration_series_table(const std::vector<UpdateMetrics>& series);
/// Single-episode per-decision trace: factor values, factor advantages, and
/// model-predicted effects for the action taken.
Table case_study_table(const ArenaContext& ctx, const PolicyParams& params,
                       const TrainCoeffs& coeffs, Archetype deck, Archetype opponent,
                       std::uint64_t seed, int turn_cap = kDefaultTurnCap);

struct ProtocolConfig {
    std::vector<std::uint64_t> seeds{1, 2};  // paired across compared agents
    int eval_episodes = 30;                  // per (opponent, seed) cell
    long train_steps = 50000;
    RewardScheme scheme = RewardScheme::shaped;
    int turn_cap = kDefaultTurnCap;
    PolicyConfig policy{kObsDim, kNumActions, {64, 64}, 32};
    TrainCoeffs coeffs = TrainConfig::desk_coeffs();
    std::string out_dir;

    /// The full protocol: 7 paired seeds, 300 episodes, 10^6 steps, wide nets.
    static ProtocolConfig paper();
};

StatReport run_headline(const ArenaContext& ctx, const ProtocolConfig& config);
StatReport run_transfer(const ArenaContext& ctx, const ProtocolConfig& config);
StatReport run_ablation(const ArenaContext& ctx, const ProtocolConfig& config);

/// Report-only path: per-deck pairwise p-values supplied as fixtures (JSON
/// {"family": [...], "decks": [...], optional "deltas": [...]}) go through the
/// same Holm adjustment the live protocol uses.
StatReport headline_from_fixture(const std::string& fixture_json);
/// Report-only transfer arithmetic on given (in-distribution, held-out) rates.
StatReport transfer_from_rates(const std::vector<std::string>& agents,
                               const std::vector<double>& in_dist,
                               const std::vector<double>& held_out);

// ---------------------------------------------------------------------------
// manifests
// ---------------------------------------------------------------------------

std::string sha256_file_hex(const std::string& path);
std::string lockfile_path();

struct ManifestInfo {
    std::string run_name = "run";
    std::vector<std::string> argv;
    std::vector<std::uint64_t> seeds;
    std::string config_json = "{}";  // full hyperparameter dump
    std::string eval_json;           // match spec + trace hashes; enables replay checks
};

std::string build_manifest(const ManifestInfo& info);
void write_manifest(const std::string& path, const ManifestInfo& info);

struct VerifyResult {
    bool ok = true;
    std::vector<std::string> problems;
};

/// Checks the lockfile digest, the per-seed RNG fingerprints, and (when the
/// manifest embeds an evaluation) replays the match and compares trace hashes.
VerifyResult verify_manifest(const ArenaContext& ctx, const std::string& path);

}  // namespace mtg
