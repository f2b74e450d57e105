// arena: command-line front end for training, evaluation, the paper protocols,
// reproducibility manifests, and data exports.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <mtg/harness.hpp>

using nlohmann::json;

namespace {

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path);
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string ensure_run_dir(std::string dir, const std::string& fallback) {
    if (dir.empty()) dir = "runs/" + fallback;
    std::filesystem::create_directories(dir);
    return dir;
}

std::vector<mtg::Archetype> parse_archetypes(const std::vector<std::string>& slugs) {
    std::vector<mtg::Archetype> out;
    out.reserve(slugs.size());
    for (const std::string& s : slugs) out.push_back(mtg::archetype_from_slug(s));
    return out;
}

json coeffs_json(const mtg::TrainCoeffs& c) {
    return json{{"lr_start", c.lr_start},
                {"lr_end", c.lr_end},
                {"minibatch", c.minibatch},
                {"epochs", c.epochs},
                {"n_steps", c.n_steps},
                {"gamma", c.gamma},
                {"lambda", c.lambda},
                {"clip", c.clip},
                {"c_ppo", c.c_ppo},
                {"c_v", c.c_v},
                {"c_h_start", c.c_h_start},
                {"c_h_end", c.c_h_end},
                {"c_f", c.c_f},
                {"c_c", c.c_c},
                {"c_e", c.c_e},
                {"grad_norm_max", c.grad_norm_max},
                {"delta", c.delta}};
}

json train_config_json(const mtg::TrainConfig& c, const std::string& opponent_schedule) {
    json opp = json::array();
    for (const mtg::Archetype a : c.opponents) opp.push_back(mtg::archetype_slug(a));
    return json{{"variant", c.variant},
                {"deck", mtg::archetype_slug(c.deck)},
                {"opponents", opp},
                {"opponent_schedule", opponent_schedule},
                {"scheme", mtg::reward_scheme_name(c.scheme)},
                {"total_steps", c.total_steps},
                {"seed", c.seed},
                {"turn_cap", c.turn_cap},
                {"policy",
                 {{"obs_dim", c.policy.obs_dim},
                  {"num_actions", c.policy.num_actions},
                  {"hidden", c.policy.hidden},
                  {"gate_hidden", c.policy.gate_hidden}}},
                {"coeffs", coeffs_json(c.coeffs)},
                {"cwm",
                 {{"emb_dim", c.cwm.emb_dim},
                  {"hidden", c.cwm.hidden},
                  {"lr", c.cwm.lr},
                  {"replay_capacity", c.cwm.replay_capacity},
                  {"steps_per_update", c.cwm.steps_per_update},
                  {"minibatch", c.cwm.minibatch}}},
                {"cwm_lambda", c.cwm_lambda},
                {"cwm_eps_start", c.cwm_eps_start},
                {"cwm_eps_end", c.cwm_eps_end},
                {"winprob_refit_games", c.winprob_refit_games}};
}

json protocol_config_json(const mtg::ProtocolConfig& c) {
    return json{{"seeds", c.seeds},
                {"eval_episodes", c.eval_episodes},
                {"train_steps", c.train_steps},
                {"scheme", mtg::reward_scheme_name(c.scheme)},
                {"turn_cap", c.turn_cap},
                {"policy",
                 {{"obs_dim", c.policy.obs_dim},
                  {"num_actions", c.policy.num_actions},
                  {"hidden", c.policy.hidden},
                  {"gate_hidden", c.policy.gate_hidden}}},
                {"coeffs", coeffs_json(c.coeffs)}};
}

void write_rows_csv(const std::string& path, const mtg::MatchResult& result) {
    std::ofstream out(path);
    out << "seed,episode,seat_a,winner,turns,trace_hash\n";
    for (const mtg::EpisodeRow& r : result.rows)
        out << r.seed << "," << r.episode << "," << r.seat_a << "," << r.winner << ","
            << r.turns << "," << hex64(r.trace_hash) << "\n";
    if (!out) throw std::runtime_error("cannot write " + path);
}

json eval_section_json(const mtg::MatchSpec& spec, const mtg::MatchResult& result) {
    json hashes = json::array();
    for (const mtg::EpisodeRow& r : result.rows) hashes.push_back(hex64(r.trace_hash));
    return json{{"match", json::parse(mtg::match_spec_to_json(spec))},
                {"trace_hashes", hashes}};
}

struct ProtocolFlags {
    std::vector<std::uint64_t> seeds{1, 2};
    int eval_episodes = 30;
    long train_steps = 50000;
    std::string scheme = "shaped";
    int turn_cap = mtg::kDefaultTurnCap;
    int n_steps = 512;
    std::vector<int> hidden{64, 64};
    bool paper_scale = false;
    std::string out_dir;
    std::string format = "csv";
};

void add_protocol_flags(CLI::App* cmd, ProtocolFlags& f) {
    cmd->add_option("--seed", f.seeds, "Paired seed list")->delimiter(',');
    cmd->add_option("--episodes", f.eval_episodes, "Evaluation episodes per (opponent, seed)");
    cmd->add_option("--train-steps", f.train_steps, "Environment steps per training run");
    cmd->add_option("--scheme", f.scheme, "Reward scheme: sparse | shaped | dense");
    cmd->add_option("--turn-cap", f.turn_cap, "Draw after this many turns");
    cmd->add_option("--n-steps", f.n_steps, "Rollout length per update");
    cmd->add_option("--hidden", f.hidden, "Policy hidden layer sizes")->delimiter(',');
    cmd->add_flag("--paper-scale", f.paper_scale,
                  "Full protocol: 7 seeds, 300 episodes, 1e6 steps, wide nets");
    cmd->add_option("--out", f.out_dir, "Run directory (default runs/<command>)");
    cmd->add_option("--format", f.format, "Report format: csv | json");
}

mtg::ProtocolConfig resolve_protocol(const ProtocolFlags& f, const std::string& fallback) {
    mtg::ProtocolConfig config = f.paper_scale ? mtg::ProtocolConfig::paper()
                                               : mtg::ProtocolConfig{};
    if (!f.paper_scale) {
        config.seeds = f.seeds;
        config.eval_episodes = f.eval_episodes;
        config.train_steps = f.train_steps;
        config.coeffs.n_steps = f.n_steps;
        config.policy.hidden = f.hidden;
    }
    config.scheme = mtg::reward_scheme_from_name(f.scheme);
    config.turn_cap = f.turn_cap;
    config.out_dir = ensure_run_dir(f.out_dir, fallback);
    return config;
}

void finish_protocol_run(const mtg::ArenaContext& ctx, const mtg::StatReport& report,
                         const mtg::ProtocolConfig& config, const std::string& name,
                         const std::string& format, const std::vector<std::string>& argv) {
    mtg::write_report(report, config.out_dir, format);
    mtg::ManifestInfo info;
    info.run_name = name;
    info.argv = argv;
    info.seeds = config.seeds;
    info.config_json = protocol_config_json(config).dump();
    mtg::write_manifest(config.out_dir + "/manifest.json", info);
    (void)ctx;
    std::cout << name << ": wrote " << report.tables.size() << " tables to "
              << config.out_dir << "\n";
}

int run_verify(const mtg::ArenaContext& ctx, const std::string& path) {
    const mtg::VerifyResult v = mtg::verify_manifest(ctx, path);
    if (v.ok) {
        std::cout << "manifest ok: " << path << "\n";
        return 0;
    }
    for (const std::string& p : v.problems) std::cerr << "problem: " << p << "\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Causal RL arena: train and evaluate agents, run the paper protocols, "
                 "verify reproducibility manifests, export bundled data"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from an INI file");
    std::vector<std::string> raw_args(argv, argv + argc);

    // train ------------------------------------------------------------------
    auto* train = app.add_subcommand("train", "Train one agent and save a checkpoint");
    std::string tr_variant = "full", tr_deck = "mono_red_aggro", tr_scheme = "shaped";
    std::vector<std::string> tr_opponents;
    long tr_steps = 50000;
    std::uint64_t tr_seed = 1;
    int tr_turn_cap = mtg::kDefaultTurnCap, tr_n_steps = 512, tr_eval_episodes = 0;
    std::vector<int> tr_hidden{64, 64};
    std::string tr_out;
    train->add_option("--variant", tr_variant,
                      "ppo | cwm | scalar | no_gate | no_cal | full");
    train->add_option("--deck", tr_deck, "Agent deck archetype slug");
    train->add_option("--opponent", tr_opponents,
                      "Opponent archetype slugs (default: all five)")->delimiter(',');
    train->add_option("--steps", tr_steps, "Total environment steps");
    train->add_option("--seed", tr_seed, "Training seed");
    train->add_option("--scheme", tr_scheme, "Reward scheme: sparse | shaped | dense");
    train->add_option("--turn-cap", tr_turn_cap, "Draw after this many turns");
    train->add_option("--n-steps", tr_n_steps, "Rollout length per update");
    train->add_option("--hidden", tr_hidden, "Policy hidden layer sizes")->delimiter(',');
    train->add_option("--eval-episodes", tr_eval_episodes,
                      "Post-training evaluation episodes per opponent (0 = skip)");
    train->add_option("--out", tr_out, "Run directory");

    // eval -------------------------------------------------------------------
    auto* eval = app.add_subcommand("eval", "Play a deterministic evaluation match");
    std::string ev_spec_path, ev_a = "random", ev_b = "heuristic";
    std::string ev_deck_a = "mono_red_aggro", ev_deck_b = "azorius_control";
    std::string ev_ck_a, ev_ck_b, ev_out;
    int ev_episodes = 30, ev_turn_cap = mtg::kDefaultTurnCap;
    std::vector<std::uint64_t> ev_seeds{1, 2};
    eval->add_option("--spec", ev_spec_path, "Match spec JSON file (overrides flags)");
    eval->add_option("--agent-a", ev_a, "random | heuristic | learned");
    eval->add_option("--agent-b", ev_b, "random | heuristic | learned");
    eval->add_option("--deck-a", ev_deck_a, "Agent A deck slug");
    eval->add_option("--deck-b", ev_deck_b, "Agent B deck slug");
    eval->add_option("--checkpoint-a", ev_ck_a, "Checkpoint path for learned agent A");
    eval->add_option("--checkpoint-b", ev_ck_b, "Checkpoint path for learned agent B");
    eval->add_option("--episodes", ev_episodes, "Episodes per seed");
    eval->add_option("--seed", ev_seeds, "Seed list")->delimiter(',');
    eval->add_option("--turn-cap", ev_turn_cap, "Draw after this many turns");
    eval->add_option("--out", ev_out, "Run directory");

    // protocols ----------------------------------------------------------------
    ProtocolFlags hl_flags, ab_flags, tf_flags;
    auto* headline = app.add_subcommand(
        "headline", "Per-deck PPO vs CGFA-PPO protocol with anchors");
    add_protocol_flags(headline, hl_flags);
    std::string hl_fixture;
    headline->add_option("--fixture", hl_fixture,
                         "Report-only: JSON file with a pairwise p-value family");
    auto* ablate = app.add_subcommand("ablate", "Six-variant ablation on the Mono-Red slice");
    add_protocol_flags(ablate, ab_flags);
    auto* transfer = app.add_subcommand(
        "transfer", "Leave-one-out opponent generalisation protocol");
    add_protocol_flags(transfer, tf_flags);

    // report -------------------------------------------------------------------
    auto* report = app.add_subcommand("report", "Re-emit or build reports from fixtures");
    std::string rp_in, rp_headline_fixture, rp_transfer_fixture, rp_out, rp_format = "csv";
    report->add_option("--in", rp_in, "Existing report.json to re-emit");
    report->add_option("--headline-fixture", rp_headline_fixture,
                       "JSON {family, decks, deltas} for Holm adjustment");
    report->add_option("--transfer-fixture", rp_transfer_fixture,
                       "JSON {agents, in, out} win-rate fixture");
    report->add_option("--format", rp_format, "csv | json");
    report->add_option("--out", rp_out, "Output directory");

    // manifest -------------------------------------------------------------------
    auto* manifest = app.add_subcommand("manifest", "Reproducibility manifest tools");
    manifest->require_subcommand(1);
    auto* verify = manifest->add_subcommand("verify",
                                            "Check digests, fingerprints, and replays");
    std::string mf_path;
    verify->add_option("path", mf_path, "Manifest file")->required();

    // export -------------------------------------------------------------------
    auto* exp = app.add_subcommand("export", "Dump bundled data for inspection");
    std::string ex_what, ex_out;
    exp->add_option("what", ex_what,
                    "catalog | decks | action-layout | obs-layout | scm-graph | interventions")
        ->required();
    exp->add_option("--out", ex_out, "Output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        const std::unique_ptr<mtg::ArenaContext> ctx = mtg::ArenaContext::load();

        if (*train) {
            mtg::TrainConfig config;
            config.variant = tr_variant;
            config.deck = mtg::archetype_from_slug(tr_deck);
            if (!tr_opponents.empty()) config.opponents = parse_archetypes(tr_opponents);
            config.scheme = mtg::reward_scheme_from_name(tr_scheme);
            config.total_steps = tr_steps;
            config.seed = tr_seed;
            config.turn_cap = tr_turn_cap;
            config.coeffs.n_steps = tr_n_steps;
            config.policy.hidden = tr_hidden;
            const std::string dir = ensure_run_dir(tr_out, "train-" + tr_variant);

            const mtg::TrainResult result = mtg::train_agent(*ctx, config);

            const json meta = train_config_json(config, "uniform_pool");
            const mtg::Checkpoint ck =
                mtg::make_checkpoint(result.params, result.opt, result.weights, meta.dump());
            mtg::save_checkpoint(dir + "/checkpoint.bin", ck);

            mtg::StatReport run_report;
            run_report.tables.push_back(mtg::calibration_series_table(result.series));
            run_report.tables.push_back(mtg::case_study_table(
                *ctx, result.params, config.coeffs, config.deck, config.opponents.front(),
                config.seed, config.turn_cap));
            mtg::write_report(run_report, dir, "csv");

            if (tr_eval_episodes > 0) {
                std::unique_ptr<mtg::Actor> actor =
                    config.variant == "cwm"
                        ? mtg::make_cwm_actor(*ctx, result.params, result.cwm,
                                              result.weights, config.cwm_lambda)
                        : mtg::make_policy_actor(*ctx, result.params);
                std::ofstream out(dir + "/eval.csv");
                out << "opponent,seed,wins,losses,draws,rate\n";
                for (const mtg::EvalCell& c : mtg::evaluate_vs_pool(
                         *ctx, *actor, config.deck, config.opponents, tr_eval_episodes,
                         {config.seed}, config.turn_cap))
                    out << mtg::archetype_slug(c.opponent) << "," << c.seed << "," << c.wins
                        << "," << c.losses << "," << c.draws << "," << c.rate() << "\n";
            }

            mtg::ManifestInfo info;
            info.run_name = "train-" + tr_variant;
            info.argv = raw_args;
            info.seeds = {tr_seed};
            info.config_json = meta.dump();
            mtg::write_manifest(dir + "/manifest.json", info);
            std::cout << "trained " << tr_variant << " for " << result.steps_done
                      << " steps (" << result.episodes_completed << " episodes); run dir "
                      << dir << "\n";
            return 0;
        }

        if (*eval) {
            mtg::MatchSpec spec;
            if (!ev_spec_path.empty()) {
                spec = mtg::match_spec_from_json(read_text(ev_spec_path));
            } else {
                spec.agent_a.kind = mtg::policy_kind_from_name(ev_a);
                spec.agent_a.deck = mtg::archetype_from_slug(ev_deck_a);
                spec.agent_a.checkpoint = ev_ck_a;
                spec.agent_b.kind = mtg::policy_kind_from_name(ev_b);
                spec.agent_b.deck = mtg::archetype_from_slug(ev_deck_b);
                spec.agent_b.checkpoint = ev_ck_b;
                spec.episodes = ev_episodes;
                spec.seeds = ev_seeds;
                spec.turn_cap = ev_turn_cap;
            }
            const std::string dir = ensure_run_dir(ev_out, "eval");
            const mtg::MatchResult result = mtg::run_match(*ctx, spec);
            write_rows_csv(dir + "/rows.csv", result);
            write_text(dir + "/match_spec.json", mtg::match_spec_to_json(spec));

            mtg::ManifestInfo info;
            info.run_name = "eval";
            info.argv = raw_args;
            info.seeds = spec.seeds;
            info.config_json = mtg::match_spec_to_json(spec);
            info.eval_json = eval_section_json(spec, result).dump();
            mtg::write_manifest(dir + "/manifest.json", info);
            std::cout << "A wins " << result.wins_a << ", B wins " << result.wins_b
                      << ", draws " << result.draws << "; rows in " << dir << "/rows.csv\n";
            return 0;
        }

        if (*headline) {
            if (!hl_fixture.empty()) {
                const mtg::StatReport r = mtg::headline_from_fixture(read_text(hl_fixture));
                mtg::write_report(r, ensure_run_dir(hl_flags.out_dir, "headline"),
                                  hl_flags.format);
                std::cout << "headline fixture report written\n";
                return 0;
            }
            const mtg::ProtocolConfig config = resolve_protocol(hl_flags, "headline");
            finish_protocol_run(*ctx, mtg::run_headline(*ctx, config), config, "headline",
                                hl_flags.format, raw_args);
            return 0;
        }
        if (*ablate) {
            const mtg::ProtocolConfig config = resolve_protocol(ab_flags, "ablate");
            finish_protocol_run(*ctx, mtg::run_ablation(*ctx, config), config, "ablate",
                                ab_flags.format, raw_args);
            return 0;
        }
        if (*transfer) {
            const mtg::ProtocolConfig config = resolve_protocol(tf_flags, "transfer");
            finish_protocol_run(*ctx, mtg::run_transfer(*ctx, config), config, "transfer",
                                tf_flags.format, raw_args);
            return 0;
        }

        if (*report) {
            mtg::StatReport r;
            if (!rp_in.empty()) {
                r = mtg::report_from_json(read_text(rp_in));
            } else if (!rp_headline_fixture.empty()) {
                r = mtg::headline_from_fixture(read_text(rp_headline_fixture));
            } else if (!rp_transfer_fixture.empty()) {
                const json f = json::parse(read_text(rp_transfer_fixture));
                r = mtg::transfer_from_rates(f.at("agents").get<std::vector<std::string>>(),
                                             f.at("in").get<std::vector<double>>(),
                                             f.at("out").get<std::vector<double>>());
            } else {
                throw std::invalid_argument(
                    "report needs --in, --headline-fixture, or --transfer-fixture");
            }
            mtg::write_report(r, ensure_run_dir(rp_out, "report"), rp_format);
            std::cout << "report written\n";
            return 0;
        }

        if (*verify) return run_verify(*ctx, mf_path);

        if (*exp) {
            std::string text;
            if (ex_what == "catalog") text = ctx->catalog.to_json_text();
            else if (ex_what == "decks") text = ctx->decks.to_json_text(ctx->catalog);
            else if (ex_what == "action-layout") text = mtg::action_layout_json();
            else if (ex_what == "obs-layout") text = mtg::Observer::layout_json();
            else if (ex_what == "scm-graph") text = ctx->scm.graph_dot();
            else if (ex_what == "interventions") text = ctx->scm.interventions_json();
            else throw std::invalid_argument("unknown export: " + ex_what);
            if (ex_out.empty()) std::cout << text << "\n";
            else write_text(ex_out, text);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
