#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "mtg/engine.hpp"

namespace mtg {

enum class Var : std::uint8_t {
    mana_t = 0,
    land_drop = 1,
    mana_creatures = 2,
    mana_t1 = 3,
    card_count = 4,
    has_removal = 5,
    board_press = 6,
    threat_density = 7,
    card_adv = 8,
    tempo = 9,
    life_buffer = 10,
    removal_avail = 11,
    win_prob = 12,
};
constexpr int kNumVars = 13;

const char* var_name(Var v);
Var var_from_name(const std::string& name);

/// The six strategic factors, in the frozen reward/advantage channel order.
enum class Factor : std::uint8_t {
    card_adv = 0,
    board_press = 1,
    tempo = 2,
    life_buffer = 3,
    threat_density = 4,
    removal_avail = 5,
};
constexpr int kNumFactors = 6;

Var factor_var(Factor f);
const char* factor_name(Factor f);

struct VarRange {
    double lo;
    double hi;
};
VarRange var_range(Var v);

struct CausalVars {
    std::array<double, kNumVars> v{};

    double& operator[](Var var) { return v[static_cast<int>(var)]; }
    double operator[](Var var) const { return v[static_cast<int>(var)]; }
    std::array<double, kNumFactors> factors() const;
    bool operator==(const CausalVars& other) const { return v == other.v; }
};

using FactorVec = std::array<double, kNumFactors>;

/// Logistic win-probability head over z-scored factors.
struct WinWeights {
    std::array<double, kNumFactors> w{0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
    double intercept = 0.0;
    std::array<double, kNumFactors> mean{};
    std::array<double, kNumFactors> stdev{1, 1, 1, 1, 1, 1};
};

/// Ring buffer of terminal factor vectors with outcomes; drawn games are skipped.
class OutcomeBuffer {
  public:
    explicit OutcomeBuffer(std::size_t capacity = 2000) : capacity_(capacity) {}
    void push(const FactorVec& factors, bool won);
    std::size_t size() const { return entries_.size(); }
    const std::vector<std::pair<FactorVec, bool>>& entries() const { return entries_; }

  private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<std::pair<FactorVec, bool>> entries_;
};

using Intervention = std::vector<std::pair<Var, double>>;

/**
 * The structural causal model: the fixed variable graph, the structural
 * equations, a do() operator that re-evaluates exactly the descendants of the
 * intervened variables, and the online win-probability head.
 */
class Scm {
  public:
    explicit Scm(const Engine& engine);
    Scm(const Engine& engine, const std::string& interventions_json_text);

    // graph
    const std::vector<std::pair<Var, Var>>& edges() const { return edges_; }
    const std::vector<Var>& parents(Var v) const;
    const std::vector<Var>& children(Var v) const;
    std::vector<Var> descendants(Var v) const;
    const std::vector<Var>& topo_order() const { return topo_; }
    std::string graph_dot() const;

    // state reading and equations
    CausalVars extract(const GameState& state, int perspective) const;
    double structural_value(Var v, const CausalVars& vars) const;
    CausalVars structural_eval(const CausalVars& vars) const;

    /// Pearl-style do(): assigned variables fixed, descendants re-evaluated in
    /// topological order, everything else untouched. Throws on range violation.
    CausalVars do_intervene(const CausalVars& vars, const Intervention& assignments) const;

    /// The intervention an action would perform, per the shipped mapping table.
    Intervention action_intervention(const GameState& state, int action) const;

    /// epsilon_k(s, a): predicted factor deltas for taking `action` in `state`.
    FactorVec intervention_effect(const GameState& state, int action) const;

    // win probability head
    const WinWeights& weights() const { return weights_; }
    void set_weights(const WinWeights& w) { weights_ = w; }
    double win_prob(const FactorVec& factors) const;
    /// 200 full-batch SGD steps at lr 0.01 on z-scored features; no-op when empty.
    void fit(const OutcomeBuffer& buffer);

    std::string interventions_json() const { return interventions_text_; }

  private:
    struct CardIntervention {
        enum class Kind { none, damage, destroy, board_wipe, draw } kind = Kind::none;
        int amount = 0;
    };

    void build_graph();
    void load_interventions(const std::string& text);
    const CardIntervention& card_intervention(CardId id) const;
    Intervention target_intervention(const GameState& state, const CausalVars& vars,
                                     const PendingSpell& spell, int target_code) const;

    const Engine& engine_;
    WinWeights weights_;
    std::vector<std::pair<Var, Var>> edges_;
    std::array<std::vector<Var>, kNumVars> parents_;
    std::array<std::vector<Var>, kNumVars> children_;
    std::vector<Var> topo_;
    std::vector<CardIntervention> card_interventions_;  // by CardId
    std::string interventions_text_;
};

}  // namespace mtg
