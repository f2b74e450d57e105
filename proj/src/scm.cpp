#include "mtg/scm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace mtg {

namespace {

double clip(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr double kStdFloor = 1e-6;

}  // namespace

const char* var_name(Var v) {
    static const char* names[] = {"mana_t",      "land_drop",     "mana_creatures",
                                  "mana_t1",     "card_count",    "has_removal",
                                  "board_press", "threat_density", "card_adv",
                                  "tempo",       "life_buffer",   "removal_avail",
                                  "win_prob"};
    return names[static_cast<int>(v)];
}

Var var_from_name(const std::string& name) {
    for (int i = 0; i < kNumVars; ++i)
        if (name == var_name(static_cast<Var>(i))) return static_cast<Var>(i);
    throw std::invalid_argument("unknown causal variable '" + name + "'");
}

Var factor_var(Factor f) {
    static const Var map[] = {Var::card_adv,    Var::board_press, Var::tempo,
                              Var::life_buffer, Var::threat_density, Var::removal_avail};
    return map[static_cast<int>(f)];
}

const char* factor_name(Factor f) { return var_name(factor_var(f)); }

VarRange var_range(Var v) {
    switch (v) {
        case Var::mana_t:
        case Var::mana_creatures:
        case Var::mana_t1:
            return {0, 10};
        case Var::land_drop:
        case Var::has_removal:
        case Var::removal_avail:
            return {0, 1};
        case Var::card_count:
            return {0, 15};
        case Var::board_press:
        case Var::life_buffer:
            return {-20, 20};
        case Var::threat_density:
        case Var::win_prob:
            return {0, 1};
        case Var::card_adv:
            return {-10, 10};
        case Var::tempo:
            return {-1, 1};
    }
    throw std::logic_error("unreachable");
}

std::array<double, kNumFactors> CausalVars::factors() const {
    std::array<double, kNumFactors> out;
    for (int k = 0; k < kNumFactors; ++k) out[k] = (*this)[factor_var(static_cast<Factor>(k))];
    return out;
}

void OutcomeBuffer::push(const FactorVec& factors, bool won) {
    if (capacity_ == 0) return;
    if (entries_.size() < capacity_) {
        entries_.emplace_back(factors, won);
    } else {
        entries_[next_] = {factors, won};
    }
    next_ = (next_ + 1) % capacity_;
}

Scm::Scm(const Engine& engine) : Scm(engine, std::string()) {}

Scm::Scm(const Engine& engine, const std::string& interventions_json_text) : engine_(engine) {
    build_graph();
    std::string text = interventions_json_text;
    if (text.empty()) {
        std::ifstream in(data_file("interventions.json"));
        if (!in) throw std::runtime_error("cannot open " + data_file("interventions.json"));
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    load_interventions(text);
}

void Scm::build_graph() {
    edges_ = {
        {Var::mana_t, Var::mana_t1},
        {Var::mana_creatures, Var::mana_t1},
        {Var::land_drop, Var::mana_t1},
        {Var::mana_t, Var::tempo},
        {Var::mana_t1, Var::board_press},
        {Var::mana_t1, Var::threat_density},
        {Var::board_press, Var::card_adv},
        {Var::board_press, Var::tempo},
        {Var::board_press, Var::win_prob},
        {Var::threat_density, Var::win_prob},
        {Var::threat_density, Var::board_press},
        {Var::card_count, Var::card_adv},
        {Var::has_removal, Var::removal_avail},
        {Var::removal_avail, Var::win_prob},
        {Var::card_adv, Var::win_prob},
        {Var::tempo, Var::win_prob},
        {Var::life_buffer, Var::win_prob},
    };
    for (const auto& [from, to] : edges_) {
        children_[static_cast<int>(from)].push_back(to);
        parents_[static_cast<int>(to)].push_back(from);
    }
    // Kahn's algorithm with variable-index tie-breaking: a fixed, documented order.
    std::array<int, kNumVars> indeg{};
    for (const auto& [from, to] : edges_) indeg[static_cast<int>(to)] += 1;
    std::set<int> ready;
    for (int i = 0; i < kNumVars; ++i)
        if (indeg[i] == 0) ready.insert(i);
    while (!ready.empty()) {
        const int i = *ready.begin();
        ready.erase(ready.begin());
        topo_.push_back(static_cast<Var>(i));
        for (Var child : children_[i])
            if (--indeg[static_cast<int>(child)] == 0) ready.insert(static_cast<int>(child));
    }
    if (topo_.size() != kNumVars) throw std::logic_error("causal graph has a cycle");
}

const std::vector<Var>& Scm::parents(Var v) const { return parents_[static_cast<int>(v)]; }
const std::vector<Var>& Scm::children(Var v) const { return children_[static_cast<int>(v)]; }

std::vector<Var> Scm::descendants(Var v) const {
    std::array<bool, kNumVars> seen{};
    std::vector<Var> stack = {v};
    while (!stack.empty()) {
        const Var cur = stack.back();
        stack.pop_back();
        for (Var child : children_[static_cast<int>(cur)])
            if (!seen[static_cast<int>(child)]) {
                seen[static_cast<int>(child)] = true;
                stack.push_back(child);
            }
    }
    std::vector<Var> out;  // topological order, for deterministic re-evaluation
    for (Var t : topo_)
        if (seen[static_cast<int>(t)]) out.push_back(t);
    return out;
}

std::string Scm::graph_dot() const {
    std::ostringstream out;
    out << "digraph causal_model {\n  rankdir=TB;\n";
    for (int i = 0; i < kNumVars; ++i)
        out << "  " << var_name(static_cast<Var>(i)) << ";\n";
    for (const auto& [from, to] : edges_)
        out << "  " << var_name(from) << " -> " << var_name(to) << ";\n";
    out << "}\n";
    return out.str();
}

CausalVars Scm::extract(const GameState& state, int perspective) const {
    const Catalog& cat = engine_.catalog();
    const PlayerState& own = state.players[perspective];
    const PlayerState& opp = state.players[1 - perspective];
    CausalVars vars;

    int own_mana = 0, opp_mana = 0, own_mana_creat = 0;
    int own_power = 0, opp_power = 0;
    int own_threats = 0;
    for (const auto& perm : own.battlefield) {
        const CardDef& d = cat[perm.card];
        if (d.mana_producer) {
            ++own_mana;
            if (d.is_creature()) ++own_mana_creat;
        }
        if (d.is_creature()) own_power += effective_power(perm, d);
        if (d.is_threat) ++own_threats;
    }
    for (const auto& perm : opp.battlefield) {
        const CardDef& d = cat[perm.card];
        if (d.mana_producer) ++opp_mana;
        if (d.is_creature()) opp_power += effective_power(perm, d);
    }
    bool land_in_hand = false, removal_in_hand = false;
    for (CardId id : own.hand) {
        if (cat[id].is_land()) land_in_hand = true;
        if (cat[id].is_removal) removal_in_hand = true;
    }

    vars[Var::mana_t] = clip(own_mana, 0, 10);
    vars[Var::land_drop] = land_in_hand ? 1.0 : 0.0;
    vars[Var::mana_creatures] = clip(own_mana_creat, 0, 10);
    vars[Var::card_count] = clip(static_cast<double>(own.hand.size()), 0, 15);
    vars[Var::has_removal] = removal_in_hand ? 1.0 : 0.0;
    vars[Var::board_press] = clip(own_power - opp_power, -20, 20);
    vars[Var::threat_density] =
        static_cast<double>(own_threats) /
        std::max<std::size_t>(1, own.battlefield.size());
    vars[Var::card_adv] = clip(static_cast<double>(own.battlefield.size()) -
                                   static_cast<double>(opp.battlefield.size()),
                               -10, 10);
    vars[Var::tempo] =
        clip(own.mana_spent_this_turn / std::max(1.0, vars[Var::mana_t]) -
                 opp.mana_spent_this_turn / std::max(1.0, static_cast<double>(opp_mana)),
             -1, 1);
    vars[Var::life_buffer] = clip(own.life - opp.life, -20, 20);
    vars[Var::mana_t1] = structural_value(Var::mana_t1, vars);
    vars[Var::removal_avail] = structural_value(Var::removal_avail, vars);
    vars[Var::win_prob] = structural_value(Var::win_prob, vars);
    return vars;
}

double Scm::structural_value(Var v, const CausalVars& vars) const {
    switch (v) {
        case Var::mana_t1:
            return clip(vars[Var::mana_t] + vars[Var::land_drop] + vars[Var::mana_creatures],
                        0, 10);
        case Var::removal_avail:
            return vars[Var::has_removal];
        case Var::win_prob:
            return win_prob(vars.factors());
        default:
            // Measured from game state; as an equation over the variable space
            // it is the identity, so re-evaluation returns the current value.
            return vars[v];
    }
}

CausalVars Scm::structural_eval(const CausalVars& vars) const {
    CausalVars out = vars;
    for (Var v : topo_) out[v] = structural_value(v, out);
    return out;
}

CausalVars Scm::do_intervene(const CausalVars& vars, const Intervention& assignments) const {
    std::array<bool, kNumVars> fixed{};
    std::array<bool, kNumVars> dirty{};
    CausalVars out = vars;
    for (const auto& [v, value] : assignments) {
        const VarRange r = var_range(v);
        if (value < r.lo || value > r.hi)
            throw std::invalid_argument(std::string("do(") + var_name(v) + " = " +
                                        std::to_string(value) + ") outside [" +
                                        std::to_string(r.lo) + ", " + std::to_string(r.hi) +
                                        "]");
        out[v] = value;
        fixed[static_cast<int>(v)] = true;
        for (Var d : descendants(v)) dirty[static_cast<int>(d)] = true;
    }
    for (Var v : topo_) {
        if (!dirty[static_cast<int>(v)] || fixed[static_cast<int>(v)]) continue;
        out[v] = structural_value(v, out);
    }
    return out;
}

void Scm::load_interventions(const std::string& text) {
    const nlohmann::json doc = nlohmann::json::parse(text);
    if (doc.at("schema_version").get<int>() != 1)
        throw std::runtime_error("unsupported interventions schema version");
    interventions_text_ = text;
    const Catalog& cat = engine_.catalog();
    card_interventions_.assign(cat.size(), {});
    const auto& cards = doc.at("cards");
    for (const auto& def : cat.all()) {
        if (!cards.contains(def.slug))
            throw std::runtime_error("interventions table missing card '" + def.slug + "'");
        const auto& jc = cards.at(def.slug);
        const std::string kind = jc.at("kind").get<std::string>();
        CardIntervention ci;
        if (kind == "none")
            ci.kind = CardIntervention::Kind::none;
        else if (kind == "damage")
            ci.kind = CardIntervention::Kind::damage;
        else if (kind == "destroy")
            ci.kind = CardIntervention::Kind::destroy;
        else if (kind == "board_wipe")
            ci.kind = CardIntervention::Kind::board_wipe;
        else if (kind == "draw")
            ci.kind = CardIntervention::Kind::draw;
        else
            throw std::runtime_error("unknown intervention kind '" + kind + "' for '" +
                                     def.slug + "'");
        ci.amount = jc.value("amount", 0);
        card_interventions_[def.id] = ci;
    }
    if (!doc.at("actions").contains("PLAY_LAND"))
        throw std::runtime_error("interventions table missing PLAY_LAND");
}

const Scm::CardIntervention& Scm::card_intervention(CardId id) const {
    return card_interventions_.at(id);
}

Intervention Scm::target_intervention(const GameState& state, const CausalVars& vars,
                                      const PendingSpell& spell, int target_code) const {
    const Catalog& cat = engine_.catalog();
    const CardIntervention& ci = card_intervention(spell.card);
    Intervention out;
    const auto clip_var = [&](Var v, double value) {
        const VarRange r = var_range(v);
        out.emplace_back(v, clip(value, r.lo, r.hi));
    };

    const bool targets_player =
        target_code == kTargetOwnPlayerSlot || target_code == kTargetOppPlayerSlot;
    if (ci.kind == CardIntervention::Kind::damage && targets_player) {
        const double delta = target_code == kTargetOppPlayerSlot ? ci.amount : -ci.amount;
        clip_var(Var::life_buffer, vars[Var::life_buffer] + delta);
        return out;
    }
    if ((ci.kind == CardIntervention::Kind::damage ||
         ci.kind == CardIntervention::Kind::destroy) &&
        !targets_player) {
        const bool own_side = target_code < kBattlefieldSlots;
        const int owner = own_side ? spell.caster : 1 - spell.caster;
        const int slot = own_side ? target_code : target_code - kBattlefieldSlots;
        const Permanent* perm = state.players[owner].find(slot);
        if (!perm) return out;
        const CardDef& d = cat[perm->card];
        bool lethal = ci.kind == CardIntervention::Kind::destroy;
        if (ci.kind == CardIntervention::Kind::damage)
            lethal = ci.amount >= effective_toughness(*perm, d) - perm->damage;
        if (!lethal) return out;  // non-lethal damage predicts no factor movement
        const double sign = own_side ? -1.0 : 1.0;
        if (d.is_creature())
            clip_var(Var::board_press,
                     vars[Var::board_press] + sign * effective_power(*perm, d));
        clip_var(Var::card_adv, vars[Var::card_adv] + sign);
        return out;
    }
    return out;
}

Intervention Scm::action_intervention(const GameState& state, int action) const {
    const Catalog& cat = engine_.catalog();
    const int p = state.decision;
    const PlayerState& me = state.players[p];
    const ActionCategory category = action_category(action);
    const int slot = action_slot(action);
    CausalVars vars = extract(state, p);
    Intervention out;
    const auto clip_var = [&](Var v, double value) {
        const VarRange r = var_range(v);
        out.emplace_back(v, clip(value, r.lo, r.hi));
    };

    switch (category) {
        case ActionCategory::PLAY_LAND:
            out.emplace_back(Var::land_drop, 1.0);
            return out;
        case ActionCategory::CAST_SORCERY:
        case ActionCategory::CAST_INSTANT: {
            if (state.pending == PendingKind::respond) return out;  // counters: empty
            if (slot >= static_cast<int>(me.hand.size())) return out;
            const CardId card = me.hand[static_cast<std::size_t>(slot)];
            const CardIntervention& ci = card_intervention(card);
            if (ci.kind == CardIntervention::Kind::draw) {
                clip_var(Var::card_count, vars[Var::card_count] + ci.amount);
                clip_var(Var::card_adv, vars[Var::card_adv] + ci.amount);
                return out;
            }
            if (ci.kind == CardIntervention::Kind::board_wipe) {
                int own_creat = 0, opp_creat = 0, own_surviving_threats = 0;
                for (const auto& perm : me.battlefield) {
                    const CardDef& d = cat[perm.card];
                    if (d.is_creature())
                        ++own_creat;
                    else if (d.is_threat)
                        ++own_surviving_threats;
                }
                for (const auto& perm : state.players[1 - p].battlefield)
                    if (cat[perm.card].is_creature()) ++opp_creat;
                const double own_after = static_cast<double>(me.battlefield.size()) - own_creat;
                const double opp_after =
                    static_cast<double>(state.players[1 - p].battlefield.size()) - opp_creat;
                clip_var(Var::board_press, 0.0);
                clip_var(Var::card_adv, own_after - opp_after);
                clip_var(Var::threat_density,
                         own_surviving_threats / std::max(1.0, own_after));
                return out;
            }
            return out;  // targeted damage/destroy attach to the TARGET action
        }
        case ActionCategory::TARGET: {
            if (!state.spell) return out;
            return target_intervention(state, vars, *state.spell, slot);
        }
        default:
            return out;  // utility actions: empty intervention
    }
}

FactorVec Scm::intervention_effect(const GameState& state, int action) const {
    const CausalVars before = extract(state, state.decision);
    const Intervention iv = action_intervention(state, action);
    FactorVec out{};
    if (iv.empty()) return out;
    const CausalVars after = do_intervene(before, iv);
    for (int k = 0; k < kNumFactors; ++k) {
        const Var v = factor_var(static_cast<Factor>(k));
        out[k] = after[v] - before[v];
    }
    return out;
}

double Scm::win_prob(const FactorVec& factors) const {
    double z = weights_.intercept;
    for (int k = 0; k < kNumFactors; ++k)
        z += weights_.w[k] * (factors[k] - weights_.mean[k]) /
             std::max(kStdFloor, weights_.stdev[k]);
    return sigmoid(z);
}

void Scm::fit(const OutcomeBuffer& buffer) {
    const auto& entries = buffer.entries();
    if (entries.empty()) return;
    const double n = static_cast<double>(entries.size());

    WinWeights next = weights_;
    for (int k = 0; k < kNumFactors; ++k) {
        double mean = 0.0;
        for (const auto& [f, won] : entries) mean += f[k];
        mean /= n;
        double var = 0.0;
        for (const auto& [f, won] : entries) var += (f[k] - mean) * (f[k] - mean);
        next.mean[k] = mean;
        next.stdev[k] = std::max(kStdFloor, std::sqrt(var / n));
    }

    constexpr int kSteps = 200;
    constexpr double kLr = 0.01;
    for (int step = 0; step < kSteps; ++step) {
        std::array<double, kNumFactors> grad{};
        double grad_b = 0.0;
        for (const auto& [f, won] : entries) {
            double z = next.intercept;
            std::array<double, kNumFactors> zs;
            for (int k = 0; k < kNumFactors; ++k) {
                zs[k] = (f[k] - next.mean[k]) / next.stdev[k];
                z += next.w[k] * zs[k];
            }
            const double err = sigmoid(z) - (won ? 1.0 : 0.0);
            for (int k = 0; k < kNumFactors; ++k) grad[k] += err * zs[k];
            grad_b += err;
        }
        for (int k = 0; k < kNumFactors; ++k) next.w[k] -= kLr * grad[k] / n;
        next.intercept -= kLr * grad_b / n;
    }
    weights_ = next;
}

}  // namespace mtg
