#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <mtg/rng.hpp>
#include <mtg/scm.hpp>

using namespace mtg;

namespace {

std::string data_file(const std::string& name) {
    return std::string(MTG_BUNDLED_DATA_DIR) + "/" + name;
}

struct Fixture {
    Catalog cat;
    DeckList decks;
    Engine engine;
    Scm scm;

    Fixture()
        : cat(Catalog::load_file(data_file("cards.json"))),
          decks(DeckList::load_file(data_file("decks.json"), cat)),
          engine(cat),
          scm(engine) {}
};

CausalVars random_vars(Rng& rng) {
    CausalVars vars;
    for (int i = 0; i < kNumVars; ++i) {
        const Var v = static_cast<Var>(i);
        const VarRange r = var_range(v);
        vars[v] = r.lo + (r.hi - r.lo) * rng.next_double();
    }
    return vars;
}

}  // namespace

TEST_CASE("variable names and the factor channel order are frozen") {
    const char* expected[kNumVars] = {
        "mana_t",        "land_drop", "mana_creatures", "mana_t1",  "card_count",
        "has_removal",   "board_press", "threat_density", "card_adv", "tempo",
        "life_buffer",   "removal_avail", "win_prob"};
    for (int i = 0; i < kNumVars; ++i) {
        CHECK(std::string(var_name(static_cast<Var>(i))) == expected[i]);
        CHECK(var_from_name(expected[i]) == static_cast<Var>(i));
    }
    CHECK_THROWS(var_from_name("not_a_variable"));
    CHECK(factor_var(Factor::card_adv) == Var::card_adv);
    CHECK(factor_var(Factor::board_press) == Var::board_press);
    CHECK(factor_var(Factor::tempo) == Var::tempo);
    CHECK(factor_var(Factor::life_buffer) == Var::life_buffer);
    CHECK(factor_var(Factor::threat_density) == Var::threat_density);
    CHECK(factor_var(Factor::removal_avail) == Var::removal_avail);
    CHECK(kNumFactors == 6);
}

TEST_CASE("the causal graph edge set is frozen") {
    Fixture f;
    const std::set<std::pair<int, int>> expected = {
        {(int)Var::mana_t, (int)Var::mana_t1},
        {(int)Var::mana_creatures, (int)Var::mana_t1},
        {(int)Var::land_drop, (int)Var::mana_t1},
        {(int)Var::mana_t, (int)Var::tempo},
        {(int)Var::mana_t1, (int)Var::board_press},
        {(int)Var::mana_t1, (int)Var::threat_density},
        {(int)Var::board_press, (int)Var::card_adv},
        {(int)Var::board_press, (int)Var::tempo},
        {(int)Var::board_press, (int)Var::win_prob},
        {(int)Var::threat_density, (int)Var::win_prob},
        {(int)Var::threat_density, (int)Var::board_press},
        {(int)Var::card_count, (int)Var::card_adv},
        {(int)Var::has_removal, (int)Var::removal_avail},
        {(int)Var::removal_avail, (int)Var::win_prob},
        {(int)Var::card_adv, (int)Var::win_prob},
        {(int)Var::tempo, (int)Var::win_prob},
        {(int)Var::life_buffer, (int)Var::win_prob},
    };
    std::set<std::pair<int, int>> got;
    for (const auto& [a, b] : f.scm.edges()) got.insert({(int)a, (int)b});
    CHECK(got == expected);
}

TEST_CASE("topological order respects every edge and covers every variable") {
    Fixture f;
    const std::vector<Var>& topo = f.scm.topo_order();
    REQUIRE(topo.size() == kNumVars);
    std::array<int, kNumVars> position{};
    for (int i = 0; i < kNumVars; ++i) position[(int)topo[i]] = i;
    for (const auto& [from, to] : f.scm.edges())
        CHECK(position[(int)from] < position[(int)to]);
    for (const auto& [from, to] : f.scm.edges()) {
        const auto& ch = f.scm.children(from);
        CHECK(std::find(ch.begin(), ch.end(), to) != ch.end());
        const auto& pa = f.scm.parents(to);
        CHECK(std::find(pa.begin(), pa.end(), from) != pa.end());
    }
}

TEST_CASE("descendant closure is transitive and acyclic") {
    Fixture f;
    const std::vector<Var> d = f.scm.descendants(Var::mana_t);
    const std::set<Var> ds(d.begin(), d.end());
    CHECK(ds == std::set<Var>{Var::mana_t1, Var::tempo, Var::board_press,
                              Var::threat_density, Var::card_adv, Var::win_prob});
    CHECK(f.scm.descendants(Var::win_prob).empty());
    const std::vector<Var> lb = f.scm.descendants(Var::life_buffer);
    CHECK(std::set<Var>(lb.begin(), lb.end()) == std::set<Var>{Var::win_prob});
}

TEST_CASE("do() changes exactly the intervened variable and its descendants") {
    Fixture f;
    Rng rng(2024);
    for (int i = 0; i < kNumVars; ++i) {
        const Var v = static_cast<Var>(i);
        std::set<int> may_change{(int)v};
        for (Var d : f.scm.descendants(v)) may_change.insert((int)d);
        const VarRange r = var_range(v);
        for (int trial = 0; trial < 100; ++trial) {
            const CausalVars base = random_vars(rng);
            const double value = r.lo + (r.hi - r.lo) * rng.next_double();
            const CausalVars out = f.scm.do_intervene(base, {{v, value}});
            CHECK(out[v] == value);
            for (int k = 0; k < kNumVars; ++k) {
                if (may_change.count(k)) continue;
                CHECK(out.v[k] == base.v[k]);
            }
        }
    }
}

TEST_CASE("do() rejects out-of-range assignments") {
    Fixture f;
    Rng rng(7);
    const CausalVars base = random_vars(rng);
    CHECK_THROWS_AS(f.scm.do_intervene(base, {{Var::land_drop, 2.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(f.scm.do_intervene(base, {{Var::board_press, -21.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(f.scm.do_intervene(base, {{Var::win_prob, 1.5}}),
                    std::invalid_argument);
}

TEST_CASE("structural evaluation is idempotent") {
    Fixture f;
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const CausalVars once = f.scm.structural_eval(random_vars(rng));
        const CausalVars twice = f.scm.structural_eval(once);
        for (int k = 0; k < kNumVars; ++k)
            CHECK(twice.v[k] == doctest::Approx(once.v[k]).epsilon(1e-12));
    }
}

TEST_CASE("extraction matches hand-computed values on a fresh game") {
    Fixture f;
    const GameState s = f.engine.new_game(f.decks.deck(Archetype::mono_red_aggro),
                                          f.decks.deck(Archetype::azorius_control), 6);
    for (int p = 0; p < 2; ++p) {
        const CausalVars vars = f.scm.extract(s, p);
        CHECK(vars[Var::mana_t] == 0.0);
        CHECK(vars[Var::mana_creatures] == 0.0);
        CHECK(vars[Var::card_count] == 7.0);
        CHECK(vars[Var::board_press] == 0.0);
        CHECK(vars[Var::card_adv] == 0.0);
        CHECK(vars[Var::life_buffer] == 0.0);
        CHECK(vars[Var::threat_density] == 0.0);
        CHECK(vars[Var::tempo] == 0.0);
        bool land = false, removal = false;
        for (CardId id : s.players[p].hand) {
            if (f.cat[id].is_land()) land = true;
            if (f.cat[id].is_removal) removal = true;
        }
        CHECK(vars[Var::land_drop] == (land ? 1.0 : 0.0));
        CHECK(vars[Var::has_removal] == (removal ? 1.0 : 0.0));
        CHECK(vars[Var::removal_avail] == vars[Var::has_removal]);
        CHECK(vars[Var::mana_t1] == vars[Var::land_drop]);
        CHECK(vars[Var::win_prob] > 0.0);
        CHECK(vars[Var::win_prob] < 1.0);
    }
}

TEST_CASE("factors read out in the frozen channel order") {
    CausalVars vars;
    vars[Var::card_adv] = 1;
    vars[Var::board_press] = 2;
    vars[Var::tempo] = 3;
    vars[Var::life_buffer] = 4;
    vars[Var::threat_density] = 5;
    vars[Var::removal_avail] = 6;
    const FactorVec fv = vars.factors();
    CHECK(fv == FactorVec{1, 2, 3, 4, 5, 6});
}

TEST_CASE("win probability is monotone in positively weighted factors") {
    Fixture f;
    WinWeights w;
    w.w = {0.5, 0.4, 0.3, 0.2, 0.1, 0.05};
    f.scm.set_weights(w);
    const FactorVec base{0, 0, 0, 0, 0, 0};
    const double p0 = f.scm.win_prob(base);
    for (int k = 0; k < kNumFactors; ++k) {
        FactorVec up = base;
        up[k] += 1.0;
        CHECK(f.scm.win_prob(up) > p0);
    }
    CHECK(p0 == doctest::Approx(0.5));
}

TEST_CASE("fitting the head recovers a planted signal direction") {
    Fixture f;
    Rng rng(314);
    OutcomeBuffer buffer;
    // Wins depend strongly on the first factor and weakly inversely on the
    // fourth; the rest are noise.
    for (int i = 0; i < 1500; ++i) {
        FactorVec fv;
        for (int k = 0; k < kNumFactors; ++k) fv[k] = rng.next_gaussian();
        const double z = 2.0 * fv[0] - 0.8 * fv[3];
        const bool won = rng.next_double() < 1.0 / (1.0 + std::exp(-z));
        buffer.push(fv, won);
    }
    f.scm.fit(buffer);
    const WinWeights& w = f.scm.weights();
    CHECK(w.w[0] > 0.2);
    CHECK(w.w[3] < 0.0);
    CHECK(std::abs(w.w[0]) > std::abs(w.w[1]));
    CHECK(std::abs(w.w[0]) > std::abs(w.w[3]));
    // Held-out accuracy beats coin flipping comfortably.
    int correct = 0, total = 0;
    for (int i = 0; i < 500; ++i) {
        FactorVec fv;
        for (int k = 0; k < kNumFactors; ++k) fv[k] = rng.next_gaussian();
        const double z = 2.0 * fv[0] - 0.8 * fv[3];
        const bool won = rng.next_double() < 1.0 / (1.0 + std::exp(-z));
        const bool pred = f.scm.win_prob(fv) > 0.5;
        correct += (pred == won) ? 1 : 0;
        total += 1;
    }
    CHECK(static_cast<double>(correct) / total > 0.65);
}

TEST_CASE("outcome buffer is a ring that drops the oldest entries") {
    OutcomeBuffer buffer(4);
    for (int i = 0; i < 6; ++i) {
        FactorVec fv{};
        fv[0] = i;
        buffer.push(fv, true);
    }
    CHECK(buffer.size() == 4);
    std::set<double> firsts;
    for (const auto& [fv, won] : buffer.entries()) firsts.insert(fv[0]);
    CHECK(firsts == std::set<double>{2, 3, 4, 5});
}

TEST_CASE("passing intervenes on nothing") {
    Fixture f;
    GameState s = f.engine.new_game(f.decks.deck(Archetype::mono_red_aggro),
                                    f.decks.deck(Archetype::mono_red_aggro), 1);
    f.engine.step(s, action_index(ActionCategory::KEEP, 0));
    f.engine.step(s, action_index(ActionCategory::KEEP, 0));
    REQUIRE(s.phase == Phase::main1);
    CHECK(f.scm.action_intervention(s, 0).empty());
    const FactorVec eff = f.scm.intervention_effect(s, 0);
    for (int k = 0; k < kNumFactors; ++k) CHECK(eff[k] == 0.0);
}

TEST_CASE("playing a land intervenes on the land drop variable") {
    Fixture f;
    Rng rng(55);
    GameState s = f.engine.new_game(f.decks.deck(Archetype::domain_ramp),
                                    f.decks.deck(Archetype::domain_ramp), 2);
    bool found = false;
    for (int step = 0; step < 200 && !s.outcome && !found; ++step) {
        const ActionMask m = f.engine.legal_mask(s);
        for (int slot = 0; slot < 10 && !found; ++slot) {
            const int a = action_index(ActionCategory::PLAY_LAND, slot);
            if (!m.test(a)) continue;
            const Intervention iv = f.scm.action_intervention(s, a);
            REQUIRE(iv.size() == 1);
            CHECK(iv[0].first == Var::land_drop);
            CHECK(iv[0].second == 1.0);
            found = true;
        }
        if (!found)
            f.engine.step(s, f.engine.legal_actions(s)[static_cast<std::size_t>(
                                 rng.next_below(f.engine.legal_actions(s).size()))]);
    }
    CHECK(found);
}

TEST_CASE("the graph exports as dot with every variable named") {
    Fixture f;
    const std::string dot = f.scm.graph_dot();
    CHECK(dot.find("digraph") != std::string::npos);
    for (int i = 0; i < kNumVars; ++i)
        CHECK(dot.find(var_name(static_cast<Var>(i))) != std::string::npos);
}
