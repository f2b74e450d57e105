#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include <mtg/rewards.hpp>
#include <mtg/rng.hpp>

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

int pick_uniform(const std::vector<int>& legal, Rng& rng) {
    return legal[static_cast<std::size_t>(rng.next_below(legal.size()))];
}

CausalVars vars_with(Var v, double x) {
    CausalVars vars;
    vars[v] = x;
    return vars;
}

}  // namespace

TEST_CASE("scheme names round trip") {
    CHECK(std::string(reward_scheme_name(RewardScheme::sparse)) == "sparse");
    CHECK(std::string(reward_scheme_name(RewardScheme::shaped)) == "shaped");
    CHECK(std::string(reward_scheme_name(RewardScheme::dense)) == "dense");
    CHECK(reward_scheme_from_name("sparse") == RewardScheme::sparse);
    CHECK(reward_scheme_from_name("shaped") == RewardScheme::shaped);
    CHECK(reward_scheme_from_name("dense") == RewardScheme::dense);
    CHECK_THROWS(reward_scheme_from_name("bogus"));
}

TEST_CASE("shaping coefficients are frozen") {
    const ShapingCoeffs c;
    CHECK(c.alpha[0] == 0.02);
    CHECK(c.alpha[1] == 0.05);
    CHECK(c.alpha[2] == 0.05);
    CHECK(c.alpha[3] == 0.1);
    CHECK(c.alpha[4] == 0.05);
    CHECK(c.gamma == 0.995);
}

TEST_CASE("the potential is the frozen linear combination") {
    const ShapingCoeffs c;
    CHECK(potential(CausalVars{}, c) == 0.0);
    CHECK(potential(vars_with(Var::mana_t, 3.0), c) == doctest::Approx(0.06));
    CHECK(potential(vars_with(Var::card_adv, 2.0), c) == doctest::Approx(0.10));
    CHECK(potential(vars_with(Var::board_press, -4.0), c) == doctest::Approx(-0.20));
    CHECK(potential(vars_with(Var::tempo, 1.0), c) == doctest::Approx(0.10));
    CHECK(potential(vars_with(Var::life_buffer, 10.0), c) == doctest::Approx(0.50));
    // Variables outside the potential do not contribute.
    CHECK(potential(vars_with(Var::threat_density, 1.0), c) == 0.0);
    CHECK(potential(vars_with(Var::win_prob, 1.0), c) == 0.0);
}

TEST_CASE("sparse reward is the zero-sum game outcome") {
    CHECK(sparse_reward(Outcome::p0_win, 0) == 1.0);
    CHECK(sparse_reward(Outcome::p0_win, 1) == -1.0);
    CHECK(sparse_reward(Outcome::p1_win, 0) == -1.0);
    CHECK(sparse_reward(Outcome::p1_win, 1) == 1.0);
    CHECK(sparse_reward(Outcome::draw, 0) == 0.0);
    CHECK(sparse_reward(Outcome::draw, 1) == 0.0);
}

TEST_CASE("shaped rewards telescope exactly at gamma one") {
    // With gamma = 1 the shaping terms cancel pairwise, so the undiscounted
    // episode return equals the terminal reward no matter the trajectory.
    Fixture f;
    ShapingCoeffs coeffs;
    coeffs.gamma = 1.0;
    const Archetype pool[5] = {Archetype::mono_red_aggro, Archetype::azorius_control,
                               Archetype::dimir_midrange, Archetype::domain_ramp,
                               Archetype::boros_convoke};
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        GameState s = f.engine.new_game(f.decks.deck(pool[seed % 5]),
                                        f.decks.deck(pool[(seed / 5) % 5]), 5000 + seed);
        Rng rng(seed);
        const int perspective = static_cast<int>(seed % 2);
        double episode_return = 0.0;
        CausalVars prev = f.scm.extract(s, perspective);
        while (!s.outcome) {
            f.engine.step(s, pick_uniform(f.engine.legal_actions(s), rng));
            const CausalVars next = f.scm.extract(s, perspective);
            const bool over = s.outcome.has_value();
            const double terminal = over ? sparse_reward(*s.outcome, perspective) : 0.0;
            episode_return += shaped_reward(prev, next, terminal, coeffs, over);
            prev = next;
        }
        const double want = sparse_reward(*s.outcome, perspective);
        CHECK(episode_return == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("shaped reward applies the discount to the next potential") {
    const ShapingCoeffs c;
    const CausalVars a = vars_with(Var::board_press, 2.0);
    const CausalVars b = vars_with(Var::board_press, 5.0);
    const double want = c.gamma * potential(b, c) - potential(a, c) + 0.25;
    CHECK(shaped_reward(a, b, 0.25, c) == doctest::Approx(want).epsilon(1e-12));
    // At episode end the outgoing potential is zero by definition.
    const double want_over = -potential(a, c) + 1.0;
    CHECK(shaped_reward(a, b, 1.0, c, true) == doctest::Approx(want_over).epsilon(1e-12));
}

TEST_CASE("dense bonus prices the step events") {
    const DenseCoeffs d;
    CHECK(d.damage == 0.1);
    CHECK(d.draw == 0.05);
    CHECK(d.creature == 0.05);
    StepEvents e;
    CHECK(dense_reward(e, d) == 0.0);
    e.damage_to_opponent = 3;
    e.cards_drawn = 2;
    e.creatures_entered = 1;
    e.permanents_destroyed = 5;  // unpriced
    e.life_gained = 4;           // unpriced
    CHECK(dense_reward(e, d) == doctest::Approx(0.3 + 0.1 + 0.05));
}

TEST_CASE("factor rewards are the componentwise potential differences") {
    const FactorVec before{1, 2, 3, 4, 5, 6};
    const FactorVec after{2, 1, 3, 7, 5, 0};
    const FactorVec r = factor_rewards(before, after);
    CHECK(r == FactorVec{1, -1, 0, 3, 0, -6});
}

TEST_CASE("step_reward composes the three schemes") {
    const ShapingCoeffs c;
    const DenseCoeffs d;
    const CausalVars a = vars_with(Var::card_adv, 1.0);
    const CausalVars b = vars_with(Var::card_adv, 3.0);
    StepEvents e;
    e.damage_to_opponent = 2;
    const double terminal = 1.0;
    CHECK(step_reward(RewardScheme::sparse, a, b, e, terminal, c, d) == terminal);
    CHECK(step_reward(RewardScheme::shaped, a, b, e, terminal, c, d) ==
          doctest::Approx(shaped_reward(a, b, terminal, c)));
    CHECK(step_reward(RewardScheme::dense, a, b, e, terminal, c, d) ==
          doctest::Approx(shaped_reward(a, b, terminal, c) + dense_reward(e, d)));
}

TEST_CASE("nonterminal sparse steps pay nothing") {
    const ShapingCoeffs c;
    const DenseCoeffs d;
    CHECK(step_reward(RewardScheme::sparse, CausalVars{}, CausalVars{}, StepEvents{},
                      0.0, c, d) == 0.0);
}
