#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>
#include <mtg/observe.hpp>
#include <mtg/rng.hpp>

using namespace mtg;
using nlohmann::json;

namespace {

std::string data_file(const std::string& name) {
    return std::string(MTG_BUNDLED_DATA_DIR) + "/" + name;
}

struct Fixture {
    Catalog cat;
    DeckList decks;
    Engine engine;
    Observer obs;

    Fixture()
        : cat(Catalog::load_file(data_file("cards.json"))),
          decks(DeckList::load_file(data_file("decks.json"), cat)),
          engine(cat),
          obs(engine) {}
};

int pick_uniform(const std::vector<int>& legal, Rng& rng) {
    return legal[static_cast<std::size_t>(rng.next_below(legal.size()))];
}

bool vectors_equal(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

}  // namespace

TEST_CASE("layout segments tile the full vector") {
    const auto& layout = Observer::layout();
    REQUIRE(!layout.empty());
    int expected = 0;
    for (const ObsSegment& seg : layout) {
        CHECK(seg.offset == expected);
        CHECK(seg.length > 0);
        CHECK(!seg.name.empty());
        CHECK(!seg.semantics.empty());
        expected += seg.length;
    }
    CHECK(expected == kObsDim);
    CHECK(kObsDim == 3077);
}

TEST_CASE("layout json matches the table and carries the fingerprint") {
    const json j = json::parse(Observer::layout_json());
    CHECK(j["dim"].get<int>() == kObsDim);
    const auto& layout = Observer::layout();
    REQUIRE(j["segments"].size() == layout.size());
    for (std::size_t i = 0; i < layout.size(); ++i) {
        CHECK(j["segments"][i]["name"].get<std::string>() == layout[i].name);
        CHECK(j["segments"][i]["offset"].get<int>() == layout[i].offset);
        CHECK(j["segments"][i]["length"].get<int>() == layout[i].length);
    }
    CHECK(Observer::layout_fingerprint() != 0);
    CHECK(Observer::layout_fingerprint() == Observer::layout_fingerprint());
}

TEST_CASE("encodings are finite, bounded and deterministic") {
    Fixture f;
    GameState s = f.engine.new_game(f.decks.deck(Archetype::mono_red_aggro),
                                    f.decks.deck(Archetype::dimir_midrange), 99);
    Rng rng(1);
    for (int step = 0; step < 300 && !s.outcome; ++step) {
        for (int p = 0; p < 2; ++p) {
            const std::vector<double> v = f.obs.encode(s, p);
            REQUIRE(v.size() == static_cast<std::size_t>(kObsDim));
            for (const double x : v) {
                CHECK(std::isfinite(x));
                CHECK(x >= -1.0001);
                CHECK(x <= 25.0);
            }
            CHECK(vectors_equal(v, f.obs.encode(s, p)));
            std::vector<double> into(kObsDim, -123.0);
            f.obs.encode_into(s, p, into.data());
            CHECK(vectors_equal(v, into));
        }
        f.engine.step(s, pick_uniform(f.engine.legal_actions(s), rng));
    }
}

TEST_CASE("the two perspectives are exact mirrors") {
    Fixture f;
    const Archetype pool[5] = {Archetype::mono_red_aggro, Archetype::azorius_control,
                               Archetype::dimir_midrange, Archetype::domain_ramp,
                               Archetype::boros_convoke};
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        GameState s = f.engine.new_game(f.decks.deck(pool[seed % 5]),
                                        f.decks.deck(pool[(seed + 2) % 5]), 200 + seed);
        Rng rng(seed);
        for (int step = 0; step < 150 && !s.outcome; ++step) {
            const GameState m = f.engine.mirrored(s);
            CHECK(vectors_equal(f.obs.encode(s, 1), f.obs.encode(m, 0)));
            CHECK(vectors_equal(f.obs.encode(s, 0), f.obs.encode(m, 1)));
            f.engine.step(s, pick_uniform(f.engine.legal_actions(s), rng));
        }
    }
}

TEST_CASE("hidden zones never leak into the observation") {
    Fixture f;
    GameState s = f.engine.new_game(f.decks.deck(Archetype::azorius_control),
                                    f.decks.deck(Archetype::boros_convoke), 77);
    Rng rng(3);
    int checked = 0;
    for (int step = 0; step < 250 && !s.outcome; ++step) {
        for (int p = 0; p < 2; ++p) {
            const std::vector<double> base = f.obs.encode(s, p);
            GameState tampered = s;
            // Reversing the viewer's own library must be invisible: draw order
            // is hidden information even about one's own deck.
            std::reverse(tampered.players[p].library.begin(),
                         tampered.players[p].library.end());
            CHECK(vectors_equal(base, f.obs.encode(tampered, p)));
            // Swapping two distinct cards in the opponent's hand must be
            // invisible: only the count is public.
            GameState tampered2 = s;
            auto& opp_hand = tampered2.players[1 - p].hand;
            bool swapped = false;
            for (std::size_t i = 0; i + 1 < opp_hand.size() && !swapped; ++i)
                for (std::size_t k = i + 1; k < opp_hand.size() && !swapped; ++k)
                    if (opp_hand[i] != opp_hand[k]) {
                        std::swap(opp_hand[i], opp_hand[k]);
                        swapped = true;
                    }
            if (swapped) {
                CHECK(vectors_equal(base, f.obs.encode(tampered2, p)));
                checked += 1;
            }
            // Replacing the opponent's whole hand with other cards of the same
            // size must be invisible too.
            GameState tampered3 = s;
            auto& h3 = tampered3.players[1 - p].hand;
            if (!h3.empty() && !tampered3.players[1 - p].library.empty()) {
                h3.assign(h3.size(), tampered3.players[1 - p].library.front());
                CHECK(vectors_equal(base, f.obs.encode(tampered3, p)));
            }
        }
        f.engine.step(s, pick_uniform(f.engine.legal_actions(s), rng));
    }
    CHECK(checked > 50);
}

TEST_CASE("public state changes do show up") {
    Fixture f;
    GameState s = f.engine.new_game(f.decks.deck(Archetype::mono_red_aggro),
                                    f.decks.deck(Archetype::mono_red_aggro), 13);
    const std::vector<double> base = f.obs.encode(s, 0);
    GameState hurt = s;
    hurt.players[1].life -= 5;
    CHECK(!vectors_equal(base, f.obs.encode(hurt, 0)));
    GameState own_hand = s;
    own_hand.players[0].hand.pop_back();
    CHECK(!vectors_equal(base, f.obs.encode(own_hand, 0)));
    // The opponent losing a hand card changes the public count.
    GameState opp_hand = s;
    opp_hand.players[1].hand.pop_back();
    CHECK(!vectors_equal(base, f.obs.encode(opp_hand, 0)));
}
