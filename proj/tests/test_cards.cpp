#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>
#include <string>

#include <json.hpp>
#include <mtg/cards.hpp>

using namespace mtg;
using nlohmann::json;

TEST_CASE("catalog loads with 56 unique definitions") {
    const Catalog cat = Catalog::load_file(data_file("cards.json"));
    CHECK(cat.size() == 56);
    std::set<std::string> slugs;
    for (CardId id = 0; id < cat.size(); ++id) {
        const CardDef& d = cat[id];
        CHECK(!d.slug.empty());
        CHECK(!d.name.empty());
        slugs.insert(d.slug);
        CHECK(cat.by_slug(d.slug).slug == d.slug);
    }
    CHECK(slugs.size() == 56);
}

TEST_CASE("all five decks load and sum to 60 cards") {
    const Catalog cat = Catalog::load_file(data_file("cards.json"));
    const DeckList decks = DeckList::load_file(data_file("decks.json"), cat);
    CHECK(decks.all().size() == 5);
    for (const Archetype a : {Archetype::mono_red_aggro, Archetype::azorius_control,
                              Archetype::dimir_midrange, Archetype::domain_ramp,
                              Archetype::boros_convoke}) {
        const Deck& deck = decks.deck(a);
        CHECK(deck.cards.size() == 60);
        // Every deck plays lands plus at least one nonland card.
        int lands = 0;
        for (const CardId id : deck.cards)
            if (cat[id].is_land()) lands += 1;
        CHECK(lands >= 20);
        CHECK(lands <= 30);
    }
}

TEST_CASE("deck entries reference real catalog cards, no tokens") {
    const Catalog cat = Catalog::load_file(data_file("cards.json"));
    const DeckList decks = DeckList::load_file(data_file("decks.json"), cat);
    for (const Deck& deck : decks.all())
        for (const CardId id : deck.cards) {
            REQUIRE(id < cat.size());
            CHECK(!cat[id].is_token);
        }
}

TEST_CASE("catalog round-trips through its json export") {
    const Catalog cat = Catalog::load_file(data_file("cards.json"));
    const Catalog again = Catalog::load_json_text(cat.to_json_text());
    REQUIRE(again.size() == cat.size());
    for (CardId id = 0; id < cat.size(); ++id) {
        CHECK(again[id].slug == cat[id].slug);
        CHECK(again[id].kind == cat[id].kind);
        CHECK(again[id].cost.generic == cat[id].cost.generic);
        CHECK(again[id].power == cat[id].power);
        CHECK(again[id].toughness == cat[id].toughness);
        CHECK(again[id].effects.size() == cat[id].effects.size());
    }
}

TEST_CASE("deck export names cards by slug and reimports identically") {
    const Catalog cat = Catalog::load_file(data_file("cards.json"));
    const DeckList decks = DeckList::load_file(data_file("decks.json"), cat);
    const json j = json::parse(decks.to_json_text(cat));
    REQUIRE(j.contains("decks"));
    CHECK(j["decks"].size() == 5);
    for (const auto& d : j["decks"]) {
        int total = 0;
        for (const auto& [slug, count] : d["cards"].items()) {
            CHECK(cat.find_slug(slug).has_value());
            total += count.get<int>();
        }
        CHECK(total == 60);
    }
}

TEST_CASE("archetype slugs round trip") {
    for (const Archetype a : {Archetype::mono_red_aggro, Archetype::azorius_control,
                              Archetype::dimir_midrange, Archetype::domain_ramp,
                              Archetype::boros_convoke}) {
        CHECK(archetype_from_slug(archetype_slug(a)) == a);
    }
    CHECK_THROWS(archetype_from_slug("frobnicate"));
}

TEST_CASE("unknown slug lookups fail loudly") {
    const Catalog cat = Catalog::load_file(data_file("cards.json"));
    CHECK(!cat.find_slug("no_such_card").has_value());
    CHECK_THROWS(cat.by_slug("no_such_card"));
}

TEST_CASE("malformed catalog json is rejected") {
    CHECK_THROWS(Catalog::load_json_text("{\"cards\": [{\"slug\": 7}]}"));
    CHECK_THROWS(Catalog::load_json_text("not json"));
}
