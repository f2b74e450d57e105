#include "mtg/cards.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace mtg {

using nlohmann::json;

namespace {

const std::unordered_map<std::string, CardKind> kKindNames = {
    {"land", CardKind::land},
    {"creature", CardKind::creature},
    {"instant", CardKind::instant},
    {"sorcery", CardKind::sorcery},
    {"enchantment", CardKind::enchantment},
    {"planeswalker", CardKind::planeswalker},
};

const std::unordered_map<std::string, TargetKind> kTargetNames = {
    {"none", TargetKind::none},
    {"any", TargetKind::any},
    {"creature", TargetKind::creature},
    {"own_creature", TargetKind::own_creature},
    {"nonland_permanent", TargetKind::nonland_permanent},
};

const std::unordered_map<std::string, EffectOp> kOpNames = {
    {"damage", EffectOp::deal_damage},
    {"destroy", EffectOp::destroy},
    {"counter", EffectOp::counter},
    {"draw", EffectOp::draw},
    {"gain_life", EffectOp::gain_life},
    {"token", EffectOp::create_token},
    {"pump", EffectOp::pump},
    {"add_mana", EffectOp::add_mana},
    {"convoke", EffectOp::convoke},
    {"prowess", EffectOp::prowess},
};

Color color_from_char(char c) {
    switch (c) {
        case 'W': return Color::W;
        case 'U': return Color::U;
        case 'B': return Color::B;
        case 'R': return Color::R;
        case 'G': return Color::G;
    }
    throw std::invalid_argument(std::string("unknown mana color '") + c + "'");
}

char color_to_char(Color c) {
    static const char table[] = {'W', 'U', 'B', 'R', 'G'};
    return table[static_cast<int>(c)];
}

std::string kind_to_string(CardKind k) {
    for (const auto& [name, kind] : kKindNames)
        if (kind == k) return name;
    return "?";
}

std::string target_to_string(TargetKind t) {
    for (const auto& [name, kind] : kTargetNames)
        if (kind == t) return name;
    return "?";
}

std::string op_to_string(EffectOp op) {
    for (const auto& [name, o] : kOpNames)
        if (o == op) return name;
    return "?";
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void validate_card(const CardDef& c) {
    const std::string where = "card '" + c.slug + "': ";
    const bool kind_threat =
        c.kind == CardKind::creature || c.kind == CardKind::planeswalker;
    if (c.is_threat != kind_threat)
        throw std::runtime_error(where + "threat flag must equal (creature or planeswalker)");
    if (c.mana_producer != c.has_effect(EffectOp::add_mana))
        throw std::runtime_error(where + "mana_producer flag must match an add_mana effect");
    if (c.mana_producer && c.produces.empty())
        throw std::runtime_error(where + "mana producer with no producible colors");
    bool removal_like = false;
    for (const auto& e : c.effects) {
        if (e.op == EffectOp::deal_damage &&
            (c.target == TargetKind::any || c.target == TargetKind::creature))
            removal_like = true;
        if (e.op == EffectOp::destroy) {
            const bool hits_creatures =
                e.scope_all || c.target == TargetKind::creature ||
                c.target == TargetKind::any || c.target == TargetKind::nonland_permanent;
            if (hits_creatures) removal_like = true;
        }
        if (e.op == EffectOp::create_token && e.token.empty())
            throw std::runtime_error(where + "token effect without a token slug");
    }
    if (c.is_removal != removal_like)
        throw std::runtime_error(where + "removal flag inconsistent with effects");
    if (c.kind == CardKind::creature && c.toughness <= 0)
        throw std::runtime_error(where + "creature with nonpositive toughness");
    if (c.kind != CardKind::creature && (c.power != 0 || c.toughness != 0))
        throw std::runtime_error(where + "power/toughness on a non-creature");
    if (c.kind == CardKind::land && c.cost.converted() != 0)
        throw std::runtime_error(where + "land with a mana cost");
    bool needs_target = false;
    for (const auto& e : c.effects)
        needs_target = needs_target ||
                       (e.op == EffectOp::deal_damage) || (e.op == EffectOp::pump) ||
                       (e.op == EffectOp::destroy && !e.scope_all);
    if (needs_target && c.target == TargetKind::none)
        throw std::runtime_error(where + "targeted effect but target kind 'none'");
    if (!needs_target && c.target != TargetKind::none)
        throw std::runtime_error(where + "target kind set but no targeted effect");
}

}  // namespace

const char* archetype_slug(Archetype a) {
    static const char* names[] = {"mono_red_aggro", "azorius_control", "dimir_midrange",
                                  "domain_ramp", "boros_convoke"};
    return names[static_cast<int>(a)];
}

Archetype archetype_from_slug(const std::string& slug) {
    for (int i = 0; i < kNumArchetypes; ++i)
        if (slug == archetype_slug(static_cast<Archetype>(i))) return static_cast<Archetype>(i);
    throw std::invalid_argument("unknown archetype '" + slug + "'");
}

Catalog Catalog::load_file(const std::string& path) {
    return load_json_text(read_text_file(path));
}

Catalog Catalog::load_json_text(const std::string& text) {
    const json doc = json::parse(text);
    Catalog cat;
    cat.schema_version_ = doc.at("schema_version").get<int>();
    if (cat.schema_version_ != 1)
        throw std::runtime_error("unsupported card schema version " +
                                 std::to_string(cat.schema_version_));

    for (const auto& jc : doc.at("cards")) {
        CardDef c;
        c.id = static_cast<CardId>(cat.cards_.size());
        c.slug = jc.at("slug").get<std::string>();
        c.name = jc.at("name").get<std::string>();
        const std::string kind = jc.at("kind").get<std::string>();
        auto kit = kKindNames.find(kind);
        if (kit == kKindNames.end())
            throw std::runtime_error("card '" + c.slug + "': unknown kind '" + kind + "'");
        c.kind = kit->second;

        const auto& jcost = jc.at("cost");
        c.cost.generic = jcost.at("generic").get<int>();
        for (char p : jcost.at("pips").get<std::string>())
            c.cost.pips[static_cast<int>(color_from_char(p))] += 1;

        c.power = jc.value("power", 0);
        c.toughness = jc.value("toughness", 0);
        for (char p : jc.value("produces", std::string()))
            c.produces.push_back(color_from_char(p));

        if (jc.contains("target")) {
            auto tit = kTargetNames.find(jc.at("target").get<std::string>());
            if (tit == kTargetNames.end())
                throw std::runtime_error("card '" + c.slug + "': unknown target kind");
            c.target = tit->second;
        }
        c.max_target_power_plus_toughness = jc.value("max_target_pt", 0);
        c.counters_creatures_only = jc.value("counter_creatures_only", false);
        c.haste = jc.value("haste", false);
        c.is_token = jc.value("token", false);

        for (const auto& je : jc.at("effects")) {
            Effect e;
            auto oit = kOpNames.find(je.at("op").get<std::string>());
            if (oit == kOpNames.end())
                throw std::runtime_error("card '" + c.slug + "': unknown effect op");
            e.op = oit->second;
            e.amount = je.value("amount", 0);
            e.power = je.value("power", 0);
            e.toughness = je.value("toughness", 0);
            e.scope_all = je.value("all", false);
            e.token = je.value("token", std::string());
            c.effects.push_back(e);
        }

        const auto& jf = jc.at("flags");
        c.is_threat = jf.at("threat").get<bool>();
        c.is_removal = jf.at("removal").get<bool>();
        c.mana_producer = jf.at("mana_producer").get<bool>();
        c.fidelity = jc.value("fidelity", std::string());

        validate_card(c);
        cat.cards_.push_back(std::move(c));
    }

    // Cross-card checks: slug uniqueness and token reference resolution.
    for (const auto& c : cat.cards_) {
        if (cat.find_slug(c.slug) != c.id)
            throw std::runtime_error("duplicate card slug '" + c.slug + "'");
        for (const auto& e : c.effects) {
            if (e.op != EffectOp::create_token) continue;
            auto tok = cat.find_slug(e.token);
            if (!tok)
                throw std::runtime_error("card '" + c.slug + "' creates unknown token '" +
                                         e.token + "'");
            if (!cat.cards_[*tok].is_token)
                throw std::runtime_error("card '" + c.slug + "' creates non-token '" + e.token +
                                         "'");
        }
    }
    return cat;
}

const CardDef& Catalog::by_slug(const std::string& slug) const {
    auto id = find_slug(slug);
    if (!id) throw std::invalid_argument("no card with slug '" + slug + "'");
    return cards_[*id];
}

std::optional<CardId> Catalog::find_slug(const std::string& slug) const {
    for (const auto& c : cards_)
        if (c.slug == slug) return c.id;
    return std::nullopt;
}

std::string Catalog::to_json_text() const {
    json doc;
    doc["schema_version"] = schema_version_;
    json arr = json::array();
    for (const auto& c : cards_) {
        json jc;
        jc["slug"] = c.slug;
        jc["name"] = c.name;
        jc["kind"] = kind_to_string(c.kind);
        std::string pips;
        for (int col = 0; col < kNumColors; ++col)
            pips.append(static_cast<std::size_t>(c.cost.pips[col]),
                        color_to_char(static_cast<Color>(col)));
        jc["cost"] = {{"generic", c.cost.generic}, {"pips", pips}};
        if (c.kind == CardKind::creature) {
            jc["power"] = c.power;
            jc["toughness"] = c.toughness;
        }
        if (!c.produces.empty()) {
            std::string prod;
            for (Color col : c.produces) prod += color_to_char(col);
            jc["produces"] = prod;
        }
        if (c.target != TargetKind::none) jc["target"] = target_to_string(c.target);
        if (c.max_target_power_plus_toughness > 0)
            jc["max_target_pt"] = c.max_target_power_plus_toughness;
        if (c.counters_creatures_only) jc["counter_creatures_only"] = true;
        if (c.haste) jc["haste"] = true;
        if (c.is_token) jc["token"] = true;
        json effects = json::array();
        for (const auto& e : c.effects) {
            json je;
            je["op"] = op_to_string(e.op);
            if (e.amount != 0) je["amount"] = e.amount;
            if (e.power != 0) je["power"] = e.power;
            if (e.toughness != 0) je["toughness"] = e.toughness;
            if (e.scope_all) je["all"] = true;
            if (!e.token.empty()) je["token"] = e.token;
            effects.push_back(je);
        }
        jc["effects"] = effects;
        jc["flags"] = {{"threat", c.is_threat},
                       {"removal", c.is_removal},
                       {"mana_producer", c.mana_producer}};
        jc["fidelity"] = c.fidelity;
        arr.push_back(jc);
    }
    doc["cards"] = arr;
    return doc.dump(2);
}

DeckList DeckList::load_file(const std::string& path, const Catalog& catalog) {
    return load_json_text(read_text_file(path), catalog);
}

DeckList DeckList::load_json_text(const std::string& text, const Catalog& catalog) {
    const json doc = json::parse(text);
    if (doc.at("schema_version").get<int>() != 1)
        throw std::runtime_error("unsupported deck schema version");
    DeckList list;
    for (const auto& jd : doc.at("decks")) {
        Deck d;
        d.archetype = archetype_from_slug(jd.at("archetype").get<std::string>());
        d.name = jd.at("name").get<std::string>();
        int total = 0;
        for (const auto& [slug, jcount] : jd.at("cards").items()) {
            const CardDef& def = catalog.by_slug(slug);
            if (def.is_token)
                throw std::runtime_error("deck '" + d.name + "' lists token '" + slug + "'");
            const int count = jcount.get<int>();
            if (count <= 0)
                throw std::runtime_error("deck '" + d.name + "': bad count for '" + slug + "'");
            total += count;
            for (int i = 0; i < count; ++i) d.cards.push_back(def.id);
        }
        if (total != 60)
            throw std::runtime_error("deck '" + d.name + "' has " + std::to_string(total) +
                                     " cards, want 60");
        list.decks_.push_back(std::move(d));
    }
    if (list.decks_.size() != kNumArchetypes)
        throw std::runtime_error("expected " + std::to_string(kNumArchetypes) + " decks");
    for (int i = 0; i < kNumArchetypes; ++i)
        list.deck(static_cast<Archetype>(i));  // throws if any archetype is missing
    return list;
}

const Deck& DeckList::deck(Archetype a) const {
    for (const auto& d : decks_)
        if (d.archetype == a) return d;
    throw std::invalid_argument(std::string("no deck for archetype ") + archetype_slug(a));
}

std::string DeckList::to_json_text(const Catalog& catalog) const {
    json doc;
    doc["schema_version"] = 1;
    json arr = json::array();
    for (const auto& d : decks_) {
        json jd;
        jd["archetype"] = archetype_slug(d.archetype);
        jd["name"] = d.name;
        std::map<std::string, int> counts;
        for (CardId id : d.cards) counts[catalog[id].slug] += 1;
        jd["cards"] = counts;
        arr.push_back(jd);
    }
    doc["decks"] = arr;
    return doc.dump(2);
}

std::string data_dir() {
    if (const char* env = std::getenv("MTG_DATA_DIR"); env && *env) return env;
#ifdef MTG_BUNDLED_DATA_DIR
    return MTG_BUNDLED_DATA_DIR;
#else
    return "data";
#endif
}

std::string data_file(const std::string& name) { return data_dir() + "/" + name; }

}  // namespace mtg
