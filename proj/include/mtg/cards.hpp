#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mtg {

using CardId = std::uint16_t;

enum class Color : std::uint8_t { W = 0, U = 1, B = 2, R = 3, G = 4 };
constexpr int kNumColors = 5;

enum class CardKind : std::uint8_t {
    land = 0,
    creature = 1,
    instant = 2,
    sorcery = 3,
    enchantment = 4,
    planeswalker = 5,
};

/// What a spell or ability may point at. Drives TARGET mask construction.
enum class TargetKind : std::uint8_t {
    none = 0,          // untargeted (global effects, draw, counters)
    any = 1,           // any creature or either player
    creature = 2,      // any creature
    own_creature = 3,  // controller's creatures only
    nonland_permanent = 4,
};

enum class EffectOp : std::uint8_t {
    deal_damage = 0,   // amount to the chosen target
    destroy = 1,       // chosen target, or every creature when scope_all
    counter = 2,       // counters the spell currently waiting to resolve
    draw = 3,          // controller draws `amount`
    gain_life = 4,     // controller gains `amount`
    create_token = 5,  // put `amount` copies of `token` onto the battlefield
    pump = 6,          // target creature gets +power/+toughness until end of turn
    add_mana = 7,      // marks a permanent as a mana source
    convoke = 8,       // untapped own creatures may pay generic cost
    prowess = 9,       // +1/+1 until end of turn when controller casts a noncreature spell
};

struct Effect {
    EffectOp op;
    int amount = 0;
    int power = 0;
    int toughness = 0;
    bool scope_all = false;     // destroy: all creatures instead of a target
    std::string token;          // create_token: catalog id of the token def
};

struct ManaCost {
    int generic = 0;
    std::array<int, kNumColors> pips{};  // indexed by Color

    int pip_total() const {
        int n = 0;
        for (int p : pips) n += p;
        return n;
    }
    int converted() const { return generic + pip_total(); }
};

/**
 * Immutable card definition. Loaded once from the catalog file; gameplay code
 * refers to cards by CardId (index into the catalog).
 */
struct CardDef {
    CardId id = 0;
    std::string slug;   // stable string id used in data files
    std::string name;
    CardKind kind = CardKind::land;
    ManaCost cost;
    int power = 0;
    int toughness = 0;
    std::vector<Color> produces;   // mana colors, for lands and mana creatures
    std::vector<Effect> effects;   // resolution effects in order
    TargetKind target = TargetKind::none;
    int max_target_power_plus_toughness = 0;  // 0 = unrestricted (creature targets)
    bool counters_creatures_only = false;     // counter restriction
    bool haste = false;
    bool is_token = false;
    bool is_threat = false;
    bool is_removal = false;
    bool mana_producer = false;
    std::string fidelity;  // where this definition simplifies the printed card

    bool has_effect(EffectOp op) const {
        for (const auto& e : effects)
            if (e.op == op) return true;
        return false;
    }
    const Effect* find_effect(EffectOp op) const {
        for (const auto& e : effects)
            if (e.op == op) return &e;
        return nullptr;
    }
    bool is_creature() const { return kind == CardKind::creature; }
    bool is_land() const { return kind == CardKind::land; }
    bool is_permanent_kind() const {
        return kind == CardKind::land || kind == CardKind::creature ||
               kind == CardKind::enchantment || kind == CardKind::planeswalker;
    }
    bool sorcery_speed() const { return !is_land() && kind != CardKind::instant; }
    bool can_produce(Color c) const {
        for (Color p : produces)
            if (p == c) return true;
        return false;
    }
};

enum class Archetype : std::uint8_t {
    mono_red_aggro = 0,
    azorius_control = 1,
    dimir_midrange = 2,
    domain_ramp = 3,
    boros_convoke = 4,
};
constexpr int kNumArchetypes = 5;

const char* archetype_slug(Archetype a);
Archetype archetype_from_slug(const std::string& slug);

struct Deck {
    Archetype archetype;
    std::string name;
    std::vector<CardId> cards;  // expanded to one entry per copy, 60 total
};

/**
 * The card pool. Validates on load: unique slugs, kind-consistent stats,
 * threat/removal flags matching their definitions, token defs present.
 */
class Catalog {
  public:
    static Catalog load_file(const std::string& path);
    static Catalog load_json_text(const std::string& text);

    const CardDef& operator[](CardId id) const { return cards_.at(id); }
    const CardDef& by_slug(const std::string& slug) const;
    std::optional<CardId> find_slug(const std::string& slug) const;
    std::size_t size() const { return cards_.size(); }
    int schema_version() const { return schema_version_; }
    const std::vector<CardDef>& all() const { return cards_; }

    std::string to_json_text() const;  // round-trip export

  private:
    int schema_version_ = 0;
    std::vector<CardDef> cards_;
};

class DeckList {
  public:
    static DeckList load_file(const std::string& path, const Catalog& catalog);
    static DeckList load_json_text(const std::string& text, const Catalog& catalog);

    const Deck& deck(Archetype a) const;
    const std::vector<Deck>& all() const { return decks_; }
    std::string to_json_text(const Catalog& catalog) const;

  private:
    std::vector<Deck> decks_;
};

/// Default data directory: MTG_DATA_DIR env var if set, else the bundled path.
std::string data_dir();
std::string data_file(const std::string& name);

}  // namespace mtg
