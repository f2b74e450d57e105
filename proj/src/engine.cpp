#include "mtg/engine.hpp"

#include <algorithm>

namespace mtg {

namespace {

// ---------------------------------------------------------------------------
// step-scoped context: state, catalog, and the event accumulator
// ---------------------------------------------------------------------------

struct Acc {
    std::array<int, 2> damage_to_player{};
    std::array<int, 2> drawn{};
    std::array<int, 2> entered{};
    std::array<int, 2> destroyed_of{};  // indexed by the permanent's owner
    std::array<int, 2> gained{};
};

struct Ctx {
    const Catalog& cat;
    GameState& s;
    Acc acc;

    const CardDef& def(CardId id) const { return cat[id]; }
    PlayerState& pl(int p) { return s.players[p]; }
    const PlayerState& pl(int p) const { return s.players[p]; }
};

int phase_owner(const GameState& s) {
    return s.phase == Phase::combat_block ? 1 - s.active : s.active;
}

bool perm_mana_ready(const Catalog& cat, const Permanent& p) {
    const CardDef& d = cat[p.card];
    if (!d.mana_producer || p.tapped) return false;
    return d.is_land() || !p.sick;  // mana creatures cannot tap while sick
}

int lowest_free_slot(const PlayerState& pl) {
    for (int slot = 0; slot < kBattlefieldSlots; ++slot)
        if (!pl.find(slot)) return slot;
    return -1;
}

// Inserts keeping the battlefield sorted by slot; returns the slot or -1 if full.
int enter_battlefield(Ctx& c, int player, CardId card, bool token) {
    PlayerState& pl = c.pl(player);
    const int slot = lowest_free_slot(pl);
    if (slot < 0) return -1;
    Permanent perm;
    perm.card = card;
    perm.slot = slot;
    perm.token = token;
    perm.sick = true;
    auto it = std::lower_bound(pl.battlefield.begin(), pl.battlefield.end(), slot,
                               [](const Permanent& a, int s) { return a.slot < s; });
    pl.battlefield.insert(it, perm);
    if (c.def(card).is_creature()) c.acc.entered[player] += 1;
    return slot;
}

// Drawing from an empty library loses the game on the spot.
void draw_cards(Ctx& c, int player, int n, bool count_event) {
    PlayerState& pl = c.pl(player);
    for (int i = 0; i < n; ++i) {
        if (c.s.outcome) return;
        if (pl.library.empty()) {
            c.s.outcome = win_for(1 - player);
            return;
        }
        pl.hand.push_back(pl.library.back());
        pl.library.pop_back();
        if (count_event) c.acc.drawn[player] += 1;
    }
}

void destroy_permanent(Ctx& c, int owner, int slot) {
    PlayerState& pl = c.pl(owner);
    auto it = std::find_if(pl.battlefield.begin(), pl.battlefield.end(),
                           [slot](const Permanent& p) { return p.slot == slot; });
    if (it == pl.battlefield.end()) return;
    const bool was_attacking = it->attacking;
    if (!it->token) pl.graveyard.push_back(it->card);  // tokens cease to exist
    pl.battlefield.erase(it);
    c.acc.destroyed_of[owner] += 1;
    if (was_attacking)
        for (auto& b : c.pl(1 - owner).battlefield)
            if (b.blocking == slot) b.blocking = -1;
}

// Lethal damage and life totals; sets the outcome when a player is dead.
void state_based(Ctx& c) {
    if (c.s.outcome) return;
    for (int p = 0; p < 2; ++p) {
        std::vector<int> dead;
        for (const auto& perm : c.pl(p).battlefield) {
            const CardDef& d = c.def(perm.card);
            if (!d.is_creature()) continue;
            if (perm.damage >= effective_toughness(perm, d) ||
                effective_toughness(perm, d) <= 0)
                dead.push_back(perm.slot);
        }
        for (int slot : dead) destroy_permanent(c, p, slot);
    }
    const bool dead0 = c.pl(0).life <= 0;
    const bool dead1 = c.pl(1).life <= 0;
    if (dead0 && dead1)
        c.s.outcome = Outcome::draw;
    else if (dead0)
        c.s.outcome = Outcome::p1_win;
    else if (dead1)
        c.s.outcome = Outcome::p0_win;
}

void prowess_triggers(Ctx& c, int caster) {
    for (auto& perm : c.pl(caster).battlefield) {
        if (c.def(perm.card).has_effect(EffectOp::prowess)) {
            perm.pump_power += 1;
            perm.pump_toughness += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// mana payment
// ---------------------------------------------------------------------------

struct PaySource {
    int slot;
    bool producer;       // may pay pips and generic
    bool convoke_body;   // creature under convoke, generic only
    std::array<bool, kNumColors> colors{};
    int color_count = 0;
};

std::vector<PaySource> collect_sources(const Ctx& c, int player, bool convoke) {
    std::vector<PaySource> out;
    for (const auto& perm : c.pl(player).battlefield) {
        const CardDef& d = c.def(perm.card);
        PaySource src;
        src.slot = perm.slot;
        src.producer = perm_mana_ready(c.cat, perm);
        // Convoke taps creatures as bodies, summoning sickness notwithstanding.
        src.convoke_body = convoke && d.is_creature() && !perm.tapped;
        if (!src.producer && !src.convoke_body) continue;
        if (src.producer)
            for (Color col : d.produces) {
                if (!src.colors[static_cast<int>(col)]) src.color_count += 1;
                src.colors[static_cast<int>(col)] = true;
            }
        out.push_back(src);
    }
    return out;
}

struct PayPlan {
    bool ok = false;
    std::vector<int> taps;  // slots in tap order: pip payers then generic payers
};

/**
 * Exact plan for paying (generic, pips) from the given sources. Pips are
 * matched to producers by augmenting paths, preferring narrow producers so
 * duals stay free; generic is drawn from whatever remains, lands before
 * creatures, lowest slot first. Deterministic throughout.
 */
PayPlan plan_payment(const Ctx& c, int player, int generic,
                     const std::array<int, kNumColors>& pips, bool convoke) {
    PayPlan plan;
    std::vector<PaySource> sources = collect_sources(c, player, convoke);
    std::vector<int> pip_colors;
    for (int col = 0; col < kNumColors; ++col)
        for (int k = 0; k < pips[col]; ++k) pip_colors.push_back(col);

    // candidate producers per pip, narrow producers first
    std::vector<int> producer_order;
    for (std::size_t i = 0; i < sources.size(); ++i)
        if (sources[i].producer) producer_order.push_back(static_cast<int>(i));
    std::sort(producer_order.begin(), producer_order.end(), [&](int a, int b) {
        if (sources[a].color_count != sources[b].color_count)
            return sources[a].color_count < sources[b].color_count;
        return sources[a].slot < sources[b].slot;
    });

    std::vector<int> pip_of_source(sources.size(), -1);
    std::vector<int> source_of_pip(pip_colors.size(), -1);
    std::vector<char> visited;
    auto augment = [&](auto&& self, int pip) -> bool {
        for (int si : producer_order) {
            if (!sources[si].colors[pip_colors[static_cast<std::size_t>(pip)]]) continue;
            if (visited[static_cast<std::size_t>(si)]) continue;
            visited[static_cast<std::size_t>(si)] = 1;
            if (pip_of_source[static_cast<std::size_t>(si)] == -1 ||
                self(self, pip_of_source[static_cast<std::size_t>(si)])) {
                pip_of_source[static_cast<std::size_t>(si)] = pip;
                source_of_pip[static_cast<std::size_t>(pip)] = si;
                return true;
            }
        }
        return false;
    };
    for (std::size_t pip = 0; pip < pip_colors.size(); ++pip) {
        visited.assign(sources.size(), 0);
        if (!augment(augment, static_cast<int>(pip))) return plan;  // not affordable
    }

    std::vector<int> generic_pool;
    for (std::size_t i = 0; i < sources.size(); ++i)
        if (pip_of_source[i] == -1) generic_pool.push_back(static_cast<int>(i));
    std::sort(generic_pool.begin(), generic_pool.end(), [&](int a, int b) {
        const bool ca = c.def(c.pl(player).find(sources[a].slot)->card).is_creature();
        const bool cb = c.def(c.pl(player).find(sources[b].slot)->card).is_creature();
        if (ca != cb) return !ca;  // lands first
        return sources[a].slot < sources[b].slot;
    });
    if (static_cast<int>(generic_pool.size()) < generic) return plan;

    for (int si : source_of_pip) plan.taps.push_back(sources[static_cast<std::size_t>(si)].slot);
    for (int i = 0; i < generic; ++i)
        plan.taps.push_back(sources[static_cast<std::size_t>(generic_pool[static_cast<std::size_t>(i)])].slot);
    plan.ok = true;
    return plan;
}

PendingSpell& paying_spell(GameState& s) { return s.response ? *s.response : *s.spell; }
const PendingSpell& paying_spell(const GameState& s) {
    return s.response ? *s.response : *s.spell;
}

bool source_can_contribute(const PaySource& src, const PendingSpell& ps) {
    if (src.producer) {
        for (int col = 0; col < kNumColors; ++col)
            if (ps.pips_remaining[col] > 0 && src.colors[col]) return true;
        if (ps.generic_remaining > 0) return true;
        return false;
    }
    return src.convoke_body && ps.generic_remaining > 0;
}

// ---------------------------------------------------------------------------
// spell resolution
// ---------------------------------------------------------------------------

struct DecodedTarget {
    bool is_player = false;
    int player = -1;  // target owner, or the player itself
    int slot = -1;
};

DecodedTarget decode_target(int caster, int code) {
    DecodedTarget t;
    if (code == kTargetOwnPlayerSlot) {
        t.is_player = true;
        t.player = caster;
    } else if (code == kTargetOppPlayerSlot) {
        t.is_player = true;
        t.player = 1 - caster;
    } else if (code < kBattlefieldSlots) {
        t.player = caster;
        t.slot = code;
    } else {
        t.player = 1 - caster;
        t.slot = code - kBattlefieldSlots;
    }
    return t;
}

void run_entry_effects(Ctx& c, int controller, const CardDef& d) {
    if (d.kind == CardKind::planeswalker) return;  // its effects are activated, not triggered
    for (const auto& e : d.effects) {
        switch (e.op) {
            case EffectOp::draw:
                draw_cards(c, controller, e.amount, true);
                break;
            case EffectOp::gain_life:
                c.pl(controller).life += e.amount;
                c.acc.gained[controller] += e.amount;
                break;
            case EffectOp::create_token: {
                const CardId tok = *c.cat.find_slug(e.token);
                for (int i = 0; i < e.amount; ++i) enter_battlefield(c, controller, tok, true);
                break;
            }
            default:
                break;  // static markers (add_mana, convoke, prowess) and combat ops
        }
        if (c.s.outcome) return;
    }
}

void resolve_spell(Ctx& c, const PendingSpell& ps) {
    const CardDef& d = c.def(ps.card);
    if (d.is_permanent_kind()) {
        enter_battlefield(c, ps.caster, ps.card, false);
        run_entry_effects(c, ps.caster, d);
        state_based(c);
        return;
    }
    for (const auto& e : d.effects) {
        if (c.s.outcome) break;
        switch (e.op) {
            case EffectOp::deal_damage: {
                const DecodedTarget t = decode_target(ps.caster, ps.target_code);
                if (t.is_player) {
                    c.pl(t.player).life -= e.amount;
                    c.acc.damage_to_player[t.player] += e.amount;
                } else if (Permanent* perm = c.pl(t.player).find(t.slot)) {
                    perm->damage += e.amount;
                }
                break;
            }
            case EffectOp::destroy: {
                if (e.scope_all) {
                    for (int p = 0; p < 2; ++p) {
                        std::vector<int> slots;
                        for (const auto& perm : c.pl(p).battlefield)
                            if (c.def(perm.card).is_creature()) slots.push_back(perm.slot);
                        for (int slot : slots) destroy_permanent(c, p, slot);
                    }
                } else {
                    const DecodedTarget t = decode_target(ps.caster, ps.target_code);
                    destroy_permanent(c, t.player, t.slot);
                }
                break;
            }
            case EffectOp::draw:
                draw_cards(c, ps.caster, e.amount, true);
                break;
            case EffectOp::gain_life:
                c.pl(ps.caster).life += e.amount;
                c.acc.gained[ps.caster] += e.amount;
                break;
            case EffectOp::pump: {
                const DecodedTarget t = decode_target(ps.caster, ps.target_code);
                if (Permanent* perm = c.pl(t.player).find(t.slot)) {
                    perm->pump_power += e.power;
                    perm->pump_toughness += e.toughness;
                }
                break;
            }
            case EffectOp::create_token: {
                const CardId tok = *c.cat.find_slug(e.token);
                for (int i = 0; i < e.amount; ++i) enter_battlefield(c, ps.caster, tok, true);
                break;
            }
            default:
                break;  // counter never reaches resolution; statics are markers
        }
    }
    c.pl(ps.caster).graveyard.push_back(ps.card);
    state_based(c);
}

bool counter_castable_against(const CardDef& counter, const CardDef& victim) {
    if (counter.kind != CardKind::instant || !counter.has_effect(EffectOp::counter))
        return false;
    if (counter.counters_creatures_only && victim.kind != CardKind::creature) return false;
    return true;
}

bool opponent_can_respond(const Ctx& c, const PendingSpell& ps) {
    const int resp = 1 - ps.caster;
    const CardDef& victim = c.def(ps.card);
    for (std::size_t i = 0; i < c.pl(resp).hand.size() && i < kMaxHandEncoded; ++i) {
        const CardDef& cand = c.def(c.pl(resp).hand[i]);
        if (!counter_castable_against(cand, victim)) continue;
        if (plan_payment(c, resp, cand.cost.generic, cand.cost.pips, false).ok) return true;
    }
    return false;
}

void complete_payment(Ctx& c);

void begin_cast(Ctx& c, int caster, int hand_index, bool as_response) {
    PlayerState& pl = c.pl(caster);
    const CardId card = pl.hand[static_cast<std::size_t>(hand_index)];
    pl.hand.erase(pl.hand.begin() + hand_index);
    PendingSpell ps;
    ps.card = card;
    ps.caster = caster;
    const CardDef& d = c.def(card);
    ps.generic_remaining = d.cost.generic;
    ps.pips_remaining = d.cost.pips;
    if (as_response) {
        c.s.response = ps;
        c.s.pending = PendingKind::pay_mana;
        c.s.decision = caster;
    } else {
        c.s.spell = ps;
        if (d.target != TargetKind::none) {
            c.s.pending = PendingKind::choose_target;
            c.s.decision = caster;
        } else {
            c.s.pending = PendingKind::pay_mana;
            c.s.decision = caster;
            if (ps.total_remaining() == 0) complete_payment(c);
        }
    }
}

void complete_payment(Ctx& c) {
    const bool is_response = c.s.response.has_value();
    PendingSpell done = is_response ? *c.s.response : *c.s.spell;
    const CardDef& d = c.def(done.card);
    c.pl(done.caster).mana_spent_this_turn += d.cost.converted();
    if (d.kind != CardKind::creature) prowess_triggers(c, done.caster);

    if (is_response) {
        // single response level: the counter resolves immediately
        const PendingSpell original = *c.s.spell;
        c.pl(original.caster).graveyard.push_back(original.card);
        c.pl(done.caster).graveyard.push_back(done.card);
        c.s.spell.reset();
        c.s.response.reset();
        c.s.pending = PendingKind::none;
        c.s.decision = phase_owner(c.s);
        state_based(c);
        return;
    }

    if (opponent_can_respond(c, done)) {
        c.s.pending = PendingKind::respond;
        c.s.decision = 1 - done.caster;
        return;
    }
    c.s.spell.reset();
    c.s.pending = PendingKind::none;
    c.s.decision = phase_owner(c.s);
    resolve_spell(c, done);
}

// ---------------------------------------------------------------------------
// turn structure
// ---------------------------------------------------------------------------

void begin_turn(Ctx& c) {
    if (c.s.turn > c.s.turn_cap) {
        c.s.outcome = Outcome::draw;
        return;
    }
    PlayerState& ap = c.pl(c.s.active);
    for (auto& perm : ap.battlefield) {
        perm.tapped = false;
        perm.sick = false;
    }
    ap.land_played = false;
    c.pl(0).mana_spent_this_turn = 0;
    c.pl(1).mana_spent_this_turn = 0;
    if (c.s.turn > 1) draw_cards(c, c.s.active, 1, true);  // first player skips turn 1
    c.s.phase = Phase::main1;
    c.s.decision = c.s.active;
}

void start_game_if_ready(Ctx& c) {
    if (!c.pl(0).kept) {
        c.s.decision = 0;
        c.s.pending = PendingKind::mulligan;
        return;
    }
    if (!c.pl(1).kept) {
        c.s.decision = 1;
        c.s.pending = PendingKind::mulligan;
        return;
    }
    c.s.pending = PendingKind::none;
    c.s.active = 0;
    c.s.turn = 1;
    begin_turn(c);
}

void end_turn(Ctx& c) {
    for (int p = 0; p < 2; ++p)
        for (auto& perm : c.pl(p).battlefield) {
            perm.damage = 0;
            perm.pump_power = 0;
            perm.pump_toughness = 0;
            perm.attacking = false;
            perm.blocking = -1;
        }
    c.s.active = 1 - c.s.active;
    c.s.turn += 1;
    c.s.phase = Phase::beginning;
    c.s.seen_this_turn.clear();
    begin_turn(c);
}

void resolve_combat(Ctx& c) {
    const int atk = c.s.active;
    const int defp = 1 - atk;
    c.s.phase = Phase::combat_damage;
    struct Hit {
        int owner;
        int slot;
        int amount;
    };
    std::vector<Hit> hits;
    int player_damage = 0;
    for (const auto& a : c.pl(atk).battlefield) {
        if (!a.attacking) continue;
        const CardDef& ad = c.def(a.card);
        std::vector<const Permanent*> blockers;
        for (const auto& b : c.pl(defp).battlefield)
            if (b.blocking == a.slot) blockers.push_back(&b);
        if (blockers.empty()) {
            player_damage += effective_power(a, ad);
            continue;
        }
        // attacker assigns lethal damage down the blocker line; no trample
        int remaining = effective_power(a, ad);
        int incoming = 0;
        for (const Permanent* b : blockers) {
            const CardDef& bd = c.def(b->card);
            incoming += effective_power(*b, bd);
            const int lethal = std::max(0, effective_toughness(*b, bd) - b->damage);
            const int assign = std::min(remaining, lethal);
            if (assign > 0) {
                hits.push_back({defp, b->slot, assign});
                remaining -= assign;
            }
        }
        if (incoming > 0) hits.push_back({atk, a.slot, incoming});
    }
    for (const Hit& h : hits)
        if (Permanent* perm = c.pl(h.owner).find(h.slot)) perm->damage += h.amount;
    if (player_damage > 0) {
        c.pl(defp).life -= player_damage;
        c.acc.damage_to_player[defp] += player_damage;
    }
    state_based(c);
    for (int p = 0; p < 2; ++p)
        for (auto& perm : c.pl(p).battlefield) {
            perm.attacking = false;
            perm.blocking = -1;
        }
    c.s.phase = Phase::main2;
    c.s.decision = atk;
}

void enter_end_step(Ctx& c) {
    c.s.phase = Phase::end_step;
    c.s.decision = c.s.active;
    if (static_cast<int>(c.pl(c.s.active).hand.size()) > kHandLimit)
        c.s.pending = PendingKind::discard;
}

// instants castable in the current open window, excluding counters
void add_instant_casts(const Ctx& c, int p, ActionMask& m, const Engine& eng) {
    const PlayerState& pl = c.pl(p);
    for (std::size_t i = 0; i < pl.hand.size() && i < kMaxHandEncoded; ++i) {
        const CardDef& d = c.def(pl.hand[i]);
        if (d.kind != CardKind::instant || d.has_effect(EffectOp::counter)) continue;
        if (d.target != TargetKind::none &&
            eng.valid_targets(c.s, p, d).empty())
            continue;
        if (!plan_payment(c, p, d.cost.generic, d.cost.pips, false).ok) continue;
        m.set(ActionCategory::CAST_INSTANT, static_cast<int>(i));
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

GameState Engine::new_game(const Deck& deck0, const Deck& deck1, std::uint64_t seed,
                           int turn_cap) const {
    GameState s;
    s.turn_cap = turn_cap;
    s.rng = Rng(seed);
    s.players[0].library = deck0.cards;
    s.players[1].library = deck1.cards;
    s.rng.shuffle(s.players[0].library);
    s.rng.shuffle(s.players[1].library);
    for (int p = 0; p < 2; ++p)
        for (int i = 0; i < 7; ++i) {
            s.players[p].hand.push_back(s.players[p].library.back());
            s.players[p].library.pop_back();
        }
    s.pending = PendingKind::mulligan;
    s.decision = 0;
    s.phase = Phase::beginning;
    return s;
}

bool Engine::mana_ready(const Permanent& p) const { return perm_mana_ready(catalog_, p); }

bool Engine::affordable(const GameState& state, int player, const CardDef& card) const {
    Ctx c{catalog_, const_cast<GameState&>(state), {}};
    return plan_payment(c, player, card.cost.generic, card.cost.pips,
                        card.has_effect(EffectOp::convoke))
        .ok;
}

std::vector<int> Engine::valid_targets(const GameState& state, int caster,
                                       const CardDef& card) const {
    std::vector<int> out;
    if (card.target == TargetKind::none) return out;
    const auto consider_side = [&](int owner, int base) {
        for (const auto& perm : state.players[owner].battlefield) {
            const CardDef& d = catalog_[perm.card];
            bool ok = false;
            switch (card.target) {
                case TargetKind::any:
                case TargetKind::creature:
                case TargetKind::own_creature:
                    ok = d.is_creature();
                    break;
                case TargetKind::nonland_permanent:
                    ok = !d.is_land();
                    break;
                default:
                    break;
            }
            if (ok && card.max_target_power_plus_toughness > 0 && d.is_creature()) {
                const int pt = effective_power(perm, d) + effective_toughness(perm, d);
                ok = pt <= card.max_target_power_plus_toughness;
            }
            if (ok) out.push_back(base + perm.slot);
        }
    };
    consider_side(caster, 0);
    if (card.target != TargetKind::own_creature)
        consider_side(1 - caster, kBattlefieldSlots);
    if (card.target == TargetKind::any) {
        out.push_back(kTargetOwnPlayerSlot);
        out.push_back(kTargetOppPlayerSlot);
    }
    return out;
}

ActionMask Engine::legal_mask(const GameState& s) const {
    ActionMask m;
    if (s.outcome) return m;
    const int p = s.decision;
    const PlayerState& me = s.players[p];
    Ctx c{catalog_, const_cast<GameState&>(s), {}};

    switch (s.pending) {
        case PendingKind::mulligan:
            m.set(ActionCategory::KEEP, 0);
            if (me.mulligans_taken < kMaxMulligans) m.set(ActionCategory::MULLIGAN, 0);
            return m;
        case PendingKind::bottoming:
            for (std::size_t i = 0; i < me.hand.size() && i < kMaxHandEncoded; ++i)
                m.set(ActionCategory::BOTTOM, static_cast<int>(i));
            return m;
        case PendingKind::discard:
            for (std::size_t i = 0; i < me.hand.size() && i < kMaxHandEncoded; ++i)
                m.set(ActionCategory::DISCARD, static_cast<int>(i));
            return m;
        case PendingKind::choose_target: {
            for (int code : valid_targets(s, s.spell->caster, catalog_[s.spell->card]))
                m.set(ActionCategory::TARGET, code);
            m.set(ActionCategory::CANCEL, 0);
            return m;
        }
        case PendingKind::pay_mana: {
            const PendingSpell& ps = paying_spell(s);
            const bool convoke = catalog_[ps.card].has_effect(EffectOp::convoke);
            if (plan_payment(c, p, ps.generic_remaining, ps.pips_remaining, convoke).ok)
                m.set(ActionCategory::AUTO_PAY, 0);
            for (const PaySource& src : collect_sources(c, p, convoke))
                if (source_can_contribute(src, ps))
                    m.set(ActionCategory::MANA_SOURCE, src.slot);
            m.set(ActionCategory::CANCEL, 0);
            return m;
        }
        case PendingKind::respond: {
            const CardDef& victim = catalog_[s.spell->card];
            for (std::size_t i = 0; i < me.hand.size() && i < kMaxHandEncoded; ++i) {
                const CardDef& cand = catalog_[me.hand[i]];
                if (!counter_castable_against(cand, victim)) continue;
                if (!plan_payment(c, p, cand.cost.generic, cand.cost.pips, false).ok) continue;
                m.set(ActionCategory::CAST_INSTANT, static_cast<int>(i));
            }
            m.set(ActionCategory::PASS, 0);
            return m;
        }
        case PendingKind::choose_block_target: {
            for (const auto& perm : s.players[s.active].battlefield)
                if (perm.attacking) m.set(ActionCategory::BLOCK_SELECT_ATTACKER, perm.slot);
            m.set(ActionCategory::CANCEL, 0);
            return m;
        }
        case PendingKind::none:
            break;
    }

    switch (s.phase) {
        case Phase::main1:
        case Phase::main2: {
            m.set(ActionCategory::PASS, 0);
            for (std::size_t i = 0; i < me.hand.size() && i < kMaxHandEncoded; ++i) {
                const CardDef& d = catalog_[me.hand[i]];
                if (d.is_land()) {
                    if (!me.land_played && lowest_free_slot(me) >= 0)
                        m.set(ActionCategory::PLAY_LAND, static_cast<int>(i));
                    continue;
                }
                if (!d.sorcery_speed()) continue;
                if (d.is_permanent_kind() && lowest_free_slot(me) < 0) continue;
                if (d.target != TargetKind::none && valid_targets(s, p, d).empty()) continue;
                if (!plan_payment(c, p, d.cost.generic, d.cost.pips,
                                  d.has_effect(EffectOp::convoke))
                         .ok)
                    continue;
                m.set(ActionCategory::CAST_SORCERY, static_cast<int>(i));
            }
            add_instant_casts(c, p, m, *this);
            for (const auto& perm : me.battlefield) {
                const CardDef& d = catalog_[perm.card];
                if (d.kind == CardKind::planeswalker && !perm.tapped && !d.effects.empty())
                    m.set(ActionCategory::ACTIVATE, perm.slot);
            }
            return m;
        }
        case Phase::combat_attack: {
            bool any_attacking = false;
            for (const auto& perm : me.battlefield) {
                const CardDef& d = catalog_[perm.card];
                if (!d.is_creature()) continue;
                if (perm.attacking) {
                    any_attacking = true;
                    m.set(ActionCategory::ATTACK_TOGGLE, perm.slot);
                } else if (!perm.tapped && (!perm.sick || d.haste)) {
                    m.set(ActionCategory::ATTACK_TOGGLE, perm.slot);
                }
            }
            m.set(any_attacking ? ActionCategory::CONFIRM : ActionCategory::PASS, 0);
            add_instant_casts(c, p, m, *this);
            return m;
        }
        case Phase::combat_block: {
            bool enemy_attacking = false;
            for (const auto& perm : s.players[s.active].battlefield)
                if (perm.attacking) enemy_attacking = true;
            bool any_blocking = false;
            for (const auto& perm : me.battlefield) {
                const CardDef& d = catalog_[perm.card];
                if (!d.is_creature()) continue;
                if (perm.blocking != -1) {
                    any_blocking = true;
                    m.set(ActionCategory::BLOCK_SELECT_BLOCKER, perm.slot);
                } else if (!perm.tapped && enemy_attacking) {
                    m.set(ActionCategory::BLOCK_SELECT_BLOCKER, perm.slot);
                }
            }
            m.set(any_blocking ? ActionCategory::CONFIRM : ActionCategory::PASS, 0);
            add_instant_casts(c, p, m, *this);
            return m;
        }
        case Phase::end_step:
            m.set(ActionCategory::PASS, 0);
            return m;
        case Phase::beginning:
        case Phase::combat_damage:
            break;  // never decision points
    }
    return m;
}

StepResult Engine::step(GameState& s, int action) const {
    if (!legal_mask(s).test(action))
        throw IllegalActionError("illegal action " + action_name(action) + " (turn " +
                                 std::to_string(s.turn) + ", phase " +
                                 std::to_string(static_cast<int>(s.phase)) + ", pending " +
                                 std::to_string(static_cast<int>(s.pending)) + ")");
    Ctx c{catalog_, s, {}};
    const int p = s.decision;
    PlayerState& me = s.players[p];
    const ActionCategory cat = action_category(action);
    const int slot = action_slot(action);
    s.step_count += 1;

    switch (cat) {
        case ActionCategory::KEEP: {
            me.kept = true;
            if (me.mulligans_taken > 0) {
                s.pending = PendingKind::bottoming;
                s.bottoming_remaining = me.mulligans_taken;
            } else {
                start_game_if_ready(c);
            }
            break;
        }
        case ActionCategory::MULLIGAN: {
            me.mulligans_taken += 1;
            for (CardId id : me.hand) me.library.push_back(id);
            me.hand.clear();
            s.rng.shuffle(me.library);
            draw_cards(c, p, 7, false);  // pre-game redraw, not a draw event
            break;
        }
        case ActionCategory::BOTTOM: {
            const CardId id = me.hand[static_cast<std::size_t>(slot)];
            me.hand.erase(me.hand.begin() + slot);
            me.library.insert(me.library.begin(), id);  // front is the bottom
            s.bottoming_remaining -= 1;
            if (s.bottoming_remaining == 0) start_game_if_ready(c);
            break;
        }
        case ActionCategory::DISCARD: {
            const CardId id = me.hand[static_cast<std::size_t>(slot)];
            me.hand.erase(me.hand.begin() + slot);
            me.graveyard.push_back(id);
            if (static_cast<int>(me.hand.size()) <= kHandLimit) s.pending = PendingKind::none;
            break;
        }
        case ActionCategory::PLAY_LAND: {
            const CardId id = me.hand[static_cast<std::size_t>(slot)];
            me.hand.erase(me.hand.begin() + slot);
            const int bf = enter_battlefield(c, p, id, false);
            me.find(bf)->sick = false;  // lands are never sick
            me.land_played = true;
            break;
        }
        case ActionCategory::CAST_SORCERY:
            begin_cast(c, p, slot, false);
            break;
        case ActionCategory::CAST_INSTANT:
            begin_cast(c, p, slot, s.pending == PendingKind::respond);
            break;
        case ActionCategory::TARGET: {
            s.spell->target_code = slot;
            s.pending = PendingKind::pay_mana;
            if (s.spell->total_remaining() == 0) complete_payment(c);
            break;
        }
        case ActionCategory::AUTO_PAY: {
            PendingSpell& ps = paying_spell(s);
            const bool convoke = catalog_[ps.card].has_effect(EffectOp::convoke);
            PayPlan plan =
                plan_payment(c, p, ps.generic_remaining, ps.pips_remaining, convoke);
            for (int tap : plan.taps) {
                me.find(tap)->tapped = true;
                ps.tapped_for_cost.push_back(tap);
            }
            ps.generic_remaining = 0;
            ps.pips_remaining = {};
            complete_payment(c);
            break;
        }
        case ActionCategory::MANA_SOURCE: {
            PendingSpell& ps = paying_spell(s);
            Permanent* perm = me.find(slot);
            const CardDef& sd = catalog_[perm->card];
            bool paid = false;
            if (perm_mana_ready(catalog_, *perm)) {
                for (int col = 0; col < kNumColors && !paid; ++col)
                    if (ps.pips_remaining[col] > 0 && sd.can_produce(static_cast<Color>(col))) {
                        ps.pips_remaining[col] -= 1;
                        paid = true;
                    }
                if (!paid && ps.generic_remaining > 0) {
                    ps.generic_remaining -= 1;
                    paid = true;
                }
            }
            if (!paid) ps.generic_remaining -= 1;  // convoke body (mask guaranteed legality)
            perm->tapped = true;
            ps.tapped_for_cost.push_back(slot);
            if (ps.total_remaining() == 0) complete_payment(c);
            break;
        }
        case ActionCategory::CANCEL: {
            if (s.pending == PendingKind::choose_block_target) {
                s.pending_blocker = -1;
                s.pending = PendingKind::none;
                s.decision = phase_owner(s);
                break;
            }
            const bool is_response = s.response.has_value();
            PendingSpell& ps = is_response ? *s.response : *s.spell;
            for (int tap : ps.tapped_for_cost) s.players[ps.caster].find(tap)->tapped = false;
            s.players[ps.caster].hand.push_back(ps.card);
            if (is_response) {
                s.response.reset();
                s.pending = PendingKind::respond;  // window stays open
                s.decision = p;
            } else {
                s.spell.reset();
                s.pending = PendingKind::none;
                s.decision = phase_owner(s);
            }
            break;
        }
        case ActionCategory::ACTIVATE: {
            Permanent* perm = me.find(slot);
            perm->tapped = true;
            for (const auto& e : catalog_[perm->card].effects) {
                if (e.op == EffectOp::create_token) {
                    const CardId tok = *catalog_.find_slug(e.token);
                    for (int i = 0; i < e.amount; ++i) enter_battlefield(c, p, tok, true);
                }
            }
            state_based(c);
            break;
        }
        case ActionCategory::ATTACK_TOGGLE: {
            Permanent* perm = me.find(slot);
            perm->attacking = !perm->attacking;
            break;
        }
        case ActionCategory::BLOCK_SELECT_BLOCKER: {
            Permanent* perm = me.find(slot);
            if (perm->blocking != -1) {
                perm->blocking = -1;
            } else {
                s.pending = PendingKind::choose_block_target;
                s.pending_blocker = slot;
            }
            break;
        }
        case ActionCategory::BLOCK_SELECT_ATTACKER: {
            me.find(s.pending_blocker)->blocking = slot;
            s.pending_blocker = -1;
            s.pending = PendingKind::none;
            break;
        }
        case ActionCategory::CONFIRM: {
            if (s.phase == Phase::combat_attack) {
                for (auto& perm : me.battlefield)
                    if (perm.attacking) perm.tapped = true;
                s.phase = Phase::combat_block;
                s.decision = 1 - s.active;
            } else {
                resolve_combat(c);
            }
            break;
        }
        case ActionCategory::PASS: {
            if (s.pending == PendingKind::respond) {
                const PendingSpell original = *s.spell;
                s.spell.reset();
                s.pending = PendingKind::none;
                s.decision = phase_owner(s);
                resolve_spell(c, original);
                break;
            }
            switch (s.phase) {
                case Phase::main1:
                    s.phase = Phase::combat_attack;
                    break;
                case Phase::combat_attack:
                    s.phase = Phase::main2;  // no attackers declared
                    break;
                case Phase::combat_block:
                    resolve_combat(c);  // no blocks
                    break;
                case Phase::main2:
                    enter_end_step(c);
                    break;
                case Phase::end_step:
                    end_turn(c);
                    break;
                default:
                    break;
            }
            break;
        }
    }

    // Repetition rule: reversible action pairs (cast then cancel, attacker
    // toggles) can revisit the exact same state; a deterministic agent would
    // loop on them forever. Revisiting a state kRepetitionLimit times within
    // one turn ends the game as a draw.
    if (!s.outcome) {
        const std::uint64_t h = state_hash(s);
        int seen = 1;
        for (const std::uint64_t prev : s.seen_this_turn)
            if (prev == h) seen += 1;
        s.seen_this_turn.push_back(h);
        if (seen >= kRepetitionLimit) s.outcome = Outcome::draw;
    }
    // Backstop for non-repeating cycles (hand reordering can make every lap
    // through a cast-cancel loop hash differently for a while).
    if (!s.outcome && s.step_count >= kStepSafetyCap) s.outcome = Outcome::draw;

    StepResult result;
    for (int q = 0; q < 2; ++q) {
        result.events[q].damage_to_opponent = c.acc.damage_to_player[1 - q];
        result.events[q].cards_drawn = c.acc.drawn[q];
        result.events[q].creatures_entered = c.acc.entered[q];
        result.events[q].permanents_destroyed = c.acc.destroyed_of[1 - q];
        result.events[q].life_gained = c.acc.gained[q];
    }
    result.outcome = s.outcome;
    return result;
}

std::uint64_t Engine::state_hash(const GameState& s) const {
    Fnv1a f;
    for (int p = 0; p < 2; ++p) {
        const PlayerState& pl = s.players[p];
        f.add_i64(pl.life);
        f.add_i64(pl.mulligans_taken);
        f.add_byte(pl.kept);
        f.add_byte(pl.land_played);
        f.add_i64(pl.mana_spent_this_turn);
        f.add_u64(pl.library.size());
        for (CardId id : pl.library) f.add_u64(id);
        f.add_u64(pl.hand.size());
        for (CardId id : pl.hand) f.add_u64(id);
        f.add_u64(pl.graveyard.size());
        for (CardId id : pl.graveyard) f.add_u64(id);
        f.add_u64(pl.battlefield.size());
        for (const Permanent& perm : pl.battlefield) {
            f.add_i64(perm.slot);
            f.add_u64(perm.card);
            f.add_byte(perm.token);
            f.add_byte(perm.tapped);
            f.add_byte(perm.sick);
            f.add_i64(perm.damage);
            f.add_i64(perm.pump_power);
            f.add_i64(perm.pump_toughness);
            f.add_byte(perm.attacking);
            f.add_i64(perm.blocking);
        }
    }
    f.add_i64(s.turn);
    f.add_byte(static_cast<std::uint8_t>(s.phase));
    f.add_i64(s.active);
    f.add_i64(s.decision);
    f.add_byte(static_cast<std::uint8_t>(s.pending));
    f.add_i64(s.bottoming_remaining);
    f.add_i64(s.pending_blocker);
    for (const auto* ps : {&s.spell, &s.response}) {
        f.add_byte(ps->has_value());
        if (ps->has_value()) {
            f.add_u64((*ps)->card);
            f.add_i64((*ps)->caster);
            f.add_i64((*ps)->target_code);
            f.add_i64((*ps)->generic_remaining);
            for (int pip : (*ps)->pips_remaining) f.add_i64(pip);
            f.add_u64((*ps)->tapped_for_cost.size());
            for (int t : (*ps)->tapped_for_cost) f.add_i64(t);
        }
    }
    f.add_byte(s.outcome.has_value());
    if (s.outcome) f.add_byte(static_cast<std::uint8_t>(*s.outcome));
    f.add_i64(s.turn_cap);
    for (std::uint64_t w : s.rng.s) f.add_u64(w);
    return f.h;
}

GameState Engine::mirrored(const GameState& s) const {
    GameState out = s;
    std::swap(out.players[0], out.players[1]);
    out.active = 1 - out.active;
    out.decision = 1 - out.decision;
    if (out.spell) out.spell->caster = 1 - out.spell->caster;
    if (out.response) out.response->caster = 1 - out.response->caster;
    if (out.outcome) {
        if (*out.outcome == Outcome::p0_win)
            out.outcome = Outcome::p1_win;
        else if (*out.outcome == Outcome::p1_win)
            out.outcome = Outcome::p0_win;
    }
    return out;
}

}  // namespace mtg
