#include "mtg/agents.hpp"

#include <algorithm>
#include <stdexcept>

namespace mtg {

namespace {

int converted_cost(const CardDef& d) {
    int n = d.cost.generic;
    for (int p : d.cost.pips) n += p;
    return n;
}

int lowest_legal(const ActionMask& mask) {
    for (int a = 0; a < kNumActions; ++a)
        if (mask.test(a)) return a;
    throw std::invalid_argument("empty action mask");
}

bool category_legal(const ActionMask& mask, ActionCategory c, int slot) {
    return mask.test(action_index(c, slot));
}

}  // namespace

int random_act(const ActionMask& mask, Rng& rng) {
    const std::vector<int> legal = mask.legal();
    if (legal.empty()) throw std::invalid_argument("empty action mask");
    return legal[rng.next_below(legal.size())];
}

HeuristicParams HeuristicParams::for_archetype(Archetype a) {
    HeuristicParams p;
    switch (a) {
        case Archetype::mono_red_aggro:
        case Archetype::boros_convoke:
            p.mulligan_land_lo = 1;
            p.mulligan_land_hi = 5;
            p.aggression = Aggression::attack_all;
            p.defensive_life_threshold.reset();
            break;
        case Archetype::azorius_control:
        case Archetype::domain_ramp:
            p.aggression = Aggression::defensive;
            p.defensive_life_threshold = 8;
            break;
        case Archetype::dimir_midrange:
            p.aggression = Aggression::favorable_trades;
            p.defensive_life_threshold = 8;
            break;
    }
    return p;
}

int HeuristicAgent::act(const GameState& state) const {
    const ActionMask mask = engine_.legal_mask(state);
    switch (state.pending) {
        case PendingKind::mulligan:
            return act_mulligan(state, mask);
        case PendingKind::bottoming:
            return act_bottom_or_discard(state, mask, ActionCategory::BOTTOM);
        case PendingKind::discard:
            return act_bottom_or_discard(state, mask, ActionCategory::DISCARD);
        case PendingKind::choose_target:
            return act_choose_target(state, mask);
        case PendingKind::pay_mana:
            if (category_legal(mask, ActionCategory::AUTO_PAY, 0))
                return action_index(ActionCategory::AUTO_PAY, 0);
            return action_index(ActionCategory::CANCEL, 0);
        case PendingKind::respond: {
            // Counter whenever the window is open; holding up the mana was the point.
            for (int a : mask.legal())
                if (action_category(a) == ActionCategory::CAST_INSTANT) return a;
            return action_index(ActionCategory::PASS, 0);
        }
        case PendingKind::choose_block_target:
            return act_block_target(state, mask);
        case PendingKind::none:
            break;
    }
    switch (state.phase) {
        case Phase::main1:
        case Phase::main2:
            return act_main(state, mask);
        case Phase::combat_attack:
            return act_attack(state, mask);
        case Phase::combat_block:
            return act_block(state, mask);
        default:
            return lowest_legal(mask);
    }
}

int HeuristicAgent::act_mulligan(const GameState& state, const ActionMask& mask) const {
    const PlayerState& me = state.players[state.decision];
    int lands = 0;
    for (CardId id : me.hand)
        if (engine_.def(id).is_land()) ++lands;
    const bool keepable = lands >= params_.mulligan_land_lo && lands <= params_.mulligan_land_hi;
    if (!keepable && category_legal(mask, ActionCategory::MULLIGAN, 0))
        return action_index(ActionCategory::MULLIGAN, 0);
    return action_index(ActionCategory::KEEP, 0);
}

int HeuristicAgent::act_bottom_or_discard(const GameState& state, const ActionMask& mask,
                                          ActionCategory category) const {
    const PlayerState& me = state.players[state.decision];
    int lands = 0;
    for (CardId id : me.hand)
        if (engine_.def(id).is_land()) ++lands;
    // Flooded hands shed a land, otherwise the most expensive spell goes.
    int best = -1, best_cost = -1;
    for (std::size_t i = 0; i < me.hand.size() && i < kMaxHandEncoded; ++i) {
        if (!category_legal(mask, category, static_cast<int>(i))) continue;
        const CardDef& d = engine_.def(me.hand[i]);
        if (lands > params_.mulligan_land_hi && d.is_land())
            return action_index(category, static_cast<int>(i));
        const int cost = d.is_land() ? -1 : converted_cost(d);
        if (cost > best_cost) {
            best_cost = cost;
            best = static_cast<int>(i);
        }
    }
    if (best >= 0) return action_index(category, best);
    return lowest_legal(mask);
}

int HeuristicAgent::preferred_target(const GameState& state, int p, const CardDef& d,
                                     const std::vector<int>& codes) const {
    const auto has = [&](int code) {
        return std::find(codes.begin(), codes.end(), code) != codes.end();
    };
    const Effect* damage = d.find_effect(EffectOp::deal_damage);
    const bool removal = d.is_removal;
    const bool own_side = d.target == TargetKind::own_creature ||
                          d.has_effect(EffectOp::pump);

    if (own_side) {
        // Pump the biggest own attacker, or failing that the biggest own creature.
        int best = -1, best_key = -1;
        for (const auto& perm : state.players[p].battlefield) {
            if (!has(perm.slot)) continue;
            const CardDef& pd = engine_.def(perm.card);
            const int key = effective_power(perm, pd) + (perm.attacking ? 100 : 0);
            if (key > best_key) {
                best_key = key;
                best = perm.slot;
            }
        }
        return best;
    }

    // Removal and burn look at the opponent's side.
    const PlayerState& opp = state.players[1 - p];
    int best = -1, best_power = -1;
    for (const auto& perm : opp.battlefield) {
        const int code = kBattlefieldSlots + perm.slot;
        if (!has(code)) continue;
        const CardDef& pd = engine_.def(perm.card);
        if (damage && damage->amount < effective_toughness(perm, pd) - perm.damage)
            continue;  // burn only kills
        const int power = effective_power(perm, pd);
        if (power > best_power) {
            best_power = power;
            best = code;
        }
    }
    const bool face_legal = has(kTargetOppPlayerSlot);
    if (damage && params_.aggression == Aggression::attack_all && face_legal)
        return kTargetOppPlayerSlot;
    if (best >= 0 && (removal || damage)) return best;
    if (damage && face_legal) return kTargetOppPlayerSlot;
    return -1;
}

int HeuristicAgent::act_choose_target(const GameState& state, const ActionMask& mask) const {
    const int p = state.decision;
    if (!state.spell) return lowest_legal(mask);
    const CardDef& d = engine_.def(state.spell->card);
    std::vector<int> codes;
    for (int code = 0; code <= kTargetOppPlayerSlot; ++code)
        if (category_legal(mask, ActionCategory::TARGET, code)) codes.push_back(code);
    const int pick = preferred_target(state, p, d, codes);
    if (pick >= 0) return action_index(ActionCategory::TARGET, pick);
    return action_index(ActionCategory::CANCEL, 0);
}

int HeuristicAgent::act_main(const GameState& state, const ActionMask& mask) const {
    const int p = state.decision;
    const PlayerState& me = state.players[p];
    const PlayerState& opp = state.players[1 - p];

    for (std::size_t i = 0; i < me.hand.size() && i < kMaxHandEncoded; ++i)
        if (category_legal(mask, ActionCategory::PLAY_LAND, static_cast<int>(i)))
            return action_index(ActionCategory::PLAY_LAND, static_cast<int>(i));

    int own_power = 0, opp_power = 0;
    for (const auto& perm : me.battlefield)
        if (engine_.def(perm.card).is_creature())
            own_power += effective_power(perm, engine_.def(perm.card));
    for (const auto& perm : opp.battlefield)
        if (engine_.def(perm.card).is_creature())
            opp_power += effective_power(perm, engine_.def(perm.card));
    const bool behind_on_board = opp_power - own_power > 0;

    int best = -1, best_key = -1;
    for (int a : mask.legal()) {
        const ActionCategory c = action_category(a);
        if (c != ActionCategory::CAST_SORCERY && c != ActionCategory::CAST_INSTANT) continue;
        const int slot = action_slot(a);
        if (slot >= static_cast<int>(me.hand.size())) continue;
        const CardDef& d = engine_.def(me.hand[static_cast<std::size_t>(slot)]);
        // Skip targeted spells with no target this agent would accept;
        // casting one would only be cancelled at the target prompt.
        if (d.target != TargetKind::none &&
            preferred_target(state, p, d, engine_.valid_targets(state, p, d)) < 0)
            continue;
        int key = converted_cost(d);
        if (behind_on_board && d.is_removal) key += 100;
        if (key > best_key) {
            best_key = key;
            best = a;
        }
    }
    if (best >= 0) return best;

    for (int a : mask.legal())
        if (action_category(a) == ActionCategory::ACTIVATE) return a;
    return action_index(ActionCategory::PASS, 0);
}

int HeuristicAgent::act_attack(const GameState& state, const ActionMask& mask) const {
    const int p = state.decision;
    const PlayerState& me = state.players[p];
    const PlayerState& opp = state.players[1 - p];

    std::vector<const Permanent*> opp_untapped;
    for (const auto& perm : opp.battlefield)
        if (!perm.tapped && engine_.def(perm.card).is_creature())
            opp_untapped.push_back(&perm);

    const auto safe_attack = [&](const Permanent& mine) {
        const CardDef& md = engine_.def(mine.card);
        const int my_power = effective_power(mine, md);
        const int my_tough = effective_toughness(mine, md) - mine.damage;
        for (const Permanent* blocker : opp_untapped) {
            const CardDef& bd = engine_.def(blocker->card);
            const bool kills_me = effective_power(*blocker, bd) >= my_tough;
            const bool survives_me =
                my_power < effective_toughness(*blocker, bd) - blocker->damage;
            if (kills_me && survives_me) return false;
        }
        return true;
    };

    for (const auto& perm : me.battlefield) {
        if (perm.attacking) continue;
        if (!category_legal(mask, ActionCategory::ATTACK_TOGGLE, perm.slot)) continue;
        bool want = false;
        switch (params_.aggression) {
            case Aggression::attack_all:
                want = true;
                break;
            case Aggression::favorable_trades:
                want = safe_attack(perm);
                break;
            case Aggression::defensive:
                want = opp_untapped.empty();
                break;
        }
        if (want) return action_index(ActionCategory::ATTACK_TOGGLE, perm.slot);
    }
    if (category_legal(mask, ActionCategory::CONFIRM, 0))
        return action_index(ActionCategory::CONFIRM, 0);
    return action_index(ActionCategory::PASS, 0);
}

int HeuristicAgent::act_block(const GameState& state, const ActionMask& mask) const {
    const int p = state.decision;
    const PlayerState& me = state.players[p];
    const PlayerState& opp = state.players[1 - p];

    int incoming = 0;
    std::vector<const Permanent*> unblocked;
    for (const auto& atk : opp.battlefield) {
        if (!atk.attacking) continue;
        bool blocked = false;
        for (const auto& mine : me.battlefield)
            if (mine.blocking == atk.slot) blocked = true;
        if (!blocked) {
            unblocked.push_back(&atk);
            incoming += effective_power(atk, engine_.def(atk.card));
        }
    }

    const bool lethal_incoming = incoming >= me.life;
    const bool defend = params_.defensive_life_threshold &&
                        me.life < *params_.defensive_life_threshold;

    if (lethal_incoming && !unblocked.empty()) {
        // Any legal body in front of the biggest attacker beats taking lethal.
        int best = -1, best_tough = -1;
        for (const auto& mine : me.battlefield) {
            if (!category_legal(mask, ActionCategory::BLOCK_SELECT_BLOCKER, mine.slot))
                continue;
            if (mine.blocking >= 0) continue;
            const int tough =
                effective_toughness(mine, engine_.def(mine.card)) - mine.damage;
            if (tough > best_tough) {
                best_tough = tough;
                best = mine.slot;
            }
        }
        if (best >= 0) return action_index(ActionCategory::BLOCK_SELECT_BLOCKER, best);
    } else if (defend && !unblocked.empty()) {
        for (const auto& mine : me.battlefield) {
            if (!category_legal(mask, ActionCategory::BLOCK_SELECT_BLOCKER, mine.slot))
                continue;
            if (mine.blocking >= 0) continue;
            const CardDef& md = engine_.def(mine.card);
            const int my_power = effective_power(mine, md);
            const int my_tough = effective_toughness(mine, md) - mine.damage;
            for (const Permanent* atk : unblocked) {
                const CardDef& ad = engine_.def(atk->card);
                const bool kills = my_power >= effective_toughness(*atk, ad) - atk->damage;
                const bool survives = effective_power(*atk, ad) < my_tough;
                if (kills && survives)
                    return action_index(ActionCategory::BLOCK_SELECT_BLOCKER, mine.slot);
            }
        }
    }

    bool any_blocking = false;
    for (const auto& mine : me.battlefield)
        if (mine.blocking >= 0) any_blocking = true;
    if (any_blocking && category_legal(mask, ActionCategory::CONFIRM, 0))
        return action_index(ActionCategory::CONFIRM, 0);
    if (mask.test(action_index(ActionCategory::PASS, 0)))
        return action_index(ActionCategory::PASS, 0);
    return lowest_legal(mask);
}

int HeuristicAgent::act_block_target(const GameState& state, const ActionMask& mask) const {
    const int p = state.decision;
    const PlayerState& me = state.players[p];
    const PlayerState& opp = state.players[1 - p];
    const Permanent* blocker = me.find(state.pending_blocker);

    // Prefer an unblocked attacker this blocker trades up against, then the
    // biggest unblocked one, then anything legal.
    int favorable = -1, favorable_power = -1;
    int biggest = -1, biggest_power = -1;
    for (const auto& atk : opp.battlefield) {
        if (!atk.attacking) continue;
        if (!category_legal(mask, ActionCategory::BLOCK_SELECT_ATTACKER, atk.slot)) continue;
        bool blocked = false;
        for (const auto& mine : me.battlefield)
            if (mine.blocking == atk.slot) blocked = true;
        const CardDef& ad = engine_.def(atk.card);
        const int power = effective_power(atk, ad);
        if (!blocked && power > biggest_power) {
            biggest_power = power;
            biggest = atk.slot;
        }
        if (!blocked && blocker) {
            const CardDef& md = engine_.def(blocker->card);
            const bool kills = effective_power(*blocker, md) >=
                               effective_toughness(atk, ad) - atk.damage;
            const bool survives =
                power < effective_toughness(*blocker, md) - blocker->damage;
            if (kills && survives && power > favorable_power) {
                favorable_power = power;
                favorable = atk.slot;
            }
        }
    }
    if (favorable >= 0) return action_index(ActionCategory::BLOCK_SELECT_ATTACKER, favorable);
    if (biggest >= 0) return action_index(ActionCategory::BLOCK_SELECT_ATTACKER, biggest);
    return lowest_legal(mask);
}

}  // namespace mtg
