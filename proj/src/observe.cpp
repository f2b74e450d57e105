#include "mtg/observe.hpp"

#include <cstring>
#include <stdexcept>

#include <json.hpp>

namespace mtg {

namespace {

double norm(int value, int scale) { return static_cast<double>(value) / scale; }

int total_power(const Catalog& cat, const PlayerState& pl) {
    int total = 0;
    for (const auto& perm : pl.battlefield) {
        const CardDef& d = cat[perm.card];
        if (d.is_creature()) total += effective_power(perm, d);
    }
    return total;
}

}  // namespace

Observer::Observer(const Engine& engine) : engine_(engine) {
    if (engine_.catalog().size() != kCatalogCards)
        throw std::runtime_error("observation layout expects a " +
                                 std::to_string(kCatalogCards) + "-card catalog, got " +
                                 std::to_string(engine_.catalog().size()));
}

std::vector<double> Observer::encode(const GameState& state, int perspective) const {
    std::vector<double> out(static_cast<std::size_t>(kObsDim), 0.0);
    encode_into(state, perspective, out.data());
    return out;
}

void Observer::encode_into(const GameState& state, int perspective, double* out) const {
    const Catalog& cat = engine_.catalog();
    const PlayerState& own = state.players[perspective];
    const PlayerState& opp = state.players[1 - perspective];
    std::memset(out, 0, sizeof(double) * kObsDim);
    int at = 0;

    // globals: own/opp pairs plus the (side-free) turn clock
    out[at++] = norm(own.life, 20);
    out[at++] = norm(opp.life, 20);
    out[at++] = norm(state.turn, state.turn_cap);
    out[at++] = norm(static_cast<int>(own.hand.size()), 15);
    out[at++] = norm(static_cast<int>(opp.hand.size()), 15);
    out[at++] = norm(static_cast<int>(own.library.size()), 60);
    out[at++] = norm(static_cast<int>(opp.library.size()), 60);
    out[at++] = norm(static_cast<int>(own.graveyard.size()), 60);
    out[at++] = norm(static_cast<int>(opp.graveyard.size()), 60);
    out[at++] = norm(static_cast<int>(own.battlefield.size()), 60);
    out[at++] = norm(static_cast<int>(opp.battlefield.size()), 60);
    out[at++] = own.land_played ? 1.0 : 0.0;
    out[at++] = opp.land_played ? 1.0 : 0.0;
    out[at++] = state.active == perspective ? 1.0 : 0.0;
    out[at++] = state.active != perspective ? 1.0 : 0.0;
    out[at++] = state.decision == perspective ? 1.0 : 0.0;
    out[at++] = state.decision != perspective ? 1.0 : 0.0;
    out[at++] = norm(own.mulligans_taken, kMaxMulligans);
    out[at++] = norm(opp.mulligans_taken, kMaxMulligans);
    out[at++] = norm(total_power(cat, own), 20);
    out[at++] = norm(total_power(cat, opp), 20);

    out[at + static_cast<int>(state.phase)] = 1.0;
    at += kNumPhases;
    out[at + static_cast<int>(state.pending)] = 1.0;
    at += kNumPendingKinds + 1;  // one slot reserved

    // own hand, first kObsHandSlots positions
    for (int i = 0; i < kObsHandSlots; ++i) {
        double* slot = out + at + i * kObsHandSlotDim;
        if (i >= static_cast<int>(own.hand.size())) continue;
        const CardDef& d = cat[own.hand[static_cast<std::size_t>(i)]];
        slot[d.id] = 1.0;
        double* f = slot + kCatalogCards;
        f[0] = 1.0;  // present
        f[1] = norm(d.cost.generic, 10);
        f[2] = norm(d.cost.pip_total(), 5);
        f[3] = norm(d.power, 10);
        f[4] = norm(d.toughness, 10);
        f[5] = d.is_land() ? 1.0 : 0.0;
        f[6] = d.is_removal ? 1.0 : 0.0;
        f[7] = d.mana_producer ? 1.0 : 0.0;
    }
    at += kObsHandSlots * kObsHandSlotDim;

    // battlefields, own side first
    for (const PlayerState* side : {&own, &opp}) {
        for (const auto& perm : side->battlefield) {
            double* f = out + at + perm.slot * kObsBattlefieldSlotDim;
            const CardDef& d = cat[perm.card];
            f[0] = 1.0;
            f[1 + static_cast<int>(d.kind)] = 1.0;
            f[7] = norm(effective_power(perm, d), 10);
            f[8] = norm(effective_toughness(perm, d), 10);
            f[9] = norm(perm.damage, 10);
            f[10] = perm.tapped ? 1.0 : 0.0;
            f[11] = perm.sick ? 1.0 : 0.0;
            f[12] = perm.attacking ? 1.0 : 0.0;
            f[13] = perm.blocking != -1 ? 1.0 : 0.0;
            f[14] = perm.blocking != -1 ? norm(perm.blocking, kBattlefieldSlots) : 0.0;
            f[15] = d.is_threat ? 1.0 : 0.0;
            f[16] = d.mana_producer ? 1.0 : 0.0;
            f[17] = perm.token ? 1.0 : 0.0;
            f[18] = norm(d.id, kCatalogCards - 1);
        }
        at += kBattlefieldSlots * kObsBattlefieldSlotDim;
    }

    // graveyards as per-card counts (public zones)
    for (const PlayerState* side : {&own, &opp}) {
        for (CardId id : side->graveyard) out[at + id] += 1.0 / 4.0;  // copies / playset
        at += kCatalogCards;
    }

    // mana picture and any payment in progress (payment state is public)
    int own_untapped = 0, opp_untapped = 0, own_creat = 0, opp_creat = 0;
    int own_lands = 0, opp_lands = 0;
    for (const auto& perm : own.battlefield) {
        const CardDef& d = cat[perm.card];
        if (engine_.mana_ready(perm)) ++own_untapped;
        if (d.mana_producer && d.is_creature()) ++own_creat;
        if (d.is_land()) ++own_lands;
    }
    for (const auto& perm : opp.battlefield) {
        const CardDef& d = cat[perm.card];
        if (engine_.mana_ready(perm)) ++opp_untapped;
        if (d.mana_producer && d.is_creature()) ++opp_creat;
        if (d.is_land()) ++opp_lands;
    }
    out[at++] = norm(own_untapped, 10);
    out[at++] = norm(opp_untapped, 10);
    out[at++] = norm(own_creat, 10);
    out[at++] = norm(opp_creat, 10);
    out[at++] = norm(own_lands, 20);
    out[at++] = norm(opp_lands, 20);
    const bool paying = state.pending == PendingKind::pay_mana;
    int remaining = 0;
    if (paying)
        remaining = state.response ? state.response->total_remaining()
                                   : state.spell->total_remaining();
    out[at++] = norm(remaining, 10);
    out[at++] = paying ? 1.0 : 0.0;

    if (at != kObsDim) throw std::logic_error("observation layout drifted");
}

const std::vector<ObsSegment>& Observer::layout() {
    static const std::vector<ObsSegment> segments = [] {
        std::vector<ObsSegment> segs;
        int at = 0;
        auto add = [&](const std::string& name, int length, const std::string& sem) {
            segs.push_back({name, at, length, sem});
            at += length;
        };
        add("globals", kObsGlobals,
            "life, turn clock, zone counts, land drops, active/decision flags, mulligans, "
            "total power; own/opponent adjacent pairs");
        add("phase", kNumPhases, "one-hot current phase");
        add("pending", kNumPendingKinds + 1, "one-hot pending decision kind, one reserved");
        add("own_hand", kObsHandSlots * kObsHandSlotDim,
            "per hand position: card one-hot (56) + presence, cost, stats, land/removal/"
            "producer flags");
        add("own_battlefield", kBattlefieldSlots * kObsBattlefieldSlotDim,
            "per battlefield slot: presence, kind one-hot, stats, damage, tapped/sick/"
            "attacking/blocking, threat/producer/token flags, card index");
        add("opp_battlefield", kBattlefieldSlots * kObsBattlefieldSlotDim,
            "same as own_battlefield for the opponent");
        add("own_graveyard", kCatalogCards, "per-card copy counts / 4");
        add("opp_graveyard", kCatalogCards, "per-card copy counts / 4");
        add("mana", kObsManaDim,
            "untapped producers, mana creatures, lands (own/opp pairs); payment remaining "
            "and in-progress flag");
        if (at != kObsDim) throw std::logic_error("segment table drifted");
        return segs;
    }();
    return segments;
}

std::string Observer::layout_json() {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["dim"] = kObsDim;
    doc["hidden_information"] =
        "opponent hand contents and both library contents/order are excluded; only counts "
        "are encoded";
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& s : layout())
        segs.push_back({{"name", s.name},
                        {"offset", s.offset},
                        {"length", s.length},
                        {"semantics", s.semantics}});
    doc["segments"] = segs;
    return doc.dump(2);
}

std::uint64_t Observer::layout_fingerprint() {
    const std::string text = layout_json();
    Fnv1a f;
    f.add_bytes(text.data(), text.size());
    return f.h;
}

}  // namespace mtg
