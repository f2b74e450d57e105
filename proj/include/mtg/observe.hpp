#pragma once

#include <string>
#include <vector>

#include "mtg/engine.hpp"

namespace mtg {

constexpr int kCatalogCards = 56;
constexpr int kObsGlobals = 21;
constexpr int kObsHandSlots = 10;
constexpr int kObsHandSlotDim = kCatalogCards + 8;  // 64
constexpr int kObsBattlefieldSlotDim = 19;
constexpr int kObsManaDim = 8;
constexpr int kObsDim = kObsGlobals + kNumPhases + (kNumPendingKinds + 1) +
                        kObsHandSlots * kObsHandSlotDim +
                        2 * kBattlefieldSlots * kObsBattlefieldSlotDim +
                        2 * kCatalogCards + kObsManaDim;  // 3077

struct ObsSegment {
    std::string name;
    int offset;
    int length;
    std::string semantics;
};

/**
 * Encodes a position from one player's point of view. Public information only:
 * the opponent's hand and both libraries appear as counts, never contents.
 * Sided features come in own/opponent pairs, so encode(state, 1) equals
 * encode(mirrored(state), 0) exactly.
 */
class Observer {
  public:
    explicit Observer(const Engine& engine);

    std::vector<double> encode(const GameState& state, int perspective) const;
    void encode_into(const GameState& state, int perspective, double* out) const;

    static const std::vector<ObsSegment>& layout();
    static std::string layout_json();
    /// FNV-1a over the layout description; recorded in manifests.
    static std::uint64_t layout_fingerprint();

  private:
    const Engine& engine_;
};

}  // namespace mtg
