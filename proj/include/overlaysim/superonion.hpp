#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "overlaysim/node_id.hpp"
#include "overlaysim/overlay_graph.hpp"

namespace overlaysim {

struct SuperOnionConfig {
    uint32_t n = 0;  // physical hosts
    uint32_t m = 0;  // virtual nodes per host
    uint32_t i = 0;  // overlay peers per virtual node
    uint32_t probe_period = 1;
    uint32_t probe_ttl = 8;

    /// n >= 2, m >= 2, i >= 1, n*m*i even; throws ParameterError.
    void validate() const;
};

struct PhysicalHost {
    uint32_t host_id = 0;
    std::vector<NodeId> virtuals;
    std::set<NodeId> suspected_soaped;
    /// Bootstrap peer count for replacements (the construction's i);
    /// 0 falls back to the graph's d_min.
    uint32_t peer_target = 0;
};

/// Overlay of n*m virtuals, each with exactly i peers, never to a sibling
/// on its own host. Connected whenever i admits it (an i=1 matching on
/// more than two virtuals cannot be); deterministic per seed. Default
/// bounds are [2i, 3i]: i is only the bootstrap degree, and ordinary
/// replenish maintenance densifies the overlay past single-cut fragility
/// (at d_min = i a containment can sever the graph). Throws
/// GenerationError after bounded pairing retries.
std::pair<OverlayGraph, std::vector<PhysicalHost>> build_superonion(
    const SuperOnionConfig& config, uint64_t seed,
    std::optional<DegreeBounds> bounds = std::nullopt);

/// Each virtual floods a maintenance probe; siblings expect to hear it.
/// A virtual is suspected only on bidirectional failure: none of its
/// probes reached any sibling and no sibling's probe reached it. Updates
/// host.suspected_soaped and returns the set. The silent overload treats
/// those nodes as receive-only (message-dropping clones).
std::set<NodeId> probe_round(const OverlayGraph& g, PhysicalHost& host, uint32_t ttl);
std::set<NodeId> probe_round(const OverlayGraph& g, PhysicalHost& host, uint32_t ttl,
                             const std::set<NodeId>& silent);

/// Abandon victim (an ordinary departure: the overlay repairs around it)
/// and bring up a replacement with a fresh period-derived id,
/// bootstrapped with up to peer_target peers found in the NoN tables of
/// the host's unsuspected virtuals (never a sibling). When every sibling
/// is suspected — probes mark both ends of an unreachable pair, so a
/// partition can suspect all of them at once — any sibling that still
/// has a responsive peer serves as a fallback source. Nodes in refuse
/// never handshake: they are skipped as bootstrap candidates, in the
/// departure repair, and as evidence of responsiveness. Throws
/// NotFoundError if victim is not this host's, and
/// ReplacementImpossibleError only when no sibling has a responsive peer
/// left (the host is truly isolated).
NodeId replace_virtual(OverlayGraph& g, PhysicalHost& host, const NodeId& victim, uint64_t seed,
                       const std::set<NodeId>* refuse = nullptr);

}  // namespace overlaysim
