#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "overlaysim/metrics.hpp"
#include "overlaysim/node_id.hpp"
#include "overlaysim/overlay_graph.hpp"
#include "overlaysim/rng.hpp"

namespace overlaysim {

enum class CampaignMode { gradual, simultaneous };

/// Uniform-random deletion campaign. Gradual mode interleaves one deletion
/// with a full maintenance round (repair, prune, replenish — each
/// individually switchable to model plain graphs and ablations);
/// simultaneous mode sweeps a fraction grid, removing each batch at once
/// with no repair, on a private copy per grid point.
struct Campaign {
    CampaignMode mode = CampaignMode::gradual;
    double fraction = 0.0;  // target / sweep-max fraction of initial nodes
    uint64_t seed = 0;
    uint32_t record_every = 0;  // gradual snapshot interval; 0 = 1% of n
    bool repair = true;
    bool prune = true;
    bool replenish = true;
    // Simultaneous rows always carry exact alive/components/degree columns;
    // closeness and diameter are computed only when full_snapshots is set
    // (they need an all-source pass the big sweeps cannot afford).
    bool full_snapshots = true;
    double sweep_step = 0.05;
};

using CampaignObserver = std::function<void(const OverlayGraph&, uint64_t deletions)>;

MetricsTimeSeries run_deletion_campaign(OverlayGraph& graph, const Campaign& campaign);
MetricsTimeSeries run_deletion_campaign(OverlayGraph& graph, const Campaign& campaign,
                                        const CampaignObserver& observer);

/// Admission defenses charged to a requester per peering request.
struct DefensePolicy {
    struct Pow {
        bool on = false;
        double base_work = 0.0;
        double growth = 1.0;  // multiplier per existing peer
    };
    struct RateLimit {
        bool on = false;
        uint64_t base_delay = 0;      // steps
        uint64_t per_peer_delay = 0;  // steps per existing peer
    };
    Pow pow;
    RateLimit rate_limit;

    void validate() const;  // throws ParameterError
};

/// base_work * growth^current_degree. Throws PolicyError when pow is off.
double pow_cost(uint32_t current_degree, const DefensePolicy& policy);

/// base_delay + per_peer_delay * current_degree. PolicyError when off.
uint64_t rate_limit_delay(uint32_t current_degree, const DefensePolicy& policy);

/// Clone-running adversary. declared range defaults to [1, d_min] when
/// left {0, 0}; clone_budget is per soaping attempt and must be at least
/// d_max so one target's peer list can always be filled.
struct SoapAttacker {
    NodeId compromised{};       // entry point, a node the attacker controls
    uint32_t clone_budget = 0;  // peering requests per soaping attempt
    std::pair<uint32_t, uint32_t> declared_degree_range{0, 0};
    uint64_t seed = 0;

    // runtime state
    Rng rng{0};
    std::set<NodeId> clones;
    bool started = false;

    bool is_clone(const NodeId& id) const { return clones.count(id) != 0; }
};

SoapAttacker make_soap_attacker(const NodeId& compromised, uint32_t clone_budget, uint64_t seed);

struct ContainmentResult {
    bool contained = false;
    uint64_t steps = 0;  // peering rounds plus rate-limit delays
    std::vector<NodeId> forgotten_benign;
    std::set<NodeId> final_neighbors;
    double work = 0.0;  // proof-of-work charged across the attempt
};

/// Surround one node with clones: fresh clones request peering with
/// re-drawn low degree declarations; the target accepts per the admission
/// rule, evicting its highest-degree peer while full; evicted benign nodes
/// replenish from their NoN knowledge as the overlay normally would.
/// Stops when every peer of target is a clone or the budget runs out.
ContainmentResult soap_target(OverlayGraph& graph, SoapAttacker& attacker, const NodeId& target,
                              const DefensePolicy& defense);

/// Crawl outward from the compromised entry, soaping every discovered
/// benign node; nodes whose containment is later undone by replenishment
/// are re-queued until the reached set is quiescent or budgets fail.
std::map<NodeId, ContainmentResult> soap_network(OverlayGraph& graph, SoapAttacker& attacker,
                                                 const DefensePolicy& defense);

}  // namespace overlaysim
