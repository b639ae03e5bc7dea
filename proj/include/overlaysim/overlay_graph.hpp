#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "overlaysim/node_id.hpp"
#include "overlaysim/rng.hpp"

namespace overlaysim {

struct DegreeBounds {
    uint32_t d_min = 1;
    uint32_t d_max = 1;
};

/// What one deletion did to the graph.
struct RepairReport {
    NodeId deleted{};
    // Pairs of the deleted node's former neighbors that became adjacent,
    // in ascending id order.
    std::vector<std::pair<NodeId, NodeId>> edges_added;
    // (pruner, pruned peer) events in the order they happened.
    std::vector<std::pair<NodeId, NodeId>> edges_pruned;
};

struct RepairOptions {
    bool repair = true;
    bool prune = true;
    // Nodes that never handshake (message-dropping peers): repair webbing
    // skips every pair that touches one of them.
    const std::set<NodeId>* refuse = nullptr;
};

/// Materialized read-only view of one node.
struct OverlayNode {
    NodeId id{};
    std::vector<NodeId> peers;                        // ascending
    std::map<NodeId, std::vector<NodeId>> non_table;  // announced peer sets
    bool alive = true;
};

/// Mutable self-healing overlay.
///
/// Every node keeps its peer set plus a neighbors-of-neighbor table: the
/// peer set each of its peers last announced. Mutation primitives mark the
/// touched nodes dirty; announcements flow when the round completes
/// (complete_round), which the higher-level operations call themselves.
///
/// Randomized choices draw from the single per-graph stream, always over
/// candidate lists sorted in ascending id order, and only when there are
/// at least two candidates. Single-candidate choices are forced and
/// consume nothing, which keeps draw sequences enumerable in tests.
class OverlayGraph {
public:
    /// Random connected simple k-regular graph on n fresh ids.
    /// Default bounds are [k, 2k]. Throws ParameterError for infeasible
    /// (n, k), GenerationError if 1000 pairing attempts fail.
    static OverlayGraph build_k_regular(uint32_t n, uint32_t k, uint64_t seed);
    static OverlayGraph build_k_regular(uint32_t n, uint32_t k, uint64_t seed, DegreeBounds bounds);

    /// Graph with an explicit edge list; NoN tables start consistent.
    static OverlayGraph from_edges(const std::vector<NodeId>& nodes,
                                   const std::vector<std::pair<NodeId, NodeId>>& edges,
                                   DegreeBounds bounds, uint64_t seed);

    // -- queries ------------------------------------------------------

    uint32_t alive_count() const { return alive_count_; }
    bool contains(const NodeId& id) const { return index_.count(id) != 0; }
    std::vector<NodeId> alive_ids() const;
    uint32_t degree(const NodeId& id) const;
    std::vector<NodeId> peers(const NodeId& id) const;
    bool has_edge(const NodeId& a, const NodeId& b) const;
    /// Announced peer sets of this node's peers (its NoN knowledge).
    std::map<NodeId, std::vector<NodeId>> non_table(const NodeId& id) const;
    OverlayNode node(const NodeId& id) const;
    uint64_t edge_count() const;
    uint32_t max_degree() const;

    const DegreeBounds& bounds() const { return bounds_; }
    uint64_t step() const { return step_; }
    uint64_t seed() const { return seed_; }
    uint32_t built_k() const { return built_k_; }
    Rng& rng() { return rng_; }

    /// Nodes sharing a family never become peers — both sides refuse the
    /// handshake. Same-family edges are rejected by add_edge and silently
    /// skipped by repair webbing and replenish. Fresh nodes carry no
    /// family; the tag is runtime state and does not survive
    /// serialize/parse.
    static constexpr uint32_t kNoFamily = UINT32_MAX;
    void set_family(const NodeId& id, uint32_t family);
    uint32_t family_of(const NodeId& id) const;

    // -- mutation primitives -----------------------------------------

    /// New isolated alive node. Throws CollisionError if the id exists.
    void add_node(const NodeId& id);
    /// Symmetric edge insert. Throws on self-loop, duplicate, unknown id.
    void add_edge(const NodeId& a, const NodeId& b);
    /// Symmetric edge removal; both endpoints forget each other's
    /// announcements. Throws NotFoundError if the edge is absent.
    void remove_edge(const NodeId& a, const NodeId& b);
    /// Re-announce peer sets of every node whose neighborhood changed.
    void complete_round();

    // -- maintenance operations --------------------------------------

    /// Remove target and its edges. With repair, every pair of its former
    /// neighbors that was not adjacent becomes adjacent, then every node
    /// above d_max prunes. Without repair, nothing heals (simultaneous
    /// takedown semantics). Throws NotFoundError for unknown/dead ids.
    RepairReport delete_node(const NodeId& target, bool repair);
    RepairReport delete_node(const NodeId& target, const RepairOptions& opts);

    /// Remove a batch at once with no repair in between — the simultaneous
    /// takedown primitive. One announcement round runs at the end.
    void delete_many(const std::vector<NodeId>& targets);

    /// Drop highest-degree peers (ties random) until degree <= d_max.
    /// Returns removed peers in removal order. No-op within bounds.
    std::vector<NodeId> prune(const NodeId& id);

    /// Add edges to NoN candidates (alive, not self, not already a peer,
    /// degree < d_max, willing to link) chosen uniformly until degree
    /// >= d_min or no candidate remains. Returns added peers in order.
    /// The refuse overload also skips candidates that never handshake.
    std::vector<NodeId> replenish(const NodeId& id);
    std::vector<NodeId> replenish(const NodeId& id, const std::set<NodeId>& refuse);

    /// Prune / replenish every alive node, ascending id order.
    void prune_all();
    void replenish_all();

    /// Swap a node's id; peers and announcements follow atomically, edge
    /// structure is untouched. The old id becomes unknown.
    void rotate_address(const NodeId& current, const NodeId& fresh);

    // -- checks & serialization --------------------------------------

    /// Structural invariants: symmetry, no self-loops/duplicates, index
    /// consistency, NoN keys subset of peers, announcements current.
    /// Throws AuditError (also when a round was left incomplete).
    void audit() const;

    /// Degree-range invariant (valid after full maintenance rounds only).
    void audit_bounds() const;

    /// Edge-list text: header "n k seed step", then one "u v" line per
    /// edge, ids base-32, u < v, lines sorted.
    std::string serialize() const;
    static OverlayGraph parse(std::string_view text);

private:
    struct Slot {
        NodeId id{};
        bool alive = false;
        uint32_t family = kNoFamily;
        std::vector<uint32_t> peers;  // sorted slot indices
        // peer slot -> peer set it last announced; sorted by key
        std::vector<std::pair<uint32_t, std::vector<uint32_t>>> non;
    };

    explicit OverlayGraph(DegreeBounds bounds, uint64_t seed);

    uint32_t slot_of(const NodeId& id) const;  // throws NotFoundError
    uint32_t new_slot(const NodeId& id);       // throws CollisionError
    bool adjacent(uint32_t a, uint32_t b) const;
    bool same_family(uint32_t a, uint32_t b) const;
    void link(uint32_t a, uint32_t b);
    void unlink(uint32_t a, uint32_t b);
    void erase_non_entry(Slot& s, uint32_t peer);
    std::vector<uint32_t> sorted_by_id(std::vector<uint32_t> slots) const;
    std::vector<NodeId> prune_slot(uint32_t s, RepairReport* report);
    std::vector<NodeId> replenish_slot(uint32_t s, const std::set<NodeId>* refuse);

    static bool try_pair_regular(uint32_t n, uint32_t k, Rng& rng,
                                 std::vector<std::pair<uint32_t, uint32_t>>& edges);
    static bool edges_connected(uint32_t n, const std::vector<std::pair<uint32_t, uint32_t>>& edges);

    std::vector<Slot> slots_;
    std::map<NodeId, uint32_t> index_;  // alive ids only; ordered for id-ascending iteration
    std::unordered_set<uint32_t> dirty_;
    DegreeBounds bounds_;
    Rng rng_;
    uint64_t seed_ = 0;
    uint64_t step_ = 0;
    uint32_t built_k_ = 0;
    uint32_t alive_count_ = 0;
};

/// Keep each element independently with probability p, preserving order.
/// Deterministic for a fixed seed. Throws ParameterError unless 0 <= p <= 1.
std::vector<NodeId> bootstrap_subset(const std::vector<NodeId>& peer_list, double p, uint64_t seed);

}  // namespace overlaysim
