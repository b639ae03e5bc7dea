#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "overlaysim/node_id.hpp"
#include "overlaysim/overlay_graph.hpp"

namespace overlaysim {

/// One row of a resilience time series. diameter is empty when the graph
/// is partitioned (or empty), never otherwise.
struct MetricsSnapshot {
    uint64_t step = 0;
    uint32_t alive = 0;
    double avg_closeness = 0.0;
    double avg_degree_centrality = 0.0;
    std::optional<uint32_t> diameter;
    uint32_t components = 0;
};

/// One run's ordered snapshots plus where they came from.
struct MetricsTimeSeries {
    std::vector<MetricsSnapshot> rows;
    std::string provenance_digest;  // hex digest of the canonical config
    uint64_t seed = 0;
};

struct ComponentPartition {
    uint32_t count = 0;
    // node -> smallest id in its component
    std::map<NodeId, NodeId> labels;
};

/// (n_c - 1) / sum of BFS distances, within u's component (n_c = component
/// size). 0 for a singleton. Throws NotFoundError for unknown/dead u.
double closeness_centrality(const OverlayGraph& g, const NodeId& u);

/// degree(u) / (alive - 1); 0 when u is the only node.
double degree_centrality(const OverlayGraph& g, const NodeId& u);

/// Longest shortest path over alive pairs, BFS from every node; empty when
/// partitioned. Throws ParameterError on an empty graph.
std::optional<uint32_t> diameter(const OverlayGraph& g);

/// Double-sweep lower bound: BFS from the smallest id, then from the
/// farthest node found. Exact on trees, a lower bound in general; empty
/// when partitioned. Same errors as diameter().
std::optional<uint32_t> diameter_estimate(const OverlayGraph& g);

ComponentPartition connected_components(const OverlayGraph& g);

/// Full row: per-node metrics averaged over alive nodes in ascending id
/// order (fixed summation order, so reruns agree bit for bit). The
/// diameter comes exact from the same all-source pass closeness needs.
MetricsSnapshot compute_snapshot(const OverlayGraph& g);

/// Cheap row for component sweeps: step/alive/components/degree columns
/// are exact, closeness stays 0 and diameter empty (no all-source pass).
MetricsSnapshot compute_snapshot_basic(const OverlayGraph& g);

}  // namespace overlaysim
