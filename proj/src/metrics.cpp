#include "overlaysim/metrics.hpp"

#include <algorithm>
#include <unordered_map>

#include "overlaysim/errors.hpp"

namespace overlaysim {
namespace {

// Flat adjacency over alive nodes, indexed in ascending id order.
struct View {
    std::vector<NodeId> ids;
    std::vector<uint32_t> off;
    std::vector<uint32_t> adj;

    uint32_t n() const { return static_cast<uint32_t>(ids.size()); }
    uint32_t deg(uint32_t v) const { return off[v + 1] - off[v]; }
};

View build_view(const OverlayGraph& g) {
    View view;
    view.ids = g.alive_ids();
    std::unordered_map<NodeId, uint32_t> pos;
    pos.reserve(view.ids.size() * 2);
    for (uint32_t i = 0; i < view.ids.size(); ++i) pos.emplace(view.ids[i], i);
    view.off.assign(view.ids.size() + 1, 0);
    std::vector<std::vector<uint32_t>> rows(view.ids.size());
    for (uint32_t i = 0; i < view.ids.size(); ++i) {
        for (const NodeId& p : g.peers(view.ids[i])) rows[i].push_back(pos.at(p));
    }
    for (uint32_t i = 0; i < rows.size(); ++i)
        view.off[i + 1] = view.off[i] + static_cast<uint32_t>(rows[i].size());
    view.adj.reserve(view.off.back());
    for (const auto& r : rows) view.adj.insert(view.adj.end(), r.begin(), r.end());
    return view;
}

struct BfsScratch {
    std::vector<int32_t> dist;
    std::vector<uint32_t> queue;
};

// BFS from src; returns (sum of distances to reached nodes, reached count
// including src, eccentricity). Fills scratch.dist.
struct BfsResult {
    uint64_t dist_sum = 0;
    uint32_t reached = 0;
    uint32_t ecc = 0;
};

BfsResult bfs(const View& v, uint32_t src, BfsScratch& s) {
    s.dist.assign(v.n(), -1);
    s.queue.clear();
    s.queue.push_back(src);
    s.dist[src] = 0;
    BfsResult r;
    r.reached = 1;
    for (size_t head = 0; head < s.queue.size(); ++head) {
        uint32_t u = s.queue[head];
        int32_t d = s.dist[u];
        r.dist_sum += static_cast<uint64_t>(d);
        r.ecc = std::max<uint32_t>(r.ecc, static_cast<uint32_t>(d));
        for (uint32_t e = v.off[u]; e < v.off[u + 1]; ++e) {
            uint32_t w = v.adj[e];
            if (s.dist[w] < 0) {
                s.dist[w] = d + 1;
                s.queue.push_back(w);
                ++r.reached;
            }
        }
    }
    return r;
}

// Component index per node, component count, and sizes. Roots are visited
// in ascending id order, so component i's label node is its smallest id.
struct Components {
    std::vector<uint32_t> comp;
    std::vector<uint32_t> size;
    std::vector<uint32_t> root;
};

Components label_components(const View& v) {
    Components c;
    c.comp.assign(v.n(), UINT32_MAX);
    std::vector<uint32_t> queue;
    for (uint32_t s = 0; s < v.n(); ++s) {
        if (c.comp[s] != UINT32_MAX) continue;
        uint32_t label = static_cast<uint32_t>(c.size.size());
        c.root.push_back(s);
        c.size.push_back(0);
        queue.clear();
        queue.push_back(s);
        c.comp[s] = label;
        for (size_t head = 0; head < queue.size(); ++head) {
            uint32_t u = queue[head];
            ++c.size[label];
            for (uint32_t e = v.off[u]; e < v.off[u + 1]; ++e) {
                uint32_t w = v.adj[e];
                if (c.comp[w] == UINT32_MAX) {
                    c.comp[w] = label;
                    queue.push_back(w);
                }
            }
        }
    }
    return c;
}

uint32_t view_index(const View& v, const NodeId& id) {
    auto it = std::lower_bound(v.ids.begin(), v.ids.end(), id);
    return static_cast<uint32_t>(it - v.ids.begin());
}

}  // namespace

double closeness_centrality(const OverlayGraph& g, const NodeId& u) {
    if (!g.contains(u)) throw NotFoundError("no alive node " + u.to_string());
    View v = build_view(g);
    BfsScratch s;
    BfsResult r = bfs(v, view_index(v, u), s);
    if (r.reached <= 1) return 0.0;
    return static_cast<double>(r.reached - 1) / static_cast<double>(r.dist_sum);
}

double degree_centrality(const OverlayGraph& g, const NodeId& u) {
    uint32_t deg = g.degree(u);
    if (g.alive_count() <= 1) return 0.0;
    return static_cast<double>(deg) / static_cast<double>(g.alive_count() - 1);
}

std::optional<uint32_t> diameter(const OverlayGraph& g) {
    if (g.alive_count() == 0) throw ParameterError("diameter of an empty graph is undefined");
    View v = build_view(g);
    BfsScratch s;
    uint32_t best = 0;
    for (uint32_t src = 0; src < v.n(); ++src) {
        BfsResult r = bfs(v, src, s);
        if (r.reached != v.n()) return std::nullopt;
        best = std::max(best, r.ecc);
    }
    return best;
}

std::optional<uint32_t> diameter_estimate(const OverlayGraph& g) {
    if (g.alive_count() == 0) throw ParameterError("diameter of an empty graph is undefined");
    View v = build_view(g);
    BfsScratch s;
    BfsResult first = bfs(v, 0, s);
    if (first.reached != v.n()) return std::nullopt;
    // Farthest node from the smallest id; ties resolve to the smallest id
    // because scanning ascends.
    uint32_t far = 0;
    for (uint32_t i = 0; i < v.n(); ++i) {
        if (s.dist[i] == static_cast<int32_t>(first.ecc)) {
            far = i;
            break;
        }
    }
    BfsResult second = bfs(v, far, s);
    return std::max(first.ecc, second.ecc);
}

ComponentPartition connected_components(const OverlayGraph& g) {
    View v = build_view(g);
    Components c = label_components(v);
    ComponentPartition out;
    out.count = static_cast<uint32_t>(c.size.size());
    for (uint32_t i = 0; i < v.n(); ++i)
        out.labels.emplace(v.ids[i], v.ids[c.root[c.comp[i]]]);
    return out;
}

MetricsSnapshot compute_snapshot_basic(const OverlayGraph& g) {
    MetricsSnapshot snap;
    snap.step = g.step();
    snap.alive = g.alive_count();
    if (snap.alive == 0) return snap;
    View v = build_view(g);
    Components c = label_components(v);
    snap.components = static_cast<uint32_t>(c.size.size());
    uint64_t degree_sum = 0;
    for (uint32_t i = 0; i < v.n(); ++i) degree_sum += v.deg(i);
    snap.avg_degree_centrality =
        snap.alive > 1 ? static_cast<double>(degree_sum) /
                             (static_cast<double>(snap.alive - 1) * static_cast<double>(snap.alive))
                       : 0.0;
    return snap;
}

MetricsSnapshot compute_snapshot(const OverlayGraph& g) {
    MetricsSnapshot snap;
    snap.step = g.step();
    snap.alive = g.alive_count();
    if (snap.alive == 0) return snap;

    View v = build_view(g);
    Components c = label_components(v);
    snap.components = static_cast<uint32_t>(c.size.size());

    uint64_t degree_sum = 0;
    for (uint32_t i = 0; i < v.n(); ++i) degree_sum += v.deg(i);
    snap.avg_degree_centrality =
        snap.alive > 1 ? static_cast<double>(degree_sum) /
                             (static_cast<double>(snap.alive - 1) * static_cast<double>(snap.alive))
                       : 0.0;

    BfsScratch s;
    double closeness_sum = 0.0;
    uint32_t ecc_max = 0;
    for (uint32_t src = 0; src < v.n(); ++src) {
        BfsResult r = bfs(v, src, s);
        uint32_t comp_size = c.size[c.comp[src]];
        if (comp_size > 1)
            closeness_sum += static_cast<double>(comp_size - 1) / static_cast<double>(r.dist_sum);
        ecc_max = std::max(ecc_max, r.ecc);
    }
    snap.avg_closeness = closeness_sum / static_cast<double>(snap.alive);
    if (snap.components == 1) snap.diameter = ecc_max;
    return snap;
}

}  // namespace overlaysim
