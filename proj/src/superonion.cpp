#include "overlaysim/superonion.hpp"

#include <algorithm>
#include <unordered_set>

#include "overlaysim/control_plane.hpp"
#include "overlaysim/errors.hpp"
#include "overlaysim/identity.hpp"
#include "overlaysim/rng.hpp"

namespace overlaysim {
namespace {

constexpr int kBuildAttempts = 1000;
constexpr int kStubRetries = 64;

uint64_t edge_key(uint32_t a, uint32_t b) {
    if (a > b) std::swap(a, b);
    return (uint64_t{a} << 32) | b;
}

// Pairing over virtual indices (host = index / m) that never links two
// virtuals of one host. Returns false on a dead end; caller restarts.
bool try_pair(uint32_t vcount, uint32_t i, uint32_t m, Rng& rng,
              std::vector<std::pair<uint32_t, uint32_t>>& edges) {
    std::vector<uint32_t> stubs;
    stubs.reserve(static_cast<size_t>(vcount) * i);
    for (uint32_t v = 0; v < vcount; ++v)
        for (uint32_t c = 0; c < i; ++c) stubs.push_back(v);
    for (size_t s = stubs.size() - 1; s > 0; --s)
        std::swap(stubs[s], stubs[rng.below(s + 1)]);

    std::unordered_set<uint64_t> seen;
    seen.reserve(stubs.size());
    edges.clear();
    edges.reserve(stubs.size() / 2);
    auto ok_pair = [&](uint32_t a, uint32_t b) {
        return a / m != b / m && !seen.count(edge_key(a, b));
    };
    while (!stubs.empty()) {
        uint32_t u = stubs.back();
        size_t pick = stubs.size();
        for (int t = 0; t < kStubRetries && pick == stubs.size(); ++t) {
            size_t j = rng.below(stubs.size() - 1);
            if (ok_pair(u, stubs[j])) pick = j;
        }
        if (pick == stubs.size()) {
            for (size_t j = 0; j + 1 < stubs.size(); ++j) {
                if (ok_pair(u, stubs[j])) {
                    pick = j;
                    break;
                }
            }
        }
        if (pick == stubs.size()) return false;
        uint32_t v = stubs[pick];
        seen.insert(edge_key(u, v));
        edges.emplace_back(u, v);
        stubs.pop_back();
        stubs[pick] = stubs.back();
        stubs.pop_back();
    }
    return true;
}

bool connected(uint32_t n, const std::vector<std::pair<uint32_t, uint32_t>>& edges) {
    std::vector<uint32_t> parent(n);
    for (uint32_t v = 0; v < n; ++v) parent[v] = v;
    auto find = [&](uint32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    uint32_t parts = n;
    for (const auto& [a, b] : edges) {
        uint32_t ra = find(a), rb = find(b);
        if (ra != rb) {
            parent[ra] = rb;
            --parts;
        }
    }
    return parts == 1;
}

}  // namespace

void SuperOnionConfig::validate() const {
    if (n < 2 || m < 2 || i < 1)
        throw ParameterError("superonion needs n >= 2, m >= 2, i >= 1");
    if ((static_cast<uint64_t>(n) * m * i) % 2 != 0)
        throw ParameterError("superonion needs n*m*i even");
    if (i > (n - 1) * m)
        throw ParameterError("superonion peers per virtual exceed foreign virtual supply");
}

std::pair<OverlayGraph, std::vector<PhysicalHost>> build_superonion(
    const SuperOnionConfig& config, uint64_t seed, std::optional<DegreeBounds> bounds) {
    config.validate();
    uint32_t vcount = config.n * config.m;
    Rng rng(seed);

    std::vector<NodeId> ids;
    ids.reserve(vcount);
    std::set<NodeId> used;
    while (ids.size() < vcount) {
        NodeId id = NodeId::random(rng);
        if (used.insert(id).second) ids.push_back(id);
    }

    // An i=1 overlay is a perfect matching: disconnected whenever more
    // than one edge exists, so connectivity is only demanded when i >= 2
    // (or the matching is a single edge).
    bool want_connected = config.i >= 2 || vcount == 2;
    std::vector<std::pair<uint32_t, uint32_t>> edges;
    bool ok = false;
    for (int attempt = 0; attempt < kBuildAttempts && !ok; ++attempt)
        ok = try_pair(vcount, config.i, config.m, rng, edges) &&
             (!want_connected || connected(vcount, edges));
    if (!ok) throw GenerationError("no feasible superonion pairing after bounded retries");

    std::vector<std::pair<NodeId, NodeId>> id_edges;
    id_edges.reserve(edges.size());
    for (const auto& [a, b] : edges) id_edges.emplace_back(ids[a], ids[b]);
    // i is only the bootstrap degree; maintenance keeps virtuals between
    // 2i and 3i so one containment cannot cut the overlay apart.
    DegreeBounds b = bounds.value_or(DegreeBounds{2 * config.i, 3 * config.i});
    OverlayGraph g = OverlayGraph::from_edges(ids, id_edges, b, mix_seed(seed, 0x736f));

    std::vector<PhysicalHost> hosts(config.n);
    for (uint32_t h = 0; h < config.n; ++h) {
        hosts[h].host_id = h;
        hosts[h].virtuals.assign(ids.begin() + static_cast<size_t>(h) * config.m,
                                 ids.begin() + static_cast<size_t>(h + 1) * config.m);
        hosts[h].peer_target = config.i;
        // Siblings refuse each other permanently: repair webbing around a
        // shared neighbor must never create an intra-host edge.
        for (const NodeId& v : hosts[h].virtuals) g.set_family(v, h);
    }
    return {std::move(g), std::move(hosts)};
}

std::set<NodeId> probe_round(const OverlayGraph& g, PhysicalHost& host, uint32_t ttl) {
    return probe_round(g, host, ttl, {});
}

std::set<NodeId> probe_round(const OverlayGraph& g, PhysicalHost& host, uint32_t ttl,
                             const std::set<NodeId>& silent) {
    if (host.virtuals.size() < 2)
        throw ParameterError("probe round needs a host with at least 2 virtuals");

    Message probe;
    probe.kind = MessageKind::maintenance;

    // heard[v] = v exchanged a probe with some sibling, either direction.
    std::set<NodeId> heard;
    for (const NodeId& v : host.virtuals) {
        if (!g.contains(v)) continue;
        DeliveryReport rep = propagate(g, probe, v, ttl, silent);
        for (const NodeId& w : host.virtuals) {
            if (w == v || !rep.reached.count(w)) continue;
            heard.insert(v);
            heard.insert(w);
        }
    }
    std::set<NodeId> suspected;
    for (const NodeId& v : host.virtuals)
        if (!heard.count(v)) suspected.insert(v);
    host.suspected_soaped = suspected;
    return suspected;
}

NodeId replace_virtual(OverlayGraph& g, PhysicalHost& host, const NodeId& victim, uint64_t seed,
                       const std::set<NodeId>* refuse) {
    auto slot = std::find(host.virtuals.begin(), host.virtuals.end(), victim);
    if (slot == host.virtuals.end())
        throw NotFoundError("victim is not a virtual of this host");

    std::set<NodeId> own(host.virtuals.begin(), host.virtuals.end());
    std::vector<NodeId> sources;
    for (const NodeId& s : host.virtuals) {
        if (s == victim || host.suspected_soaped.count(s) || !g.contains(s)) continue;
        sources.push_back(s);
    }
    if (sources.empty()) {
        // Probes mark both ends of an unreachable sibling pair, so under a
        // partition every virtual can end up suspected at once. The host
        // still sees which of its own virtuals exchange traffic: any
        // sibling with at least one responsive peer remains a usable
        // bootstrap source. Only a host whose every sibling is silenced —
        // surrounded or cut off entirely — is truly isolated.
        for (const NodeId& s : host.virtuals) {
            if (s == victim || !g.contains(s)) continue;
            for (const NodeId& p : g.peers(s)) {
                if (!refuse || !refuse->count(p)) {
                    sources.push_back(s);
                    break;
                }
            }
        }
    }
    if (sources.empty())
        throw ReplacementImpossibleError("every sibling is soaped or gone; host is isolated");

    // Candidates: everything the healthy siblings know through NoN — their
    // peers and those peers' announced peers.
    std::set<NodeId> pool;
    for (const NodeId& s : sources) {
        for (const auto& [peer, announced] : g.non_table(s)) {
            pool.insert(peer);
            for (const NodeId& a : announced) pool.insert(a);
        }
    }
    std::vector<NodeId> candidates;
    for (const NodeId& c : pool) {
        if (own.count(c) || !g.contains(c)) continue;
        if (g.degree(c) >= g.bounds().d_max) continue;
        if (refuse && refuse->count(c)) continue;
        candidates.push_back(c);
    }

    // Abandoning a virtual is an ordinary node departure, so the overlay's
    // self-healing runs: cooperating former peers reconnect pairwise and
    // prune. Peers in refuse never handshake, so a surrounded victim's
    // clones web nothing and fall away inert; for a falsely suspected
    // victim the repair keeps the benign overlay whole.
    if (g.contains(victim)) g.delete_node(victim, RepairOptions{true, true, refuse});

    Rng rng(seed);
    SharedBotKey key = SharedBotKey::random(rng);
    NodeId fresh{};
    for (uint64_t period = 0;; ++period) {
        fresh = derive_period_key(key, period).to_node_id();
        if (!g.contains(fresh)) break;
    }
    g.add_node(fresh);
    g.set_family(fresh, host.host_id);

    uint32_t want = host.peer_target ? host.peer_target : g.bounds().d_min;
    for (uint32_t added = 0; added < want && !candidates.empty(); ++added) {
        size_t pick = candidates.size() > 1 ? rng.below(candidates.size()) : 0;
        g.add_edge(fresh, candidates[pick]);
        candidates.erase(candidates.begin() + static_cast<ptrdiff_t>(pick));
        // A candidate may have just hit d_max; drop all now-full entries.
        std::erase_if(candidates,
                      [&](const NodeId& c) { return g.degree(c) >= g.bounds().d_max; });
    }
    g.complete_round();

    *slot = fresh;
    host.suspected_soaped.erase(victim);
    return fresh;
}

}  // namespace overlaysim
