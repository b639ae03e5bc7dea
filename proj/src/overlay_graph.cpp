#include "overlaysim/overlay_graph.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <unordered_set>

#include "overlaysim/errors.hpp"

namespace overlaysim {
namespace {

constexpr int kBuildAttempts = 1000;
constexpr int kStubRetries = 64;

uint64_t edge_key(uint32_t a, uint32_t b) {
    if (a > b) std::swap(a, b);
    return (uint64_t{a} << 32) | b;
}

void validate_bounds(const DegreeBounds& b) {
    if (b.d_min < 1 || b.d_min > b.d_max)
        throw ParameterError("degree bounds require 1 <= d_min <= d_max");
}

}  // namespace

OverlayGraph::OverlayGraph(DegreeBounds bounds, uint64_t seed)
    : bounds_(bounds), rng_(seed), seed_(seed) {
    validate_bounds(bounds_);
}

// -- private helpers ---------------------------------------------------

uint32_t OverlayGraph::slot_of(const NodeId& id) const {
    auto it = index_.find(id);
    if (it == index_.end())
        throw NotFoundError("no alive node " + id.to_string());
    return it->second;
}

uint32_t OverlayGraph::new_slot(const NodeId& id) {
    if (index_.count(id))
        throw CollisionError("node id already present: " + id.to_string());
    uint32_t s = static_cast<uint32_t>(slots_.size());
    slots_.push_back(Slot{id, true, kNoFamily, {}, {}});
    index_.emplace(id, s);
    ++alive_count_;
    return s;
}

bool OverlayGraph::same_family(uint32_t a, uint32_t b) const {
    return slots_[a].family != kNoFamily && slots_[a].family == slots_[b].family;
}

bool OverlayGraph::adjacent(uint32_t a, uint32_t b) const {
    const auto& p = slots_[a].peers;
    return std::binary_search(p.begin(), p.end(), b);
}

void OverlayGraph::link(uint32_t a, uint32_t b) {
    auto& pa = slots_[a].peers;
    auto& pb = slots_[b].peers;
    pa.insert(std::lower_bound(pa.begin(), pa.end(), b), b);
    pb.insert(std::lower_bound(pb.begin(), pb.end(), a), a);
    dirty_.insert(a);
    dirty_.insert(b);
}

void OverlayGraph::unlink(uint32_t a, uint32_t b) {
    auto& pa = slots_[a].peers;
    auto& pb = slots_[b].peers;
    pa.erase(std::lower_bound(pa.begin(), pa.end(), b));
    pb.erase(std::lower_bound(pb.begin(), pb.end(), a));
    erase_non_entry(slots_[a], b);
    erase_non_entry(slots_[b], a);
    dirty_.insert(a);
    dirty_.insert(b);
}

void OverlayGraph::erase_non_entry(Slot& s, uint32_t peer) {
    auto it = std::lower_bound(s.non.begin(), s.non.end(), peer,
                               [](const auto& e, uint32_t v) { return e.first < v; });
    if (it != s.non.end() && it->first == peer) s.non.erase(it);
}

std::vector<uint32_t> OverlayGraph::sorted_by_id(std::vector<uint32_t> slots) const {
    std::sort(slots.begin(), slots.end(), [this](uint32_t a, uint32_t b) {
        return slots_[a].id < slots_[b].id;
    });
    return slots;
}

// -- construction -------------------------------------------------------

bool OverlayGraph::try_pair_regular(uint32_t n, uint32_t k, Rng& rng,
                                    std::vector<std::pair<uint32_t, uint32_t>>& edges) {
    std::vector<uint32_t> stubs;
    stubs.reserve(static_cast<size_t>(n) * k);
    for (uint32_t v = 0; v < n; ++v)
        for (uint32_t c = 0; c < k; ++c) stubs.push_back(v);
    for (size_t i = stubs.size() - 1; i > 0; --i)
        std::swap(stubs[i], stubs[rng.below(i + 1)]);

    std::unordered_set<uint64_t> seen;
    seen.reserve(stubs.size());
    edges.clear();
    edges.reserve(stubs.size() / 2);
    while (!stubs.empty()) {
        uint32_t u = stubs.back();
        size_t pick = stubs.size();
        for (int t = 0; t < kStubRetries && pick == stubs.size(); ++t) {
            size_t j = rng.below(stubs.size() - 1);
            if (stubs[j] != u && !seen.count(edge_key(u, stubs[j]))) pick = j;
        }
        if (pick == stubs.size()) {
            for (size_t j = 0; j + 1 < stubs.size(); ++j) {
                if (stubs[j] != u && !seen.count(edge_key(u, stubs[j]))) {
                    pick = j;
                    break;
                }
            }
        }
        if (pick == stubs.size()) return false;  // dead end; caller restarts
        uint32_t v = stubs[pick];
        seen.insert(edge_key(u, v));
        edges.emplace_back(u, v);
        stubs.pop_back();
        stubs[pick] = stubs.back();
        stubs.pop_back();
    }
    return true;
}

bool OverlayGraph::edges_connected(uint32_t n, const std::vector<std::pair<uint32_t, uint32_t>>& edges) {
    std::vector<uint32_t> parent(n);
    for (uint32_t i = 0; i < n; ++i) parent[i] = i;
    auto find = [&](uint32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    uint32_t components = n;
    for (const auto& [a, b] : edges) {
        uint32_t ra = find(a), rb = find(b);
        if (ra != rb) {
            parent[ra] = rb;
            --components;
        }
    }
    return components == 1;
}

OverlayGraph OverlayGraph::build_k_regular(uint32_t n, uint32_t k, uint64_t seed) {
    return build_k_regular(n, k, seed, DegreeBounds{k, 2 * k});
}

OverlayGraph OverlayGraph::build_k_regular(uint32_t n, uint32_t k, uint64_t seed, DegreeBounds bounds) {
    if (k < 1 || n <= k)
        throw ParameterError("k-regular graph needs n > k >= 1");
    if ((static_cast<uint64_t>(n) * k) % 2 != 0)
        throw ParameterError("k-regular graph needs n*k even");
    validate_bounds(bounds);
    if (bounds.d_min > k || bounds.d_max < k)
        throw ParameterError("degree bounds must admit the initial degree k");

    OverlayGraph g(bounds, seed);
    g.built_k_ = k;
    g.slots_.reserve(n);
    for (uint32_t i = 0; i < n; ++i) {
        NodeId id = NodeId::random(g.rng_);
        while (g.index_.count(id)) id = NodeId::random(g.rng_);
        g.new_slot(id);
    }

    std::vector<std::pair<uint32_t, uint32_t>> edges;
    bool ok = false;
    for (int attempt = 0; attempt < kBuildAttempts && !ok; ++attempt)
        ok = try_pair_regular(n, k, g.rng_, edges) && edges_connected(n, edges);
    if (!ok)
        throw GenerationError("no connected simple k-regular graph after bounded retries");

    for (const auto& [a, b] : edges) g.link(a, b);
    g.complete_round();
    return g;
}

OverlayGraph OverlayGraph::from_edges(const std::vector<NodeId>& nodes,
                                      const std::vector<std::pair<NodeId, NodeId>>& edges,
                                      DegreeBounds bounds, uint64_t seed) {
    OverlayGraph g(bounds, seed);
    g.slots_.reserve(nodes.size());
    for (const auto& id : nodes) {
        if (g.index_.count(id))
            throw ParameterError("duplicate node id: " + id.to_string());
        g.new_slot(id);
    }
    for (const auto& [a, b] : edges) {
        auto ia = g.index_.find(a), ib = g.index_.find(b);
        if (ia == g.index_.end() || ib == g.index_.end())
            throw ParameterError("edge references unknown node");
        if (ia->second == ib->second)
            throw ParameterError("self-loop edge: " + a.to_string());
        if (g.adjacent(ia->second, ib->second))
            throw ParameterError("duplicate edge: " + a.to_string() + " " + b.to_string());
        g.link(ia->second, ib->second);
    }
    g.complete_round();
    return g;
}

// -- queries -------------------------------------------------------------

std::vector<NodeId> OverlayGraph::alive_ids() const {
    std::vector<NodeId> out;
    out.reserve(index_.size());
    for (const auto& [id, _] : index_) out.push_back(id);
    return out;
}

uint32_t OverlayGraph::degree(const NodeId& id) const {
    return static_cast<uint32_t>(slots_[slot_of(id)].peers.size());
}

std::vector<NodeId> OverlayGraph::peers(const NodeId& id) const {
    const Slot& s = slots_[slot_of(id)];
    std::vector<NodeId> out;
    out.reserve(s.peers.size());
    for (uint32_t p : s.peers) out.push_back(slots_[p].id);
    std::sort(out.begin(), out.end());
    return out;
}

bool OverlayGraph::has_edge(const NodeId& a, const NodeId& b) const {
    return adjacent(slot_of(a), slot_of(b));
}

std::map<NodeId, std::vector<NodeId>> OverlayGraph::non_table(const NodeId& id) const {
    const Slot& s = slots_[slot_of(id)];
    std::map<NodeId, std::vector<NodeId>> out;
    for (const auto& [peer, announced] : s.non) {
        std::vector<NodeId> ids;
        ids.reserve(announced.size());
        for (uint32_t a : announced) ids.push_back(slots_[a].id);
        std::sort(ids.begin(), ids.end());
        out.emplace(slots_[peer].id, std::move(ids));
    }
    return out;
}

OverlayNode OverlayGraph::node(const NodeId& id) const {
    return OverlayNode{id, peers(id), non_table(id), true};
}

uint64_t OverlayGraph::edge_count() const {
    uint64_t twice = 0;
    for (const auto& [_, s] : index_) twice += slots_[s].peers.size();
    return twice / 2;
}

uint32_t OverlayGraph::max_degree() const {
    size_t best = 0;
    for (const auto& [_, s] : index_) best = std::max(best, slots_[s].peers.size());
    return static_cast<uint32_t>(best);
}

// -- mutation primitives --------------------------------------------------

void OverlayGraph::add_node(const NodeId& id) {
    new_slot(id);
    dirty_.insert(index_.at(id));
}

void OverlayGraph::add_edge(const NodeId& a, const NodeId& b) {
    uint32_t sa = slot_of(a), sb = slot_of(b);
    if (sa == sb) throw ParameterError("self-loop edge: " + a.to_string());
    if (adjacent(sa, sb))
        throw ParameterError("edge already present: " + a.to_string() + " " + b.to_string());
    if (same_family(sa, sb))
        throw ParameterError("same-family nodes refuse to link: " + a.to_string() + " " +
                             b.to_string());
    link(sa, sb);
}

void OverlayGraph::set_family(const NodeId& id, uint32_t family) {
    slots_[slot_of(id)].family = family;
}

uint32_t OverlayGraph::family_of(const NodeId& id) const {
    return slots_[slot_of(id)].family;
}

void OverlayGraph::remove_edge(const NodeId& a, const NodeId& b) {
    uint32_t sa = slot_of(a), sb = slot_of(b);
    if (!adjacent(sa, sb))
        throw NotFoundError("edge not present: " + a.to_string() + " " + b.to_string());
    unlink(sa, sb);
}

void OverlayGraph::complete_round() {
    if (dirty_.empty()) return;
    for (uint32_t s : dirty_) {
        Slot& slot = slots_[s];
        if (!slot.alive) continue;
        // Refresh own knowledge and announce to every current peer. The
        // result only depends on end-of-round peer sets, so the iteration
        // order of the dirty set cannot matter.
        slot.non.clear();
        slot.non.reserve(slot.peers.size());
        for (uint32_t p : slot.peers) slot.non.emplace_back(p, slots_[p].peers);
        for (uint32_t p : slot.peers) {
            Slot& ps = slots_[p];
            auto it = std::lower_bound(ps.non.begin(), ps.non.end(), s,
                                       [](const auto& e, uint32_t v) { return e.first < v; });
            if (it != ps.non.end() && it->first == s)
                it->second = slot.peers;
            else
                ps.non.emplace(it, s, slot.peers);
        }
    }
    dirty_.clear();
}

// -- maintenance operations -------------------------------------------------

RepairReport OverlayGraph::delete_node(const NodeId& target, bool repair) {
    return delete_node(target, RepairOptions{repair, repair});
}

RepairReport OverlayGraph::delete_node(const NodeId& target, const RepairOptions& opts) {
    uint32_t t = slot_of(target);
    RepairReport report;
    report.deleted = target;

    std::vector<uint32_t> former = sorted_by_id(slots_[t].peers);
    for (uint32_t w : former) {
        auto& pw = slots_[w].peers;
        pw.erase(std::lower_bound(pw.begin(), pw.end(), t));
        erase_non_entry(slots_[w], t);
        dirty_.insert(w);
    }
    slots_[t].peers.clear();
    slots_[t].non.clear();
    slots_[t].alive = false;
    dirty_.erase(t);
    index_.erase(target);
    --alive_count_;
    ++step_;

    if (opts.repair) {
        // A former neighbor that never handshakes takes no part in the
        // pairwise reconnection; neither do two nodes of one family.
        std::vector<bool> refused(former.size(), false);
        if (opts.refuse)
            for (size_t i = 0; i < former.size(); ++i)
                refused[i] = opts.refuse->count(slots_[former[i]].id) != 0;
        for (size_t i = 0; i < former.size(); ++i) {
            if (refused[i]) continue;
            for (size_t j = i + 1; j < former.size(); ++j) {
                if (refused[j] || same_family(former[i], former[j])) continue;
                if (!adjacent(former[i], former[j])) {
                    link(former[i], former[j]);
                    report.edges_added.emplace_back(slots_[former[i]].id, slots_[former[j]].id);
                }
            }
        }
        if (opts.prune) {
            for (const auto& [_, s] : index_)
                if (slots_[s].peers.size() > bounds_.d_max) prune_slot(s, &report);
        }
    }
    complete_round();
    return report;
}

void OverlayGraph::delete_many(const std::vector<NodeId>& targets) {
    for (const NodeId& id : targets) {
        uint32_t t = slot_of(id);
        for (uint32_t w : slots_[t].peers) {
            auto& pw = slots_[w].peers;
            pw.erase(std::lower_bound(pw.begin(), pw.end(), t));
            erase_non_entry(slots_[w], t);
            dirty_.insert(w);
        }
        slots_[t].peers.clear();
        slots_[t].non.clear();
        slots_[t].alive = false;
        dirty_.erase(t);
        index_.erase(id);
        --alive_count_;
        ++step_;
    }
    complete_round();
}

std::vector<NodeId> OverlayGraph::prune_slot(uint32_t s, RepairReport* report) {
    std::vector<NodeId> removed;
    while (slots_[s].peers.size() > bounds_.d_max) {
        std::vector<uint32_t> cands = sorted_by_id(slots_[s].peers);
        size_t top = 0;
        for (uint32_t p : cands) top = std::max(top, slots_[p].peers.size());
        std::erase_if(cands, [&](uint32_t p) { return slots_[p].peers.size() != top; });
        uint32_t victim = cands.size() > 1 ? cands[rng_.below(cands.size())] : cands[0];
        unlink(s, victim);
        removed.push_back(slots_[victim].id);
        if (report) report->edges_pruned.emplace_back(slots_[s].id, slots_[victim].id);
    }
    return removed;
}

std::vector<NodeId> OverlayGraph::prune(const NodeId& id) {
    auto removed = prune_slot(slot_of(id), nullptr);
    complete_round();
    return removed;
}

std::vector<NodeId> OverlayGraph::replenish_slot(uint32_t s, const std::set<NodeId>* refuse) {
    std::vector<NodeId> added;
    while (slots_[s].peers.size() < bounds_.d_min) {
        std::vector<uint32_t> cands;
        for (const auto& [_, announced] : slots_[s].non) {
            for (uint32_t c : announced) {
                if (c == s || !slots_[c].alive) continue;
                if (slots_[c].peers.size() >= bounds_.d_max) continue;
                if (adjacent(s, c) || same_family(s, c)) continue;
                if (refuse && refuse->count(slots_[c].id)) continue;
                cands.push_back(c);
            }
        }
        std::sort(cands.begin(), cands.end(), [this](uint32_t a, uint32_t b) {
            return slots_[a].id < slots_[b].id;
        });
        cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
        if (cands.empty()) break;
        uint32_t chosen = cands.size() > 1 ? cands[rng_.below(cands.size())] : cands[0];
        link(s, chosen);
        added.push_back(slots_[chosen].id);
    }
    return added;
}

std::vector<NodeId> OverlayGraph::replenish(const NodeId& id) {
    auto added = replenish_slot(slot_of(id), nullptr);
    complete_round();
    return added;
}

std::vector<NodeId> OverlayGraph::replenish(const NodeId& id, const std::set<NodeId>& refuse) {
    auto added = replenish_slot(slot_of(id), &refuse);
    complete_round();
    return added;
}

void OverlayGraph::prune_all() {
    for (const auto& [_, s] : index_)
        if (slots_[s].peers.size() > bounds_.d_max) prune_slot(s, nullptr);
    complete_round();
}

void OverlayGraph::replenish_all() {
    for (const auto& [_, s] : index_)
        if (slots_[s].peers.size() < bounds_.d_min) replenish_slot(s, nullptr);
    complete_round();
}

void OverlayGraph::rotate_address(const NodeId& current, const NodeId& fresh) {
    uint32_t s = slot_of(current);
    if (index_.count(fresh))
        throw CollisionError("node id already present: " + fresh.to_string());
    index_.erase(current);
    slots_[s].id = fresh;
    index_.emplace(fresh, s);
    // Peers and announcements reference the slot, so every view of the
    // node renders the new id at once; nothing else moves.
}

// -- checks & serialization --------------------------------------------------

void OverlayGraph::audit() const {
    if (!dirty_.empty())
        throw AuditError("maintenance round left incomplete");
    if (alive_count_ != index_.size())
        throw AuditError("alive count disagrees with index");
    for (const auto& [id, s] : index_) {
        const Slot& slot = slots_[s];
        if (!slot.alive || !(slot.id == id))
            throw AuditError("index entry mismatched for " + id.to_string());
        if (!std::is_sorted(slot.peers.begin(), slot.peers.end()))
            throw AuditError("peer list not sorted for " + id.to_string());
        if (std::adjacent_find(slot.peers.begin(), slot.peers.end()) != slot.peers.end())
            throw AuditError("parallel edge at " + id.to_string());
        if (slot.non.size() > slot.peers.size())
            throw AuditError("NoN keys exceed peer set at " + id.to_string());
        for (uint32_t p : slot.peers) {
            if (p == s) throw AuditError("self-loop at " + id.to_string());
            if (!slots_[p].alive)
                throw AuditError("edge to dead node from " + id.to_string());
            if (!adjacent(p, s))
                throw AuditError("asymmetric edge at " + id.to_string());
        }
        for (const auto& [p, announced] : slot.non) {
            if (!adjacent(s, p))
                throw AuditError("NoN key is not a peer at " + id.to_string());
            if (announced != slots_[p].peers)
                throw AuditError("stale NoN announcement at " + id.to_string());
        }
        if (slot.non.size() != slot.peers.size())
            throw AuditError("NoN table missing a peer at " + id.to_string());
    }
}

void OverlayGraph::audit_bounds() const {
    for (const auto& [id, s] : index_) {
        size_t deg = slots_[s].peers.size();
        if (deg > bounds_.d_max)
            throw AuditError("degree above d_max at " + id.to_string());
        size_t floor = std::min<size_t>(bounds_.d_min, alive_count_ > 0 ? alive_count_ - 1 : 0);
        if (deg < floor)
            throw AuditError("degree below d_min at " + id.to_string());
    }
}

std::string OverlayGraph::serialize() const {
    std::vector<std::string> lines;
    lines.reserve(edge_count());
    for (const auto& [id, s] : index_) {
        for (uint32_t p : slots_[s].peers) {
            if (id < slots_[p].id)
                lines.push_back(id.to_string() + " " + slots_[p].id.to_string());
        }
    }
    std::sort(lines.begin(), lines.end());
    std::string out = std::to_string(alive_count_) + " " + std::to_string(built_k_) + " " +
                      std::to_string(seed_) + " " + std::to_string(step_) + "\n";
    for (const auto& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

OverlayGraph OverlayGraph::parse(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string header;
    if (!std::getline(in, header))
        throw IoError("empty graph snapshot");
    std::istringstream hs(header);
    uint64_t n = 0, k = 0, seed = 0, step = 0;
    if (!(hs >> n >> k >> seed >> step))
        throw IoError("bad snapshot header: " + header);

    std::vector<std::pair<NodeId, NodeId>> edges;
    std::map<NodeId, bool> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto sp = line.find(' ');
        if (sp == std::string::npos)
            throw IoError("bad edge line: " + line);
        NodeId a = NodeId::from_string(std::string_view(line).substr(0, sp));
        NodeId b = NodeId::from_string(std::string_view(line).substr(sp + 1));
        ids[a] = true;
        ids[b] = true;
        edges.emplace_back(a, b);
    }
    if (ids.size() != n)
        throw IoError("snapshot node count mismatch");

    std::vector<NodeId> nodes;
    nodes.reserve(ids.size());
    for (const auto& [id, _] : ids) nodes.push_back(id);
    // Bounds are not part of the format; reloaded graphs get the builder's
    // default for their k (or the widest range when k is unrecorded).
    uint32_t kk = static_cast<uint32_t>(k);
    DegreeBounds bounds = kk >= 1
                              ? DegreeBounds{kk, 2 * kk}
                              : DegreeBounds{1, std::max<uint32_t>(static_cast<uint32_t>(n), 1)};
    OverlayGraph g = from_edges(nodes, edges, bounds, seed);
    g.built_k_ = kk;
    g.step_ = step;
    return g;
}

std::vector<NodeId> bootstrap_subset(const std::vector<NodeId>& peer_list, double p, uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0))
        throw ParameterError("inclusion probability must lie in [0, 1]");
    Rng rng(seed);
    std::vector<NodeId> out;
    for (const auto& id : peer_list)
        if (rng.uniform01() < p) out.push_back(id);
    return out;
}

}  // namespace overlaysim
