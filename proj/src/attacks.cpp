#include "overlaysim/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "overlaysim/errors.hpp"

namespace overlaysim {
namespace {

void push_row(MetricsTimeSeries& series, MetricsSnapshot snap) {
    if (!series.rows.empty() && series.rows.back().step == snap.step) return;
    series.rows.push_back(std::move(snap));
}

MetricsTimeSeries run_gradual(OverlayGraph& g, const Campaign& c, const CampaignObserver& obs) {
    MetricsTimeSeries series;
    series.seed = c.seed;
    uint32_t n0 = g.alive_count();

    uint64_t target = static_cast<uint64_t>(std::floor(c.fraction * n0 + 1e-9));
    uint32_t every = c.record_every ? c.record_every : std::max<uint32_t>(1, n0 / 100);
    Rng rng(c.seed);

    push_row(series, compute_snapshot(g));
    if (obs) obs(g, 0);
    for (uint64_t d = 1; d <= target; ++d) {
        std::vector<NodeId> ids = g.alive_ids();
        const NodeId victim = ids[rng.below(ids.size())];
        g.delete_node(victim, RepairOptions{c.repair, c.repair && c.prune});
        if (c.repair && c.replenish) g.replenish_all();
        if (obs) obs(g, d);
        if (d % every == 0 || d == target) push_row(series, compute_snapshot(g));
    }
    return series;
}

MetricsTimeSeries run_simultaneous(const OverlayGraph& g, const Campaign& c,
                                   const CampaignObserver& obs) {
    MetricsTimeSeries series;
    series.seed = c.seed;
    uint32_t n0 = g.alive_count();

    double max_f = std::min(c.fraction, 1.0 - c.sweep_step);
    int points = max_f > 0 ? static_cast<int>(std::floor(max_f / c.sweep_step + 1e-9)) : 0;
    std::vector<NodeId> base_ids = g.alive_ids();
    for (int gi = 0; gi <= points; ++gi) {
        double f = gi * c.sweep_step;
        auto victims_n = static_cast<uint64_t>(std::floor(f * n0 + 1e-9));
        OverlayGraph copy = g;
        Rng pick(mix_seed(c.seed, static_cast<uint64_t>(gi)));
        std::vector<NodeId> ids = base_ids;
        for (uint64_t i = 0; i < victims_n; ++i)
            std::swap(ids[i], ids[i + pick.below(ids.size() - i)]);
        ids.resize(victims_n);
        copy.delete_many(ids);
        if (obs) obs(copy, victims_n);
        push_row(series, c.full_snapshots ? compute_snapshot(copy) : compute_snapshot_basic(copy));
    }
    return series;
}

}  // namespace

MetricsTimeSeries run_deletion_campaign(OverlayGraph& graph, const Campaign& campaign) {
    return run_deletion_campaign(graph, campaign, nullptr);
}

MetricsTimeSeries run_deletion_campaign(OverlayGraph& graph, const Campaign& campaign,
                                        const CampaignObserver& observer) {
    if (!(campaign.fraction >= 0.0 && campaign.fraction <= 1.0))
        throw ParameterError("campaign fraction must lie in [0, 1]");
    if (campaign.mode == CampaignMode::simultaneous &&
        !(campaign.sweep_step > 0.0 && campaign.sweep_step <= 1.0))
        throw ParameterError("sweep step must lie in (0, 1]");
    return campaign.mode == CampaignMode::gradual
               ? run_gradual(graph, campaign, observer)
               : run_simultaneous(graph, campaign, observer);
}

void DefensePolicy::validate() const {
    if (pow.on && !(pow.base_work > 0.0))
        throw ParameterError("pow base_work must be positive when pow is on");
    if (pow.on && !(pow.growth >= 1.0))
        throw ParameterError("pow growth must be at least 1");
}

double pow_cost(uint32_t current_degree, const DefensePolicy& policy) {
    if (!policy.pow.on) throw PolicyError("proof-of-work is off");
    return policy.pow.base_work * std::pow(policy.pow.growth, static_cast<double>(current_degree));
}

uint64_t rate_limit_delay(uint32_t current_degree, const DefensePolicy& policy) {
    if (!policy.rate_limit.on) throw PolicyError("rate limiting is off");
    return policy.rate_limit.base_delay + policy.rate_limit.per_peer_delay * current_degree;
}

SoapAttacker make_soap_attacker(const NodeId& compromised, uint32_t clone_budget, uint64_t seed) {
    SoapAttacker a;
    a.compromised = compromised;
    a.clone_budget = clone_budget;
    a.seed = seed;
    return a;
}

namespace {

void ensure_started(SoapAttacker& a, const OverlayGraph& g) {
    if (a.started) return;
    a.rng = Rng(a.seed);
    if (a.declared_degree_range == std::pair<uint32_t, uint32_t>{0, 0})
        a.declared_degree_range = {1, g.bounds().d_min};
    if (a.declared_degree_range.first < 1 ||
        a.declared_degree_range.first > a.declared_degree_range.second)
        throw ParameterError("declared degree range must satisfy 1 <= lo <= hi");
    a.started = true;
}

bool all_clones(const OverlayGraph& g, const SoapAttacker& a, const NodeId& t) {
    for (const NodeId& p : g.peers(t))
        if (!a.is_clone(p)) return false;
    return true;
}

NodeId fresh_clone_id(const OverlayGraph& g, SoapAttacker& a) {
    NodeId id = NodeId::random(a.rng);
    while (g.contains(id) || a.clones.count(id)) id = NodeId::random(a.rng);
    return id;
}

std::set<NodeId> peer_set(const OverlayGraph& g, const NodeId& id) {
    auto p = g.peers(id);
    return std::set<NodeId>(p.begin(), p.end());
}

}  // namespace

ContainmentResult soap_target(OverlayGraph& graph, SoapAttacker& attacker, const NodeId& target,
                              const DefensePolicy& defense) {
    defense.validate();
    ensure_started(attacker, graph);
    if (attacker.clone_budget < graph.bounds().d_max)
        throw ParameterError("clone budget cannot fill a peer list (needs >= d_max)");
    if (attacker.is_clone(target)) throw ParameterError("target is already a clone");
    if (!graph.contains(target)) throw NotFoundError("no alive node " + target.to_string());

    ContainmentResult result;
    if (all_clones(graph, attacker, target)) {
        result.contained = true;
        result.final_neighbors = peer_set(graph, target);
        return result;
    }

    const auto [lo, hi] = attacker.declared_degree_range;
    uint32_t budget = attacker.clone_budget;
    while (budget > 0) {
        --budget;
        uint32_t declared =
            hi > lo ? lo + static_cast<uint32_t>(attacker.rng.below(hi - lo + 1)) : lo;
        uint32_t deg = graph.degree(target);
        result.steps += 1;
        if (defense.rate_limit.on) result.steps += rate_limit_delay(deg, defense);
        if (defense.pow.on) result.work += pow_cost(deg, defense);

        std::vector<NodeId> peers = graph.peers(target);
        uint32_t max_peer_deg = 0;
        for (const NodeId& p : peers) max_peer_deg = std::max(max_peer_deg, graph.degree(p));
        if (!(declared < max_peer_deg || deg < graph.bounds().d_max)) continue;

        NodeId victim{};
        bool evicted = false;
        if (deg >= graph.bounds().d_max) {
            uint32_t top = 0;
            for (const NodeId& p : peers) top = std::max(top, graph.degree(p));
            std::vector<NodeId> ties;
            for (const NodeId& p : peers)
                if (graph.degree(p) == top) ties.push_back(p);
            victim = ties.size() > 1 ? ties[graph.rng().below(ties.size())] : ties[0];
            graph.remove_edge(target, victim);
            evicted = true;
            if (!attacker.is_clone(victim)) result.forgotten_benign.push_back(victim);
        }
        NodeId clone = fresh_clone_id(graph, attacker);
        graph.add_node(clone);
        attacker.clones.insert(clone);
        graph.add_edge(target, clone);
        graph.complete_round();
        // The evicted peer reseeds its peer list, but clones never accept
        // a handshake from anyone except their own target.
        if (evicted && !attacker.is_clone(victim) && graph.degree(victim) < graph.bounds().d_min)
            graph.replenish(victim, attacker.clones);
        if (all_clones(graph, attacker, target)) {
            result.contained = true;
            break;
        }
    }
    result.final_neighbors = peer_set(graph, target);
    return result;
}

std::map<NodeId, ContainmentResult> soap_network(OverlayGraph& graph, SoapAttacker& attacker,
                                                 const DefensePolicy& defense) {
    defense.validate();
    ensure_started(attacker, graph);
    if (!graph.contains(attacker.compromised))
        throw NotFoundError("compromised entry node is not alive");

    std::map<NodeId, ContainmentResult> results;
    std::set<NodeId> discovered;
    std::deque<NodeId> queue;
    auto discover = [&](const NodeId& id) {
        if (!attacker.is_clone(id) && discovered.insert(id).second) queue.push_back(id);
    };
    discover(attacker.compromised);
    for (const NodeId& p : graph.peers(attacker.compromised)) discover(p);

    // Generous hard cap; convergence is expected long before (the clone
    // supply of un-contained nodes shrinks every sweep).
    size_t invocations_left = 100 * (graph.alive_count() + 1);
    while (invocations_left > 0) {
        while (!queue.empty() && invocations_left > 0) {
            --invocations_left;
            NodeId t = queue.front();
            queue.pop_front();
            if (!graph.contains(t)) continue;
            std::vector<NodeId> before = graph.peers(t);
            ContainmentResult r = soap_target(graph, attacker, t, defense);
            for (const NodeId& p : before) discover(p);
            for (const NodeId& p : graph.peers(t)) discover(p);
            auto it = results.find(t);
            if (it != results.end()) {
                r.steps += it->second.steps;
                r.work += it->second.work;
                r.forgotten_benign.insert(r.forgotten_benign.begin(),
                                          it->second.forgotten_benign.begin(),
                                          it->second.forgotten_benign.end());
            }
            results[t] = std::move(r);
        }
        // Replenishment may have undone someone's containment; requeue
        // until the reached set is quiescent.
        bool stable = true;
        for (const NodeId& id : discovered) {
            if (!graph.contains(id)) continue;
            if (!all_clones(graph, attacker, id)) {
                queue.push_back(id);
                stable = false;
            }
        }
        if (stable) break;
    }
    // A node can end up surrounded after its own last soaping pass (a
    // neighbor's eviction may have dropped the final benign edge), so the
    // stored flags are re-derived from the settled graph.
    for (auto& [id, r] : results) {
        if (!graph.contains(id)) continue;
        r.contained = all_clones(graph, attacker, id);
        r.final_neighbors = peer_set(graph, id);
    }
    return results;
}

}  // namespace overlaysim
