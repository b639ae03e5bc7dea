#include "overlaysim/sim_runner.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "overlaysim/errors.hpp"
#include "overlaysim/hash.hpp"
#include "overlaysim/rng.hpp"

namespace overlaysim {
namespace {

using nlohmann::json;

// Scenario RNG streams, mixed with the per-run seed so one seed pins the
// whole run while the graph builder and the attackers stay decorrelated.
constexpr uint64_t kCampaignStream = 0xca;
constexpr uint64_t kAttackerStream = 0x50a9;
constexpr uint64_t kDriverStream = 0xd21;

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw IoError("unformattable float");
    return std::string(buf, end);
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << text;
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

struct Validator {
    std::vector<std::string> violations;

    void fail(std::string msg) { violations.push_back(std::move(msg)); }

    bool object(const json& j, const char* where) {
        if (j.is_object()) return true;
        fail(std::string(where) + " must be an object");
        return false;
    }

    // Returns the value when present and an unsigned integer; 0 otherwise
    // (with a recorded violation when required or mistyped).
    uint64_t uint_field(const json& obj, const std::string& owner, const char* key,
                        bool required, bool* present = nullptr) {
        std::string name = owner.empty() ? key : owner + "." + key;
        if (!obj.contains(key)) {
            if (present) *present = false;
            if (required) fail(name + " is required");
            return 0;
        }
        if (present) *present = true;
        const json& v = obj.at(key);
        if (!v.is_number_unsigned()) {
            fail(name + " must be a non-negative integer");
            return 0;
        }
        return v.get<uint64_t>();
    }

    double number_field(const json& obj, const std::string& owner, const char* key,
                        bool required, double fallback) {
        std::string name = owner.empty() ? key : owner + "." + key;
        if (!obj.contains(key)) {
            if (required) fail(name + " is required");
            return fallback;
        }
        const json& v = obj.at(key);
        if (!v.is_number()) {
            fail(name + " must be a number");
            return fallback;
        }
        return v.get<double>();
    }

    bool bool_field(const json& obj, const std::string& owner, const char* key, bool fallback) {
        std::string name = owner.empty() ? key : owner + "." + key;
        if (!obj.contains(key)) return fallback;
        const json& v = obj.at(key);
        if (!v.is_boolean()) {
            fail(name + " must be a boolean");
            return fallback;
        }
        return v.get<bool>();
    }

    std::string string_field(const json& obj, const std::string& owner, const char* key,
                             bool required) {
        std::string name = owner.empty() ? key : owner + "." + key;
        if (!obj.contains(key)) {
            if (required) fail(name + " is required");
            return {};
        }
        const json& v = obj.at(key);
        if (!v.is_string()) {
            fail(name + " must be a string");
            return {};
        }
        return v.get<std::string>();
    }

    void known_keys(const json& obj, const std::string& owner,
                    std::initializer_list<const char*> keys) {
        for (const auto& item : obj.items()) {
            bool known = false;
            for (const char* k : keys) {
                if (item.key() == k) {
                    known = true;
                    break;
                }
            }
            if (!known) {
                std::string name = owner.empty() ? item.key() : owner + "." + item.key();
                fail("unknown field: " + name);
            }
        }
    }
};

void parse_topology(Validator& val, const json& j, TopologyConfig& topo) {
    if (!j.contains("topology")) {
        val.fail("topology is required");
        return;
    }
    const json& t = j.at("topology");
    if (!val.object(t, "topology")) return;
    topo.kind = val.string_field(t, "topology", "kind", true);
    if (topo.kind == "regular") {
        val.known_keys(t, "topology", {"kind", "n", "k"});
        topo.n = static_cast<uint32_t>(val.uint_field(t, "topology", "n", true));
        topo.k = static_cast<uint32_t>(val.uint_field(t, "topology", "k", true));
        if (topo.n < 2) val.fail("topology.n must be at least 2");
        if (topo.k < 1) val.fail("topology.k must be at least 1");
        if (topo.n >= 2 && topo.k >= topo.n) val.fail("topology.k must be below topology.n");
        if (topo.n >= 2 && topo.k >= 1 && (uint64_t(topo.n) * topo.k) % 2 != 0)
            val.fail("topology.n * topology.k must be even");
    } else if (topo.kind == "superonion") {
        val.known_keys(t, "topology", {"kind", "n", "m", "i", "probe_ttl"});
        topo.n = static_cast<uint32_t>(val.uint_field(t, "topology", "n", true));
        topo.m = static_cast<uint32_t>(val.uint_field(t, "topology", "m", true));
        topo.i = static_cast<uint32_t>(val.uint_field(t, "topology", "i", true));
        bool have_ttl = false;
        uint64_t ttl = val.uint_field(t, "topology", "probe_ttl", false, &have_ttl);
        if (have_ttl) {
            if (ttl < 1) val.fail("topology.probe_ttl must be at least 1");
            topo.probe_ttl = static_cast<uint32_t>(ttl);
        }
        SuperOnionConfig probe{topo.n, topo.m, topo.i};
        try {
            probe.validate();
        } catch (const ParameterError& e) {
            val.fail(std::string("topology: ") + e.what());
        }
    } else if (!topo.kind.empty()) {
        val.fail("topology.kind must be regular or superonion");
    }
}

void parse_bounds(Validator& val, const json& j, const TopologyConfig& topo, DegreeBounds& bounds) {
    if (!j.contains("bounds")) return;
    const json& b = j.at("bounds");
    if (!val.object(b, "bounds")) return;
    val.known_keys(b, "bounds", {"d_min", "d_max"});
    bounds.d_min = static_cast<uint32_t>(val.uint_field(b, "bounds", "d_min", true));
    bounds.d_max = static_cast<uint32_t>(val.uint_field(b, "bounds", "d_max", true));
    if (bounds.d_min < 1 || bounds.d_min > bounds.d_max) {
        val.fail("bounds must satisfy 1 <= d_min <= d_max");
    } else if (topo.kind == "regular" && topo.k >= 1 &&
               (topo.k < bounds.d_min || topo.k > bounds.d_max)) {
        val.fail("bounds must bracket topology.k");
    }
}

void parse_scenario(Validator& val, const json& j, const TopologyConfig& topo,
                    ScenarioConfig& sc) {
    if (!j.contains("scenario")) {
        val.fail("scenario is required");
        return;
    }
    const json& s = j.at("scenario");
    if (!val.object(s, "scenario")) return;
    sc.kind = val.string_field(s, "scenario", "kind", true);
    if (sc.kind == "campaign") {
        val.known_keys(s, "scenario",
                       {"kind", "mode", "fraction", "repair", "prune", "replenish",
                        "full_snapshots", "sweep_step"});
        std::string mode = val.string_field(s, "scenario", "mode", true);
        if (mode == "gradual") {
            sc.campaign.mode = CampaignMode::gradual;
        } else if (mode == "simultaneous") {
            sc.campaign.mode = CampaignMode::simultaneous;
        } else if (!mode.empty()) {
            val.fail("scenario.mode must be gradual or simultaneous");
        }
        sc.campaign.fraction = val.number_field(s, "scenario", "fraction", true, 0.0);
        if (sc.campaign.fraction < 0.0 || sc.campaign.fraction > 1.0)
            val.fail("scenario.fraction must lie in [0, 1]");
        sc.campaign.repair = val.bool_field(s, "scenario", "repair", true);
        sc.campaign.prune = val.bool_field(s, "scenario", "prune", true);
        sc.campaign.replenish = val.bool_field(s, "scenario", "replenish", true);
        sc.campaign.full_snapshots = val.bool_field(s, "scenario", "full_snapshots", true);
        sc.campaign.sweep_step = val.number_field(s, "scenario", "sweep_step", false, 0.05);
        if (sc.campaign.sweep_step <= 0.0 || sc.campaign.sweep_step > 1.0)
            val.fail("scenario.sweep_step must lie in (0, 1]");
        if (topo.kind == "superonion") val.fail("scenario campaign requires a regular topology");
    } else if (sc.kind == "soap") {
        val.known_keys(s, "scenario", {"kind", "clone_budget", "declared_lo", "declared_hi"});
        sc.clone_budget = static_cast<uint32_t>(val.uint_field(s, "scenario", "clone_budget", true));
        if (sc.clone_budget < 1) val.fail("scenario.clone_budget must be at least 1");
        sc.declared_lo = static_cast<uint32_t>(val.uint_field(s, "scenario", "declared_lo", false));
        sc.declared_hi = static_cast<uint32_t>(val.uint_field(s, "scenario", "declared_hi", false));
        if ((sc.declared_lo == 0) != (sc.declared_hi == 0)) {
            val.fail("scenario.declared_lo and declared_hi must be given together");
        } else if (sc.declared_lo > sc.declared_hi) {
            val.fail("scenario.declared_lo must not exceed declared_hi");
        }
        if (topo.kind == "superonion") val.fail("scenario soap requires a regular topology");
    } else if (sc.kind == "superonion") {
        val.known_keys(s, "scenario", {"kind", "rounds", "clone_budget"});
        sc.rounds = static_cast<uint32_t>(val.uint_field(s, "scenario", "rounds", true));
        if (sc.rounds < 1) val.fail("scenario.rounds must be at least 1");
        sc.clone_budget = static_cast<uint32_t>(val.uint_field(s, "scenario", "clone_budget", true));
        if (sc.clone_budget < 1) val.fail("scenario.clone_budget must be at least 1");
        if (topo.kind == "regular") val.fail("scenario superonion requires a superonion topology");
    } else if (!sc.kind.empty()) {
        val.fail("scenario.kind must be campaign, soap, or superonion");
    }
}

void parse_defense(Validator& val, const json& j, DefensePolicy& defense) {
    if (!j.contains("defense")) return;
    const json& d = j.at("defense");
    if (!val.object(d, "defense")) return;
    val.known_keys(d, "defense", {"pow", "rate_limit"});
    if (d.contains("pow")) {
        const json& p = d.at("pow");
        if (val.object(p, "defense.pow")) {
            val.known_keys(p, "defense.pow", {"on", "base_work", "growth"});
            defense.pow.on = val.bool_field(p, "defense.pow", "on", false);
            defense.pow.base_work =
                val.number_field(p, "defense.pow", "base_work", defense.pow.on, 0.0);
            defense.pow.growth = val.number_field(p, "defense.pow", "growth", false, 1.0);
        }
    }
    if (d.contains("rate_limit")) {
        const json& r = d.at("rate_limit");
        if (val.object(r, "defense.rate_limit")) {
            val.known_keys(r, "defense.rate_limit", {"on", "base_delay", "per_peer_delay"});
            defense.rate_limit.on = val.bool_field(r, "defense.rate_limit", "on", false);
            defense.rate_limit.base_delay =
                val.uint_field(r, "defense.rate_limit", "base_delay", false);
            defense.rate_limit.per_peer_delay =
                val.uint_field(r, "defense.rate_limit", "per_peer_delay", false);
        }
    }
    try {
        defense.validate();
    } catch (const PolicyError& e) {
        val.fail(std::string("defense: ") + e.what());
    }
}

void parse_seeds(Validator& val, const json& j, std::vector<uint64_t>& seeds) {
    if (!j.contains("seeds")) {
        val.fail("seeds is required");
        return;
    }
    const json& s = j.at("seeds");
    if (!s.is_array()) {
        val.fail("seeds must be an array");
        return;
    }
    if (s.empty()) {
        val.fail("seeds must be nonempty");
        return;
    }
    for (const json& v : s) {
        if (!v.is_number_unsigned()) {
            val.fail("seeds entries must be non-negative integers");
            return;
        }
        seeds.push_back(v.get<uint64_t>());
    }
}

DegreeBounds resolved_bounds(const ExperimentConfig& c) {
    if (c.bounds.d_min != 0 || c.bounds.d_max != 0) return c.bounds;
    return DegreeBounds{c.topology.k, 2 * c.topology.k};
}

}  // namespace

SoapRunOutcome run_soap_scenario(const ExperimentConfig& c, uint64_t seed) {
    OverlayGraph g =
        OverlayGraph::build_k_regular(c.topology.n, c.topology.k, seed, resolved_bounds(c));
    SoapAttacker attacker = make_soap_attacker(g.alive_ids().front(), c.scenario.clone_budget,
                                               mix_seed(seed, kAttackerStream));
    if (c.scenario.declared_lo != 0)
        attacker.declared_degree_range = {c.scenario.declared_lo, c.scenario.declared_hi};

    MetricsTimeSeries series;
    series.seed = seed;
    MetricsSnapshot before = compute_snapshot(g);
    auto results = soap_network(g, attacker, c.defense);
    uint64_t steps = 0;
    for (const auto& [id, r] : results) steps += r.steps;
    MetricsSnapshot after = compute_snapshot(g);
    after.step = before.step + std::max<uint64_t>(1, steps);
    series.rows = {before, after};
    return SoapRunOutcome{std::move(g), std::move(attacker), std::move(results),
                          std::move(series)};
}

namespace {

MetricsTimeSeries run_superonion_seed(const ExperimentConfig& c, uint64_t seed,
                                      SuperOnionEventLog* events) {
    SuperOnionConfig sc{c.topology.n, c.topology.m, c.topology.i};
    sc.probe_ttl = c.topology.probe_ttl;
    std::optional<DegreeBounds> bounds;
    if (c.bounds.d_min || c.bounds.d_max) bounds = c.bounds;
    auto [g, hosts] = build_superonion(sc, seed, bounds);
    SoapAttacker attacker = make_soap_attacker(hosts.front().virtuals.front(),
                                               c.scenario.clone_budget,
                                               mix_seed(seed, kAttackerStream));

    MetricsTimeSeries series;
    series.seed = seed;
    MetricsSnapshot start = compute_snapshot(g);
    start.step = 0;
    series.rows.push_back(start);
    auto rows = run_superonion_rounds(
        g, hosts, attacker, c.defense, c.scenario.rounds, sc.probe_ttl, seed,
        [&](const OverlayGraph& graph, const std::vector<PhysicalHost>&,
            const SuperOnionRoundRow& row, const std::vector<std::pair<NodeId, size_t>>&) {
            MetricsSnapshot snap = compute_snapshot(graph);
            snap.step = row.round;
            series.rows.push_back(snap);
        });
    if (events) {
        events->seed = seed;
        events->rows = std::move(rows);
    }
    return series;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(std::string("config is not valid JSON: ") + e.what());
    }
    Validator val;
    ExperimentConfig c;
    if (!j.is_object()) {
        val.fail("config must be a JSON object");
        throw ValidationError(std::move(val.violations));
    }
    val.known_keys(j, "",
                   {"name", "topology", "bounds", "scenario", "defense", "seeds", "record_every",
                    "output"});
    c.name = val.string_field(j, "", "name", false);
    parse_topology(val, j, c.topology);
    parse_bounds(val, j, c.topology, c.bounds);
    parse_scenario(val, j, c.topology, c.scenario);
    parse_defense(val, j, c.defense);
    parse_seeds(val, j, c.seeds);
    c.record_every = static_cast<uint32_t>(val.uint_field(j, "", "record_every", false));
    c.output = val.string_field(j, "", "output", false);
    if (!val.violations.empty()) throw ValidationError(std::move(val.violations));

    c.scenario.campaign.record_every = c.record_every;
    // nlohmann objects iterate in key order, so dump() is canonical: the
    // digest ignores formatting and key order in the source file.
    std::string canon = j.dump();
    c.digest = to_hex(sha1(as_bytes(canon)));
    return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::vector<SuperOnionRoundRow> run_superonion_rounds(OverlayGraph& g,
                                                      std::vector<PhysicalHost>& hosts,
                                                      SoapAttacker& attacker,
                                                      const DefensePolicy& defense,
                                                      uint32_t rounds, uint32_t ttl, uint64_t seed,
                                                      const SuperOnionObserver& observer) {
    if (rounds < 1) throw ParameterError("rounds must be at least 1");
    Rng pick(mix_seed(seed, kDriverStream));
    std::vector<SuperOnionRoundRow> log;
    log.reserve(rounds);
    for (uint32_t round = 1; round <= rounds; ++round) {
        // Adversary move: the soaping budget covers one virtual between
        // probe rounds, so one uniformly chosen un-contained virtual is
        // attacked per round (trivially at most one per host).
        std::vector<NodeId> eligible;
        for (const PhysicalHost& host : hosts) {
            for (const NodeId& v : host.virtuals) {
                if (!g.contains(v) || attacker.is_clone(v)) continue;
                bool contained = true;
                for (const NodeId& p : g.peers(v)) {
                    if (!attacker.is_clone(p)) {
                        contained = false;
                        break;
                    }
                }
                if (!contained) eligible.push_back(v);
            }
        }
        if (!eligible.empty()) {
            const NodeId& victim =
                eligible.size() > 1 ? eligible[pick.below(eligible.size())] : eligible.front();
            soap_target(g, attacker, victim, defense);
        }

        // Defender move, two phases so probe results match the logically
        // concurrent model: every host probes the same post-attack graph,
        // then suspects are replaced.
        SuperOnionRoundRow row;
        row.round = round;
        for (PhysicalHost& host : hosts) {
            probe_round(g, host, ttl, attacker.clones);
            row.suspected += static_cast<uint32_t>(host.suspected_soaped.size());
        }
        std::vector<std::pair<NodeId, size_t>> fresh;
        for (PhysicalHost& host : hosts) {
            // Probes mark both ends of an unreachable sibling pair, so a
            // suspect that still exchanges traffic with a responsive peer
            // may merely sit across a partition from its siblings. The
            // host holds such a virtual for the next probe instead of
            // paying for a replacement that could migrate it into the
            // minority side. A soaped virtual never gets held: clones
            // answer nothing, so it has no responsive peer.
            std::vector<NodeId> suspects;
            for (const NodeId& v : host.suspected_soaped) {
                bool responsive = false;
                for (const NodeId& p : g.peers(v))
                    if (!attacker.is_clone(p)) {
                        responsive = true;
                        break;
                    }
                if (!responsive) suspects.push_back(v);
            }
            for (size_t idx = 0; idx < suspects.size(); ++idx) {
                uint64_t replace_seed =
                    mix_seed(mix_seed(mix_seed(seed, round), host.host_id), idx);
                try {
                    NodeId id =
                        replace_virtual(g, host, suspects[idx], replace_seed, &attacker.clones);
                    fresh.emplace_back(id, g.degree(id));
                    ++row.replaced;
                } catch (const ReplacementImpossibleError&) {
                    // No sibling has a responsive peer right now. The host
                    // defers this round and re-probes the next; a fresh
                    // sibling or a healed partition usually restores a
                    // bootstrap source.
                    break;
                }
            }
        }
        // Ordinary overlay upkeep: protocol-following nodes top their peer
        // lists back up to d_min. Clones neither replenish nor accept a
        // handshake from anyone except their own soap target.
        for (const NodeId& id : g.alive_ids()) {
            if (attacker.is_clone(id)) continue;
            if (g.degree(id) < g.bounds().d_min) g.replenish(id, attacker.clones);
        }
        if (observer) observer(g, hosts, row, fresh);
        log.push_back(row);
    }
    return log;
}

std::vector<MetricsTimeSeries> run_experiment(const ExperimentConfig& config) {
    return run_experiment(config, nullptr);
}

std::vector<MetricsTimeSeries> run_experiment(const ExperimentConfig& config,
                                              std::vector<SuperOnionEventLog>* events_out) {
    std::vector<MetricsTimeSeries> out;
    out.reserve(config.seeds.size());
    if (events_out) events_out->clear();
    for (uint64_t seed : config.seeds) {
        MetricsTimeSeries series;
        if (config.scenario.kind == "campaign") {
            OverlayGraph g = OverlayGraph::build_k_regular(config.topology.n, config.topology.k,
                                                           seed, resolved_bounds(config));
            Campaign c = config.scenario.campaign;
            c.seed = mix_seed(seed, kCampaignStream);
            series = run_deletion_campaign(g, c);
            series.seed = seed;
        } else if (config.scenario.kind == "soap") {
            series = run_soap_scenario(config, seed).series;
        } else if (config.scenario.kind == "superonion") {
            SuperOnionEventLog events;
            series = run_superonion_seed(config, seed, &events);
            if (events_out) events_out->push_back(std::move(events));
        } else {
            throw ParameterError("unknown scenario kind: " + config.scenario.kind);
        }
        series.provenance_digest = config.digest;
        out.push_back(std::move(series));
    }
    return out;
}

void write_series(const MetricsTimeSeries& series, SeriesFormat format, const std::string& path) {
    if (series.rows.empty()) throw ParameterError("refusing to write an empty series");
    if (format == SeriesFormat::csv) {
        std::string text = "step,alive,avg_closeness,avg_degree_centrality,diameter,components\n";
        for (const MetricsSnapshot& row : series.rows) {
            text += std::to_string(row.step);
            text += ',';
            text += std::to_string(row.alive);
            text += ',';
            text += format_double(row.avg_closeness);
            text += ',';
            text += format_double(row.avg_degree_centrality);
            text += ',';
            text += row.diameter ? std::to_string(*row.diameter) : std::string("inf");
            text += ',';
            text += std::to_string(row.components);
            text += '\n';
        }
        write_text_file(path, text);
        return;
    }
    json j;
    j["provenance_digest"] = series.provenance_digest;
    j["seed"] = series.seed;
    json rows = json::array();
    for (const MetricsSnapshot& row : series.rows) {
        json r;
        r["step"] = row.step;
        r["alive"] = row.alive;
        r["avg_closeness"] = row.avg_closeness;
        r["avg_degree_centrality"] = row.avg_degree_centrality;
        if (row.diameter) {
            r["diameter"] = *row.diameter;
        } else {
            r["diameter"] = nullptr;
        }
        r["components"] = row.components;
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    write_text_file(path, j.dump() + "\n");
}

MetricsTimeSeries read_series_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(std::string("series is not valid JSON: ") + e.what());
    }
    MetricsTimeSeries series;
    try {
        series.provenance_digest = j.at("provenance_digest").get<std::string>();
        series.seed = j.at("seed").get<uint64_t>();
        for (const json& r : j.at("rows")) {
            MetricsSnapshot row;
            row.step = r.at("step").get<uint64_t>();
            row.alive = r.at("alive").get<uint32_t>();
            row.avg_closeness = r.at("avg_closeness").get<double>();
            row.avg_degree_centrality = r.at("avg_degree_centrality").get<double>();
            if (!r.at("diameter").is_null()) row.diameter = r.at("diameter").get<uint32_t>();
            row.components = r.at("components").get<uint32_t>();
            series.rows.push_back(row);
        }
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed series: ") + e.what());
    }
    return series;
}

void write_superonion_events(const SuperOnionEventLog& log, const std::string& path) {
    std::string text = "round,suspected,replaced\n";
    for (const SuperOnionRoundRow& row : log.rows) {
        text += std::to_string(row.round);
        text += ',';
        text += std::to_string(row.suspected);
        text += ',';
        text += std::to_string(row.replaced);
        text += '\n';
    }
    write_text_file(path, text);
}

}  // namespace overlaysim
