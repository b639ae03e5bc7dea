#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "overlaysim/attacks.hpp"
#include "overlaysim/metrics.hpp"
#include "overlaysim/superonion.hpp"

namespace overlaysim {

struct TopologyConfig {
    std::string kind;  // "regular" | "superonion"
    uint32_t n = 0;
    uint32_t k = 0;         // regular only
    uint32_t m = 0;         // superonion only
    uint32_t i = 0;         // superonion only
    uint32_t probe_ttl = 8;  // superonion only
};

struct ScenarioConfig {
    std::string kind;  // "campaign" | "soap" | "superonion"
    Campaign campaign;          // campaign scenarios
    uint32_t clone_budget = 0;  // soap / superonion scenarios
    uint32_t declared_lo = 0;   // 0 = default [1, d_min]
    uint32_t declared_hi = 0;
    uint32_t rounds = 0;  // superonion probe+replace cycles
};

/// One experiment file, parsed and validated. The digest is the SHA-1 of
/// the canonical (sorted-key, compact) JSON, so formatting and key order
/// do not change provenance.
struct ExperimentConfig {
    std::string name;
    TopologyConfig topology;
    DegreeBounds bounds{0, 0};  // {0,0} = module default
    ScenarioConfig scenario;
    DefensePolicy defense;
    std::vector<uint64_t> seeds;
    uint32_t record_every = 0;
    std::string output;  // path prefix for result files
    std::string digest;  // canonical config SHA-1, hex

    /// Parse + validate. Throws ValidationError listing every violation,
    /// IoError for unreadable files or non-JSON input.
    static ExperimentConfig from_json_text(std::string_view text);
    static ExperimentConfig from_file(const std::string& path);
};

/// Per-round defender bookkeeping of a superonion run.
struct SuperOnionRoundRow {
    uint32_t round = 0;
    uint32_t suspected = 0;
    uint32_t replaced = 0;
};

struct SuperOnionEventLog {
    uint64_t seed = 0;
    std::vector<SuperOnionRoundRow> rows;
};

/// One adversary/defender cycle per round: the attacker soaps one
/// uniformly chosen un-contained virtual (its budget covers one virtual
/// between probe rounds — never one per host, which would shatter the
/// benign overlay beyond NoN repair); then every host probes the same
/// post-attack graph (clones silent) and replaces its suspected virtuals.
/// The observer sees the graph, hosts, the round row, and each fresh
/// replacement id paired with its degree at the moment it joined (later
/// churn within the same round may legitimately move that degree).
using SuperOnionObserver = std::function<void(
    const OverlayGraph&, const std::vector<PhysicalHost>&, const SuperOnionRoundRow&,
    const std::vector<std::pair<NodeId, size_t>>&)>;

std::vector<SuperOnionRoundRow> run_superonion_rounds(OverlayGraph& g,
                                                      std::vector<PhysicalHost>& hosts,
                                                      SoapAttacker& attacker,
                                                      const DefensePolicy& defense,
                                                      uint32_t rounds, uint32_t ttl, uint64_t seed,
                                                      const SuperOnionObserver& observer = nullptr);

/// Everything a soap scenario produced for one seed: the attacked graph,
/// the attacker's final clone bookkeeping, the per-target containment
/// results, and a before/after metrics series.
struct SoapRunOutcome {
    OverlayGraph graph;
    SoapAttacker attacker;
    std::map<NodeId, ContainmentResult> results;
    MetricsTimeSeries series;
};

SoapRunOutcome run_soap_scenario(const ExperimentConfig& config, uint64_t seed);

/// Run the configured scenario once per seed. Graphs are built from the
/// seed itself; scenario randomness uses streams mixed from it, so a seed
/// fully determines its series. events_out (when given) collects the
/// superonion per-round logs, one entry per seed, in seed order.
std::vector<MetricsTimeSeries> run_experiment(const ExperimentConfig& config);
std::vector<MetricsTimeSeries> run_experiment(const ExperimentConfig& config,
                                              std::vector<SuperOnionEventLog>* events_out);

enum class SeriesFormat { csv, json };

/// CSV columns exactly: step,alive,avg_closeness,avg_degree_centrality,
/// diameter,components — diameter prints `inf` when the graph is
/// partitioned. JSON mirrors the fields plus provenance. Trailing newline.
/// Throws ParameterError on an empty series, IoError on unwritable paths.
void write_series(const MetricsTimeSeries& series, SeriesFormat format, const std::string& path);

/// Inverse of write_series(json). Throws IoError on malformed input.
MetricsTimeSeries read_series_json(std::string_view text);

/// round,suspected,replaced rows, one file per seed.
void write_superonion_events(const SuperOnionEventLog& log, const std::string& path);

}  // namespace overlaysim
