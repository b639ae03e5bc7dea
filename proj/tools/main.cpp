#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "overlaysim/attacks.hpp"
#include "overlaysim/errors.hpp"
#include "overlaysim/metrics.hpp"
#include "overlaysim/overlay_graph.hpp"
#include "overlaysim/sim_runner.hpp"
#include "overlaysim/superonion.hpp"

namespace fs = std::filesystem;

namespace {

using namespace overlaysim;

std::string fmt(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

std::string slurp(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(std::string("cannot open ") + what + ": " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spill(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << text;
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

// Result files always live under --out; configs may add relative subdirs
// through their output prefix but can never climb out.
std::string run_prefix(const ExperimentConfig& cfg) {
    std::string p = cfg.output.empty() ? cfg.name : cfg.output;
    if (p.empty()) p = "run";
    if (p.front() == '/' || p.find("..") != std::string::npos)
        throw ParameterError("config output must be a relative path without ..: " + p);
    return p;
}

fs::path out_file(const std::string& out_dir, const std::string& name) {
    fs::path p = fs::path(out_dir) / name;
    fs::create_directories(p.parent_path());
    return p;
}

struct SeriesSink {
    std::string out_dir;
    std::string format;  // csv | json | both

    // Returns the CSV path (JSON path when CSV was not written).
    fs::path write(const ExperimentConfig& cfg, const MetricsTimeSeries& series) const {
        std::string stem = run_prefix(cfg) + "_seed" + std::to_string(series.seed);
        fs::path primary;
        if (format != "json") {
            primary = out_file(out_dir, stem + ".csv");
            write_series(series, SeriesFormat::csv, primary.string());
        }
        if (format != "csv") {
            fs::path jp = out_file(out_dir, stem + ".json");
            write_series(series, SeriesFormat::json, jp.string());
            if (primary.empty()) primary = jp;
        }
        return primary;
    }
};

ExperimentConfig load_config(const std::string& path, const std::optional<uint64_t>& seed) {
    ExperimentConfig cfg = ExperimentConfig::from_file(path);
    if (seed) cfg.seeds = {*seed};
    return cfg;
}

int cmd_generate(uint32_t n, uint32_t k, uint64_t seed, std::optional<uint32_t> d_min,
                 std::optional<uint32_t> d_max, const std::string& out_dir, std::string name) {
    if (d_min.has_value() != d_max.has_value())
        throw ParameterError("give both --d-min and --d-max or neither");
    OverlayGraph g = d_min ? OverlayGraph::build_k_regular(n, k, seed, {*d_min, *d_max})
                           : OverlayGraph::build_k_regular(n, k, seed);
    if (name.empty())
        name = "graph_n" + std::to_string(n) + "_k" + std::to_string(k) + "_seed" +
               std::to_string(seed) + ".txt";
    fs::path path = out_file(out_dir, name);
    spill(path, g.serialize());
    std::cout << "nodes=" << g.alive_count() << " edges=" << g.edge_count()
              << " max_degree=" << g.max_degree() << " d_min=" << g.bounds().d_min
              << " d_max=" << g.bounds().d_max << " path=" << path.string() << "\n";
    return 0;
}

int cmd_campaign(const std::string& config_path, const SeriesSink& sink,
                 const std::optional<uint64_t>& seed) {
    ExperimentConfig cfg = load_config(config_path, seed);
    if (cfg.scenario.kind != "campaign")
        throw ParameterError("config scenario is not a campaign: " + config_path);
    auto series = run_experiment(cfg);
    std::cout << "config=" << config_path << " digest=" << cfg.digest
              << " seeds=" << cfg.seeds.size() << "\n";
    for (const MetricsTimeSeries& s : series) {
        fs::path path = sink.write(cfg, s);
        const MetricsSnapshot& last = s.rows.back();
        std::cout << "seed=" << s.seed << " rows=" << s.rows.size() << " final_alive=" << last.alive
                  << " final_components=" << last.components << " series=" << path.string() << "\n";
    }
    return 0;
}

int cmd_soap(const std::string& config_path, const SeriesSink& sink,
             const std::optional<uint64_t>& seed) {
    ExperimentConfig cfg = load_config(config_path, seed);
    if (cfg.scenario.kind != "soap")
        throw ParameterError("config scenario is not soap: " + config_path);
    std::cout << "config=" << config_path << " digest=" << cfg.digest
              << " seeds=" << cfg.seeds.size() << "\n";
    for (uint64_t s : cfg.seeds) {
        SoapRunOutcome run = run_soap_scenario(cfg, s);
        run.series.provenance_digest = cfg.digest;
        fs::path path = sink.write(cfg, run.series);
        uint64_t steps = 0, contained = 0, forgotten = 0;
        double work = 0.0;
        for (const auto& [id, r] : run.results) {
            steps += r.steps;
            work += r.work;
            forgotten += r.forgotten_benign.size();
            if (r.contained) ++contained;
        }
        uint64_t benign_edges = 0;
        for (const NodeId& u : run.graph.alive_ids()) {
            if (run.attacker.is_clone(u)) continue;
            for (const NodeId& v : run.graph.peers(u))
                if (!run.attacker.is_clone(v) && u < v) ++benign_edges;
        }
        std::cout << "seed=" << s << " targets=" << run.results.size()
                  << " contained=" << contained << " steps=" << steps << " work=" << fmt(work)
                  << " forgotten_benign=" << forgotten << " benign_benign_edges=" << benign_edges
                  << " clones=" << run.attacker.clones.size() << " series=" << path.string()
                  << "\n";
    }
    return 0;
}

int cmd_superonion(const std::string& config_path, const SeriesSink& sink,
                   const std::optional<uint64_t>& seed) {
    ExperimentConfig cfg = load_config(config_path, seed);
    if (cfg.scenario.kind != "superonion")
        throw ParameterError("config scenario is not superonion: " + config_path);
    std::vector<SuperOnionEventLog> events;
    auto series = run_experiment(cfg, &events);
    std::cout << "config=" << config_path << " digest=" << cfg.digest
              << " seeds=" << cfg.seeds.size() << "\n";
    for (size_t i = 0; i < series.size(); ++i) {
        fs::path path = sink.write(cfg, series[i]);
        fs::path events_path = out_file(
            sink.out_dir,
            run_prefix(cfg) + "_seed" + std::to_string(series[i].seed) + "_events.csv");
        write_superonion_events(events[i], events_path.string());
        uint64_t suspected = 0, replaced = 0;
        for (const SuperOnionRoundRow& row : events[i].rows) {
            suspected += row.suspected;
            replaced += row.replaced;
        }
        const MetricsSnapshot& last = series[i].rows.back();
        std::cout << "seed=" << series[i].seed << " rounds=" << events[i].rows.size()
                  << " suspected_total=" << suspected << " replaced_total=" << replaced
                  << " final_alive=" << last.alive << " final_components=" << last.components
                  << " series=" << path.string() << " events=" << events_path.string() << "\n";
    }
    return 0;
}

int cmd_metrics(const std::string& graph_path) {
    OverlayGraph g = OverlayGraph::parse(slurp(graph_path, "graph"));
    MetricsSnapshot snap = compute_snapshot(g);
    std::cout << "path=" << graph_path << " alive=" << snap.alive << " edges=" << g.edge_count()
              << " max_degree=" << g.max_degree() << " components=" << snap.components
              << " avg_closeness=" << fmt(snap.avg_closeness)
              << " avg_degree_centrality=" << fmt(snap.avg_degree_centrality) << " diameter="
              << (snap.diameter ? std::to_string(*snap.diameter) : std::string("inf"))
              << " step=" << snap.step << "\n";
    return 0;
}

// ---- reproduce ------------------------------------------------------------

// Smallest recorded deletion fraction at which the survivors split; 2.0
// when the series never partitions (compared against, never averaged).
double partition_onset(const MetricsTimeSeries& s, uint32_t n) {
    for (const MetricsSnapshot& row : s.rows)
        if (row.components >= 2) return static_cast<double>(row.step) / n;
    return 2.0;
}

struct FigureRun {
    ExperimentConfig cfg;
    std::vector<MetricsTimeSeries> series;
};

FigureRun run_preset(const fs::path& config_file, const SeriesSink& sink) {
    FigureRun run;
    run.cfg = ExperimentConfig::from_file(config_file.string());
    run.series = run_experiment(run.cfg);
    for (const MetricsTimeSeries& s : run.series) sink.write(run.cfg, s);
    std::cout << "config=" << config_file.string() << " digest=" << run.cfg.digest
              << " seeds=" << run.cfg.seeds.size() << "\n";
    return run;
}

void write_aggregate(const std::vector<MetricsTimeSeries>& series, const std::string& metric,
                     const fs::path& path) {
    size_t rows = series.front().rows.size();
    for (const MetricsTimeSeries& s : series) rows = std::min(rows, s.rows.size());
    std::string text = "step,alive," + metric + "\n";
    for (size_t i = 0; i < rows; ++i) {
        text += std::to_string(series.front().rows[i].step);
        text += ',';
        text += std::to_string(series.front().rows[i].alive);
        text += ',';
        if (metric == "diameter") {
            bool infinite = false;
            double sum = 0.0;
            for (const MetricsTimeSeries& s : series) {
                if (!s.rows[i].diameter) {
                    infinite = true;
                    break;
                }
                sum += *s.rows[i].diameter;
            }
            text += infinite ? std::string("inf") : fmt(sum / series.size());
        } else {
            double sum = 0.0;
            for (const MetricsTimeSeries& s : series)
                sum += metric == "components" ? double(s.rows[i].components)
                                              : s.rows[i].avg_degree_centrality;
            text += fmt(sum / series.size());
        }
        text += '\n';
    }
    spill(path, text);
}

int reproduce_fig6(const std::vector<FigureRun>& runs) {
    std::vector<double> all;
    for (const FigureRun& run : runs) {
        double sum = 0.0;
        for (const MetricsTimeSeries& s : run.series) {
            // Clamp the never-partitioned sentinel: the true onset cannot
            // exceed 1.0, and 1.0 is the bound-unfriendly direction.
            double onset = std::min(partition_onset(s, run.cfg.topology.n), 1.0);
            all.push_back(onset);
            sum += onset;
        }
        std::cout << "mean_onset_n" << run.cfg.topology.n << "=" << fmt(sum / run.series.size())
                  << "\n";
    }
    double mean = 0.0;
    for (double v : all) mean += v;
    mean /= all.size();
    bool pass = mean >= 0.30 && mean <= 0.50;
    std::cout << "mean_onset=" << fmt(mean) << "\n";
    std::cout << "fig6=" << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? 0 : 1;
}

int reproduce_fig4(const std::vector<FigureRun>& runs) {
    bool pass = true;
    for (const FigureRun& run : runs) {
        double min_ratio = 1.0;
        for (const MetricsTimeSeries& s : run.series) {
            double initial = s.rows.front().avg_closeness;
            for (const MetricsSnapshot& row : s.rows)
                min_ratio = std::min(min_ratio, row.avg_closeness / initial);
        }
        std::cout << "k=" << run.cfg.topology.k << " min_closeness_ratio=" << fmt(min_ratio)
                  << "\n";
        if (min_ratio < 0.95) pass = false;
    }
    std::cout << "fig4=" << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? 0 : 1;
}

int reproduce_fig8(const std::string& figure, const std::vector<FigureRun>& runs,
                   const std::string& out_dir) {
    const FigureRun& ddsr = runs.at(0);
    const FigureRun& normal = runs.at(1);
    std::string stem = figure;
    std::replace(stem.begin(), stem.end(), '-', '_');
    for (const char* metric : {"components", "degree_centrality", "diameter"}) {
        write_aggregate(ddsr.series, metric, out_file(out_dir, stem + "_ddsr_" + metric + ".csv"));
        write_aggregate(normal.series, metric,
                        out_file(out_dir, stem + "_normal_" + metric + ".csv"));
    }

    size_t seeds = ddsr.series.size();
    size_t intact = 0;
    bool normal_early = true, normal_first = true;
    double worst_normal = 0.0;
    for (size_t i = 0; i < seeds; ++i) {
        double d_on = partition_onset(ddsr.series[i], ddsr.cfg.topology.n);
        double n_on = partition_onset(normal.series[i], normal.cfg.topology.n);
        if (d_on > 0.90 + 1e-9) ++intact;
        if (n_on > 0.70 + 1e-9) normal_early = false;
        if (n_on >= d_on) normal_first = false;
        worst_normal = std::max(worst_normal, n_on);
    }
    size_t need = static_cast<size_t>(std::ceil(0.95 * seeds - 1e-9));
    bool pass = intact >= need && normal_early && normal_first;
    std::cout << "ddsr_intact_through_90pct=" << intact << "/" << seeds
              << " normal_max_onset=" << fmt(worst_normal) << "\n";
    std::cout << figure << "=" << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? 0 : 1;
}

int cmd_reproduce(const std::string& figure, const std::string& presets_dir,
                  const SeriesSink& sink) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(slurp(presets_dir + "/presets.json", "preset manifest"));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("preset manifest is not valid JSON: ") + e.what());
    }
    if (!manifest.contains(figure)) {
        std::cerr << "unknown figure: " << figure << "\nusage: reproduce";
        std::string sep = " ";
        for (const auto& item : manifest.items()) {
            std::cerr << sep << item.key();
            sep = "|";
        }
        std::cerr << "\n";
        return 2;
    }
    std::vector<FigureRun> runs;
    for (const nlohmann::json& file : manifest.at(figure))
        runs.push_back(run_preset(fs::path(presets_dir) / file.get<std::string>(), sink));

    if (figure == "fig6") return reproduce_fig6(runs);
    if (figure == "fig4") return reproduce_fig4(runs);
    return reproduce_fig8(figure, runs, sink.out_dir);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic self-healing overlay simulator"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string out_dir = "out";
    std::string format = "csv";
    std::string config_path;
    std::optional<uint64_t> seed_override;
    app.add_option("--out", out_dir, "output directory (env OVERLAYSIM_OUT)")
        ->envname("OVERLAYSIM_OUT")
        ->capture_default_str();
    app.add_option("--format", format, "series format")
        ->check(CLI::IsMember({"csv", "json", "both"}))
        ->capture_default_str();
    app.add_option("--config", config_path, "experiment config file");
    app.add_option("--seed", seed_override, "override the config seed list with one seed");

    CLI::App* generate = app.add_subcommand("generate", "build a k-regular overlay snapshot");
    uint32_t gen_n = 0, gen_k = 0;
    uint64_t gen_seed = 1;
    std::optional<uint32_t> gen_dmin, gen_dmax;
    std::string gen_name;
    generate->add_option("--n", gen_n, "node count")->required();
    generate->add_option("--k", gen_k, "degree")->required();
    generate->add_option("--graph-seed", gen_seed, "generation seed")->capture_default_str();
    generate->add_option("--d-min", gen_dmin, "lower degree bound");
    generate->add_option("--d-max", gen_dmax, "upper degree bound");
    generate->add_option("--name", gen_name, "output file name");

    CLI::App* campaign = app.add_subcommand("campaign", "run a deletion campaign config");
    CLI::App* soap = app.add_subcommand("soap", "run a soap containment config");
    CLI::App* superonion = app.add_subcommand("superonion", "run a superonion probe/replace config");

    CLI::App* metrics = app.add_subcommand("metrics", "compute metrics for a graph snapshot file");
    std::string graph_path;
    metrics->add_option("--graph", graph_path, "serialized graph file")->required();

    CLI::App* reproduce = app.add_subcommand("reproduce", "run a pinned figure preset");
    std::string figure;
    std::string presets_dir = "configs";
    reproduce->add_option("figure", figure, "fig4|fig6|fig8-small|fig8-medium")->required();
    reproduce->add_option("--presets", presets_dir, "preset config directory")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help();
        return 2;
    }

    SeriesSink sink{out_dir, format};
    try {
        if (generate->parsed())
            return cmd_generate(gen_n, gen_k, gen_seed, gen_dmin, gen_dmax, out_dir, gen_name);
        if (campaign->parsed()) {
            if (config_path.empty()) throw ParameterError("campaign requires --config");
            return cmd_campaign(config_path, sink, seed_override);
        }
        if (soap->parsed()) {
            if (config_path.empty()) throw ParameterError("soap requires --config");
            return cmd_soap(config_path, sink, seed_override);
        }
        if (superonion->parsed()) {
            if (config_path.empty()) throw ParameterError("superonion requires --config");
            return cmd_superonion(config_path, sink, seed_override);
        }
        if (metrics->parsed()) return cmd_metrics(graph_path);
        if (reproduce->parsed()) return cmd_reproduce(figure, presets_dir, sink);
    } catch (const ValidationError& e) {
        std::cerr << "error=validation config=" << config_path << "\n";
        for (const std::string& v : e.violations()) std::cerr << "violation=" << v << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error=" << e.what() << "\n";
        return 1;
    }
    return 2;
}
