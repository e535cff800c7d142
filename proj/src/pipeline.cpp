#include "ecokit/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ecokit/density.hpp"
#include "ecokit/error.hpp"
#include "ecokit/forecast.hpp"
#include "ecokit/ingest.hpp"
#include "ecokit/io.hpp"
#include "ecokit/irf.hpp"
#include "ecokit/overlap.hpp"
#include "ecokit/var.hpp"
#include "json.hpp"

namespace ecokit {

namespace {

namespace fs = std::filesystem;

std::string path_in(const PipelineConfig& config, const std::string& name) {
    return (fs::path(config.out_dir) / name).string();
}

// Manifest entries use bare filenames for artifacts inside out_dir and the
// configured path for the external events file.
std::string resolve(const PipelineConfig& config, const std::string& name) {
    if (name == config.events_path) return name;
    return path_in(config, name);
}

std::string hash_of(const PipelineConfig& config, const std::string& name) {
    const std::string full = resolve(config, name);
    if (!fs::exists(full)) return "";
    return io::hash_hex(io::fnv1a_file(full));
}

CorpusConfig corpus_config(const PipelineConfig& config) {
    CorpusConfig cc;
    cc.top_n = config.top_n;
    cc.exclusion_list.insert(config.exclusion_list.begin(), config.exclusion_list.end());
    cc.window_start = config.window_start;
    cc.window_end = config.window_end;
    cc.week_anchor = config.week_anchor;
    cc.exclude_before_truncation = config.exclude_before_truncation;
    return cc;
}

// An empty grid falls back to spherical k-means at the configured embedding
// dimension over a few production-scale cluster counts.
GridSpec effective_grid(const PipelineConfig& config) {
    GridSpec grid = config.grid;
    if (grid.points.empty()) {
        for (const int k : {50, 100, 150, 200}) {
            GridPoint point;
            point.algorithm = "kmeans";
            point.k_dim = config.k;
            point.hyperparameters["k"] = static_cast<double>(k);
            grid.points.push_back(std::move(point));
        }
    }
    return grid;
}

std::string serialize_grid(const PipelineConfig& config) {
    const GridSpec grid = effective_grid(config);
    std::string out = "max_isolates=" + std::to_string(grid.max_isolates) +
                      ";min_clusters=" + std::to_string(grid.min_clusters) + ";points=";
    for (const GridPoint& point : grid.points) {
        out += point.algorithm + ":k_dim=" + std::to_string(point.k_dim);
        for (const auto& [name, value] : point.hyperparameters)
            out += "," + name + "=" + io::fmt_g17(value);
        out += "|";
    }
    return out;
}

std::string serialize_exclusions(const PipelineConfig& config) {
    std::vector<std::string> sorted = config.exclusion_list;
    std::sort(sorted.begin(), sorted.end());
    std::string out;
    for (const std::string& name : sorted) out += name + "|";
    return out;
}

// Parameters only; input data enters the fingerprints through content
// hashes, and paths are environment, not analysis.
std::string canonical_config(const PipelineConfig& c) {
    return "format=" + c.events_format + ";top_n=" + std::to_string(c.top_n) +
           ";exclusions=" + serialize_exclusions(c) + ";window=[" +
           std::to_string(c.window_start) + "," + std::to_string(c.window_end) +
           ");anchor=" + std::to_string(c.week_anchor) +
           ";exclude_before=" + std::to_string(c.exclude_before_truncation ? 1 : 0) +
           ";k=" + std::to_string(c.k) + ";grid=" + serialize_grid(c) +
           ";smoothing=" + std::to_string(c.growth_smoothing) +
           ";min_weeks=" + std::to_string(c.min_weeks) +
           ";pre_creation=" + std::to_string(c.include_pre_creation ? 1 : 0) +
           ";holdout=" + std::to_string(c.holdout) + ";horizon=" + std::to_string(c.horizon) +
           ";replicates=" + std::to_string(c.replicates) + ";seed=" + std::to_string(c.seed);
}

std::string stage_params(const std::string& name, const PipelineConfig& c) {
    if (name == "ingest")
        return "format=" + c.events_format + ";top_n=" + std::to_string(c.top_n) +
               ";exclusions=" + serialize_exclusions(c) + ";window=[" +
               std::to_string(c.window_start) + "," + std::to_string(c.window_end) +
               ");anchor=" + std::to_string(c.week_anchor) +
               ";exclude_before=" + std::to_string(c.exclude_before_truncation ? 1 : 0);
    if (name == "overlap")
        return "k=" + std::to_string(c.k) + ";seed=" + std::to_string(c.seed);
    if (name == "cluster") return serialize_grid(c) + ";seed=" + std::to_string(c.seed);
    if (name == "density")
        return "growth_window=" + std::to_string(c.holdout) +
               ";smoothing=" + std::to_string(c.growth_smoothing);
    if (name == "var")
        return "min_weeks=" + std::to_string(c.min_weeks) +
               ";pre_creation=" + std::to_string(c.include_pre_creation ? 1 : 0) +
               ";holdout=" + std::to_string(c.holdout);
    if (name == "irf")
        return "horizon=" + std::to_string(c.horizon) +
               ";replicates=" + std::to_string(c.replicates) +
               ";seed=" + std::to_string(c.seed) + ";min_weeks=" + std::to_string(c.min_weeks) +
               ";pre_creation=" + std::to_string(c.include_pre_creation ? 1 : 0);
    if (name == "forecast") return "holdout=" + std::to_string(c.holdout) + ";compare=1";
    if (name == "report") return std::string("version=") + kEcokitVersion;
    throw Error("unknown pipeline stage '" + name + "'");
}

std::string stage_params_hash(const std::string& name, const PipelineConfig& config) {
    return io::hash_hex(io::fnv1a(stage_params(name, config)));
}

std::map<std::string, double> read_density_csv(const std::string& path) {
    const std::string text = io::read_file(path);
    std::map<std::string, double> out;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        const std::string_view line(text.data() + pos, end - pos);
        pos = end + 1;
        if (line.empty()) continue;
        if (++line_no == 1) {
            if (line != "group,density,raw_density")
                throw Error("density csv: unexpected header in " + path);
            continue;
        }
        const auto fields = io::split(line, ',');
        double density = 0.0;
        if (fields.size() != 3 || !io::parse_double(fields[1], density))
            throw Error("density csv: malformed line '" + std::string(line) + "' in " + path);
        out[fields[0]] = density;
    }
    return out;
}

// clusters.json: which clusters were fitted, which were skipped and why.
struct ClusterEntry {
    long long id = 0;
    std::vector<std::string> members;
    std::string var_file;
    std::string baseline_file;
    std::string skipped;  // non-empty means no fit was produced
};

struct ClusterIndex {
    std::size_t t_train = 0;
    std::vector<ClusterEntry> entries;
};

ClusterIndex read_cluster_index(const std::string& path) {
    ClusterIndex index;
    try {
        const auto doc = nlohmann::json::parse(io::read_file(path));
        index.t_train = doc.at("t_train").get<std::size_t>();
        for (const auto& c : doc.at("clusters")) {
            ClusterEntry entry;
            entry.id = c.at("id").get<long long>();
            if (c.contains("skipped")) {
                entry.skipped = c["skipped"].get<std::string>();
            } else {
                entry.members = c.at("members").get<std::vector<std::string>>();
                entry.var_file = c.at("var").get<std::string>();
                entry.baseline_file = c.at("baseline").get<std::string>();
            }
            index.entries.push_back(std::move(entry));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("cluster index: " + path + ": " + e.what());
    }
    return index;
}

std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return std::string(buf);
}

std::string winner_phrase(const std::string& winner) {
    if (winner == "var") return "interaction model";
    if (winner == "baseline") return "independent baseline";
    return "tie";
}

// Stage input lists. Stages with cluster-dependent inputs enumerate them
// from the current cluster index; when that file is missing or unreadable
// the two base inputs alone guarantee a cache miss and a fresh run.
std::vector<std::string> stage_inputs(const std::string& name, const PipelineConfig& config) {
    if (name == "ingest") return {config.events_path};
    if (name == "overlap") return {"frequency.csv"};
    if (name == "cluster") return {"frequency.csv"};
    if (name == "density") return {"panel.csv", "density.csv"};
    if (name == "var") return {"panel.csv", "labels.csv"};
    if (name == "irf" || name == "forecast") {
        std::vector<std::string> inputs = {"panel.csv", "clusters.json"};
        try {
            const auto index = read_cluster_index(path_in(config, "clusters.json"));
            for (const auto& entry : index.entries) {
                if (entry.var_file.empty()) continue;
                inputs.push_back(entry.var_file);
                if (name == "forecast") inputs.push_back(entry.baseline_file);
            }
        } catch (const std::exception&) {
        }
        return inputs;
    }
    if (name == "report") {
        std::vector<std::string> inputs;
        for (const char* candidate :
             {"fit.json", "metrics.csv", "forecast_report.json", "clusters.json"})
            if (fs::exists(path_in(config, candidate))) inputs.emplace_back(candidate);
        return inputs;
    }
    throw Error("unknown pipeline stage '" + name + "'");
}

}  // namespace

PipelineConfig read_pipeline_config(const std::string& path) {
    PipelineConfig config;
    try {
        const auto doc = nlohmann::json::parse(io::read_file(path));
        if (!doc.is_object()) throw Error("config: top level must be a JSON object");
        static const std::set<std::string> known = {
            "events",        "format",        "out_dir",
            "top_n",         "exclusion_list", "window_start",
            "window_end",    "week_anchor",   "exclude_before_truncation",
            "k",             "grid",          "max_isolates",
            "min_clusters",  "growth_smoothing", "min_weeks",
            "include_pre_creation", "holdout", "horizon",
            "replicates",    "seed",
        };
        for (const auto& [key, value] : doc.items()) {
            (void)value;
            if (!known.contains(key)) throw Error("config: unknown key '" + key + "'");
        }

        config.events_path = doc.at("events").get<std::string>();
        config.out_dir = doc.at("out_dir").get<std::string>();
        config.window_start = doc.at("window_start").get<std::int64_t>();
        config.window_end = doc.at("window_end").get<std::int64_t>();
        if (doc.contains("format")) config.events_format = doc["format"].get<std::string>();
        if (doc.contains("top_n")) config.top_n = doc["top_n"].get<std::size_t>();
        if (doc.contains("exclusion_list"))
            config.exclusion_list = doc["exclusion_list"].get<std::vector<std::string>>();
        if (doc.contains("week_anchor")) config.week_anchor = doc["week_anchor"].get<int>();
        if (doc.contains("exclude_before_truncation"))
            config.exclude_before_truncation = doc["exclude_before_truncation"].get<bool>();
        if (doc.contains("k")) config.k = doc["k"].get<std::size_t>();
        if (doc.contains("max_isolates"))
            config.grid.max_isolates = doc["max_isolates"].get<std::size_t>();
        if (doc.contains("min_clusters"))
            config.grid.min_clusters = doc["min_clusters"].get<std::size_t>();
        if (doc.contains("growth_smoothing"))
            config.growth_smoothing = doc["growth_smoothing"].get<std::size_t>();
        if (doc.contains("min_weeks")) config.min_weeks = doc["min_weeks"].get<std::size_t>();
        if (doc.contains("include_pre_creation"))
            config.include_pre_creation = doc["include_pre_creation"].get<bool>();
        if (doc.contains("holdout")) config.holdout = doc["holdout"].get<std::size_t>();
        if (doc.contains("horizon")) config.horizon = doc["horizon"].get<std::size_t>();
        if (doc.contains("replicates"))
            config.replicates = doc["replicates"].get<std::size_t>();
        if (doc.contains("seed")) config.seed = doc["seed"].get<std::uint64_t>();

        if (doc.contains("grid")) {
            for (const auto& p : doc["grid"]) {
                if (!p.is_object()) throw Error("config: each grid point must be an object");
                GridPoint point;
                point.algorithm = p.at("algorithm").get<std::string>();
                point.k_dim = p.contains("k_dim") ? p["k_dim"].get<std::size_t>() : config.k;
                for (const auto& [key, value] : p.items()) {
                    if (key == "algorithm" || key == "k_dim") continue;
                    if (!value.is_number())
                        throw Error("config: grid hyperparameter '" + key +
                                    "' must be numeric");
                    point.hyperparameters[key] = value.get<double>();
                }
                config.grid.points.push_back(std::move(point));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("config: " + path + ": " + e.what());
    }
    return config;
}

void validate_config(const PipelineConfig& config) {
    if (config.events_path.empty()) throw Error("config: events path is required");
    if (!fs::exists(config.events_path))
        throw Error("config: events file not found: " + config.events_path);
    (void)parse_event_format(config.events_format);
    if (config.out_dir.empty()) throw Error("config: out_dir is required");
    fs::create_directories(config.out_dir);
    if (config.window_start >= config.window_end)
        throw Error("config: corpus window is empty (window_start must precede window_end)");
    if (config.week_anchor < 0 || config.week_anchor > 6)
        throw Error("config: week_anchor must be in [0, 6] (0 = Monday)");
    if (config.top_n < 1) throw Error("config: top_n must be at least 1");
    if (config.k < 1) throw Error("config: embedding dimension k must be at least 1");
    if (config.growth_smoothing < 1)
        throw Error("config: growth_smoothing must be at least 1");
    if (config.min_weeks < 2) throw Error("config: min_weeks must be at least 2");
    if (config.holdout < 1) throw Error("config: holdout must be at least 1");
    if (config.horizon < 10)
        throw Error(
            "config: horizon must be at least 10 so interaction bands cover the "
            "network-extraction range");
    if (config.replicates < 100)
        throw Error("config: at least 100 bootstrap replicates are required");
    for (const GridPoint& point : config.grid.points) {
        if (point.k_dim < 1) throw Error("config: grid k_dim must be at least 1");
        if (point.algorithm.empty()) throw Error("config: grid point needs an algorithm");
    }
}

std::vector<std::string> stage_ingest(const PipelineConfig& config) {
    const CorpusConfig cc = corpus_config(config);
    const auto loaded =
        load_events(config.events_path, parse_event_format(config.events_format));
    const auto windowed = window_filter(loaded.events, cc);
    const auto population = select_population(windowed, cc);
    if (population.empty())
        throw Error("ingest: no groups survive the window and exclusion list");
    const auto panel = build_panel(windowed, population, cc);
    const auto ufm = build_user_frequency(windowed, population);
    write_panel_csv(panel, path_in(config, "panel.csv"));
    write_frequency_matrix(ufm, path_in(config, "frequency.csv"));
    return {"panel.csv", "frequency.csv"};
}

std::vector<std::string> stage_overlap(const PipelineConfig& config) {
    const auto ufm = read_frequency_matrix(path_in(config, "frequency.csv"));
    const auto model = build_overlap_model(ufm.counts, config.k, config.seed);
    write_overlap_model(model, ufm.groups, path_in(config, "similarity.csv"),
                        path_in(config, "density.csv"), path_in(config, "embedding.csv"));
    return {"similarity.csv", "density.csv", "embedding.csv"};
}

std::vector<std::string> stage_cluster(const PipelineConfig& config) {
    const auto ufm = read_frequency_matrix(path_in(config, "frequency.csv"));
    const auto normalized = normalize_frequencies(ufm.counts);
    const GridSpec grid = effective_grid(config);
    std::map<std::size_t, Matrix> embeddings;
    for (const GridPoint& point : grid.points)
        if (!embeddings.contains(point.k_dim))
            embeddings.emplace(point.k_dim, embed(normalized, point.k_dim, config.seed));
    // an all-infeasible grid throws here with nearest-miss diagnostics
    const auto result = run_grid(embeddings, grid, config.seed);
    write_grid_report_csv(result.evaluated, path_in(config, "grid_report.csv"));
    write_labels_csv(ufm.groups, result.ranked.front().labels, path_in(config, "labels.csv"));
    return {"grid_report.csv", "labels.csv"};
}

std::vector<std::string> stage_density(const PipelineConfig& config) {
    const auto panel = read_panel_csv(path_in(config, "panel.csv"));
    const auto by_group = read_density_csv(path_in(config, "density.csv"));
    std::vector<double> density(panel.groups.size(), 0.0);
    for (std::size_t g = 0; g < panel.groups.size(); ++g) {
        const auto it = by_group.find(panel.groups[g]);
        if (it == by_group.end())
            throw Error("density: group '" + panel.groups[g] + "' is missing from density.csv");
        density[g] = it->second;
    }
    const auto growth =
        compute_growth(panel, config.holdout, density, config.growth_smoothing);
    const auto fit = fit_model1(growth);
    std::vector<double> observed;
    observed.reserve(growth.size());
    for (const auto& obs : growth) observed.push_back(obs.density);
    const auto [lo_it, hi_it] = std::minmax_element(observed.begin(), observed.end());
    std::vector<double> grid(101);
    for (std::size_t i = 0; i < grid.size(); ++i)
        grid[i] = *lo_it + (*hi_it - *lo_it) * static_cast<double>(i) /
                               static_cast<double>(grid.size() - 1);
    const auto curve = marginal_effects(fit, grid);
    const auto shape = shape_test(fit, observed);
    write_growth_csv(growth, path_in(config, "growth.csv"));
    write_curve_csv(curve, path_in(config, "curve.csv"));
    write_fit_json(fit, shape, path_in(config, "fit.json"));
    return {"growth.csv", "curve.csv", "fit.json"};
}

std::vector<std::string> stage_var(const PipelineConfig& config) {
    const auto panel = read_panel_csv(path_in(config, "panel.csv"));
    const auto labels = read_labels_csv(path_in(config, "labels.csv"), panel.groups);
    if (panel.weeks.size() <= config.holdout)
        throw Error("var: the panel has " + std::to_string(panel.weeks.size()) +
                    " weeks, not enough to hold out " + std::to_string(config.holdout));
    const std::size_t t_train = panel.weeks.size() - config.holdout;

    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t g = 0; g < labels.size(); ++g)
        if (labels[g] >= 0) members[labels[g]].push_back(g);
    if (members.empty()) throw Error("var: every group is an isolate; nothing to fit");

    nlohmann::ordered_json doc;
    doc["t_train"] = t_train;
    doc["min_weeks"] = config.min_weeks;
    doc["clusters"] = nlohmann::ordered_json::array();
    std::vector<std::string> outputs = {"clusters.json"};
    std::size_t fitted = 0;
    for (const auto& [id, rows] : members) {
        nlohmann::ordered_json entry;
        entry["id"] = id;
        const auto eligible = eligible_members(panel, rows, t_train, config.min_weeks);
        if (eligible.size() < 2) {
            entry["skipped"] = "fewer than two members with " +
                               std::to_string(config.min_weeks) + " training weeks";
            doc["clusters"].push_back(std::move(entry));
            continue;
        }
        VarSpec spec;
        spec.members = eligible;
        spec.t_train = t_train;
        spec.min_weeks = config.min_weeks;
        spec.include_pre_creation = config.include_pre_creation;
        VarFit fit;
        VarFit baseline;
        try {
            fit = fit_var(panel, spec);
            baseline = fit_baseline(panel, spec);
        } catch (const Error& e) {
            entry["skipped"] = e.what();
            doc["clusters"].push_back(std::move(entry));
            continue;
        }
        const std::string var_name = "var_c" + std::to_string(id) + ".json";
        const std::string baseline_name = "baseline_c" + std::to_string(id) + ".json";
        write_var_json(fit, path_in(config, var_name));
        write_var_json(baseline, path_in(config, baseline_name));
        entry["members"] = fit.members;
        entry["var"] = var_name;
        entry["baseline"] = baseline_name;
        doc["clusters"].push_back(std::move(entry));
        outputs.push_back(var_name);
        outputs.push_back(baseline_name);
        ++fitted;
    }
    io::write_file(path_in(config, "clusters.json"), doc.dump(2) + "\n");
    if (fitted == 0)
        throw Error("var: no cluster could be fitted; reasons are in clusters.json");
    return outputs;
}

std::vector<std::string> stage_irf(const PipelineConfig& config) {
    const auto panel = read_panel_csv(path_in(config, "panel.csv"));
    const auto index = read_cluster_index(path_in(config, "clusters.json"));
    std::vector<std::string> names;
    std::vector<ClusterMetrics> metrics;
    std::vector<std::string> outputs;
    for (const auto& entry : index.entries) {
        if (entry.var_file.empty()) continue;
        const auto fit = read_var_json(path_in(config, entry.var_file));
        VarSpec spec;
        spec.members = fit.member_rows;
        spec.t_train = fit.t_train;
        spec.min_weeks = config.min_weeks;
        spec.include_pre_creation = config.include_pre_creation;
        const auto bands = bootstrap_irf(panel, spec, fit, config.horizon,
                                         config.replicates, config.seed);
        const auto network = extract_network(fit, bands);
        const std::string dot_name = "network_c" + std::to_string(entry.id) + ".dot";
        const std::string graphml_name = "network_c" + std::to_string(entry.id) + ".graphml";
        write_dot(network, path_in(config, dot_name));
        write_graphml(network, path_in(config, graphml_name));
        outputs.push_back(dot_name);
        outputs.push_back(graphml_name);
        names.push_back("c" + std::to_string(entry.id));
        metrics.push_back(cluster_metrics(fit));
    }
    write_metrics_csv(names, metrics, path_in(config, "metrics.csv"));
    outputs.push_back("metrics.csv");
    if (metrics.size() >= 2) {
        write_histogram_csv(typology_report(metrics), path_in(config, "histogram.csv"));
        outputs.push_back("histogram.csv");
    }
    return outputs;
}

std::vector<std::string> stage_forecast(const PipelineConfig& config, bool compare_baseline) {
    const auto panel = read_panel_csv(path_in(config, "panel.csv"));
    const auto index = read_cluster_index(path_in(config, "clusters.json"));
    std::vector<ClusterScore> scores;
    std::vector<std::string> outputs;
    for (const auto& entry : index.entries) {
        if (entry.var_file.empty()) continue;
        const auto fit = read_var_json(path_in(config, entry.var_file));
        const auto var_fc = forecast(fit, panel, config.holdout);
        const std::string var_name = "forecast_var_c" + std::to_string(entry.id) + ".csv";
        write_forecast_csv(var_fc, path_in(config, var_name));
        outputs.push_back(var_name);
        if (!compare_baseline) continue;
        const auto baseline = read_var_json(path_in(config, entry.baseline_file));
        const auto baseline_fc = forecast(baseline, panel, config.holdout);
        const auto actual = actual_holdout(panel, var_fc);
        const std::string baseline_name =
            "forecast_baseline_c" + std::to_string(entry.id) + ".csv";
        write_forecast_csv(baseline_fc, path_in(config, baseline_name));
        outputs.push_back(baseline_name);
        scores.push_back(
            score_cluster("c" + std::to_string(entry.id), var_fc, baseline_fc, actual));
    }
    if (compare_baseline) {
        if (scores.empty()) throw Error("forecast: no fitted clusters to score");
        const auto scoreboard = compare(scores);
        write_scores_csv(scoreboard, path_in(config, "scores.csv"));
        write_report_json(scoreboard, path_in(config, "forecast_report.json"));
        outputs.push_back("scores.csv");
        outputs.push_back("forecast_report.json");
    }
    return outputs;
}

std::string report(const PipelineConfig& config) {
    fs::create_directories(config.out_dir);
    std::string md = "# Interaction analysis report\n";

    md += "\n## Study A: growth against overlap density\n\n";
    const std::string fit_path = path_in(config, "fit.json");
    if (fs::exists(fit_path)) {
        try {
            const auto j = nlohmann::json::parse(io::read_file(fit_path));
            md += "- verdict: **" + j.at("verdict").get<std::string>() + "**\n";
            if (!j.at("vertex").is_null()) {
                md += "- vertex: " + fmt_short(j["vertex"].get<double>());
                if (!j.at("vertex_percentile").is_null())
                    md += " (at the " + fmt_short(j["vertex_percentile"].get<double>()) +
                          "th percentile of observed densities)";
                md += "\n";
            }
            md += "- fit: " + j.at("model").get<std::string>() +
                  ", n = " + std::to_string(j.at("n").get<long long>()) +
                  ", R^2 = " + fmt_short(j.at("r_squared").get<double>()) + "\n";
            const auto& co = j.at("coefficients");
            md += "- coefficients: b0 = " + fmt_short(co.at("b0").get<double>()) +
                  ", b1 = " + fmt_short(co.at("b1").get<double>()) +
                  ", b2 = " + fmt_short(co.at("b2").get<double>()) + "\n";
            md += "- plot data: growth.csv (observations), curve.csv (fitted curve with 95% "
                  "bands)\n";
        } catch (const nlohmann::json::exception& e) {
            md += "- unavailable: fit.json is unreadable (" + std::string(e.what()) + ")\n";
        }
    } else {
        md += "- unavailable: fit.json is missing (the density stage has not produced "
              "output)\n";
    }

    md += "\n## Study B: interaction typology\n\n";
    nlohmann::ordered_json typology;
    const std::string metrics_path = path_in(config, "metrics.csv");
    if (!fs::exists(metrics_path)) {
        md += "- unavailable: metrics.csv is missing (the interaction stage has not produced "
              "output)\n";
        typology["available"] = false;
        typology["reason"] = "metrics.csv missing";
    } else {
        try {
            const auto named = read_metrics_csv(metrics_path);
            if (named.metrics.size() < 2) {
                md += "- unavailable: only " + std::to_string(named.metrics.size()) +
                      " cluster(s) carry interaction metrics; the typology needs at least "
                      "two\n";
                typology["available"] = false;
                typology["reason"] = "fewer than two clusters";
            } else {
                const auto typ = typology_report(named.metrics);
                md += "- clusters analyzed: " + std::to_string(typ.n_clusters) + "\n";
                md += "- mutualistic fraction (mean interaction > 0): " +
                      fmt_short(typ.fraction_mutualistic) + "\n";
                if (std::isnan(typ.t_statistic)) {
                    md += "- one-sample t on mean interaction: not defined (zero variance)\n";
                } else {
                    md += "- one-sample t on mean interaction: " +
                          fmt_short(typ.t_statistic) + "\n";
                }
                if (typ.spearman_applicable) {
                    md += "- rank correlation of mean interaction and strength: " +
                          fmt_short(typ.spearman_rho) + "\n";
                } else {
                    md += "- rank correlation of mean interaction and strength: not "
                          "applicable (tied ranks leave no variance)\n";
                }
                md += "- plot data: histogram.csv (mean-interaction x strength grid)\n";
                md += "\n| cluster | m_bar | kappa |\n| --- | --- | --- |\n";
                for (std::size_t i = 0; i < named.metrics.size(); ++i)
                    md += "| " + named.clusters[i] + " | " +
                          fmt_short(named.metrics[i].m_bar) + " | " +
                          fmt_short(named.metrics[i].kappa) + " |\n";
                typology["available"] = true;
                typology["n_clusters"] = typ.n_clusters;
                typology["fraction_mutualistic"] = typ.fraction_mutualistic;
                typology["t_statistic"] = std::isnan(typ.t_statistic)
                                              ? nlohmann::ordered_json(nullptr)
                                              : nlohmann::ordered_json(typ.t_statistic);
                typology["spearman_rho"] = typ.spearman_applicable
                                               ? nlohmann::ordered_json(typ.spearman_rho)
                                               : nlohmann::ordered_json(nullptr);
                typology["spearman_applicable"] = typ.spearman_applicable;
            }
        } catch (const Error& e) {
            md += "- unavailable: metrics.csv is unreadable (" + std::string(e.what()) +
                  ")\n";
            typology["available"] = false;
            typology["reason"] = e.what();
        }
    }
    io::write_file(path_in(config, "typology.json"), typology.dump(2) + "\n");

    md += "\n## Forecast comparison\n\n";
    const std::string forecast_path = path_in(config, "forecast_report.json");
    if (fs::exists(forecast_path)) {
        try {
            const auto j = nlohmann::json::parse(io::read_file(forecast_path));
            const auto& rmse = j.at("rmse");
            const auto& crps = j.at("crps");
            md += "- pooled RMSE over " + std::to_string(j.at("cells").get<long long>()) +
                  " holdout cells: interaction " +
                  fmt_short(rmse.at("var").get<double>()) + " vs baseline " +
                  fmt_short(rmse.at("baseline").get<double>()) + " -> " +
                  winner_phrase(rmse.at("winner").get<std::string>()) + "\n";
            md += "- summed CRPS: interaction " + fmt_short(crps.at("var").get<double>()) +
                  " vs baseline " + fmt_short(crps.at("baseline").get<double>()) + " -> " +
                  winner_phrase(crps.at("winner").get<std::string>()) + "\n";
            md += "- per-cluster scores: scores.csv; forecast paths: "
                  "forecast_var_c<id>.csv / forecast_baseline_c<id>.csv\n";
        } catch (const nlohmann::json::exception& e) {
            md += "- unavailable: forecast_report.json is unreadable (" +
                  std::string(e.what()) + ")\n";
        }
    } else {
        md += "- unavailable: forecast_report.json is missing (the forecast stage has not "
              "produced output)\n";
    }

    md += "\n## Artifacts\n\n";
    const std::string clusters_path = path_in(config, "clusters.json");
    if (fs::exists(clusters_path)) {
        try {
            const auto index = read_cluster_index(clusters_path);
            std::string fitted;
            std::string skipped;
            for (const auto& entry : index.entries) {
                if (entry.var_file.empty()) {
                    skipped += "  - c" + std::to_string(entry.id) + ": " + entry.skipped +
                               "\n";
                } else {
                    if (!fitted.empty()) fitted += ", ";
                    fitted += "c" + std::to_string(entry.id);
                }
            }
            if (!fitted.empty())
                md += "- interaction networks (network_c<id>.dot / .graphml) for: " +
                      fitted + "\n";
            if (!skipped.empty()) md += "- clusters without a fit:\n" + skipped;
        } catch (const Error& e) {
            md += "- cluster index unreadable: " + std::string(e.what()) + "\n";
        }
    } else {
        md += "- no cluster index (the interaction fit stage has not produced output)\n";
    }

    io::write_file(path_in(config, "summary.md"), md);
    return md;
}

void write_manifest_json(const RunManifest& manifest, const std::string& path) {
    nlohmann::ordered_json j;
    j["version"] = manifest.version;
    j["seed"] = manifest.seed;
    j["config_hash"] = manifest.config_hash;
    j["stages"] = nlohmann::ordered_json::array();
    for (const StageRecord& stage : manifest.stages) {
        nlohmann::ordered_json s;
        s["name"] = stage.name;
        s["status"] = stage.status;
        s["params_hash"] = stage.params_hash;
        s["inputs"] = nlohmann::ordered_json::array();
        for (const auto& [name, hash] : stage.inputs)
            s["inputs"].push_back(nlohmann::ordered_json::array({name, hash}));
        s["outputs"] = nlohmann::ordered_json::array();
        for (const auto& [name, hash] : stage.outputs)
            s["outputs"].push_back(nlohmann::ordered_json::array({name, hash}));
        if (!stage.error.empty()) s["error"] = stage.error;
        j["stages"].push_back(std::move(s));
    }
    io::write_file(path, j.dump(2) + "\n");
}

RunManifest read_manifest_json(const std::string& path) {
    RunManifest manifest;
    try {
        const auto j = nlohmann::json::parse(io::read_file(path));
        manifest.version = j.at("version").get<std::string>();
        manifest.seed = j.at("seed").get<std::uint64_t>();
        manifest.config_hash = j.at("config_hash").get<std::string>();
        for (const auto& s : j.at("stages")) {
            StageRecord stage;
            stage.name = s.at("name").get<std::string>();
            stage.status = s.at("status").get<std::string>();
            stage.params_hash = s.at("params_hash").get<std::string>();
            for (const auto& in : s.at("inputs"))
                stage.inputs.emplace_back(in.at(0).get<std::string>(),
                                          in.at(1).get<std::string>());
            for (const auto& out : s.at("outputs"))
                stage.outputs.emplace_back(out.at(0).get<std::string>(),
                                           out.at(1).get<std::string>());
            if (s.contains("error")) stage.error = s["error"].get<std::string>();
            manifest.stages.push_back(std::move(stage));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("manifest: " + path + ": " + e.what());
    }
    return manifest;
}

void write_timings_json(const RunManifest& manifest, const std::string& path) {
    nlohmann::ordered_json j;
    j["stages"] = nlohmann::ordered_json::array();
    for (const auto& [name, ms] : manifest.timings)
        j["stages"].push_back(nlohmann::ordered_json::array({name, ms}));
    io::write_file(path, j.dump(2) + "\n");
}

RunManifest run(const PipelineConfig& config) {
    validate_config(config);
    RunManifest manifest;
    manifest.version = kEcokitVersion;
    manifest.seed = config.seed;
    manifest.config_hash = io::hash_hex(io::fnv1a(canonical_config(config)));

    const std::string manifest_path = path_in(config, "manifest.json");
    RunManifest previous;
    bool have_previous = false;
    if (fs::exists(manifest_path)) {
        try {
            previous = read_manifest_json(manifest_path);
            have_previous = true;
        } catch (const Error&) {
            have_previous = false;  // rebuilt from scratch below
        }
    }

    struct StageDef {
        std::string name;
        std::function<std::vector<std::string>()> execute;
    };
    const std::vector<StageDef> stages = {
        {"ingest", [&] { return stage_ingest(config); }},
        {"overlap", [&] { return stage_overlap(config); }},
        {"cluster", [&] { return stage_cluster(config); }},
        {"density", [&] { return stage_density(config); }},
        {"var", [&] { return stage_var(config); }},
        {"irf", [&] { return stage_irf(config); }},
        {"forecast", [&] { return stage_forecast(config, true); }},
        {"report",
         [&] {
             (void)report(config);
             return std::vector<std::string>{"summary.md", "typology.json"};
         }},
    };

    const auto persist = [&] {
        write_manifest_json(manifest, manifest_path);
        write_timings_json(manifest, path_in(config, "timings.json"));
    };

    for (const StageDef& def : stages) {
        StageRecord record;
        record.name = def.name;
        record.params_hash = stage_params_hash(def.name, config);
        const auto inputs = stage_inputs(def.name, config);

        const StageRecord* prior = nullptr;
        if (have_previous)
            for (const StageRecord& s : previous.stages)
                if (s.name == def.name && s.status != "failed") prior = &s;

        bool cached =
            prior != nullptr && prior->params_hash == record.params_hash &&
            prior->inputs.size() == inputs.size();
        if (cached)
            for (std::size_t i = 0; cached && i < inputs.size(); ++i)
                cached = prior->inputs[i].first == inputs[i] &&
                         prior->inputs[i].second == hash_of(config, inputs[i]);
        if (cached)
            for (const auto& [name, hash] : prior->outputs) {
                if (!cached) break;
                cached = hash_of(config, name) == hash;
            }

        if (cached) {
            record.status = "cached";
            record.inputs = prior->inputs;
            record.outputs = prior->outputs;
            manifest.stages.push_back(std::move(record));
            continue;
        }

        const auto start = std::chrono::steady_clock::now();
        std::vector<std::string> outputs;
        try {
            outputs = def.execute();
        } catch (const std::exception& e) {
            record.status = "failed";
            record.error = e.what();
            for (const std::string& name : inputs)
                record.inputs.emplace_back(name, hash_of(config, name));
            manifest.stages.push_back(std::move(record));
            persist();
            throw Error("stage " + def.name + ": " + e.what());
        }
        const double ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - start)
                              .count();
        record.status = "executed";
        for (const std::string& name : inputs)
            record.inputs.emplace_back(name, hash_of(config, name));
        for (const std::string& name : outputs)
            record.outputs.emplace_back(name, hash_of(config, name));
        manifest.stages.push_back(std::move(record));
        manifest.timings.emplace_back(def.name, ms);
    }
    persist();
    return manifest;
}

}  // namespace ecokit
