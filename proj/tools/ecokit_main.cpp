#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ecokit/error.hpp"
#include "ecokit/ingest.hpp"
#include "ecokit/io.hpp"
#include "ecokit/overlap.hpp"
#include "ecokit/pipeline.hpp"
#include "ecokit/synth.hpp"
#include "json.hpp"

namespace {

void print_error_json(const std::string& command, const std::string& message) {
    nlohmann::ordered_json j;
    j["error"] = message;
    j["command"] = command;
    std::cerr << j.dump() << "\n";
}

void print_outputs(const ecokit::PipelineConfig& config,
                   const std::vector<std::string>& outputs) {
    for (const std::string& name : outputs)
        std::cout << "wrote " << (std::filesystem::path(config.out_dir) / name).string()
                  << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Competition and mutualism networks from participation time series"};
    app.set_version_flag("--version", ecokit::kEcokitVersion);
    app.require_subcommand(1);

    std::string config_path;
    auto* ingest = app.add_subcommand(
        "ingest", "Load events and build the weekly panel and user-frequency matrix");
    auto* overlap = app.add_subcommand(
        "overlap", "Embed groups and compute overlap similarities and densities");
    auto* cluster =
        app.add_subcommand("cluster", "Cluster groups over the configured grid");
    auto* density =
        app.add_subcommand("density", "Regress recent growth on overlap density");
    auto* var = app.add_subcommand(
        "var", "Fit the interaction model and its independent baseline per cluster");
    auto* irf = app.add_subcommand(
        "irf", "Bootstrap impulse responses and extract interaction networks");
    auto* forecast = app.add_subcommand(
        "forecast", "Forecast the holdout window, optionally scoring against the baseline");
    auto* simulate = app.add_subcommand(
        "simulate", "Generate a synthetic corpus with planted clusters and interactions");
    auto* run_cmd =
        app.add_subcommand("run", "Run every pipeline stage with content-hash caching");
    auto* report_cmd = app.add_subcommand(
        "report", "Render the human-readable summary from persisted stage outputs");

    for (auto* sub :
         {ingest, overlap, cluster, density, var, irf, forecast, run_cmd, report_cmd})
        sub->add_option("--config", config_path, "Pipeline configuration JSON")->required();

    std::uint64_t seed = 0;
    std::size_t k = 0;
    std::size_t holdout = 0;
    std::size_t smoothing = 0;
    std::size_t min_weeks = 0;
    std::size_t horizon = 0;
    std::size_t replicates = 0;
    bool compare_baseline = false;
    overlap->add_option("--k", k, "Embedding dimension override");
    overlap->add_option("--seed", seed, "Seed override");
    cluster->add_option("--seed", seed, "Seed override");
    density->add_option("--holdout", holdout, "Growth window override, in weeks");
    density->add_option("--smoothing", smoothing, "Endpoint smoothing override, in weeks");
    var->add_option("--min-weeks", min_weeks, "Minimum training weeks per member");
    var->add_option("--holdout", holdout, "Holdout length override, in weeks");
    irf->add_option("--horizon", horizon, "Impulse-response horizon, in weeks");
    irf->add_option("--replicates", replicates, "Bootstrap replicate count");
    irf->add_option("--seed", seed, "Seed override");
    forecast->add_option("--holdout", holdout, "Holdout length override, in weeks");
    forecast->add_flag("--compare-baseline", compare_baseline,
                       "Also forecast with the independent baseline and score both");
    run_cmd->add_option("--seed", seed, "Seed override");

    std::string spec_path;
    std::string sim_out;
    std::string sim_format = "csv";
    simulate->add_option("--spec-file", spec_path, "Generator spec JSON")->required();
    simulate->add_option("--out", sim_out, "Output directory")->required();
    simulate->add_option("--format", sim_format, "Event file format: csv or ndjson");
    simulate->add_option("--seed", seed, "Seed override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        print_error_json("parse", e.what());
        return e.get_exit_code();
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    try {
        if (name == "simulate") {
            auto spec = ecokit::read_synth_spec_json(spec_path);
            if (simulate->count("--seed") > 0) spec.seed = seed;
            const auto format = ecokit::parse_event_format(sim_format);
            std::filesystem::create_directories(sim_out);
            const auto corpus = ecokit::simulate_events(spec);
            const std::filesystem::path out(sim_out);
            std::string events_name;
            if (format == ecokit::EventFormat::csv) {
                events_name = "events.csv";
                ecokit::write_events_csv(corpus.events, (out / events_name).string());
            } else {
                events_name = "events.ndjson";
                ecokit::write_events_ndjson(corpus.events, (out / events_name).string());
            }
            ecokit::write_truth_json(corpus.truth, (out / "truth.json").string());
            ecokit::write_panel_csv(corpus.panel, (out / "panel.csv").string());
            ecokit::write_matrix_csv(corpus.counts, (out / "counts.csv").string());
            // Window parameters a pipeline config needs to ingest these events.
            nlohmann::ordered_json window;
            window["events"] = (out / events_name).string();
            window["format"] = sim_format;
            window["top_n"] = corpus.config.top_n;
            window["window_start"] = corpus.config.window_start;
            window["window_end"] = corpus.config.window_end;
            window["week_anchor"] = corpus.config.week_anchor;
            ecokit::io::write_file((out / "ingest.json").string(), window.dump(2) + "\n");
            for (const char* artifact :
                 {"truth.json", "panel.csv", "counts.csv", "ingest.json"})
                std::cout << "wrote " << (out / artifact).string() << "\n";
            std::cout << "wrote " << (out / events_name).string() << " ("
                      << corpus.events.size() << " events)\n";
            return 0;
        }

        auto config = ecokit::read_pipeline_config(config_path);
        const auto passed = [&](const std::string& option) {
            const CLI::Option* opt = sub->get_option_no_throw(option);
            return opt != nullptr && opt->count() > 0;
        };
        if (passed("--seed")) config.seed = seed;
        if (passed("--k")) config.k = k;
        if (passed("--holdout")) config.holdout = holdout;
        if (passed("--smoothing")) config.growth_smoothing = smoothing;
        if (passed("--min-weeks")) config.min_weeks = min_weeks;
        if (passed("--horizon")) config.horizon = horizon;
        if (passed("--replicates")) config.replicates = replicates;
        ecokit::validate_config(config);

        if (name == "ingest") {
            print_outputs(config, ecokit::stage_ingest(config));
        } else if (name == "overlap") {
            print_outputs(config, ecokit::stage_overlap(config));
        } else if (name == "cluster") {
            print_outputs(config, ecokit::stage_cluster(config));
        } else if (name == "density") {
            print_outputs(config, ecokit::stage_density(config));
        } else if (name == "var") {
            print_outputs(config, ecokit::stage_var(config));
        } else if (name == "irf") {
            print_outputs(config, ecokit::stage_irf(config));
        } else if (name == "forecast") {
            print_outputs(config, ecokit::stage_forecast(config, compare_baseline));
        } else if (name == "run") {
            const auto manifest = ecokit::run(config);
            for (const auto& stage : manifest.stages)
                std::cout << stage.name << ": " << stage.status << "\n";
            std::cout << "manifest: "
                      << (std::filesystem::path(config.out_dir) / "manifest.json").string()
                      << "\n";
        } else if (name == "report") {
            std::cout << ecokit::report(config);
        }
    } catch (const std::exception& e) {
        print_error_json(name, e.what());
        return 1;
    }
    return 0;
}
