#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ecokit/cluster.hpp"

namespace ecokit {

inline constexpr const char* kEcokitVersion = "0.1.0";

// Every knob of the full analysis in one place, loaded from JSON. The
// defaults are the production parameters; small corpora override them.
struct PipelineConfig {
    // input corpus
    std::string events_path;
    std::string events_format = "csv";  // "csv" or "ndjson"
    std::string out_dir;

    // ingest
    std::size_t top_n = 10000;
    std::vector<std::string> exclusion_list;
    std::int64_t window_start = 0;
    std::int64_t window_end = 0;
    int week_anchor = 0;
    bool exclude_before_truncation = true;

    // overlap embedding dimension
    std::size_t k = 600;

    // clustering; an empty grid defaults to spherical k-means at `k`
    // dimensions over a few cluster counts
    GridSpec grid;

    // growth-vs-density regression (growth is measured over `holdout` weeks)
    std::size_t growth_smoothing = 1;

    // interaction fits
    std::size_t min_weeks = 156;
    bool include_pre_creation = true;

    // forecast evaluation window, also the growth window above
    std::size_t holdout = 24;

    // impulse-response banding
    std::size_t horizon = 10;
    std::size_t replicates = 1000;

    std::uint64_t seed = 0;
};

// Strict JSON loader: unknown keys are rejected so typos cannot silently
// fall back to defaults. `events`, `out_dir`, `window_start`, and
// `window_end` are required.
[[nodiscard]] PipelineConfig read_pipeline_config(const std::string& path);

// Range and path checks; creates out_dir so later stages can write into it.
void validate_config(const PipelineConfig& config);

// One stage's bookkeeping: content hashes of its inputs and outputs plus a
// hash of the parameters it depends on. status is "executed", "cached", or
// "failed". Artifact paths inside out_dir are recorded by bare filename so a
// manifest does not depend on where the output tree lives.
struct StageRecord {
    std::string name;
    std::string status;
    std::string params_hash;
    std::vector<std::pair<std::string, std::string>> inputs;   // path, hash
    std::vector<std::pair<std::string, std::string>> outputs;  // path, hash
    std::string error;  // only set when status == "failed"
};

struct RunManifest {
    std::string version;
    std::uint64_t seed = 0;
    std::string config_hash;  // parameters only, not paths
    std::vector<StageRecord> stages;
    // wall-clock milliseconds per executed stage; persisted to a separate
    // file so the manifest itself is byte-stable across identical runs
    std::vector<std::pair<std::string, double>> timings;
};

// The eight stages in order. Each one reads and writes files under out_dir
// so it can be re-run standalone; every stage returns the artifact names it
// wrote. `run` wraps them with content-hash caching.
[[nodiscard]] std::vector<std::string> stage_ingest(const PipelineConfig& config);
[[nodiscard]] std::vector<std::string> stage_overlap(const PipelineConfig& config);
[[nodiscard]] std::vector<std::string> stage_cluster(const PipelineConfig& config);
[[nodiscard]] std::vector<std::string> stage_density(const PipelineConfig& config);
[[nodiscard]] std::vector<std::string> stage_var(const PipelineConfig& config);
[[nodiscard]] std::vector<std::string> stage_irf(const PipelineConfig& config);
[[nodiscard]] std::vector<std::string> stage_forecast(const PipelineConfig& config,
                                                      bool compare_baseline = true);

// Executes every stage in order. A stage is skipped when its parameter hash,
// input hashes, and output hashes all match the manifest of the previous run
// in out_dir. A stage failure halts the run with the stage name in the
// message; everything written so far (manifest included) is kept.
[[nodiscard]] RunManifest run(const PipelineConfig& config);

// Renders the human-readable summary purely from persisted stage outputs,
// writes summary.md and typology.json under out_dir, and returns the text.
// Missing stage outputs are reported as unavailable, not errors.
[[nodiscard]] std::string report(const PipelineConfig& config);

void write_manifest_json(const RunManifest& manifest, const std::string& path);
[[nodiscard]] RunManifest read_manifest_json(const std::string& path);
void write_timings_json(const RunManifest& manifest, const std::string& path);

}  // namespace ecokit
