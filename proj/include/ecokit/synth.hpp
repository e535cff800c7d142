#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ecokit/ingest.hpp"
#include "ecokit/matrix.hpp"

namespace ecokit {

// One planted cluster: members interact only with each other through phi
// (same orientation as VarFit: phi(i, j) is the effect of member i's lag on
// member j).
struct SynthCluster {
    std::size_t members = 0;
    Matrix phi;                         // members x members
    std::vector<double> b0, b1, y0;     // y0 = level at the creation week
    std::vector<std::size_t> creation;  // creation week per member
};

struct SynthSpec {
    std::vector<SynthCluster> clusters;
    std::size_t weeks = 0;
    double noise_sd = 0.1;
    std::uint64_t seed = 0;
    bool allow_unstable = false;  // permit planted spectral radius >= 1

    // Event-level generation: each distinct-user slot draws from the
    // cluster's own pool with probability sharing_rate and from the global
    // pool otherwise. Cluster pools are disjoint across clusters, which is
    // what makes overlap-based clustering recoverable.
    std::size_t cluster_pool = 0;
    std::size_t global_pool = 0;
    double sharing_rate = 1.0;
    std::int64_t window_start = 1420416000;  // Monday 2015-01-05 00:00 UTC
};

// Everything a test needs to treat generated data as ground truth.
struct PlantedTruth {
    std::vector<std::string> groups;  // "c<cluster>m<member>"
    std::vector<int> labels;          // cluster id per group
    std::vector<SynthCluster> clusters;
    std::size_t weeks = 0;
    double noise_sd = 0.0;
    std::uint64_t seed = 0;
};

struct SynthPanel {
    GroupPanel panel;
    PlantedTruth truth;
};

struct SynthCorpus {
    std::vector<EventRecord> events;
    Matrix counts;     // planted distinct-user counts, groups x weeks
    GroupPanel panel;  // the continuous recursion the counts quantize
    CorpusConfig config;
    PlantedTruth truth;
};

// Recursive VAR generation with Gaussian noise: zero before creation, y0 at
// the creation week, the fitted-form update afterwards. Cluster c draws from
// substream (seed, c + 1), so generation parallelizes per cluster.
[[nodiscard]] SynthPanel simulate_panel(const SynthSpec& spec);

// Panel generation plus an event stream whose per-group-week distinct-user
// counts equal round-half-up(exp(y) - 1), floored at one on the creation
// week. Cluster c draws its user choices from substream (seed, n_clusters +
// c + 1).
[[nodiscard]] SynthCorpus simulate_events(const SynthSpec& spec);

void write_truth_json(const PlantedTruth& truth, const std::string& path);
[[nodiscard]] PlantedTruth read_truth_json(const std::string& path);

// Generator spec from JSON: `weeks` and a `clusters` array are required; the
// other knobs fall back to the struct defaults. Matrices use the same
// {rows, cols, data} layout as the truth file.
[[nodiscard]] SynthSpec read_synth_spec_json(const std::string& path);

}  // namespace ecokit
