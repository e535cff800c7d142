#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ecokit/matrix.hpp"

namespace ecokit {

// One clustering outcome. Labels are non-negative cluster ids with -1 marking
// isolates (noise); silhouette is computed over non-isolates only.
struct ClusterAssignment {
    std::vector<int> labels;
    std::string algorithm;
    std::map<std::string, double> hyperparameters;
    std::size_t k_dims = 0;
    double silhouette = 0.0;
    std::size_t n_clusters = 0;
    std::size_t n_isolates = 0;
    bool feasible = false;
    std::string infeasible_reason;
};

struct GridPoint {
    std::string algorithm;  // "kmeans" or "dbscan"; other names error at evaluation
    std::map<std::string, double> hyperparameters;
    std::size_t k_dim = 0;
};

struct GridSpec {
    std::vector<GridPoint> points;
    std::size_t max_isolates = 5000;
    std::size_t min_clusters = 50;
};

// Mean silhouette over non-isolate points, distance = 1 - cosine similarity of
// embedding columns. Requires at least two clusters among the non-isolates.
[[nodiscard]] double silhouette(const Matrix& embedding, std::span<const int> labels);

// Spherical k-means on embedding columns (cosine similarity), k-means++
// initialization from the seed; produces no isolates.
[[nodiscard]] std::vector<int> kmeans_cosine(const Matrix& embedding, std::size_t k,
                                             std::uint64_t seed, std::size_t max_iter = 100);

// DBSCAN with distance 1 - cosine; noise points get label -1.
[[nodiscard]] std::vector<int> dbscan_cosine(const Matrix& embedding, double eps,
                                             std::size_t min_pts);

struct GridResult {
    std::vector<ClusterAssignment> ranked;     // feasible candidates, best first
    std::vector<ClusterAssignment> evaluated;  // every grid point, spec order
};

// Evaluates every grid point against the embedding for its k_dim, filters by
// the isolate and cluster-count constraints, and ranks survivors by silhouette
// descending with ties broken by fewer isolates then more clusters.
[[nodiscard]] GridResult run_grid(const std::map<std::size_t, Matrix>& embeddings,
                                  const GridSpec& spec, std::uint64_t seed);

enum class Judgment { fits, does_not_fit, unavailable };

// Judged-fit fraction: fits / (fits + does_not_fit), unavailable excluded.
// Note this is the audit-based notion, not contingency-table purity.
[[nodiscard]] double purity(std::span<const Judgment> judgments);

// Agreement between two partitions, chance-corrected; isolates (-1) count as a
// regular class. 1 = identical partitions.
[[nodiscard]] double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

// Labels persistence: CSV with header `group,cluster`.
void write_labels_csv(std::span<const std::string> groups, std::span<const int> labels,
                      const std::string& path);
[[nodiscard]] std::vector<int> read_labels_csv(const std::string& path,
                                               std::span<const std::string> groups);
void write_grid_report_csv(std::span<const ClusterAssignment> evaluated, const std::string& path);

}  // namespace ecokit
