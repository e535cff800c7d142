#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ecokit/matrix.hpp"
#include "ecokit/sparse.hpp"

namespace ecokit {

// Everything derived from the user-frequency matrix: the truncated-SVD
// embedding of each group's normalized frequency column, pairwise cosine
// similarities, and the normalized per-group overlap density.
struct OverlapModel {
    std::size_t k = 0;
    Matrix embedding;                 // k x n_groups, column j = transformed group j
    Matrix similarities;              // n_groups x n_groups, symmetric
    std::vector<double> density;      // d_i, max entry exactly 1
    std::vector<double> raw_density;  // d*_i before normalization
};

// f_{u,j} = n_{u,j} / max_v n_{v,j}; every column maximum becomes 1.
// All-zero columns violate the ingest contract and raise an error.
[[nodiscard]] SparseMatrix normalize_frequencies(const SparseMatrix& counts);

// Top-k left-singular-vector projection U_k^T F of the normalized frequency
// matrix, computed by seeded randomized SVD (oversampling 10, 4 power
// iterations). k above the numerical rank is allowed but warns: trailing
// dimensions carry no signal.
[[nodiscard]] Matrix embed(const SparseMatrix& f, std::size_t k, std::uint64_t seed);

// Cosine similarity of embedding columns. A zero-norm column gets all its
// similarities (diagonal included) set to 0, with a warning.
[[nodiscard]] Matrix overlap_matrix(const Matrix& embedding);

struct DensityResult {
    std::vector<double> density;      // d_i = d*_i / max_j d*_j
    std::vector<double> raw_density;  // d*_i = mean of o_{i,j} over j != i
};

[[nodiscard]] DensityResult overlap_density(const Matrix& similarities);

// Convenience composition of the three steps above.
[[nodiscard]] OverlapModel build_overlap_model(const SparseMatrix& counts, std::size_t k,
                                               std::uint64_t seed);

// CSV persistence: similarity matrix, density vector, embedding matrix.
void write_overlap_model(const OverlapModel& model, std::span<const std::string> group_ids,
                         const std::string& similarity_path, const std::string& density_path,
                         const std::string& embedding_path);
[[nodiscard]] Matrix read_matrix_csv(const std::string& path);
void write_matrix_csv(const Matrix& m, const std::string& path);

}  // namespace ecokit
