#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ecokit/matrix.hpp"

namespace ecokit {

// Compressed-sparse-row matrix. In this project rows are users and columns are
// groups, so row counts stay in the tens of thousands while columns stay small.
struct SparseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_start;  // size rows + 1
    std::vector<std::size_t> col;        // size nnz, ascending within a row
    std::vector<double> val;             // size nnz

    [[nodiscard]] std::size_t nnz() const { return val.size(); }
};

// Builds CSR from (row, col, value) triplets; duplicate cells are summed.
[[nodiscard]] SparseMatrix sparse_from_triplets(
    std::size_t rows, std::size_t cols,
    std::span<const std::size_t> row_idx, std::span<const std::size_t> col_idx,
    std::span<const double> values);

[[nodiscard]] std::vector<double> column_max(const SparseMatrix& a);
[[nodiscard]] std::vector<double> column_sum(const SparseMatrix& a);

// Multiplies every entry in column j by factors[j].
[[nodiscard]] SparseMatrix scale_columns(const SparseMatrix& a, std::span<const double> factors);

// a (rows x cols) * b (cols x k) -> rows x k.
[[nodiscard]] Matrix sparse_dense(const SparseMatrix& a, const Matrix& b);
// a^T (cols x rows) * b (rows x k) -> cols x k.
[[nodiscard]] Matrix sparse_transpose_dense(const SparseMatrix& a, const Matrix& b);

[[nodiscard]] Matrix to_dense(const SparseMatrix& a);

}  // namespace ecokit
