#include "ecokit/sparse.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "ecokit/error.hpp"
#include "ecokit/simd/kernels.hpp"

namespace ecokit {

SparseMatrix sparse_from_triplets(std::size_t rows, std::size_t cols,
                                  std::span<const std::size_t> row_idx,
                                  std::span<const std::size_t> col_idx,
                                  std::span<const double> values) {
    if (row_idx.size() != col_idx.size() || row_idx.size() != values.size())
        throw Error("sparse_from_triplets: triplet arrays differ in length");
    const std::size_t n = values.size();
    for (std::size_t i = 0; i < n; ++i)
        if (row_idx[i] >= rows || col_idx[i] >= cols)
            throw Error("sparse_from_triplets: index out of range at triplet " + std::to_string(i));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (row_idx[a] != row_idx[b]) return row_idx[a] < row_idx[b];
        return col_idx[a] < col_idx[b];
    });

    SparseMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.row_start.assign(rows + 1, 0);
    m.col.reserve(n);
    m.val.reserve(n);
    std::size_t last_row = rows;  // sentinel: no entry pushed yet
    for (std::size_t i : order) {
        const std::size_t r = row_idx[i];
        const std::size_t c = col_idx[i];
        if (last_row == r && m.col.back() == c) {
            m.val.back() += values[i];  // merge duplicate cell
            continue;
        }
        m.col.push_back(c);
        m.val.push_back(values[i]);
        m.row_start[r + 1] = m.col.size();
        last_row = r;
    }
    // row_start[r+1] currently set only for rows with entries; make cumulative.
    for (std::size_t r = 0; r < rows; ++r)
        m.row_start[r + 1] = std::max(m.row_start[r + 1], m.row_start[r]);
    return m;
}

std::vector<double> column_max(const SparseMatrix& a) {
    std::vector<double> m(a.cols, 0.0);
    for (std::size_t i = 0; i < a.nnz(); ++i) m[a.col[i]] = std::max(m[a.col[i]], a.val[i]);
    return m;
}

std::vector<double> column_sum(const SparseMatrix& a) {
    std::vector<double> s(a.cols, 0.0);
    for (std::size_t i = 0; i < a.nnz(); ++i) s[a.col[i]] += a.val[i];
    return s;
}

SparseMatrix scale_columns(const SparseMatrix& a, std::span<const double> factors) {
    if (factors.size() != a.cols) throw Error("scale_columns: factor count mismatch");
    SparseMatrix out = a;
    for (std::size_t i = 0; i < out.nnz(); ++i) out.val[i] *= factors[out.col[i]];
    return out;
}

Matrix sparse_dense(const SparseMatrix& a, const Matrix& b) {
    if (a.cols != b.rows()) throw Error("sparse_dense: inner dimensions differ");
    Matrix out(a.rows, b.cols());
    for (std::size_t r = 0; r < a.rows; ++r) {
        double* dst = out.row_ptr(r);
        for (std::size_t i = a.row_start[r]; i < a.row_start[r + 1]; ++i)
            simd::axpy(a.val[i], b.row_ptr(a.col[i]), dst, b.cols());
    }
    return out;
}

Matrix sparse_transpose_dense(const SparseMatrix& a, const Matrix& b) {
    if (a.rows != b.rows()) throw Error("sparse_transpose_dense: inner dimensions differ");
    Matrix out(a.cols, b.cols());
    for (std::size_t r = 0; r < a.rows; ++r) {
        const double* src = b.row_ptr(r);
        for (std::size_t i = a.row_start[r]; i < a.row_start[r + 1]; ++i)
            simd::axpy(a.val[i], src, out.row_ptr(a.col[i]), b.cols());
    }
    return out;
}

Matrix to_dense(const SparseMatrix& a) {
    Matrix out(a.rows, a.cols);
    for (std::size_t r = 0; r < a.rows; ++r)
        for (std::size_t i = a.row_start[r]; i < a.row_start[r + 1]; ++i)
            out(r, a.col[i]) = a.val[i];
    return out;
}

}  // namespace ecokit
