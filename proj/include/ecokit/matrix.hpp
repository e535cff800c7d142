#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ecokit {

// Dense row-major matrix of doubles. Rows are contiguous so the SIMD kernels
// apply directly to row spans.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    [[nodiscard]] static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }
    [[nodiscard]] bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    [[nodiscard]] double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }
    [[nodiscard]] const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }
    [[nodiscard]] std::span<double> row(std::size_t r) { return {row_ptr(r), cols_}; }
    [[nodiscard]] std::span<const double> row(std::size_t r) const { return {row_ptr(r), cols_}; }

    [[nodiscard]] double* data() { return data_.data(); }
    [[nodiscard]] const double* data() const { return data_.data(); }
    [[nodiscard]] const std::vector<double>& storage() const { return data_; }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

[[nodiscard]] Matrix matmul(const Matrix& a, const Matrix& b);
[[nodiscard]] Matrix transpose(const Matrix& a);
// a * x for row-major a.
[[nodiscard]] std::vector<double> matvec(const Matrix& a, std::span<const double> x);
[[nodiscard]] double frobenius_norm(const Matrix& a);
[[nodiscard]] double max_abs(const Matrix& a);

// Ordinary least squares via Householder QR (no pivoting). Column indices in
// `skip_columns` are excluded from the solve and reported back with zero
// coefficients and zero covariance, which callers use for regressors that are
// structurally absent. Rank deficiency raises Error naming the offending
// column.
struct LeastSquaresResult {
    std::vector<double> coefficients;   // full layout, skipped columns = 0
    std::vector<double> residuals;      // y - X b
    double rss = 0.0;
    std::size_t n_rows = 0;
    std::size_t n_params = 0;           // columns actually estimated
    Matrix xtx_inverse;                 // full layout; skipped rows/cols = 0
};
[[nodiscard]] LeastSquaresResult least_squares(const Matrix& x, std::span<const double> y,
                                               std::span<const std::size_t> skip_columns = {});

// Thin SVD by one-sided Jacobi rotations: a = u * diag(sigma) * v^T with
// sigma sorted descending. Columns whose singular value underflows stay zero
// in u (no orthonormal completion).
struct SvdResult {
    Matrix u;                   // rows(a) x r
    std::vector<double> sigma;  // r = min(rows, cols)
    Matrix v;                   // cols(a) x r
};
[[nodiscard]] SvdResult jacobi_svd(const Matrix& a);

// Orthonormal basis of the column space via Householder QR (first cols(a)
// columns of Q). Requires rows >= cols.
[[nodiscard]] Matrix orthonormal_columns(const Matrix& a);

// Spectral radius estimate by repeated squaring with norm scaling; accurate
// to a few percent, which is enough to flag non-stationary dynamics.
[[nodiscard]] double spectral_radius_estimate(const Matrix& a);

}  // namespace ecokit
