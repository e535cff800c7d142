#include "ecokit/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ecokit/error.hpp"
#include "ecokit/simd/kernels.hpp"

namespace ecokit {

namespace {

void require(bool cond, const std::string& what) {
    if (!cond) throw Error(what);
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.rows(), "matmul: inner dimensions differ");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* out = c.row_ptr(i);
        const double* arow = a.row_ptr(i);
        for (std::size_t l = 0; l < a.cols(); ++l) {
            if (arow[l] != 0.0) simd::axpy(arow[l], b.row_ptr(l), out, b.cols());
        }
    }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
    require(a.cols() == x.size(), "matvec: dimension mismatch");
    std::vector<double> y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] = simd::dot(a.row_ptr(i), x.data(), x.size());
    return y;
}

double frobenius_norm(const Matrix& a) {
    return std::sqrt(simd::sumsq(a.data(), a.rows() * a.cols()));
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double v : a.storage()) m = std::max(m, std::abs(v));
    return m;
}

namespace {

// Householder reflector for column tail v (length len): on return v holds the
// normalized reflector with v[0] = 1 and the function yields {beta, r_jj}.
struct Reflector {
    double beta;
    double diag;
};

Reflector make_reflector(double* v, std::size_t len) {
    const double sigma = simd::sumsq(v + 1, len - 1);
    const double x0 = v[0];
    if (sigma == 0.0) {
        // Already upper-triangular in this column.
        return {0.0, x0};
    }
    const double norm = std::sqrt(x0 * x0 + sigma);
    // v = x - norm * e1, with the cancellation-free rewrite for x0 > 0; the
    // resulting reflection always sends the column to +norm * e1.
    const double v0 = (x0 <= 0.0) ? x0 - norm : -sigma / (x0 + norm);
    const double beta = 2.0 * v0 * v0 / (sigma + v0 * v0);
    const double inv = 1.0 / v0;
    v[0] = 1.0;
    simd::scale(inv, v + 1, len - 1);
    return {beta, norm};
}

}  // namespace

LeastSquaresResult least_squares(const Matrix& x, std::span<const double> y,
                                 std::span<const std::size_t> skip_columns) {
    const std::size_t m = x.rows();
    require(m == y.size(), "least_squares: row count differs from response length");

    std::vector<bool> skip(x.cols(), false);
    for (std::size_t c : skip_columns) {
        require(c < x.cols(), "least_squares: skip column out of range");
        skip[c] = true;
    }
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < x.cols(); ++c)
        if (!skip[c]) keep.push_back(c);
    const std::size_t p = keep.size();
    require(p >= 1, "least_squares: no columns to estimate");
    require(m >= p, "least_squares: fewer rows than parameters");

    // Augmented [X | y]; reflectors are applied to the response in lockstep.
    Matrix work(m, p + 1);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t c = 0; c < p; ++c) work(i, c) = x(i, keep[c]);
        work(i, p) = y[i];
    }

    double max_col_norm = 0.0;
    for (std::size_t c = 0; c < p; ++c) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += work(i, c) * work(i, c);
        max_col_norm = std::max(max_col_norm, std::sqrt(s));
    }
    const double rank_tol = std::max(max_col_norm, 1.0e-300) * 1.0e-12;

    std::vector<double> v(m);
    std::vector<double> w(p + 1);
    std::vector<double> rdiag(p);
    for (std::size_t j = 0; j < p; ++j) {
        const std::size_t len = m - j;
        for (std::size_t i = 0; i < len; ++i) v[i] = work(j + i, j);
        const Reflector h = make_reflector(v.data(), len);
        rdiag[j] = h.diag;
        if (std::abs(h.diag) <= rank_tol)
            throw Error("least_squares: rank-deficient design, offending column " +
                        std::to_string(keep[j]));
        work(j, j) = h.diag;
        for (std::size_t i = 1; i < len; ++i) work(j + i, j) = 0.0;
        if (h.beta != 0.0 && j + 1 <= p) {
            const std::size_t ncols = p - j;  // trailing model columns plus response
            std::fill(w.begin(), w.begin() + ncols, 0.0);
            for (std::size_t i = 0; i < len; ++i)
                simd::axpy(v[i], work.row_ptr(j + i) + j + 1, w.data(), ncols);
            for (std::size_t i = 0; i < len; ++i)
                simd::axpy(-h.beta * v[i], w.data(), work.row_ptr(j + i) + j + 1, ncols);
        }
    }

    // Back-substitution of R b = (Q^T y)[0..p).
    std::vector<double> beta_hat(p);
    for (std::size_t jj = p; jj-- > 0;) {
        double acc = work(jj, p);
        for (std::size_t c = jj + 1; c < p; ++c) acc -= work(jj, c) * beta_hat[c];
        beta_hat[jj] = acc / rdiag[jj];
    }

    // R^{-1}, then (X^T X)^{-1} = R^{-1} R^{-T}.
    Matrix rinv(p, p);
    for (std::size_t c = 0; c < p; ++c) {
        rinv(c, c) = 1.0 / rdiag[c];
        for (std::size_t r = c; r-- > 0;) {
            double acc = 0.0;
            for (std::size_t k = r + 1; k <= c; ++k) acc += work(r, k) * rinv(k, c);
            rinv(r, c) = -acc / rdiag[r];
        }
    }
    Matrix xtx_inv_small(p, p);
    for (std::size_t r = 0; r < p; ++r)
        for (std::size_t c = r; c < p; ++c) {
            const std::size_t k0 = std::max(r, c);
            double acc = 0.0;
            for (std::size_t k = k0; k < p; ++k) acc += rinv(r, k) * rinv(c, k);
            xtx_inv_small(r, c) = acc;
            xtx_inv_small(c, r) = acc;
        }

    LeastSquaresResult out;
    out.coefficients.assign(x.cols(), 0.0);
    for (std::size_t c = 0; c < p; ++c) out.coefficients[keep[c]] = beta_hat[c];
    out.residuals.assign(y.begin(), y.end());
    for (std::size_t c = 0; c < p; ++c) {
        if (beta_hat[c] == 0.0) continue;
        for (std::size_t i = 0; i < m; ++i) out.residuals[i] -= x(i, keep[c]) * beta_hat[c];
    }
    out.rss = simd::sumsq(out.residuals.data(), m);
    out.n_rows = m;
    out.n_params = p;
    out.xtx_inverse = Matrix(x.cols(), x.cols());
    for (std::size_t r = 0; r < p; ++r)
        for (std::size_t c = 0; c < p; ++c) out.xtx_inverse(keep[r], keep[c]) = xtx_inv_small(r, c);
    return out;
}

SvdResult jacobi_svd(const Matrix& a) {
    require(a.rows() > 0 && a.cols() > 0, "jacobi_svd: empty matrix");
    if (a.rows() < a.cols()) {
        SvdResult t = jacobi_svd(transpose(a));
        return {std::move(t.v), std::move(t.sigma), std::move(t.u)};
    }
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();

    // Work on column vectors stored contiguously (rows of the transposes).
    Matrix bt = transpose(a);           // n x m, row j = column j of a
    Matrix vt = Matrix::identity(n);    // n x n, row j = column j of v

    const double eps = 1.0e-14;
    const int max_sweeps = 60;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double* bp = bt.row_ptr(p);
                double* bq = bt.row_ptr(q);
                const double alpha = simd::sumsq(bp, m);
                const double beta = simd::sumsq(bq, m);
                if (alpha == 0.0 || beta == 0.0) continue;
                const double gamma = simd::dot(bp, bq, m);
                const double scaled = std::abs(gamma) / std::sqrt(alpha * beta);
                off = std::max(off, scaled);
                if (scaled <= eps) continue;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                double* vp = vt.row_ptr(p);
                double* vq = vt.row_ptr(q);
                for (std::size_t i = 0; i < m; ++i) {
                    const double tmp = c * bp[i] - s * bq[i];
                    bq[i] = s * bp[i] + c * bq[i];
                    bp[i] = tmp;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double tmp = c * vp[i] - s * vq[i];
                    vq[i] = s * vp[i] + c * vq[i];
                    vp[i] = tmp;
                }
            }
        }
        if (off <= eps) break;
    }

    std::vector<double> sigma(n);
    for (std::size_t j = 0; j < n; ++j) sigma[j] = std::sqrt(simd::sumsq(bt.row_ptr(j), m));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

    SvdResult out;
    out.sigma.resize(n);
    out.u = Matrix(m, n);
    out.v = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        out.sigma[j] = sigma[src];
        if (sigma[src] > 0.0) {
            const double inv = 1.0 / sigma[src];
            const double* col = bt.row_ptr(src);
            for (std::size_t i = 0; i < m; ++i) out.u(i, j) = col[i] * inv;
        }
        const double* vrow = vt.row_ptr(src);
        for (std::size_t i = 0; i < n; ++i) out.v(i, j) = vrow[i];
    }
    return out;
}

Matrix orthonormal_columns(const Matrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    require(m >= n && n > 0, "orthonormal_columns: need rows >= cols >= 1");

    Matrix work = a;
    std::vector<std::vector<double>> reflectors(n);
    std::vector<double> betas(n, 0.0);
    std::vector<double> w(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t len = m - j;
        std::vector<double> v(len);
        for (std::size_t i = 0; i < len; ++i) v[i] = work(j + i, j);
        const Reflector h = make_reflector(v.data(), len);
        betas[j] = h.beta;
        if (h.beta != 0.0 && j + 1 < n) {
            const std::size_t ncols = n - j - 1;
            std::fill(w.begin(), w.begin() + ncols, 0.0);
            for (std::size_t i = 0; i < len; ++i)
                simd::axpy(v[i], work.row_ptr(j + i) + j + 1, w.data(), ncols);
            for (std::size_t i = 0; i < len; ++i)
                simd::axpy(-h.beta * v[i], w.data(), work.row_ptr(j + i) + j + 1, ncols);
        }
        reflectors[j] = std::move(v);
    }

    // Accumulate Q's leading n columns as rows of qt so reflector application
    // stays on contiguous spans.
    Matrix qt(n, m);
    for (std::size_t i = 0; i < n; ++i) qt(i, i) = 1.0;
    for (std::size_t j = n; j-- > 0;) {
        if (betas[j] == 0.0) continue;
        const std::vector<double>& v = reflectors[j];
        const std::size_t len = m - j;
        for (std::size_t r = 0; r < n; ++r) {
            double* tail = qt.row_ptr(r) + j;
            const double y = simd::dot(tail, v.data(), len);
            if (y != 0.0) simd::axpy(-betas[j] * y, v.data(), tail, len);
        }
    }
    return transpose(qt);
}

double spectral_radius_estimate(const Matrix& a) {
    require(a.rows() == a.cols(), "spectral_radius_estimate: square matrix required");
    if (a.rows() == 0) return 0.0;
    Matrix cur = a;
    double log_rho = 0.0;
    double weight = 1.0;
    const int squarings = 24;
    for (int i = 0; i < squarings; ++i) {
        const double c = frobenius_norm(cur);
        if (c == 0.0) return 0.0;
        log_rho += weight * std::log(c);
        weight *= 0.5;
        const double inv = 1.0 / c;
        Matrix scaled = cur;
        simd::scale(inv, scaled.data(), scaled.rows() * scaled.cols());
        cur = matmul(scaled, scaled);
    }
    log_rho += weight * std::log(std::max(frobenius_norm(cur), 1.0e-300));
    return std::exp(log_rho);
}

}  // namespace ecokit
