#include "ecokit/overlap.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "ecokit/error.hpp"
#include "ecokit/io.hpp"
#include "ecokit/rng.hpp"
#include "ecokit/simd/kernels.hpp"

namespace ecokit {

SparseMatrix normalize_frequencies(const SparseMatrix& counts) {
    const std::vector<double> maxima = column_max(counts);
    std::vector<double> factors(maxima.size());
    for (std::size_t j = 0; j < maxima.size(); ++j) {
        if (maxima[j] <= 0.0)
            throw Error("normalize_frequencies: column " + std::to_string(j) +
                        " has no events; retained groups must have at least one");
        factors[j] = 1.0 / maxima[j];
    }
    return scale_columns(counts, factors);
}

Matrix embed(const SparseMatrix& f, std::size_t k, std::uint64_t seed) {
    const std::size_t m = f.rows;
    const std::size_t n = f.cols;
    const std::size_t limit = std::min(m, n);
    if (k < 1 || k > limit)
        throw Error("embed: k must be in [1, " + std::to_string(limit) + "], got " +
                    std::to_string(k));

    // Range finder: Q spans the leading left-singular subspace of F.
    const std::size_t sketch = std::min(k + 10, limit);
    Rng rng(seed);
    Matrix omega(n, sketch);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < sketch; ++j) omega(i, j) = rng.next_normal();

    Matrix q = orthonormal_columns(sparse_dense(f, omega));
    for (int iter = 0; iter < 4; ++iter) {
        Matrix z = orthonormal_columns(sparse_transpose_dense(f, q));
        q = orthonormal_columns(sparse_dense(f, z));
    }

    // Project: B = Q^T F (sketch x n); its SVD gives the top singular pairs.
    Matrix b = transpose(sparse_transpose_dense(f, q));
    SvdResult svd = jacobi_svd(b);
    if (svd.sigma[k - 1] <= 1e-12 * std::max(svd.sigma[0], 1e-300))
        warn("embed: k=" + std::to_string(k) +
             " exceeds the numerical rank; trailing dimensions are near zero");

    // U_k = Q * U_b[:, :k]  (m x k), then embedding = U_k^T F  (k x n).
    Matrix ub(q.cols(), k);
    for (std::size_t i = 0; i < q.cols(); ++i)
        for (std::size_t j = 0; j < k; ++j) ub(i, j) = svd.u(i, j);
    Matrix uk = matmul(q, ub);
    return transpose(sparse_transpose_dense(f, uk));
}

Matrix overlap_matrix(const Matrix& embedding) {
    const std::size_t n = embedding.cols();
    Matrix gram = matmul(transpose(embedding), embedding);
    std::vector<double> norms(n);
    for (std::size_t j = 0; j < n; ++j) norms[j] = std::sqrt(std::max(gram(j, j), 0.0));

    Matrix o(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (norms[i] == 0.0) {
            warn("overlap_matrix: group " + std::to_string(i) +
                 " has a zero embedding; its similarities are set to 0");
            continue;  // row and column stay 0
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (norms[j] == 0.0) continue;
            if (i == j) {
                o(i, j) = 1.0;
            } else {
                o(i, j) = std::clamp(gram(i, j) / (norms[i] * norms[j]), -1.0, 1.0);
            }
        }
    }
    return o;
}

DensityResult overlap_density(const Matrix& similarities) {
    const std::size_t n = similarities.rows();
    if (similarities.cols() != n) throw Error("overlap_density: square matrix required");
    if (n < 2) throw Error("overlap_density: need at least two groups");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(similarities(i, j) - similarities(j, i)) > 1e-9)
                throw Error("overlap_density: similarity matrix is not symmetric");

    DensityResult out;
    out.raw_density.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) acc += similarities(i, j);
        out.raw_density[i] = acc / static_cast<double>(n - 1);
    }
    const double peak = *std::max_element(out.raw_density.begin(), out.raw_density.end());
    if (peak <= 0.0)
        throw Error("overlap_density: maximum raw density is not positive; cannot normalize");
    out.density.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.density[i] = out.raw_density[i] / peak;
    return out;
}

OverlapModel build_overlap_model(const SparseMatrix& counts, std::size_t k, std::uint64_t seed) {
    OverlapModel model;
    model.k = k;
    model.embedding = embed(normalize_frequencies(counts), k, seed);
    model.similarities = overlap_matrix(model.embedding);
    DensityResult d = overlap_density(model.similarities);
    model.density = std::move(d.density);
    model.raw_density = std::move(d.raw_density);
    return model;
}

void write_matrix_csv(const Matrix& m, const std::string& path) {
    std::ostringstream out;
    out << m.rows() << ',' << m.cols() << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c) out << ',';
            out << io::fmt_g17(m(r, c));
        }
        out << '\n';
    }
    io::write_file(path, out.str());
}

Matrix read_matrix_csv(const std::string& path) {
    const std::string content = io::read_file(path);
    std::istringstream in(content);
    std::string line;
    if (!std::getline(in, line)) throw Error("matrix file is empty: " + path);
    const auto dims = io::split(line, ',');
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    if (dims.size() != 2 || !io::parse_u64(dims[0], rows) || !io::parse_u64(dims[1], cols))
        throw Error("matrix file has an invalid dimension header: " + path);
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        if (!std::getline(in, line)) throw Error("matrix file is truncated: " + path);
        const auto fields = io::split(line, ',');
        if (fields.size() != cols) throw Error("matrix file row width mismatch: " + path);
        for (std::size_t c = 0; c < cols; ++c)
            if (!io::parse_double(fields[c], m(r, c)))
                throw Error("matrix file has an invalid value: " + path);
    }
    return m;
}

void write_overlap_model(const OverlapModel& model, std::span<const std::string> group_ids,
                         const std::string& similarity_path, const std::string& density_path,
                         const std::string& embedding_path) {
    if (group_ids.size() != model.similarities.rows())
        throw Error("write_overlap_model: group id count mismatch");
    write_matrix_csv(model.similarities, similarity_path);
    write_matrix_csv(model.embedding, embedding_path);
    std::ostringstream out;
    out << "group,density,raw_density\n";
    for (std::size_t i = 0; i < group_ids.size(); ++i)
        out << group_ids[i] << ',' << io::fmt_g17(model.density[i]) << ','
            << io::fmt_g17(model.raw_density[i]) << '\n';
    io::write_file(density_path, out.str());
}

}  // namespace ecokit
