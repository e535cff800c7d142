#include "ecokit/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

#include "ecokit/error.hpp"
#include "ecokit/io.hpp"
#include "ecokit/rng.hpp"
#include "ecokit/simd/kernels.hpp"

namespace ecokit {

namespace {

// Embedding columns as unit-normalized rows (n points x k dims); zero-norm
// columns stay zero, so their cosine to everything is 0.
Matrix unit_points(const Matrix& embedding) {
    Matrix pts = transpose(embedding);
    for (std::size_t i = 0; i < pts.rows(); ++i) {
        double* p = pts.row_ptr(i);
        const double norm = std::sqrt(simd::sumsq(p, pts.cols()));
        if (norm > 0.0) {
            simd::scale(1.0 / norm, p, pts.cols());
        }
    }
    return pts;
}

double cosine_distance(const Matrix& pts, std::size_t i, std::size_t j) {
    const double c = simd::dot(pts.row_ptr(i), pts.row_ptr(j), pts.cols());
    return 1.0 - std::clamp(c, -1.0, 1.0);
}

std::size_t count_clusters(std::span<const int> labels) {
    std::set<int> ids;
    for (int l : labels) {
        if (l >= 0) {
            ids.insert(l);
        }
    }
    return ids.size();
}

std::size_t count_isolates(std::span<const int> labels) {
    std::size_t n = 0;
    for (int l : labels) {
        if (l < 0) {
            ++n;
        }
    }
    return n;
}

}  // namespace

double silhouette(const Matrix& embedding, std::span<const int> labels) {
    if (labels.size() != embedding.cols()) {
        throw Error("silhouette: labels size " + std::to_string(labels.size()) +
                    " does not match embedding columns " + std::to_string(embedding.cols()));
    }
    const Matrix pts = unit_points(embedding);
    const std::size_t n = labels.size();

    // Compact the non-isolate cluster ids to 0..C-1.
    std::map<int, int> compact;
    for (int l : labels) {
        if (l >= 0) {
            compact.emplace(l, 0);
        }
    }
    const std::size_t c = compact.size();
    if (c < 2) {
        throw Error("silhouette: need at least two clusters among non-isolates, got " +
                    std::to_string(c));
    }
    int next = 0;
    for (auto& [id, slot] : compact) {
        slot = next++;
    }
    std::vector<std::size_t> cluster_size(c, 0);
    std::vector<int> dense(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] >= 0) {
            dense[i] = compact.at(labels[i]);
            ++cluster_size[static_cast<std::size_t>(dense[i])];
        }
    }

    double total = 0.0;
    std::size_t counted = 0;
    std::vector<double> sum_to(c);
    for (std::size_t i = 0; i < n; ++i) {
        if (dense[i] < 0) {
            continue;
        }
        std::fill(sum_to.begin(), sum_to.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || dense[j] < 0) {
                continue;
            }
            sum_to[static_cast<std::size_t>(dense[j])] += cosine_distance(pts, i, j);
        }
        const auto own = static_cast<std::size_t>(dense[i]);
        double s = 0.0;
        if (cluster_size[own] > 1) {
            const double a = sum_to[own] / static_cast<double>(cluster_size[own] - 1);
            double b = std::numeric_limits<double>::infinity();
            for (std::size_t q = 0; q < c; ++q) {
                if (q != own && cluster_size[q] > 0) {
                    b = std::min(b, sum_to[q] / static_cast<double>(cluster_size[q]));
                }
            }
            const double denom = std::max(a, b);
            s = (denom > 0.0) ? (b - a) / denom : 0.0;
        }
        total += s;
        ++counted;
    }
    return total / static_cast<double>(counted);
}

std::vector<int> kmeans_cosine(const Matrix& embedding, std::size_t k, std::uint64_t seed,
                               std::size_t max_iter) {
    const std::size_t n = embedding.cols();
    if (k < 1 || k > n) {
        throw Error("kmeans: k = " + std::to_string(k) + " outside [1, " + std::to_string(n) +
                    "]");
    }
    const Matrix pts = unit_points(embedding);
    const std::size_t dims = pts.cols();
    Rng rng(seed);

    // k-means++ seeding with D^2 sampling on cosine distance.
    Matrix centers(k, dims);
    std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
    std::size_t first = rng.next_below(n);
    std::copy_n(pts.row_ptr(first), dims, centers.row_ptr(0));
    for (std::size_t c = 1; c < k; ++c) {
        double mass = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double cos =
                std::clamp(simd::dot(centers.row_ptr(c - 1), pts.row_ptr(i), dims), -1.0, 1.0);
            min_dist[i] = std::min(min_dist[i], 1.0 - cos);
            mass += min_dist[i] * min_dist[i];
        }
        std::size_t pick = 0;
        if (mass > 0.0) {
            const double u = rng.next_double() * mass;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += min_dist[i] * min_dist[i];
                if (acc >= u) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.next_below(n);
        }
        std::copy_n(pts.row_ptr(pick), dims, centers.row_ptr(c));
    }

    std::vector<int> labels(n, 0);
    std::vector<double> sims(k);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_sim = -std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double s = simd::dot(centers.row_ptr(c), pts.row_ptr(i), dims);
                if (s > best_sim) {
                    best_sim = s;
                    best = c;
                }
            }
            if (labels[i] != static_cast<int>(best)) {
                labels[i] = static_cast<int>(best);
                changed = true;
            }
        }
        if (!changed && iter > 0) {
            break;
        }
        // Recompute centers as normalized member means.
        std::fill(centers.data(), centers.data() + k * dims, 0.0);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(labels[i]);
            simd::axpy(1.0, pts.row_ptr(i), centers.row_ptr(c), dims);
            ++counts[c];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // Re-seed an empty cluster from the point farthest from its center.
                std::size_t far = 0;
                double worst = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const auto own = static_cast<std::size_t>(labels[i]);
                    if (counts[own] <= 1) {
                        continue;  // do not strand another cluster
                    }
                    const double d =
                        1.0 - simd::dot(centers.row_ptr(own), pts.row_ptr(i), dims) /
                                  std::max(1e-300, std::sqrt(simd::sumsq(centers.row_ptr(own),
                                                                         dims)));
                    if (d > worst) {
                        worst = d;
                        far = i;
                    }
                }
                std::copy_n(pts.row_ptr(far), dims, centers.row_ptr(c));
                labels[far] = static_cast<int>(c);
                continue;
            }
            double* ctr = centers.row_ptr(c);
            const double norm = std::sqrt(simd::sumsq(ctr, dims));
            if (norm > 0.0) {
                simd::scale(1.0 / norm, ctr, dims);
            }
        }
    }
    return labels;
}

std::vector<int> dbscan_cosine(const Matrix& embedding, double eps, std::size_t min_pts) {
    if (eps <= 0.0) {
        throw Error("dbscan: eps must be positive, got " + io::fmt_g17(eps));
    }
    if (min_pts < 1) {
        throw Error("dbscan: min_pts must be at least 1");
    }
    const Matrix pts = unit_points(embedding);
    const std::size_t n = pts.rows();

    // Neighborhoods include the point itself.
    std::vector<std::vector<std::size_t>> neigh(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (cosine_distance(pts, i, j) <= eps) {
                neigh[i].push_back(j);
            }
        }
    }

    constexpr int kUnvisited = -2;
    std::vector<int> labels(n, kUnvisited);
    int next_cluster = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != kUnvisited) {
            continue;
        }
        if (neigh[i].size() < min_pts) {
            labels[i] = -1;
            continue;
        }
        const int cid = next_cluster++;
        labels[i] = cid;
        std::vector<std::size_t> queue(neigh[i].begin(), neigh[i].end());
        for (std::size_t qi = 0; qi < queue.size(); ++qi) {
            const std::size_t p = queue[qi];
            if (labels[p] == -1) {
                labels[p] = cid;  // border point adopted by this cluster
            }
            if (labels[p] != kUnvisited) {
                continue;
            }
            labels[p] = cid;
            if (neigh[p].size() >= min_pts) {
                queue.insert(queue.end(), neigh[p].begin(), neigh[p].end());
            }
        }
    }
    return labels;
}

namespace {

ClusterAssignment evaluate_point(const std::map<std::size_t, Matrix>& embeddings,
                                 const GridPoint& point, const GridSpec& spec,
                                 std::uint64_t seed, std::size_t index) {
    ClusterAssignment out;
    out.algorithm = point.algorithm;
    out.hyperparameters = point.hyperparameters;
    out.k_dims = point.k_dim;

    const auto it = embeddings.find(point.k_dim);
    if (it == embeddings.end()) {
        throw Error("run_grid: no embedding provided for k_dim " + std::to_string(point.k_dim));
    }
    const Matrix& emb = it->second;

    const auto need = [&](const char* name) {
        const auto h = point.hyperparameters.find(name);
        if (h == point.hyperparameters.end()) {
            throw Error("run_grid: " + point.algorithm + " grid point missing hyperparameter '" +
                        name + "'");
        }
        return h->second;
    };

    if (point.algorithm == "kmeans") {
        const auto k = static_cast<std::size_t>(need("k"));
        out.labels = kmeans_cosine(emb, k, Rng(seed, index + 1).next_u64());
    } else if (point.algorithm == "dbscan") {
        out.labels = dbscan_cosine(emb, need("eps"), static_cast<std::size_t>(need("min_pts")));
    } else if (point.algorithm == "hdbscan" || point.algorithm == "affinity-propagation") {
        throw Error("run_grid: backend '" + point.algorithm +
                    "' is not built into this distribution; import labels produced externally "
                    "via a labels file instead");
    } else {
        throw Error("run_grid: unknown algorithm '" + point.algorithm + "'");
    }

    out.n_clusters = count_clusters(out.labels);
    out.n_isolates = count_isolates(out.labels);
    out.feasible = true;
    std::ostringstream why;
    if (out.n_clusters < 2) {
        out.feasible = false;
        why << "fewer than two clusters (silhouette undefined); ";
        out.silhouette = std::numeric_limits<double>::quiet_NaN();
    } else {
        out.silhouette = silhouette(emb, out.labels);
    }
    if (out.n_isolates > spec.max_isolates) {
        out.feasible = false;
        why << "isolates " << out.n_isolates << " > max " << spec.max_isolates << "; ";
    }
    if (out.n_clusters < spec.min_clusters) {
        out.feasible = false;
        why << "clusters " << out.n_clusters << " < min " << spec.min_clusters << "; ";
    }
    out.infeasible_reason = why.str();
    if (!out.infeasible_reason.empty()) {
        out.infeasible_reason.resize(out.infeasible_reason.size() - 2);  // trim "; "
    }
    return out;
}

}  // namespace

GridResult run_grid(const std::map<std::size_t, Matrix>& embeddings, const GridSpec& spec,
                    std::uint64_t seed) {
    if (spec.points.empty()) {
        throw Error("run_grid: empty grid");
    }
    GridResult result;
    result.evaluated.reserve(spec.points.size());
    for (std::size_t i = 0; i < spec.points.size(); ++i) {
        result.evaluated.push_back(evaluate_point(embeddings, spec.points[i], spec, seed, i));
    }
    for (const auto& cand : result.evaluated) {
        if (cand.feasible) {
            result.ranked.push_back(cand);
        }
    }
    if (result.ranked.empty()) {
        // Report the nearest misses so the caller can see how far off the grid was.
        std::ostringstream msg;
        msg << "run_grid: no grid point satisfied max_isolates <= " << spec.max_isolates
            << " and min_clusters >= " << spec.min_clusters << "; nearest misses:";
        std::size_t shown = 0;
        for (const auto& cand : result.evaluated) {
            msg << " [" << cand.algorithm << " k_dim=" << cand.k_dims << ": clusters="
                << cand.n_clusters << ", isolates=" << cand.n_isolates << " ("
                << cand.infeasible_reason << ")]";
            if (++shown == 5) {
                break;
            }
        }
        throw Error(msg.str());
    }
    std::stable_sort(result.ranked.begin(), result.ranked.end(),
                     [](const ClusterAssignment& a, const ClusterAssignment& b) {
                         if (a.silhouette != b.silhouette) {
                             return a.silhouette > b.silhouette;
                         }
                         if (a.n_isolates != b.n_isolates) {
                             return a.n_isolates < b.n_isolates;
                         }
                         return a.n_clusters > b.n_clusters;
                     });
    return result;
}

double purity(std::span<const Judgment> judgments) {
    std::size_t fits = 0;
    std::size_t misfits = 0;
    for (Judgment j : judgments) {
        if (j == Judgment::fits) {
            ++fits;
        } else if (j == Judgment::does_not_fit) {
            ++misfits;
        }
    }
    const std::size_t judged = fits + misfits;
    if (judged == 0) {
        throw Error("purity: no judged members (all unavailable)");
    }
    return static_cast<double>(fits) / static_cast<double>(judged);
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) {
        throw Error("adjusted_rand_index: partitions have different sizes");
    }
    const std::size_t n = a.size();
    if (n < 2) {
        throw Error("adjusted_rand_index: need at least two items");
    }
    std::map<std::pair<int, int>, std::size_t> cell;
    std::map<int, std::size_t> row_sum;
    std::map<int, std::size_t> col_sum;
    for (std::size_t i = 0; i < n; ++i) {
        ++cell[{a[i], b[i]}];
        ++row_sum[a[i]];
        ++col_sum[b[i]];
    }
    const auto choose2 = [](std::size_t m) {
        return static_cast<double>(m) * static_cast<double>(m - 1) / 2.0;
    };
    double sum_cells = 0.0;
    for (const auto& [key, count] : cell) {
        sum_cells += choose2(count);
    }
    double sum_rows = 0.0;
    for (const auto& [key, count] : row_sum) {
        sum_rows += choose2(count);
    }
    double sum_cols = 0.0;
    for (const auto& [key, count] : col_sum) {
        sum_cols += choose2(count);
    }
    const double total = choose2(n);
    const double expected = sum_rows * sum_cols / total;
    const double maximum = 0.5 * (sum_rows + sum_cols);
    if (maximum == expected) {
        return 1.0;  // both partitions degenerate (all-singletons vs all-singletons etc.)
    }
    return (sum_cells - expected) / (maximum - expected);
}

void write_labels_csv(std::span<const std::string> groups, std::span<const int> labels,
                      const std::string& path) {
    if (groups.size() != labels.size()) {
        throw Error("write_labels_csv: groups and labels sizes differ");
    }
    std::string out = "group,cluster\n";
    for (std::size_t i = 0; i < groups.size(); ++i) {
        out += groups[i];
        out += ',';
        out += std::to_string(labels[i]);
        out += '\n';
    }
    io::write_file(path, out);
}

std::vector<int> read_labels_csv(const std::string& path, std::span<const std::string> groups) {
    const std::string text = io::read_file(path);
    std::map<std::string, int> by_group;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (first && line == "group,cluster") {
            first = false;
            continue;
        }
        first = false;
        const auto fields = io::split(line, ',');
        if (fields.size() != 2) {
            throw Error("read_labels_csv: malformed line '" + line + "' in " + path);
        }
        std::int64_t value = 0;
        if (!io::parse_i64(fields[1], value)) {
            throw Error("read_labels_csv: bad cluster id '" + fields[1] + "' in " + path);
        }
        if (!by_group.emplace(fields[0], static_cast<int>(value)).second) {
            throw Error("read_labels_csv: duplicate group '" + fields[0] + "' in " + path);
        }
    }
    std::vector<int> labels;
    labels.reserve(groups.size());
    for (const auto& g : groups) {
        const auto it = by_group.find(g);
        if (it == by_group.end()) {
            throw Error("read_labels_csv: group '" + g + "' missing from " + path);
        }
        labels.push_back(it->second);
    }
    return labels;
}

void write_grid_report_csv(std::span<const ClusterAssignment> evaluated,
                           const std::string& path) {
    std::string out = "algorithm,k_dim,hyperparameters,n_clusters,n_isolates,silhouette,feasible\n";
    for (const auto& cand : evaluated) {
        std::string params;
        for (const auto& [name, value] : cand.hyperparameters) {
            if (!params.empty()) {
                params += ';';
            }
            params += name;
            params += '=';
            params += io::fmt_g17(value);
        }
        out += cand.algorithm;
        out += ',';
        out += std::to_string(cand.k_dims);
        out += ',';
        out += params;
        out += ',';
        out += std::to_string(cand.n_clusters);
        out += ',';
        out += std::to_string(cand.n_isolates);
        out += ',';
        out += std::isnan(cand.silhouette) ? std::string("nan") : io::fmt_g17(cand.silhouette);
        out += ',';
        out += cand.feasible ? "1" : "0";
        out += '\n';
    }
    io::write_file(path, out);
}

}  // namespace ecokit
