#include "ecokit/irf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ecokit/error.hpp"
#include "ecokit/io.hpp"
#include "ecokit/rng.hpp"

namespace ecokit {

namespace {

// Linear interpolation between order statistics of an already-sorted sample.
double percentile_sorted(const std::vector<double>& sorted_values, double q) {
    const std::size_t m = sorted_values.size();
    if (m == 1) return sorted_values[0];
    const double pos = q * static_cast<double>(m - 1);
    auto lo = static_cast<std::size_t>(pos);
    if (lo >= m - 1) return sorted_values[m - 1];
    const double frac = pos - static_cast<double>(lo);
    return sorted_values[lo] + frac * (sorted_values[lo + 1] - sorted_values[lo]);
}

std::string xml_escape(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string dot_escape(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

std::string evidence_string(const EcoEdge& edge) {
    std::string out;
    for (const EdgeEvidence& ev : edge.evidence) {
        if (!out.empty()) out += "; ";
        out += "t=" + std::to_string(ev.t) + " theta=" + io::fmt_g17(ev.theta) + " band=[" +
               io::fmt_g17(ev.lower) + "," + io::fmt_g17(ev.upper) + "]";
    }
    return out;
}

// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t a = 0;
    while (a < n) {
        std::size_t b = a;
        while (b + 1 < n && values[order[b + 1]] == values[order[a]]) ++b;
        const double shared = (static_cast<double>(a) + static_cast<double>(b)) / 2.0 + 1.0;
        for (std::size_t k = a; k <= b; ++k) ranks[order[k]] = shared;
        a = b + 1;
    }
    return ranks;
}

}  // namespace

std::vector<Matrix> irf(const VarFit& fit, std::size_t horizon) {
    if (horizon < 1) throw Error("irf: horizon must be at least 1");
    const std::size_t m = fit.phi.rows();
    if (m == 0 || fit.phi.cols() != m)
        throw Error("irf: fit carries no square coefficient matrix");
    std::vector<Matrix> theta;
    theta.reserve(horizon + 1);
    theta.push_back(Matrix::identity(m));
    for (std::size_t t = 1; t <= horizon; ++t) theta.push_back(matmul(theta.back(), fit.phi));
    return theta;
}

IrfResult bootstrap_irf(const GroupPanel& panel, const VarSpec& spec, const VarFit& fit,
                        std::size_t horizon, std::size_t replicates, std::uint64_t seed) {
    if (replicates < 100)
        throw Error("bootstrap_irf: need at least 100 replicates, got " +
                    std::to_string(replicates));
    const std::size_t m = fit.members.size();
    if (spec.members.size() != m || spec.t_train != fit.t_train)
        throw Error("bootstrap_irf: spec does not describe the supplied fit");
    for (std::size_t j = 0; j < m; ++j)
        if (spec.members[j] != fit.member_rows[j])
            throw Error("bootstrap_irf: spec does not describe the supplied fit");
    if (fit.t_begin == 0 || fit.t_begin > fit.t_train)
        throw Error("bootstrap_irf: fit has an empty training window");

    IrfResult result;
    result.horizon = horizon;
    result.theta = irf(fit, horizon);
    result.replicates = replicates;

    const std::size_t t_begin = fit.t_begin;
    const std::size_t t_train = fit.t_train;
    const std::size_t n_rows = fit.n_rows;

    std::vector<std::size_t> creation(m);
    for (std::size_t j = 0; j < m; ++j) creation[j] = panel.creation_week[fit.member_rows[j]];

    // draws[(t-1)*m*m + i*m + j] collects theta_t(i, j) across kept replicates.
    std::vector<std::vector<double>> draws(horizon * m * m);
    for (auto& d : draws) d.reserve(replicates);

    GroupPanel replica = panel;
    std::vector<double> prev(m), cur(m);
    for (std::size_t r = 0; r < replicates; ++r) {
        Rng rng(seed, r);
        // Regenerate every member series over the training window from the
        // fitted one-step rule, feeding back the regenerated lags and adding
        // a jointly-resampled residual row per week.
        for (std::size_t j = 0; j < m; ++j)
            prev[j] = panel.sizes(fit.member_rows[j], t_begin - 1);
        for (std::size_t t = t_begin; t < t_train; ++t) {
            const auto pick = static_cast<std::size_t>(rng.next_below(n_rows));
            for (std::size_t j = 0; j < m; ++j) {
                const double week = static_cast<double>(t);
                const double ramp = (t < creation[j]) ? week : 0.0;
                double y = fit.b0[j] + fit.b1[j] * week + fit.a_diag[j] * ramp +
                           fit.residuals(pick, j);
                for (std::size_t i = 0; i < m; ++i) y += fit.phi(i, j) * prev[i];
                cur[j] = y;
                replica.sizes(fit.member_rows[j], t) = y;
            }
            std::swap(prev, cur);
        }
        try {
            const VarFit refit = fit.baseline ? fit_baseline(replica, spec) : fit_var(replica, spec);
            const std::vector<Matrix> powers = irf(refit, horizon);
            for (std::size_t t = 1; t <= horizon; ++t)
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < m; ++j)
                        draws[(t - 1) * m * m + i * m + j].push_back(powers[t](i, j));
        } catch (const Error&) {
            ++result.dropped;
        }
    }
    if (result.dropped * 10 > replicates)
        throw Error("bootstrap_irf: " + std::to_string(result.dropped) + " of " +
                    std::to_string(replicates) +
                    " replicates failed to refit (over 10%); the fit is too fragile to band");
    result.kept = replicates - result.dropped;

    result.lower.assign(horizon + 1, Matrix(m, m));
    result.upper.assign(horizon + 1, Matrix(m, m));
    result.lower[0] = Matrix::identity(m);
    result.upper[0] = Matrix::identity(m);
    for (std::size_t t = 1; t <= horizon; ++t) {
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                std::vector<double>& cell = draws[(t - 1) * m * m + i * m + j];
                std::sort(cell.begin(), cell.end());
                const double lo = percentile_sorted(cell, 0.025);
                const double hi = percentile_sorted(cell, 0.975);
                result.lower[t](i, j) = lo;
                result.upper[t](i, j) = hi;
                const double point = result.theta[t](i, j);
                if (point < lo || point > hi) ++result.band_violations;
            }
        }
    }
    if (result.band_violations > 0)
        warn("bootstrap_irf: point estimate falls outside its band in " +
             std::to_string(result.band_violations) + " of " + std::to_string(horizon * m * m) +
             " cells");
    return result;
}

EcoNetwork extract_network(const VarFit& fit, const IrfResult& irf_result) {
    if (irf_result.horizon < 10)
        throw Error("extract_network: bands must reach horizon 10, got " +
                    std::to_string(irf_result.horizon));
    const std::size_t m = fit.members.size();
    if (irf_result.theta.empty() || irf_result.theta[0].rows() != m ||
        irf_result.lower.size() != irf_result.horizon + 1 ||
        irf_result.upper.size() != irf_result.horizon + 1)
        throw Error("extract_network: band dimensions do not match the fit");

    EcoNetwork net;
    net.nodes = fit.members;
    net.metrics = cluster_metrics(fit);
    net.spectral_radius = fit.spectral_radius;
    if (fit.spectral_radius >= 1.0)
        warn("extract_network: unstable fit (spectral radius " +
             io::fmt_g17(fit.spectral_radius) + " >= 1), responses do not decay");

    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j) continue;  // the diagonal is autoregression, not interaction
            EcoEdge edge;
            bool present = false;
            for (std::size_t t = 1; t <= 10; ++t) {
                const double lo = irf_result.lower[t](i, j);
                const double hi = irf_result.upper[t](i, j);
                if (lo <= 0.0 && 0.0 <= hi) continue;  // band straddles zero
                const double point = irf_result.theta[t](i, j);
                const EdgeSign sign_here =
                    point > 0.0 ? EdgeSign::mutualism : EdgeSign::competition;
                if (!present) {
                    present = true;
                    edge.source = i;
                    edge.target = j;
                    edge.sign = sign_here;
                } else if (sign_here != edge.sign) {
                    edge.sign_mixed = true;
                }
                edge.evidence.push_back({t, point, lo, hi});
            }
            if (present) net.edges.push_back(std::move(edge));
        }
    }
    return net;
}

ClusterMetrics cluster_metrics(const VarFit& fit, PairNormalizer norm) {
    const std::size_t m = fit.phi.rows();
    if (m < 2) throw Error("cluster_metrics: need at least two members");
    double sum = 0.0;
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j) continue;
            sum += fit.phi(i, j);
            abs_sum += std::abs(fit.phi(i, j));
        }
    }
    const double denom = norm == PairNormalizer::rows
                             ? static_cast<double>(m - 1)
                             : static_cast<double>(m) * static_cast<double>(m - 1);
    return {sum / denom, abs_sum / denom};
}

TypologyReport typology_report(std::span<const ClusterMetrics> metrics, std::size_t bins) {
    const std::size_t n = metrics.size();
    if (n < 2) throw Error("typology_report: need at least two clusters");
    if (bins == 0) throw Error("typology_report: bins must be positive");

    TypologyReport report;
    report.n_clusters = n;
    report.bins = bins;

    std::vector<double> m_bar(n), kappa(n);
    std::size_t positive = 0;
    for (std::size_t c = 0; c < n; ++c) {
        m_bar[c] = metrics[c].m_bar;
        kappa[c] = metrics[c].kappa;
        if (m_bar[c] > 0.0) ++positive;
    }
    report.fraction_mutualistic = static_cast<double>(positive) / static_cast<double>(n);

    const double mean =
        std::accumulate(m_bar.begin(), m_bar.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : m_bar) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    report.t_statistic = sd > 0.0
                             ? mean / (sd / std::sqrt(static_cast<double>(n)))
                             : std::numeric_limits<double>::quiet_NaN();

    const std::vector<double> rank_m = average_ranks(m_bar);
    const std::vector<double> rank_k = average_ranks(kappa);
    double mean_rm = 0.0, mean_rk = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        mean_rm += rank_m[c];
        mean_rk += rank_k[c];
    }
    mean_rm /= static_cast<double>(n);
    mean_rk /= static_cast<double>(n);
    double cov = 0.0, var_m = 0.0, var_k = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        const double dm = rank_m[c] - mean_rm;
        const double dk = rank_k[c] - mean_rk;
        cov += dm * dk;
        var_m += dm * dm;
        var_k += dk * dk;
    }
    if (var_m > 0.0 && var_k > 0.0) {
        report.spearman_rho = cov / std::sqrt(var_m * var_k);
        report.spearman_applicable = true;
    } else {
        report.spearman_rho = std::numeric_limits<double>::quiet_NaN();
        report.spearman_applicable = false;  // constant ranks leave rho undefined
    }

    auto span_of = [](const std::vector<double>& v) {
        auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
        double lo = *lo_it, hi = *hi_it;
        if (lo == hi) {  // widen a degenerate range so the single value bins cleanly
            lo -= 0.5;
            hi += 0.5;
        }
        return std::pair<double, double>{lo, hi};
    };
    const auto [m_lo, m_hi] = span_of(m_bar);
    const auto [k_lo, k_hi] = span_of(kappa);
    report.m_bar_edges.resize(bins + 1);
    report.kappa_edges.resize(bins + 1);
    for (std::size_t e = 0; e <= bins; ++e) {
        const double frac = static_cast<double>(e) / static_cast<double>(bins);
        report.m_bar_edges[e] = m_lo + (m_hi - m_lo) * frac;
        report.kappa_edges[e] = k_lo + (k_hi - k_lo) * frac;
    }
    report.histogram = Matrix(bins, bins);
    auto bin_of = [bins](double v, double lo, double hi) {
        const double pos = (v - lo) / (hi - lo) * static_cast<double>(bins);
        const auto b = pos <= 0.0 ? std::size_t{0} : static_cast<std::size_t>(pos);
        return std::min(b, bins - 1);
    };
    for (std::size_t c = 0; c < n; ++c)
        report.histogram(bin_of(m_bar[c], m_lo, m_hi), bin_of(kappa[c], k_lo, k_hi)) += 1.0;
    return report;
}

std::string edge_sign_name(EdgeSign sign) {
    return sign == EdgeSign::mutualism ? "mutualism" : "competition";
}

void write_graphml(const EcoNetwork& net, const std::string& path) {
    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n";
    out += "  <key id=\"label\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n";
    out += "  <key id=\"sign\" for=\"edge\" attr.name=\"sign\" attr.type=\"string\"/>\n";
    out +=
        "  <key id=\"sign_mixed\" for=\"edge\" attr.name=\"sign_mixed\" attr.type=\"boolean\"/>\n";
    out += "  <key id=\"evidence\" for=\"edge\" attr.name=\"evidence\" attr.type=\"string\"/>\n";
    out += "  <graph id=\"interactions\" edgedefault=\"directed\">\n";
    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
        out += "    <node id=\"n" + std::to_string(i) + "\"><data key=\"label\">" +
               xml_escape(net.nodes[i]) + "</data></node>\n";
    }
    for (const EcoEdge& edge : net.edges) {
        out += "    <edge source=\"n" + std::to_string(edge.source) + "\" target=\"n" +
               std::to_string(edge.target) + "\">";
        out += "<data key=\"sign\">" + edge_sign_name(edge.sign) + "</data>";
        out += std::string("<data key=\"sign_mixed\">") + (edge.sign_mixed ? "true" : "false") +
               "</data>";
        out += "<data key=\"evidence\">" + xml_escape(evidence_string(edge)) + "</data>";
        out += "</edge>\n";
    }
    out += "  </graph>\n";
    out += "</graphml>\n";
    io::write_file(path, out);
}

void write_dot(const EcoNetwork& net, const std::string& path) {
    std::string out = "digraph interactions {\n";
    for (const std::string& node : net.nodes) out += "  \"" + dot_escape(node) + "\";\n";
    for (const EcoEdge& edge : net.edges) {
        const bool positive = edge.sign == EdgeSign::mutualism;
        out += "  \"" + dot_escape(net.nodes[edge.source]) + "\" -> \"" +
               dot_escape(net.nodes[edge.target]) + "\" [sign=\"" + edge_sign_name(edge.sign) +
               "\", color=\"" + (positive ? "forestgreen" : "firebrick") + "\", sign_mixed=\"" +
               (edge.sign_mixed ? "true" : "false") + "\", evidence=\"" +
               dot_escape(evidence_string(edge)) + "\"];\n";
    }
    out += "}\n";
    io::write_file(path, out);
}

void write_metrics_csv(std::span<const std::string> cluster_names,
                       std::span<const ClusterMetrics> metrics, const std::string& path) {
    if (cluster_names.size() != metrics.size())
        throw Error("write_metrics_csv: names and metrics differ in length");
    std::string out = "cluster,m_bar,kappa\n";
    for (std::size_t c = 0; c < metrics.size(); ++c) {
        out += cluster_names[c] + "," + io::fmt_g17(metrics[c].m_bar) + "," +
               io::fmt_g17(metrics[c].kappa) + "\n";
    }
    io::write_file(path, out);
}

NamedMetrics read_metrics_csv(const std::string& path) {
    const std::string text = io::read_file(path);
    NamedMetrics out;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        const std::string_view line(text.data() + pos, end - pos);
        pos = end + 1;
        if (line.empty()) continue;
        if (++line_no == 1) {
            if (line != "cluster,m_bar,kappa")
                throw Error("read_metrics_csv: unexpected header in " + path);
            continue;
        }
        const auto fields = io::split(line, ',');
        ClusterMetrics m;
        if (fields.size() != 3 || !io::parse_double(fields[1], m.m_bar) ||
            !io::parse_double(fields[2], m.kappa))
            throw Error("read_metrics_csv: malformed line '" + std::string(line) + "' in " + path);
        out.clusters.push_back(fields[0]);
        out.metrics.push_back(m);
    }
    if (line_no == 0) throw Error("read_metrics_csv: " + path + " is empty");
    return out;
}

void write_histogram_csv(const TypologyReport& report, const std::string& path) {
    std::string out = "m_bar_lo,m_bar_hi,kappa_lo,kappa_hi,count\n";
    for (std::size_t bm = 0; bm < report.bins; ++bm) {
        for (std::size_t bk = 0; bk < report.bins; ++bk) {
            out += io::fmt_g17(report.m_bar_edges[bm]) + "," +
                   io::fmt_g17(report.m_bar_edges[bm + 1]) + "," +
                   io::fmt_g17(report.kappa_edges[bk]) + "," +
                   io::fmt_g17(report.kappa_edges[bk + 1]) + "," +
                   std::to_string(static_cast<long long>(report.histogram(bm, bk))) + "\n";
        }
    }
    io::write_file(path, out);
}

}  // namespace ecokit
