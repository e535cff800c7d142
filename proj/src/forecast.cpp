#include "ecokit/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ecokit/error.hpp"
#include "ecokit/io.hpp"
#include "json.hpp"

namespace ecokit {

namespace {

constexpr double kInvSqrtPi = 0.56418958354775628695;   // 1 / sqrt(pi)
constexpr double kInvSqrt2Pi = 0.39894228040143267794;  // 1 / sqrt(2 pi)
constexpr double kInvSqrt2 = 0.70710678118654752440;    // 1 / sqrt(2)

void check_forecast_inputs(const VarFit& fit, const GroupPanel& panel, std::size_t horizon) {
    if (horizon < 1) throw Error("forecast: horizon must be at least 1");
    if (fit.members.empty() || fit.phi.rows() != fit.members.size())
        throw Error("forecast: fit carries no coefficient matrix");
    if (fit.t_train < 1) throw Error("forecast: fit has an empty training window");
    if (fit.t_train > panel.weeks.size())
        throw Error("forecast: fit was trained past the end of this panel");
    for (std::size_t row : fit.member_rows)
        if (row >= panel.groups.size())
            throw Error("forecast: fit references a panel row that does not exist");
}

}  // namespace

std::vector<Matrix> forecast_covariances(const VarFit& fit, std::size_t horizon) {
    if (horizon < 1) throw Error("forecast: horizon must be at least 1");
    const std::size_t m = fit.phi.rows();
    if (m == 0 || fit.sigma.rows() != m)
        throw Error("forecast: fit carries no residual covariance");
    const Matrix step = transpose(fit.phi);  // one-step mean map on member vectors
    std::vector<Matrix> v;
    v.reserve(horizon);
    v.push_back(fit.sigma);
    for (std::size_t h = 2; h <= horizon; ++h) {
        Matrix next = matmul(step, matmul(v.back(), fit.phi));
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) next(i, j) += fit.sigma(i, j);
        v.push_back(std::move(next));
    }
    return v;
}

Forecast forecast(const VarFit& fit, const GroupPanel& panel, std::size_t horizon) {
    check_forecast_inputs(fit, panel, horizon);
    const std::size_t m = fit.members.size();

    Forecast fc;
    fc.model = fit.baseline ? "baseline" : "var";
    fc.members = fit.members;
    fc.member_rows = fit.member_rows;
    fc.t_train = fit.t_train;
    fc.horizon = horizon;
    fc.mean = Matrix(horizon, m);
    fc.sd = Matrix(horizon, m);
    if (fit.spectral_radius >= 1.0) {
        fc.unstable = true;
        warn("forecast: unstable fit (spectral radius " + io::fmt_g17(fit.spectral_radius) +
             " >= 1), intervals widen without bound");
    }

    // Iterate the fitted mean from the last observed training week. Every
    // member was created before t_train, so the counter-trend ramp is zero
    // over the whole forecast range.
    std::vector<double> prev(m), cur(m);
    for (std::size_t j = 0; j < m; ++j)
        prev[j] = panel.sizes(fit.member_rows[j], fit.t_train - 1);
    for (std::size_t h = 1; h <= horizon; ++h) {
        const double week = static_cast<double>(fit.t_train - 1 + h);
        for (std::size_t j = 0; j < m; ++j) {
            double y = fit.b0[j] + fit.b1[j] * week;
            for (std::size_t i = 0; i < m; ++i) y += fit.phi(i, j) * prev[i];
            cur[j] = y;
            fc.mean(h - 1, j) = y;
        }
        std::swap(prev, cur);
    }

    const std::vector<Matrix> cov = forecast_covariances(fit, horizon);
    for (std::size_t h = 0; h < horizon; ++h)
        for (std::size_t j = 0; j < m; ++j)
            fc.sd(h, j) = std::sqrt(std::max(0.0, cov[h](j, j)));
    return fc;
}

Matrix actual_holdout(const GroupPanel& panel, const Forecast& fc) {
    if (fc.t_train + fc.horizon > panel.weeks.size())
        throw Error("actual_holdout: panel has " + std::to_string(panel.weeks.size()) +
                    " weeks but the forecast reaches week " +
                    std::to_string(fc.t_train + fc.horizon));
    Matrix actual(fc.horizon, fc.members.size());
    for (std::size_t h = 0; h < fc.horizon; ++h)
        for (std::size_t j = 0; j < fc.members.size(); ++j)
            actual(h, j) = panel.sizes(fc.member_rows[j], fc.t_train + h);
    return actual;
}

double rmse(const Matrix& predicted, const Matrix& actual) {
    if (predicted.rows() != actual.rows() || predicted.cols() != actual.cols())
        throw Error("rmse: predicted and actual shapes differ");
    if (predicted.empty()) throw Error("rmse: no cells to score");
    double sse = 0.0;
    for (std::size_t r = 0; r < predicted.rows(); ++r) {
        for (std::size_t c = 0; c < predicted.cols(); ++c) {
            const double e = predicted(r, c) - actual(r, c);
            sse += e * e;
        }
    }
    return std::sqrt(sse / static_cast<double>(predicted.rows() * predicted.cols()));
}

double crps_normal(double y, double mu, double sigma) {
    if (sigma < 0.0) throw Error("crps_normal: negative standard deviation");
    if (sigma == 0.0) return std::abs(y - mu);
    const double z = (y - mu) / sigma;
    const double cdf = 0.5 * std::erfc(-z * kInvSqrt2);
    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * z * z);
    return sigma * (z * (2.0 * cdf - 1.0) + 2.0 * pdf - kInvSqrtPi);
}

double crps(const Matrix& mean, const Matrix& sd, const Matrix& actual) {
    if (mean.rows() != actual.rows() || mean.cols() != actual.cols() ||
        sd.rows() != actual.rows() || sd.cols() != actual.cols())
        throw Error("crps: forecast and actual shapes differ");
    double total = 0.0;
    for (std::size_t r = 0; r < mean.rows(); ++r)
        for (std::size_t c = 0; c < mean.cols(); ++c)
            total += crps_normal(actual(r, c), mean(r, c), sd(r, c));
    return total;
}

ClusterScore score_cluster(const std::string& name, const Forecast& var_fc,
                           const Forecast& baseline_fc, const Matrix& actual) {
    if (var_fc.horizon != baseline_fc.horizon || var_fc.members != baseline_fc.members)
        throw Error("score_cluster: the two forecasts cover different cells");
    if (actual.rows() != var_fc.horizon || actual.cols() != var_fc.members.size())
        throw Error("score_cluster: actual values do not match the forecast shape");
    ClusterScore score;
    score.cluster = name;
    score.cells = var_fc.horizon * var_fc.members.size();
    for (std::size_t h = 0; h < var_fc.horizon; ++h) {
        for (std::size_t j = 0; j < var_fc.members.size(); ++j) {
            const double ev = var_fc.mean(h, j) - actual(h, j);
            const double eb = baseline_fc.mean(h, j) - actual(h, j);
            score.var_sse += ev * ev;
            score.baseline_sse += eb * eb;
            score.var_crps += crps_normal(actual(h, j), var_fc.mean(h, j), var_fc.sd(h, j));
            score.baseline_crps +=
                crps_normal(actual(h, j), baseline_fc.mean(h, j), baseline_fc.sd(h, j));
        }
    }
    return score;
}

ScoreReport compare(std::span<const ClusterScore> clusters) {
    if (clusters.empty()) throw Error("compare: no cluster scores to aggregate");
    ScoreReport report;
    double var_sse = 0.0, baseline_sse = 0.0;
    for (const ClusterScore& score : clusters) {
        report.cells += score.cells;
        var_sse += score.var_sse;
        baseline_sse += score.baseline_sse;
        report.var_crps += score.var_crps;
        report.baseline_crps += score.baseline_crps;
        report.clusters.push_back(score);
    }
    if (report.cells == 0) throw Error("compare: no cells were scored");
    report.var_rmse = std::sqrt(var_sse / static_cast<double>(report.cells));
    report.baseline_rmse = std::sqrt(baseline_sse / static_cast<double>(report.cells));
    auto winner = [](double var_value, double baseline_value) -> std::string {
        if (var_value < baseline_value) return "var";
        if (baseline_value < var_value) return "baseline";
        return "tie";
    };
    report.rmse_winner = winner(report.var_rmse, report.baseline_rmse);
    report.crps_winner = winner(report.var_crps, report.baseline_crps);
    return report;
}

void write_forecast_csv(const Forecast& fc, const std::string& path) {
    std::string out = "group,horizon,week,mean,sd,model\n";
    for (std::size_t h = 1; h <= fc.horizon; ++h) {
        for (std::size_t j = 0; j < fc.members.size(); ++j) {
            out += fc.members[j] + "," + std::to_string(h) + "," +
                   std::to_string(fc.t_train - 1 + h) + "," + io::fmt_g17(fc.mean(h - 1, j)) +
                   "," + io::fmt_g17(fc.sd(h - 1, j)) + "," + fc.model + "\n";
        }
    }
    io::write_file(path, out);
}

void write_scores_csv(const ScoreReport& report, const std::string& path) {
    std::string out = "cluster,cells,var_rmse,baseline_rmse,var_crps,baseline_crps\n";
    for (const ClusterScore& score : report.clusters) {
        const auto cells = static_cast<double>(score.cells);
        out += score.cluster + "," + std::to_string(score.cells) + "," +
               io::fmt_g17(std::sqrt(score.var_sse / cells)) + "," +
               io::fmt_g17(std::sqrt(score.baseline_sse / cells)) + "," +
               io::fmt_g17(score.var_crps) + "," + io::fmt_g17(score.baseline_crps) + "\n";
    }
    io::write_file(path, out);
}

void write_report_json(const ScoreReport& report, const std::string& path) {
    nlohmann::ordered_json doc;
    doc["cells"] = report.cells;
    doc["rmse"] = {{"var", report.var_rmse},
                   {"baseline", report.baseline_rmse},
                   {"winner", report.rmse_winner}};
    doc["crps"] = {{"var", report.var_crps},
                   {"baseline", report.baseline_crps},
                   {"winner", report.crps_winner}};
    doc["clusters"] = nlohmann::ordered_json::array();
    for (const ClusterScore& score : report.clusters) {
        const auto cells = static_cast<double>(score.cells);
        doc["clusters"].push_back({{"cluster", score.cluster},
                                   {"cells", score.cells},
                                   {"var_rmse", std::sqrt(score.var_sse / cells)},
                                   {"baseline_rmse", std::sqrt(score.baseline_sse / cells)},
                                   {"var_crps", score.var_crps},
                                   {"baseline_crps", score.baseline_crps}});
    }
    io::write_file(path, doc.dump(2) + "\n");
}

}  // namespace ecokit
