#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ecokit/ingest.hpp"
#include "ecokit/matrix.hpp"
#include "ecokit/var.hpp"

namespace ecokit {

// Iterated out-of-sample forecast: means follow the fitted one-step rule from
// the last training week, and per-group standard deviations come from the
// innovation-variance recursion (68.2% interval half-width = one sd).
struct Forecast {
    std::string model;  // "var" or "baseline"
    std::vector<std::string> members;
    std::vector<std::size_t> member_rows;  // panel rows behind each member
    std::size_t t_train = 0;
    std::size_t horizon = 0;
    Matrix mean;  // horizon x members, row h-1 is the h-step-ahead forecast
    Matrix sd;    // same shape
    bool unstable = false;  // spectral radius >= 1: intervals widen without bound
};

// V_h = sum_{i=0}^{h-1} S^i Sigma (S^i)^T with S the one-step mean map;
// index h-1 holds V_h. Parameter-estimation uncertainty is not included.
[[nodiscard]] std::vector<Matrix> forecast_covariances(const VarFit& fit, std::size_t horizon);

[[nodiscard]] Forecast forecast(const VarFit& fit, const GroupPanel& panel, std::size_t horizon);

// The realized values aligned with a forecast: row h-1 holds week
// t_train - 1 + h for each member.
[[nodiscard]] Matrix actual_holdout(const GroupPanel& panel, const Forecast& fc);

// Pooled over every cell: sqrt of the mean squared error.
[[nodiscard]] double rmse(const Matrix& predicted, const Matrix& actual);

// Closed-form CRPS of a normal predictive distribution; sigma = 0 degenerates
// to the absolute error.
[[nodiscard]] double crps_normal(double y, double mu, double sigma);

// Total CRPS summed over every cell (sums, not means, so magnitudes scale
// with the number of evaluation cells).
[[nodiscard]] double crps(const Matrix& mean, const Matrix& sd, const Matrix& actual);

// Raw per-cluster aggregates; pooled metrics are derived from sums so that
// aggregation over clusters is exact.
struct ClusterScore {
    std::string cluster;
    std::size_t cells = 0;  // members x horizons
    double var_sse = 0.0;
    double baseline_sse = 0.0;
    double var_crps = 0.0;
    double baseline_crps = 0.0;
};

[[nodiscard]] ClusterScore score_cluster(const std::string& name, const Forecast& var_fc,
                                         const Forecast& baseline_fc, const Matrix& actual);

struct ScoreReport {
    double var_rmse = 0.0;
    double baseline_rmse = 0.0;
    double var_crps = 0.0;
    double baseline_crps = 0.0;
    std::size_t cells = 0;
    std::string rmse_winner;  // "var", "baseline", or "tie"
    std::string crps_winner;
    std::vector<ClusterScore> clusters;
};

[[nodiscard]] ScoreReport compare(std::span<const ClusterScore> clusters);

void write_forecast_csv(const Forecast& fc, const std::string& path);
void write_scores_csv(const ScoreReport& report, const std::string& path);
void write_report_json(const ScoreReport& report, const std::string& path);

}  // namespace ecokit
