#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ecokit/ingest.hpp"
#include "ecokit/matrix.hpp"

namespace ecokit {

// Which panel rows form the cluster and how much of the panel is training
// data. Responses are the weeks [t_begin, t_train) where t_begin is one past
// the earliest member creation (or the latest, when pre-creation rows are
// excluded for sensitivity analysis).
struct VarSpec {
    std::vector<std::size_t> members;  // panel row indices, at least two
    std::size_t t_train = 0;           // exclusive end of the training window
    std::size_t min_weeks = 156;       // required weeks of activity per member
    bool include_pre_creation = true;
};

// Per-equation regression layout: columns [intercept, trend, counter-trend
// ramp of the equation's own member, lagged level of every member].
struct EquationDesign {
    Matrix x;
    std::vector<double> y;
    std::vector<std::size_t> skip;  // identically-zero columns (unused ramps)
};

struct VarFit {
    std::vector<std::string> members;
    std::vector<std::size_t> member_rows;  // panel rows behind each member

    // phi(i, j) is the effect of member i's lagged size on member j, so the
    // one-step update reads y_{j,t} = b0_j + b1_j t + a_j ramp_j(t)
    //                               + sum_i phi(i, j) y_{i,t-1}.
    Matrix phi;
    Matrix phi_se;
    std::vector<double> b0, b0_se;
    std::vector<double> b1, b1_se;
    std::vector<double> a_diag, a_se;  // counter-trend, zero when never active

    Matrix sigma;      // residual covariance, symmetric PSD
    Matrix residuals;  // n_rows x members
    std::vector<double> rss;               // per equation
    std::vector<std::size_t> n_params;     // per equation, estimated columns
    std::vector<Matrix> coef_covariance;   // per equation, full column layout

    std::size_t t_begin = 0;
    std::size_t t_train = 0;
    std::size_t n_rows = 0;
    double spectral_radius = 0.0;
    bool baseline = false;
};

// Members from `candidates` with at least min_weeks of activity before
// t_train (activity = t_train - creation week). The pipeline uses this to
// shrink clusters before fitting instead of failing.
[[nodiscard]] std::vector<std::size_t> eligible_members(const GroupPanel& panel,
                                                        std::span<const std::size_t> candidates,
                                                        std::size_t t_train,
                                                        std::size_t min_weeks);

[[nodiscard]] std::vector<EquationDesign> build_design(const GroupPanel& panel,
                                                       const VarSpec& spec);

// Full VAR(1): every equation regresses on all members' lags.
[[nodiscard]] VarFit fit_var(const GroupPanel& panel, const VarSpec& spec);

// Independent AR(1)+trend baseline: per-equation design keeps only the own
// lag; off-diagonal phi entries are exactly zero.
[[nodiscard]] VarFit fit_baseline(const GroupPanel& panel, const VarSpec& spec);

void write_var_json(const VarFit& fit, const std::string& path);
[[nodiscard]] VarFit read_var_json(const std::string& path);

}  // namespace ecokit
