#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ecokit/ingest.hpp"
#include "ecokit/matrix.hpp"

namespace ecokit {

// One group's growth over the final holdout window, paired with its overlap
// density at the population level.
struct GrowthObservation {
    std::string group;
    double growth = 0.0;   // end log-size minus start log-size
    double density = 0.0;  // normalized overlap density in (0, 1]
};

struct QuadraticFit {
    double b0 = 0.0;
    double b1 = 0.0;
    double b2 = 0.0;
    Matrix covariance{3, 3};  // symmetric PSD coefficient covariance
    std::size_t n = 0;
    double r_squared = 0.0;
    double vertex = 0.0;  // -b1 / (2 b2); NaN when b2 == 0
};

struct MarginalCurve {
    std::vector<double> density;
    std::vector<double> estimate;
    std::vector<double> lower;
    std::vector<double> upper;
};

enum class Shape { cap_shaped, u_shaped, monotone, flat };

[[nodiscard]] std::string shape_name(Shape s);

struct ShapeResult {
    Shape verdict = Shape::flat;
    double vertex = 0.0;
    double vertex_percentile = 0.0;  // percent of observed densities <= vertex
};

// Growth = level at the last week minus level `holdout_weeks` earlier, on the
// log(1+size) scale the panel already carries. smoothing_weeks > 1 replaces
// each endpoint with a trailing mean of that many weeks to damp single-week
// noise. Groups created after the start point are excluded with a warning.
[[nodiscard]] std::vector<GrowthObservation> compute_growth(const GroupPanel& panel,
                                                            std::size_t holdout_weeks,
                                                            std::span<const double> density,
                                                            std::size_t smoothing_weeks = 1);

// OLS of growth on [1, d, d^2] with conventional sigma^2 (X'X)^-1 covariance.
[[nodiscard]] QuadraticFit fit_model1(std::span<const GrowthObservation> observations);

// Fitted curve over the grid with pointwise 95% delta-method intervals.
[[nodiscard]] MarginalCurve marginal_effects(const QuadraticFit& fit,
                                             std::span<const double> grid);

// Classifies the fitted curve: cap/u require both slope terms significant at
// 95% with the right signs and the vertex inside the observed density range;
// one significant term means monotone; neither means flat.
[[nodiscard]] ShapeResult shape_test(const QuadraticFit& fit, std::span<const double> densities);

void write_growth_csv(std::span<const GrowthObservation> observations, const std::string& path);
void write_curve_csv(const MarginalCurve& curve, const std::string& path);
void write_fit_json(const QuadraticFit& fit, const ShapeResult& shape, const std::string& path);

}  // namespace ecokit
