#include "ecokit/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "ecokit/error.hpp"
#include "ecokit/io.hpp"

namespace ecokit {

namespace {

constexpr double kZ95 = 1.959963984540054;  // two-sided 95% normal quantile

double window_level(const GroupPanel& panel, std::size_t group, std::size_t last_week,
                    std::size_t smoothing_weeks) {
    double sum = 0.0;
    for (std::size_t w = last_week + 1 - smoothing_weeks; w <= last_week; ++w) {
        sum += panel.sizes(group, w);
    }
    return sum / static_cast<double>(smoothing_weeks);
}

}  // namespace

std::vector<GrowthObservation> compute_growth(const GroupPanel& panel,
                                              std::size_t holdout_weeks,
                                              std::span<const double> density,
                                              std::size_t smoothing_weeks) {
    if (holdout_weeks < 1) {
        throw Error("compute_growth: holdout_weeks must be at least 1");
    }
    if (smoothing_weeks < 1) {
        throw Error("compute_growth: smoothing_weeks must be at least 1");
    }
    if (panel.weeks.size() < holdout_weeks + smoothing_weeks) {
        throw Error("compute_growth: panel has " + std::to_string(panel.weeks.size()) +
                    " weeks, need at least " + std::to_string(holdout_weeks + smoothing_weeks));
    }
    if (density.size() != panel.groups.size()) {
        throw Error("compute_growth: density size " + std::to_string(density.size()) +
                    " does not match panel groups " + std::to_string(panel.groups.size()));
    }
    const std::size_t t_end = panel.weeks.size() - 1;
    const std::size_t t_start = t_end - holdout_weeks;
    std::vector<GrowthObservation> out;
    out.reserve(panel.groups.size());
    for (std::size_t i = 0; i < panel.groups.size(); ++i) {
        // The start-point block must postdate the group's creation; otherwise
        // the "growth" would straddle the group coming into existence.
        if (panel.creation_week[i] + smoothing_weeks > t_start + 1) {
            warn("compute_growth: group '" + panel.groups[i] +
                 "' created inside the growth window (week " +
                 std::to_string(panel.creation_week[i]) + "), excluded");
            continue;
        }
        GrowthObservation obs;
        obs.group = panel.groups[i];
        obs.growth = window_level(panel, i, t_end, smoothing_weeks) -
                     window_level(panel, i, t_start, smoothing_weeks);
        obs.density = density[i];
        out.push_back(std::move(obs));
    }
    return out;
}

QuadraticFit fit_model1(std::span<const GrowthObservation> observations) {
    const std::size_t n = observations.size();
    if (n < 3) {
        throw Error("fit_model1: need at least 3 observations, got " + std::to_string(n));
    }
    Matrix x(n, 3);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = observations[i].density;
        if (!std::isfinite(observations[i].growth) || !std::isfinite(d)) {
            throw Error("fit_model1: non-finite observation for group '" +
                        observations[i].group + "'");
        }
        x(i, 0) = 1.0;
        x(i, 1) = d;
        x(i, 2) = d * d;
        y[i] = observations[i].growth;
    }
    LeastSquaresResult ls;
    try {
        ls = least_squares(x, y);
    } catch (const Error& e) {
        throw Error(std::string("fit_model1: singular design over columns [1, d, d^2] "
                                "(is density constant?): ") +
                    e.what());
    }

    QuadraticFit fit;
    fit.b0 = ls.coefficients[0];
    fit.b1 = ls.coefficients[1];
    fit.b2 = ls.coefficients[2];
    fit.n = n;
    const double sigma2 = ls.rss / static_cast<double>(n - 3);
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
            fit.covariance(r, c) = sigma2 * ls.xtx_inverse(r, c);
        }
    }
    double mean = 0.0;
    for (double v : y) {
        mean += v;
    }
    mean /= static_cast<double>(n);
    double tss = 0.0;
    for (double v : y) {
        tss += (v - mean) * (v - mean);
    }
    fit.r_squared = tss > 0.0 ? 1.0 - ls.rss / tss : 0.0;
    fit.vertex = fit.b2 != 0.0 ? -fit.b1 / (2.0 * fit.b2)
                               : std::numeric_limits<double>::quiet_NaN();
    return fit;
}

MarginalCurve marginal_effects(const QuadraticFit& fit, std::span<const double> grid) {
    MarginalCurve curve;
    curve.density.assign(grid.begin(), grid.end());
    curve.estimate.reserve(grid.size());
    curve.lower.reserve(grid.size());
    curve.upper.reserve(grid.size());
    for (double d : grid) {
        const double g[3] = {1.0, d, d * d};
        const double est = fit.b0 + fit.b1 * d + fit.b2 * d * d;
        double var = 0.0;
        for (std::size_t r = 0; r < 3; ++r) {
            for (std::size_t c = 0; c < 3; ++c) {
                var += g[r] * fit.covariance(r, c) * g[c];
            }
        }
        const double half = kZ95 * std::sqrt(std::max(0.0, var));
        curve.estimate.push_back(est);
        curve.lower.push_back(est - half);
        curve.upper.push_back(est + half);
    }
    return curve;
}

std::string shape_name(Shape s) {
    switch (s) {
        case Shape::cap_shaped:
            return "cap-shaped";
        case Shape::u_shaped:
            return "u-shaped";
        case Shape::monotone:
            return "monotone";
        case Shape::flat:
            return "flat";
    }
    return "flat";
}

ShapeResult shape_test(const QuadraticFit& fit, std::span<const double> densities) {
    if (densities.empty()) {
        throw Error("shape_test: empty density sample");
    }
    ShapeResult out;
    out.vertex = fit.vertex;

    const double se1 = std::sqrt(std::max(0.0, fit.covariance(1, 1)));
    const double se2 = std::sqrt(std::max(0.0, fit.covariance(2, 2)));
    const bool sig1 = std::abs(fit.b1) > kZ95 * se1;
    const bool sig2 = std::abs(fit.b2) > kZ95 * se2;

    const auto [lo_it, hi_it] = std::minmax_element(densities.begin(), densities.end());
    const bool vertex_in_range =
        std::isfinite(fit.vertex) && fit.vertex >= *lo_it && fit.vertex <= *hi_it;

    if (sig1 && sig2 && fit.b1 > 0.0 && fit.b2 < 0.0 && vertex_in_range) {
        out.verdict = Shape::cap_shaped;
    } else if (sig1 && sig2 && fit.b1 < 0.0 && fit.b2 > 0.0 && vertex_in_range) {
        out.verdict = Shape::u_shaped;
    } else if (sig1 || sig2) {
        out.verdict = Shape::monotone;
    } else {
        out.verdict = Shape::flat;
    }

    if (std::isfinite(fit.vertex)) {
        std::size_t at_or_below = 0;
        for (double d : densities) {
            if (d <= fit.vertex) {
                ++at_or_below;
            }
        }
        out.vertex_percentile =
            100.0 * static_cast<double>(at_or_below) / static_cast<double>(densities.size());
    } else {
        out.vertex_percentile = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

void write_growth_csv(std::span<const GrowthObservation> observations, const std::string& path) {
    std::string out = "group,density,growth\n";
    for (const auto& obs : observations) {
        out += obs.group;
        out += ',';
        out += io::fmt_g17(obs.density);
        out += ',';
        out += io::fmt_g17(obs.growth);
        out += '\n';
    }
    io::write_file(path, out);
}

void write_curve_csv(const MarginalCurve& curve, const std::string& path) {
    std::string out = "density,estimate,lower,upper\n";
    for (std::size_t i = 0; i < curve.density.size(); ++i) {
        out += io::fmt_g17(curve.density[i]);
        out += ',';
        out += io::fmt_g17(curve.estimate[i]);
        out += ',';
        out += io::fmt_g17(curve.lower[i]);
        out += ',';
        out += io::fmt_g17(curve.upper[i]);
        out += '\n';
    }
    io::write_file(path, out);
}

void write_fit_json(const QuadraticFit& fit, const ShapeResult& shape, const std::string& path) {
    nlohmann::ordered_json j;
    j["model"] = "growth ~ 1 + density + density^2";
    j["coefficients"] = {{"b0", fit.b0}, {"b1", fit.b1}, {"b2", fit.b2}};
    std::vector<std::vector<double>> cov(3, std::vector<double>(3));
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
            cov[r][c] = fit.covariance(r, c);
        }
    }
    j["covariance"] = cov;
    j["n"] = fit.n;
    j["r_squared"] = fit.r_squared;
    j["vertex"] = std::isfinite(fit.vertex) ? nlohmann::ordered_json(fit.vertex)
                                            : nlohmann::ordered_json(nullptr);
    j["verdict"] = shape_name(shape.verdict);
    j["vertex_percentile"] = std::isfinite(shape.vertex_percentile)
                                 ? nlohmann::ordered_json(shape.vertex_percentile)
                                 : nlohmann::ordered_json(nullptr);
    io::write_file(path, j.dump(2) + "\n");
}

}  // namespace ecokit
