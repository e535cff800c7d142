#include "ecokit/var.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include <json.hpp>

#include "ecokit/error.hpp"
#include "ecokit/io.hpp"
#include "ecokit/simd/kernels.hpp"

namespace ecokit {

namespace {

void validate_spec(const GroupPanel& panel, const VarSpec& spec) {
    if (spec.members.size() < 2) {
        throw Error("var: cluster needs at least 2 members, got " +
                    std::to_string(spec.members.size()));
    }
    if (spec.t_train < 2 || spec.t_train > panel.weeks.size()) {
        throw Error("var: t_train = " + std::to_string(spec.t_train) +
                    " outside [2, " + std::to_string(panel.weeks.size()) + "]");
    }
    if (spec.min_weeks < 1) {
        throw Error("var: min_weeks must be at least 1");
    }
    std::set<std::size_t> seen;
    for (std::size_t m : spec.members) {
        if (m >= panel.groups.size()) {
            throw Error("var: member index " + std::to_string(m) + " out of range");
        }
        if (!seen.insert(m).second) {
            throw Error("var: duplicate member index " + std::to_string(m));
        }
        const std::size_t created = panel.creation_week[m];
        if (created >= spec.t_train ||
            spec.t_train - created < spec.min_weeks) {
            throw Error("var: member '" + panel.groups[m] + "' has " +
                        std::to_string(created >= spec.t_train ? 0 : spec.t_train - created) +
                        " weeks of activity before t_train, need at least " +
                        std::to_string(spec.min_weeks));
        }
        bool any = false;
        for (std::size_t w = 0; w < spec.t_train && !any; ++w) {
            any = panel.sizes(m, w) != 0.0;
        }
        if (!any) {
            throw Error("var: member '" + panel.groups[m] +
                        "' has an all-zero series in the training window");
        }
    }
}

std::size_t window_begin(const GroupPanel& panel, const VarSpec& spec) {
    std::size_t anchor = spec.include_pre_creation ? SIZE_MAX : 0;
    for (std::size_t m : spec.members) {
        const std::size_t created = panel.creation_week[m];
        anchor = spec.include_pre_creation ? std::min(anchor, created)
                                           : std::max(anchor, created);
    }
    const std::size_t t_begin = std::max<std::size_t>(anchor + 1, 1);
    if (t_begin >= spec.t_train) {
        throw Error("var: empty training window ([" + std::to_string(t_begin) + ", " +
                    std::to_string(spec.t_train) + "))");
    }
    return t_begin;
}

// Human name of a design column for error messages.
std::string column_name(const VarFit& fit, std::size_t col) {
    if (col == 0) {
        return "intercept";
    }
    if (col == 1) {
        return "trend";
    }
    if (col == 2) {
        return "counter-trend";
    }
    return "lag(" + fit.members[col - 3] + ")";
}

// The shared fitting loop; `own_lag_only` selects the baseline variant by
// skipping every cross lag.
VarFit fit_impl(const GroupPanel& panel, const VarSpec& spec, bool own_lag_only) {
    validate_spec(panel, spec);
    const std::size_t m_count = spec.members.size();
    const std::size_t t_begin = window_begin(panel, spec);
    const std::size_t n_rows = spec.t_train - t_begin;
    const std::size_t p_full = 3 + m_count;

    VarFit fit;
    fit.baseline = own_lag_only;
    fit.t_begin = t_begin;
    fit.t_train = spec.t_train;
    fit.n_rows = n_rows;
    for (std::size_t m : spec.members) {
        fit.members.push_back(panel.groups[m]);
        fit.member_rows.push_back(m);
    }
    fit.phi = Matrix(m_count, m_count);
    fit.phi_se = Matrix(m_count, m_count);
    fit.b0.assign(m_count, 0.0);
    fit.b0_se.assign(m_count, 0.0);
    fit.b1.assign(m_count, 0.0);
    fit.b1_se.assign(m_count, 0.0);
    fit.a_diag.assign(m_count, 0.0);
    fit.a_se.assign(m_count, 0.0);
    fit.sigma = Matrix(m_count, m_count);
    fit.residuals = Matrix(n_rows, m_count);
    fit.rss.assign(m_count, 0.0);
    fit.n_params.assign(m_count, 0);
    fit.coef_covariance.assign(m_count, Matrix(p_full, p_full));

    const auto designs = build_design(panel, spec);
    for (std::size_t j = 0; j < m_count; ++j) {
        std::vector<std::size_t> skip = designs[j].skip;
        if (own_lag_only) {
            for (std::size_t k = 0; k < m_count; ++k) {
                if (k != j) {
                    skip.push_back(3 + k);
                }
            }
            std::sort(skip.begin(), skip.end());
        }
        LeastSquaresResult ls;
        try {
            ls = least_squares(designs[j].x, designs[j].y, skip);
        } catch (const Error& e) {
            std::string what = e.what();
            const auto pos = what.rfind(' ');
            std::string which = "unknown";
            if (pos != std::string::npos) {
                std::uint64_t idx = 0;
                if (io::parse_u64(what.substr(pos + 1), idx) && idx < p_full) {
                    which = column_name(fit, idx);
                }
            }
            throw Error("var: equation for member '" + fit.members[j] +
                        "' has a rank-deficient design (offending column: " + which +
                        "); identical or constant member series are the usual cause");
        }
        fit.b0[j] = ls.coefficients[0];
        fit.b1[j] = ls.coefficients[1];
        fit.a_diag[j] = ls.coefficients[2];
        for (std::size_t i = 0; i < m_count; ++i) {
            fit.phi(i, j) = ls.coefficients[3 + i];
        }
        for (std::size_t r = 0; r < n_rows; ++r) {
            fit.residuals(r, j) = ls.residuals[r];
        }
        fit.rss[j] = ls.rss;
        fit.n_params[j] = ls.n_params;
        if (n_rows <= ls.n_params) {
            throw Error("var: equation for member '" + fit.members[j] + "' has " +
                        std::to_string(n_rows) + " rows for " + std::to_string(ls.n_params) +
                        " parameters; no residual degrees of freedom");
        }
        const double sigma2 = ls.rss / static_cast<double>(n_rows - ls.n_params);
        for (std::size_t r = 0; r < p_full; ++r) {
            for (std::size_t c = 0; c < p_full; ++c) {
                fit.coef_covariance[j](r, c) = sigma2 * ls.xtx_inverse(r, c);
            }
        }
        fit.b0_se[j] = std::sqrt(std::max(0.0, fit.coef_covariance[j](0, 0)));
        fit.b1_se[j] = std::sqrt(std::max(0.0, fit.coef_covariance[j](1, 1)));
        fit.a_se[j] = std::sqrt(std::max(0.0, fit.coef_covariance[j](2, 2)));
        for (std::size_t i = 0; i < m_count; ++i) {
            fit.phi_se(i, j) = std::sqrt(std::max(0.0, fit.coef_covariance[j](3 + i, 3 + i)));
        }
    }

    // Residual covariance with a common denominator (rows minus the largest
    // per-equation parameter count) so the matrix stays PSD.
    std::size_t p_max = 0;
    for (std::size_t j = 0; j < m_count; ++j) {
        p_max = std::max(p_max, fit.n_params[j]);
    }
    const double denom = static_cast<double>(n_rows - p_max);
    for (std::size_t a = 0; a < m_count; ++a) {
        for (std::size_t b = a; b < m_count; ++b) {
            double acc = 0.0;
            for (std::size_t r = 0; r < n_rows; ++r) {
                acc += fit.residuals(r, a) * fit.residuals(r, b);
            }
            fit.sigma(a, b) = acc / denom;
            fit.sigma(b, a) = fit.sigma(a, b);
        }
    }
    fit.spectral_radius = spectral_radius_estimate(fit.phi);
    return fit;
}

}  // namespace

std::vector<std::size_t> eligible_members(const GroupPanel& panel,
                                          std::span<const std::size_t> candidates,
                                          std::size_t t_train, std::size_t min_weeks) {
    std::vector<std::size_t> out;
    for (std::size_t m : candidates) {
        if (m >= panel.groups.size()) {
            throw Error("eligible_members: index " + std::to_string(m) + " out of range");
        }
        const std::size_t created = panel.creation_week[m];
        if (created < t_train && t_train - created >= min_weeks) {
            out.push_back(m);
        }
    }
    return out;
}

std::vector<EquationDesign> build_design(const GroupPanel& panel, const VarSpec& spec) {
    validate_spec(panel, spec);
    const std::size_t m_count = spec.members.size();
    const std::size_t t_begin = window_begin(panel, spec);
    const std::size_t n_rows = spec.t_train - t_begin;
    const std::size_t p_full = 3 + m_count;

    std::vector<EquationDesign> designs;
    designs.reserve(m_count);
    for (std::size_t j = 0; j < m_count; ++j) {
        const std::size_t creation = panel.creation_week[spec.members[j]];
        EquationDesign d;
        d.x = Matrix(n_rows, p_full);
        d.y.resize(n_rows);
        bool ramp_active = false;
        for (std::size_t r = 0; r < n_rows; ++r) {
            const std::size_t t = t_begin + r;
            d.x(r, 0) = 1.0;
            d.x(r, 1) = static_cast<double>(t);
            // Counter-trend ramp: runs 1,2,3,... until the week before the
            // member exists, then 0 forever.
            if (t < creation) {
                d.x(r, 2) = static_cast<double>(t);
                ramp_active = true;
            }
            for (std::size_t k = 0; k < m_count; ++k) {
                d.x(r, 3 + k) = panel.sizes(spec.members[k], t - 1);
            }
            d.y[r] = panel.sizes(spec.members[j], t);
        }
        if (!ramp_active) {
            d.skip.push_back(2);
        }
        designs.push_back(std::move(d));
    }
    return designs;
}

VarFit fit_var(const GroupPanel& panel, const VarSpec& spec) {
    return fit_impl(panel, spec, false);
}

VarFit fit_baseline(const GroupPanel& panel, const VarSpec& spec) {
    return fit_impl(panel, spec, true);
}

namespace {

nlohmann::ordered_json matrix_json(const Matrix& m) {
    nlohmann::ordered_json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    std::vector<double> data(m.data(), m.data() + m.rows() * m.cols());
    j["data"] = data;
    return j;
}

Matrix matrix_from_json(const nlohmann::json& j) {
    const auto rows = j.at("rows").get<std::size_t>();
    const auto cols = j.at("cols").get<std::size_t>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != rows * cols) {
        throw Error("read_var_json: matrix data size mismatch");
    }
    Matrix m(rows, cols);
    std::copy(data.begin(), data.end(), m.data());
    return m;
}

}  // namespace

void write_var_json(const VarFit& fit, const std::string& path) {
    nlohmann::ordered_json j;
    j["members"] = fit.members;
    j["member_rows"] = fit.member_rows;
    j["phi"] = matrix_json(fit.phi);
    j["phi_se"] = matrix_json(fit.phi_se);
    j["b0"] = fit.b0;
    j["b0_se"] = fit.b0_se;
    j["b1"] = fit.b1;
    j["b1_se"] = fit.b1_se;
    j["a_diag"] = fit.a_diag;
    j["a_se"] = fit.a_se;
    j["sigma"] = matrix_json(fit.sigma);
    j["residuals"] = matrix_json(fit.residuals);
    j["rss"] = fit.rss;
    j["n_params"] = fit.n_params;
    nlohmann::ordered_json covs = nlohmann::ordered_json::array();
    for (const auto& cov : fit.coef_covariance) {
        covs.push_back(matrix_json(cov));
    }
    j["coef_covariance"] = covs;
    j["t_begin"] = fit.t_begin;
    j["t_train"] = fit.t_train;
    j["n_rows"] = fit.n_rows;
    j["spectral_radius"] = fit.spectral_radius;
    j["baseline"] = fit.baseline;
    io::write_file(path, j.dump(2) + "\n");
}

VarFit read_var_json(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error("read_var_json: cannot parse " + path + ": " + e.what());
    }
    try {
        VarFit fit;
        fit.members = j.at("members").get<std::vector<std::string>>();
        fit.member_rows = j.at("member_rows").get<std::vector<std::size_t>>();
        fit.phi = matrix_from_json(j.at("phi"));
        fit.phi_se = matrix_from_json(j.at("phi_se"));
        fit.b0 = j.at("b0").get<std::vector<double>>();
        fit.b0_se = j.at("b0_se").get<std::vector<double>>();
        fit.b1 = j.at("b1").get<std::vector<double>>();
        fit.b1_se = j.at("b1_se").get<std::vector<double>>();
        fit.a_diag = j.at("a_diag").get<std::vector<double>>();
        fit.a_se = j.at("a_se").get<std::vector<double>>();
        fit.sigma = matrix_from_json(j.at("sigma"));
        fit.residuals = matrix_from_json(j.at("residuals"));
        fit.rss = j.at("rss").get<std::vector<double>>();
        fit.n_params = j.at("n_params").get<std::vector<std::size_t>>();
        for (const auto& cov : j.at("coef_covariance")) {
            fit.coef_covariance.push_back(matrix_from_json(cov));
        }
        fit.t_begin = j.at("t_begin").get<std::size_t>();
        fit.t_train = j.at("t_train").get<std::size_t>();
        fit.n_rows = j.at("n_rows").get<std::size_t>();
        fit.spectral_radius = j.at("spectral_radius").get<double>();
        fit.baseline = j.at("baseline").get<bool>();
        return fit;
    } catch (const nlohmann::json::exception& e) {
        throw Error("read_var_json: malformed fit in " + path + ": " + e.what());
    }
}

}  // namespace ecokit
