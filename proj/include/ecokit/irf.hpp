#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ecokit/ingest.hpp"
#include "ecokit/matrix.hpp"
#include "ecokit/var.hpp"

namespace ecokit {

// Point impulse responses theta[t] = phi^t for t = 0..horizon, plus 95%
// percentile bootstrap bands. theta[0] is the identity: a one log-unit
// impulse in each member at time zero.
struct IrfResult {
    std::size_t horizon = 0;
    std::vector<Matrix> theta;  // horizon+1 matrices, theta[t](i,j) = effect i -> j
    std::vector<Matrix> lower;  // same shape; [0] degenerate at the identity
    std::vector<Matrix> upper;
    std::size_t replicates = 0;       // requested
    std::size_t kept = 0;             // successfully refit
    std::size_t dropped = 0;          // singular refits, skipped
    std::size_t band_violations = 0;  // cells with point outside its own band
};

enum class EdgeSign { mutualism, competition };

struct EdgeEvidence {
    std::size_t t = 0;
    double theta = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

struct EcoEdge {
    std::size_t source = 0;  // indices into EcoNetwork::nodes
    std::size_t target = 0;
    EdgeSign sign = EdgeSign::mutualism;
    bool sign_mixed = false;  // later significant horizons flip sign
    std::vector<EdgeEvidence> evidence;
};

struct ClusterMetrics {
    double m_bar = 0.0;  // mean off-diagonal phi
    double kappa = 0.0;  // mean absolute off-diagonal phi
};

struct EcoNetwork {
    std::vector<std::string> nodes;
    std::vector<EcoEdge> edges;
    ClusterMetrics metrics;
    double spectral_radius = 0.0;
};

// Literal matrix powers of the fitted phi.
[[nodiscard]] std::vector<Matrix> irf(const VarFit& fit, std::size_t horizon);

// Residual-resampling recursive bootstrap: residual rows are resampled
// jointly (preserving contemporaneous correlation), series regenerated from
// the fitted parameters and the actual pre-sample value, refit, and the IRF
// recomputed; bands are the 2.5%/97.5% percentiles across replicates.
[[nodiscard]] IrfResult bootstrap_irf(const GroupPanel& panel, const VarSpec& spec,
                                      const VarFit& fit, std::size_t horizon,
                                      std::size_t replicates, std::uint64_t seed);

// Signed interaction network: an edge i->j exists when the band of
// theta_t(i, j) excludes zero for some t in [1, 10]; its sign is the sign of
// theta at the first such horizon. Self-pairs are never edges.
[[nodiscard]] EcoNetwork extract_network(const VarFit& fit, const IrfResult& irf);

enum class PairNormalizer {
    rows,           // 1 / (M - 1), the printed formula
    ordered_pairs,  // 1 / (M (M - 1)), the per-pair average
};

[[nodiscard]] ClusterMetrics cluster_metrics(const VarFit& fit,
                                             PairNormalizer norm = PairNormalizer::rows);

struct TypologyReport {
    std::size_t n_clusters = 0;
    double fraction_mutualistic = 0.0;  // share of clusters with m_bar > 0
    double t_statistic = 0.0;           // one-sample t of m_bar against zero
    double spearman_rho = 0.0;          // rank correlation of m_bar with kappa
    bool spearman_applicable = true;    // false when either rank set is constant
    std::size_t bins = 0;
    std::vector<double> m_bar_edges;  // bins+1 edges
    std::vector<double> kappa_edges;
    Matrix histogram;  // bins x bins joint counts
};

[[nodiscard]] TypologyReport typology_report(std::span<const ClusterMetrics> metrics,
                                             std::size_t bins = 20);

[[nodiscard]] std::string edge_sign_name(EdgeSign sign);
void write_graphml(const EcoNetwork& net, const std::string& path);
void write_dot(const EcoNetwork& net, const std::string& path);
void write_metrics_csv(std::span<const std::string> cluster_names,
                       std::span<const ClusterMetrics> metrics, const std::string& path);

struct NamedMetrics {
    std::vector<std::string> clusters;
    std::vector<ClusterMetrics> metrics;
};
[[nodiscard]] NamedMetrics read_metrics_csv(const std::string& path);
void write_histogram_csv(const TypologyReport& report, const std::string& path);

}  // namespace ecokit
