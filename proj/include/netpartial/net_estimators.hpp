#pragma once

#include "netpartial/graph.hpp"
#include "netpartial/partial_obs.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace netpartial {

enum class ModelKind { sbm, beta };

struct EstimateDiagnostics {
    double cond = std::numeric_limits<double>::quiet_NaN();  // cond(Omega^T Omega), ARD only
    std::vector<int> cluster_sizes;
    bool converged = true;
    int iterations = 0;
};

/// theta-hat: either an SBM (with memberships) or a beta model.
struct NetModelEstimate {
    ModelKind kind = ModelKind::sbm;
    SbmParams sbm;
    BetaParams beta;
    Eigen::MatrixXd ptilde;  // T x K trait-by-block rates, ARD estimates only
    EstimateDiagnostics diagnostics;

    NodeId size() const;
    double edge_probability(NodeId i, NodeId j) const;
};

/// Draws a graph from the estimated model.
Graph sample_from(const NetModelEstimate& theta, std::uint64_t seed);

/// Average-linkage agglomerative clustering of the normalized ARD rows.
std::vector<int> cluster_ard(const ArdMatrix& ard, const TraitAssignment& traits, int k);

/// Omega_tk = (nodes with trait t in block k) / n_t.
Eigen::MatrixXd omega_matrix(const TraitAssignment& traits, std::span<const int> memberships, int K);

/// Ptilde_tk = sum_{i in block k} X*_it / (n_k n_t).
Eigen::MatrixXd ptilde_matrix(const ArdMatrix& ard, const TraitAssignment& traits,
                              std::span<const int> memberships, int K);

enum class BlockSolver { constrained, unconstrained_symmetrized };

struct BlockSolveOptions {
    BlockSolver solver = BlockSolver::constrained;
    double cond_cap = 1e6;
    int max_iters = 20000;
    double tol = 1e-12;
};

/// Minimizes ||Omega P - Ptilde||_F over symmetric P with 0 <= P <= 1.
Eigen::MatrixXd solve_block_probabilities(const Eigen::MatrixXd& omega,
                                          const Eigen::MatrixXd& ptilde,
                                          const BlockSolveOptions& options = {});

NetModelEstimate estimate_sbm_from_ard(const ArdMatrix& ard, const TraitAssignment& traits,
                                       std::span<const int> memberships,
                                       const BlockSolveOptions& options = {});

/// Dyad-frequency estimate from an induced or edge-masked sample; masked
/// edges are weighted by inverse propensity and the result clipped to [0,1].
NetModelEstimate estimate_sbm_from_subgraph(const SubgraphSample& sample,
                                            std::span<const int> memberships);

/// Count-ratio estimate over the recruited subgraph.
NetModelEstimate estimate_sbm_from_rds(const SubgraphSample& sample,
                                       std::span<const int> memberships);

struct BetaFitOptions {
    double tol = 1e-10;
    int max_iters = 10000;
};

/// Fixed point nu_i = d_i / (sum_j nu_j - nu_i).
NetModelEstimate fit_beta_model(std::span<const int> degrees, const BetaFitOptions& options = {});

/// Minimum-cost perfect matching; returns assignment[row] = column.
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

struct BootstrapResult {
    std::vector<NetModelEstimate> replicates;
    int failed = 0;
    std::vector<std::string> failures;
};

/// Parametric ARD bootstrap: resample G from theta_hat, rebuild ARD against
/// the fixed traits, re-cluster and re-estimate, align block labels.
BootstrapResult bootstrap_ard(const NetModelEstimate& theta_hat, const TraitAssignment& traits,
                              int b, std::uint64_t seed, const BlockSolveOptions& options = {});

}  // namespace netpartial
