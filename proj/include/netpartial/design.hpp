#pragma once

#include "netpartial/inference.hpp"
#include "netpartial/outcomes.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace netpartial {

/// J design clusters with an optional treatment budget sum_j tau_j n_j <= budget.
struct DesignClusters {
    std::vector<int> labels;  // cluster per node, 0..J-1
    int J = 0;
    std::vector<int> sizes;
    std::optional<double> budget;

    static DesignClusters from_labels(std::vector<int> labels, std::optional<double> budget = {});
    bool feasible(const Eigen::VectorXd& tau) const;
};

/// Treats round-half-up(tau_j n_j) nodes of each cluster, chosen by
/// per-node random keys so the draw does not depend on cluster numbering.
TreatmentVector saturation_assignment(const DesignClusters& clusters, const Eigen::VectorXd& tau,
                                      std::uint64_t seed);

/// Working outcome covariance: sigma2 on the diagonal, rho * sigma2 within clusters.
struct NoiseCovariance {
    enum class Kind { independent, cluster } kind = Kind::independent;
    double sigma2 = 1.0;
    double rho = 0.0;
    std::vector<int> clusters;
};

/// H' Sigma H for an n x p matrix H.
Eigen::MatrixXd sandwich_middle(const Eigen::MatrixXd& H, const NoiseCovariance& sigma);

struct SaturationValue {
    double value = 0.0;
    double se = 0.0;
    int singular_draws = 0;
};

struct SaturationOptions {
    int L = 1;
    int R = 1;
    std::optional<double> penalty;  // value for singular draws; skipped when unset
    double cond_cap = 1e8;
};

/// Mean over R assignment draws of phi' (H'H)^-1 H' Sigma H (H'H)^-1 phi
/// with H the features averaged over L conditional graph draws.
SaturationValue eval_saturation_variance(const Eigen::VectorXd& tau, const DesignClusters& clusters,
                                         const ConditionalGraphSampler& sampler,
                                         const Eigen::MatrixXd& covariates,
                                         const FeatureMap& features,
                                         const Eigen::VectorXd& contrast,
                                         const NoiseCovariance& sigma,
                                         const SaturationOptions& options, std::uint64_t seed);

/// Working quantities for the estimating-equation variant.
struct ZWorking {
    Link link = Link::logistic;
    Eigen::VectorXd beta;
    /// Fixed p x p Gamma, or Gamma = H' Sigma H / n^2 per draw.
    std::variant<Eigen::MatrixXd, NoiseCovariance> gamma;
};

/// Mean over R draws of phi' D^-1 Gamma D^-T phi with
/// D = (1/n) sum_i link'(h_i' beta) h_i h_i'.
SaturationValue eval_saturation_variance_z(const Eigen::VectorXd& tau,
                                           const DesignClusters& clusters,
                                           const ConditionalGraphSampler& sampler,
                                           const Eigen::MatrixXd& covariates,
                                           const FeatureMap& features,
                                           const Eigen::VectorXd& contrast, const ZWorking& working,
                                           const SaturationOptions& options, std::uint64_t seed);

// ─── Gaussian-process surrogate ──────────────────────────────────

class GpSurrogate {
public:
    /// Kernel alpha0 * exp(-|x - x'|^2) with constant prior mean mu0.
    GpSurrogate(double alpha0, double mu0);

    /// Factorizes K + jitter * alpha0 * I, walking the jitter ladder
    /// 1e-10 .. 1e-4 until the Cholesky factorization succeeds.
    void fit(const Eigen::MatrixXd& points, const Eigen::VectorXd& values);

    double mean(const Eigen::VectorXd& x) const;
    double sd(const Eigen::VectorXd& x) const;
    /// mu - kappa * sigma.
    double acquisition(const Eigen::VectorXd& x, double kappa) const;
    double jitter() const { return jitter_; }

private:
    double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
    Eigen::VectorXd cross(const Eigen::VectorXd& x) const;

    double alpha0_;
    double mu0_;
    double jitter_ = 0.0;
    Eigen::MatrixXd points_;
    Eigen::LLT<Eigen::MatrixXd> chol_;
    Eigen::VectorXd weights_;
};

/// Halton points in [0,1]^dim starting at index `start`.
Eigen::MatrixXd halton(int count, int dim, int start = 1);

struct DesignEvaluation {
    Eigen::VectorXd tau;
    double value = 0.0;
    double se = 0.0;
    bool singular = false;
};

using DesignObjective = std::function<SaturationValue(const Eigen::VectorXd&)>;

struct BayesOptOptions {
    int n0 = 20;
    int N0 = 20;
    double kappa = 2.0;
    int candidates = 512;
};

struct BayesOptResult {
    Eigen::VectorXd best_tau;
    double best_value = 0.0;
    std::vector<DesignEvaluation> trace;
};

/// n0 uniform pilot points, then N0 points minimizing the UCB acquisition of
/// a GP fit to -exp(-V). Degenerate evaluations are scored at 10x the largest
/// finite pilot value.
BayesOptResult bayes_opt_saturation(const DesignObjective& objective, const DesignClusters& domain,
                                    const BayesOptOptions& options, std::uint64_t seed);

struct RobustChoice {
    int index = 0;
    Eigen::VectorXd tau;
    std::vector<double> mean;
    std::vector<double> sd;
    std::vector<double> score;  // mean + 2 sd
};

/// Scores each candidate by mean + 2 sd of V across model replicates.
RobustChoice design_with_model_uncertainty(const std::vector<Eigen::VectorXd>& candidates,
                                           const std::vector<DesignObjective>& replicates);

// ─── Seeding and allocation ──────────────────────────────────────

/// Within-block seed choice: uniform at random, or by descending priority
/// (ties to the lowest index). An empty priority ranks by degree in the graph
/// the seeds are placed on.
struct SeedPlacement {
    enum class Kind { random, ranked } kind = Kind::random;
    std::vector<double> priority;
};

TreatmentVector place_seeds(const Graph& g, std::span<const int> blocks,
                            std::span<const int> allocation, const SeedPlacement& placement,
                            std::uint64_t seed);

/// Every way to split `budget` seeds across K blocks, lexicographic order.
std::vector<std::vector<int>> enumerate_allocations(int budget, int K);

struct AllocationValue {
    std::vector<int> allocation;
    double mean = 0.0;
    double se = 0.0;
};

struct SeedingResult {
    std::vector<int> best;
    double mean = 0.0;
    double se = 0.0;
    std::vector<AllocationValue> trace;
    std::vector<std::vector<int>> skipped;  // allocations exceeding a block size
};

SeedingResult optimal_seeding(const OutcomeModel& model, const ConditionalGraphSampler& sampler,
                              const Eigen::MatrixXd& covariates, int seed_budget,
                              std::span<const int> blocks, int L, const SeedPlacement& placement,
                              std::uint64_t seed);

struct LinearAllocationModel {
    double beta0 = 1.0;
    double beta1 = 1.0;
    double beta2 = 0.5;
};

/// zeta_k' = sum_i P_{k_i k'} / d_{k_i} with expected block degrees d_k.
Eigen::VectorXd spillover_weights(const SbmParams& theta);

/// beta0 + (beta1 1'n_t + beta2 zeta'n_t) / n for block treatment counts n_t.
double allocation_value(const LinearAllocationModel& beta, const SbmParams& theta,
                        std::span<const int> a);

struct BudgetedAllocation {
    TreatmentVector a;
    std::vector<int> block_counts;
    double value = 0.0;
};

BudgetedAllocation budgeted_allocation(const LinearAllocationModel& beta, const SbmParams& theta,
                                       int budget);

}  // namespace netpartial
