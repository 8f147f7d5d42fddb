#pragma once

#include "netpartial/net_estimators.hpp"
#include "netpartial/outcomes.hpp"
#include "netpartial/partial_obs.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace netpartial {

/// Draws G | G*, theta. Observed dyads are held at their observed values and
/// the rest are drawn from the model: ARD observes no dyads, an induced
/// sample observes dyads among sampled nodes, RDS observes every dyad that
/// touches a sampled node, and a masked graph observes its retained edges.
class ConditionalGraphSampler {
public:
    ConditionalGraphSampler(NetModelEstimate theta, PartialNetwork gstar);

    NodeId size() const { return n_; }
    /// True when every dyad is observed.
    bool exact() const;
    Graph draw(std::uint64_t seed) const;

private:
    NetModelEstimate theta_;
    PartialNetwork gstar_;
    NodeId n_ = 0;
    Graph observed_;            // observed edges on global ids
    std::vector<char> sampled_;  // node membership in I_m
};

/// L feature matrices h(S(G_l), V(a, G_l)), one per conditional draw.
std::vector<Eigen::MatrixXd> draw_features(const ConditionalGraphSampler& sampler,
                                           std::span<const int> a,
                                           const Eigen::MatrixXd& covariates,
                                           const FeatureMap& features, int L, std::uint64_t seed);

struct FeatureAverage {
    Eigen::MatrixXd mean;  // n x p
    Eigen::MatrixXd se;    // per-entry Monte-Carlo standard error
    int L = 0;
};

FeatureAverage summarize_features(const std::vector<Eigen::MatrixXd>& draws);

FeatureAverage average_features(const ConditionalGraphSampler& sampler, std::span<const int> a,
                                const Eigen::MatrixXd& covariates, const FeatureMap& features,
                                int L, std::uint64_t seed);

// ─── Outcome-model fits ──────────────────────────────────────────

enum class WorkingCovKind { independent, cluster };

struct WorkingCov {
    WorkingCovKind kind = WorkingCovKind::independent;
    std::vector<int> clusters;  // per node, cluster kind only
};

enum class Link { identity, logistic };

struct FitDiagnostics {
    double cond = 0.0;
    int iterations = 0;
    double log_likelihood = 0.0;
    bool converged = true;
    bool separation = false;
    std::vector<double> loglik_trace;
};

struct FitResult {
    Eigen::VectorXd beta;
    Eigen::MatrixXd cov;
    Link link = Link::identity;
    WorkingCovKind working = WorkingCovKind::independent;
    FitDiagnostics diagnostics;
};

/// OLS on averaged features with a sandwich covariance.
FitResult fit_linear(std::span<const double> y, const Eigen::MatrixXd& features,
                     const WorkingCov& working = {}, double cond_cap = 1e8);

struct EmOptions {
    int max_iters = 200;
    double tol = 1e-8;
    int newton_iters = 100;
    WorkingCov working;
};

/// Monte-Carlo EM for a logistic outcome over a fixed sample of feature draws.
FitResult fit_logistic_em(std::span<const double> y, const std::vector<Eigen::MatrixXd>& draws,
                          const EmOptions& options = {});

FitResult fit_logistic_em(std::span<const double> y, const ConditionalGraphSampler& sampler,
                          std::span<const int> a, const Eigen::MatrixXd& covariates,
                          const FeatureMap& features, int L, std::uint64_t seed,
                          const EmOptions& options = {});

/// Mixture log-likelihood sum_i log[(1/L) sum_l P(Y_i | h_il; beta)].
double mixture_loglik(std::span<const double> y, const std::vector<Eigen::MatrixXd>& draws,
                      const Eigen::VectorXd& beta);

// ─── Causal estimands ────────────────────────────────────────────

struct GateEstimate {
    double estimate = 0.0;
    double se = 0.0;
    std::string method;
};

struct PsiValue {
    double value = 0.0;
    Eigen::VectorXd gradient;  // dPsi/dbeta
};

/// Psi(a | beta) averaged over the given feature draws.
PsiValue psi_from_draws(const FitResult& fit, const std::vector<Eigen::MatrixXd>& draws);

GateEstimate plugin_psi(const FitResult& fit, const ConditionalGraphSampler& sampler,
                        std::span<const int> a_target, const Eigen::MatrixXd& covariates,
                        const FeatureMap& features, int L, std::uint64_t seed);

/// Psi(1) - Psi(0) with common graph draws and a delta-method SE.
GateEstimate plugin_gate(const FitResult& fit, const ConditionalGraphSampler& sampler,
                         const Eigen::MatrixXd& covariates, const FeatureMap& features, int L,
                         std::uint64_t seed);

struct BernoulliDesign {
    double p = 0.5;
};
/// `treated` of the clusters are fully treated, uniformly at random.
struct ClusterDesign {
    std::vector<int> clusters;
    int treated = 0;
};
using AssignmentDistribution = std::variant<BernoulliDesign, ClusterDesign>;

enum class Positivity { strict, skip };

/// Probabilities that i and all its neighbours are treated (first) or all in
/// control (second).
std::pair<std::vector<double>, std::vector<double>> exposure_probabilities(
    const Graph& g, const AssignmentDistribution& design);

GateEstimate ht_estimator(std::span<const double> y, std::span<const int> a, const Graph& g,
                          const AssignmentDistribution& design,
                          Positivity positivity = Positivity::strict);

GateEstimate dm_estimator(std::span<const double> y, std::span<const int> a);

}  // namespace netpartial
