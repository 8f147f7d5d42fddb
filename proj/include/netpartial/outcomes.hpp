#pragma once

#include "netpartial/graph.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace netpartial {

/// Binary treatment vector a.
using TreatmentVector = std::vector<int>;

void validate_treatment(std::span<const int> a, NodeId n);

// ─── Exposure maps ───────────────────────────────────────────────

struct TreatedCount {};
struct TreatedFraction {};  // degree-0 nodes get 0 and are flagged
struct NeighborTreatedIndicator {};
struct RiskShare {
    std::vector<int> communities;  // community label per node
};
/// V = self_weight * a + sum_{t=1..T} w_t G^t a, with w_t = weights[t-1] when
/// weights are given and q^t otherwise.
struct Hearing {
    int T = 1;
    double q = 0.5;
    std::vector<double> weights;
    double self_weight = 0.0;
};

using ExposureSpec =
    std::variant<TreatedCount, TreatedFraction, NeighborTreatedIndicator, RiskShare, Hearing>;

void validate_exposure(const ExposureSpec& spec, NodeId n);

struct ExposureResult {
    std::vector<double> values;
    std::vector<char> flagged;  // degenerate nodes (degree 0 under TreatedFraction)
};

ExposureResult compute_exposure(const Graph& g, std::span<const int> a, const ExposureSpec& spec);

// ─── Feature maps h(S, V) ────────────────────────────────────────

struct FeatureAtom {
    enum class Kind { intercept, own_treatment, exposure, degree_ratio, covariate, inverse_mean_degree };
    Kind kind = Kind::intercept;
    int index = 0;  // exposure slot or covariate column
};

/// Each feature is the product of its atoms.
struct FeatureMap {
    std::vector<ExposureSpec> exposures;
    std::vector<std::vector<FeatureAtom>> terms;

    int size() const { return static_cast<int>(terms.size()); }
    bool uses_covariates() const;
    bool uses_treatment() const;
    void validate(NodeId n, Eigen::Index covariate_cols) const;
    /// n x p matrix of features on graph g.
    Eigen::MatrixXd evaluate(const Graph& g, std::span<const int> a,
                             const Eigen::MatrixXd& covariates) const;

    /// r, rX, ra, rXa, s, sX with r = d/dbar and s = (treated neighbours)/dbar.
    static FeatureMap ugander(int covariate_col = 0);
    /// Intercept plus a single exposure column.
    static FeatureMap intercept_exposure(ExposureSpec exposure);
};

// ─── Outcome models ──────────────────────────────────────────────

/// Y(0) = (d/dbar)(alpha + b X + sigma eps); Y(a) = Y(0)(1 + delta a_i + gamma frac_i).
struct UganderLinear {
    double alpha = 1.0;
    double b = 1.0;
    double delta = 1.0;
    double gamma = -0.5;
    double sigma = 0.5;
    int covariate = 0;
};

/// P(Y = 1) = logistic(alpha0 + alpha1 sum_{t=0..T} beta_t (G^t a)_i).
struct HearingLogistic {
    double alpha0 = 0.0;
    double alpha1 = 1.0;
    std::vector<double> beta{0.0, 0.5, 0.05, 0.005};

    Hearing exposure() const;
};

/// Threshold contagion from the treated seeds for T rounds.
struct ComplexContagion {
    double lambda = 2.0;
    double threshold_sd = 0.1;
    int T = 3;
};

/// Each node hears with probability q if it has at least one treated neighbour.
struct LocalDiffusion {
    double q = 0.5;
};

/// Y = beta' h + sigma eps.
struct GenericLinear {
    std::vector<double> beta;
    FeatureMap features;
    double sigma = 0.0;
};

using OutcomeModel =
    std::variant<UganderLinear, HearingLogistic, ComplexContagion, LocalDiffusion, GenericLinear>;

void validate_model(const OutcomeModel& model);

std::vector<double> simulate_outcomes(const OutcomeModel& model, const Graph& g,
                                      std::span<const int> a, const Eigen::MatrixXd& covariates,
                                      std::uint64_t seed);

/// Psi(a | G) = mean_i E[Y_i(a)]; exact where the model allows it, otherwise
/// a Monte-Carlo average over n_draws simulations.
double mean_potential_outcome(const OutcomeModel& model, const Graph& g, std::span<const int> a,
                              const Eigen::MatrixXd& covariates, int n_draws, std::uint64_t seed);

/// Psi(1 | G) - Psi(0 | G), using common random numbers when simulated.
double true_gate(const OutcomeModel& model, const Graph& g, const Eigen::MatrixXd& covariates,
                 int n_draws, std::uint64_t seed);

/// Draws N_[0,inf)(mean, sd) by rejection; sd = 0 returns max(mean, 0).
double truncated_normal(double mean, double sd, Rng& rng);

double logistic(double x);

}  // namespace netpartial
