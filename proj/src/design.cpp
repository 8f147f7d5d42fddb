#include "netpartial/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

namespace netpartial {

DesignClusters DesignClusters::from_labels(std::vector<int> labels, std::optional<double> budget) {
    DesignClusters c;
    for (int l : labels) {
        if (l < 0) throw ValidationError("design cluster labels must be nonnegative");
        c.J = std::max(c.J, l + 1);
    }
    c.sizes.assign(static_cast<std::size_t>(c.J), 0);
    for (int l : labels) ++c.sizes[l];
    for (int j = 0; j < c.J; ++j) {
        if (c.sizes[j] == 0) throw ValidationError("design cluster " + std::to_string(j) + " is empty");
    }
    c.labels = std::move(labels);
    c.budget = budget;
    return c;
}

bool DesignClusters::feasible(const Eigen::VectorXd& tau) const {
    if (tau.size() != J) return false;
    double spent = 0.0;
    for (int j = 0; j < J; ++j) {
        if (!(tau[j] >= 0.0 && tau[j] <= 1.0)) return false;
        spent += tau[j] * sizes[j];
    }
    return !budget || spent <= *budget + 1e-9;
}

TreatmentVector saturation_assignment(const DesignClusters& clusters, const Eigen::VectorXd& tau,
                                      std::uint64_t seed) {
    if (tau.size() != clusters.J) throw ValidationError("saturation vector needs one entry per cluster");
    for (int j = 0; j < clusters.J; ++j) {
        if (!(tau[j] >= 0.0 && tau[j] <= 1.0)) throw ValidationError("saturations must lie in [0,1]");
    }
    std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(clusters.J));
    for (std::size_t i = 0; i < clusters.labels.size(); ++i) {
        members[clusters.labels[i]].push_back(static_cast<NodeId>(i));
    }
    TreatmentVector a(clusters.labels.size(), 0);
    for (int j = 0; j < clusters.J; ++j) {
        auto& m = members[j];
        const auto count = static_cast<std::size_t>(std::floor(tau[j] * static_cast<double>(m.size()) + 0.5));
        auto key = [&](NodeId v) { return counter_uniform(seed, static_cast<std::uint64_t>(v), 0x5a7); };
        std::sort(m.begin(), m.end(), [&](NodeId u, NodeId v) {
            const double ku = key(u), kv = key(v);
            return ku < kv || (ku == kv && u < v);
        });
        for (std::size_t r = 0; r < std::min(count, m.size()); ++r) a[m[r]] = 1;
    }
    return a;
}

Eigen::MatrixXd sandwich_middle(const Eigen::MatrixXd& H, const NoiseCovariance& sigma) {
    const Eigen::MatrixXd gram = H.transpose() * H;
    if (sigma.kind == NoiseCovariance::Kind::independent) return sigma.sigma2 * gram;
    if (static_cast<Eigen::Index>(sigma.clusters.size()) != H.rows()) {
        throw ValidationError("cluster noise covariance needs one label per node");
    }
    std::map<int, Eigen::VectorXd> sums;
    for (Eigen::Index i = 0; i < H.rows(); ++i) {
        auto [it, fresh] = sums.try_emplace(sigma.clusters[i], Eigen::VectorXd::Zero(H.cols()));
        it->second += H.row(i).transpose();
    }
    Eigen::MatrixXd within = Eigen::MatrixXd::Zero(H.cols(), H.cols());
    for (const auto& [c, s] : sums) within += s * s.transpose();
    return sigma.sigma2 * ((1.0 - sigma.rho) * gram + sigma.rho * within);
}

namespace {

double spectral_condition(const Eigen::MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

// Shared R-draw loop; `per_draw` returns nullopt for a singular draw.
template <typename PerDraw>
SaturationValue average_over_assignments(const Eigen::VectorXd& tau, const DesignClusters& clusters,
                                         const ConditionalGraphSampler& sampler,
                                         const Eigen::MatrixXd& covariates,
                                         const FeatureMap& features,
                                         const SaturationOptions& options, std::uint64_t seed,
                                         PerDraw per_draw) {
    if (options.L < 1 || options.R < 1) throw ValidationError("design evaluation needs L, R >= 1");
    if (static_cast<NodeId>(clusters.labels.size()) != sampler.size()) {
        throw ValidationError("design clusters need one label per node");
    }
    std::vector<std::optional<double>> draws(static_cast<std::size_t>(options.R));
    parallel_for(draws.size(), [&](std::size_t r) {
        const TreatmentVector a = saturation_assignment(clusters, tau, derive_seed(seed, r, 0xa551));
        const Eigen::MatrixXd H =
            average_features(sampler, a, covariates, features, options.L, derive_seed(seed, r, 0x6a))
                .mean;
        draws[r] = per_draw(H);
    });
    SaturationValue out;
    std::vector<double> values;
    for (const auto& d : draws) {
        if (d) {
            values.push_back(*d);
        } else {
            ++out.singular_draws;
            if (options.penalty) values.push_back(*options.penalty);
        }
    }
    if (values.empty()) throw NumericalError("degenerate design");
    const double k = static_cast<double>(values.size());
    out.value = std::accumulate(values.begin(), values.end(), 0.0) / k;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.value) * (v - out.value);
        out.se = std::sqrt(ss / (k - 1.0) / k);
    }
    return out;
}

}  // namespace

SaturationValue eval_saturation_variance(const Eigen::VectorXd& tau, const DesignClusters& clusters,
                                         const ConditionalGraphSampler& sampler,
                                         const Eigen::MatrixXd& covariates,
                                         const FeatureMap& features,
                                         const Eigen::VectorXd& contrast,
                                         const NoiseCovariance& sigma,
                                         const SaturationOptions& options, std::uint64_t seed) {
    if (contrast.size() != features.size()) throw ValidationError("contrast needs one entry per feature");
    if (sigma.sigma2 < 0.0) throw ValidationError("noise variance must be nonnegative");
    return average_over_assignments(
        tau, clusters, sampler, covariates, features, options, seed,
        [&](const Eigen::MatrixXd& H) -> std::optional<double> {
            const Eigen::MatrixXd gram = H.transpose() * H;
            if (!(spectral_condition(gram / static_cast<double>(H.rows())) <= options.cond_cap)) {
                return std::nullopt;
            }
            const Eigen::VectorXd x = gram.ldlt().solve(contrast);
            return x.dot(sandwich_middle(H, sigma) * x);
        });
}

SaturationValue eval_saturation_variance_z(const Eigen::VectorXd& tau,
                                           const DesignClusters& clusters,
                                           const ConditionalGraphSampler& sampler,
                                           const Eigen::MatrixXd& covariates,
                                           const FeatureMap& features,
                                           const Eigen::VectorXd& contrast, const ZWorking& working,
                                           const SaturationOptions& options, std::uint64_t seed) {
    const int p = features.size();
    if (contrast.size() != p || working.beta.size() != p) {
        throw ValidationError("contrast and working beta need one entry per feature");
    }
    if (const auto* g = std::get_if<Eigen::MatrixXd>(&working.gamma); g && (g->rows() != p || g->cols() != p)) {
        throw ValidationError("working Gamma must be p x p");
    }
    return average_over_assignments(
        tau, clusters, sampler, covariates, features, options, seed,
        [&](const Eigen::MatrixXd& H) -> std::optional<double> {
            const auto n = static_cast<double>(H.rows());
            const Eigen::VectorXd eta = H * working.beta;
            Eigen::VectorXd w(H.rows());
            for (Eigen::Index i = 0; i < H.rows(); ++i) {
                const double pr = logistic(eta[i]);
                w[i] = working.link == Link::identity ? 1.0 : pr * (1.0 - pr);
            }
            const Eigen::MatrixXd D = H.transpose() * w.asDiagonal() * H / n;
            if (!(spectral_condition(D) <= options.cond_cap)) return std::nullopt;
            const Eigen::MatrixXd gamma = std::holds_alternative<Eigen::MatrixXd>(working.gamma)
                                              ? std::get<Eigen::MatrixXd>(working.gamma)
                                              : Eigen::MatrixXd(sandwich_middle(H, std::get<NoiseCovariance>(working.gamma)) / (n * n));
            const Eigen::VectorXd x = D.transpose().ldlt().solve(contrast);
            return x.dot(gamma * x);
        });
}

// ─── Gaussian process ────────────────────────────────────────────

GpSurrogate::GpSurrogate(double alpha0, double mu0) : alpha0_(alpha0), mu0_(mu0) {
    if (!(alpha0 > 0.0) || !std::isfinite(alpha0)) throw ValidationError("GP prior variance must be positive");
}

double GpSurrogate::kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    return alpha0_ * std::exp(-(a - b).squaredNorm());
}

Eigen::VectorXd GpSurrogate::cross(const Eigen::VectorXd& x) const {
    Eigen::VectorXd k(points_.rows());
    for (Eigen::Index i = 0; i < points_.rows(); ++i) k[i] = kernel(points_.row(i).transpose(), x);
    return k;
}

void GpSurrogate::fit(const Eigen::MatrixXd& points, const Eigen::VectorXd& values) {
    if (points.rows() != values.size() || points.rows() == 0) {
        throw ValidationError("GP needs one value per training point");
    }
    points_ = points;
    const auto m = points.rows();
    Eigen::MatrixXd K(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) K(i, j) = kernel(points.row(i).transpose(), points.row(j).transpose());
    }
    for (double jitter = 1e-10; jitter <= 1e-4 * 1.0001; jitter *= 10.0) {
        chol_.compute(K + jitter * alpha0_ * Eigen::MatrixXd::Identity(m, m));
        if (chol_.info() == Eigen::Success && chol_.matrixL().toDenseMatrix().diagonal().minCoeff() > 0.0) {
            jitter_ = jitter;
            weights_ = chol_.solve((values.array() - mu0_).matrix());
            return;
        }
    }
    throw NumericalError("GP kernel matrix is not positive definite even with maximal jitter");
}

double GpSurrogate::mean(const Eigen::VectorXd& x) const { return mu0_ + cross(x).dot(weights_); }

double GpSurrogate::sd(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd k = cross(x);
    const double var = alpha0_ - k.dot(chol_.solve(k));
    return std::sqrt(std::max(var, 0.0));
}

double GpSurrogate::acquisition(const Eigen::VectorXd& x, double kappa) const {
    return mean(x) - kappa * sd(x);
}

Eigen::MatrixXd halton(int count, int dim, int start) {
    std::vector<int> primes;
    for (int c = 2; static_cast<int>(primes.size()) < dim; ++c) {
        if (std::all_of(primes.begin(), primes.end(), [c](int p) { return c % p != 0; })) primes.push_back(c);
    }
    Eigen::MatrixXd out(count, dim);
    for (int r = 0; r < count; ++r) {
        for (int d = 0; d < dim; ++d) {
            double f = 1.0, v = 0.0;
            for (long long i = start + r; i > 0; i /= primes[d]) {
                f /= primes[d];
                v += f * static_cast<double>(i % primes[d]);
            }
            out(r, d) = v;
        }
    }
    return out;
}

// ─── Bayesian optimization ───────────────────────────────────────

BayesOptResult bayes_opt_saturation(const DesignObjective& objective, const DesignClusters& domain,
                                    const BayesOptOptions& options, std::uint64_t seed) {
    if (options.n0 < 2) throw ValidationError("Bayesian optimization needs n0 >= 2 pilot points");
    if (options.N0 < 0) throw ValidationError("N0 must be nonnegative");
    if (options.candidates < 1) throw ValidationError("candidate set must be nonempty");
    const int J = domain.J;
    Rng rng = make_rng(seed, 0xb0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto uniform_feasible = [&] {
        for (int attempt = 0; attempt < 100000; ++attempt) {
            Eigen::VectorXd tau(J);
            for (int j = 0; j < J; ++j) tau[j] = unif(rng);
            if (domain.feasible(tau)) return tau;
        }
        throw ValidationError("feasible saturation set appears to be empty");
    };
    auto evaluate = [&](const Eigen::VectorXd& tau) {
        DesignEvaluation e;
        e.tau = tau;
        try {
            const SaturationValue v = objective(tau);
            e.value = v.value;
            e.se = v.se;
            e.singular = !std::isfinite(v.value);
        } catch (const NumericalError&) {
            e.singular = true;
        }
        return e;
    };

    BayesOptResult result;
    std::vector<Eigen::VectorXd> pilots;
    for (int i = 0; i < options.n0; ++i) pilots.push_back(uniform_feasible());
    result.trace.resize(pilots.size());
    parallel_for(pilots.size(), [&](std::size_t i) { result.trace[i] = evaluate(pilots[i]); });

    double largest = -std::numeric_limits<double>::infinity();
    for (const auto& e : result.trace) {
        if (!e.singular) largest = std::max(largest, e.value);
    }
    if (!std::isfinite(largest)) throw NumericalError("degenerate design at every pilot point");
    const double penalty = 10.0 * largest;
    auto scored = [&](const DesignEvaluation& e) { return e.singular ? penalty : e.value; };

    // The GP models w = -exp(-V); its prior is fixed from the pilot values.
    auto transform = [](double v) { return -std::exp(-v); };
    double mu0 = 0.0;
    for (const auto& e : result.trace) mu0 += transform(scored(e));
    mu0 /= options.n0;
    double alpha0 = 0.0;
    for (const auto& e : result.trace) alpha0 += std::pow(transform(scored(e)) - mu0, 2);
    alpha0 /= options.n0 - 1;
    if (!(alpha0 > 0.0)) alpha0 = 1.0;

    for (int iter = 0; iter < options.N0; ++iter) {
        const auto m = static_cast<Eigen::Index>(result.trace.size());
        Eigen::MatrixXd X(m, J);
        Eigen::VectorXd w(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            X.row(i) = result.trace[i].tau.transpose();
            w[i] = transform(scored(result.trace[i]));
        }
        GpSurrogate gp(alpha0, mu0);
        gp.fit(X, w);

        Eigen::VectorXd shift(J);
        for (int j = 0; j < J; ++j) shift[j] = unif(rng);
        const Eigen::MatrixXd cand = halton(options.candidates, J, 1 + iter * options.candidates);
        double best = std::numeric_limits<double>::infinity();
        Eigen::VectorXd pick;
        for (Eigen::Index r = 0; r < cand.rows(); ++r) {
            Eigen::VectorXd tau = cand.row(r).transpose() + shift;
            for (int j = 0; j < J; ++j) tau[j] -= std::floor(tau[j]);
            if (!domain.feasible(tau)) continue;
            const double acq = gp.acquisition(tau, options.kappa);
            if (acq < best) {
                best = acq;
                pick = tau;
            }
        }
        if (pick.size() == 0) pick = uniform_feasible();
        result.trace.push_back(evaluate(pick));
    }

    std::size_t arg = 0;
    for (std::size_t i = 1; i < result.trace.size(); ++i) {
        if (scored(result.trace[i]) < scored(result.trace[arg])) arg = i;
    }
    result.best_tau = result.trace[arg].tau;
    result.best_value = scored(result.trace[arg]);
    return result;
}

RobustChoice design_with_model_uncertainty(const std::vector<Eigen::VectorXd>& candidates,
                                           const std::vector<DesignObjective>& replicates) {
    if (candidates.empty()) throw ValidationError("need at least one candidate design");
    if (replicates.size() < 2) throw ValidationError("need at least two model replicates");
    const std::size_t C = candidates.size(), B = replicates.size();
    std::vector<double> v(C * B);
    parallel_for(C * B, [&](std::size_t k) { v[k] = replicates[k % B](candidates[k / B]).value; });
    RobustChoice out;
    for (std::size_t c = 0; c < C; ++c) {
        double m = 0.0;
        for (std::size_t b = 0; b < B; ++b) m += v[c * B + b];
        m /= static_cast<double>(B);
        double ss = 0.0;
        for (std::size_t b = 0; b < B; ++b) ss += std::pow(v[c * B + b] - m, 2);
        const double sd = std::sqrt(ss / static_cast<double>(B - 1));
        out.mean.push_back(m);
        out.sd.push_back(sd);
        out.score.push_back(m + 2.0 * sd);
    }
    out.index = static_cast<int>(std::min_element(out.score.begin(), out.score.end()) - out.score.begin());
    out.tau = candidates[static_cast<std::size_t>(out.index)];
    return out;
}

// ─── Seeding ─────────────────────────────────────────────────────

TreatmentVector place_seeds(const Graph& g, std::span<const int> blocks,
                            std::span<const int> allocation, const SeedPlacement& placement,
                            std::uint64_t seed) {
    const NodeId n = g.size();
    if (static_cast<NodeId>(blocks.size()) != n) throw ValidationError("blocks need one label per node");
    std::vector<std::vector<NodeId>> members(allocation.size());
    for (NodeId i = 0; i < n; ++i) {
        if (blocks[i] < 0 || blocks[i] >= static_cast<int>(allocation.size())) {
            throw ValidationError("block label outside the allocation vector");
        }
        members[blocks[i]].push_back(i);
    }
    const bool by_degree = placement.kind == SeedPlacement::Kind::ranked && placement.priority.empty();
    if (!by_degree && placement.kind == SeedPlacement::Kind::ranked &&
        static_cast<NodeId>(placement.priority.size()) != n) {
        throw ValidationError("seed priority needs one entry per node");
    }
    auto priority = [&](NodeId v) { return by_degree ? g.degree(v) : placement.priority[v]; };
    TreatmentVector a(static_cast<std::size_t>(n), 0);
    for (std::size_t k = 0; k < allocation.size(); ++k) {
        auto& m = members[k];
        if (allocation[k] < 0 || allocation[k] > static_cast<int>(m.size())) {
            throw ValidationError("allocation for block " + std::to_string(k) + " exceeds its size");
        }
        if (placement.kind == SeedPlacement::Kind::random) {
            auto key = [&](NodeId v) { return counter_uniform(seed, static_cast<std::uint64_t>(v), 0x5eed); };
            std::sort(m.begin(), m.end(), [&](NodeId u, NodeId v) {
                const double ku = key(u), kv = key(v);
                return ku < kv || (ku == kv && u < v);
            });
        } else {
            std::stable_sort(m.begin(), m.end(), [&](NodeId u, NodeId v) { return priority(u) > priority(v); });
        }
        for (int r = 0; r < allocation[k]; ++r) a[m[r]] = 1;
    }
    return a;
}

std::vector<std::vector<int>> enumerate_allocations(int budget, int K) {
    if (budget < 0 || K < 1) throw ValidationError("allocation enumeration needs budget >= 0 and K >= 1");
    std::vector<std::vector<int>> out;
    std::vector<int> cur(static_cast<std::size_t>(K), 0);
    auto rec = [&](auto&& self, int k, int left) -> void {
        if (k == K - 1) {
            cur[k] = left;
            out.push_back(cur);
            return;
        }
        for (int v = 0; v <= left; ++v) {
            cur[k] = v;
            self(self, k + 1, left - v);
        }
    };
    rec(rec, 0, budget);
    return out;
}

SeedingResult optimal_seeding(const OutcomeModel& model, const ConditionalGraphSampler& sampler,
                              const Eigen::MatrixXd& covariates, int seed_budget,
                              std::span<const int> blocks, int L, const SeedPlacement& placement,
                              std::uint64_t seed) {
    validate_model(model);
    if (L < 1) throw ValidationError("seeding needs L >= 1");
    const NodeId n = sampler.size();
    if (static_cast<NodeId>(blocks.size()) != n) throw ValidationError("blocks need one label per node");
    int K = 0;
    for (int b : blocks) {
        if (b < 0) throw ValidationError("block labels must be nonnegative");
        K = std::max(K, b + 1);
    }
    std::vector<int> sizes(static_cast<std::size_t>(K), 0);
    for (int b : blocks) ++sizes[b];

    SeedingResult result;
    std::vector<std::vector<int>> feasible;
    for (auto& alloc : enumerate_allocations(seed_budget, K)) {
        bool fits = true;
        for (int k = 0; k < K; ++k) fits = fits && alloc[k] <= sizes[k];
        (fits ? feasible : result.skipped).push_back(std::move(alloc));
    }
    if (feasible.empty()) throw ValidationError("no allocation of the seed budget fits the block sizes");

    // Common graph draws and outcome noise across allocations.
    const std::size_t draws = sampler.exact() ? 1 : static_cast<std::size_t>(L);
    std::vector<Graph> graphs(draws);
    parallel_for(draws, [&](std::size_t l) { graphs[l] = sampler.draw(derive_seed(seed, l, 0x9a)); });

    result.trace.resize(feasible.size());
    parallel_for(feasible.size(), [&](std::size_t c) {
        std::vector<double> ybar(static_cast<std::size_t>(L));
        for (int l = 0; l < L; ++l) {
            const Graph& g = graphs[static_cast<std::size_t>(l) % draws];
            const TreatmentVector a = place_seeds(g, blocks, feasible[c], placement, derive_seed(seed, l, 0x5e));
            const auto y = simulate_outcomes(model, g, a, covariates, derive_seed(seed, l, 0x0c));
            ybar[l] = std::accumulate(y.begin(), y.end(), 0.0) / n;
        }
        AllocationValue v;
        v.allocation = feasible[c];
        v.mean = std::accumulate(ybar.begin(), ybar.end(), 0.0) / L;
        if (L > 1) {
            double ss = 0.0;
            for (double y : ybar) ss += (y - v.mean) * (y - v.mean);
            v.se = std::sqrt(ss / (L - 1.0) / L);
        }
        result.trace[c] = std::move(v);
    });
    std::size_t arg = 0;
    for (std::size_t c = 1; c < result.trace.size(); ++c) {
        if (result.trace[c].mean > result.trace[arg].mean) arg = c;
    }
    result.best = result.trace[arg].allocation;
    result.mean = result.trace[arg].mean;
    result.se = result.trace[arg].se;
    return result;
}

// ─── Budgeted allocation ─────────────────────────────────────────

Eigen::VectorXd spillover_weights(const SbmParams& theta) {
    theta.validate(false);
    const auto sizes = theta.block_sizes();
    const int K = theta.K;
    Eigen::VectorXd degree = Eigen::VectorXd::Zero(K);
    for (int k = 0; k < K; ++k) {
        for (int c = 0; c < K; ++c) degree[k] += sizes[c] * theta.P(k, c);
        if (sizes[k] > 0) degree[k] -= theta.P(k, k);
    }
    Eigen::VectorXd zeta = Eigen::VectorXd::Zero(K);
    for (int k = 0; k < K; ++k) {
        if (degree[k] <= 0.0) continue;
        for (int c = 0; c < K; ++c) zeta[c] += sizes[k] * theta.P(k, c) / degree[k];
    }
    return zeta;
}

double allocation_value(const LinearAllocationModel& beta, const SbmParams& theta,
                        std::span<const int> a) {
    const NodeId n = theta.size();
    validate_treatment(a, n);
    const Eigen::VectorXd zeta = spillover_weights(theta);
    double direct = 0.0, spill = 0.0;
    for (NodeId i = 0; i < n; ++i) {
        direct += a[i];
        spill += a[i] * zeta[theta.memberships[i]];
    }
    return beta.beta0 + (beta.beta1 * direct + beta.beta2 * spill) / n;
}

BudgetedAllocation budgeted_allocation(const LinearAllocationModel& beta, const SbmParams& theta,
                                       int budget) {
    const NodeId n = theta.size();
    if (budget < 0 || budget > n) throw ValidationError("budget must lie in [0, n]");
    const Eigen::VectorXd zeta = spillover_weights(theta);
    const int K = theta.K;
    std::vector<int> order(static_cast<std::size_t>(K));
    std::iota(order.begin(), order.end(), 0);
    auto gain = [&](int k) { return beta.beta1 + beta.beta2 * zeta[k]; };
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return gain(x) > gain(y); });

    std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(K));
    for (NodeId i = 0; i < n; ++i) members[theta.memberships[i]].push_back(i);
    BudgetedAllocation out;
    out.a.assign(static_cast<std::size_t>(n), 0);
    out.block_counts.assign(static_cast<std::size_t>(K), 0);
    int left = budget;
    for (int k : order) {
        if (left == 0 || gain(k) <= 0.0) break;
        const int take = std::min<int>(left, static_cast<int>(members[k].size()));
        for (int r = 0; r < take; ++r) out.a[members[k][r]] = 1;
        out.block_counts[k] = take;
        left -= take;
    }
    out.value = allocation_value(beta, theta, out.a);
    return out;
}

}  // namespace netpartial
