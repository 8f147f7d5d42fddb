#include "netpartial/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>

namespace netpartial {

// ─── Conditional graph draws ─────────────────────────────────────

ConditionalGraphSampler::ConditionalGraphSampler(NetModelEstimate theta, PartialNetwork gstar)
    : theta_(std::move(theta)), gstar_(std::move(gstar)) {
    if (const auto* full = std::get_if<FullGraphObservation>(&gstar_)) {
        n_ = full->graph.size();
        return;
    }
    if (const auto* ard = std::get_if<ArdObservation>(&gstar_)) {
        n_ = ard->ard.size();
    } else {
        const auto& s = std::get<SubgraphSample>(gstar_);
        s.validate();
        n_ = s.population;
        std::vector<Edge> seen = s.edges;
        if (s.kind == SampleKind::rds) seen.insert(seen.end(), s.boundary.begin(), s.boundary.end());
        observed_ = Graph::from_edges(n_, seen);
        sampled_.assign(static_cast<std::size_t>(n_), 0);
        for (NodeId v : s.nodes) sampled_[v] = 1;
    }
    if (theta_.size() != n_) {
        throw ValidationError("network model has " + std::to_string(theta_.size()) +
                              " nodes but the observation covers " + std::to_string(n_));
    }
    if (theta_.kind == ModelKind::sbm) {
        theta_.sbm.validate(false);
    } else {
        theta_.beta.validate();
    }
}

bool ConditionalGraphSampler::exact() const {
    if (std::holds_alternative<FullGraphObservation>(gstar_)) return true;
    if (const auto* s = std::get_if<SubgraphSample>(&gstar_)) {
        return s->kind != SampleKind::masked && static_cast<NodeId>(s->nodes.size()) == n_;
    }
    return false;
}

Graph ConditionalGraphSampler::draw(std::uint64_t seed) const {
    if (const auto* full = std::get_if<FullGraphObservation>(&gstar_)) return full->graph;
    if (std::holds_alternative<ArdObservation>(gstar_)) return sample_from(theta_, seed);
    const auto kind = std::get<SubgraphSample>(gstar_).kind;
    return sample_dyad_independent(
        n_,
        [&](NodeId i, NodeId j) {
            const bool known = kind == SampleKind::induced ? (sampled_[i] && sampled_[j])
                               : kind == SampleKind::rds   ? (sampled_[i] || sampled_[j])
                                                           : false;
            if (known) return observed_.has_edge(i, j) ? 1.0 : 0.0;
            if (kind == SampleKind::masked && observed_.has_edge(i, j)) return 1.0;
            return theta_.edge_probability(i, j);
        },
        seed);
}

std::vector<Eigen::MatrixXd> draw_features(const ConditionalGraphSampler& sampler,
                                           std::span<const int> a,
                                           const Eigen::MatrixXd& covariates,
                                           const FeatureMap& features, int L, std::uint64_t seed) {
    if (L < 1) throw ValidationError("need at least one graph draw (L >= 1)");
    validate_treatment(a, sampler.size());
    std::vector<Eigen::MatrixXd> draws(static_cast<std::size_t>(L));
    if (sampler.exact()) {
        const Eigen::MatrixXd h = features.evaluate(sampler.draw(seed), a, covariates);
        std::fill(draws.begin(), draws.end(), h);
        return draws;
    }
    parallel_for(draws.size(), [&](std::size_t l) {
        draws[l] = features.evaluate(sampler.draw(derive_seed(seed, l, 0x96)), a, covariates);
    });
    return draws;
}

FeatureAverage summarize_features(const std::vector<Eigen::MatrixXd>& draws) {
    if (draws.empty()) throw ValidationError("no feature draws to average");
    const auto L = static_cast<double>(draws.size());
    FeatureAverage out;
    out.L = static_cast<int>(draws.size());
    out.mean = Eigen::MatrixXd::Zero(draws[0].rows(), draws[0].cols());
    for (const auto& d : draws) out.mean += d;
    out.mean /= L;
    out.se = Eigen::MatrixXd::Zero(out.mean.rows(), out.mean.cols());
    if (draws.size() > 1) {
        for (const auto& d : draws) out.se += (d - out.mean).cwiseAbs2();
        out.se = (out.se / (L - 1.0) / L).cwiseSqrt();
    }
    return out;
}

FeatureAverage average_features(const ConditionalGraphSampler& sampler, std::span<const int> a,
                                const Eigen::MatrixXd& covariates, const FeatureMap& features,
                                int L, std::uint64_t seed) {
    return summarize_features(draw_features(sampler, a, covariates, features, L, seed));
}

// ─── Linear fit ──────────────────────────────────────────────────

namespace {

double spectral_condition(const Eigen::MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

// Sum of score outer products under the working covariance, with the usual
// small-sample factor.
Eigen::MatrixXd meat(const Eigen::MatrixXd& scores, const WorkingCov& working, int p) {
    const auto n = scores.rows();
    const double dof = n > p ? static_cast<double>(n) / static_cast<double>(n - p) : 1.0;
    if (working.kind == WorkingCovKind::independent) return dof * scores.transpose() * scores;
    if (static_cast<Eigen::Index>(working.clusters.size()) != n) {
        throw ValidationError("cluster working covariance needs one cluster label per node");
    }
    std::map<int, Eigen::VectorXd> sums;
    for (Eigen::Index i = 0; i < n; ++i) {
        auto [it, fresh] = sums.try_emplace(working.clusters[i], Eigen::VectorXd::Zero(scores.cols()));
        it->second += scores.row(i).transpose();
    }
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(scores.cols(), scores.cols());
    for (const auto& [c, s] : sums) m += s * s.transpose();
    const double G = static_cast<double>(sums.size());
    if (G > 1 && n > p) m *= G / (G - 1.0) * (n - 1.0) / static_cast<double>(n - p);
    return m;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

FitResult fit_linear(std::span<const double> y, const Eigen::MatrixXd& features,
                     const WorkingCov& working, double cond_cap) {
    const auto n = features.rows();
    const auto p = features.cols();
    if (static_cast<Eigen::Index>(y.size()) != n) throw ValidationError("outcome length does not match features");
    if (n <= p) throw ValidationError("need more observations than features");
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
    const Eigen::MatrixXd hessian = features.transpose() * features / static_cast<double>(n);
    FitResult fit;
    fit.link = Link::identity;
    fit.working = working.kind;
    fit.diagnostics.cond = spectral_condition(hessian);
    if (!(fit.diagnostics.cond <= cond_cap)) throw NumericalError("collinear averaged features");
    const Eigen::LDLT<Eigen::MatrixXd> solver(hessian);
    fit.beta = solver.solve(features.transpose() * yv / static_cast<double>(n));
    const Eigen::VectorXd u = yv - features * fit.beta;
    const Eigen::MatrixXd scores = features.array().colwise() * u.array();
    const Eigen::MatrixXd bread = solver.solve(Eigen::MatrixXd::Identity(p, p)) / static_cast<double>(n);
    fit.cov = symmetrize(bread * meat(scores, working, static_cast<int>(p)) * bread);
    fit.diagnostics.log_likelihood = -0.5 * u.squaredNorm();
    return fit;
}

// ─── Monte-Carlo EM logistic fit ─────────────────────────────────

namespace {

double log1pexp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double bernoulli_logpmf(double y, double eta) { return y * eta - log1pexp(eta); }

// n x L matrix of log P(Y_i | h_il; beta).
Eigen::MatrixXd log_probs(std::span<const double> y, const std::vector<Eigen::MatrixXd>& draws,
                          const Eigen::VectorXd& beta) {
    const auto n = draws[0].rows();
    Eigen::MatrixXd lp(n, static_cast<Eigen::Index>(draws.size()));
    for (std::size_t l = 0; l < draws.size(); ++l) {
        const Eigen::VectorXd eta = draws[l] * beta;
        for (Eigen::Index i = 0; i < n; ++i) lp(i, static_cast<Eigen::Index>(l)) = bernoulli_logpmf(y[i], eta[i]);
    }
    return lp;
}

// Row-wise log-mean-exp and normalized mixture weights w_il.
Eigen::VectorXd mixture_terms(const Eigen::MatrixXd& lp, Eigen::MatrixXd* weights) {
    const auto L = static_cast<double>(lp.cols());
    Eigen::VectorXd out(lp.rows());
    if (weights) weights->resize(lp.rows(), lp.cols());
    for (Eigen::Index i = 0; i < lp.rows(); ++i) {
        const double mx = lp.row(i).maxCoeff();
        const Eigen::ArrayXd e = (lp.row(i).array() - mx).exp();
        const double s = e.sum();
        out[i] = mx + std::log(s / L);
        if (weights) weights->row(i) = (e * (L / s)).matrix().transpose();
    }
    return out;
}

void validate_em_inputs(std::span<const double> y, const std::vector<Eigen::MatrixXd>& draws) {
    if (draws.empty()) throw ValidationError("need at least one graph draw (L >= 1)");
    const auto n = draws[0].rows();
    if (static_cast<Eigen::Index>(y.size()) != n) throw ValidationError("outcome length does not match features");
    for (const auto& d : draws) {
        if (d.rows() != n || d.cols() != draws[0].cols()) throw ValidationError("feature draws differ in shape");
    }
    for (double v : y) {
        if (v != 0.0 && v != 1.0) throw ValidationError("logistic outcomes must be 0 or 1");
    }
}

}  // namespace

double mixture_loglik(std::span<const double> y, const std::vector<Eigen::MatrixXd>& draws,
                      const Eigen::VectorXd& beta) {
    validate_em_inputs(y, draws);
    return mixture_terms(log_probs(y, draws, beta), nullptr).sum();
}

FitResult fit_logistic_em(std::span<const double> y, const std::vector<Eigen::MatrixXd>& draws,
                          const EmOptions& options) {
    validate_em_inputs(y, draws);
    const auto n = draws[0].rows();
    const auto p = draws[0].cols();
    const auto L = static_cast<Eigen::Index>(draws.size());
    FitResult fit;
    fit.link = Link::logistic;
    fit.working = options.working.kind;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd w;
    double loglik = mixture_terms(log_probs(y, draws, beta), &w).sum();
    fit.diagnostics.loglik_trace.push_back(loglik);
    fit.diagnostics.converged = false;

    for (int iter = 1; iter <= options.max_iters; ++iter) {
        // M-step: maximize sum_il (w_il / L) log P(Y_i | h_il; b) by damped Newton.
        auto q_value = [&](const Eigen::VectorXd& b) {
            double q = 0.0;
            for (Eigen::Index l = 0; l < L; ++l) {
                const Eigen::VectorXd eta = draws[l] * b;
                for (Eigen::Index i = 0; i < n; ++i) q += w(i, l) * bernoulli_logpmf(y[i], eta[i]);
            }
            return q / static_cast<double>(L);
        };
        Eigen::VectorXd b = beta;
        double qb = q_value(b);
        bool newton_done = false;
        for (int step = 0; step < options.newton_iters; ++step) {
            Eigen::VectorXd grad = Eigen::VectorXd::Zero(p);
            Eigen::MatrixXd info = Eigen::MatrixXd::Zero(p, p);
            for (Eigen::Index l = 0; l < L; ++l) {
                const Eigen::VectorXd eta = draws[l] * b;
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double pr = logistic(eta[i]);
                    const auto h = draws[l].row(i).transpose();
                    grad += w(i, l) * (y[i] - pr) * h;
                    info += w(i, l) * pr * (1.0 - pr) * h * h.transpose();
                }
            }
            const Eigen::VectorXd delta = info.ldlt().solve(grad);
            if (!delta.allFinite()) break;
            double scale = 1.0;
            Eigen::VectorXd trial = b + delta;
            double qt = q_value(trial);
            while (qt < qb && scale > 1e-10) {
                scale *= 0.5;
                trial = b + scale * delta;
                qt = q_value(trial);
            }
            if (qt < qb) {
                newton_done = true;  // no ascent direction left at working precision
                break;
            }
            b = trial;
            qb = qt;
            if ((scale * delta).lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + b.lpNorm<Eigen::Infinity>())) {
                newton_done = true;
                break;
            }
            if (b.lpNorm<Eigen::Infinity>() > 30.0) break;
        }
        const Eigen::VectorXd change = b - beta;
        beta = b;
        loglik = mixture_terms(log_probs(y, draws, beta), &w).sum();
        fit.diagnostics.loglik_trace.push_back(loglik);
        fit.diagnostics.iterations = iter;
        if (beta.lpNorm<Eigen::Infinity>() > 30.0) {
            fit.diagnostics.separation = true;
            break;
        }
        if (!newton_done) throw NumericalError("Newton iterations did not converge in the M-step");
        if (change.lpNorm<Eigen::Infinity>() <= options.tol) {
            fit.diagnostics.converged = true;
            break;
        }
    }
    fit.beta = beta;
    fit.diagnostics.log_likelihood = loglik;

    // Sandwich covariance from the per-node mixture scores and Hessians.
    Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(n, p);
    Eigen::MatrixXd neg_hessian = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index l = 0; l < L; ++l) {
        const Eigen::VectorXd eta = draws[l] * beta;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double pr = logistic(eta[i]);
            const double r = y[i] - pr;
            const auto h = draws[l].row(i).transpose();
            scores.row(i) += (w(i, l) * r / static_cast<double>(L)) * h.transpose();
            neg_hessian -= (w(i, l) * (r * r - pr * (1.0 - pr)) / static_cast<double>(L)) * h * h.transpose();
        }
    }
    neg_hessian += scores.transpose() * scores;
    fit.diagnostics.cond = spectral_condition(symmetrize(neg_hessian));
    const Eigen::MatrixXd bread = neg_hessian.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
    fit.cov = symmetrize(bread * meat(scores, options.working, static_cast<int>(p)) * bread.transpose());
    return fit;
}

FitResult fit_logistic_em(std::span<const double> y, const ConditionalGraphSampler& sampler,
                          std::span<const int> a, const Eigen::MatrixXd& covariates,
                          const FeatureMap& features, int L, std::uint64_t seed,
                          const EmOptions& options) {
    return fit_logistic_em(y, draw_features(sampler, a, covariates, features, L, seed), options);
}

// ─── Plug-in estimands ───────────────────────────────────────────

PsiValue psi_from_draws(const FitResult& fit, const std::vector<Eigen::MatrixXd>& draws) {
    if (draws.empty()) throw ValidationError("no feature draws");
    const auto p = fit.beta.size();
    PsiValue out;
    out.gradient = Eigen::VectorXd::Zero(p);
    double count = 0.0;
    for (const auto& h : draws) {
        if (h.cols() != p) throw ValidationError("feature map does not match the fitted coefficients");
        const Eigen::VectorXd eta = h * fit.beta;
        for (Eigen::Index i = 0; i < h.rows(); ++i) {
            if (fit.link == Link::identity) {
                out.value += eta[i];
                out.gradient += h.row(i).transpose();
            } else {
                const double pr = logistic(eta[i]);
                out.value += pr;
                out.gradient += pr * (1.0 - pr) * h.row(i).transpose();
            }
        }
        count += static_cast<double>(h.rows());
    }
    out.value /= count;
    out.gradient /= count;
    return out;
}

namespace {

double delta_se(const Eigen::VectorXd& q, const Eigen::MatrixXd& cov) {
    return std::sqrt(std::max(0.0, q.dot(cov * q)));
}

}  // namespace

GateEstimate plugin_psi(const FitResult& fit, const ConditionalGraphSampler& sampler,
                        std::span<const int> a_target, const Eigen::MatrixXd& covariates,
                        const FeatureMap& features, int L, std::uint64_t seed) {
    const PsiValue psi = psi_from_draws(fit, draw_features(sampler, a_target, covariates, features, L, seed));
    return {psi.value, delta_se(psi.gradient, fit.cov), "regression-plug-in"};
}

GateEstimate plugin_gate(const FitResult& fit, const ConditionalGraphSampler& sampler,
                         const Eigen::MatrixXd& covariates, const FeatureMap& features, int L,
                         std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(sampler.size());
    const TreatmentVector ones(n, 1), zeros(n, 0);
    // Same seed for both arms: identical graph draws.
    const PsiValue p1 = psi_from_draws(fit, draw_features(sampler, ones, covariates, features, L, seed));
    const PsiValue p0 = psi_from_draws(fit, draw_features(sampler, zeros, covariates, features, L, seed));
    return {p1.value - p0.value, delta_se(p1.gradient - p0.gradient, fit.cov), "regression-plug-in"};
}

// ─── Design-based baselines ──────────────────────────────────────

std::pair<std::vector<double>, std::vector<double>> exposure_probabilities(
    const Graph& g, const AssignmentDistribution& design) {
    const NodeId n = g.size();
    std::vector<double> p1(static_cast<std::size_t>(n)), p0(static_cast<std::size_t>(n));
    if (const auto* b = std::get_if<BernoulliDesign>(&design)) {
        if (!(b->p >= 0.0 && b->p <= 1.0)) throw ValidationError("Bernoulli p must lie in [0,1]");
        for (NodeId i = 0; i < n; ++i) {
            p1[i] = std::pow(b->p, 1 + g.degree(i));
            p0[i] = std::pow(1.0 - b->p, 1 + g.degree(i));
        }
        return {p1, p0};
    }
    const auto& c = std::get<ClusterDesign>(design);
    if (static_cast<NodeId>(c.clusters.size()) != n) throw ValidationError("cluster design needs one label per node");
    const std::set<int> distinct(c.clusters.begin(), c.clusters.end());
    const int C = static_cast<int>(distinct.size());
    if (c.treated < 0 || c.treated > C) throw ValidationError("treated cluster count out of range");
    for (NodeId i = 0; i < n; ++i) {
        std::set<int> touched{c.clusters[i]};
        for (NodeId j : g.neighbors(i)) touched.insert(c.clusters[j]);
        const int k = static_cast<int>(touched.size());
        double a = 1.0, b = 1.0;
        for (int r = 0; r < k; ++r) {
            a *= std::max(0.0, static_cast<double>(c.treated - r)) / (C - r);
            b *= std::max(0.0, static_cast<double>(C - c.treated - r)) / (C - r);
        }
        p1[i] = a;
        p0[i] = b;
    }
    return {p1, p0};
}

GateEstimate ht_estimator(std::span<const double> y, std::span<const int> a, const Graph& g,
                          const AssignmentDistribution& design, Positivity positivity) {
    const NodeId n = g.size();
    validate_treatment(a, n);
    if (static_cast<NodeId>(y.size()) != n) throw ValidationError("outcome length does not match graph");
    const auto [p1, p0] = exposure_probabilities(g, design);
    double total = 0.0;
    double used = 0.0;
    for (NodeId i = 0; i < n; ++i) {
        if (p1[i] <= 0.0 || p0[i] <= 0.0) {
            if (positivity == Positivity::strict) {
                throw ValidationError("positivity violation at node " + std::to_string(i));
            }
            continue;
        }
        bool all1 = a[i] == 1, all0 = a[i] == 0;
        for (NodeId j : g.neighbors(i)) {
            all1 = all1 && a[j] == 1;
            all0 = all0 && a[j] == 0;
        }
        total += (all1 ? y[i] / p1[i] : 0.0) - (all0 ? y[i] / p0[i] : 0.0);
        used += 1.0;
    }
    if (used == 0.0) throw ValidationError("positivity violation at every node");
    return {total / used, std::numeric_limits<double>::quiet_NaN(), "HT"};
}

GateEstimate dm_estimator(std::span<const double> y, std::span<const int> a) {
    if (y.size() != a.size()) throw ValidationError("outcome and treatment lengths differ");
    double s1 = 0, s0 = 0, n1 = 0, n0 = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (a[i] == 1) {
            s1 += y[i];
            n1 += 1;
        } else if (a[i] == 0) {
            s0 += y[i];
            n0 += 1;
        } else {
            throw ValidationError("treatments must be 0 or 1");
        }
    }
    if (n1 == 0 || n0 == 0) throw ValidationError("difference in means needs both arms nonempty");
    const double m1 = s1 / n1, m0 = s0 / n0;
    double v1 = 0, v0 = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (a[i] == 1) {
            v1 += (y[i] - m1) * (y[i] - m1);
        } else {
            v0 += (y[i] - m0) * (y[i] - m0);
        }
    }
    v1 = n1 > 1 ? v1 / (n1 - 1) : 0.0;
    v0 = n0 > 1 ? v0 / (n0 - 1) : 0.0;
    return {m1 - m0, std::sqrt(v1 / n1 + v0 / n0), "DM"};
}

}  // namespace netpartial
