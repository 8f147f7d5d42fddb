#include "netpartial/outcomes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace netpartial {

void validate_treatment(std::span<const int> a, NodeId n) {
    if (static_cast<NodeId>(a.size()) != n) {
        throw ValidationError("treatment vector has length " + std::to_string(a.size()) +
                              ", expected " + std::to_string(n));
    }
    for (int v : a) {
        if (v != 0 && v != 1) throw ValidationError("treatments must be 0 or 1");
    }
}

double logistic(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double truncated_normal(double mean, double sd, Rng& rng) {
    if (sd < 0) throw ValidationError("standard deviation must be nonnegative");
    if (sd == 0) return std::max(mean, 0.0);
    std::normal_distribution<double> normal(mean, sd);
    for (int attempt = 0; attempt < 1000000; ++attempt) {
        const double x = normal(rng);
        if (x >= 0) return x;
    }
    throw NumericalError("truncated normal rejection sampler did not accept");
}

// ─── Exposures ───────────────────────────────────────────────────

void validate_exposure(const ExposureSpec& spec, NodeId n) {
    if (const auto* rs = std::get_if<RiskShare>(&spec)) {
        if (static_cast<NodeId>(rs->communities.size()) != n) {
            throw ValidationError("risk-share communities need one label per node");
        }
        for (int c : rs->communities) {
            if (c < 0) throw ValidationError("community labels must be nonnegative");
        }
    } else if (const auto* h = std::get_if<Hearing>(&spec)) {
        if (h->T < 1) throw ValidationError("hearing exposure needs T >= 1");
        if (!(h->q >= 0.0 && h->q <= 1.0)) throw ValidationError("hearing q must lie in [0,1]");
        if (!h->weights.empty() && static_cast<int>(h->weights.size()) != h->T) {
            throw ValidationError("hearing weights need one entry per step");
        }
        for (double w : h->weights) {
            if (!std::isfinite(w)) throw ValidationError("hearing weights must be finite");
        }
        if (!std::isfinite(h->self_weight)) throw ValidationError("hearing self weight must be finite");
    }
}

namespace {

std::vector<double> neighbour_sum(const Graph& g, std::span<const int> a) {
    std::vector<double> s(static_cast<std::size_t>(g.size()), 0.0);
    for (NodeId i = 0; i < g.size(); ++i) {
        for (NodeId j : g.neighbors(i)) s[i] += a[j];
    }
    return s;
}

}  // namespace

ExposureResult compute_exposure(const Graph& g, std::span<const int> a, const ExposureSpec& spec) {
    const NodeId n = g.size();
    validate_treatment(a, n);
    validate_exposure(spec, n);
    ExposureResult out;
    out.flagged.assign(static_cast<std::size_t>(n), 0);
    std::visit(
        [&](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, TreatedCount>) {
                out.values = neighbour_sum(g, a);
            } else if constexpr (std::is_same_v<S, TreatedFraction>) {
                out.values = neighbour_sum(g, a);
                for (NodeId i = 0; i < n; ++i) {
                    if (g.degree(i) == 0) {
                        out.values[i] = 0.0;
                        out.flagged[i] = 1;
                    } else {
                        out.values[i] /= g.degree(i);
                    }
                }
            } else if constexpr (std::is_same_v<S, NeighborTreatedIndicator>) {
                out.values = neighbour_sum(g, a);
                for (double& v : out.values) v = v > 0 ? 1.0 : 0.0;
            } else if constexpr (std::is_same_v<S, RiskShare>) {
                const int C = *std::max_element(s.communities.begin(), s.communities.end()) + 1;
                std::vector<double> total(static_cast<std::size_t>(C), 0.0), size(total);
                for (NodeId i = 0; i < n; ++i) {
                    total[s.communities[i]] += a[i];
                    size[s.communities[i]] += 1.0;
                }
                out.values.resize(static_cast<std::size_t>(n));
                for (NodeId i = 0; i < n; ++i) {
                    out.values[i] = total[s.communities[i]] / size[s.communities[i]];
                }
            } else {
                std::vector<double> cur(a.begin(), a.end());
                out.values.assign(static_cast<std::size_t>(n), 0.0);
                for (NodeId i = 0; i < n; ++i) out.values[i] = s.self_weight * cur[i];
                double qt = 1.0;
                for (int t = 1; t <= s.T; ++t) {
                    cur = matrix_power_apply(g, cur, 1);
                    qt *= s.q;
                    const double w = s.weights.empty() ? qt : s.weights[t - 1];
                    for (NodeId i = 0; i < n; ++i) out.values[i] += w * cur[i];
                }
            }
        },
        spec);
    return out;
}

// ─── Feature maps ────────────────────────────────────────────────

bool FeatureMap::uses_covariates() const {
    for (const auto& term : terms) {
        for (const auto& atom : term) {
            if (atom.kind == FeatureAtom::Kind::covariate) return true;
        }
    }
    return false;
}

bool FeatureMap::uses_treatment() const {
    for (const auto& term : terms) {
        for (const auto& atom : term) {
            if (atom.kind == FeatureAtom::Kind::own_treatment ||
                atom.kind == FeatureAtom::Kind::exposure) {
                return true;
            }
        }
    }
    return false;
}

void FeatureMap::validate(NodeId n, Eigen::Index covariate_cols) const {
    if (terms.empty()) throw ValidationError("feature map has no terms");
    for (const auto& e : exposures) validate_exposure(e, n);
    for (const auto& term : terms) {
        for (const auto& atom : term) {
            if (atom.kind == FeatureAtom::Kind::exposure &&
                (atom.index < 0 || atom.index >= static_cast<int>(exposures.size()))) {
                throw ValidationError("feature refers to exposure slot " +
                                      std::to_string(atom.index) + " which is not defined");
            }
            if (atom.kind == FeatureAtom::Kind::covariate &&
                (atom.index < 0 || atom.index >= covariate_cols)) {
                throw ValidationError("feature needs covariate column " +
                                      std::to_string(atom.index) + " but covariates are missing");
            }
        }
    }
}

Eigen::MatrixXd FeatureMap::evaluate(const Graph& g, std::span<const int> a,
                                     const Eigen::MatrixXd& covariates) const {
    const NodeId n = g.size();
    validate(n, covariates.rows() == n ? covariates.cols() : 0);
    std::vector<std::vector<double>> exposure_values;
    exposure_values.reserve(exposures.size());
    for (const auto& e : exposures) exposure_values.push_back(compute_exposure(g, a, e).values);
    const double dbar = g.mean_degree();

    Eigen::MatrixXd h = Eigen::MatrixXd::Ones(n, size());
    for (int c = 0; c < size(); ++c) {
        for (const auto& atom : terms[c]) {
            for (NodeId i = 0; i < n; ++i) {
                double v = 1.0;
                switch (atom.kind) {
                    case FeatureAtom::Kind::intercept: v = 1.0; break;
                    case FeatureAtom::Kind::own_treatment: v = a[i]; break;
                    case FeatureAtom::Kind::exposure: v = exposure_values[atom.index][i]; break;
                    case FeatureAtom::Kind::degree_ratio:
                        v = dbar > 0 ? g.degree(i) / dbar : 0.0;
                        break;
                    case FeatureAtom::Kind::covariate: v = covariates(i, atom.index); break;
                    case FeatureAtom::Kind::inverse_mean_degree: v = dbar > 0 ? 1.0 / dbar : 0.0; break;
                }
                h(i, c) *= v;
            }
        }
    }
    return h;
}

FeatureMap FeatureMap::ugander(int covariate_col) {
    using K = FeatureAtom::Kind;
    const FeatureAtom r{K::degree_ratio, 0}, x{K::covariate, covariate_col}, a{K::own_treatment, 0},
        count{K::exposure, 0}, inv{K::inverse_mean_degree, 0};
    FeatureMap f;
    f.exposures = {TreatedCount{}};
    f.terms = {{r}, {r, x}, {r, a}, {r, x, a}, {count, inv}, {count, inv, x}};
    return f;
}

FeatureMap FeatureMap::intercept_exposure(ExposureSpec exposure) {
    using K = FeatureAtom::Kind;
    FeatureMap f;
    f.exposures = {std::move(exposure)};
    f.terms = {{FeatureAtom{K::intercept, 0}}, {FeatureAtom{K::exposure, 0}}};
    return f;
}

// ─── Outcome models ──────────────────────────────────────────────

Hearing HearingLogistic::exposure() const {
    Hearing h;
    h.T = std::max<int>(1, static_cast<int>(beta.size()) - 1);
    h.self_weight = beta.empty() ? 0.0 : beta[0];
    h.weights.assign(static_cast<std::size_t>(h.T), 0.0);
    for (int t = 1; t < static_cast<int>(beta.size()); ++t) h.weights[t - 1] = beta[t];
    return h;
}

void validate_model(const OutcomeModel& model) {
    std::visit(
        [](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, UganderLinear>) {
                if (!(m.sigma >= 0)) throw ValidationError("sigma must be nonnegative");
                if (m.covariate < 0) throw ValidationError("covariate column must be nonnegative");
            } else if constexpr (std::is_same_v<M, HearingLogistic>) {
                if (m.beta.size() < 2) throw ValidationError("hearing model needs beta_0..beta_T with T >= 1");
                for (double b : m.beta) {
                    if (!std::isfinite(b)) throw ValidationError("hearing beta must be finite");
                }
            } else if constexpr (std::is_same_v<M, ComplexContagion>) {
                if (m.T < 1) throw ValidationError("contagion needs T >= 1");
                if (!(m.threshold_sd >= 0)) throw ValidationError("threshold sd must be nonnegative");
            } else if constexpr (std::is_same_v<M, LocalDiffusion>) {
                if (!(m.q >= 0 && m.q <= 1)) throw ValidationError("diffusion q must lie in [0,1]");
            } else {
                if (static_cast<int>(m.beta.size()) != m.features.size()) {
                    throw ValidationError("linear model needs one coefficient per feature");
                }
                if (!(m.sigma >= 0)) throw ValidationError("sigma must be nonnegative");
            }
        },
        model);
}

namespace {

std::vector<double> simulate_contagion(const ComplexContagion& m, const Graph& g,
                                       std::span<const int> a, std::uint64_t seed) {
    const NodeId n = g.size();
    Rng rng = make_rng(seed, 0xc0);
    std::vector<double> threshold(static_cast<std::size_t>(n));
    for (auto& t : threshold) t = truncated_normal(m.lambda, m.threshold_sd, rng);
    std::vector<char> infected(a.begin(), a.end());
    std::vector<int> count(static_cast<std::size_t>(n));
    for (int t = 1; t <= m.T; ++t) {
        std::fill(count.begin(), count.end(), 0);
        for (NodeId i = 0; i < n; ++i) {
            if (!infected[i]) continue;
            for (NodeId j : g.neighbors(i)) ++count[j];
        }
        bool changed = false;
        for (NodeId i = 0; i < n; ++i) {
            if (!infected[i] && count[i] >= threshold[i]) {
                infected[i] = 2;  // newly infected this round
                changed = true;
            }
        }
        for (auto& v : infected) v = v ? 1 : 0;
        if (!changed) break;
    }
    return {infected.begin(), infected.end()};
}

}  // namespace

std::vector<double> simulate_outcomes(const OutcomeModel& model, const Graph& g,
                                      std::span<const int> a, const Eigen::MatrixXd& covariates,
                                      std::uint64_t seed) {
    validate_model(model);
    const NodeId n = g.size();
    validate_treatment(a, n);
    std::vector<double> y(static_cast<std::size_t>(n), 0.0);
    std::visit(
        [&](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, UganderLinear>) {
                const bool needs_x = m.b != 0.0;
                if (needs_x && (covariates.rows() != n || covariates.cols() <= m.covariate)) {
                    throw ValidationError("outcome model needs covariate column " +
                                          std::to_string(m.covariate));
                }
                const double dbar = g.mean_degree();
                if (dbar <= 0) throw ValidationError("outcome model needs a graph with edges");
                Rng rng = make_rng(seed, 0x0a);
                std::normal_distribution<double> eps(0.0, 1.0);
                for (NodeId i = 0; i < n; ++i) {
                    const double x = needs_x ? covariates(i, m.covariate) : 0.0;
                    const double y0 = g.degree(i) / dbar * (m.alpha + m.b * x + m.sigma * eps(rng));
                    double frac = 0.0;
                    if (g.degree(i) > 0) {
                        for (NodeId j : g.neighbors(i)) frac += a[j];
                        frac /= g.degree(i);
                    }
                    y[i] = y0 * (1.0 + m.delta * a[i] + m.gamma * frac);
                }
            } else if constexpr (std::is_same_v<M, HearingLogistic>) {
                const auto v = compute_exposure(g, a, m.exposure()).values;
                for (NodeId i = 0; i < n; ++i) {
                    const double p = logistic(m.alpha0 + m.alpha1 * v[i]);
                    y[i] = counter_uniform(seed, 0x4ea7, static_cast<std::uint64_t>(i)) < p ? 1.0 : 0.0;
                }
            } else if constexpr (std::is_same_v<M, ComplexContagion>) {
                y = simulate_contagion(m, g, a, seed);
            } else if constexpr (std::is_same_v<M, LocalDiffusion>) {
                const auto v = compute_exposure(g, a, NeighborTreatedIndicator{}).values;
                for (NodeId i = 0; i < n; ++i) {
                    y[i] = counter_uniform(seed, 0xd1ff, static_cast<std::uint64_t>(i)) < m.q * v[i] ? 1.0 : 0.0;
                }
            } else {
                const Eigen::MatrixXd h = m.features.evaluate(g, a, covariates);
                const Eigen::VectorXd beta = Eigen::Map<const Eigen::VectorXd>(m.beta.data(), m.features.size());
                const Eigen::VectorXd mean = h * beta;
                Rng rng = make_rng(seed, 0x11);
                std::normal_distribution<double> eps(0.0, 1.0);
                for (NodeId i = 0; i < n; ++i) y[i] = mean[i] + (m.sigma > 0 ? m.sigma * eps(rng) : 0.0);
            }
        },
        model);
    return y;
}

double mean_potential_outcome(const OutcomeModel& model, const Graph& g, std::span<const int> a,
                              const Eigen::MatrixXd& covariates, int n_draws, std::uint64_t seed) {
    validate_model(model);
    const NodeId n = g.size();
    validate_treatment(a, n);
    if (n == 0) return 0.0;
    if (const auto* m = std::get_if<UganderLinear>(&model)) {
        // The noise has mean zero, so only the systematic part survives.
        UganderLinear quiet = *m;
        quiet.sigma = 0.0;
        const auto y = simulate_outcomes(quiet, g, a, covariates, seed);
        return std::accumulate(y.begin(), y.end(), 0.0) / n;
    }
    if (const auto* m = std::get_if<HearingLogistic>(&model)) {
        const auto v = compute_exposure(g, a, m->exposure()).values;
        double s = 0.0;
        for (double vi : v) s += logistic(m->alpha0 + m->alpha1 * vi);
        return s / n;
    }
    if (const auto* m = std::get_if<LocalDiffusion>(&model)) {
        const auto v = compute_exposure(g, a, NeighborTreatedIndicator{}).values;
        return m->q * std::accumulate(v.begin(), v.end(), 0.0) / n;
    }
    if (const auto* m = std::get_if<GenericLinear>(&model)) {
        GenericLinear quiet = *m;
        quiet.sigma = 0.0;
        const auto y = simulate_outcomes(quiet, g, a, covariates, seed);
        return std::accumulate(y.begin(), y.end(), 0.0) / n;
    }
    if (n_draws < 1) throw ValidationError("Monte-Carlo outcome mean needs n_draws >= 1");
    std::vector<double> per_draw(static_cast<std::size_t>(n_draws));
    parallel_for(per_draw.size(), [&](std::size_t r) {
        const auto y = simulate_outcomes(model, g, a, covariates, derive_seed(seed, r, 0x51));
        per_draw[r] = std::accumulate(y.begin(), y.end(), 0.0) / n;
    });
    return std::accumulate(per_draw.begin(), per_draw.end(), 0.0) / n_draws;
}

double true_gate(const OutcomeModel& model, const Graph& g, const Eigen::MatrixXd& covariates,
                 int n_draws, std::uint64_t seed) {
    const NodeId n = g.size();
    if (const auto* m = std::get_if<UganderLinear>(&model)) {
        validate_model(model);
        if (m->b != 0.0 && (covariates.rows() != n || covariates.cols() <= m->covariate)) {
            throw ValidationError("outcome model needs covariate column " + std::to_string(m->covariate));
        }
        const double dbar = g.mean_degree();
        if (dbar <= 0) throw ValidationError("outcome model needs a graph with edges");
        double s = 0.0;
        for (NodeId i = 0; i < n; ++i) {
            const double x = m->b != 0.0 ? covariates(i, m->covariate) : 0.0;
            const double spill = g.degree(i) > 0 ? m->gamma : 0.0;
            s += g.degree(i) / dbar * (m->alpha + m->b * x) * (m->delta + spill);
        }
        return s / n;
    }
    const TreatmentVector ones(static_cast<std::size_t>(n), 1), zeros(static_cast<std::size_t>(n), 0);
    return mean_potential_outcome(model, g, ones, covariates, n_draws, seed) -
           mean_potential_outcome(model, g, zeros, covariates, n_draws, seed);
}

}  // namespace netpartial
