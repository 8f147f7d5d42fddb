#include "netpartial/experiments.hpp"

#include "netpartial/inference.hpp"
#include "netpartial/net_estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace netpartial {

namespace {

void add_estimate(std::vector<ResultRecord>& out, int rep, const std::string& method,
                  const GateEstimate& est, double truth) {
    const double err = est.estimate - truth;
    out.push_back({rep, method, "estimate", est.estimate});
    out.push_back({rep, method, "se", est.se});
    out.push_back({rep, method, "truth", truth});
    out.push_back({rep, method, "error", err});
    out.push_back({rep, method, "sq_error", err * err});
    if (std::isfinite(est.se)) {
        out.push_back({rep, method, "covered", std::abs(err) <= 1.959963984540054 * est.se ? 1.0 : 0.0});
    }
}

template <typename Fn>
void guarded(std::vector<ResultRecord>& out, int rep, const std::string& method, Fn&& fn) {
    try {
        fn();
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception&) {
        out.push_back({rep, method, "failed", 1.0});
    }
}

Eigen::MatrixXd normal_covariates(NodeId n, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::normal_distribution<double> z;
    Eigen::MatrixXd x(n, 1);
    for (NodeId i = 0; i < n; ++i) x(i, 0) = z(rng);
    return x;
}

std::vector<ResultRecord> flatten(std::vector<std::vector<ResultRecord>>& slots) {
    std::vector<ResultRecord> out;
    for (auto& s : slots) out.insert(out.end(), s.begin(), s.end());
    return out;
}

}  // namespace

std::vector<int> balanced_blocks(NodeId n, int K) {
    std::vector<int> b(static_cast<std::size_t>(n));
    for (NodeId i = 0; i < n; ++i) b[i] = static_cast<int>(static_cast<long long>(i) * K / n);
    return b;
}

TraitAssignment block_traits(std::span<const int> blocks, int K, int per_block, double fidelity,
                             std::uint64_t seed) {
    const int T = K * per_block;
    std::vector<int> labels(blocks.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const double u = counter_uniform(seed, i, 0);
        const double v = counter_uniform(seed, i, 1);
        if (u < fidelity || T == per_block) {
            labels[i] = blocks[i] * per_block + std::min(per_block - 1, static_cast<int>(v * per_block));
        } else {
            const int other = std::min(T - per_block - 1, static_cast<int>(v * (T - per_block)));
            labels[i] = other < blocks[i] * per_block ? other : other + per_block;
        }
    }
    return TraitAssignment::from_labels(labels, T);
}

ResultTable run_gate_study(const GateStudyConfig& c, std::uint64_t seed) {
    if (c.clusters < 2 || c.n < 2 * c.clusters || c.replications < 1 || c.L < 1) {
        throw ValidationError("gate study needs clusters >= 2, n >= 2 * clusters, replications, L >= 1");
    }
    const OutcomeModel model = c.model;
    validate_model(model);
    const FeatureMap features = FeatureMap::ugander(c.model.covariate);
    const int K = c.clusters;
    std::vector<std::vector<ResultRecord>> slots(static_cast<std::size_t>(c.replications));
    parallel_for(slots.size(), [&](std::size_t r) {
        auto& out = slots[r];
        const int rep = static_cast<int>(r);
        const std::uint64_t s = derive_seed(seed, r, 0x6a7e);

        SbmParams truth_params{K, Eigen::MatrixXd(K, K), balanced_blocks(c.n, K)};
        const double inside = static_cast<double>(c.n) / K - 1.0;
        const double outside = static_cast<double>(c.n) - static_cast<double>(c.n) / K;
        for (int k = 0; k < K; ++k) {
            for (int l = k; l < K; ++l) {
                const double u = counter_uniform(s, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(l));
                truth_params.P(k, l) = truth_params.P(l, k) = std::min(
                    1.0, k == l ? (c.in_degree_low + u * (c.in_degree_high - c.in_degree_low)) / inside
                                : (c.out_degree_low + u * (c.out_degree_high - c.out_degree_low)) / outside);
            }
        }
        const Graph g = sample_sbm(truth_params, derive_seed(s, 1));
        const Eigen::MatrixXd x = normal_covariates(c.n, derive_seed(s, 2));
        const std::vector<int> clusters = detect_communities(g, K);

        std::vector<int> order(static_cast<std::size_t>(K));
        std::iota(order.begin(), order.end(), 0);
        Rng rng = make_rng(s, 3);
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<char> treated_cluster(static_cast<std::size_t>(K), 0);
        for (int k = 0; k < K / 2; ++k) treated_cluster[order[k]] = 1;
        TreatmentVector a(static_cast<std::size_t>(c.n));
        for (NodeId i = 0; i < c.n; ++i) a[i] = treated_cluster[clusters[i]];

        const std::vector<double> y = simulate_outcomes(model, g, a, x, derive_seed(s, 4));
        const double truth = true_gate(model, g, x, 0, derive_seed(s, 5));

        guarded(out, rep, "full-regression", [&] {
            const ConditionalGraphSampler full(NetModelEstimate{}, FullGraphObservation{g});
            const FitResult fit = fit_linear(y, features.evaluate(g, a, x));
            add_estimate(out, rep, "full-regression", plugin_gate(fit, full, x, features, 1, derive_seed(s, 6)),
                         truth);
        });
        guarded(out, rep, "ard-regression", [&] {
            const TraitAssignment traits = TraitAssignment::from_labels(clusters, K);
            ArdObservation obs{generate_ard(g, traits), traits};
            const std::vector<int> memberships = cluster_ard(obs.ard, obs.traits, K);
            NetModelEstimate theta = estimate_sbm_from_ard(obs.ard, obs.traits, memberships);
            const ConditionalGraphSampler sampler(std::move(theta), std::move(obs));
            const FitResult fit =
                fit_linear(y, average_features(sampler, a, x, features, c.L, derive_seed(s, 7)).mean);
            add_estimate(out, rep, "ard-regression",
                         plugin_gate(fit, sampler, x, features, c.L, derive_seed(s, 8)), truth);
        });
        guarded(out, rep, "HT", [&] {
            add_estimate(out, rep, "HT",
                         ht_estimator(y, a, g, ClusterDesign{clusters, K / 2}, Positivity::skip), truth);
        });
        guarded(out, rep, "DM", [&] { add_estimate(out, rep, "DM", dm_estimator(y, a), truth); });
    });
    ResultTable table;
    table.append(flatten(slots));
    summarize_errors(table, {"ard-regression", "full-regression", "HT", "DM"});
    return table;
}

ResultTable run_hearing_study(const HearingStudyConfig& c, std::uint64_t seed) {
    if (c.K < 1 || c.n < 2 * c.K || c.replications < 1 || c.L < 1 || c.mean_degree <= 0.0 ||
        c.in_out_ratio <= 0.0 || !(c.treat_p >= 0.0 && c.treat_p <= 1.0)) {
        throw ValidationError("hearing study parameters out of range");
    }
    const OutcomeModel model = c.model;
    validate_model(model);
    const FeatureMap features = FeatureMap::intercept_exposure(c.model.exposure());
    const double block = static_cast<double>(c.n) / c.K;
    const double p_out = c.mean_degree / (block * (c.in_out_ratio + c.K - 1));
    const double p_in = c.in_out_ratio * p_out;
    if (p_in > 1.0) throw ValidationError("hearing study mean degree too high for n");
    SbmParams params{c.K, Eigen::MatrixXd::Constant(c.K, c.K, p_out), balanced_blocks(c.n, c.K)};
    params.P.diagonal().setConstant(p_in);
    const std::string method = c.full_graph ? "mcem-full" : "mcem-ard";

    std::vector<std::vector<ResultRecord>> slots(static_cast<std::size_t>(c.replications));
    parallel_for(slots.size(), [&](std::size_t r) {
        auto& out = slots[r];
        const int rep = static_cast<int>(r);
        const std::uint64_t s = derive_seed(seed, r, 0x4ea7);
        const Graph g = sample_sbm(params, derive_seed(s, 1));
        TreatmentVector a(static_cast<std::size_t>(c.n));
        for (NodeId i = 0; i < c.n; ++i) a[i] = counter_uniform(derive_seed(s, 2), i, 0) < c.treat_p ? 1 : 0;
        const Eigen::MatrixXd x(c.n, 0);
        const std::vector<double> y = simulate_outcomes(model, g, a, x, derive_seed(s, 3));
        guarded(out, rep, method, [&] {
            std::optional<ConditionalGraphSampler> sampler;
            if (c.full_graph) {
                sampler.emplace(NetModelEstimate{}, FullGraphObservation{g});
            } else {
                const TraitAssignment traits =
                    block_traits(params.memberships, c.K, c.traits_per_block, c.trait_fidelity, derive_seed(s, 4));
                ArdObservation obs{generate_ard(g, traits), traits};
                const std::vector<int> memberships = cluster_ard(obs.ard, obs.traits, c.K);
                NetModelEstimate theta = estimate_sbm_from_ard(obs.ard, obs.traits, memberships);
                sampler.emplace(std::move(theta), std::move(obs));
            }
            const FitResult fit = fit_logistic_em(y, *sampler, a, x, features, c.L, derive_seed(s, 5));
            const double err = fit.beta[1] - c.model.alpha1;
            out.push_back({rep, method, "alpha0_hat", fit.beta[0]});
            out.push_back({rep, method, "alpha1_hat", fit.beta[1]});
            out.push_back({rep, method, "error", err});
            out.push_back({rep, method, "sq_error", err * err});
            out.push_back({rep, method, "em_iterations", static_cast<double>(fit.diagnostics.iterations)});
            if (fit.diagnostics.separation) out.push_back({rep, method, "separation", 1.0});
        });
    });
    ResultTable table;
    table.append(flatten(slots));
    summarize_errors(table, {method});
    return table;
}

ResultTable run_seeding_study(const SeedingStudyConfig& c, std::uint64_t seed) {
    if (c.K < 1 || c.n < c.K || c.budget < 1 || c.L < 1 || c.graphs < 1 || c.sims_per_graph < 1) {
        throw ValidationError("seeding study parameters out of range");
    }
    const OutcomeModel model = c.model;
    validate_model(model);
    SbmParams params{c.K, Eigen::MatrixXd::Constant(c.K, c.K, c.p_out), balanced_blocks(c.n, c.K)};
    params.P.diagonal().setConstant(c.p_in);
    params.validate();
    const Eigen::MatrixXd x(c.n, 0);
    const std::vector<int> one_block(static_cast<std::size_t>(c.n), 0);
    const std::vector<int> whole_budget{c.budget};
    const SeedPlacement by_degree{SeedPlacement::Kind::ranked, {}};

    // Graph-level work runs serially so optimal_seeding can use the pool.
    ResultTable table;
    for (int r = 0; r < c.graphs; ++r) {
        const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(r), 0x5eed);
        const Graph g = sample_sbm(params, derive_seed(s, 1));
        const std::vector<int> communities = detect_communities(g, c.K);
        const TraitAssignment traits = TraitAssignment::from_labels(communities, c.K);
        ArdObservation obs{generate_ard(g, traits), traits};
        const std::vector<int> blocks = cluster_ard(obs.ard, obs.traits, c.K);
        SeedPlacement ranked{SeedPlacement::Kind::ranked, std::vector<double>(static_cast<std::size_t>(c.n))};
        for (NodeId i = 0; i < c.n; ++i) ranked.priority[i] = obs.ard.counts.row(i).sum();
        try {
            NetModelEstimate theta = estimate_sbm_from_ard(obs.ard, obs.traits, blocks);
            const ConditionalGraphSampler sampler(std::move(theta), std::move(obs));
            const SeedingResult best =
                optimal_seeding(model, sampler, x, c.budget, blocks, c.L, ranked, derive_seed(s, 2));
            const SeedPlacement random_in_block{};
            const struct {
                const char* name;
                TreatmentVector a;
            } arms[] = {
                {"degree", place_seeds(g, one_block, whole_budget, by_degree, 0)},
                {"optimal-block", place_seeds(g, blocks, best.best, ranked, 0)},
                {"optimal-block-random", place_seeds(g, blocks, best.best, random_in_block, derive_seed(s, 3))},
            };
            for (const auto& arm : arms) {
                std::vector<double> adoption(static_cast<std::size_t>(c.sims_per_graph));
                parallel_for(adoption.size(), [&](std::size_t k) {
                    const auto y = simulate_outcomes(model, g, arm.a, x, derive_seed(s, k, 0x0c));
                    adoption[k] = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(c.n);
                });
                table.add(r, arm.name, "adoption",
                          std::accumulate(adoption.begin(), adoption.end(), 0.0) /
                              static_cast<double>(adoption.size()));
            }
            table.add(r, "optimal-block", "predicted_adoption", best.mean);
        } catch (const NumericalError&) {
            table.add(r, "optimal-block", "failed", 1.0);
        }
    }
    for (const char* m : {"degree", "optimal-block", "optimal-block-random"}) {
        const auto v = table.series(m, "adoption");
        double sum = 0.0;
        for (auto [rep, val] : v) sum += val;
        table.add(-1, m, "adoption", v.empty() ? std::nan("") : sum / static_cast<double>(v.size()));
    }
    return table;
}

}  // namespace netpartial
