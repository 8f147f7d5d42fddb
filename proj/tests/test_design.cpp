#include "fixtures.hpp"

#include "netpartial/design.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace netpartial;

namespace {

FeatureMap intercept_treatment() {
    using K = FeatureAtom::Kind;
    FeatureMap f;
    f.terms = {{FeatureAtom{K::intercept, 0}}, {FeatureAtom{K::own_treatment, 0}}};
    return f;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

ConditionalGraphSampler full_sampler(const Graph& g) { return {NetModelEstimate{}, FullGraphObservation{g}}; }

}  // namespace

TEST_CASE("saturation assignment rounds half up within each cluster") {
    std::vector<int> labels(10);
    for (int i = 0; i < 10; ++i) labels[i] = i < 4 ? 0 : 1;
    const auto c = DesignClusters::from_labels(labels);
    CHECK(c.sizes == std::vector<int>{4, 6});
    const auto a = saturation_assignment(c, vec({0.375, 0.25}), 3);
    CHECK(std::accumulate(a.begin(), a.begin() + 4, 0) == 2);  // 1.5 -> 2
    CHECK(std::accumulate(a.begin() + 4, a.end(), 0) == 2);    // 1.5 -> 2
    CHECK(a == saturation_assignment(c, vec({0.375, 0.25}), 3));
    CHECK_THROWS_AS(saturation_assignment(c, vec({1.5, 0.0}), 3), ValidationError);
}

TEST_CASE("eval_saturation_variance") {
    const NodeId n = 400;
    const Graph g(n);
    const auto one = DesignClusters::from_labels(std::vector<int>(n, 0));
    const auto sampler = full_sampler(g);
    const Eigen::MatrixXd none(n, 0);
    const NoiseCovariance sigma{NoiseCovariance::Kind::independent, 2.0, 0.0, {}};
    SUBCASE("everyone treated is collinear and scores the penalty") {
        const SaturationOptions opt{1, 3, 99.0, 1e8};
        const auto v = eval_saturation_variance(vec({1.0}), one, sampler, none, intercept_treatment(), vec({0, 1}),
                                                sigma, opt, 1);
        CHECK(v.value == 99.0);
        CHECK(v.singular_draws == 3);
        SaturationOptions strict = opt;
        strict.penalty.reset();
        CHECK_THROWS_WITH(eval_saturation_variance(vec({1.0}), one, sampler, none, intercept_treatment(),
                                                   vec({0, 1}), sigma, strict, 1),
                          doctest::Contains("degenerate design"));
    }
    SUBCASE("balanced binary regressor gives sigma2 / (n / 4)") {
        const SaturationOptions opt{1, 200, {}, 1e8};
        const auto v = eval_saturation_variance(vec({0.5}), one, sampler, none, intercept_treatment(), vec({0, 1}),
                                                sigma, opt, 2);
        CHECK(v.value == doctest::Approx(2.0 / (n * 0.25)).epsilon(0.1));
        const auto twice = eval_saturation_variance(vec({0.5}), one, sampler, none, intercept_treatment(),
                                                    vec({0, 2}), sigma, opt, 2);
        CHECK(twice.value == doctest::Approx(4.0 * v.value).epsilon(1e-12));
    }
    SUBCASE("relabeling clusters with permuted saturations changes nothing") {
        const Graph r = sample_sbm(SbmParams{1, Eigen::MatrixXd::Constant(1, 1, 0.05), std::vector<int>(120, 0)}, 3);
        std::vector<int> labels(120), swapped(120);
        for (int i = 0; i < 120; ++i) {
            labels[i] = i % 3;
            swapped[i] = (labels[i] + 1) % 3;
        }
        const FeatureMap f = FeatureMap::intercept_exposure(TreatedFraction{});
        const SaturationOptions opt{1, 5, {}, 1e8};
        const auto s = full_sampler(r);
        const NoiseCovariance iid{};
        const double a = eval_saturation_variance(vec({0.2, 0.5, 0.8}), DesignClusters::from_labels(labels), s,
                                                  Eigen::MatrixXd(120, 0), f, vec({0, 1}), iid, opt, 4)
                             .value;
        const double b = eval_saturation_variance(vec({0.8, 0.2, 0.5}), DesignClusters::from_labels(swapped), s,
                                                  Eigen::MatrixXd(120, 0), f, vec({0, 1}), iid, opt, 4)
                             .value;
        CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
}

TEST_CASE("estimating-equation variance") {
    const NodeId n = 200;
    const Graph g = sample_sbm(SbmParams{1, Eigen::MatrixXd::Constant(1, 1, 0.03), std::vector<int>(n, 0)}, 5);
    const auto sampler = full_sampler(g);
    const auto clusters = DesignClusters::from_labels(std::vector<int>(n, 0));
    const FeatureMap f = FeatureMap::intercept_exposure(TreatedCount{});
    const Eigen::MatrixXd none(n, 0);
    const NoiseCovariance sigma{NoiseCovariance::Kind::independent, 1.5, 0.0, {}};
    const SaturationOptions opt{1, 4, {}, 1e8};
    const double ols = eval_saturation_variance(vec({0.3}), clusters, sampler, none, f, vec({0, 1}), sigma, opt, 6).value;
    SUBCASE("logistic at zero is sixteen times the linear form") {
        const ZWorking w{Link::logistic, vec({0, 0}), sigma};
        const double z = eval_saturation_variance_z(vec({0.3}), clusters, sampler, none, f, vec({0, 1}), w, opt, 6).value;
        CHECK(z == doctest::Approx(16.0 * ols).epsilon(1e-9));
    }
    SUBCASE("identity link matches the linear form") {
        const ZWorking w{Link::identity, vec({0.4, -1.0}), sigma};
        const double z = eval_saturation_variance_z(vec({0.3}), clusters, sampler, none, f, vec({0, 1}), w, opt, 6).value;
        CHECK(z == doctest::Approx(ols).epsilon(1e-9));
    }
    SUBCASE("zero Gamma") {
        const ZWorking w{Link::logistic, vec({0.1, 0.2}), Eigen::MatrixXd::Zero(2, 2)};
        CHECK(eval_saturation_variance_z(vec({0.3}), clusters, sampler, none, f, vec({0, 1}), w, opt, 6).value == 0.0);
    }
}

TEST_CASE("GP surrogate") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const int m = 5 + static_cast<int>(s);
        Eigen::MatrixXd X(m, 2);
        Eigen::VectorXd y(m);
        for (int i = 0; i < m; ++i) {
            X(i, 0) = counter_uniform(s, i, 0);
            X(i, 1) = counter_uniform(s, i, 1);
            y[i] = std::sin(3 * X(i, 0)) + X(i, 1) * X(i, 1);
        }
        const double alpha0 = 0.7;
        GpSurrogate gp(alpha0, y.mean());
        gp.fit(X, y);
        const double tol = std::sqrt(10.0 * gp.jitter() * alpha0);
        for (int i = 0; i < m; ++i) {
            const Eigen::VectorXd x = X.row(i).transpose();
            CHECK(std::abs(gp.mean(x) - y[i]) <= 1e-3);
            CHECK(gp.sd(x) <= tol);
            CHECK(gp.acquisition(x, 2.0) <= y[i] + 1e-3);
        }
        CHECK(gp.sd(vec({5.0, 5.0})) == doctest::Approx(std::sqrt(alpha0)));
    }
    CHECK_THROWS_AS(GpSurrogate(0.0, 0.0), ValidationError);
}

TEST_CASE("halton points") {
    const Eigen::MatrixXd h = halton(4, 2);
    CHECK(h(0, 0) == 0.5);
    CHECK(h(1, 0) == 0.25);
    CHECK(h(0, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(h(2, 1) == doctest::Approx(1.0 / 9.0));
}

TEST_CASE("bayes_opt_saturation") {
    const auto domain = DesignClusters::from_labels(std::vector<int>{0, 1});
    const DesignObjective bowl = [](const Eigen::VectorXd& t) {
        return SaturationValue{(t.array() - 0.5).matrix().squaredNorm(), 0.0, 0};
    };
    SUBCASE("runs the requested number of evaluations") {
        const auto r = bayes_opt_saturation(bowl, domain, BayesOptOptions{20, 20, 2.0, 512}, 3);
        CHECK(r.trace.size() == 40);
        CHECK((r.best_tau.array() - 0.5).abs().maxCoeff() <= 0.05);
    }
    SUBCASE("no adaptive steps returns the best pilot") {
        const auto r = bayes_opt_saturation(bowl, domain, BayesOptOptions{10, 0, 2.0, 512}, 4);
        REQUIRE(r.trace.size() == 10);
        double best = 1e9;
        for (const auto& e : r.trace) best = std::min(best, e.value);
        CHECK(r.best_value == best);
    }
    SUBCASE("budget constraint is respected") {
        auto tight = DesignClusters::from_labels(std::vector<int>{0, 1}, 0.6);
        const auto r = bayes_opt_saturation(bowl, tight, BayesOptOptions{8, 6, 2.0, 128}, 5);
        for (const auto& e : r.trace) CHECK(e.tau.sum() <= 0.6 + 1e-12);
    }
    SUBCASE("singular evaluations are penalized") {
        const DesignObjective holey = [](const Eigen::VectorXd& t) {
            if (t[0] > 0.5) throw NumericalError("degenerate design");
            return SaturationValue{t.squaredNorm() + 1.0, 0.0, 0};
        };
        const auto r = bayes_opt_saturation(holey, domain, BayesOptOptions{12, 5, 2.0, 64}, 6);
        CHECK(r.best_tau[0] <= 0.5);
    }
    SUBCASE("n0 below two rejected") {
        CHECK_THROWS_AS(bayes_opt_saturation(bowl, domain, BayesOptOptions{1, 0, 2.0, 8}, 1), ValidationError);
    }
}

TEST_CASE("design_with_model_uncertainty") {
    const std::vector<Eigen::VectorXd> cands{vec({0.1}), vec({0.5}), vec({0.9})};
    SUBCASE("identical replicates reduce to the argmin") {
        const DesignObjective f = [](const Eigen::VectorXd& t) { return SaturationValue{std::abs(t[0] - 0.45), 0, 0}; };
        const auto r = design_with_model_uncertainty(cands, {f, f, f});
        CHECK(r.index == 1);
        CHECK(r.sd[1] == 0.0);
    }
    SUBCASE("a single candidate is returned") {
        const DesignObjective f = [](const Eigen::VectorXd&) { return SaturationValue{3.0, 0, 0}; };
        CHECK(design_with_model_uncertainty({vec({0.2})}, {f, f}).index == 0);
    }
    SUBCASE("a stable candidate beats a volatile one with lower mean") {
        // Candidate 0: values 0 and 2 (mean 1, sd 1.41); candidate 1: 1.2 in both.
        const std::vector<Eigen::VectorXd> two{vec({0.0}), vec({1.0})};
        const DesignObjective r1 = [](const Eigen::VectorXd& t) { return SaturationValue{t[0] > 0.5 ? 1.2 : 0.0, 0, 0}; };
        const DesignObjective r2 = [](const Eigen::VectorXd& t) { return SaturationValue{t[0] > 0.5 ? 1.2 : 2.0, 0, 0}; };
        const auto r = design_with_model_uncertainty(two, {r1, r2});
        CHECK(r.mean[0] < r.mean[1]);
        CHECK(r.index == 1);
    }
}

TEST_CASE("place_seeds") {
    const Graph g = fixtures::star(4);
    const std::vector<int> blocks{0, 0, 0, 1, 1};
    const SeedPlacement ranked{SeedPlacement::Kind::ranked, {}};
    const auto a = place_seeds(g, blocks, std::vector<int>{1, 1}, ranked, 1);
    CHECK(a == TreatmentVector{1, 0, 0, 1, 0});
    const SeedPlacement custom{SeedPlacement::Kind::ranked, {0, 0, 5, 0, 9}};
    CHECK(place_seeds(g, blocks, std::vector<int>{1, 1}, custom, 1) == TreatmentVector{0, 0, 1, 0, 1});
    const SeedPlacement random{};
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto r = place_seeds(g, blocks, std::vector<int>{2, 1}, random, s);
        CHECK(std::accumulate(r.begin(), r.begin() + 3, 0) == 2);
        CHECK(std::accumulate(r.begin() + 3, r.end(), 0) == 1);
    }
    CHECK_THROWS_AS(place_seeds(g, blocks, std::vector<int>{4, 0}, random, 1), ValidationError);
}

TEST_CASE("enumerate_allocations") {
    const auto all = enumerate_allocations(2, 3);
    CHECK(all.size() == 6);
    CHECK(all.front() == std::vector<int>{0, 0, 2});
    CHECK(all.back() == std::vector<int>{2, 0, 0});
    CHECK(enumerate_allocations(0, 2) == std::vector<std::vector<int>>{{0, 0}});
}

TEST_CASE("optimal_seeding") {
    const Eigen::MatrixXd none(10, 0);
    const Graph g = fixtures::cliques(2, 5);
    std::vector<int> blocks(10, 0);
    std::fill(blocks.begin() + 5, blocks.end(), 1);
    const auto sampler = full_sampler(g);
    const ComplexContagion m{2.0, 0.0, 3};
    SUBCASE("concentrated seeding cascades, split seeding does not") {
        const auto r = optimal_seeding(m, sampler, none, 2, blocks, 4, SeedPlacement{}, 7);
        REQUIRE(r.trace.size() == 3);
        CHECK((r.best == std::vector<int>{0, 2} || r.best == std::vector<int>{2, 0}));
        CHECK(r.best == std::vector<int>{0, 2});  // lexicographic tie-break
        CHECK(r.mean == doctest::Approx(0.5));
        for (const auto& t : r.trace)
            if (t.allocation == std::vector<int>{1, 1}) CHECK(t.mean == doctest::Approx(0.2));
    }
    SUBCASE("zero budget gives the baseline") {
        const auto r = optimal_seeding(m, sampler, none, 0, blocks, 2, SeedPlacement{}, 7);
        CHECK(r.mean == 0.0);
        CHECK(r.trace.size() == 1);
    }
    SUBCASE("oversized allocations are skipped") {
        const std::vector<int> lopsided{0, 0, 0, 0, 0, 0, 0, 0, 0, 1};
        const auto r = optimal_seeding(m, sampler, none, 2, lopsided, 2, SeedPlacement{}, 7);
        CHECK(r.skipped == std::vector<std::vector<int>>{{0, 2}});
        CHECK(r.trace.size() == 2);
    }
    SUBCASE("local diffusion favours the denser block") {
        Eigen::MatrixXd P(2, 2);
        P << 0.3, 0.02, 0.02, 0.1;
        std::vector<int> z(40);
        for (int i = 0; i < 40; ++i) z[i] = i < 20 ? 0 : 1;
        NetModelEstimate theta;
        theta.sbm = SbmParams{2, P, z};
        const TraitAssignment t = TraitAssignment::from_labels(z, 2);
        const ConditionalGraphSampler s(theta, ArdObservation{generate_ard(sample_sbm(theta.sbm, 1), t), t});
        const auto r = optimal_seeding(LocalDiffusion{0.5}, s, Eigen::MatrixXd(40, 0), 3, z, 2000, SeedPlacement{}, 9);
        // Trace is lexicographic: (0,3), (1,2), (2,1), (3,0).
        REQUIRE(r.trace.size() == 4);
        for (int k = 1; k < 4; ++k) CHECK(r.trace[k].mean > r.trace[k - 1].mean);
        CHECK(r.best == std::vector<int>{3, 0});
    }
}

TEST_CASE("budgeted allocation") {
    Eigen::MatrixXd P(3, 3);
    P << 0.5, 0.1, 0.05, 0.1, 0.2, 0.1, 0.05, 0.1, 0.4;
    std::vector<int> z(30);
    for (int i = 0; i < 30; ++i) z[i] = i / 10;
    const SbmParams theta{3, P, z};
    SUBCASE("no spillover: any B nodes") {
        const LinearAllocationModel m{1.0, 2.0, 0.0};
        const auto r = budgeted_allocation(m, theta, 7);
        CHECK(std::accumulate(r.a.begin(), r.a.end(), 0) == 7);
        CHECK(r.value == doctest::Approx(1.0 + 2.0 * 7 / 30));
    }
    SUBCASE("pure spillover goes to the block with the largest zeta") {
        const LinearAllocationModel m{0.0, 0.0, 1.0};
        const Eigen::VectorXd zeta = spillover_weights(theta);
        Eigen::Index best;
        zeta.maxCoeff(&best);
        const auto r = budgeted_allocation(m, theta, 6);
        CHECK(r.block_counts[best] == 6);
    }
    SUBCASE("saturated budget and out-of-range budget") {
        const LinearAllocationModel m;
        CHECK(budgeted_allocation(m, theta, 30).a == TreatmentVector(30, 1));
        CHECK_THROWS_AS(budgeted_allocation(m, theta, 31), ValidationError);
    }
    SUBCASE("dominates random feasible assignments") {
        const LinearAllocationModel m{0.5, -0.2, 1.3};
        const auto best = budgeted_allocation(m, theta, 12);
        Rng rng = make_rng(3);
        for (int trial = 0; trial < 1000; ++trial) {
            TreatmentVector a(30, 0);
            std::vector<int> idx(30);
            std::iota(idx.begin(), idx.end(), 0);
            std::shuffle(idx.begin(), idx.end(), rng);
            const int b = static_cast<int>(rng() % 13);
            for (int k = 0; k < b; ++k) a[idx[k]] = 1;
            CHECK(best.value >= allocation_value(m, theta, a) - 1e-12);
        }
    }
}
