#include "fixtures.hpp"

#include "netpartial/outcomes.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace netpartial;

namespace {

// Dense oracle: self_weight * a + sum_t w_t A^t a.
std::vector<double> dense_hearing(const Graph& g, const std::vector<int>& a, const Hearing& h) {
    const Eigen::MatrixXd A = fixtures::dense(g);
    Eigen::VectorXd av(g.size());
    for (NodeId i = 0; i < g.size(); ++i) av[i] = a[i];
    Eigen::VectorXd out = h.self_weight * av;
    Eigen::MatrixXd At = Eigen::MatrixXd::Identity(g.size(), g.size());
    for (int t = 1; t <= h.T; ++t) {
        At = At * A;
        const double w = h.weights.empty() ? std::pow(h.q, t) : h.weights[t - 1];
        out += w * At * av;
    }
    return {out.data(), out.data() + out.size()};
}

Graph random_graph(NodeId n, double p, std::uint64_t seed) {
    return sample_sbm(SbmParams{1, Eigen::MatrixXd::Constant(1, 1, p), std::vector<int>(n, 0)}, seed);
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

}  // namespace

TEST_CASE("compute_exposure") {
    SUBCASE("treated fraction with every neighbour treated") {
        const Graph g = Graph::from_edges(4, std::vector<Edge>{{0, 1}, {1, 2}});
        const auto r = compute_exposure(g, std::vector<int>(4, 1), TreatedFraction{});
        CHECK(r.values == std::vector<double>{1, 1, 1, 0});
        CHECK(r.flagged == std::vector<char>{0, 0, 0, 1});
    }
    SUBCASE("hearing on a path") {
        const auto r = compute_exposure(fixtures::path(3), std::vector<int>{1, 0, 0}, Hearing{2, 0.5, {}, 0.0});
        CHECK(r.values[0] == doctest::Approx(0.25));
        CHECK(r.values[1] == doctest::Approx(0.5));
        CHECK(r.values[2] == doctest::Approx(0.25));
    }
    SUBCASE("treated count with no treatment") {
        const auto r = compute_exposure(fixtures::complete(5), std::vector<int>(5, 0), TreatedCount{});
        CHECK(r.values == std::vector<double>(5, 0.0));
    }
    SUBCASE("indicator and risk share") {
        const Graph g = fixtures::path(4);
        const std::vector<int> a{1, 0, 0, 0};
        CHECK(compute_exposure(g, a, NeighborTreatedIndicator{}).values == std::vector<double>{0, 1, 0, 0});
        const auto rs = compute_exposure(g, a, RiskShare{{0, 0, 1, 1}}).values;
        CHECK(rs[0] == doctest::Approx(0.5));
        CHECK(rs[1] == doctest::Approx(0.5));
        CHECK(rs[3] == 0.0);
    }
    SUBCASE("hearing rejects T < 1 and q outside [0,1]") {
        CHECK_THROWS_AS(validate_exposure(Hearing{0, 0.5, {}, 0.0}, 3), ValidationError);
        CHECK_THROWS_AS(validate_exposure(Hearing{2, 1.5, {}, 0.0}, 3), ValidationError);
    }
}

TEST_CASE("hearing exposure matches dense matrix powers") {
    for (std::uint64_t s = 0; s < 40; ++s) {
        const NodeId n = 2 + static_cast<NodeId>(s % 11);
        const Graph g = random_graph(n, 0.4, s);
        std::vector<int> a(n);
        for (NodeId i = 0; i < n; ++i) a[i] = counter_uniform(s, i, 3) < 0.4;
        const Hearing geometric{1 + static_cast<int>(s % 4), 0.3 + 0.01 * s, {}, 0.0};
        const Hearing weighted{3, 0.0, {0.5, 0.05, 0.005}, 0.25};
        for (const Hearing& h : {geometric, weighted}) {
            const auto got = compute_exposure(g, a, h).values;
            const auto want = dense_hearing(g, a, h);
            for (NodeId i = 0; i < n; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("simulate_outcomes") {
    const Eigen::MatrixXd none(0, 0);
    SUBCASE("noise-free Ugander baseline is the degree ratio") {
        const Graph g = fixtures::star(4);
        const UganderLinear m{1.0, 0.0, 1.0, -0.5, 0.0, 0};
        const auto y = simulate_outcomes(m, g, std::vector<int>(5, 0), none, 1);
        const double dbar = g.mean_degree();
        for (NodeId i = 0; i < 5; ++i) CHECK(y[i] == doctest::Approx(g.degree(i) / dbar));
    }
    SUBCASE("threshold contagion on cliques") {
        const ComplexContagion m{2.0, 0.0, 2};
        const Graph one = fixtures::complete(5);
        CHECK(simulate_outcomes(m, one, std::vector<int>{1, 1, 0, 0, 0}, none, 3) == std::vector<double>(5, 1.0));
        const Graph two = fixtures::cliques(2, 5);
        std::vector<int> split(10, 0);
        split[0] = split[5] = 1;
        const auto y = simulate_outcomes(m, two, split, none, 3);
        CHECK(std::accumulate(y.begin(), y.end(), 0.0) == 2.0);
    }
    SUBCASE("hearing with alpha1 = 0 ignores treatment") {
        const HearingLogistic m{0.4, 0.0, {0.0, 0.5}};
        const Graph g = random_graph(4000, 0.001, 2);
        std::vector<int> a(4000, 0);
        for (int i = 0; i < 4000; i += 2) a[i] = 1;
        const auto y1 = simulate_outcomes(m, g, a, none, 9);
        const auto y0 = simulate_outcomes(m, g, std::vector<int>(4000, 0), none, 9);
        CHECK(y1 == y0);
        const double p = logistic(0.4);
        CHECK(std::abs(mean(y1) - p) <= 3.0 * std::sqrt(p * (1 - p) / 4000));
    }
    SUBCASE("missing covariates rejected") {
        const UganderLinear m;
        CHECK_THROWS_AS(simulate_outcomes(m, fixtures::path(3), std::vector<int>(3, 0), none, 1), ValidationError);
    }
    SUBCASE("seed determinism and automorphism equivariance") {
        const Graph g = fixtures::star(4);
        const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(5, 1);
        const UganderLinear m{1.0, 1.0, 1.0, -0.5, 0.0, 0};
        const std::vector<int> a{0, 1, 0, 0, 0}, swapped{0, 0, 1, 0, 0};
        CHECK(simulate_outcomes(m, g, a, x, 4) == simulate_outcomes(m, g, a, x, 4));
        const auto y = simulate_outcomes(m, g, a, x, 4);
        const auto ys = simulate_outcomes(m, g, swapped, x, 4);
        CHECK(y[0] == ys[0]);
        CHECK(y[1] == ys[2]);
        CHECK(y[2] == ys[1]);
    }
}

TEST_CASE("local diffusion hearing frequency is q times the indicator") {
    const Graph g = fixtures::path(4);
    const std::vector<int> a{1, 0, 0, 0};
    const LocalDiffusion m{0.3};
    const int draws = 10000;
    std::vector<double> freq(4, 0.0);
    for (int d = 0; d < draws; ++d) {
        const auto y = simulate_outcomes(m, g, a, Eigen::MatrixXd(0, 0), d);
        for (int i = 0; i < 4; ++i) freq[i] += y[i] / draws;
    }
    const double se = std::sqrt(0.3 * 0.7 / draws);
    CHECK(std::abs(freq[1] - 0.3) <= 3.0 * se);
    CHECK(freq[0] == 0.0);
    CHECK(freq[2] == 0.0);
    CHECK(freq[3] == 0.0);
}

TEST_CASE("contagion adoption is monotone in the seed set") {
    const ComplexContagion m{2.0, 0.0, 3};
    for (std::uint64_t s = 0; s < 12; ++s) {
        const NodeId n = 5 + static_cast<NodeId>(s % 4);
        const Graph g = random_graph(n, 0.5, s);
        const int subsets = 1 << n;
        std::vector<std::vector<double>> adopted(static_cast<std::size_t>(subsets));
        for (int mask = 0; mask < subsets; ++mask) {
            std::vector<int> a(n);
            for (NodeId i = 0; i < n; ++i) a[i] = (mask >> i) & 1;
            adopted[mask] = simulate_outcomes(m, g, a, Eigen::MatrixXd(0, 0), 17);
        }
        bool monotone = true;
        for (int mask = 0; mask < subsets; ++mask) {
            for (NodeId extra = 0; extra < n; ++extra) {
                const int bigger = mask | (1 << extra);
                for (NodeId i = 0; i < n; ++i) monotone = monotone && adopted[bigger][i] >= adopted[mask][i];
            }
        }
        CHECK(monotone);
    }
}

TEST_CASE("truncated normal draws stay nonnegative") {
    Rng rng = make_rng(4);
    double total = 0.0;
    for (int i = 0; i < 2000; ++i) {
        const double v = truncated_normal(0.1, 1.0, rng);
        CHECK(v >= 0.0);
        total += v;
    }
    // Mean of N(0.1, 1) truncated at 0: 0.1 + phi(0.1) / Phi(0.1).
    const double alpha = -0.1;
    const double phi = std::exp(-0.5 * alpha * alpha) / std::sqrt(2 * M_PI);
    const double tail = 0.5 * std::erfc(alpha / std::sqrt(2.0));
    CHECK(total / 2000 == doctest::Approx(0.1 + phi / tail).epsilon(0.05));
    CHECK(truncated_normal(-1.0, 0.0, rng) == 0.0);
}

TEST_CASE("true_gate") {
    const Graph g = fixtures::cliques(3, 4);
    const Eigen::MatrixXd none(0, 0);
    SUBCASE("degree ratio averages to one") {
        CHECK(true_gate(UganderLinear{1.0, 0.0, 1.0, -0.5, 0.0, 0}, random_graph(50, 0.2, 3), none, 0, 1) ==
              doctest::Approx(0.5));
    }
    SUBCASE("no effect") {
        CHECK(true_gate(UganderLinear{1.0, 0.0, 0.0, 0.0, 0.5, 0}, g, none, 0, 1) == 0.0);
    }
    SUBCASE("default parameters give half the mean control outcome") {
        const Graph r = random_graph(80, 0.1, 6);
        Eigen::MatrixXd x(80, 1);
        for (int i = 0; i < 80; ++i) x(i, 0) = counter_uniform(6, i, 0) - 0.5;
        const UganderLinear m;
        const double psi0 = mean_potential_outcome(m, r, std::vector<int>(80, 0), x, 0, 1);
        CHECK(true_gate(m, r, x, 0, 1) == doctest::Approx(0.5 * psi0));
    }
    SUBCASE("Monte-Carlo gate for contagion") {
        // Everyone seeded adopts; nobody seeded adopts nobody.
        CHECK(true_gate(ComplexContagion{2.0, 0.1, 3}, g, none, 20, 1) == doctest::Approx(1.0));
        CHECK(true_gate(LocalDiffusion{0.4}, g, none, 0, 1) == doctest::Approx(0.4));
    }
}

TEST_CASE("feature maps") {
    const Graph g = fixtures::star(3);
    const std::vector<int> a{0, 1, 1, 0};
    Eigen::MatrixXd x(4, 1);
    x << 1, 2, 3, 4;
    const Eigen::MatrixXd h = FeatureMap::ugander().evaluate(g, a, x);
    REQUIRE(h.cols() == 6);
    const double dbar = g.mean_degree();
    // Centre: r = 3/dbar, two treated neighbours.
    CHECK(h(0, 0) == doctest::Approx(3 / dbar));
    CHECK(h(0, 1) == doctest::Approx(3 / dbar * 1));
    CHECK(h(0, 2) == 0.0);
    CHECK(h(0, 4) == doctest::Approx(2 / dbar));
    CHECK(h(1, 2) == doctest::Approx(1 / dbar));
    CHECK(h(1, 5) == 0.0);
    const Eigen::MatrixXd ie = FeatureMap::intercept_exposure(TreatedCount{}).evaluate(g, a, x);
    CHECK(ie.col(0).isOnes());
    CHECK(ie(0, 1) == 2.0);
}
