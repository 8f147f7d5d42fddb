#include "fixtures.hpp"

#include "netpartial/graph.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace netpartial;

TEST_CASE("graph construction merges duplicates and rejects bad edges") {
    const std::vector<Edge> e{{0, 1}, {1, 0}, {1, 2}};
    const Graph g = Graph::from_edges(3, e);
    CHECK(g.edge_count() == 2);
    CHECK(g.degree(1) == 2);
    CHECK(g.has_edge(1, 0));
    CHECK_FALSE(g.has_edge(0, 2));
    CHECK(g.mean_degree() == doctest::Approx(4.0 / 3.0));
    const std::vector<Edge> loop{{1, 1}};
    CHECK_THROWS_AS(Graph::from_edges(3, loop), ValidationError);
    const std::vector<Edge> far{{0, 3}};
    CHECK_THROWS_AS(Graph::from_edges(3, far), ValidationError);
}

TEST_CASE("sample_sbm small cases") {
    SUBCASE("probability one block gives the complete graph") {
        const SbmParams p{1, Eigen::MatrixXd::Ones(1, 1), {0, 0, 0}};
        CHECK(sample_sbm(p, 1) == fixtures::complete(3));
    }
    SUBCASE("block-diagonal certainty gives two 2-cliques") {
        const SbmParams p{2, Eigen::MatrixXd::Identity(2, 2), {0, 0, 1, 1}};
        CHECK(sample_sbm(p, 9) == fixtures::cliques(2, 2));
    }
    SUBCASE("empty referenced block is rejected") {
        const SbmParams p{2, Eigen::MatrixXd::Identity(2, 2), {0, 0, 0}};
        CHECK_THROWS_AS(sample_sbm(p, 1), ValidationError);
    }
    SUBCASE("asymmetric or out-of-range P is rejected") {
        Eigen::MatrixXd P(2, 2);
        P << 0.5, 0.1, 0.2, 0.5;
        CHECK_THROWS_AS(sample_sbm(SbmParams{2, P, {0, 1}}, 1), ValidationError);
        P << 0.5, 1.5, 1.5, 0.5;
        CHECK_THROWS_AS(sample_sbm(SbmParams{2, P, {0, 1}}, 1), ValidationError);
    }
}

TEST_CASE("sample_sbm edge count matches the binomial mean") {
    const NodeId n = 200;
    const SbmParams p{1, Eigen::MatrixXd::Constant(1, 1, 0.5), std::vector<int>(n, 0)};
    const int draws = 500;
    double sum = 0.0;
    for (int s = 0; s < draws; ++s) sum += static_cast<double>(sample_sbm(p, s).edge_count());
    const double dyads = n * (n - 1) / 2.0;
    const double se = std::sqrt(dyads * 0.25 / draws);
    CHECK(std::abs(sum / draws - 0.5 * dyads) <= 3.0 * se);
}

TEST_CASE("pooled sbm block frequencies converge to P") {
    const NodeId n = 500;
    Eigen::MatrixXd P(2, 2);
    P << 0.05, 0.01, 0.01, 0.08;
    std::vector<int> z(n);
    for (NodeId i = 0; i < n; ++i) z[i] = i < 200 ? 0 : 1;
    const SbmParams p{2, P, z};
    Eigen::MatrixXd edges = Eigen::MatrixXd::Zero(2, 2);
    const int draws = 200;
    for (int s = 0; s < draws; ++s) {
        for (const auto& [i, j] : sample_sbm(p, 1000 + s).edges()) {
            edges(std::min(z[i], z[j]), std::max(z[i], z[j])) += 1.0;
        }
    }
    const double dyads[2][2] = {{200.0 * 199 / 2, 200.0 * 300}, {0, 300.0 * 299 / 2}};
    double chi2 = 0.0;
    for (int a = 0; a < 2; ++a) {
        for (int b = a; b < 2; ++b) {
            const double N = dyads[a][b] * draws;
            const double expected = N * P(a, b);
            chi2 += (edges(a, b) - expected) * (edges(a, b) - expected) / (expected * (1.0 - P(a, b)));
        }
    }
    // 3 degrees of freedom; 16.27 is the 0.999 quantile.
    CHECK(chi2 < 16.27);
}

TEST_CASE("sampled graphs are symmetric and seed-deterministic") {
    for (std::uint64_t s = 0; s < 30; ++s) {
        const int K = 1 + static_cast<int>(s % 4);
        Eigen::MatrixXd P(K, K);
        for (int a = 0; a < K; ++a)
            for (int b = a; b < K; ++b) P(a, b) = P(b, a) = counter_uniform(s, a, b);
        std::vector<int> z(40);
        for (int i = 0; i < 40; ++i) z[i] = i % K;
        const SbmParams p{K, P, z};
        const Graph g = sample_sbm(p, s);
        CHECK(fixtures::symmetric_simple(g));
        CHECK(g == sample_sbm(p, s));
    }
    const SbmParams half{1, Eigen::MatrixXd::Constant(1, 1, 0.5), std::vector<int>(50, 0)};
    CHECK_FALSE(sample_sbm(half, 1) == sample_sbm(half, 2));
}

TEST_CASE("sample_beta_model") {
    CHECK(sample_beta_model(BetaParams{{1.0, 1.0, 1.0}}, 3) == fixtures::complete(3));
    CHECK_THROWS_AS(sample_beta_model(BetaParams{{0.0, 1.0}}, 3), ValidationError);
    const NodeId n = 100;
    const BetaParams p{std::vector<double>(n, 0.5)};
    const int draws = 500;
    double sum = 0.0;
    for (int s = 0; s < draws; ++s) sum += static_cast<double>(sample_beta_model(p, s).edge_count());
    const double dyads = n * (n - 1) / 2.0;
    const double se = std::sqrt(dyads * 0.25 * 0.75 / draws);
    CHECK(std::abs(sum / draws - 0.25 * dyads) <= 3.0 * se);
}

TEST_CASE("matrix_power_apply") {
    const Graph g = fixtures::path(3);
    const std::vector<double> v{1, 0, 0};
    CHECK(matrix_power_apply(g, v, 0) == v);
    CHECK(matrix_power_apply(g, v, 1) == std::vector<double>{0, 1, 0});
    CHECK(matrix_power_apply(g, v, 2) == std::vector<double>{1, 0, 1});
}

TEST_CASE("matrix powers compose and agree with dense powers") {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const NodeId n = 3 + static_cast<NodeId>(s % 10);
        const SbmParams p{1, Eigen::MatrixXd::Constant(1, 1, 0.4), std::vector<int>(n, 0)};
        const Graph g = sample_sbm(p, s);
        std::vector<double> v(n);
        for (NodeId i = 0; i < n; ++i) v[i] = std::floor(10.0 * counter_uniform(s, i, 7));
        const int t = 1 + static_cast<int>(s % 3), u = 2;
        CHECK(matrix_power_apply(g, v, t + u) == matrix_power_apply(g, matrix_power_apply(g, v, t), u));
        const Eigen::MatrixXd A = fixtures::dense(g);
        Eigen::VectorXd dv = Eigen::Map<const Eigen::VectorXd>(v.data(), n);
        for (int k = 0; k < t; ++k) dv = A * dv;
        const auto got = matrix_power_apply(g, v, t);
        for (NodeId i = 0; i < n; ++i) CHECK(got[i] == dv[i]);
    }
}

TEST_CASE("detect_communities") {
    SUBCASE("two disjoint 3-cliques") {
        CHECK(detect_communities(fixtures::cliques(2, 3), 2) == std::vector<int>{0, 0, 0, 1, 1, 1});
    }
    SUBCASE("k = n gives singletons") {
        const auto z = detect_communities(fixtures::path(5), 5);
        CHECK(z == std::vector<int>{0, 1, 2, 3, 4});
    }
    SUBCASE("complete graph, k = 1") {
        CHECK(detect_communities(fixtures::complete(6), 1) == std::vector<int>(6, 0));
    }
    SUBCASE("k > n rejected") {
        CHECK_THROWS_AS(detect_communities(fixtures::path(3), 4), ValidationError);
    }
    SUBCASE("more groups than the modularity peak are obtained by splitting") {
        const auto z = detect_communities(fixtures::cliques(2, 6), 4);
        CHECK(std::set<int>(z.begin(), z.end()).size() == 4);
        for (NodeId i = 0; i < 6; ++i)
            for (NodeId j = 6; j < 12; ++j) CHECK(z[i] != z[j]);
    }
    SUBCASE("planted blocks are recovered and the result is deterministic") {
        Eigen::MatrixXd P = Eigen::MatrixXd::Constant(4, 4, 0.01);
        P.diagonal().setConstant(0.3);
        std::vector<int> truth(120);
        for (int i = 0; i < 120; ++i) truth[i] = i / 30;
        const Graph g = sample_sbm(SbmParams{4, P, truth}, 5);
        const auto z = detect_communities(g, 4);
        CHECK(z == detect_communities(g, 4));
        CHECK(z == canonical_labels(truth));
    }
}

TEST_CASE("canonical_labels orders groups by first node") {
    const std::vector<int> z{2, 2, 0, 1, 0};
    CHECK(canonical_labels(z) == std::vector<int>{0, 0, 1, 2, 1});
}
