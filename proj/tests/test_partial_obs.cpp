#include "fixtures.hpp"

#include "netpartial/partial_obs.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace netpartial;

TEST_CASE("generate_ard counts neighbours per trait") {
    SUBCASE("star with a trait-B centre and trait-A leaves") {
        const TraitAssignment t = TraitAssignment::from_labels(std::vector<int>{1, 0, 0, 0}, 2);
        const ArdMatrix x = generate_ard(fixtures::star(3), t);
        CHECK(x.counts(0, 0) == 3);
        CHECK(x.counts(0, 1) == 0);
        for (int leaf = 1; leaf <= 3; ++leaf) {
            CHECK(x.counts(leaf, 0) == 0);
            CHECK(x.counts(leaf, 1) == 1);
        }
    }
    SUBCASE("empty graph") {
        const TraitAssignment t = TraitAssignment::from_labels(std::vector<int>{0, 1, 1}, 2);
        CHECK(generate_ard(Graph(3), t).counts.isZero());
    }
    SUBCASE("complete graph with a single trait") {
        const TraitAssignment t = TraitAssignment::from_labels(std::vector<int>(4, 0), 1);
        CHECK((generate_ard(fixtures::complete(4), t).counts.array() == 3).all());
    }
    SUBCASE("row count mismatch rejected") {
        const TraitAssignment t = TraitAssignment::from_labels(std::vector<int>(3, 0), 1);
        CHECK_THROWS_AS(generate_ard(fixtures::complete(4), t), ValidationError);
    }
}

TEST_CASE("ARD row sums equal degrees and counts stay within trait sizes") {
    for (std::uint64_t s = 0; s < 25; ++s) {
        const NodeId n = 30;
        const SbmParams p{1, Eigen::MatrixXd::Constant(1, 1, 0.2 + 0.02 * s), std::vector<int>(n, 0)};
        const Graph g = sample_sbm(p, s);
        std::vector<int> labels(n);
        for (NodeId i = 0; i < n; ++i) labels[i] = static_cast<int>(counter_uniform(s, i, 1) * 4);
        const TraitAssignment t = TraitAssignment::from_labels(labels, 4);
        REQUIRE(t.exclusive_and_exhaustive());
        const ArdMatrix x = generate_ard(g, t);
        const Eigen::VectorXi nt = t.counts();
        for (NodeId i = 0; i < n; ++i) {
            CHECK(x.counts.row(i).sum() == g.degree(i));
            for (int k = 0; k < 4; ++k) CHECK((x.counts(i, k) >= 0 && x.counts(i, k) <= nt[k]));
        }
        // Overlapping traits keep the bound too.
        TraitAssignment overlap = t;
        for (NodeId i = 0; i < n; i += 3) overlap.indicators(i, (labels[i] + 1) % 4) = 1;
        const ArdMatrix xo = generate_ard(g, overlap);
        for (NodeId i = 0; i < n; ++i)
            for (int k = 0; k < 4; ++k) CHECK(xo.counts(i, k) <= overlap.counts()[k]);
    }
}

TEST_CASE("normalized ARD divides by trait size") {
    const TraitAssignment t = TraitAssignment::from_labels(std::vector<int>{1, 0, 0, 0}, 2);
    const Eigen::MatrixXd xd = generate_ard(fixtures::star(3), t).normalized(t);
    CHECK(xd(0, 0) == doctest::Approx(1.0));
    CHECK(xd(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("sample_induced_subgraph") {
    SUBCASE("m = n returns the full graph") {
        const Graph g = fixtures::cliques(2, 3);
        const auto s = sample_induced_subgraph(g, 6, std::vector<int>{0, 0, 0, 1, 1, 1}, 4);
        CHECK(s.nodes.size() == 6);
        CHECK(s.edges == g.edges());
        CHECK(s.induced_graph() == g);
    }
    SUBCASE("one node per clique has no induced edges") {
        const Graph g = fixtures::cliques(2, 2);
        const std::vector<int> z{0, 0, 1, 1};
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto s = sample_induced_subgraph(g, 2, z, seed);
            REQUIRE(s.nodes.size() == 2);
            CHECK(z[s.nodes[0]] != z[s.nodes[1]]);
            CHECK(s.edges.empty());
        }
    }
    SUBCASE("singleton blocks force the representatives") {
        const Graph g = fixtures::path(5);
        const std::vector<int> z{0, 0, 1, 0, 2};
        const auto s = sample_induced_subgraph(g, 3, z, 1);
        CHECK(std::count(s.nodes.begin(), s.nodes.end(), 2) == 1);
        CHECK(std::count(s.nodes.begin(), s.nodes.end(), 4) == 1);
    }
    SUBCASE("m below the block count rejected") {
        CHECK_THROWS_AS(sample_induced_subgraph(fixtures::path(4), 1, std::vector<int>{0, 0, 1, 1}, 1),
                        ValidationError);
    }
    SUBCASE("sample is seed-deterministic") {
        const Graph g = fixtures::complete(20);
        const std::vector<int> z(20, 0);
        CHECK(sample_induced_subgraph(g, 7, z, 3).nodes == sample_induced_subgraph(g, 7, z, 3).nodes);
    }
}

TEST_CASE("sample_rds") {
    SUBCASE("path recruits every node") {
        const std::vector<NodeId> seeds{0};
        const auto s = sample_rds(fixtures::path(3), seeds, 3, 2, 1);
        CHECK(s.nodes == std::vector<NodeId>{0, 1, 2});
        CHECK(s.edges.size() == 2);
    }
    SUBCASE("isolated seed") {
        const std::vector<NodeId> seeds{2};
        const auto s = sample_rds(Graph(4), seeds, 4, 2, 1);
        CHECK(s.nodes == std::vector<NodeId>{2});
    }
    SUBCASE("budget of one") {
        const std::vector<NodeId> seeds{0};
        const auto s = sample_rds(fixtures::complete(5), seeds, 1, 3, 1);
        CHECK(s.nodes == std::vector<NodeId>{0});
        CHECK(s.boundary.size() == 4);
    }
    SUBCASE("bad arguments") {
        const std::vector<NodeId> none;
        CHECK_THROWS_AS(sample_rds(fixtures::path(3), none, 2, 1, 1), ValidationError);
        const std::vector<NodeId> seeds{0};
        CHECK_THROWS_AS(sample_rds(fixtures::path(3), seeds, 2, 0, 1), ValidationError);
    }
}

TEST_CASE("mask_edges") {
    SUBCASE("propensity one keeps the graph") {
        const Graph g = fixtures::complete(6);
        const auto s = mask_edges(g, [](NodeId, NodeId) { return 1.0; }, 2);
        CHECK(s.edges == g.edges());
    }
    SUBCASE("empty graph stays empty") {
        CHECK(mask_edges(Graph(5), [](NodeId, NodeId) { return 0.3; }, 2).edges.empty());
    }
    SUBCASE("nonpositive propensity rejected") {
        CHECK_THROWS_AS(mask_edges(fixtures::path(3), [](NodeId, NodeId) { return 0.0; }, 2), ValidationError);
    }
    SUBCASE("retained count matches the binomial mean and is a subset") {
        const Graph g = fixtures::complete(100);
        const int draws = 500;
        double sum = 0.0;
        for (int d = 0; d < draws; ++d) {
            const auto s = mask_edges(g, [](NodeId, NodeId) { return 0.5; }, d);
            sum += static_cast<double>(s.edges.size());
            if (d < 5) {
                for (const auto& [i, j] : s.edges) CHECK(g.has_edge(i, j));
                REQUIRE(s.propensities.has_value());
                CHECK(s.propensities->size() == s.edges.size());
            }
        }
        const double se = std::sqrt(4950 * 0.25 / draws);
        CHECK(std::abs(sum / draws - 0.5 * 4950) <= 3.0 * se);
    }
}
