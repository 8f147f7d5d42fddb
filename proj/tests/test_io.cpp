#include "fixtures.hpp"

#include "netpartial/io.hpp"
#include "netpartial/results.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace netpartial;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "netpartial_tests";
    fs::create_directories(dir);
    return dir / name;
}

io::CsvTable reparse(const std::string& text, const std::string& name) {
    const fs::path p = scratch(name);
    io::write_text(p, text);
    return io::read_csv(p);
}

}  // namespace

TEST_CASE("format_double round-trips") {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-17, 123456789.0}) CHECK(std::stod(io::format_double(x)) == x);
    CHECK(io::format_double(std::nan("")) == "nan");
    CHECK(io::format_double(-INFINITY) == "-inf");
}

TEST_CASE("edge list round trip") {
    const Graph g = fixtures::cliques(2, 3);
    CHECK(io::graph_from_csv(reparse(io::edges_to_csv(g), "edges.csv")) == g);
    // Isolated high-index nodes need the explicit node count.
    const std::vector<Edge> one{{0, 1}};
    const Graph h = Graph::from_edges(6, one);
    CHECK(io::graph_from_csv(reparse(io::edges_to_csv(h), "edges2.csv"), 6) == h);
    CHECK_THROWS_AS(io::graph_from_csv(reparse("src,dst\n0,x\n", "bad.csv")), ValidationError);
    CHECK_THROWS_AS(io::graph_from_csv(reparse("src,dst\n0,0\n", "loop.csv")), ValidationError);
}

TEST_CASE("traits, ARD and covariates round trip") {
    const TraitAssignment t = TraitAssignment::from_labels(std::vector<int>{0, 1, 1, 2}, 3);
    CHECK(io::traits_from_csv(reparse(io::traits_to_csv(t), "traits.csv")).indicators == t.indicators);
    const ArdMatrix x = generate_ard(fixtures::complete(4), t);
    CHECK(io::ard_from_csv(reparse(io::ard_to_csv(x), "ard.csv")).counts == x.counts);
    Eigen::MatrixXd c(3, 2);
    c << 0.1, -2, 1e-9, 3.25, 7, 1.0 / 7.0;
    CHECK(io::covariates_from_csv(reparse(io::covariates_to_csv(c), "cov.csv")) == c);
    CHECK_THROWS_AS(io::traits_from_csv(reparse("node,trait_1\n0,2\n", "t2.csv")), ValidationError);
}

TEST_CASE("json round trips") {
    Eigen::MatrixXd P(2, 2);
    P << 0.4, 0.05, 0.05, 0.3;
    const SbmParams sbm{2, P, {0, 0, 1}};
    const SbmParams back = io::sbm_from_json(io::sbm_to_json(sbm));
    CHECK(back.P == sbm.P);
    CHECK(back.memberships == sbm.memberships);
    CHECK_THROWS_AS(io::sbm_from_json(io::Json{{"K", 2}}), ValidationError);

    NetModelEstimate theta;
    theta.sbm = sbm;
    const auto t2 = io::estimate_from_json(io::estimate_to_json(theta));
    CHECK(t2.sbm.P == P);

    const auto s = sample_induced_subgraph(fixtures::cliques(2, 4), 5, std::vector<int>{0, 0, 0, 0, 1, 1, 1, 1}, 2);
    const auto s2 = io::subsample_from_json(io::subsample_to_json(s));
    CHECK(s2.nodes == s.nodes);
    CHECK(s2.edges == s.edges);
    CHECK(s2.population == 8);

    for (const OutcomeModel& m : std::vector<OutcomeModel>{UganderLinear{}, HearingLogistic{}, ComplexContagion{},
                                                           LocalDiffusion{0.3}}) {
        CHECK(io::outcome_model_to_json(io::outcome_model_from_json(io::outcome_model_to_json(m))) ==
              io::outcome_model_to_json(m));
    }
    CHECK_THROWS_AS(io::outcome_model_from_json(io::Json{{"model", "nope"}}), ValidationError);
}

TEST_CASE("feature map from json") {
    const auto f = io::feature_map_from_json(io::Json::parse(
        R"({"exposures": [{"kind": "treated_fraction"}], "terms": [["intercept"], ["treatment", "exposure:0"]]})"));
    CHECK(f.size() == 2);
    const auto u = io::feature_map_from_json(io::Json{{"preset", "ugander"}});
    CHECK(u.size() == FeatureMap::ugander(0).size());
    CHECK_THROWS_AS(io::feature_map_from_json(io::Json::parse(R"({"terms": [["bogus"]]})")), ValidationError);
}

TEST_CASE("result table csv") {
    ResultTable t;
    t.config_hash = fnv1a_hex("x");
    t.add(0, "a", "error", 0.5);
    t.add(1, "a", "error", -0.25);
    const fs::path p = scratch("results.csv");
    io::write_text(p, t.to_csv());
    const ResultTable back = ResultTable::read_csv(p);
    CHECK(back.config_hash == t.config_hash);
    REQUIRE(back.records.size() == 2);
    CHECK(back.records[1].value == -0.25);
    CHECK_THROWS_AS(ResultTable::read_csv(scratch("edges.csv")), ValidationError);
}

TEST_CASE("fnv1a") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("summarize_errors") {
    ResultTable t;
    for (int r = 0; r < 4; ++r) {
        const double e = r % 2 ? 1.0 : -3.0;
        t.add(r, "m", "error", e);
        t.add(r, "m", "sq_error", e * e);
        t.add(r, "m", "covered", r < 3 ? 1.0 : 0.0);
    }
    summarize_errors(t, {"m"});
    CHECK(t.summary("m", "bias") == -1.0);
    CHECK(t.summary("m", "rmse") == doctest::Approx(std::sqrt(5.0)));
    CHECK(t.summary("m", "coverage") == 0.75);
    CHECK(t.summary("m", "replications") == 4);
    CHECK(std::isnan(t.summary("m", "nothing")));
}

TEST_CASE("compare_methods") {
    ResultTable t;
    for (int r = 0; r < 30; ++r) {
        const double v = 1.0 + 0.1 * (r % 7);
        t.add(r, "base", "sq_error", v);
        t.add(r, "same", "sq_error", v);
        t.add(r, "half", "sq_error", 0.5 * v);
    }
    const auto same = compare_methods(t, "base", "same", "sq_error", 500, 1);
    CHECK(same.ratio == 1.0);
    CHECK(same.ci_low <= 1.0);
    CHECK(same.ci_high >= 1.0);
    CHECK(same.replications == 30);
    const auto half = compare_methods(t, "base", "half", "sq_error", 500, 1);
    CHECK(half.ratio == doctest::Approx(0.5));
    CHECK(half.ci_high - half.ci_low == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(half.format() == "0.50 (±0.00)");
    CHECK(compare_methods(t, "base", "half", "sq_error", 500, 9).ratio == half.ratio);
    CHECK_THROWS_AS(compare_methods(t, "base", "missing", "sq_error"), ValidationError);
    CHECK_THROWS_AS(compare_methods(t, "base", "half", "rmse"), ValidationError);
}
