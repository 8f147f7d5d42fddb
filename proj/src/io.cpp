#include "netpartial/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace netpartial::io {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

template <typename T>
T parse_number(const std::string& s, const std::string& where) {
    T v{};
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ValidationError(where + ": cannot parse '" + s + "'");
    return v;
}

void expect_header(const CsvTable& t, std::size_t first, const std::string& prefix,
                   const std::string& what) {
    if (t.header.empty() || t.header[0] != "node") {
        throw ValidationError(what + " CSV must start with a 'node' column");
    }
    for (std::size_t c = first; c < t.header.size(); ++c) {
        if (t.header[c].rfind(prefix, 0) != 0) {
            throw ValidationError(what + " CSV column '" + t.header[c] + "' must start with '" + prefix + "'");
        }
    }
}

// Rows keyed by 0-based node ids 0..n-1 in any order.
template <typename T>
Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> node_matrix(const CsvTable& t, const std::string& what) {
    const auto n = static_cast<Eigen::Index>(t.rows.size());
    const auto cols = static_cast<Eigen::Index>(t.header.size()) - 1;
    Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> m(n, cols);
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::string where = what + " row " + std::to_string(r + 2);
        if (row.size() != t.header.size()) throw ValidationError(where + ": wrong number of columns");
        const auto id = parse_number<long long>(row[0], where);
        if (id < 0 || id >= n || seen[id]) throw ValidationError(where + ": node ids must be 0..n-1, each once");
        seen[id] = 1;
        for (Eigen::Index c = 0; c < cols; ++c) m(id, c) = parse_number<T>(row[c + 1], where);
    }
    return m;
}

template <typename Matrix>
std::string node_csv(const Matrix& m, const std::string& prefix) {
    std::string out = "node";
    for (Eigen::Index c = 0; c < m.cols(); ++c) out += "," + prefix + std::to_string(c + 1);
    out += "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out += std::to_string(i);
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if constexpr (std::is_integral_v<typename Matrix::Scalar>) {
                out += "," + std::to_string(m(i, c));
            } else {
                out += "," + format_double(m(i, c));
            }
        }
        out += "\n";
    }
    return out;
}

const Json& field(const Json& j, const char* key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) throw ValidationError("missing field '" + path + key + "'");
    return j.at(key);
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback, const std::string& path) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError("field '" + path + key + "' has the wrong type");
    }
}

Json double_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json edge_list(const std::vector<Edge>& edges) {
    Json a = Json::array();
    for (auto [i, j] : edges) a.push_back({i, j});
    return a;
}

std::vector<Edge> edges_from(const Json& j, const std::string& path) {
    std::vector<Edge> out;
    if (!j.is_array()) throw ValidationError("field '" + path + "' must be a list of pairs");
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 2) throw ValidationError("field '" + path + "' must be a list of pairs");
        out.emplace_back(e[0].get<NodeId>(), e[1].get<NodeId>());
    }
    return out;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (first) {
            t.header = split_line(line);
            first = false;
        } else {
            t.rows.push_back(split_line(line));
        }
    }
    if (first) throw ValidationError("'" + path.string() + "' is empty");
    return t;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    out << text;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json read_json(const std::filesystem::path& path) {
    try {
        return Json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

std::string edges_to_csv(const Graph& g) {
    std::string out = "src,dst\n";
    for (auto [i, j] : g.edges()) out += std::to_string(i) + "," + std::to_string(j) + "\n";
    return out;
}

Graph graph_from_csv(const CsvTable& table, NodeId n) {
    if (table.header != std::vector<std::string>{"src", "dst"}) {
        throw ValidationError("edge list CSV header must be 'src,dst'");
    }
    std::vector<Edge> edges;
    NodeId top = -1;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::string where = "edge list row " + std::to_string(r + 2);
        if (table.rows[r].size() != 2) throw ValidationError(where + ": expected two columns");
        const auto i = parse_number<NodeId>(table.rows[r][0], where);
        const auto j = parse_number<NodeId>(table.rows[r][1], where);
        edges.emplace_back(i, j);
        top = std::max({top, i, j});
    }
    if (n < 0) n = top + 1;
    return Graph::from_edges(n, edges);
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
    if (!j.is_array() || j.empty()) throw ValidationError("matrix must be a non-empty list of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (!j[r].is_array() || static_cast<Eigen::Index>(j[r].size()) != cols) {
            throw ValidationError("matrix rows must have equal length");
        }
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
    Json a = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(double_or_null(m(r, c)));
        a.push_back(row);
    }
    return a;
}

Json sbm_to_json(const SbmParams& params) {
    return Json{{"K", params.K}, {"P", matrix_to_json(params.P)}, {"memberships", params.memberships}};
}

SbmParams sbm_from_json(const Json& j) {
    SbmParams p;
    try {
        p.K = field(j, "K", "").get<int>();
        p.P = matrix_from_json(field(j, "P", ""));
        p.memberships = field(j, "memberships", "").get<std::vector<int>>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("SBM parameters: ") + e.what());
    }
    p.validate(false);
    return p;
}

std::string traits_to_csv(const TraitAssignment& traits) { return node_csv(traits.indicators, "trait_"); }

TraitAssignment traits_from_csv(const CsvTable& table) {
    expect_header(table, 1, "trait_", "traits");
    TraitAssignment t{node_matrix<int>(table, "traits")};
    if ((t.indicators.array() != 0 && t.indicators.array() != 1).any()) {
        throw ValidationError("traits CSV entries must be 0 or 1");
    }
    return t;
}

std::string ard_to_csv(const ArdMatrix& ard) { return node_csv(ard.counts, "X_"); }

ArdMatrix ard_from_csv(const CsvTable& table) {
    expect_header(table, 1, "X_", "ARD");
    ArdMatrix a{node_matrix<int>(table, "ARD")};
    if ((a.counts.array() < 0).any()) throw ValidationError("ARD counts must be nonnegative");
    return a;
}

std::string covariates_to_csv(const Eigen::MatrixXd& x) { return node_csv(x, "x"); }

Eigen::MatrixXd covariates_from_csv(const CsvTable& table) {
    expect_header(table, 1, "x", "covariates");
    return node_matrix<double>(table, "covariates");
}

Json subsample_to_json(const SubgraphSample& s) {
    static const char* kinds[] = {"induced", "rds", "masked"};
    Json j{{"n", s.population},
           {"kind", kinds[static_cast<int>(s.kind)]},
           {"nodes", s.nodes},
           {"edges", edge_list(s.edges)},
           {"boundary", edge_list(s.boundary)}};
    if (s.propensities) j["propensities"] = *s.propensities;
    return j;
}

SubgraphSample subsample_from_json(const Json& j) {
    SubgraphSample s;
    try {
        const auto kind = get_or<std::string>(j, "kind", "induced", "");
        if (kind == "induced") {
            s.kind = SampleKind::induced;
        } else if (kind == "rds") {
            s.kind = SampleKind::rds;
        } else if (kind == "masked") {
            s.kind = SampleKind::masked;
        } else {
            throw ValidationError("field 'kind' must be induced, rds or masked");
        }
        s.nodes = field(j, "nodes", "").get<std::vector<NodeId>>();
        std::sort(s.nodes.begin(), s.nodes.end());
        s.edges = edges_from(field(j, "edges", ""), "edges");
        for (auto& [a, b] : s.edges) {
            if (a > b) std::swap(a, b);
        }
        if (j.contains("boundary")) s.boundary = edges_from(j.at("boundary"), "boundary");
        if (j.contains("propensities") && !j.at("propensities").is_null()) {
            s.propensities = j.at("propensities").get<std::vector<double>>();
        }
        NodeId top = -1;
        for (NodeId v : s.nodes) top = std::max(top, v);
        for (auto [a, b] : s.boundary) top = std::max({top, a, b});
        s.population = get_or<NodeId>(j, "n", top + 1, "");
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("subsample: ") + e.what());
    }
    s.validate();
    return s;
}

Json estimate_to_json(const NetModelEstimate& theta) {
    Json j;
    if (theta.kind == ModelKind::sbm) {
        j = Json{{"kind", "sbm"},
                 {"K", theta.sbm.K},
                 {"P", matrix_to_json(theta.sbm.P)},
                 {"memberships", theta.sbm.memberships}};
    } else {
        j = Json{{"kind", "beta"}, {"nu", theta.beta.nu}};
    }
    j["diagnostics"] = Json{{"cond", double_or_null(theta.diagnostics.cond)},
                            {"cluster_sizes", theta.diagnostics.cluster_sizes},
                            {"converged", theta.diagnostics.converged},
                            {"iterations", theta.diagnostics.iterations}};
    return j;
}

NetModelEstimate estimate_from_json(const Json& j) {
    NetModelEstimate t;
    const auto kind = get_or<std::string>(j, "kind", "sbm", "");
    if (kind == "sbm") {
        t.kind = ModelKind::sbm;
        t.sbm = sbm_from_json(j);
    } else if (kind == "beta") {
        t.kind = ModelKind::beta;
        t.beta.nu = field(j, "nu", "").get<std::vector<double>>();
        t.beta.validate();
    } else {
        throw ValidationError("field 'kind' must be sbm or beta");
    }
    if (j.contains("diagnostics")) {
        const auto& d = j.at("diagnostics");
        if (d.contains("cond") && d.at("cond").is_number()) t.diagnostics.cond = d.at("cond").get<double>();
        t.diagnostics.cluster_sizes = get_or<std::vector<int>>(d, "cluster_sizes", {}, "diagnostics.");
        t.diagnostics.converged = get_or<bool>(d, "converged", true, "diagnostics.");
    }
    return t;
}

Json fit_to_json(const FitResult& fit) {
    Json beta = Json::array();
    for (Eigen::Index i = 0; i < fit.beta.size(); ++i) beta.push_back(double_or_null(fit.beta[i]));
    const auto& d = fit.diagnostics;
    return Json{{"beta", beta},
                {"cov", matrix_to_json(fit.cov)},
                {"link", fit.link == Link::identity ? "identity" : "logistic"},
                {"working_cov", fit.working == WorkingCovKind::independent ? "independent" : "cluster"},
                {"diagnostics",
                 {{"cond", double_or_null(d.cond)},
                  {"iterations", d.iterations},
                  {"log_likelihood", double_or_null(d.log_likelihood)},
                  {"converged", d.converged},
                  {"separation", d.separation}}}};
}

Json gate_to_json(const GateEstimate& g) {
    return Json{{"estimate", double_or_null(g.estimate)}, {"se", double_or_null(g.se)}, {"method", g.method}};
}

ExposureSpec exposure_from_json(const Json& j) {
    const auto kind = field(j, "kind", "exposure.").get<std::string>();
    if (kind == "treated_count") return TreatedCount{};
    if (kind == "treated_fraction") return TreatedFraction{};
    if (kind == "neighbor_indicator") return NeighborTreatedIndicator{};
    if (kind == "risk_share") {
        return RiskShare{field(j, "communities", "exposure.").get<std::vector<int>>()};
    }
    if (kind == "hearing") {
        Hearing h;
        h.T = get_or<int>(j, "T", h.T, "exposure.");
        h.q = get_or<double>(j, "q", h.q, "exposure.");
        h.weights = get_or<std::vector<double>>(j, "weights", {}, "exposure.");
        h.self_weight = get_or<double>(j, "self_weight", 0.0, "exposure.");
        return h;
    }
    throw ValidationError("unknown exposure kind '" + kind + "'");
}

FeatureMap feature_map_from_json(const Json& j) {
    if (j.is_string() || j.contains("preset")) {
        const auto preset = j.is_string() ? j.get<std::string>() : j.at("preset").get<std::string>();
        if (preset != "ugander") throw ValidationError("unknown feature preset '" + preset + "'");
        return FeatureMap::ugander(j.is_object() ? get_or<int>(j, "covariate", 0, "features.") : 0);
    }
    FeatureMap f;
    if (j.contains("exposures")) {
        for (const auto& e : j.at("exposures")) f.exposures.push_back(exposure_from_json(e));
    }
    for (const auto& term : field(j, "terms", "features.")) {
        std::vector<FeatureAtom> atoms;
        for (const auto& a : term) {
            const auto s = a.get<std::string>();
            const auto colon = s.find(':');
            const auto name = s.substr(0, colon);
            const int index = colon == std::string::npos ? 0 : std::stoi(s.substr(colon + 1));
            using K = FeatureAtom::Kind;
            K kind;
            if (name == "intercept") {
                kind = K::intercept;
            } else if (name == "treatment") {
                kind = K::own_treatment;
            } else if (name == "exposure") {
                kind = K::exposure;
            } else if (name == "degree_ratio") {
                kind = K::degree_ratio;
            } else if (name == "covariate") {
                kind = K::covariate;
            } else if (name == "inverse_mean_degree") {
                kind = K::inverse_mean_degree;
            } else {
                throw ValidationError("unknown feature atom '" + s + "'");
            }
            atoms.push_back({kind, index});
        }
        f.terms.push_back(std::move(atoms));
    }
    return f;
}

OutcomeModel outcome_model_from_json(const Json& j) {
    const auto tag = field(j, "model", "outcome.").get<std::string>();
    const std::string p = "outcome.";
    OutcomeModel m;
    if (tag == "ugander") {
        UganderLinear u;
        u.alpha = get_or(j, "alpha", u.alpha, p);
        u.b = get_or(j, "b", u.b, p);
        u.delta = get_or(j, "delta", u.delta, p);
        u.gamma = get_or(j, "gamma", u.gamma, p);
        u.sigma = get_or(j, "sigma", u.sigma, p);
        u.covariate = get_or(j, "covariate", u.covariate, p);
        m = u;
    } else if (tag == "hearing_logistic") {
        HearingLogistic h;
        h.alpha0 = get_or(j, "alpha0", h.alpha0, p);
        h.alpha1 = get_or(j, "alpha1", h.alpha1, p);
        h.beta = get_or(j, "beta", h.beta, p);
        m = h;
    } else if (tag == "complex_contagion") {
        ComplexContagion c;
        c.lambda = get_or(j, "lambda", c.lambda, p);
        c.threshold_sd = get_or(j, "threshold_sd", c.threshold_sd, p);
        c.T = get_or(j, "T", c.T, p);
        m = c;
    } else if (tag == "local_diffusion") {
        LocalDiffusion l;
        l.q = get_or(j, "q", l.q, p);
        m = l;
    } else if (tag == "generic_linear") {
        GenericLinear g;
        g.beta = field(j, "beta", p).get<std::vector<double>>();
        g.features = feature_map_from_json(field(j, "features", p));
        g.sigma = get_or(j, "sigma", g.sigma, p);
        m = g;
    } else {
        throw ValidationError("unknown outcome model '" + tag + "'");
    }
    validate_model(m);
    return m;
}

Json outcome_model_to_json(const OutcomeModel& m) {
    return std::visit(
        [](const auto& v) -> Json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, UganderLinear>) {
                return {{"model", "ugander"}, {"alpha", v.alpha}, {"b", v.b}, {"delta", v.delta},
                        {"gamma", v.gamma}, {"sigma", v.sigma}, {"covariate", v.covariate}};
            } else if constexpr (std::is_same_v<T, HearingLogistic>) {
                return {{"model", "hearing_logistic"}, {"alpha0", v.alpha0}, {"alpha1", v.alpha1}, {"beta", v.beta}};
            } else if constexpr (std::is_same_v<T, ComplexContagion>) {
                return {{"model", "complex_contagion"}, {"lambda", v.lambda},
                        {"threshold_sd", v.threshold_sd}, {"T", v.T}};
            } else if constexpr (std::is_same_v<T, LocalDiffusion>) {
                return {{"model", "local_diffusion"}, {"q", v.q}};
            } else {
                return {{"model", "generic_linear"}, {"beta", v.beta}, {"sigma", v.sigma}};
            }
        },
        m);
}

}  // namespace netpartial::io
