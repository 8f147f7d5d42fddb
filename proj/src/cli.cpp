#include "netpartial/cli.hpp"

#include "netpartial/design.hpp"
#include "netpartial/experiments.hpp"
#include "netpartial/inference.hpp"
#include "netpartial/io.hpp"
#include "netpartial/net_estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace netpartial {

namespace {

using Json = nlohmann::json;
using OJson = io::Json;

// Typed parameter lookup with field paths in error messages.
template <typename T>
T param(const Json& params, const std::string& key, std::optional<T> fallback = {}) {
    if (!params.contains(key)) {
        if (fallback) return *fallback;
        throw ValidationError("missing field 'params." + key + "'");
    }
    try {
        return params.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError("field 'params." + key + "' has the wrong type");
    }
}

template <typename T>
T param(const Json& params, const std::string& key, T fallback) {
    return param<T>(params, key, std::optional<T>(fallback));
}

OJson to_ordered(const Json& j) { return OJson::parse(j.dump()); }

class Context {
public:
    explicit Context(const RunConfig& c) : config(c) {}

    const RunConfig& config;
    ResultTable table;

    bool has(const std::string& name) const { return config.inputs.count(name) > 0; }
    const std::filesystem::path& input(const std::string& name) const {
        const auto it = config.inputs.find(name);
        if (it == config.inputs.end()) {
            throw ValidationError("missing field 'inputs." + name + "' for " + config.experiment);
        }
        return it->second;
    }
    std::uint64_t seed() const { return *config.seed; }
    void write(const std::string& name, const std::string& text) const { io::write_text(config.output / name, text); }
    void write_json(const std::string& name, const OJson& j) const { write(name, j.dump(2) + "\n"); }

    Graph graph(NodeId n = -1) const { return io::graph_from_csv(io::read_csv(input("graph")), n); }
    TraitAssignment traits() const { return io::traits_from_csv(io::read_csv(input("traits"))); }
    ArdMatrix ard() const { return io::ard_from_csv(io::read_csv(input("ard"))); }
    NetModelEstimate estimate() const { return io::estimate_from_json(io::read_json(input("estimate"))); }
    Eigen::MatrixXd covariates(NodeId n) const {
        if (!has("covariates")) return Eigen::MatrixXd(n, 0);
        Eigen::MatrixXd x = io::covariates_from_csv(io::read_csv(input("covariates")));
        if (x.rows() != n) throw ValidationError("inputs.covariates: expected " + std::to_string(n) + " rows");
        return x;
    }
    std::vector<int> labels(const std::string& name, const std::string& column) const {
        const auto t = io::read_csv(input(name));
        if (t.header.size() != 2 || t.header[0] != "node" || t.header[1] != column) {
            throw ValidationError("inputs." + name + ": header must be 'node," + column + "'");
        }
        std::vector<int> out(t.rows.size(), -1);
        for (const auto& row : t.rows) {
            const int i = std::stoi(row.at(0));
            if (i < 0 || i >= static_cast<int>(out.size()) || out[i] >= 0) {
                throw ValidationError("inputs." + name + ": node ids must be 0..n-1, each once");
            }
            out[i] = std::stoi(row.at(1));
        }
        return out;
    }

    /// G* from whichever observation inputs are present.
    PartialNetwork observation() const {
        if (has("ard")) return ArdObservation{ard(), traits()};
        if (has("subsample")) return io::subsample_from_json(io::read_json(input("subsample")));
        if (has("graph")) return FullGraphObservation{graph()};
        throw ValidationError("missing observation: set inputs.ard with inputs.traits, inputs.subsample or inputs.graph");
    }
    ConditionalGraphSampler sampler() const {
        PartialNetwork obs = observation();
        if (std::holds_alternative<FullGraphObservation>(obs) && !has("estimate")) {
            return ConditionalGraphSampler(NetModelEstimate{}, std::move(obs));
        }
        return ConditionalGraphSampler(estimate(), std::move(obs));
    }
};

FeatureMap features_param(const Json& params, const FeatureMap& fallback) {
    if (!params.contains("features")) return fallback;
    return io::feature_map_from_json(to_ordered(params.at("features")));
}

// ─── Pipelines ───────────────────────────────────────────────────

void run_simulate(Context& ctx) {
    const Json& p = ctx.config.params;
    SbmParams sbm;
    if (ctx.has("sbm")) {
        sbm = io::sbm_from_json(io::read_json(ctx.input("sbm")));
    } else if (p.contains("sbm")) {
        sbm = io::sbm_from_json(to_ordered(p.at("sbm")));
    } else {
        throw ValidationError("missing field 'params.sbm' (or inputs.sbm)");
    }
    sbm.validate(false);
    const NodeId n = sbm.size();
    const int cov_cols = param<int>(p, "covariates", 0);
    const double treat_p = param<double>(p, "treat_p", 0.5);
    std::optional<OutcomeModel> model;
    if (p.contains("outcome")) model = io::outcome_model_from_json(to_ordered(p.at("outcome")));
    const int R = ctx.config.replications;
    for (int r = 0; r < R; ++r) {
        const std::uint64_t s = derive_seed(ctx.seed(), static_cast<std::uint64_t>(r), 0x51);
        const std::string suffix = R > 1 ? "_" + std::to_string(r) : "";
        const Graph g = sample_sbm(sbm, derive_seed(s, 1));
        ctx.write("edges" + suffix + ".csv", io::edges_to_csv(g));
        ctx.table.add(r, "sbm", "edges", static_cast<double>(g.edge_count()));
        ctx.table.add(r, "sbm", "mean_degree", g.mean_degree());
        if (cov_cols > 0 || model) {
            Rng rng = make_rng(s, 2);
            std::normal_distribution<double> z;
            Eigen::MatrixXd x(n, std::max(cov_cols, model ? 1 : 0));
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
                for (Eigen::Index c = 0; c < x.cols(); ++c) x(i, c) = z(rng);
            }
            ctx.write("covariates" + suffix + ".csv", io::covariates_to_csv(x));
            if (model) {
                TreatmentVector a(static_cast<std::size_t>(n));
                for (NodeId i = 0; i < n; ++i) a[i] = counter_uniform(derive_seed(s, 3), i, 0) < treat_p;
                const auto y = simulate_outcomes(*model, g, a, x, derive_seed(s, 4));
                std::string csv = "node,a,y\n";
                for (NodeId i = 0; i < n; ++i) {
                    csv += std::to_string(i) + "," + std::to_string(a[i]) + "," + io::format_double(y[i]) + "\n";
                }
                ctx.write("outcomes" + suffix + ".csv", csv);
                ctx.table.add(r, "outcome", "mean_y", std::accumulate(y.begin(), y.end(), 0.0) / n);
                ctx.table.add(r, "outcome", "true_gate", true_gate(*model, g, x, 200, derive_seed(s, 5)));
            }
        }
    }
}

void run_ard(Context& ctx) {
    const TraitAssignment traits = ctx.traits();
    // The trait table fixes n, so isolated high-index nodes are kept.
    const Graph full = ctx.graph(traits.size());
    const ArdMatrix ard = generate_ard(full, traits);
    ctx.write("ard.csv", io::ard_to_csv(ard));
    ctx.table.add(0, "ard", "nodes", full.size());
    ctx.table.add(0, "ard", "traits", traits.trait_count());
    ctx.table.add(0, "ard", "total_count", ard.counts.cast<double>().sum());
}

void record_estimate(Context& ctx, const NetModelEstimate& theta, int rep = 0) {
    if (theta.kind == ModelKind::sbm) {
        for (int k = 0; k < theta.sbm.K; ++k) {
            for (int l = k; l < theta.sbm.K; ++l) {
                ctx.table.add(rep, "sbm", "P_" + std::to_string(k) + "_" + std::to_string(l), theta.sbm.P(k, l));
            }
        }
        ctx.table.add(rep, "sbm", "cond", theta.diagnostics.cond);
    } else {
        ctx.table.add(rep, "beta", "iterations", theta.diagnostics.iterations);
        ctx.table.add(rep, "beta", "converged", theta.diagnostics.converged ? 1.0 : 0.0);
    }
}

void run_estimate_net(Context& ctx) {
    const Json& p = ctx.config.params;
    const auto model = param<std::string>(p, "model", "sbm");
    NetModelEstimate theta;
    if (model == "beta") {
        std::vector<int> degrees;
        if (ctx.has("ard")) {
            const ArdMatrix ard = ctx.ard();
            for (Eigen::Index i = 0; i < ard.counts.rows(); ++i) degrees.push_back(ard.counts.row(i).sum());
        } else {
            degrees = ctx.graph(param<int>(p, "n", -1)).degrees();
        }
        theta = fit_beta_model(degrees);
    } else if (model == "sbm") {
        const int K = param<int>(p, "K");
        if (ctx.has("subsample")) {
            const SubgraphSample s = io::subsample_from_json(io::read_json(ctx.input("subsample")));
            const auto memberships = ctx.labels("memberships", "block");
            theta = s.kind == SampleKind::rds ? estimate_sbm_from_rds(s, memberships)
                                              : estimate_sbm_from_subgraph(s, memberships);
        } else {
            const ArdMatrix ard = ctx.ard();
            const TraitAssignment traits = ctx.traits();
            const auto memberships = ctx.has("memberships") ? ctx.labels("memberships", "block")
                                                            : cluster_ard(ard, traits, K);
            BlockSolveOptions opts;
            if (param<std::string>(p, "solver", "constrained") == "unconstrained") {
                opts.solver = BlockSolver::unconstrained_symmetrized;
            }
            theta = estimate_sbm_from_ard(ard, traits, memberships, opts);
        }
    } else {
        throw ValidationError("field 'params.model' must be sbm or beta");
    }
    ctx.write_json("estimate.json", io::estimate_to_json(theta));
    record_estimate(ctx, theta);
}

void run_fit_outcome(Context& ctx) {
    const Json& p = ctx.config.params;
    if (p.contains("study")) {
        const Json& s = p.at("study");
        HearingStudyConfig c;
        c.n = s.value("n", c.n);
        c.K = s.value("K", c.K);
        c.traits_per_block = s.value("traits_per_block", c.traits_per_block);
        c.trait_fidelity = s.value("trait_fidelity", c.trait_fidelity);
        c.mean_degree = s.value("mean_degree", c.mean_degree);
        c.in_out_ratio = s.value("in_out_ratio", c.in_out_ratio);
        c.treat_p = s.value("treat_p", c.treat_p);
        c.L = s.value("L", c.L);
        c.full_graph = s.value("full_graph", c.full_graph);
        if (s.contains("outcome")) {
            const auto m = io::outcome_model_from_json(to_ordered(s.at("outcome")));
            if (!std::holds_alternative<HearingLogistic>(m)) {
                throw ValidationError("field 'params.study.outcome' must be hearing_logistic");
            }
            c.model = std::get<HearingLogistic>(m);
        }
        c.replications = ctx.config.replications;
        ctx.table = run_hearing_study(c, ctx.seed());
        return;
    }
    const auto table = io::read_csv(ctx.input("outcomes"));
    if (table.header != std::vector<std::string>{"node", "a", "y"}) {
        throw ValidationError("inputs.outcomes: header must be 'node,a,y'");
    }
    const auto n = static_cast<NodeId>(table.rows.size());
    TreatmentVector a(static_cast<std::size_t>(n));
    std::vector<double> y(static_cast<std::size_t>(n));
    for (const auto& row : table.rows) {
        const int i = std::stoi(row.at(0));
        if (i < 0 || i >= n) throw ValidationError("inputs.outcomes: node ids must be 0..n-1");
        a[i] = std::stoi(row.at(1));
        y[i] = std::stod(row.at(2));
    }
    const ConditionalGraphSampler sampler = ctx.sampler();
    const Eigen::MatrixXd x = ctx.covariates(n);
    const FeatureMap features = features_param(p, FeatureMap::ugander(0));
    const int L = param<int>(p, "L", 50);
    WorkingCov working;
    if (ctx.has("clusters")) working = {WorkingCovKind::cluster, ctx.labels("clusters", "cluster")};
    const auto link = param<std::string>(p, "link", "identity");
    FitResult fit;
    if (link == "identity") {
        fit = fit_linear(y, average_features(sampler, a, x, features, L, derive_seed(ctx.seed(), 1)).mean, working);
    } else if (link == "logistic") {
        EmOptions opts;
        opts.working = working;
        fit = fit_logistic_em(y, sampler, a, x, features, L, derive_seed(ctx.seed(), 1), opts);
    } else {
        throw ValidationError("field 'params.link' must be identity or logistic");
    }
    ctx.write_json("fit.json", io::fit_to_json(fit));
    for (Eigen::Index k = 0; k < fit.beta.size(); ++k) {
        ctx.table.add(0, "fit", "beta_" + std::to_string(k), fit.beta[k]);
        ctx.table.add(0, "fit", "se_" + std::to_string(k), std::sqrt(fit.cov(k, k)));
    }
    if (features.uses_treatment()) {
        const GateEstimate gate = plugin_gate(fit, sampler, x, features, L, derive_seed(ctx.seed(), 2));
        ctx.write_json("gate.json", io::gate_to_json(gate));
        ctx.table.add(0, gate.method, "estimate", gate.estimate);
        ctx.table.add(0, gate.method, "se", gate.se);
    }
}

void run_gate(Context& ctx) {
    const Json& p = ctx.config.params;
    GateStudyConfig c;
    c.n = param<int>(p, "n", c.n);
    c.clusters = param<int>(p, "clusters", c.clusters);
    c.in_degree_low = param<double>(p, "in_degree_low", c.in_degree_low);
    c.in_degree_high = param<double>(p, "in_degree_high", c.in_degree_high);
    c.out_degree_low = param<double>(p, "out_degree_low", c.out_degree_low);
    c.out_degree_high = param<double>(p, "out_degree_high", c.out_degree_high);
    c.L = param<int>(p, "L", c.L);
    if (p.contains("outcome")) {
        const auto m = io::outcome_model_from_json(to_ordered(p.at("outcome")));
        if (!std::holds_alternative<UganderLinear>(m)) throw ValidationError("field 'params.outcome' must be ugander");
        c.model = std::get<UganderLinear>(m);
    }
    c.replications = ctx.config.replications;
    ctx.table = run_gate_study(c, ctx.seed());
}

void run_design(Context& ctx) {
    const Json& p = ctx.config.params;
    const ConditionalGraphSampler sampler = ctx.sampler();
    const NodeId n = sampler.size();
    const Eigen::MatrixXd x = ctx.covariates(n);
    const Json tspec = p.value("T_spec", Json::object());
    std::optional<double> budget;
    if (tspec.contains("budget")) budget = tspec.at("budget").get<double>();
    const DesignClusters clusters = DesignClusters::from_labels(ctx.labels("clusters", "cluster"), budget);
    if (static_cast<NodeId>(clusters.labels.size()) != n) {
        throw ValidationError("inputs.clusters needs one row per node");
    }
    FeatureMap fallback;
    fallback.exposures = {TreatedFraction{}};
    fallback.terms = {{{FeatureAtom::Kind::intercept, 0}},
                      {{FeatureAtom::Kind::own_treatment, 0}},
                      {{FeatureAtom::Kind::exposure, 0}}};
    const FeatureMap features = features_param(p, fallback);
    features.validate(n, x.cols());
    Eigen::VectorXd contrast = Eigen::VectorXd::Zero(features.size());
    if (p.contains("contrast")) {
        const auto v = param<std::vector<double>>(p, "contrast");
        if (static_cast<int>(v.size()) != features.size()) {
            throw ValidationError("field 'params.contrast' needs one entry per feature");
        }
        contrast = Eigen::Map<const Eigen::VectorXd>(v.data(), features.size());
    } else {
        if (features.size() < 2) throw ValidationError("missing field 'params.contrast'");
        contrast[1] = 1.0;
    }
    NoiseCovariance sigma;
    if (p.contains("noise")) {
        const Json& nz = p.at("noise");
        sigma.sigma2 = nz.value("sigma2", 1.0);
        sigma.rho = nz.value("rho", 0.0);
        if (sigma.rho != 0.0) {
            sigma.kind = NoiseCovariance::Kind::cluster;
            sigma.clusters = clusters.labels;
        }
    }
    SaturationOptions opts;
    opts.L = param<int>(p, "L", 10);
    opts.R = param<int>(p, "R", 10);
    if (p.contains("penalty") && !p.at("penalty").is_null()) opts.penalty = param<double>(p, "penalty");
    const std::uint64_t eval_seed = derive_seed(ctx.seed(), 1);
    const DesignObjective objective = [&](const Eigen::VectorXd& tau) {
        return eval_saturation_variance(tau, clusters, sampler, x, features, contrast, sigma, opts, eval_seed);
    };

    std::vector<DesignEvaluation> trace;
    Eigen::VectorXd best_tau;
    double best = std::numeric_limits<double>::infinity();
    std::string method;
    if (tspec.contains("grid")) {
        method = "grid";
        const int m = tspec.at("grid").get<int>();
        if (m < 2) throw ValidationError("field 'params.T_spec.grid' must be >= 2");
        long long total = 1;
        for (int j = 0; j < clusters.J; ++j) total *= m;
        for (long long idx = 0; idx < total; ++idx) {
            Eigen::VectorXd tau(clusters.J);
            long long rest = idx;
            for (int j = 0; j < clusters.J; ++j) {
                tau[j] = static_cast<double>(rest % m) / (m - 1);
                rest /= m;
            }
            if (!clusters.feasible(tau)) continue;
            DesignEvaluation e{tau, 0.0, 0.0, false};
            try {
                const auto v = objective(tau);
                e.value = v.value;
                e.se = v.se;
            } catch (const NumericalError&) {
                e.singular = true;
                e.value = std::numeric_limits<double>::quiet_NaN();
            }
            if (!e.singular && e.value < best) {
                best = e.value;
                best_tau = tau;
            }
            trace.push_back(std::move(e));
        }
        if (best_tau.size() == 0) throw NumericalError("degenerate design at every grid point");
    } else {
        method = "bayes-opt";
        BayesOptOptions bo;
        bo.n0 = param<int>(p, "n0", bo.n0);
        bo.N0 = param<int>(p, "N0", bo.N0);
        bo.kappa = param<double>(p, "kappa", bo.kappa);
        const BayesOptResult r = bayes_opt_saturation(objective, clusters, bo, derive_seed(ctx.seed(), 2));
        trace = r.trace;
        best_tau = r.best_tau;
        best = r.best_value;
    }
    OJson out = OJson::array();
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& e = trace[i];
        OJson tau = OJson::array();
        for (Eigen::Index j = 0; j < e.tau.size(); ++j) tau.push_back(e.tau[j]);
        out.push_back({{"tau", tau},
                       {"value", e.singular ? OJson(nullptr) : OJson(e.value)},
                       {"se", e.singular ? OJson(nullptr) : OJson(e.se)}});
        ctx.table.add(static_cast<int>(i), method, "value", e.singular ? std::nan("") : e.value);
    }
    ctx.write_json("trace.json", out);
    for (Eigen::Index j = 0; j < best_tau.size(); ++j) {
        ctx.table.add(-1, method, "tau_" + std::to_string(j), best_tau[j]);
    }
    ctx.table.add(-1, method, "best_value", best);
}

void run_seed_optimal(Context& ctx) {
    const Json& p = ctx.config.params;
    if (p.contains("study")) {
        const Json& s = p.at("study");
        SeedingStudyConfig c;
        c.n = s.value("n", c.n);
        c.K = s.value("K", c.K);
        c.p_in = s.value("p_in", c.p_in);
        c.p_out = s.value("p_out", c.p_out);
        c.budget = s.value("budget", c.budget);
        c.L = s.value("L", c.L);
        c.sims_per_graph = s.value("sims_per_graph", c.sims_per_graph);
        if (s.contains("outcome")) {
            const auto m = io::outcome_model_from_json(to_ordered(s.at("outcome")));
            if (!std::holds_alternative<ComplexContagion>(m)) {
                throw ValidationError("field 'params.study.outcome' must be complex_contagion");
            }
            c.model = std::get<ComplexContagion>(m);
        }
        c.graphs = ctx.config.replications;
        ctx.table = run_seeding_study(c, ctx.seed());
        const Comparison cmp = compare_methods(ctx.table, "degree", "optimal-block", "adoption", 2000, ctx.seed());
        ctx.table.extra["ratio_vs_degree"] = cmp.format();
        return;
    }
    const ConditionalGraphSampler sampler = ctx.sampler();
    const NodeId n = sampler.size();
    const NetModelEstimate theta = ctx.estimate();
    if (theta.kind != ModelKind::sbm) throw ValidationError("inputs.estimate must be an SBM estimate");
    const std::vector<int> blocks =
        ctx.has("blocks") ? ctx.labels("blocks", "block") : theta.sbm.memberships;
    const OutcomeModel model = p.contains("outcome") ? io::outcome_model_from_json(to_ordered(p.at("outcome")))
                                                     : OutcomeModel{ComplexContagion{}};
    SeedPlacement placement;
    const auto how = param<std::string>(p, "placement", "degree");
    if (how == "degree") {
        placement.kind = SeedPlacement::Kind::ranked;
        if (ctx.has("ard")) {
            const ArdMatrix ard = ctx.ard();
            for (Eigen::Index i = 0; i < ard.counts.rows(); ++i) placement.priority.push_back(ard.counts.row(i).sum());
        }
    } else if (how != "random") {
        throw ValidationError("field 'params.placement' must be degree or random");
    }
    const SeedingResult r = optimal_seeding(model, sampler, ctx.covariates(n), param<int>(p, "budget"), blocks,
                                            param<int>(p, "L", 500), placement, ctx.seed());
    OJson trace = OJson::array();
    for (std::size_t c = 0; c < r.trace.size(); ++c) {
        trace.push_back({{"allocation", r.trace[c].allocation}, {"mean", r.trace[c].mean}, {"se", r.trace[c].se}});
        ctx.table.add(static_cast<int>(c), "allocation", "mean", r.trace[c].mean);
    }
    ctx.write_json("seeding.json", OJson{{"best", r.best}, {"mean", r.mean}, {"se", r.se}, {"trace", trace}});
    ctx.table.add(-1, "optimal-block", "mean", r.mean);
    ctx.table.add(-1, "optimal-block", "se", r.se);
}

void run_bootstrap(Context& ctx) {
    const Json& p = ctx.config.params;
    const NetModelEstimate theta = ctx.estimate();
    const TraitAssignment traits = ctx.traits();
    const BootstrapResult b = bootstrap_ard(theta, traits, param<int>(p, "B", 100), ctx.seed());
    OJson reps = OJson::array();
    for (std::size_t r = 0; r < b.replicates.size(); ++r) {
        reps.push_back(io::estimate_to_json(b.replicates[r]));
        record_estimate(ctx, b.replicates[r], static_cast<int>(r));
    }
    ctx.write_json("replicates.json", OJson{{"failed", b.failed}, {"failures", b.failures}, {"replicates", reps}});
    ctx.table.add(-1, "bootstrap", "failed", b.failed);
}

}  // namespace

const std::vector<std::string>& RunConfig::experiments() {
    static const std::vector<std::string> kinds{"simulate", "ard", "estimate-net", "fit-outcome", "gate",
                                                "design-saturation", "seed-optimal", "bootstrap"};
    return kinds;
}

RunConfig RunConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    RunConfig c;
    try {
        c.experiment = j.value("experiment", std::string());
        if (j.contains("seed") && !j.at("seed").is_null()) c.seed = j.at("seed").get<std::uint64_t>();
        c.replications = j.value("replications", 1);
        if (j.contains("output")) c.output = j.at("output").get<std::string>();
        if (j.contains("params")) c.params = j.at("params");
        if (j.contains("inputs")) {
            for (const auto& [name, path] : j.at("inputs").items()) {
                std::filesystem::path fp = path.get<std::string>();
                if (fp.is_relative() && !base_dir.empty()) fp = base_dir / fp;
                c.inputs[name] = fp;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config has a field of the wrong type: ") + e.what());
    }
    for (const auto& [key, value] : j.items()) {
        static const std::vector<std::string> known{"experiment", "seed", "replications", "output", "params", "inputs"};
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ValidationError("unknown config field '" + key + "'");
        }
    }
    return c;
}

void RunConfig::validate() const {
    const auto& kinds = experiments();
    if (std::find(kinds.begin(), kinds.end(), experiment) == kinds.end()) {
        throw ValidationError("field 'experiment' must be one of simulate, ard, estimate-net, fit-outcome, gate, "
                              "design-saturation, seed-optimal, bootstrap");
    }
    if (!seed) throw ValidationError("missing field 'seed': runs need an explicit seed");
    if (replications < 1) throw ValidationError("field 'replications' must be >= 1");
    if (output.empty()) throw ValidationError("missing field 'output'");
    if (!params.is_object()) throw ValidationError("field 'params' must be an object");
    for (const auto& [name, path] : inputs) {
        if (!std::filesystem::exists(path)) {
            throw ValidationError("inputs." + name + ": file '" + path.string() + "' does not exist");
        }
    }
}

nlohmann::json RunConfig::canonical() const {
    nlohmann::json j{{"experiment", experiment}, {"replications", replications}, {"params", params}};
    j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
    nlohmann::json in = nlohmann::json::object();
    for (const auto& [name, path] : inputs) in[name] = fnv1a_hex(io::read_text(path));
    j["inputs"] = in;
    return j;
}

std::string RunConfig::hash() const { return fnv1a_hex(canonical().dump()); }

ResultTable run(const RunConfig& config) {
    config.validate();
    Context ctx(config);
    const std::string hash = config.hash();
    try {
        const auto& e = config.experiment;
        if (e == "simulate") {
            run_simulate(ctx);
        } else if (e == "ard") {
            run_ard(ctx);
        } else if (e == "estimate-net") {
            run_estimate_net(ctx);
        } else if (e == "fit-outcome") {
            run_fit_outcome(ctx);
        } else if (e == "gate") {
            run_gate(ctx);
        } else if (e == "design-saturation") {
            run_design(ctx);
        } else if (e == "seed-optimal") {
            run_seed_optimal(ctx);
        } else {
            run_bootstrap(ctx);
        }
    } catch (const std::exception& err) {
        const std::string message = config.experiment + ": " + err.what();
        ctx.table.config_hash = hash;
        ctx.table.failed = true;
        ctx.table.error = message;
        ctx.table.write(config.output);
        if (dynamic_cast<const ValidationError*>(&err)) throw ValidationError(message);
        if (dynamic_cast<const NumericalError*>(&err)) throw NumericalError(message);
        throw std::runtime_error(message);
    }
    ctx.table.config_hash = hash;
    ctx.table.write(config.output);
    return ctx.table;
}

}  // namespace netpartial
