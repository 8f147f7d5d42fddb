#include "netpartial/net_estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace netpartial {

NodeId NetModelEstimate::size() const {
    return kind == ModelKind::sbm ? sbm.size() : beta.size();
}

double NetModelEstimate::edge_probability(NodeId i, NodeId j) const {
    if (i == j) return 0.0;
    if (kind == ModelKind::sbm) return sbm.P(sbm.memberships[i], sbm.memberships[j]);
    return std::min(beta.nu[i] * beta.nu[j], 1.0);
}

Graph sample_from(const NetModelEstimate& theta, std::uint64_t seed) {
    return theta.kind == ModelKind::sbm ? sample_sbm(theta.sbm, seed)
                                        : sample_beta_model(theta.beta, seed);
}

namespace {

int block_count(std::span<const int> memberships) {
    int K = 0;
    for (int k : memberships) {
        if (k < 0) throw ValidationError("block labels must be nonnegative");
        K = std::max(K, k + 1);
    }
    return K;
}

std::vector<int> sizes_of(std::span<const int> memberships, int K) {
    std::vector<int> sizes(static_cast<std::size_t>(K), 0);
    for (int k : memberships) ++sizes[k];
    return sizes;
}

void require_traits_nonempty(const TraitAssignment& traits) {
    const Eigen::VectorXi nt = traits.counts();
    for (Eigen::Index t = 0; t < nt.size(); ++t) {
        if (nt[t] == 0) throw ValidationError("empty trait " + std::to_string(t));
    }
}

std::string pair_name(int a, int b) {
    return "(" + std::to_string(a) + "," + std::to_string(b) + ")";
}

}  // namespace

std::vector<int> cluster_ard(const ArdMatrix& ard, const TraitAssignment& traits, int k) {
    const NodeId n = ard.size();
    if (traits.size() != n || traits.trait_count() != ard.trait_count()) {
        throw ValidationError("ARD and trait matrices disagree in shape");
    }
    if (k < 1 || k > n) throw ValidationError("cluster count must lie in [1, n]");
    require_traits_nonempty(traits);
    const Eigen::MatrixXd x = ard.normalized(traits);

    const auto N = static_cast<std::size_t>(n);
    std::vector<double> dist(N * N, 0.0);
    auto d = [&](std::size_t a, std::size_t b) -> double& { return dist[a * N + b]; };
    for (std::size_t a = 0; a < N; ++a) {
        for (std::size_t b = a + 1; b < N; ++b) {
            const double v = (x.row(static_cast<Eigen::Index>(a)) - x.row(static_cast<Eigen::Index>(b))).norm();
            d(a, b) = v;
            d(b, a) = v;
        }
    }
    std::vector<int> owner(N);
    std::iota(owner.begin(), owner.end(), 0);
    std::vector<double> weight(N, 1.0);
    std::vector<char> alive(N, 1);
    std::vector<std::size_t> nn(N, N);
    const double inf = std::numeric_limits<double>::infinity();

    auto refresh = [&](std::size_t a) {
        double best = inf;
        std::size_t arg = N;
        for (std::size_t b = 0; b < N; ++b) {
            if (b == a || !alive[b]) continue;
            if (d(a, b) < best) {
                best = d(a, b);
                arg = b;
            }
        }
        nn[a] = arg;
    };
    for (std::size_t a = 0; a < N; ++a) refresh(a);

    for (std::size_t groups = N; groups > static_cast<std::size_t>(k); --groups) {
        // Lexicographically lowest pair among the closest.
        double best = inf;
        std::size_t ba = N, bb = N;
        for (std::size_t a = 0; a < N; ++a) {
            if (!alive[a] || nn[a] == N) continue;
            const std::size_t lo = std::min(a, nn[a]), hi = std::max(a, nn[a]);
            const double v = d(a, nn[a]);
            if (v < best || (v == best && std::pair(lo, hi) < std::pair(ba, bb))) {
                best = v;
                ba = lo;
                bb = hi;
            }
        }
        // Lance-Williams update for average linkage; keep the lower key.
        const double wa = weight[ba], wb = weight[bb];
        for (std::size_t c = 0; c < N; ++c) {
            if (!alive[c] || c == ba || c == bb) continue;
            const double v = (wa * d(ba, c) + wb * d(bb, c)) / (wa + wb);
            d(ba, c) = v;
            d(c, ba) = v;
        }
        alive[bb] = 0;
        weight[ba] = wa + wb;
        for (std::size_t v = 0; v < N; ++v) {
            if (owner[v] == static_cast<int>(bb)) owner[v] = static_cast<int>(ba);
        }
        refresh(ba);
        for (std::size_t c = 0; c < N; ++c) {
            if (!alive[c] || c == ba) continue;
            if (nn[c] == ba || nn[c] == bb) {
                refresh(c);
            } else if (d(c, ba) < d(c, nn[c]) || (d(c, ba) == d(c, nn[c]) && ba < nn[c])) {
                nn[c] = ba;
            }
        }
    }
    return canonical_labels(owner);
}

Eigen::MatrixXd omega_matrix(const TraitAssignment& traits, std::span<const int> memberships,
                             int K) {
    if (static_cast<NodeId>(memberships.size()) != traits.size()) {
        throw ValidationError("memberships need one entry per node");
    }
    const Eigen::VectorXi nt = traits.counts();
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(traits.trait_count(), K);
    for (NodeId i = 0; i < traits.size(); ++i) {
        for (int t = 0; t < traits.trait_count(); ++t) {
            if (traits.indicators(i, t)) omega(t, memberships[i]) += 1.0;
        }
    }
    for (int t = 0; t < traits.trait_count(); ++t) {
        if (nt[t] > 0) omega.row(t) /= nt[t];
    }
    return omega;
}

Eigen::MatrixXd ptilde_matrix(const ArdMatrix& ard, const TraitAssignment& traits,
                              std::span<const int> memberships, int K) {
    const Eigen::VectorXi nt = traits.counts();
    const auto nk = sizes_of(memberships, K);
    Eigen::MatrixXd pt = Eigen::MatrixXd::Zero(traits.trait_count(), K);
    for (NodeId i = 0; i < ard.size(); ++i) {
        pt.col(memberships[i]) += ard.counts.row(i).transpose().cast<double>();
    }
    for (int t = 0; t < pt.rows(); ++t) {
        for (int k = 0; k < K; ++k) {
            pt(t, k) = (nt[t] > 0 && nk[k] > 0) ? pt(t, k) / (static_cast<double>(nk[k]) * nt[t]) : 0.0;
        }
    }
    return pt;
}

namespace {

// Design for vec(Omega P) in the upper-triangle parametrization of P.
struct SymmetricDesign {
    int K;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;

    int index(int a, int c) const {
        const int lo = std::min(a, c), hi = std::max(a, c);
        return lo * K - lo * (lo - 1) / 2 + (hi - lo);
    }

    SymmetricDesign(const Eigen::MatrixXd& omega, const Eigen::MatrixXd& ptilde)
        : K(static_cast<int>(omega.cols())) {
        const auto T = omega.rows();
        const int q = K * (K + 1) / 2;
        A = Eigen::MatrixXd::Zero(T * K, q);
        b.resize(T * K);
        for (Eigen::Index t = 0; t < T; ++t) {
            for (int k = 0; k < K; ++k) {
                const Eigen::Index row = t * K + k;
                b[row] = ptilde(t, k);
                for (int a = 0; a < K; ++a) A(row, index(a, k)) += omega(t, a);
            }
        }
    }

    Eigen::MatrixXd unpack(const Eigen::VectorXd& v) const {
        Eigen::MatrixXd P(K, K);
        for (int a = 0; a < K; ++a) {
            for (int c = 0; c < K; ++c) P(a, c) = v[index(a, c)];
        }
        return P;
    }
};

Eigen::VectorXd clamp01(Eigen::VectorXd v) { return v.cwiseMax(0.0).cwiseMin(1.0); }

// Box-constrained least squares: accelerated projected gradient, then an
// exact solve on the detected free set when it satisfies the KKT conditions.
Eigen::VectorXd box_least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                  const BlockSolveOptions& options) {
    const Eigen::MatrixXd Q = A.transpose() * A;
    const Eigen::VectorXd c = A.transpose() * b;
    const auto q = Q.rows();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Q, Eigen::EigenvaluesOnly);
    const double L = std::max(eig.eigenvalues().maxCoeff(), 1e-300);

    Eigen::VectorXd x = clamp01(Q.ldlt().solve(c));
    Eigen::VectorXd y = x;
    double t = 1.0;
    for (int it = 0; it < options.max_iters; ++it) {
        const Eigen::VectorXd next = clamp01(y - (Q * y - c) / L);
        const double change = (next - x).lpNorm<Eigen::Infinity>();
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = next + ((t - 1.0) / t_next) * (next - x);
        x = next;
        t = t_next;
        if (change <= options.tol) break;
    }

    const double bound_tol = 1e-7;
    for (int round = 0; round < 4; ++round) {
        const Eigen::VectorXd g = Q * x - c;
        std::vector<int> free_idx;
        Eigen::VectorXd fixed = Eigen::VectorXd::Zero(q);
        for (Eigen::Index i = 0; i < q; ++i) {
            if (x[i] <= bound_tol && g[i] > 0.0) {
                fixed[i] = 0.0;
            } else if (x[i] >= 1.0 - bound_tol && g[i] < 0.0) {
                fixed[i] = 1.0;
            } else {
                free_idx.push_back(static_cast<int>(i));
            }
        }
        Eigen::VectorXd cand = fixed;
        if (!free_idx.empty()) {
            const auto f = static_cast<Eigen::Index>(free_idx.size());
            Eigen::MatrixXd Qff(f, f);
            Eigen::VectorXd rhs(f);
            for (Eigen::Index r = 0; r < f; ++r) {
                rhs[r] = c[free_idx[r]] - Q.row(free_idx[r]).dot(fixed);
                for (Eigen::Index s = 0; s < f; ++s) Qff(r, s) = Q(free_idx[r], free_idx[s]);
            }
            const Eigen::VectorXd sol = Qff.ldlt().solve(rhs);
            for (Eigen::Index r = 0; r < f; ++r) cand[free_idx[r]] = sol[r];
        }
        if (!cand.allFinite() || cand.minCoeff() < -1e-12 || cand.maxCoeff() > 1.0 + 1e-12) break;
        cand = clamp01(cand);
        const Eigen::VectorXd gc = Q * cand - c;
        bool kkt = true;
        const double gtol = 1e-10 * (1.0 + c.lpNorm<Eigen::Infinity>());
        for (Eigen::Index i = 0; i < q; ++i) {
            if (cand[i] <= 0.0 && gc[i] < -gtol) kkt = false;
            if (cand[i] >= 1.0 && gc[i] > gtol) kkt = false;
        }
        x = cand;
        if (kkt) break;
    }
    return x;
}

double gram_condition(const Eigen::MatrixXd& omega) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(omega);
    const auto& s = svd.singularValues();
    const double smin = s[s.size() - 1];
    if (smin <= 0.0) return std::numeric_limits<double>::infinity();
    const double r = s[0] / smin;
    return r * r;
}

}  // namespace

Eigen::MatrixXd solve_block_probabilities(const Eigen::MatrixXd& omega,
                                          const Eigen::MatrixXd& ptilde,
                                          const BlockSolveOptions& options) {
    if (omega.rows() != ptilde.rows() || omega.cols() != ptilde.cols()) {
        throw ValidationError("Omega and Ptilde must both be T x K");
    }
    if (omega.rows() < omega.cols()) {
        throw ValidationError("need at least as many traits as blocks (T >= K)");
    }
    if (!(gram_condition(omega) <= options.cond_cap)) {
        throw NumericalError("traits do not identify blocks");
    }
    if (options.solver == BlockSolver::unconstrained_symmetrized) {
        const Eigen::MatrixXd raw =
            (omega.transpose() * omega).ldlt().solve(omega.transpose() * ptilde);
        const Eigen::MatrixXd sym = 0.5 * (raw + raw.transpose());
        return sym.cwiseMax(0.0).cwiseMin(1.0);
    }
    const SymmetricDesign design(omega, ptilde);
    return design.unpack(box_least_squares(design.A, design.b, options));
}

NetModelEstimate estimate_sbm_from_ard(const ArdMatrix& ard, const TraitAssignment& traits,
                                       std::span<const int> memberships,
                                       const BlockSolveOptions& options) {
    if (ard.size() != traits.size() || ard.trait_count() != traits.trait_count()) {
        throw ValidationError("ARD and trait matrices disagree in shape");
    }
    if (static_cast<NodeId>(memberships.size()) != ard.size()) {
        throw ValidationError("memberships need one entry per node");
    }
    const int K = block_count(memberships);
    if (traits.trait_count() < K) {
        throw ValidationError("need at least as many traits as blocks (T >= K)");
    }
    require_traits_nonempty(traits);
    const auto nk = sizes_of(memberships, K);
    for (int k = 0; k < K; ++k) {
        if (nk[k] == 0) throw ValidationError("block " + std::to_string(k) + " is empty");
    }

    const Eigen::MatrixXd omega = omega_matrix(traits, memberships, K);
    NetModelEstimate est;
    est.kind = ModelKind::sbm;
    est.ptilde = ptilde_matrix(ard, traits, memberships, K);
    est.diagnostics.cond = gram_condition(omega);
    est.diagnostics.cluster_sizes = nk;
    est.sbm.K = K;
    est.sbm.P = solve_block_probabilities(omega, est.ptilde, options);
    est.sbm.memberships.assign(memberships.begin(), memberships.end());
    return est;
}

NetModelEstimate estimate_sbm_from_subgraph(const SubgraphSample& sample,
                                            std::span<const int> memberships) {
    sample.validate();
    if (static_cast<NodeId>(memberships.size()) != sample.population) {
        throw ValidationError("memberships need one entry per population node");
    }
    const int K = block_count(memberships);
    std::vector<double> m(static_cast<std::size_t>(K), 0.0);
    for (NodeId v : sample.nodes) m[memberships[v]] += 1.0;

    Eigen::MatrixXd hits = Eigen::MatrixXd::Zero(K, K);
    for (std::size_t e = 0; e < sample.edges.size(); ++e) {
        const auto [u, v] = sample.edges[e];
        const double w = sample.propensities ? 1.0 / (*sample.propensities)[e] : 1.0;
        const int a = memberships[u], c = memberships[v];
        hits(a, c) += w;
        if (a != c) hits(c, a) += w;
    }
    NetModelEstimate est;
    est.kind = ModelKind::sbm;
    est.sbm.K = K;
    est.sbm.P.resize(K, K);
    for (int a = 0; a < K; ++a) {
        for (int c = a; c < K; ++c) {
            const double dyads = a == c ? m[a] * (m[a] - 1.0) / 2.0 : m[a] * m[c];
            if (dyads <= 0.0) {
                throw ValidationError("no sampled dyads for block pair " + pair_name(a, c));
            }
            const double p = std::clamp(hits(a, c) / dyads, 0.0, 1.0);
            est.sbm.P(a, c) = p;
            est.sbm.P(c, a) = p;
        }
    }
    est.sbm.memberships.assign(memberships.begin(), memberships.end());
    est.diagnostics.cluster_sizes = sizes_of(memberships, K);
    return est;
}

NetModelEstimate estimate_sbm_from_rds(const SubgraphSample& sample,
                                       std::span<const int> memberships) {
    sample.validate();
    if (static_cast<NodeId>(memberships.size()) != sample.population) {
        throw ValidationError("memberships need one entry per population node");
    }
    const int K = block_count(memberships);
    std::vector<double> M(static_cast<std::size_t>(K), 0.0);
    for (NodeId v : sample.nodes) M[memberships[v]] += 1.0;

    // Ordered-pair counts: within-block edges count twice.
    Eigen::MatrixXd linked = Eigen::MatrixXd::Zero(K, K);
    for (const auto& [u, v] : sample.edges) {
        const int a = memberships[u], c = memberships[v];
        linked(a, c) += 1.0;
        linked(c, a) += 1.0;
    }
    NetModelEstimate est;
    est.kind = ModelKind::sbm;
    est.sbm.K = K;
    est.sbm.P.resize(K, K);
    for (int a = 0; a < K; ++a) {
        for (int c = a; c < K; ++c) {
            double p;
            if (a == c) {
                if (M[a] < 2.0) {
                    throw ValidationError("block " + std::to_string(a) +
                                          " needs at least 2 recruits");
                }
                p = linked(a, a) / (M[a] * (M[a] - 1.0));
            } else {
                if (M[a] < 1.0 || M[c] < 1.0) {
                    throw ValidationError("no recruits for block pair " + pair_name(a, c));
                }
                p = linked(a, c) / (M[a] * M[c]);
            }
            est.sbm.P(a, c) = p;
            est.sbm.P(c, a) = p;
        }
    }
    est.sbm.memberships.assign(memberships.begin(), memberships.end());
    est.diagnostics.cluster_sizes = sizes_of(memberships, K);
    return est;
}

NetModelEstimate fit_beta_model(std::span<const int> degrees, const BetaFitOptions& options) {
    const auto n = degrees.size();
    if (n < 2) throw ValidationError("beta model needs at least two nodes");
    for (std::size_t i = 0; i < n; ++i) {
        if (degrees[i] <= 0) {
            throw ValidationError("beta model needs positive degrees; node " + std::to_string(i) +
                                  " has degree " + std::to_string(degrees[i]));
        }
    }
    std::vector<double> nu(n), next(n);
    for (std::size_t i = 0; i < n; ++i) nu[i] = std::sqrt(degrees[i] / static_cast<double>(n - 1));

    // The raw map is homogeneous of degree -1 and flips the overall scale each
    // step; the geometric mean with the current iterate shares its fixed point.
    NetModelEstimate est;
    est.kind = ModelKind::beta;
    est.diagnostics.converged = false;
    for (int it = 1; it <= options.max_iters; ++it) {
        const double total = std::accumulate(nu.begin(), nu.end(), 0.0);
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double mapped = degrees[i] / (total - nu[i]);
            next[i] = std::sqrt(nu[i] * mapped);
            change = std::max(change, std::abs(next[i] - nu[i]));
        }
        nu.swap(next);
        est.diagnostics.iterations = it;
        if (change <= options.tol) {
            est.diagnostics.converged = true;
            break;
        }
    }
    est.beta.nu = std::move(nu);
    return est;
}

std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    if (cost.cols() != n) throw ValidationError("assignment cost matrix must be square");
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> assignment(static_cast<std::size_t>(n));
    for (int j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
    return assignment;
}

namespace {

// Relabels replicate block a as target[a].
void relabel(NetModelEstimate& est, const std::vector<int>& target) {
    const int K = est.sbm.K;
    Eigen::MatrixXd P(K, K);
    for (int a = 0; a < K; ++a) {
        for (int c = 0; c < K; ++c) P(target[a], target[c]) = est.sbm.P(a, c);
    }
    est.sbm.P = P;
    for (int& k : est.sbm.memberships) k = target[k];
    if (est.ptilde.size() > 0) {
        Eigen::MatrixXd pt(est.ptilde.rows(), K);
        for (int a = 0; a < K; ++a) pt.col(target[a]) = est.ptilde.col(a);
        est.ptilde = pt;
    }
    std::vector<int> sizes(static_cast<std::size_t>(K));
    for (int a = 0; a < K; ++a) sizes[target[a]] = est.diagnostics.cluster_sizes[a];
    est.diagnostics.cluster_sizes = sizes;
}

}  // namespace

BootstrapResult bootstrap_ard(const NetModelEstimate& theta_hat, const TraitAssignment& traits,
                              int b, std::uint64_t seed, const BlockSolveOptions& options) {
    if (b < 1) throw ValidationError("bootstrap needs b >= 1");
    if (theta_hat.kind != ModelKind::sbm) throw ValidationError("ARD bootstrap needs an SBM estimate");
    theta_hat.sbm.validate(true);
    if (traits.size() != theta_hat.size()) throw ValidationError("traits need one row per node");
    const int K = theta_hat.sbm.K;
    const Eigen::MatrixXd reference =
        theta_hat.ptilde.size() > 0
            ? theta_hat.ptilde
            : Eigen::MatrixXd(omega_matrix(traits, theta_hat.sbm.memberships, K) * theta_hat.sbm.P);

    std::vector<std::optional<NetModelEstimate>> slots(static_cast<std::size_t>(b));
    std::vector<std::string> errors(static_cast<std::size_t>(b));
    parallel_for(static_cast<std::size_t>(b), [&](std::size_t r) {
        try {
            const Graph g = sample_from(theta_hat, derive_seed(seed, r, 0xb007));
            const ArdMatrix ard = generate_ard(g, traits);
            const auto z = cluster_ard(ard, traits, K);
            NetModelEstimate est = estimate_sbm_from_ard(ard, traits, z, options);
            Eigen::MatrixXd cost(K, K);
            for (int a = 0; a < K; ++a) {
                for (int c = 0; c < K; ++c) {
                    cost(a, c) = (est.ptilde.col(a) - reference.col(c)).squaredNorm();
                }
            }
            relabel(est, hungarian(cost));
            slots[r] = std::move(est);
        } catch (const std::exception& e) {
            errors[r] = e.what();
        }
    });
    BootstrapResult out;
    for (std::size_t r = 0; r < slots.size(); ++r) {
        if (slots[r]) {
            out.replicates.push_back(std::move(*slots[r]));
        } else {
            ++out.failed;
            out.failures.push_back("replicate " + std::to_string(r) + ": " + errors[r]);
        }
    }
    return out;
}

}  // namespace netpartial
