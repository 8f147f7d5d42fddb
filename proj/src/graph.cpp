#include "netpartial/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <tuple>

namespace netpartial {

Graph::Graph(NodeId n) : n_(n), offsets_(static_cast<std::size_t>(n) + 1, 0) {
    if (n < 0) throw ValidationError("graph size must be nonnegative");
}

Graph Graph::from_edges(NodeId n, std::span<const Edge> edges) {
    Graph g(n);
    std::vector<std::vector<NodeId>> lists(static_cast<std::size_t>(n));
    for (const auto& [u, v] : edges) {
        if (u < 0 || v < 0 || u >= n || v >= n) {
            throw ValidationError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                                  ") out of range for n=" + std::to_string(n));
        }
        if (u == v) throw ValidationError("self loop at node " + std::to_string(u));
        lists[u].push_back(v);
        lists[v].push_back(u);
    }
    for (NodeId i = 0; i < n; ++i) {
        auto& l = lists[i];
        std::sort(l.begin(), l.end());
        l.erase(std::unique(l.begin(), l.end()), l.end());
        g.offsets_[i + 1] = g.offsets_[i] + l.size();
    }
    g.adj_.reserve(g.offsets_.back());
    for (auto& l : lists) g.adj_.insert(g.adj_.end(), l.begin(), l.end());
    return g;
}

std::vector<int> Graph::degrees() const {
    std::vector<int> d(static_cast<std::size_t>(n_));
    for (NodeId i = 0; i < n_; ++i) d[i] = degree(i);
    return d;
}

double Graph::mean_degree() const {
    return n_ == 0 ? 0.0 : static_cast<double>(adj_.size()) / n_;
}

bool Graph::has_edge(NodeId i, NodeId j) const {
    const auto nb = neighbors(i);
    return std::binary_search(nb.begin(), nb.end(), j);
}

std::vector<Edge> Graph::edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count());
    for (NodeId i = 0; i < n_; ++i) {
        for (NodeId j : neighbors(i)) {
            if (j > i) out.emplace_back(i, j);
        }
    }
    return out;
}

std::vector<int> SbmParams::block_sizes() const {
    std::vector<int> sizes(static_cast<std::size_t>(std::max(K, 0)), 0);
    for (int k : memberships) {
        if (k >= 0 && k < K) ++sizes[k];
    }
    return sizes;
}

void SbmParams::validate(bool require_nonempty) const {
    if (K < 1) throw ValidationError("SBM needs K >= 1");
    if (P.rows() != K || P.cols() != K) throw ValidationError("SBM P must be K x K");
    for (int a = 0; a < K; ++a) {
        for (int b = 0; b < K; ++b) {
            const double p = P(a, b);
            if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("SBM P entries must lie in [0,1]");
            if (std::abs(p - P(b, a)) > 1e-12) throw ValidationError("SBM P must be symmetric");
        }
    }
    for (std::size_t i = 0; i < memberships.size(); ++i) {
        if (memberships[i] < 0 || memberships[i] >= K) {
            throw ValidationError("membership of node " + std::to_string(i) + " out of range");
        }
    }
    if (require_nonempty) {
        const auto sizes = block_sizes();
        for (int k = 0; k < K; ++k) {
            if (sizes[k] == 0) throw ValidationError("SBM block " + std::to_string(k) + " is empty");
        }
    }
}

void BetaParams::validate() const {
    for (std::size_t i = 0; i < nu.size(); ++i) {
        if (!(nu[i] > 0.0) || !std::isfinite(nu[i])) {
            throw ValidationError("beta model affinity nu[" + std::to_string(i) +
                                  "] must be positive");
        }
    }
}

Graph sample_dyad_independent(NodeId n, const std::function<double(NodeId, NodeId)>& prob,
                              std::uint64_t seed) {
    std::vector<Edge> edges;
    for (NodeId i = 0; i < n; ++i) {
        for (NodeId j = i + 1; j < n; ++j) {
            const double p = prob(i, j);
            if (p <= 0.0) continue;
            if (p >= 1.0 || counter_uniform(seed, static_cast<std::uint64_t>(i),
                                            static_cast<std::uint64_t>(j)) < p) {
                edges.emplace_back(i, j);
            }
        }
    }
    return Graph::from_edges(n, edges);
}

Graph sample_sbm(const SbmParams& params, std::uint64_t seed) {
    params.validate(true);
    const auto& z = params.memberships;
    const auto& P = params.P;
    return sample_dyad_independent(
        params.size(), [&](NodeId i, NodeId j) { return P(z[i], z[j]); }, seed);
}

Graph sample_beta_model(const BetaParams& params, std::uint64_t seed) {
    params.validate();
    const auto& nu = params.nu;
    return sample_dyad_independent(
        params.size(), [&](NodeId i, NodeId j) { return std::min(nu[i] * nu[j], 1.0); }, seed);
}

std::vector<double> matrix_power_apply(const Graph& g, std::span<const double> v, int t) {
    if (t < 0) throw ValidationError("matrix power must be nonnegative");
    if (static_cast<NodeId>(v.size()) != g.size()) {
        throw ValidationError("vector length does not match graph size");
    }
    std::vector<double> cur(v.begin(), v.end());
    std::vector<double> next(cur.size());
    for (int step = 0; step < t; ++step) {
        for (NodeId i = 0; i < g.size(); ++i) {
            double s = 0.0;
            for (NodeId j : g.neighbors(i)) s += cur[j];
            next[i] = s;
        }
        cur.swap(next);
    }
    return cur;
}

std::vector<int> canonical_labels(std::span<const int> labels) {
    std::map<int, int> remap;
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, inserted] = remap.try_emplace(labels[i], static_cast<int>(remap.size()));
        out[i] = it->second;
    }
    return out;
}

namespace {

// Greedy merging of communities keyed by their lowest member index. Runs to
// the modularity peak, then, if more than k groups remain, keeps taking the
// merge with the smallest modularity loss.
std::vector<int> agglomerate(const Graph& g, int k) {
    const NodeId n = g.size();
    const double m = static_cast<double>(g.edge_count());
    std::vector<int> owner(static_cast<std::size_t>(n));
    std::iota(owner.begin(), owner.end(), 0);
    std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(n));
    std::vector<double> a(static_cast<std::size_t>(n), 0.0);
    std::vector<std::map<int, double>> cross(static_cast<std::size_t>(n));
    std::vector<bool> alive(static_cast<std::size_t>(n), true);
    for (NodeId i = 0; i < n; ++i) {
        members[i] = {i};
        a[i] = m > 0 ? g.degree(i) / (2.0 * m) : 0.0;
        for (NodeId j : g.neighbors(i)) cross[i][j] = 1.0;
    }
    auto gain = [&](int c, int d, double edges_between) {
        return m > 0 ? edges_between / m - 2.0 * a[c] * a[d] : 0.0;
    };
    auto better = [](double q, int c, int d, double best_q, int best_c, int best_d) {
        if (best_c < 0) return true;
        if (q > best_q + 1e-15) return true;
        if (q < best_q - 1e-15) return false;
        return std::pair(c, d) < std::pair(best_c, best_d);
    };

    int groups = n;
    bool peaked = false;
    while (groups > 1) {
        int bc = -1, bd = -1;
        double best_q = 0.0;
        if (!peaked) {
            // Improving merges are ranked by gain relative to the smaller
            // side, so small groups are absorbed before large ones are joined.
            double best_score = 0.0;
            for (int c = 0; c < n; ++c) {
                if (!alive[c]) continue;
                for (const auto& [d, w] : cross[c]) {
                    if (d <= c) continue;
                    const double q = gain(c, d, w);
                    if (q <= 0.0) continue;
                    const double lo = std::min(a[c], a[d]);
                    const double score = q / lo;
                    if (better(score, c, d, best_score, bc, bd)) {
                        best_score = score;
                        best_q = q;
                        bc = c;
                        bd = d;
                    }
                }
            }
            if (bc < 0) peaked = true;
        }
        if (peaked) {
            if (groups <= k) break;
            for (int c = 0; c < n; ++c) {
                if (!alive[c]) continue;
                for (const auto& [d, w] : cross[c]) {
                    if (d > c && better(gain(c, d, w), c, d, best_q, bc, bd)) {
                        best_q = gain(c, d, w);
                        bc = c;
                        bd = d;
                    }
                }
                for (int d = c + 1; d < n; ++d) {
                    if (!alive[d] || cross[c].count(d)) continue;
                    if (better(gain(c, d, 0.0), c, d, best_q, bc, bd)) {
                        best_q = gain(c, d, 0.0);
                        bc = c;
                        bd = d;
                    }
                }
            }
        }
        // Merge bd into bc (bc < bd keeps the lowest-index key).
        for (const auto& [e, w] : cross[bd]) {
            if (e == bc) continue;
            cross[bc][e] += w;
            cross[e].erase(bd);
            cross[e][bc] += w;
        }
        cross[bc].erase(bd);
        cross[bd].clear();
        a[bc] += a[bd];
        for (NodeId v : members[bd]) owner[v] = bc;
        members[bc].insert(members[bc].end(), members[bd].begin(), members[bd].end());
        members[bd].clear();
        alive[bd] = false;
        --groups;
    }
    return canonical_labels(owner);
}

// Leading-eigenvector bisection of one group of the modularity matrix.
// Returns the side (0/1) of each member and the modularity change.
std::pair<std::vector<char>, double> bisect(const Graph& g, const std::vector<NodeId>& group) {
    const double m = static_cast<double>(g.edge_count());
    const auto s = static_cast<Eigen::Index>(group.size());
    std::map<NodeId, Eigen::Index> local;
    for (Eigen::Index i = 0; i < s; ++i) local[group[i]] = i;
    Eigen::MatrixXd B(s, s);
    for (Eigen::Index i = 0; i < s; ++i) {
        for (Eigen::Index j = 0; j < s; ++j) B(i, j) = -g.degree(group[i]) * g.degree(group[j]) / (2.0 * m);
        for (NodeId v : g.neighbors(group[i])) {
            if (auto it = local.find(v); it != local.end()) B(i, it->second) += 1.0;
        }
    }
    for (Eigen::Index i = 0; i < s; ++i) B(i, i) -= B.row(i).sum();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(B);
    const Eigen::VectorXd v = eig.eigenvectors().col(s - 1);
    std::vector<char> side(static_cast<std::size_t>(s));
    for (Eigen::Index i = 0; i < s; ++i) side[i] = v[i] > 1e-12 ? 1 : 0;
    if (std::all_of(side.begin(), side.end(), [&](char c) { return c == side[0]; })) {
        std::fill(side.begin(), side.end(), 0);
        side.back() = 1;
    }
    Eigen::VectorXd sv(s);
    for (Eigen::Index i = 0; i < s; ++i) sv[i] = side[i] ? 1.0 : -1.0;
    return {side, sv.dot(B * sv) / (4.0 * m)};
}

// Single-node moves to the neighbouring group with the largest modularity
// gain, in node order, never emptying a group.
void refine(const Graph& g, std::vector<int>& labels, int k) {
    const NodeId n = g.size();
    const double m = static_cast<double>(g.edge_count());
    if (m == 0) return;
    std::vector<double> D(static_cast<std::size_t>(k), 0.0);
    std::vector<int> size(static_cast<std::size_t>(k), 0);
    for (NodeId i = 0; i < n; ++i) {
        D[labels[i]] += g.degree(i);
        ++size[labels[i]];
    }
    std::vector<double> e(static_cast<std::size_t>(k));
    for (int sweep = 0; sweep < 100; ++sweep) {
        bool moved = false;
        for (NodeId i = 0; i < n; ++i) {
            const int c = labels[i];
            if (size[c] == 1) continue;
            std::fill(e.begin(), e.end(), 0.0);
            for (NodeId j : g.neighbors(i)) e[labels[j]] += 1.0;
            const double ki = g.degree(i);
            int best = c;
            double best_gain = 1e-12;
            for (int d = 0; d < k; ++d) {
                if (d == c || e[d] == 0.0) continue;
                const double q = (e[d] - e[c]) / m - ki * (D[d] - D[c] + ki) / (2.0 * m * m);
                if (q > best_gain) {
                    best_gain = q;
                    best = d;
                }
            }
            if (best != c) {
                D[c] -= ki;
                D[best] += ki;
                --size[c];
                ++size[best];
                labels[i] = best;
                moved = true;
            }
        }
        if (!moved) break;
    }
}

}  // namespace

std::vector<int> detect_communities(const Graph& g, int k) {
    const NodeId n = g.size();
    if (k < 1) throw ValidationError("community count must be >= 1");
    if (k > n) throw ValidationError("community count exceeds node count");

    std::vector<int> labels = agglomerate(g, k);
    int groups = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    // Fewer groups than requested at the peak: split the group whose
    // bisection costs the least modularity.
    while (groups < k) {
        std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(groups));
        for (NodeId i = 0; i < n; ++i) members[labels[i]].push_back(i);
        int best = -1;
        double best_dq = 0.0;
        std::vector<char> best_side;
        for (int c = 0; c < groups; ++c) {
            if (members[c].size() < 2) continue;
            std::vector<char> side(members[c].size(), 0);
            double dq = 0.0;
            if (g.edge_count() > 0) {
                std::tie(side, dq) = bisect(g, members[c]);
            } else {
                side[0] = 1;
            }
            if (best < 0 || dq > best_dq + 1e-15) {
                best = c;
                best_dq = dq;
                best_side = std::move(side);
            }
        }
        for (std::size_t i = 0; i < members[best].size(); ++i) {
            if (best_side[i]) labels[members[best][i]] = groups;
        }
        ++groups;
    }
    refine(g, labels, k);
    return canonical_labels(labels);
}

}  // namespace netpartial
