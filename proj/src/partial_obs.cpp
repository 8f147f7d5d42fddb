#include "netpartial/partial_obs.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <string>

namespace netpartial {

Eigen::VectorXi TraitAssignment::counts() const { return indicators.colwise().sum().transpose(); }

bool TraitAssignment::exclusive_and_exhaustive() const {
    for (Eigen::Index i = 0; i < indicators.rows(); ++i) {
        if (indicators.row(i).sum() != 1) return false;
    }
    return true;
}

TraitAssignment TraitAssignment::from_labels(std::span<const int> labels, int T) {
    TraitAssignment out;
    out.indicators = IntMatrix::Zero(static_cast<Eigen::Index>(labels.size()), T);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= T) {
            throw ValidationError("trait label of node " + std::to_string(i) + " out of range");
        }
        out.indicators(static_cast<Eigen::Index>(i), labels[i]) = 1;
    }
    return out;
}

Eigen::MatrixXd ArdMatrix::normalized(const TraitAssignment& traits) const {
    const Eigen::VectorXi nt = traits.counts();
    Eigen::MatrixXd out = counts.cast<double>();
    for (Eigen::Index t = 0; t < out.cols(); ++t) {
        if (nt[t] > 0) {
            out.col(t) /= nt[t];
        } else {
            out.col(t).setZero();
        }
    }
    return out;
}

bool SubgraphSample::contains(NodeId i) const {
    return std::binary_search(nodes.begin(), nodes.end(), i);
}

Graph SubgraphSample::induced_graph() const {
    std::vector<Edge> local;
    local.reserve(edges.size());
    auto index_of = [&](NodeId v) {
        return static_cast<NodeId>(std::lower_bound(nodes.begin(), nodes.end(), v) - nodes.begin());
    };
    for (const auto& [u, v] : edges) local.emplace_back(index_of(u), index_of(v));
    return Graph::from_edges(static_cast<NodeId>(nodes.size()), local);
}

void SubgraphSample::validate() const {
    if (!std::is_sorted(nodes.begin(), nodes.end()) ||
        std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end()) {
        throw ValidationError("sampled nodes must be sorted and unique");
    }
    for (NodeId v : nodes) {
        if (v < 0 || v >= population) throw ValidationError("sampled node out of range");
    }
    for (const auto& [u, v] : edges) {
        if (u >= v || !contains(u) || !contains(v)) {
            throw ValidationError("observed edge (" + std::to_string(u) + "," +
                                  std::to_string(v) + ") is not between sampled nodes");
        }
    }
    for (const auto& [u, v] : boundary) {
        if (!contains(u) || contains(v) || v < 0 || v >= population) {
            throw ValidationError("boundary edge must join a sampled and an unsampled node");
        }
    }
    if (propensities) {
        if (propensities->size() != edges.size()) {
            throw ValidationError("propensities must align with observed edges");
        }
        for (double p : *propensities) {
            if (!(p > 0.0 && p <= 1.0)) throw ValidationError("propensities must lie in (0,1]");
        }
    }
}

ArdMatrix generate_ard(const Graph& g, const TraitAssignment& traits) {
    if (traits.size() != g.size()) throw ValidationError("trait matrix needs one row per node");
    ArdMatrix out;
    out.counts = IntMatrix::Zero(g.size(), traits.trait_count());
    for (NodeId i = 0; i < g.size(); ++i) {
        for (NodeId j : g.neighbors(i)) out.counts.row(i) += traits.indicators.row(j);
    }
    return out;
}

namespace {

SubgraphSample induced_sample(const Graph& g, std::vector<NodeId> nodes, SampleKind kind) {
    std::sort(nodes.begin(), nodes.end());
    SubgraphSample s;
    s.kind = kind;
    s.population = g.size();
    s.nodes = std::move(nodes);
    std::vector<char> in(static_cast<std::size_t>(g.size()), 0);
    for (NodeId v : s.nodes) in[v] = 1;
    for (NodeId u : s.nodes) {
        for (NodeId v : g.neighbors(u)) {
            if (in[v]) {
                if (u < v) s.edges.emplace_back(u, v);
            } else if (kind == SampleKind::rds) {
                s.boundary.emplace_back(u, v);
            }
        }
    }
    return s;
}

// First k entries of a partial Fisher-Yates shuffle of pool.
template <typename T>
void partial_shuffle(std::vector<T>& pool, std::size_t k, Rng& rng) {
    k = std::min(k, pool.size());
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
}

}  // namespace

SubgraphSample sample_induced_subgraph(const Graph& g, int m, std::span<const int> memberships,
                                       std::uint64_t seed) {
    const NodeId n = g.size();
    if (static_cast<NodeId>(memberships.size()) != n) {
        throw ValidationError("memberships need one entry per node");
    }
    int K = 0;
    for (int k : memberships) {
        if (k < 0) throw ValidationError("memberships must be nonnegative");
        K = std::max(K, k + 1);
    }
    std::vector<std::vector<NodeId>> by_block(static_cast<std::size_t>(K));
    for (NodeId i = 0; i < n; ++i) by_block[memberships[i]].push_back(i);
    const int present = static_cast<int>(
        std::count_if(by_block.begin(), by_block.end(), [](const auto& b) { return !b.empty(); }));
    if (m < present) {
        throw ValidationError("sample size m=" + std::to_string(m) + " is below the block count " +
                              std::to_string(present));
    }
    if (m > n) throw ValidationError("sample size exceeds node count");

    std::vector<NodeId> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    if (m == n) return induced_sample(g, all, SampleKind::induced);

    Rng rng = make_rng(seed, 1);
    auto covers = [&](const std::vector<NodeId>& pick) {
        std::vector<char> seen(static_cast<std::size_t>(K), 0);
        for (NodeId v : pick) seen[memberships[v]] = 1;
        for (int k = 0; k < K; ++k) {
            if (!by_block[k].empty() && !seen[k]) return false;
        }
        return true;
    };
    constexpr int kMaxRejections = 10000;
    for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
        std::vector<NodeId> pool = all;
        partial_shuffle(pool, static_cast<std::size_t>(m), rng);
        pool.resize(static_cast<std::size_t>(m));
        if (covers(pool)) return induced_sample(g, std::move(pool), SampleKind::induced);
    }
    // Coverage is rare under uniform sampling: force one node per block and
    // fill the remainder uniformly.
    std::vector<NodeId> pick;
    std::vector<char> taken(static_cast<std::size_t>(n), 0);
    for (auto& block : by_block) {
        if (block.empty()) continue;
        std::uniform_int_distribution<std::size_t> d(0, block.size() - 1);
        const NodeId v = block[d(rng)];
        pick.push_back(v);
        taken[v] = 1;
    }
    std::vector<NodeId> rest;
    for (NodeId v = 0; v < n; ++v) {
        if (!taken[v]) rest.push_back(v);
    }
    partial_shuffle(rest, static_cast<std::size_t>(m) - pick.size(), rng);
    pick.insert(pick.end(), rest.begin(), rest.begin() + (m - static_cast<int>(pick.size())));
    return induced_sample(g, std::move(pick), SampleKind::induced);
}

SubgraphSample sample_rds(const Graph& g, std::span<const NodeId> seeds, int max_m, int coupons,
                          std::uint64_t seed) {
    if (seeds.empty()) throw ValidationError("RDS needs at least one seed");
    if (coupons < 1) throw ValidationError("RDS needs coupons >= 1");
    if (max_m < 1) throw ValidationError("RDS needs max_m >= 1");
    const NodeId n = g.size();
    std::vector<char> recruited(static_cast<std::size_t>(n), 0);
    std::vector<NodeId> order;
    std::deque<NodeId> queue;
    for (NodeId s : seeds) {
        if (s < 0 || s >= n) throw ValidationError("RDS seed out of range");
        if (recruited[s] || static_cast<int>(order.size()) >= max_m) continue;
        recruited[s] = 1;
        order.push_back(s);
        queue.push_back(s);
    }
    Rng rng = make_rng(seed, 2);
    while (!queue.empty() && static_cast<int>(order.size()) < max_m) {
        const NodeId u = queue.front();
        queue.pop_front();
        std::vector<NodeId> candidates;
        for (NodeId v : g.neighbors(u)) {
            if (!recruited[v]) candidates.push_back(v);
        }
        partial_shuffle(candidates, static_cast<std::size_t>(coupons), rng);
        const std::size_t give = std::min<std::size_t>(candidates.size(), coupons);
        for (std::size_t c = 0; c < give && static_cast<int>(order.size()) < max_m; ++c) {
            const NodeId v = candidates[c];
            recruited[v] = 1;
            order.push_back(v);
            queue.push_back(v);
        }
    }
    return induced_sample(g, std::move(order), SampleKind::rds);
}

SubgraphSample mask_edges(const Graph& g, const DyadPropensity& propensity, std::uint64_t seed) {
    SubgraphSample s;
    s.kind = SampleKind::masked;
    s.population = g.size();
    s.nodes.resize(static_cast<std::size_t>(g.size()));
    std::iota(s.nodes.begin(), s.nodes.end(), 0);
    std::vector<double> kept_p;
    const std::uint64_t stream = derive_seed(seed, 0xed6e);
    for (const auto& [u, v] : g.edges()) {
        const double p = propensity(u, v);
        if (!(p > 0.0 && p <= 1.0)) {
            throw ValidationError("edge propensity must lie in (0,1] at dyad (" + std::to_string(u) +
                                  "," + std::to_string(v) + ")");
        }
        if (p >= 1.0 || counter_uniform(stream, static_cast<std::uint64_t>(u),
                                        static_cast<std::uint64_t>(v)) < p) {
            s.edges.emplace_back(u, v);
            kept_p.push_back(p);
        }
    }
    s.propensities = std::move(kept_p);
    return s;
}

}  // namespace netpartial
