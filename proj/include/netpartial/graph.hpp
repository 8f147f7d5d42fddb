#pragma once

#include "netpartial/common.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace netpartial {

using Edge = std::pair<NodeId, NodeId>;

/// Simple undirected graph stored as sorted neighbor lists (CSR layout).
/// Symmetric, no self loops, no multi-edges.
class Graph {
public:
    Graph() = default;
    explicit Graph(NodeId n);

    /// Builds a graph from unordered pairs. Duplicates are merged; self loops
    /// and out-of-range endpoints are rejected.
    static Graph from_edges(NodeId n, std::span<const Edge> edges);

    NodeId size() const { return n_; }
    std::size_t edge_count() const { return adj_.size() / 2; }

    std::span<const NodeId> neighbors(NodeId i) const {
        return {adj_.data() + offsets_[i], adj_.data() + offsets_[i + 1]};
    }
    int degree(NodeId i) const { return static_cast<int>(offsets_[i + 1] - offsets_[i]); }
    std::vector<int> degrees() const;
    double mean_degree() const;
    bool has_edge(NodeId i, NodeId j) const;

    /// Edges as (i, j) with i < j, lexicographically sorted.
    std::vector<Edge> edges() const;

    friend bool operator==(const Graph& a, const Graph& b) {
        return a.n_ == b.n_ && a.offsets_ == b.offsets_ && a.adj_ == b.adj_;
    }

private:
    NodeId n_ = 0;
    std::vector<std::size_t> offsets_{0};
    std::vector<NodeId> adj_;
};

/// Stochastic blockmodel parameters. Block labels are 0-based.
struct SbmParams {
    int K = 0;
    Eigen::MatrixXd P;
    std::vector<int> memberships;

    NodeId size() const { return static_cast<NodeId>(memberships.size()); }
    std::vector<int> block_sizes() const;
    /// Throws ValidationError on asymmetric P, entries outside [0,1], or
    /// labels out of range; with require_nonempty also on empty blocks.
    void validate(bool require_nonempty = true) const;
};

/// Beta model: P(G_ij = 1) = min(nu_i * nu_j, 1).
struct BetaParams {
    std::vector<double> nu;

    NodeId size() const { return static_cast<NodeId>(nu.size()); }
    void validate() const;
};

/// Samples every dyad i<j independently with probability prob(i, j), using a
/// per-dyad counter stream so the result does not depend on loop order.
Graph sample_dyad_independent(NodeId n, const std::function<double(NodeId, NodeId)>& prob,
                              std::uint64_t seed);

Graph sample_sbm(const SbmParams& params, std::uint64_t seed);
Graph sample_beta_model(const BetaParams& params, std::uint64_t seed);

/// G^t v by repeated sparse multiplication; t = 0 returns v.
std::vector<double> matrix_power_apply(const Graph& g, std::span<const double> v, int t);

/// Greedy agglomerative modularity maximisation down to exactly k groups.
/// Labels are 0-based and ordered by each group's lowest node index.
std::vector<int> detect_communities(const Graph& g, int k);

/// Relabels a partition so labels appear in order of first node index.
std::vector<int> canonical_labels(std::span<const int> labels);

}  // namespace netpartial
