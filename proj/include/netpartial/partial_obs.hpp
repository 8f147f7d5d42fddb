#pragma once

#include "netpartial/graph.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace netpartial {

using IntMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

/// n x T binary trait indicators. Rows may carry several traits.
struct TraitAssignment {
    IntMatrix indicators;

    NodeId size() const { return static_cast<NodeId>(indicators.rows()); }
    int trait_count() const { return static_cast<int>(indicators.cols()); }
    /// n_t, the number of nodes carrying each trait.
    Eigen::VectorXi counts() const;
    bool exclusive_and_exhaustive() const;

    static TraitAssignment from_labels(std::span<const int> labels, int T);
};

/// X*_it = number of neighbours of i carrying trait t.
struct ArdMatrix {
    IntMatrix counts;

    NodeId size() const { return static_cast<NodeId>(counts.rows()); }
    int trait_count() const { return static_cast<int>(counts.cols()); }
    /// X†_it = X*_it / n_t; columns with n_t = 0 are left at zero.
    Eigen::MatrixXd normalized(const TraitAssignment& traits) const;
};

enum class SampleKind {
    induced,  // every dyad among the sampled nodes is observed
    rds,      // additionally the full neighbour row of each sampled node
    masked,   // all nodes sampled; only retained edges are seen
};

/// A node-sampled or edge-masked view of a graph. Node ids are global.
struct SubgraphSample {
    SampleKind kind = SampleKind::induced;
    NodeId population = 0;             // n of the underlying graph
    std::vector<NodeId> nodes;         // I_m, sorted ascending
    std::vector<Edge> edges;           // observed edges, (i, j) with i < j
    std::vector<Edge> boundary;        // (sampled, unsampled) edges, RDS only
    std::optional<std::vector<double>> propensities;  // aligned with edges

    bool contains(NodeId i) const;
    Graph induced_graph() const;  // over the m sampled nodes, local ids
    void validate() const;
};

ArdMatrix generate_ard(const Graph& g, const TraitAssignment& traits);

/// Uniform m-subset conditioned on covering every block of `memberships`.
SubgraphSample sample_induced_subgraph(const Graph& g, int m, std::span<const int> memberships,
                                       std::uint64_t seed);

/// FIFO referral process: each recruit passes up to `coupons` referrals to
/// uniformly chosen unrecruited neighbours until max_m nodes are recruited.
SubgraphSample sample_rds(const Graph& g, std::span<const NodeId> seeds, int max_m, int coupons,
                          std::uint64_t seed);

using DyadPropensity = std::function<double(NodeId, NodeId)>;

/// Keeps each true edge independently with probability propensity(i, j).
SubgraphSample mask_edges(const Graph& g, const DyadPropensity& propensity, std::uint64_t seed);

/// Observed network information G* handed to the estimators.
struct ArdObservation {
    ArdMatrix ard;
    TraitAssignment traits;
};
struct FullGraphObservation {
    Graph graph;
};
using PartialNetwork = std::variant<ArdObservation, SubgraphSample, FullGraphObservation>;

}  // namespace netpartial
