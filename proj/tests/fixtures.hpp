#pragma once

#include "netpartial/graph.hpp"

#include <Eigen/Dense>

#include <vector>

namespace fixtures {

using netpartial::Edge;
using netpartial::Graph;
using netpartial::NodeId;

inline Graph path(NodeId n) {
    std::vector<Edge> e;
    for (NodeId i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
    return Graph::from_edges(n, e);
}

inline Graph complete(NodeId n) {
    std::vector<Edge> e;
    for (NodeId i = 0; i < n; ++i)
        for (NodeId j = i + 1; j < n; ++j) e.emplace_back(i, j);
    return Graph::from_edges(n, e);
}

inline Graph star(NodeId leaves) {
    std::vector<Edge> e;
    for (NodeId i = 1; i <= leaves; ++i) e.emplace_back(0, i);
    return Graph::from_edges(leaves + 1, e);
}

/// `count` disjoint cliques of `size` nodes, numbered block by block.
inline Graph cliques(int count, NodeId size) {
    std::vector<Edge> e;
    for (int c = 0; c < count; ++c)
        for (NodeId i = 0; i < size; ++i)
            for (NodeId j = i + 1; j < size; ++j) e.emplace_back(c * size + i, c * size + j);
    return Graph::from_edges(count * size, e);
}

inline Eigen::MatrixXd dense(const Graph& g) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(g.size(), g.size());
    for (const auto& [i, j] : g.edges()) A(i, j) = A(j, i) = 1.0;
    return A;
}

inline bool symmetric_simple(const Graph& g) {
    for (NodeId i = 0; i < g.size(); ++i) {
        for (NodeId j : g.neighbors(i)) {
            if (j == i || !g.has_edge(j, i)) return false;
        }
    }
    return true;
}

}  // namespace fixtures
