#pragma once

#include "netpartial/design.hpp"
#include "netpartial/outcomes.hpp"
#include "netpartial/results.hpp"

#include <cstdint>
#include <vector>

namespace netpartial {

/// Equal-sized contiguous blocks: node i belongs to block i * K / n.
std::vector<int> balanced_blocks(NodeId n, int K);

/// Exclusive traits that follow the blocks: with probability `fidelity` a
/// node takes one of its block's `per_block` traits, otherwise any other.
TraitAssignment block_traits(std::span<const int> blocks, int K, int per_block, double fidelity,
                             std::uint64_t seed);

/// Global average treatment effect under cluster randomization. Each
/// replication draws an SBM with `clusters` blocks whose expected within- and
/// between-block degrees are uniform on the given ranges, finds `clusters`
/// communities, treats half of them, and compares regression on the full
/// graph, regression on ARD-based feature averages, HT and DM.
struct GateStudyConfig {
    NodeId n = 256;
    int clusters = 4;
    double in_degree_low = 6.0, in_degree_high = 18.0;
    double out_degree_low = 1.0, out_degree_high = 6.0;
    int replications = 200;
    int L = 50;
    UganderLinear model;
};

ResultTable run_gate_study(const GateStudyConfig& config, std::uint64_t seed);

/// Logistic hearing outcome with Bernoulli treatment on a sparse SBM; the
/// outcome coefficients are fit by MC-EM given ARD (or the full graph).
struct HearingStudyConfig {
    NodeId n = 100;
    int K = 3;
    int traits_per_block = 2;
    double trait_fidelity = 0.8;
    double mean_degree = 6.0;
    double in_out_ratio = 4.0;  // P_kk / P_kk'
    double treat_p = 0.1;
    HearingLogistic model{-1.0, 1.0, {0.0, 0.5, 0.05, 0.005}};
    int L = 30;
    int replications = 200;
    bool full_graph = false;
};

ResultTable run_hearing_study(const HearingStudyConfig& config, std::uint64_t seed);

/// Complex-contagion seeding: choose blocks from ARD with optimal_seeding and
/// compare realized adoption on the true graph against top-degree seeding.
struct SeedingStudyConfig {
    NodeId n = 200;
    int K = 8;
    double p_in = 0.3;
    double p_out = 0.01;
    ComplexContagion model{2.0, 0.1, 3};
    int budget = 2;
    int L = 500;
    int graphs = 20;
    int sims_per_graph = 25;
};

ResultTable run_seeding_study(const SeedingStudyConfig& config, std::uint64_t seed);

}  // namespace netpartial
