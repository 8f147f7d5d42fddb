#pragma once

#include "netpartial/inference.hpp"
#include "netpartial/net_estimators.hpp"
#include "netpartial/outcomes.hpp"
#include "netpartial/partial_obs.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace netpartial::io {

using Json = nlohmann::ordered_json;

/// Rows of a comma-separated file; the first row is the header.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);

/// Shortest round-trip decimal form, so repeated runs print identical bytes.
std::string format_double(double x);

// Edge list `src,dst`. The node count is max id + 1 unless given.
std::string edges_to_csv(const Graph& g);
Graph graph_from_csv(const CsvTable& table, NodeId n = -1);

Json sbm_to_json(const SbmParams& params);
SbmParams sbm_from_json(const Json& j);

// Traits `node,trait_1..`, ARD `node,X_1..`, covariates `node,x1..`.
std::string traits_to_csv(const TraitAssignment& traits);
TraitAssignment traits_from_csv(const CsvTable& table);
std::string ard_to_csv(const ArdMatrix& ard);
ArdMatrix ard_from_csv(const CsvTable& table);
std::string covariates_to_csv(const Eigen::MatrixXd& x);
Eigen::MatrixXd covariates_from_csv(const CsvTable& table);

Json subsample_to_json(const SubgraphSample& s);
SubgraphSample subsample_from_json(const Json& j);

Json estimate_to_json(const NetModelEstimate& theta);
NetModelEstimate estimate_from_json(const Json& j);

Json fit_to_json(const FitResult& fit);
Json gate_to_json(const GateEstimate& g);

/// `{"model": tag, ...params}` with tags ugander, hearing_logistic,
/// complex_contagion, local_diffusion, generic_linear.
OutcomeModel outcome_model_from_json(const Json& j);
Json outcome_model_to_json(const OutcomeModel& m);

/// `{"kind": tag, ...}` with tags treated_count, treated_fraction,
/// neighbor_indicator, risk_share, hearing.
ExposureSpec exposure_from_json(const Json& j);

/// `{"preset": "ugander"}`, or explicit exposures plus product terms such as
/// `[["intercept"], ["treatment", "exposure:0"]]`.
FeatureMap feature_map_from_json(const Json& j);

Eigen::MatrixXd matrix_from_json(const Json& j);
Json matrix_to_json(const Eigen::MatrixXd& m);

}  // namespace netpartial::io
