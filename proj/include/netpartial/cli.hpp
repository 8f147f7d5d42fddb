#pragma once

#include "netpartial/results.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace netpartial {

/// One experiment run. `inputs` maps names (graph, traits, ard, estimate,
/// ...) to files; `params` carries the experiment parameters.
struct RunConfig {
    std::string experiment;
    std::map<std::string, std::filesystem::path> inputs;
    nlohmann::json params = nlohmann::json::object();
    std::optional<std::uint64_t> seed;
    int replications = 1;
    std::filesystem::path output;

    static const std::vector<std::string>& experiments();

    /// Relative input paths resolve against `base_dir`.
    static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    /// Throws ValidationError naming the offending field.
    void validate() const;
    /// Canonical JSON of everything that affects results (not the output path).
    nlohmann::json canonical() const;
    std::string hash() const;
};

/// Runs the configured pipeline and writes its artifacts plus results.csv and
/// results.json into config.output. On failure the partial table is written
/// with failed = true before the error propagates.
ResultTable run(const RunConfig& config);

}  // namespace netpartial
