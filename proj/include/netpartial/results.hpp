#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace netpartial {

inline constexpr const char* kVersion = "0.1.0";

struct ResultRecord {
    int replication = 0;  // -1 marks a summary row
    std::string method;
    std::string metric;
    double value = 0.0;
};

/// Long-format result table. Every CSV row carries the config hash.
struct ResultTable {
    std::string config_hash;
    std::string version = kVersion;
    bool failed = false;
    std::string error;
    std::vector<ResultRecord> records;
    nlohmann::ordered_json extra = nlohmann::ordered_json::object();

    void add(int replication, std::string method, std::string metric, double value);
    void append(const std::vector<ResultRecord>& rows);
    bool has_method(const std::string& method) const;
    /// Values of one method and metric keyed by replication, summaries excluded.
    std::vector<std::pair<int, double>> series(const std::string& method, const std::string& metric) const;
    /// The summary row (replication -1), NaN when absent.
    double summary(const std::string& method, const std::string& metric) const;

    std::string to_csv() const;
    nlohmann::ordered_json sidecar() const;
    /// Writes results.csv and results.json into `dir`.
    void write(const std::filesystem::path& dir) const;
    static ResultTable read_csv(const std::filesystem::path& path);
};

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

/// Adds bias, rmse and (where present) coverage summary rows for each method
/// from per-replication `error`, `sq_error` and `covered` records.
void summarize_errors(ResultTable& table, const std::vector<std::string>& methods);

struct Comparison {
    double ratio = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int replications = 0;

    /// "ratio (±half-width)" with two decimals.
    std::string format() const;
};

/// mean(challenger) / mean(baseline) over the shared replications, with a
/// percentile bootstrap interval that resamples replications.
Comparison compare_methods(const ResultTable& table, const std::string& baseline,
                           const std::string& challenger, const std::string& metric,
                           int n_boot = 2000, std::uint64_t seed = 0);

}  // namespace netpartial
