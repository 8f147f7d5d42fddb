#include "netpartial/results.hpp"

#include "netpartial/common.hpp"
#include "netpartial/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

namespace netpartial {

void ResultTable::add(int replication, std::string method, std::string metric, double value) {
    records.push_back({replication, std::move(method), std::move(metric), value});
}

void ResultTable::append(const std::vector<ResultRecord>& rows) {
    records.insert(records.end(), rows.begin(), rows.end());
}

bool ResultTable::has_method(const std::string& method) const {
    return std::any_of(records.begin(), records.end(), [&](const auto& r) { return r.method == method; });
}

std::vector<std::pair<int, double>> ResultTable::series(const std::string& method,
                                                        const std::string& metric) const {
    std::vector<std::pair<int, double>> out;
    for (const auto& r : records) {
        if (r.replication >= 0 && r.method == method && r.metric == metric) out.emplace_back(r.replication, r.value);
    }
    return out;
}

double ResultTable::summary(const std::string& method, const std::string& metric) const {
    for (const auto& r : records) {
        if (r.replication < 0 && r.method == method && r.metric == metric) return r.value;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

std::string ResultTable::to_csv() const {
    std::string out = "config_hash,replication,method,metric,value\n";
    for (const auto& r : records) {
        out += config_hash + "," + std::to_string(r.replication) + "," + r.method + "," + r.metric + "," +
               io::format_double(r.value) + "\n";
    }
    return out;
}

nlohmann::ordered_json ResultTable::sidecar() const {
    nlohmann::ordered_json j{{"config_hash", config_hash}, {"version", version}, {"failed", failed}};
    if (failed) j["error"] = error;
    j["records"] = records.size();
    for (const auto& [k, v] : extra.items()) j[k] = v;
    return j;
}

void ResultTable::write(const std::filesystem::path& dir) const {
    io::write_text(dir / "results.csv", to_csv());
    io::write_text(dir / "results.json", sidecar().dump(2) + "\n");
}

ResultTable ResultTable::read_csv(const std::filesystem::path& path) {
    const auto csv = io::read_csv(path);
    const std::vector<std::string> header{"config_hash", "replication", "method", "metric", "value"};
    if (csv.header != header) throw ValidationError("'" + path.string() + "' is not a result table");
    ResultTable t;
    for (const auto& row : csv.rows) {
        if (row.size() != 5) throw ValidationError("'" + path.string() + "' has a malformed row");
        t.config_hash = row[0];
        t.add(std::stoi(row[1]), row[2], row[3], std::stod(row[4]));
    }
    return t;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void summarize_errors(ResultTable& table, const std::vector<std::string>& methods) {
    for (const auto& m : methods) {
        const auto err = table.series(m, "error");
        const auto sq = table.series(m, "sq_error");
        const auto cov = table.series(m, "covered");
        const auto fails = table.series(m, "failed");
        if (!err.empty()) {
            double s = 0.0, ss = 0.0;
            for (auto [r, v] : err) s += v;
            for (auto [r, v] : sq) ss += v;
            table.add(-1, m, "bias", s / static_cast<double>(err.size()));
            table.add(-1, m, "rmse", std::sqrt(ss / static_cast<double>(sq.size())));
        }
        if (!cov.empty()) {
            double c = 0.0;
            for (auto [r, v] : cov) c += v;
            table.add(-1, m, "coverage", c / static_cast<double>(cov.size()));
        }
        table.add(-1, m, "replications", static_cast<double>(err.size()));
        table.add(-1, m, "failures", static_cast<double>(fails.size()));
    }
}

std::string Comparison::format() const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f (±%.2f)", ratio, (ci_high - ci_low) / 2.0);
    return buf;
}

Comparison compare_methods(const ResultTable& table, const std::string& baseline,
                           const std::string& challenger, const std::string& metric, int n_boot,
                           std::uint64_t seed) {
    for (const auto* m : {&baseline, &challenger}) {
        if (!table.has_method(*m)) throw ValidationError("method '" + *m + "' is not in the table");
    }
    std::map<int, double> base;
    for (auto [r, v] : table.series(baseline, metric)) base[r] = v;
    std::vector<double> b, c;
    for (auto [r, v] : table.series(challenger, metric)) {
        if (auto it = base.find(r); it != base.end()) {
            b.push_back(it->second);
            c.push_back(v);
        }
    }
    if (b.empty()) throw ValidationError("methods share no replications for metric '" + metric + "'");
    auto ratio = [](double sc, double sb) { return sc / sb; };
    Comparison out;
    out.replications = static_cast<int>(b.size());
    double sb = 0.0, sc = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        sb += b[i];
        sc += c[i];
    }
    out.ratio = ratio(sc, sb);
    std::vector<double> boots(static_cast<std::size_t>(n_boot));
    Rng rng = make_rng(seed, 0xb0);
    std::uniform_int_distribution<std::size_t> pick(0, b.size() - 1);
    for (auto& r : boots) {
        double xb = 0.0, xc = 0.0;
        for (std::size_t i = 0; i < b.size(); ++i) {
            const auto k = pick(rng);
            xb += b[k];
            xc += c[k];
        }
        r = ratio(xc, xb);
    }
    std::sort(boots.begin(), boots.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(boots.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, boots.size() - 1);
        return boots[lo] + (pos - static_cast<double>(lo)) * (boots[hi] - boots[lo]);
    };
    out.ci_low = n_boot > 0 ? quantile(0.025) : out.ratio;
    out.ci_high = n_boot > 0 ? quantile(0.975) : out.ratio;
    return out;
}

}  // namespace netpartial
