#include "netpartial/cli.hpp"
#include "netpartial/common.hpp"
#include "netpartial/io.hpp"
#include "netpartial/results.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

namespace {

int report(const std::string& kind, const std::string& message, int code) {
    nlohmann::ordered_json err{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
    std::cerr << err.dump() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace netpartial;
    CLI::App app{"Causal inference and experimental design with partially observed networks"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    for (const auto& name : RunConfig::experiments()) {
        auto* sub = app.add_subcommand(name, "Run the " + name + " pipeline from a JSON config");
        sub->add_option("--config", config_path, "Experiment config JSON")->required();
        sub->add_option("--out", out_dir, "Output directory (overrides the config)");
        sub->add_option("--seed", seed, "RNG seed (overrides the config)");
        sub->add_option("--threads", threads, "Worker threads; NETPARTIAL_THREADS takes precedence");
    }
    std::string table_path, baseline, challenger, metric;
    int n_boot = 2000;
    auto* compare = app.add_subcommand("compare", "Ratio of a metric between two methods of a result table");
    compare->add_option("--table", table_path, "results.csv from a run")->required();
    compare->add_option("--baseline", baseline)->required();
    compare->add_option("--challenger", challenger)->required();
    compare->add_option("--metric", metric)->required();
    compare->add_option("--boot", n_boot, "Bootstrap resamples");
    compare->add_option("--seed", seed, "Bootstrap seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report("validation", e.what(), 2);
    }

    try {
        if (const char* env = std::getenv("NETPARTIAL_THREADS"); env && *env) {
            set_thread_count(static_cast<std::size_t>(std::stoul(env)));
        } else if (threads) {
            if (*threads < 0) throw ValidationError("--threads must be nonnegative");
            set_thread_count(static_cast<std::size_t>(*threads));
        }

        if (compare->parsed()) {
            const ResultTable table = ResultTable::read_csv(table_path);
            const Comparison c = compare_methods(table, baseline, challenger, metric, n_boot, seed.value_or(0));
            nlohmann::ordered_json j{{"baseline", baseline},     {"challenger", challenger},
                                     {"metric", metric},         {"ratio", c.ratio},
                                     {"ci_low", c.ci_low},       {"ci_high", c.ci_high},
                                     {"replications", c.replications}, {"formatted", c.format()}};
            std::cout << j.dump(2) << "\n";
            return 0;
        }

        const std::string experiment = app.get_subcommands().front()->get_name();
        const std::filesystem::path path(config_path);
        RunConfig config = RunConfig::from_json(io::read_json(path), path.parent_path());
        if (config.experiment.empty()) config.experiment = experiment;
        if (config.experiment != experiment) {
            throw ValidationError("config experiment '" + config.experiment + "' does not match subcommand '" +
                                  experiment + "'");
        }
        if (seed) config.seed = seed;
        if (!out_dir.empty()) config.output = out_dir;
        const ResultTable table = run(config);
        std::cout << table.sidecar().dump(2) << "\n";
        return 0;
    } catch (const ValidationError& e) {
        return report("validation", e.what(), 2);
    } catch (const NumericalError& e) {
        return report("numerical", e.what(), 3);
    } catch (const std::exception& e) {
        return report("internal", e.what(), 1);
    }
}
