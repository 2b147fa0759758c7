#include "edgeld/config.hpp"
#include "edgeld/error.hpp"
#include "edgeld/experiments.hpp"
#include "edgeld/io.hpp"
#include "edgeld/runner.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct Flags
{
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<std::size_t> workers;
};

int run_subcommand(const std::string& name, const Flags& flags)
{
    using namespace edgeld;
    try {
        ExperimentConfig config;
        if (flags.config_path.empty()) {
            config = parse_config("{\"experiment\": \"" + name + "\"}");
        } else {
            config = parse_config(read_text_file(flags.config_path));
            if (experiment_name(config.experiment) != name)
                throw ConfigError("config file describes experiment '" + experiment_name(config.experiment) +
                                  "' but the subcommand is '" + name + "'");
        }
        if (flags.seed)
            config.seed = *flags.seed;
        if (!flags.out.empty())
            config.output_dir = flags.out;
        const std::size_t workers = flags.workers ? *flags.workers : workers_from_environment();
        if (workers < 1)
            throw ConfigError("--workers must be at least 1");

        const auto artifacts = run_experiment(config, workers);
        write_artifacts(artifacts, config.output_dir);
        for (const auto& w : artifacts.warnings)
            std::cerr << "warning: " << w << "\n";
        for (const auto& c : artifacts.checks)
            std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " estimate=" << format_double(c.estimate)
                      << " target=" << format_double(c.target) << " tolerance=" << format_double(c.tolerance)
                      << "\n";
        std::cout << "wrote " << config.output_dir << " (config " << artifacts.config_hash << ", "
                  << format_double(artifacts.seconds) << " s)\n";
        return ExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(std::current_exception());
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Edge and large-deviation experiments for high-temperature gases and tridiagonal matrices"};
    app.footer(edgeld::exit_code_help() +
               "\nEnvironment:\n  EDGELD_WORKERS  worker threads when --workers is not given (default 1)\n");
    app.require_subcommand(1);

    Flags flags;
    std::string chosen;
    for (const auto& name : edgeld::experiment_names()) {
        auto* sub = app.add_subcommand(name, "Run the " + name + " experiment");
        sub->add_option("--config", flags.config_path, "JSON configuration file")->check(CLI::ExistingFile);
        sub->add_option("--seed", flags.seed, "Seed overriding the configuration");
        sub->add_option("--out", flags.out, "Output directory overriding the configuration");
        sub->add_option("--workers", flags.workers, "Worker threads");
        sub->callback([&chosen, name] { chosen = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : edgeld::ExitConfig;
    }
    return run_subcommand(chosen, flags);
}
