// jumphedge: command-line front end for the experiment studies.
//
//   jumphedge run <config.json> [--threads N] [--out DIR] [--seed S] [--dump-paths K]
//   jumphedge validate <config.json>
//
// Exit codes: 0 success, 1 other failure, 2 configuration error, 3 numerical
// budget exceeded.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "jumphedge/config.hpp"
#include "jumphedge/experiment.hpp"

namespace {

constexpr int exit_config = 2;
constexpr int exit_budget = 3;

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hitting-time discretization experiments for jump-driven stochastic integrals"};
    app.require_subcommand(1);

    std::string run_path, validate_path, out_dir;
    unsigned threads = 0;
    std::optional<std::uint64_t> seed;
    std::size_t dump_paths = 0;

    auto* run = app.add_subcommand("run", "run the experiment described by a config file");
    run->add_option("config", run_path, "experiment config (JSON)")->required();
    run->add_option("--threads", threads, "worker threads; 0 uses every core. Output does not depend on it");
    run->add_option("--out", out_dir, "output directory (overrides output_dir)");
    run->add_option("--seed", seed, "master seed (overrides master_seed)");
    run->add_option("--dump-paths", dump_paths, "also write the first K simulated paths to paths/");

    auto* validate = app.add_subcommand("validate", "check a config file without running it");
    validate->add_option("config", validate_path, "experiment config (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    using namespace jumphedge;
    const std::string path = run->parsed() ? run_path : validate_path;
    try {
        const std::string text = read_file(path);
        ExperimentConfig cfg = parse_config_text(text);
        if (seed) cfg.seed = *seed;
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (validate->parsed()) {
            validate_config(cfg);
            std::cout << path << ": ok (" << to_string(cfg.kind) << ")\n";
            return 0;
        }
        // a run builds the same objects first thing, so config errors still surface before any paths

        const auto start = std::chrono::steady_clock::now();
        const auto report = run_experiment(cfg, {threads, dump_paths, text});
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        for (const auto& line : report.summary) std::cout << line << "\n";
        std::cout << "wrote " << report.files.size() << " files to " << report.directory << "\n";
        std::fprintf(stderr, "runtime %.1f s\n", secs);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const BudgetExceeded& e) {
        std::cerr << "numerical budget exceeded: " << e.what() << "\n";
        return exit_budget;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
