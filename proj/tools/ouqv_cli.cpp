// Command-line front end: one subcommand per experiment pipeline.
//
// Exit codes: 0 all verdicts pass, 2 numeric verdict failure,
// 1 configuration or IO error.

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ouqv/config.hpp"
#include "ouqv/csv.hpp"
#include "ouqv/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Simulation and verification toolkit for OU fields on Wiener space"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::int64_t seed_override = -1;
    int workers_override = 0;
    bool verbose = false;

    app.add_option("--config", config_path, "Path to the JSON experiment config")->required();
    app.add_option("--out", out_dir, "Output directory (default: config out_dir, or $OUQV_OUT_DIR)");
    app.add_option("--seed", seed_override, "Override the config seed");
    app.add_option("--workers", workers_override, "Override the config worker count");
    app.add_flag("--verbose", verbose, "Print per-metric rows");

    for (const std::string& name : ouqv::run::subcommands()) app.add_subcommand(name);

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        ouqv::cfg::ExperimentConfig conf = ouqv::cfg::load_config(config_path);
        if (seed_override >= 0) conf.seed = static_cast<std::uint64_t>(seed_override);
        if (workers_override > 0) conf.workers = workers_override;
        std::filesystem::path out = conf.out_dir;
        if (const char* env = std::getenv("OUQV_OUT_DIR"); env && *env) out = env;
        if (!out_dir.empty()) out = out_dir;

        const ouqv::io::ResultRecord rec = ouqv::run::run(command, conf, out);
        if (verbose) {
            for (const auto& r : rec.rows)
                std::cout << r.name << " = " << r.value << " (se " << r.se << ", ref "
                          << r.reference << ", " << r.provenance << ") " << r.verdict << "\n";
        }
        std::cout << command << ": " << (rec.passed() ? "PASS" : "FAIL") << "\n";
        return rec.passed() ? 0 : 2;
    } catch (const ouqv::cfg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
