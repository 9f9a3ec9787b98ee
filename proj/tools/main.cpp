// Command-line front-end: validate | phase | evolve | sweep.
// Exit codes: 0 success, 1 contract violation, 2 usage / config error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ptqm/cli.hpp"

namespace {

using namespace ptqm;

cli::RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    return cli::RunConfig::from_json(nlohmann::json::parse(in));
}

cli::SweepSpec load_sweep(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    return cli::SweepSpec::from_json(nlohmann::json::parse(in));
}

/// Routes command output to --out when given, else to stdout.
struct OutputTarget {
    std::ofstream file;
    std::ostream* stream = &std::cout;

    explicit OutputTarget(const std::string& path) {
        if (!path.empty()) {
            file.open(path, std::ios::binary);
            if (!file) throw std::invalid_argument("cannot open output file: " + path);
            stream = &file;
        }
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PT-symmetric two-level dynamics: unitary evolution with a "
                 "time-dependent metric, Berry-like phases and the monopole-plus-string "
                 "flux decomposition. All angles are radians."};
    app.require_subcommand(1);

    std::uint64_t seed = 42;
    long draws = 10000;
    double tolerance = 0.0;
    std::string config_path, out_path;
    bool hermitian_picture = false;
    bool no_evolution = false;

    auto* validate = app.add_subcommand("validate", "run the randomized invariant suite");
    validate->add_option("--seed", seed, "RNG seed")->capture_default_str();
    validate->add_option("--draws", draws, "number of random model points")->capture_default_str();
    validate->add_option("--tolerance", tolerance, "override every residual threshold");
    validate->add_option("--out", out_path, "write the report to a file");

    auto* phase = app.add_subcommand("phase", "analytic loop phase, flux decomposition, solid angle");
    phase->add_option("--config", config_path, "JSON run config")->required();
    phase->add_option("--out", out_path, "write the JSON record to a file");

    auto* evolve = app.add_subcommand("evolve", "integrate the evolution equation along the loop");
    evolve->add_option("--config", config_path, "JSON run config")->required();
    evolve->add_option("--out", out_path, "write the JSON record to a file");
    evolve->add_flag("--hermitian-picture", hermitian_picture,
                     "also evolve in the equivalent Hermitian picture");
    evolve->add_option("--tolerance", tolerance, "override the phase-residual tolerance");

    auto* sweep = app.add_subcommand("sweep", "grid sweep over {theta0, b_over_a, delta}, CSV output");
    sweep->add_option("--config", config_path, "JSON sweep config")->required();
    sweep->add_option("--out", out_path, "write the CSV to a file");
    sweep->add_flag("--no-evolution", no_evolution, "analytic columns only");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ptqm::cli::exit_ok : ptqm::cli::exit_usage;
    }

    try {
        OutputTarget out(out_path);
        if (*validate) return cli::run_validate(seed, draws, *out.stream, tolerance);
        if (*phase) return cli::run_phase(load_config(config_path), *out.stream, std::cerr);
        if (*evolve) {
            cli::RunConfig cfg = load_config(config_path);
            if (tolerance > 0.0) cfg.tol.phase = tolerance;
            return cli::run_evolve(cfg, hermitian_picture, *out.stream, std::cerr);
        }
        if (*sweep) return cli::run_sweep(load_sweep(config_path), no_evolution, *out.stream, std::cerr);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ptqm::cli::exit_usage;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return ptqm::cli::exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ptqm::cli::exit_contract;
    }
    return ptqm::cli::exit_usage;
}
