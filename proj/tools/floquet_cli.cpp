#include <iostream>
#include <string>

#include <omp.h>

#include <CLI11.hpp>

#include "floquet/config.hpp"
#include "floquet/runner.hpp"

using namespace floquet;

namespace {

int do_validate(const std::string& path) {
    ValidationReport rep;
    try {
        rep = validate_sections(read_sections(path));
    } catch (const std::exception& e) {
        rep.errors.push_back(std::string("parse: ") + e.what());
    }
    std::cout << rep.to_json().dump(2) << "\n";
    return rep.ok() ? 0 : 1;
}

int do_run(const std::string& path, const std::string& out, long long seed, bool print_params) {
    RunConfig cfg;
    try {
        cfg = load_config(path);
    } catch (const ConfigError& e) {
        for (const auto& err : e.report().errors) std::cerr << "error: " << err << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    if (seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(seed);
        cfg.exp.seed = cfg.seed;
    }
    if (print_params) std::cout << describe_params(cfg);
    try {
        const RunSummary s = run_experiment(cfg, out.empty() ? cfg.out : out, std::cerr);
        if (s.total_failure) {
            std::cerr << "error: every sweep point failed\n";
            return 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Driven-qubit and cavity simulation runner"};
    app.require_subcommand(1);
    std::string out;
    long long seed = -1;
    int threads = 0;
    bool print_params = false;
    app.add_option("--out", out, "output directory (overrides RunConfig.out)");
    app.add_option("--seed", seed, "seed (overrides RunConfig.seed)");
    app.add_option("--threads", threads, "OpenMP threads for sweeps")->check(CLI::NonNegativeNumber);
    app.add_flag("--print-params", print_params, "echo the resolved device and noise parameters");

    std::string run_path, validate_path;
    auto* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", run_path, "config file")->required();
    auto* validate = app.add_subcommand("validate", "check a config and print a JSON report");
    validate->add_option("config", validate_path, "config file or JSON sidecar")->required();
    for (auto* sub : {run, validate}) {
        sub->add_option("--out", out, "output directory");
        sub->add_option("--seed", seed, "seed");
        sub->add_option("--threads", threads, "OpenMP threads");
        sub->add_flag("--print-params", print_params, "echo parameters");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    if (threads > 0) omp_set_num_threads(threads);
    if (*validate) return do_validate(validate_path);
    return do_run(run_path, out, seed, print_params);
}
