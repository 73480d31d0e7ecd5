#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "oldroyd/error.hpp"
#include "oldroyd/harness.hpp"
#include "oldroyd/io.hpp"

namespace {

// --jobs wins, then OLDROYD_JOBS, then the hardware thread count.
int resolve_jobs(int flag) {
    if (flag > 0) return flag;
    if (const char* env = std::getenv("OLDROYD_JOBS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
        throw oldroyd::Error(oldroyd::ErrorCode::ConfigError, "OLDROYD_JOBS must be a positive integer");
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diffusive Oldroyd-B numerical laboratory"};
    app.require_subcommand(1, 1);

    std::string config_path, out_dir;
    int jobs = 0;
    std::uint64_t seed = 0;
    for (const char* name : {"constants", "verify-bounds", "linear-decay", "lower-bounds", "simulate"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
        sub->add_option("--jobs", jobs, "worker threads (default: OLDROYD_JOBS or all cores)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "seed for randomized inputs (overrides seed)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Usage errors share the generic error status; --help stays 0.
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        const CLI::App* sub = app.get_subcommands().front();
        const oldroyd::Command cmd = oldroyd::parse_command(sub->get_name());
        oldroyd::RunOptions opt;
        opt.output_dir = out_dir;
        opt.jobs = resolve_jobs(jobs);
        if (sub->count("--seed") > 0) opt.seed = seed;

        const oldroyd::RunReport report = oldroyd::run_command(cmd, oldroyd::read_json_file(config_path), opt);
        std::cout << oldroyd::format_checks(report);
        std::cout << (report.passed() ? "all asserted checks passed" : "asserted checks failed") << "\n";
        std::cout << "report: " << report.files.back() << "\n";
        return report.exit_code();
    } catch (const oldroyd::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
