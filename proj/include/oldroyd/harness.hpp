#pragma once

// Experiment orchestration behind the command-line tool: config parsing,
// the five canned experiments and their reports.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "oldroyd/model.hpp"

namespace oldroyd {

enum class Command { Constants, VerifyBounds, LinearDecay, LowerBounds, Simulate };

const char* to_string(Command c);
/// Throws Error{ConfigError} for unknown names.
Command parse_command(std::string_view name);

struct Check {
    std::string name;
    bool pass = false;
    bool asserted = true;  // informational probes never affect the exit code
    nlohmann::json detail;
};

struct RunReport {
    Command command = Command::Constants;
    nlohmann::json config;  // resolved configuration
    std::vector<Check> checks;
    nlohmann::json results;
    std::vector<std::string> files;
    nlohmann::json timings;

    bool passed() const;
    int exit_code() const { return passed() ? 0 : 1; }
};

struct RunOptions {
    std::string output_dir;  // overrides config.output_dir when non-empty
    int jobs = 1;
    std::optional<std::uint64_t> seed;
};

/// The three reference sets (eps, mu) = (0, 0.5), (0.5, 0), (0.3, 0.3)
/// with kappa = beta = alpha = 1, b = 0.
std::vector<ModelParams> default_sweep();

/// `params` (one set) or `sweep` (list); `fallback` when neither is given.
/// Every entry is validated. Throws Error{ConfigError} or the validation error.
std::vector<ModelParams> parse_sweep(const nlohmann::json& config, const std::vector<ModelParams>& fallback);

/// Runs one experiment, writes its files and report.json into the output
/// directory. Throws Error for invalid configs and failed runs.
RunReport run_command(Command cmd, const nlohmann::json& config, const RunOptions& opt);

void to_json(nlohmann::json& j, const RunReport& r);

/// One line per check: PASS/FAIL (or pass/fail for informational probes) and the name.
std::string format_checks(const RunReport& r);

}  // namespace oldroyd
