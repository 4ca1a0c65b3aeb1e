#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "nsfde/model.hpp"

namespace nsfde {

/// Exit-code contract of the batch runner:
///   0 — experiment completed, no violation of a verified inequality
///       (an inadmissible parameter set is a finding, not a failure),
///   1 — configuration or runtime error,
///   2 — a bound/condition violation was detected.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitViolation = 2;

struct RunOverrides {
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

struct RunOutcome {
    int exit_code = kExitOk;
    nlohmann::json report;
};

/// Derive the exit code from a finished report (pure; property-tested).
int exit_code_for(const nlohmann::json& report);

/// Execute the experiment described by a config JSON. Writes report.json
/// and the experiment's CSV artifacts into the output directory
/// (atomically, write-then-rename). Schema violations throw ConfigError
/// with the offending field path.
RunOutcome run_experiment(const nlohmann::json& config, const RunOverrides& overrides);

/// Convenience: load the config from a file first. Parse errors yield
/// exit code 1 with diagnostics on the report.
RunOutcome run_experiment_file(const std::filesystem::path& config_path,
                               const RunOverrides& overrides);

/// Build and run the worked-example bundle: condition checks, constant
/// ledger, moment-bound run, coupling run, and the distribution report.
/// `overrides` is an RFC 7386 merge patch applied to the generated config.
RunOutcome run_example5(double c, double eps, double rho, double r,
                        const nlohmann::json& overrides, const RunOverrides& run);

/// Atomic file write (temp file + rename) used for every artifact.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace nsfde
