#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "beacof/config.hpp"

// Operator entry points behind the CLI binary. Command bodies live here so
// tests can drive them directly; tools/beacof_main.cpp only parses flags.

namespace beacof::cli {

// Stable exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;   // command ran, result is a failure
inline constexpr int kExitConfig = 2;    // config file or parameter problem
inline constexpr int kExitBackend = 3;   // backend unreachable / failed runs
inline constexpr int kExitTrace = 4;     // unreadable or version-mismatched trace
inline constexpr int kExitMode = 5;      // operation unsupported for this backend

// Flat key-value config document with [simulation], [backend], [scenario],
// [task], and [agent.N] sections. Throws ConfigError with file:line context.
SimulationConfig parse_config_text(const std::string& text, const std::string& name);
SimulationConfig load_config_file(const std::string& path);

// Loads a pairwise payoff matrix from a preset JSON file
// ({"pair_payoffs": [[..3..],[..3..],[..3..]]}).
PairPayoffMatrix load_pair_payoffs_file(const std::string& path);

struct RunOptions {
    std::string config_path;
    std::string out_dir = ".";
    int batch = 1;
    std::optional<std::uint64_t> seed;  // overrides the config seed
    int jobs = 1;
    bool force = false;
};

// Runs `batch` simulations with seeds seed..seed+batch-1, one trace file per
// run plus a batch summary. Exit 0 iff every run completed.
int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err);

struct VerifyOptions {
    double lambda = 0.9;
    double sigma = 0.1;
    int trials = 10000;
    int rounds = 500;
    std::uint64_t seed = 1;
    double omega_init = 1.0;
    std::vector<double> theta = {0.5};
    std::string out_path;  // optional stats dump
};

// Runs the convergence harness and prints predicted vs observed precision
// and variance with a PASS/FAIL verdict.
int cmd_verify_convergence(const VerifyOptions& options, std::ostream& out,
                           std::ostream& err);

struct ReportOptions {
    std::vector<std::string> trace_paths;
    std::string kind = "regret";   // regret | convergence
    std::string format = "text";   // text | machine
};

int cmd_report(const ReportOptions& options, std::ostream& out, std::ostream& err);

struct ReplayOptions {
    std::string trace_path;
};

int cmd_replay(const ReplayOptions& options, std::ostream& out, std::ostream& err);

}  // namespace beacof::cli
