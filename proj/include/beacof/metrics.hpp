#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "beacof/belief.hpp"
#include "beacof/config.hpp"
#include "beacof/core.hpp"

// Trace persistence and reporting. Traces are UTF-8 line-delimited JSON:
// a header line (config echo, schema version), one line per round record,
// and a footer line (shift series, stop reason, regret summary). See
// docs/trace-schema.md.

namespace beacof::metrics {

inline constexpr int kTraceSchemaVersion = 1;

enum class StopReason { EarlyStop, Horizon, Consensus };

const std::string& to_string(StopReason reason);
std::optional<StopReason> stop_reason_from_string(const std::string& name);

struct Trace {
    int schema_version = kTraceSchemaVersion;
    SimulationConfig config;
    History records;
    std::map<AgentId, belief::ShiftSeries> shift_series;
    std::optional<StopReason> stop_reason;
    std::map<AgentId, double> average_regret;
    bool complete = true;
    std::string error_message;  // set when complete == false

    friend bool operator==(const Trace&, const Trace&) = default;
};

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

void write_trace(const Trace& trace, std::ostream& sink);
void write_trace_file(const Trace& trace, const std::string& path,
                      bool overwrite = true);

// Throws TraceError on malformed input or a schema version mismatch.
Trace read_trace(std::istream& source, const std::string& name = "<stream>");
Trace read_trace_file(const std::string& path);

// Convergence harness output in the same line-delimited format: header, one
// line per trial, and a summary line.
void write_convergence_stats(const belief::ConvergenceStats& stats,
                             std::ostream& sink);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct RegretReport {
    std::map<AgentId, double> per_agent;
    std::map<AgentId, int> rounds_counted;
    double overall = 0.0;
    int traces = 0;
};

// Mean regret per agent and overall, across all rounds of all traces.
RegretReport regret_report(const std::vector<Trace>& traces);

struct ConvergenceReport {
    std::map<AgentId, belief::ShiftSeries> shifts;
    int stop_round = 0;
    std::optional<StopReason> stop_reason;
    // Terminal precision per (observer, target).
    std::map<AgentId, std::map<AgentId, double>> terminal_precisions;
    bool complete = true;
};

ConvergenceReport convergence_report(const Trace& trace);

struct TrajectoryPoint {
    int round = 0;
    TypeVector mean;
    double precision = 0.0;

    friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

// Reconstructs (observer -> target) belief evolution by replaying the
// recorded evaluations from the initial prior. One point per completed round.
std::vector<TrajectoryPoint> belief_trajectory(const Trace& trace,
                                               const AgentId& observer,
                                               const AgentId& target);

// Plain-text and machine-readable renderings used by the CLI.
std::string render_regret_report_text(const RegretReport& report);
std::string render_regret_report_machine(const RegretReport& report);
std::string render_convergence_report_text(const ConvergenceReport& report);
std::string render_convergence_report_machine(const ConvergenceReport& report);

}  // namespace beacof::metrics
