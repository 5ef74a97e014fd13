#include "beacof/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "beacof/metrics.hpp"
#include "beacof/runtime.hpp"

using nlohmann::json;

namespace beacof::cli {

// ---------------------------------------------------------------------------
// Config document parsing
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    std::size_t begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    std::size_t end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

// Strips a trailing comment: '#' at line start or preceded by whitespace.
std::string strip_comment(const std::string& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '#' && (i == 0 || s[i - 1] == ' ' || s[i - 1] == '\t')) {
            return s.substr(0, i);
        }
    }
    return s;
}

struct ConfigLine {
    std::string section;
    std::string key;
    std::string value;
    int line_no = 0;
};

[[noreturn]] void fail(const std::string& name, int line_no, const std::string& what) {
    throw ConfigError(name + ":" + std::to_string(line_no) + ": " + what);
}

double parse_double(const ConfigLine& line, const std::string& name) {
    try {
        std::size_t pos = 0;
        double v = std::stod(line.value, &pos);
        if (pos != line.value.size()) throw std::invalid_argument("trailing chars");
        return v;
    } catch (const std::exception&) {
        fail(name, line.line_no, "expected a number for " + line.key);
    }
}

int parse_int(const ConfigLine& line, const std::string& name) {
    try {
        std::size_t pos = 0;
        int v = std::stoi(line.value, &pos);
        if (pos != line.value.size()) throw std::invalid_argument("trailing chars");
        return v;
    } catch (const std::exception&) {
        fail(name, line.line_no, "expected an integer for " + line.key);
    }
}

std::uint64_t parse_uint64(const ConfigLine& line, const std::string& name) {
    try {
        std::size_t pos = 0;
        unsigned long long v = std::stoull(line.value, &pos);
        if (pos != line.value.size()) throw std::invalid_argument("trailing chars");
        return v;
    } catch (const std::exception&) {
        fail(name, line.line_no, "expected a non-negative integer for " + line.key);
    }
}

bool parse_bool(const ConfigLine& line, const std::string& name) {
    if (line.value == "true") return true;
    if (line.value == "false") return false;
    fail(name, line.line_no, "expected true or false for " + line.key);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> parts;
    std::string current;
    std::istringstream in(value);
    while (std::getline(in, current, ',')) {
        std::string part = trim(current);
        if (!part.empty()) parts.push_back(part);
    }
    return parts;
}

std::vector<double> parse_double_list(const ConfigLine& line, const std::string& name) {
    std::vector<double> values;
    for (const std::string& part : split_list(line.value)) {
        try {
            values.push_back(std::stod(part));
        } catch (const std::exception&) {
            fail(name, line.line_no, "expected comma-separated numbers for " + line.key);
        }
    }
    if (values.empty()) {
        fail(name, line.line_no, "empty list for " + line.key);
    }
    return values;
}

ConfidenceRule parse_confidence_rule(const ConfigLine& line, const std::string& name) {
    ConfidenceRule rule;
    std::size_t colon = line.value.find(':');
    std::string kind = colon == std::string::npos ? line.value : line.value.substr(0, colon);
    std::string args = colon == std::string::npos ? "" : line.value.substr(colon + 1);
    if (kind == "fixed") {
        rule.kind = ConfidenceRule::Kind::Fixed;
        if (args.empty()) fail(name, line.line_no, "confidence_rule fixed needs a value");
        try {
            rule.value = std::stod(args);
        } catch (const std::exception&) {
            fail(name, line.line_no, "confidence_rule fixed:<value> malformed");
        }
        return rule;
    }
    if (kind == "uniform") {
        rule.kind = ConfidenceRule::Kind::UniformRange;
        auto parts = split_list(args);
        if (parts.size() != 2) {
            fail(name, line.line_no, "confidence_rule uniform needs lo,hi");
        }
        try {
            rule.lo = std::stod(parts[0]);
            rule.hi = std::stod(parts[1]);
        } catch (const std::exception&) {
            fail(name, line.line_no, "confidence_rule uniform:<lo>,<hi> malformed");
        }
        return rule;
    }
    fail(name, line.line_no, "unknown confidence_rule kind " + kind);
}

}  // namespace

PairPayoffMatrix load_pair_payoffs_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open payoff file " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    json doc = json::parse(buffer.str(), nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("pair_payoffs")) {
        throw ConfigError(path + ": expected an object with a pair_payoffs key");
    }
    const json& pair = doc.at("pair_payoffs");
    PairPayoffMatrix matrix{};
    if (!pair.is_array() || pair.size() != kStrategyCount) {
        throw ConfigError(path + ": pair_payoffs must be a 3x3 array");
    }
    for (int r = 0; r < kStrategyCount; ++r) {
        if (!pair.at(r).is_array() || pair.at(r).size() != kStrategyCount) {
            throw ConfigError(path + ": pair_payoffs must be a 3x3 array");
        }
        for (int c = 0; c < kStrategyCount; ++c) {
            if (!pair.at(r).at(c).is_number()) {
                throw ConfigError(path + ": pair_payoffs entries must be numbers");
            }
            matrix[r][c] = pair.at(r).at(c).get<double>();
        }
    }
    return matrix;
}

SimulationConfig parse_config_text(const std::string& text, const std::string& name) {
    SimulationConfig config;
    bool saw_n_agents = false;
    bool saw_preset = false;
    std::string preset_file;
    int preset_file_line = 0;

    struct AgentDraft {
        AgentSpec spec;
        std::optional<TypeVector> type;
        std::string persona;
    };
    std::map<std::string, AgentDraft> agent_drafts;  // keyed by section suffix

    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(name, line_no, "unterminated section header");
            section = line.substr(1, line.size() - 2);
            bool known = section == "simulation" || section == "backend" ||
                         section == "scenario" || section == "task" ||
                         section.rfind("agent.", 0) == 0;
            if (!known) fail(name, line_no, "unknown section [" + section + "]");
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail(name, line_no, "expected key = value");
        ConfigLine entry{section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)),
                         line_no};
        if (entry.key.empty()) fail(name, line_no, "empty key");
        if (section.empty()) fail(name, line_no, "key outside any section");

        if (section == "simulation") {
            if (entry.key == "n_agents") {
                config.n_agents = parse_int(entry, name);
                saw_n_agents = true;
            } else if (entry.key == "d") {
                config.d = parse_int(entry, name);
            } else if (entry.key == "lambda") {
                config.lambda = parse_double(entry, name);
            } else if (entry.key == "omega_init") {
                config.omega_init = parse_double(entry, name);
            } else if (entry.key == "epsilon_change") {
                config.epsilon_change = parse_double(entry, name);
            } else if (entry.key == "patience") {
                config.patience = parse_int(entry, name);
            } else if (entry.key == "t_max") {
                config.t_max = parse_int(entry, name);
            } else if (entry.key == "seed") {
                config.seed = parse_uint64(entry, name);
            } else if (entry.key == "payoff_mode") {
                auto mode = payoff_mode_from_string(entry.value);
                if (!mode) fail(name, line_no, "payoff_mode must be separable or joint");
                config.payoff_mode = *mode;
            } else if (entry.key == "shift_includes_self") {
                config.shift_includes_self = parse_bool(entry, name);
            } else if (entry.key == "consensus_epsilon") {
                config.consensus_epsilon = parse_double(entry, name);
            } else {
                fail(name, line_no, "unknown simulation key " + entry.key);
            }
        } else if (section == "backend") {
            if (entry.key == "kind") {
                if (entry.value == "scripted") {
                    config.backend = BackendKind::Scripted;
                } else if (entry.value == "llm") {
                    config.backend = BackendKind::Llm;
                } else {
                    fail(name, line_no, "backend kind must be scripted or llm");
                }
            } else if (entry.key == "base_url") {
                config.endpoint.base_url = entry.value;
            } else if (entry.key == "model") {
                config.endpoint.model_name = entry.value;
            } else if (entry.key == "timeout_ms") {
                config.endpoint.timeout_ms = parse_int(entry, name);
            } else if (entry.key == "max_tokens") {
                config.endpoint.max_tokens = parse_int(entry, name);
            } else if (entry.key == "temperature") {
                config.endpoint.temperature = parse_double(entry, name);
            } else if (entry.key == "retry_budget") {
                config.endpoint.retry_budget = parse_int(entry, name);
            } else if (entry.key == "backoff_base_ms") {
                config.endpoint.backoff_base_ms = parse_int(entry, name);
            } else {
                fail(name, line_no, "unknown backend key " + entry.key);
            }
        } else if (section == "scenario") {
            if (entry.key == "preset") {
                auto preset = preset_from_string(entry.value);
                if (!preset) fail(name, line_no, "unknown preset " + entry.value);
                config.scenario.preset = *preset;
                saw_preset = true;
            } else if (entry.key == "preset_file") {
                preset_file = entry.value;
                preset_file_line = line_no;
            } else if (entry.key == "noise_sigma") {
                config.scenario.noise_sigma = parse_double(entry, name);
            } else if (entry.key == "confidence_rule") {
                config.scenario.confidence_rule = parse_confidence_rule(entry, name);
            } else if (entry.key == "nonstationary") {
                config.scenario.nonstationary = parse_bool(entry, name);
            } else {
                fail(name, line_no, "unknown scenario key " + entry.key);
            }
        } else if (section == "task") {
            if (entry.key == "scenario_type") {
                config.task.scenario_type = entry.value;
            } else if (entry.key == "domain_context") {
                config.task.domain_context = entry.value;
            } else if (entry.key == "query") {
                config.task.query = entry.value;
            } else if (entry.key == "dimensions") {
                config.task.dimensions = split_list(entry.value);
            } else {
                fail(name, line_no, "unknown task key " + entry.key);
            }
        } else {  // agent.N
            AgentDraft& draft = agent_drafts[section];
            if (entry.key == "id") {
                draft.spec.id = entry.value;
            } else if (entry.key == "role") {
                draft.spec.role = entry.value;
            } else if (entry.key == "type") {
                draft.type = TypeVector(parse_double_list(entry, name));
            } else if (entry.key == "persona") {
                draft.persona = entry.value;
            } else {
                fail(name, line_no, "unknown agent key " + entry.key);
            }
        }
    }

    for (const auto& [agent_section, draft] : agent_drafts) {
        if (draft.spec.id.empty()) {
            throw ConfigError(name + ": [" + agent_section + "] has no id");
        }
        config.agents.push_back(draft.spec);
        if (draft.type) {
            config.scenario.true_types[draft.spec.id] = *draft.type;
        }
        if (!draft.persona.empty()) {
            config.task.personas[draft.spec.id] = draft.persona;
        }
    }
    if (!saw_n_agents) {
        config.n_agents = static_cast<int>(config.agents.size());
    }

    if (config.scenario.preset == PayoffPreset::Custom) {
        if (preset_file.empty()) {
            throw ConfigError(name + ": preset custom requires preset_file");
        }
        config.scenario.pair_payoffs = load_pair_payoffs_file(preset_file);
    } else {
        if (!preset_file.empty()) {
            fail(name, preset_file_line, "preset_file requires preset = custom");
        }
        (void)saw_preset;
        config.scenario.pair_payoffs = preset_pair_payoffs(config.scenario.preset);
    }

    validate_config(config);
    return config;
}

SimulationConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), path);
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

namespace {

struct RunResult {
    std::uint64_t seed = 0;
    std::string path;
    bool complete = false;
    std::string stop_reason;
    int rounds = 0;
    std::string error;
};

void apply_endpoint_override(SimulationConfig& config) {
    if (const char* endpoint = std::getenv("BEACOF_ENDPOINT")) {
        if (*endpoint) config.endpoint.base_url = endpoint;
    }
}

}  // namespace

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err) {
    SimulationConfig base;
    try {
        base = load_config_file(options.config_path);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    if (options.batch < 1) {
        err << "config error: batch count must be >= 1\n";
        return kExitConfig;
    }
    apply_endpoint_override(base);

    std::error_code ec;
    std::filesystem::create_directories(options.out_dir, ec);
    if (ec) {
        err << "config error: cannot create output directory " << options.out_dir
            << ": " << ec.message() << "\n";
        return kExitConfig;
    }

    const std::uint64_t base_seed = options.seed.value_or(base.seed);

    // Refuse to clobber existing traces unless forced.
    std::vector<std::string> paths(static_cast<std::size_t>(options.batch));
    for (int i = 0; i < options.batch; ++i) {
        std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
        paths[static_cast<std::size_t>(i)] =
            (std::filesystem::path(options.out_dir) /
             ("trace_" + std::to_string(seed) + ".jsonl"))
                .string();
        if (!options.force && std::filesystem::exists(paths[static_cast<std::size_t>(i)])) {
            err << "config error: output file exists (use --force): "
                << paths[static_cast<std::size_t>(i)] << "\n";
            return kExitConfig;
        }
    }

    std::vector<RunResult> results(static_cast<std::size_t>(options.batch));
    std::mutex io_mutex;
    auto run_one = [&](int index) {
        SimulationConfig config = base;
        config.seed = base_seed + static_cast<std::uint64_t>(index);
        RunResult& result = results[static_cast<std::size_t>(index)];
        result.seed = config.seed;
        result.path = paths[static_cast<std::size_t>(index)];
        try {
            metrics::Trace trace = runtime::run_simulation(config);
            metrics::write_trace_file(trace, result.path);
            result.complete = trace.complete;
            result.stop_reason =
                trace.stop_reason ? metrics::to_string(*trace.stop_reason) : "none";
            result.rounds = trace.records.empty() ? 0 : trace.records.back().round;
            result.error = trace.error_message;
        } catch (const Error& e) {
            std::lock_guard<std::mutex> lock(io_mutex);
            result.complete = false;
            result.error = e.what();
        }
    };

    int jobs = std::max(1, options.jobs);
    if (jobs == 1) {
        for (int i = 0; i < options.batch; ++i) run_one(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic_int next_index{0};
        for (int w = 0; w < std::min(jobs, options.batch); ++w) {
            pool.emplace_back([&]() {
                for (int i = next_index.fetch_add(1); i < options.batch;
                     i = next_index.fetch_add(1)) {
                    run_one(i);
                }
            });
        }
        for (auto& t : pool) t.join();
    }

    json summary = json::array();
    bool all_ok = true;
    for (const RunResult& result : results) {
        summary.push_back(json{{"seed", result.seed},
                               {"trace", result.path},
                               {"complete", result.complete},
                               {"stop_reason", result.stop_reason},
                               {"rounds", result.rounds},
                               {"error", result.error}});
        all_ok = all_ok && result.complete;
    }
    std::ofstream summary_out(
        (std::filesystem::path(options.out_dir) / "batch_summary.json").string(),
        std::ios::trunc);
    summary_out << summary.dump(2) << "\n";

    out << "seed        rounds  stop       complete  trace\n";
    for (const RunResult& result : results) {
        out << std::left << std::setw(11) << result.seed << " " << std::right
            << std::setw(6) << result.rounds << "  " << std::left << std::setw(10)
            << result.stop_reason << " " << std::setw(9)
            << (result.complete ? "yes" : "NO") << " " << result.path << "\n";
        if (!result.complete && !result.error.empty()) {
            out << "  error: " << result.error << "\n";
        }
    }
    if (all_ok) return kExitOk;
    return base.backend == BackendKind::Llm ? kExitBackend : kExitFailure;
}

// ---------------------------------------------------------------------------
// verify-convergence
// ---------------------------------------------------------------------------

int cmd_verify_convergence(const VerifyOptions& options, std::ostream& out,
                           std::ostream& err) {
    belief::ConvergenceStats stats;
    try {
        if (!(options.lambda > 0.0 && options.lambda < 1.0)) {
            throw ValidationError("lambda must lie in (0,1)");
        }
        double required = 50.0 / (1.0 - options.lambda);
        if (static_cast<double>(options.rounds) + 1e-9 < required) {
            out << "FAIL insufficient mixing: rounds=" << options.rounds
                << " below guidance " << std::ceil(required) << " for lambda="
                << options.lambda << "\n";
            return kExitFailure;
        }
        stats = belief::run_convergence_oracle(TypeVector(options.theta), options.sigma,
                                               options.lambda, options.omega_init,
                                               options.rounds, options.trials,
                                               options.seed);
    } catch (const ValidationError& e) {
        err << "parameter error: " << e.what() << "\n";
        return kExitConfig;
    }

    for (double coord : options.theta) {
        if (coord - 3 * options.sigma < 0.0 || coord + 3 * options.sigma > 1.0) {
            out << "note: theta +/- 3 sigma leaves [0,1]; production clamping would "
                   "bias this regime\n";
            break;
        }
    }

    const double observed_precision = stats.final_precisions.front();
    const double precision_rel_err =
        std::abs(observed_precision - stats.predicted_precision) /
        stats.predicted_precision;

    out << "precision: predicted=" << stats.predicted_precision
        << " observed=" << observed_precision << " rel_err=" << precision_rel_err
        << "\n";

    bool pass = precision_rel_err <= 1e-6;
    if (options.sigma == 0.0) {
        for (std::size_t i = 0; i < stats.empirical_variance.size(); ++i) {
            out << "coordinate " << i << ": variance predicted=0 observed="
                << stats.empirical_variance[i] << "\n";
            pass = pass && stats.empirical_variance[i] == 0.0;
        }
    } else {
        const double bias_bound =
            4.0 * options.sigma / std::sqrt(static_cast<double>(options.trials));
        for (std::size_t i = 0; i < stats.empirical_variance.size(); ++i) {
            double ratio = stats.empirical_variance[i] / stats.predicted_variance;
            out << "coordinate " << i << ": variance predicted="
                << stats.predicted_variance << " observed="
                << stats.empirical_variance[i] << " ratio=" << ratio
                << " bias=" << stats.empirical_bias[i] << " (bound " << bias_bound
                << ")\n";
            pass = pass && ratio >= 1.0 / 1.5 && ratio <= 1.5 &&
                   std::abs(stats.empirical_bias[i]) < bias_bound;
        }
    }

    if (!options.out_path.empty()) {
        std::ofstream stats_out(options.out_path, std::ios::trunc);
        if (!stats_out) {
            err << "cannot open " << options.out_path << " for writing\n";
            return kExitConfig;
        }
        metrics::write_convergence_stats(stats, stats_out);
    }

    out << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

int cmd_report(const ReportOptions& options, std::ostream& out, std::ostream& err) {
    if (options.trace_paths.empty()) {
        err << "no trace files given\n";
        return kExitConfig;
    }
    if (options.kind != "regret" && options.kind != "convergence") {
        err << "unknown report kind " << options.kind << "\n";
        return kExitConfig;
    }
    if (options.format != "text" && options.format != "machine") {
        err << "unknown format " << options.format << "\n";
        return kExitConfig;
    }

    std::vector<metrics::Trace> traces;
    for (const std::string& path : options.trace_paths) {
        try {
            traces.push_back(metrics::read_trace_file(path));
        } catch (const TraceError& e) {
            err << "trace error: " << e.what() << "\n";
            return kExitTrace;
        }
    }

    if (options.kind == "regret") {
        metrics::RegretReport report = metrics::regret_report(traces);
        out << (options.format == "machine"
                    ? metrics::render_regret_report_machine(report)
                    : metrics::render_regret_report_text(report));
        if (options.format == "machine") out << "\n";
        return kExitOk;
    }

    for (std::size_t i = 0; i < traces.size(); ++i) {
        metrics::ConvergenceReport report = metrics::convergence_report(traces[i]);
        if (options.format == "machine") {
            out << metrics::render_convergence_report_machine(report) << "\n";
        } else {
            out << "== " << options.trace_paths[i] << "\n"
                << metrics::render_convergence_report_text(report);
        }
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// replay
// ---------------------------------------------------------------------------

int cmd_replay(const ReplayOptions& options, std::ostream& out, std::ostream& err) {
    metrics::Trace trace;
    try {
        trace = metrics::read_trace_file(options.trace_path);
    } catch (const TraceError& e) {
        err << "trace error: " << e.what() << "\n";
        return kExitTrace;
    }
    if (trace.config.backend != BackendKind::Scripted) {
        err << "replay requires scripted backend\n";
        return kExitMode;
    }
    try {
        runtime::replay(trace);
    } catch (const ReplayDivergenceError& e) {
        err << e.what() << "\n";
        return kExitFailure;
    } catch (const Error& e) {
        err << "replay error: " << e.what() << "\n";
        return kExitFailure;
    }
    out << "replay OK: " << options.trace_path << "\n";
    return kExitOk;
}

}  // namespace beacof::cli
