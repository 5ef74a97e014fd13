#include "beacof/metrics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

using nlohmann::json;

namespace beacof::metrics {

namespace {

const std::map<StopReason, std::string> kStopReasonNames = {
    {StopReason::EarlyStop, "EarlyStop"},
    {StopReason::Horizon, "Horizon"},
    {StopReason::Consensus, "Consensus"},
};

}  // namespace

const std::string& to_string(StopReason reason) {
    return kStopReasonNames.at(reason);
}

std::optional<StopReason> stop_reason_from_string(const std::string& name) {
    for (const auto& [reason, reason_name] : kStopReasonNames) {
        if (reason_name == name) return reason;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// JSON conversions
// ---------------------------------------------------------------------------

namespace {

json to_json(const TypeVector& v) { return json(v.values); }

TypeVector type_vector_from_json(const json& j) {
    return TypeVector(j.get<std::vector<double>>());
}

json to_json(const StrategyDistribution& dist) {
    json out = json::object();
    for (StrategyKind k : all_strategies()) out[to_string(k)] = dist[k];
    return out;
}

StrategyDistribution distribution_from_json(const json& j) {
    StrategyDistribution dist{};
    for (StrategyKind k : all_strategies()) {
        dist[k] = j.at(to_string(k)).get<double>();
    }
    return dist;
}

json to_json(const Evaluation& e) {
    return json{{"scores", to_json(e.scores)}, {"confidence", e.confidence}};
}

Evaluation evaluation_from_json(const json& j) {
    Evaluation e;
    e.scores = type_vector_from_json(j.at("scores"));
    e.confidence = j.at("confidence").get<double>();
    return e;
}

json to_json(const BeliefState& b) {
    return json{{"mean", to_json(b.estimate)}, {"precision", b.precision}};
}

BeliefState belief_state_from_json(const json& j) {
    BeliefState b;
    b.estimate = type_vector_from_json(j.at("mean"));
    b.precision = j.at("precision").get<double>();
    return b;
}

json to_json(const PayoffTable& table) {
    json separable = json::object();
    for (const auto& [agent, row] : table.separable) {
        json entry = json::object();
        for (StrategyKind k : all_strategies()) {
            entry[to_string(k)] = row[static_cast<int>(k)];
        }
        separable[agent] = std::move(entry);
    }
    json joint = json::object();
    for (const auto& [agent, entry] : table.joint) {
        json rows = json::object();
        for (StrategyKind k : all_strategies()) {
            rows[to_string(k)] = entry.rows[static_cast<int>(k)];
        }
        joint[agent] = json{{"opponents", entry.opponents}, {"rows", std::move(rows)}};
    }
    return json{{"mode", to_string(table.mode)},
                {"separable", std::move(separable)},
                {"joint", std::move(joint)}};
}

PayoffTable payoff_table_from_json(const json& j) {
    PayoffTable table;
    auto mode = payoff_mode_from_string(j.at("mode").get<std::string>());
    if (!mode) throw TraceError("trace: unknown payoff mode");
    table.mode = *mode;
    for (const auto& [agent, entry] : j.at("separable").items()) {
        std::array<double, kStrategyCount> row{};
        for (StrategyKind k : all_strategies()) {
            row[static_cast<int>(k)] = entry.at(to_string(k)).get<double>();
        }
        table.separable[agent] = row;
    }
    for (const auto& [agent, entry] : j.at("joint").items()) {
        JointPayoffs joint_entry;
        joint_entry.opponents = entry.at("opponents").get<std::vector<AgentId>>();
        for (StrategyKind k : all_strategies()) {
            joint_entry.rows[static_cast<int>(k)] =
                entry.at("rows").at(to_string(k)).get<std::vector<double>>();
        }
        table.joint[agent] = std::move(joint_entry);
    }
    return table;
}

json to_json(const ConfidenceRule& rule) {
    return json{{"kind", rule.kind == ConfidenceRule::Kind::Fixed ? "fixed" : "uniform"},
                {"value", rule.value},
                {"lo", rule.lo},
                {"hi", rule.hi}};
}

ConfidenceRule confidence_rule_from_json(const json& j) {
    ConfidenceRule rule;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "fixed") {
        rule.kind = ConfidenceRule::Kind::Fixed;
    } else if (kind == "uniform") {
        rule.kind = ConfidenceRule::Kind::UniformRange;
    } else {
        throw TraceError("trace: unknown confidence rule kind " + kind);
    }
    rule.value = j.at("value").get<double>();
    rule.lo = j.at("lo").get<double>();
    rule.hi = j.at("hi").get<double>();
    return rule;
}

json to_json(const ScenarioScript& script) {
    json types = json::object();
    for (const auto& [agent, type] : script.true_types) {
        types[agent] = to_json(type);
    }
    json pair = json::array();
    for (const auto& row : script.pair_payoffs) {
        pair.push_back(json(std::vector<double>(row.begin(), row.end())));
    }
    return json{{"preset", to_string(script.preset)},
                {"pair_payoffs", std::move(pair)},
                {"noise_sigma", script.noise_sigma},
                {"confidence_rule", to_json(script.confidence_rule)},
                {"nonstationary", script.nonstationary},
                {"true_types", std::move(types)}};
}

ScenarioScript scenario_from_json(const json& j) {
    ScenarioScript script;
    auto preset = preset_from_string(j.at("preset").get<std::string>());
    if (!preset) throw TraceError("trace: unknown payoff preset");
    script.preset = *preset;
    const json& pair = j.at("pair_payoffs");
    for (int r = 0; r < kStrategyCount; ++r) {
        for (int c = 0; c < kStrategyCount; ++c) {
            script.pair_payoffs[r][c] = pair.at(r).at(c).get<double>();
        }
    }
    script.noise_sigma = j.at("noise_sigma").get<double>();
    script.confidence_rule = confidence_rule_from_json(j.at("confidence_rule"));
    script.nonstationary = j.at("nonstationary").get<bool>();
    for (const auto& [agent, type] : j.at("true_types").items()) {
        script.true_types[agent] = type_vector_from_json(type);
    }
    return script;
}

json to_json(const EndpointConfig& endpoint) {
    return json{{"base_url", endpoint.base_url},
                {"model_name", endpoint.model_name},
                {"timeout_ms", endpoint.timeout_ms},
                {"max_tokens", endpoint.max_tokens},
                {"temperature", endpoint.temperature},
                {"retry_budget", endpoint.retry_budget},
                {"backoff_base_ms", endpoint.backoff_base_ms}};
}

EndpointConfig endpoint_from_json(const json& j) {
    EndpointConfig endpoint;
    endpoint.base_url = j.at("base_url").get<std::string>();
    endpoint.model_name = j.at("model_name").get<std::string>();
    endpoint.timeout_ms = j.at("timeout_ms").get<int>();
    endpoint.max_tokens = j.at("max_tokens").get<int>();
    endpoint.temperature = j.at("temperature").get<double>();
    endpoint.retry_budget = j.at("retry_budget").get<int>();
    endpoint.backoff_base_ms = j.at("backoff_base_ms").get<int>();
    return endpoint;
}

json to_json(const TaskDescriptor& task) {
    json personas = json::object();
    for (const auto& [agent, persona] : task.personas) personas[agent] = persona;
    return json{{"scenario_type", task.scenario_type},
                {"domain_context", task.domain_context},
                {"query", task.query},
                {"dimensions", task.dimensions},
                {"personas", std::move(personas)}};
}

TaskDescriptor task_from_json(const json& j) {
    TaskDescriptor task;
    task.scenario_type = j.at("scenario_type").get<std::string>();
    task.domain_context = j.at("domain_context").get<std::string>();
    task.query = j.at("query").get<std::string>();
    task.dimensions = j.at("dimensions").get<std::vector<std::string>>();
    for (const auto& [agent, persona] : j.at("personas").items()) {
        task.personas[agent] = persona.get<std::string>();
    }
    return task;
}

json to_json(const SimulationConfig& config) {
    json agents = json::array();
    for (const AgentSpec& agent : config.agents) {
        agents.push_back(json{{"id", agent.id}, {"role", agent.role}});
    }
    json out{{"n_agents", config.n_agents},
             {"d", config.d},
             {"lambda", config.lambda},
             {"omega_init", config.omega_init},
             {"epsilon_change", config.epsilon_change},
             {"patience", config.patience},
             {"t_max", config.t_max},
             {"seed", config.seed},
             {"payoff_mode", to_string(config.payoff_mode)},
             {"shift_includes_self", config.shift_includes_self},
             {"backend", to_string(config.backend)},
             {"scenario", to_json(config.scenario)},
             {"endpoint", to_json(config.endpoint)},
             {"agents", std::move(agents)},
             {"task", to_json(config.task)}};
    out["consensus_epsilon"] =
        config.consensus_epsilon ? json(*config.consensus_epsilon) : json(nullptr);
    return out;
}

SimulationConfig config_from_json(const json& j) {
    SimulationConfig config;
    config.n_agents = j.at("n_agents").get<int>();
    config.d = j.at("d").get<int>();
    config.lambda = j.at("lambda").get<double>();
    config.omega_init = j.at("omega_init").get<double>();
    config.epsilon_change = j.at("epsilon_change").get<double>();
    config.patience = j.at("patience").get<int>();
    config.t_max = j.at("t_max").get<int>();
    config.seed = j.at("seed").get<std::uint64_t>();
    auto mode = payoff_mode_from_string(j.at("payoff_mode").get<std::string>());
    if (!mode) throw TraceError("trace: unknown payoff mode in config");
    config.payoff_mode = *mode;
    config.shift_includes_self = j.at("shift_includes_self").get<bool>();
    if (!j.at("consensus_epsilon").is_null()) {
        config.consensus_epsilon = j.at("consensus_epsilon").get<double>();
    }
    std::string backend = j.at("backend").get<std::string>();
    if (backend == "scripted") {
        config.backend = BackendKind::Scripted;
    } else if (backend == "llm") {
        config.backend = BackendKind::Llm;
    } else {
        throw TraceError("trace: unknown backend kind " + backend);
    }
    config.scenario = scenario_from_json(j.at("scenario"));
    config.endpoint = endpoint_from_json(j.at("endpoint"));
    for (const json& agent : j.at("agents")) {
        config.agents.push_back(
            {agent.at("id").get<std::string>(), agent.at("role").get<std::string>()});
    }
    config.task = task_from_json(j.at("task"));
    return config;
}

json to_json(const RoundRecord& record) {
    json predicted = json::object();
    for (const auto& [agent, dist] : record.predicted) {
        predicted[agent] = to_json(dist);
    }
    json beliefs = json::object();
    for (const auto& [observer, state] : record.post_beliefs) {
        beliefs[observer] = to_json(state);
    }
    return json{{"kind", "record"},
                {"round", record.round},
                {"agent", record.agent_id},
                {"strategy", to_string(record.strategy)},
                {"message", record.message},
                {"evaluation", to_json(record.evaluation)},
                {"payoffs", to_json(record.payoffs)},
                {"predicted", std::move(predicted)},
                {"regret", record.regret},
                {"post_beliefs", std::move(beliefs)}};
}

RoundRecord record_from_json(const json& j) {
    RoundRecord record;
    record.round = j.at("round").get<int>();
    record.agent_id = j.at("agent").get<std::string>();
    auto strategy = strategy_from_string(j.at("strategy").get<std::string>());
    if (!strategy) throw TraceError("trace: unknown strategy in record");
    record.strategy = *strategy;
    record.message = j.at("message").get<std::string>();
    record.evaluation = evaluation_from_json(j.at("evaluation"));
    record.payoffs = payoff_table_from_json(j.at("payoffs"));
    for (const auto& [agent, dist] : j.at("predicted").items()) {
        record.predicted[agent] = distribution_from_json(dist);
    }
    record.regret = j.at("regret").get<double>();
    for (const auto& [observer, state] : j.at("post_beliefs").items()) {
        record.post_beliefs[observer] = belief_state_from_json(state);
    }
    return record;
}

}  // namespace

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

void write_trace(const Trace& trace, std::ostream& sink) {
    json header{{"kind", "header"},
                {"schema_version", trace.schema_version},
                {"config", to_json(trace.config)}};
    sink << header.dump() << "\n";
    for (const RoundRecord& record : trace.records) {
        sink << to_json(record).dump() << "\n";
    }
    json shifts = json::object();
    for (const auto& [agent, series] : trace.shift_series) {
        shifts[agent] = series;
    }
    json regret = json::object();
    for (const auto& [agent, value] : trace.average_regret) {
        regret[agent] = value;
    }
    json footer{{"kind", "footer"},
                {"shift_series", std::move(shifts)},
                {"average_regret", std::move(regret)},
                {"complete", trace.complete},
                {"error_message", trace.error_message}};
    footer["stop_reason"] =
        trace.stop_reason ? json(to_string(*trace.stop_reason)) : json(nullptr);
    sink << footer.dump() << "\n";
    if (!sink) throw TraceError("trace: sink write failure");
}

void write_trace_file(const Trace& trace, const std::string& path, bool overwrite) {
    if (!overwrite) {
        std::ifstream probe(path);
        if (probe.good()) {
            throw TraceError("trace: output file already exists: " + path);
        }
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw TraceError("trace: cannot open for writing: " + path);
    write_trace(trace, out);
}

Trace read_trace(std::istream& source, const std::string& name) {
    Trace trace;
    std::string line;
    int line_no = 0;
    bool saw_header = false;
    bool saw_footer = false;
    while (std::getline(source, line)) {
        ++line_no;
        if (line.empty()) continue;
        json doc = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (doc.is_discarded() || !doc.is_object() || !doc.contains("kind")) {
            throw TraceError(name + ":" + std::to_string(line_no) +
                             ": malformed trace line");
        }
        std::string kind = doc.at("kind").get<std::string>();
        try {
            if (kind == "header") {
                int version = doc.at("schema_version").get<int>();
                if (version != kTraceSchemaVersion) {
                    throw TraceError(name + ": schema_version " +
                                     std::to_string(version) + " unsupported (expected " +
                                     std::to_string(kTraceSchemaVersion) + ")");
                }
                trace.schema_version = version;
                trace.config = config_from_json(doc.at("config"));
                saw_header = true;
            } else if (kind == "record") {
                if (!saw_header) {
                    throw TraceError(name + ": record before header");
                }
                trace.records.push_back(record_from_json(doc));
            } else if (kind == "footer") {
                for (const auto& [agent, series] : doc.at("shift_series").items()) {
                    trace.shift_series[agent] = series.get<std::vector<double>>();
                }
                for (const auto& [agent, value] : doc.at("average_regret").items()) {
                    trace.average_regret[agent] = value.get<double>();
                }
                if (!doc.at("stop_reason").is_null()) {
                    auto reason =
                        stop_reason_from_string(doc.at("stop_reason").get<std::string>());
                    if (!reason) throw TraceError(name + ": unknown stop reason");
                    trace.stop_reason = reason;
                }
                trace.complete = doc.at("complete").get<bool>();
                trace.error_message = doc.at("error_message").get<std::string>();
                saw_footer = true;
            } else {
                throw TraceError(name + ":" + std::to_string(line_no) +
                                 ": unknown line kind " + kind);
            }
        } catch (const json::exception& e) {
            throw TraceError(name + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!saw_header) throw TraceError(name + ": missing header line");
    if (!saw_footer) throw TraceError(name + ": missing footer line (truncated?)");
    return trace;
}

Trace read_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TraceError("trace: cannot open " + path);
    return read_trace(in, path);
}

void write_convergence_stats(const belief::ConvergenceStats& stats,
                             std::ostream& sink) {
    json header{{"kind", "header"},
                {"schema_version", kTraceSchemaVersion},
                {"record", "convergence"}};
    sink << header.dump() << "\n";
    for (std::size_t i = 0; i < stats.final_precisions.size(); ++i) {
        json line{{"kind", "trial"},
                  {"index", i},
                  {"final_precision", stats.final_precisions[i]},
                  {"final_estimate", stats.final_estimates[i]}};
        sink << line.dump() << "\n";
    }
    json summary{{"kind", "summary"},
                 {"lambda", stats.lambda},
                 {"sigma", stats.sigma},
                 {"rounds", stats.rounds},
                 {"trials", stats.trials},
                 {"theta", stats.theta.values},
                 {"empirical_bias", stats.empirical_bias},
                 {"empirical_variance", stats.empirical_variance},
                 {"predicted_precision", stats.predicted_precision},
                 {"predicted_variance", stats.predicted_variance}};
    sink << summary.dump() << "\n";
    if (!sink) throw TraceError("convergence stats: sink write failure");
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

RegretReport regret_report(const std::vector<Trace>& traces) {
    if (traces.empty()) {
        throw ValidationError("regret_report: no traces given");
    }
    RegretReport report;
    report.traces = static_cast<int>(traces.size());
    double total = 0.0;
    int count = 0;
    for (const Trace& trace : traces) {
        for (const RoundRecord& record : trace.records) {
            report.per_agent[record.agent_id] += record.regret;
            report.rounds_counted[record.agent_id] += 1;
            total += record.regret;
            ++count;
        }
    }
    for (auto& [agent, sum] : report.per_agent) {
        sum /= report.rounds_counted[agent];
    }
    report.overall = count > 0 ? total / count : 0.0;
    return report;
}

ConvergenceReport convergence_report(const Trace& trace) {
    ConvergenceReport report;
    report.shifts = trace.shift_series;
    report.stop_reason = trace.stop_reason;
    report.complete = trace.complete;
    int last_round = 0;
    for (const RoundRecord& record : trace.records) {
        last_round = std::max(last_round, record.round);
    }
    report.stop_round = last_round;
    for (const RoundRecord& record : trace.records) {
        if (record.round != last_round) continue;
        for (const auto& [observer, state] : record.post_beliefs) {
            report.terminal_precisions[observer][record.agent_id] = state.precision;
        }
    }
    return report;
}

std::vector<TrajectoryPoint> belief_trajectory(const Trace& trace,
                                               const AgentId& observer,
                                               const AgentId& target) {
    if (observer == target) {
        throw ValidationError("belief_trajectory: observer equals target");
    }
    bool observer_known = false;
    bool target_known = false;
    for (const AgentSpec& agent : trace.config.agents) {
        if (agent.id == observer) observer_known = true;
        if (agent.id == target) target_known = true;
    }
    if (!observer_known || !target_known) {
        throw ValidationError("belief_trajectory: unknown pair (" + observer + ", " +
                              target + ")");
    }

    BeliefState state;
    state.estimate.values.assign(static_cast<std::size_t>(trace.config.d), 0.5);
    state.precision = trace.config.omega_init;

    std::vector<TrajectoryPoint> points;
    for (const RoundRecord& record : trace.records) {
        if (record.agent_id != target) continue;
        state = belief::update_belief(state, record.evaluation, trace.config.lambda);
        points.push_back({record.round, state.estimate, state.precision});
    }
    return points;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

std::string format_double(double value, int precision = 6) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(precision) << value;
    return out.str();
}

}  // namespace

std::string render_regret_report_text(const RegretReport& report) {
    std::ostringstream out;
    int total_rounds = 0;
    for (const auto& [agent, count] : report.rounds_counted) total_rounds += count;
    out << "agent            rounds  avg_regret\n";
    for (const auto& [agent, mean] : report.per_agent) {
        out << std::left << std::setw(16) << agent << " " << std::right
            << std::setw(6) << report.rounds_counted.at(agent) << "  "
            << format_double(mean) << "\n";
    }
    out << std::left << std::setw(16) << "overall" << " " << std::right
        << std::setw(6) << total_rounds << "  " << format_double(report.overall)
        << "\n";
    return out.str();
}

std::string render_regret_report_machine(const RegretReport& report) {
    json per_agent = json::object();
    for (const auto& [agent, mean] : report.per_agent) per_agent[agent] = mean;
    json counts = json::object();
    for (const auto& [agent, n] : report.rounds_counted) counts[agent] = n;
    json out{{"kind", "regret_report"},
             {"per_agent", std::move(per_agent)},
             {"rounds_counted", std::move(counts)},
             {"overall", report.overall},
             {"traces", report.traces}};
    return out.dump();
}

std::string render_convergence_report_text(const ConvergenceReport& report) {
    std::ostringstream out;
    out << "stop_round=" << report.stop_round << " stop_reason="
        << (report.stop_reason ? to_string(*report.stop_reason) : "none")
        << " complete=" << (report.complete ? "true" : "false") << "\n";
    out << "observer         round  shift\n";
    for (const auto& [agent, series] : report.shifts) {
        for (std::size_t i = 0; i < series.size(); ++i) {
            out << std::left << std::setw(16) << agent << " " << std::right
                << std::setw(5) << (i + 1) << "  " << format_double(series[i], 8)
                << "\n";
        }
    }
    out << "observer -> target terminal precision\n";
    for (const auto& [observer, targets] : report.terminal_precisions) {
        for (const auto& [target, precision] : targets) {
            out << std::left << std::setw(16) << observer << " -> " << std::setw(16)
                << target << " " << format_double(precision, 8) << "\n";
        }
    }
    return out.str();
}

std::string render_convergence_report_machine(const ConvergenceReport& report) {
    json shifts = json::object();
    for (const auto& [agent, series] : report.shifts) shifts[agent] = series;
    json precisions = json::object();
    for (const auto& [observer, targets] : report.terminal_precisions) {
        json entry = json::object();
        for (const auto& [target, precision] : targets) entry[target] = precision;
        precisions[observer] = std::move(entry);
    }
    json out{{"kind", "convergence_report"},
             {"stop_round", report.stop_round},
             {"stop_reason", report.stop_reason ? json(to_string(*report.stop_reason))
                                                : json(nullptr)},
             {"complete", report.complete},
             {"shift_series", std::move(shifts)},
             {"terminal_precisions", std::move(precisions)}};
    return out.dump();
}

}  // namespace beacof::metrics
