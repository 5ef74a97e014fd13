#include "beacof/config.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace beacof {

namespace {

const std::map<PayoffPreset, std::string> kPresetNames = {
    {PayoffPreset::ConsensusGame, "consensus"},
    {PayoffPreset::ZeroSumGame, "zero_sum"},
    {PayoffPreset::MixedGame, "mixed"},
    {PayoffPreset::Custom, "custom"},
};

}  // namespace

const std::string& to_string(PayoffPreset preset) {
    return kPresetNames.at(preset);
}

std::optional<PayoffPreset> preset_from_string(const std::string& name) {
    for (const auto& [preset, preset_name] : kPresetNames) {
        if (preset_name == name) return preset;
    }
    return std::nullopt;
}

const std::string& to_string(BackendKind kind) {
    static const std::string scripted = "scripted";
    static const std::string llm = "llm";
    return kind == BackendKind::Scripted ? scripted : llm;
}

PairPayoffMatrix preset_pair_payoffs(PayoffPreset preset) {
    switch (preset) {
        case PayoffPreset::ConsensusGame:
            // Matching strategies score high, mismatches low.
            return {{{8, 3, 3},
                     {3, 8, 3},
                     {3, 3, 8}}};
        case PayoffPreset::ZeroSumGame:
            // Constant-sum at 10 per pair, cyclic dominance:
            // Competition beats Cooperation beats Coopetition beats Competition.
            return {{{5, 3, 7},
                     {7, 5, 3},
                     {3, 7, 5}}};
        case PayoffPreset::MixedGame:
            // Coopetition pays best against Competition.
            return {{{7, 2, 5},
                     {6, 3, 4},
                     {5, 9, 6}}};
        case PayoffPreset::Custom:
            break;
    }
    throw ConfigError("preset_pair_payoffs: custom preset has no built-in table");
}

namespace {

void check(bool ok, const std::string& field, const std::string& detail) {
    if (!ok) throw ConfigError("config: " + field + " " + detail);
}

}  // namespace

void validate_config(const SimulationConfig& config) {
    check(config.n_agents >= 2, "n_agents", "must be >= 2 (game requires two players)");
    check(config.d >= 1, "d", "must be >= 1");
    check(config.lambda > 0.0 && config.lambda < 1.0, "lambda", "must lie in (0,1)");
    check(std::isfinite(config.omega_init) && config.omega_init > 0.0, "omega_init",
          "must be > 0");
    check(std::isfinite(config.epsilon_change) && config.epsilon_change > 0.0,
          "epsilon_change", "must be > 0");
    check(config.patience >= 1, "patience", "must be >= 1");
    check(config.t_max >= 1, "t_max", "must be >= 1");
    if (config.consensus_epsilon) {
        check(std::isfinite(*config.consensus_epsilon) && *config.consensus_epsilon > 0.0,
              "consensus_epsilon", "must be > 0 when set");
    }

    check(static_cast<int>(config.agents.size()) == config.n_agents, "agents",
          "entry count must equal n_agents");
    std::set<AgentId> ids;
    for (const AgentSpec& agent : config.agents) {
        check(!agent.id.empty(), "agents", "has an empty id");
        check(!agent.role.empty(), "agents", "role for " + agent.id + " is empty");
        check(ids.insert(agent.id).second, "agents", "duplicate id " + agent.id);
    }

    if (config.backend == BackendKind::Scripted) {
        const ScenarioScript& s = config.scenario;
        check(std::isfinite(s.noise_sigma) && s.noise_sigma >= 0.0,
              "scenario.noise_sigma", "must be >= 0");
        for (const AgentSpec& agent : config.agents) {
            auto it = s.true_types.find(agent.id);
            check(it != s.true_types.end(), "scenario.true_types",
                  "missing type for agent " + agent.id);
            check(static_cast<int>(it->second.dim()) == config.d,
                  "scenario.true_types",
                  "type for " + agent.id + " must have dimension d");
            validate_type_vector(it->second, "scenario.true_types[" + agent.id + "]");
        }
        for (StrategyKind own : all_strategies()) {
            for (StrategyKind other : all_strategies()) {
                double u = s.pair_payoffs[static_cast<int>(own)][static_cast<int>(other)];
                check(std::isfinite(u) && u >= kPayoffMin && u <= kPayoffMax,
                      "scenario.pair_payoffs", "entry outside [0,10]");
            }
        }
        if (s.confidence_rule.kind == ConfidenceRule::Kind::Fixed) {
            check(std::isfinite(s.confidence_rule.value) && s.confidence_rule.value >= 0.0,
                  "scenario.confidence_rule", "fixed value must be >= 0");
        } else {
            check(std::isfinite(s.confidence_rule.lo) && std::isfinite(s.confidence_rule.hi) &&
                      s.confidence_rule.lo >= 0.0 &&
                      s.confidence_rule.hi >= s.confidence_rule.lo,
                  "scenario.confidence_rule", "range must satisfy 0 <= lo <= hi");
        }
    } else {
        check(!config.endpoint.base_url.empty(), "endpoint.base_url", "must be set");
        check(!config.endpoint.model_name.empty(), "endpoint.model_name", "must be set");
        check(config.endpoint.max_tokens >= 1, "endpoint.max_tokens", "must be >= 1");
        check(config.endpoint.retry_budget >= 0, "endpoint.retry_budget", "must be >= 0");
        check(config.endpoint.timeout_ms >= 1, "endpoint.timeout_ms", "must be >= 1");
        check(static_cast<int>(config.task.dimensions.size()) == config.d,
              "task.dimensions", "must list exactly d dimension names");
    }
}

}  // namespace beacof
