#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "beacof/core.hpp"

// Configuration value types shared across the engine: simulation parameters,
// the scripted scenario description, LLM endpoint settings, and the task
// descriptor consumed by prompt rendering.

namespace beacof {

// 3x3 pairwise utility matrix: rows are own strategy, columns the opponent
// strategy, both in StrategyKind order. Joint tensors for n agents average
// this matrix over opponents.
using PairPayoffMatrix =
    std::array<std::array<double, kStrategyCount>, kStrategyCount>;

enum class PayoffPreset { ConsensusGame, ZeroSumGame, MixedGame, Custom };

const std::string& to_string(PayoffPreset preset);
std::optional<PayoffPreset> preset_from_string(const std::string& name);

// How the scripted evaluator assigns its per-round confidence.
struct ConfidenceRule {
    enum class Kind { Fixed, UniformRange };
    Kind kind = Kind::Fixed;
    double value = 1.0;  // Fixed
    double lo = 0.0;     // UniformRange
    double hi = 1.0;

    friend bool operator==(const ConfidenceRule&, const ConfidenceRule&) = default;
};

// Deterministic stand-in for the live meta-agent: true capability vectors,
// a payoff scheme, evaluation noise, and a confidence rule.
struct ScenarioScript {
    std::map<AgentId, TypeVector> true_types;
    PayoffPreset preset = PayoffPreset::ConsensusGame;
    PairPayoffMatrix pair_payoffs{};  // resolved from the preset or a custom file
    double noise_sigma = 0.0;
    ConfidenceRule confidence_rule;
    bool nonstationary = false;

    friend bool operator==(const ScenarioScript&, const ScenarioScript&) = default;
};

// Chat endpoint settings. The API key is never stored here; it is read from
// the BEACOF_API_KEY environment variable at request time.
struct EndpointConfig {
    std::string base_url = "http://localhost:11434";
    std::string model_name;
    int timeout_ms = 120000;
    int max_tokens = 4096;
    double temperature = 0.0;
    int retry_budget = 3;
    int backoff_base_ms = 250;

    friend bool operator==(const EndpointConfig&, const EndpointConfig&) = default;
};

// Scenario framing passed to prompt rendering. Scripted backends ignore it.
struct TaskDescriptor {
    std::string scenario_type = "generic";
    std::string domain_context;
    std::string query;
    std::vector<std::string> dimensions;         // evaluation dimension names
    std::map<AgentId, std::string> personas;     // optional per-agent profile text

    friend bool operator==(const TaskDescriptor&, const TaskDescriptor&) = default;
};

struct AgentSpec {
    AgentId id;
    std::string role;

    friend bool operator==(const AgentSpec&, const AgentSpec&) = default;
};

enum class BackendKind { Scripted, Llm };

const std::string& to_string(BackendKind kind);

struct SimulationConfig {
    int n_agents = 2;
    int d = 4;
    double lambda = 0.6;
    double omega_init = 1.0;
    double epsilon_change = 0.05;
    int patience = 3;
    int t_max = 4;
    std::uint64_t seed = 0;
    PayoffMode payoff_mode = PayoffMode::Separable;
    bool shift_includes_self = false;
    std::optional<double> consensus_epsilon;  // default-off agreement check

    BackendKind backend = BackendKind::Scripted;
    ScenarioScript scenario;  // when backend == Scripted
    EndpointConfig endpoint;  // when backend == Llm

    std::vector<AgentSpec> agents;
    TaskDescriptor task;

    friend bool operator==(const SimulationConfig&, const SimulationConfig&) = default;
};

// Throws ConfigError naming the first offending field.
void validate_config(const SimulationConfig& config);

// Built-in pairwise payoff schemes. The same tables ship as JSON files under
// data/presets/, which the test suite checks against these values.
PairPayoffMatrix preset_pair_payoffs(PayoffPreset preset);

}  // namespace beacof
