#pragma once

#include <optional>
#include <string>

#include "beacof/belief.hpp"
#include "beacof/config.hpp"
#include "beacof/coordinator.hpp"
#include "beacof/core.hpp"
#include "beacof/strategy.hpp"

// Participant agents: strategy selection from the broadcast signals, message
// generation, and belief maintenance. Strategy choice never reads the
// agent's private type; it depends only on what the coordinator broadcast.

namespace beacof::agents {

struct AgentProfile {
    AgentId agent_id;
    std::string role_designation;
    std::optional<TypeVector> private_type;  // scripted agents only
    belief::BeliefMatrix belief_matrix;

    friend bool operator==(const AgentProfile&, const AgentProfile&) = default;
};

// Best response to the broadcast payoffs under the peer marginals.
StrategyKind select_strategy(const AgentProfile& profile,
                             const coord::CoordinatorSignals& signals);

// Canonical scripted message: "ROLE|ROUND|STRATEGY". Parseable so traces
// stay meaningful without a live model behind them.
std::string scripted_message(const AgentProfile& profile, StrategyKind chosen,
                             int round);

// Folds an evaluation of `target_id` into the observer's belief matrix.
// Self-evaluations and unknown targets are errors.
AgentProfile receive_evaluation(const AgentProfile& observer, const AgentId& target_id,
                                const Evaluation& obs, double lambda);

// Message generation seam: scripted and live backends plug in here.
class MessageBackend {
public:
    virtual ~MessageBackend() = default;
    virtual std::string generate_message(const AgentProfile& profile,
                                         StrategyKind chosen, int round,
                                         const coord::CoordinatorSignals& signals,
                                         const History& history,
                                         const TaskDescriptor& task) = 0;
};

class ScriptedMessageBackend final : public MessageBackend {
public:
    std::string generate_message(const AgentProfile& profile, StrategyKind chosen,
                                 int round, const coord::CoordinatorSignals&,
                                 const History&, const TaskDescriptor&) override {
        return scripted_message(profile, chosen, round);
    }
};

}  // namespace beacof::agents
