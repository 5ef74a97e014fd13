#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "beacof/belief.hpp"
#include "beacof/config.hpp"
#include "beacof/core.hpp"

// Meta-agent interface: contextual payoff generation, per-agent action
// prediction, and message evaluation. The scripted implementation here is a
// pure function of (script, seed, round, agent) and backs every
// deterministic test path; the live implementation lives in beacof::llm.

namespace beacof::coord {

// Raised when a backend cannot produce a usable output. Keeps the raw
// response around for logging.
struct CoordinatorError : Error {
    CoordinatorError(const std::string& what_, std::string raw)
        : Error(what_), raw_response(std::move(raw)) {}
    std::string raw_response;
};

// The per-round broadcast: payoffs plus one predicted strategy distribution
// per participant.
struct CoordinatorSignals {
    PayoffTable payoffs;
    std::map<AgentId, StrategyDistribution> predictions;
    int round = 0;

    friend bool operator==(const CoordinatorSignals&,
                           const CoordinatorSignals&) = default;
};

using BeliefsSnapshot = std::map<AgentId, belief::BeliefMatrix>;

class Coordinator {
public:
    virtual ~Coordinator() = default;

    virtual PayoffTable generate_contextual_payoffs(
        const History& history, const TaskDescriptor& task,
        const BeliefsSnapshot& beliefs, int round) = 0;

    virtual std::map<AgentId, StrategyDistribution> predict_agent_actions(
        const History& history, const PayoffTable& payoffs, int round) = 0;

    virtual Evaluation evaluate_message(const std::string& message,
                                        StrategyKind strategy,
                                        const TaskDescriptor& task,
                                        const AgentId& target_id, int round) = 0;
};

// Softmax with temperature 1 over the three per-strategy utilities.
StrategyDistribution softmax_distribution(
    const std::array<double, kStrategyCount>& utilities);

// ---------------------------------------------------------------------------
// Scripted backend
// ---------------------------------------------------------------------------

// Deterministic test double for the meta-agent.
//
// Payoffs come from the scenario's pairwise matrix. With nonstationary set,
// odd rounds swap the Cooperation and Competition rows. Joint tensors
// average the pairwise matrix over opponents; separable scalars average it
// against each opponent's most recently recorded strategy (uniformly over
// all three strategies for opponents with no history yet).
//
// Predictions are a temperature-1 softmax over each agent's own utilities
// (separable scalars, or joint row means).
//
// Evaluations score the target's true type plus per-coordinate Gaussian
// noise from a stream derived from (seed, round, target), clamped to [0,1];
// confidence follows the scenario's rule, drawn after the d noise values.
class ScriptedCoordinator final : public Coordinator {
public:
    ScriptedCoordinator(ScenarioScript script, PayoffMode mode,
                        std::vector<AgentId> agent_ids, std::uint64_t seed);

    PayoffTable generate_contextual_payoffs(const History& history,
                                            const TaskDescriptor& task,
                                            const BeliefsSnapshot& beliefs,
                                            int round) override;

    std::map<AgentId, StrategyDistribution> predict_agent_actions(
        const History& history, const PayoffTable& payoffs, int round) override;

    Evaluation evaluate_message(const std::string& message,
                                StrategyKind strategy,
                                const TaskDescriptor& task,
                                const AgentId& target_id, int round) override;

    // The pairwise matrix in effect for a round, after any nonstationary swap.
    PairPayoffMatrix round_pair_payoffs(int round) const;

private:
    ScenarioScript script_;
    PayoffMode mode_;
    std::vector<AgentId> agent_ids_;  // ascending
    std::uint64_t seed_;
};

}  // namespace beacof::coord
