#include "beacof/agents.hpp"

#include <sstream>

namespace beacof::agents {

StrategyKind select_strategy(const AgentProfile& profile,
                             const coord::CoordinatorSignals& signals) {
    strategy::OpponentProfileDistribution opponents;
    for (const auto& [agent, dist] : signals.predictions) {
        if (agent == profile.agent_id) continue;
        opponents.marginals[agent] = dist;
    }
    auto [chosen, value] =
        strategy::best_response(signals.payoffs, profile.agent_id, opponents);
    (void)value;
    return chosen;
}

std::string scripted_message(const AgentProfile& profile, StrategyKind chosen,
                             int round) {
    std::ostringstream out;
    out << profile.role_designation << "|" << round << "|" << to_string(chosen);
    return out.str();
}

AgentProfile receive_evaluation(const AgentProfile& observer,
                                const AgentId& target_id, const Evaluation& obs,
                                double lambda) {
    if (target_id == observer.agent_id) {
        throw ValidationError("receive_evaluation: observer " + observer.agent_id +
                              " cannot evaluate itself");
    }
    auto it = observer.belief_matrix.targets.find(target_id);
    if (it == observer.belief_matrix.targets.end()) {
        throw ValidationError("receive_evaluation: unknown target " + target_id);
    }
    AgentProfile updated = observer;
    updated.belief_matrix.targets[target_id] =
        belief::update_belief(it->second, obs, lambda);
    return updated;
}

}  // namespace beacof::agents
