#include "beacof/strategy.hpp"

#include <cmath>
#include <sstream>

namespace beacof::strategy {

void validate_opponents(const OpponentProfileDistribution& opponents) {
    for (const auto& [agent, dist] : opponents.marginals) {
        try {
            validate_distribution(dist);
        } catch (const ValidationError& e) {
            throw ValidationError("opponent " + agent + ": " + e.what());
        }
    }
}

double expected_utility(const PayoffTable& payoffs, const AgentId& agent_id,
                        StrategyKind own,
                        const OpponentProfileDistribution& opponents) {
    if (payoffs.mode == PayoffMode::Separable) {
        auto it = payoffs.separable.find(agent_id);
        if (it == payoffs.separable.end()) {
            throw ValidationError("expected_utility: agent " + agent_id +
                                  " absent from separable payoffs");
        }
        return it->second[static_cast<int>(own)];
    }

    auto it = payoffs.joint.find(agent_id);
    if (it == payoffs.joint.end()) {
        throw ValidationError("expected_utility: agent " + agent_id +
                              " absent from joint payoffs");
    }
    const JointPayoffs& entry = it->second;
    const auto& row = entry.rows[static_cast<int>(own)];
    const std::size_t n_opp = entry.opponents.size();
    if (row.size() != profile_count(n_opp)) {
        throw ValidationError("expected_utility: malformed joint row for " +
                              agent_id);
    }
    for (const AgentId& opp : entry.opponents) {
        if (opponents.marginals.find(opp) == opponents.marginals.end()) {
            throw ValidationError("expected_utility: missing prediction for opponent " +
                                  opp);
        }
    }

    // Walk profiles in index order; decode each index into per-opponent
    // strategies to accumulate the product of marginals.
    double expectation = 0.0;
    for (std::size_t index = 0; index < row.size(); ++index) {
        double prob = 1.0;
        std::size_t rest = index;
        for (std::size_t k = 0; k < n_opp; ++k) {
            auto kind = static_cast<StrategyKind>(rest % kStrategyCount);
            rest /= kStrategyCount;
            prob *= opponents.marginals.at(entry.opponents[k])[kind];
        }
        expectation += prob * row[index];
    }
    return expectation;
}

std::pair<StrategyKind, double> best_response(
    const PayoffTable& payoffs, const AgentId& agent_id,
    const OpponentProfileDistribution& opponents) {
    StrategyKind best = StrategyKind::Cooperation;
    double best_value = -1.0;
    bool first = true;
    for (StrategyKind k : all_strategies()) {
        double value = expected_utility(payoffs, agent_id, k, opponents);
        if (first || value > best_value) {  // strict: earlier strategy wins ties
            best = k;
            best_value = value;
            first = false;
        }
    }
    return {best, best_value};
}

double ex_post_regret(const std::map<StrategyKind, double>& realized,
                      StrategyKind chosen) {
    double best = 0.0;
    bool first = true;
    for (StrategyKind k : all_strategies()) {
        auto it = realized.find(k);
        if (it == realized.end()) {
            throw ValidationError("ex_post_regret: missing entry for " +
                                  to_string(k));
        }
        double u = it->second;
        if (!std::isfinite(u) || u < kPayoffMin || u > kPayoffMax) {
            std::ostringstream msg;
            msg << "ex_post_regret: utility " << u << " for " << to_string(k)
                << " outside [0,10]";
            throw ValidationError(msg.str());
        }
        if (first || u > best) {
            best = u;
            first = false;
        }
    }
    return best - realized.at(chosen);
}

}  // namespace beacof::strategy
