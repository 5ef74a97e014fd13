#pragma once

#include <map>
#include <utility>

#include "beacof/core.hpp"

// Sequential-rationality calculus: expected utility under predicted opponent
// play, best response with deterministic tie-breaking, and ex-post regret.

namespace beacof::strategy {

// Per-opponent marginal strategy distributions. Joint profile probabilities
// are formed as the product of marginals (opponents treated as independent,
// since only marginals are ever broadcast).
struct OpponentProfileDistribution {
    std::map<AgentId, StrategyDistribution> marginals;

    friend bool operator==(const OpponentProfileDistribution&,
                           const OpponentProfileDistribution&) = default;
};

void validate_opponents(const OpponentProfileDistribution& opponents);

// Expected utility of playing `own`.
//
// Joint mode: sum over opponent profiles of profile probability times the
// tensor entry, with profiles enumerated in ascending profile_index order.
// Separable mode: the per-own-strategy scalar; `opponents` is ignored.
double expected_utility(const PayoffTable& payoffs, const AgentId& agent_id,
                        StrategyKind own,
                        const OpponentProfileDistribution& opponents);

// The strategy maximizing expected_utility and its value. Ties break to the
// earliest StrategyKind in enumeration order (Cooperation first).
std::pair<StrategyKind, double> best_response(
    const PayoffTable& payoffs, const AgentId& agent_id,
    const OpponentProfileDistribution& opponents);

// max over realized utilities minus the utility of the chosen strategy.
// Inputs must cover all three strategies with values in [0,10]; the result
// is therefore in [0,10].
double ex_post_regret(const std::map<StrategyKind, double>& realized,
                      StrategyKind chosen);

}  // namespace beacof::strategy
