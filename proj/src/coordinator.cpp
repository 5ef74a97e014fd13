#include "beacof/coordinator.hpp"

#include <algorithm>
#include <cmath>

#include "beacof/rng.hpp"

namespace beacof::coord {

StrategyDistribution softmax_distribution(
    const std::array<double, kStrategyCount>& utilities) {
    double max_u = *std::max_element(utilities.begin(), utilities.end());
    StrategyDistribution dist{};
    double sum = 0.0;
    for (int i = 0; i < kStrategyCount; ++i) {
        double e = std::exp(utilities[i] - max_u);
        dist.probabilities[i] = e;
        sum += e;
    }
    for (int i = 0; i < kStrategyCount; ++i) {
        dist.probabilities[i] /= sum;
    }
    return dist;
}

ScriptedCoordinator::ScriptedCoordinator(ScenarioScript script, PayoffMode mode,
                                         std::vector<AgentId> agent_ids,
                                         std::uint64_t seed)
    : script_(std::move(script)),
      mode_(mode),
      agent_ids_(std::move(agent_ids)),
      seed_(seed) {
    std::sort(agent_ids_.begin(), agent_ids_.end());
}

PairPayoffMatrix ScriptedCoordinator::round_pair_payoffs(int round) const {
    PairPayoffMatrix pair = script_.pair_payoffs;
    if (script_.nonstationary && round % 2 == 1) {
        std::swap(pair[static_cast<int>(StrategyKind::Cooperation)],
                  pair[static_cast<int>(StrategyKind::Competition)]);
    }
    return pair;
}

PayoffTable ScriptedCoordinator::generate_contextual_payoffs(
    const History& history, const TaskDescriptor&, const BeliefsSnapshot&,
    int round) {
    const PairPayoffMatrix pair = round_pair_payoffs(round);

    PayoffTable table;
    table.mode = mode_;

    if (mode_ == PayoffMode::Joint) {
        for (const AgentId& agent : agent_ids_) {
            JointPayoffs entry;
            for (const AgentId& other : agent_ids_) {
                if (other != agent) entry.opponents.push_back(other);
            }
            const std::size_t n_opp = entry.opponents.size();
            const std::size_t profiles = profile_count(n_opp);
            for (StrategyKind own : all_strategies()) {
                auto& row = entry.rows[static_cast<int>(own)];
                row.resize(profiles);
                for (std::size_t index = 0; index < profiles; ++index) {
                    double sum = 0.0;
                    std::size_t rest = index;
                    for (std::size_t k = 0; k < n_opp; ++k) {
                        auto kind = static_cast<StrategyKind>(rest % kStrategyCount);
                        rest /= kStrategyCount;
                        sum += pair[static_cast<int>(own)][static_cast<int>(kind)];
                    }
                    row[index] = sum / static_cast<double>(n_opp);
                }
            }
            table.joint[agent] = std::move(entry);
        }
        return table;
    }

    // Separable: score each own strategy against opponents' latest recorded
    // strategies; opponents without history contribute their row average.
    std::map<AgentId, StrategyKind> latest;
    for (const RoundRecord& record : history) {
        latest[record.agent_id] = record.strategy;  // records are in time order
    }
    for (const AgentId& agent : agent_ids_) {
        std::array<double, kStrategyCount> scalars{};
        for (StrategyKind own : all_strategies()) {
            double sum = 0.0;
            int count = 0;
            for (const AgentId& other : agent_ids_) {
                if (other == agent) continue;
                auto it = latest.find(other);
                if (it != latest.end()) {
                    sum += pair[static_cast<int>(own)][static_cast<int>(it->second)];
                } else {
                    double row_mean = 0.0;
                    for (StrategyKind k : all_strategies()) {
                        row_mean += pair[static_cast<int>(own)][static_cast<int>(k)];
                    }
                    sum += row_mean / kStrategyCount;
                }
                ++count;
            }
            scalars[static_cast<int>(own)] = sum / count;
        }
        table.separable[agent] = scalars;
    }
    return table;
}

std::map<AgentId, StrategyDistribution> ScriptedCoordinator::predict_agent_actions(
    const History&, const PayoffTable& payoffs, int) {
    std::map<AgentId, StrategyDistribution> predictions;
    for (const AgentId& agent : agent_ids_) {
        std::array<double, kStrategyCount> utilities{};
        if (payoffs.mode == PayoffMode::Separable) {
            auto it = payoffs.separable.find(agent);
            if (it == payoffs.separable.end()) {
                throw ValidationError("predict_agent_actions: no payoffs for " + agent);
            }
            utilities = it->second;
        } else {
            auto it = payoffs.joint.find(agent);
            if (it == payoffs.joint.end()) {
                throw ValidationError("predict_agent_actions: no payoffs for " + agent);
            }
            for (StrategyKind own : all_strategies()) {
                const auto& row = it->second.rows[static_cast<int>(own)];
                double sum = 0.0;
                for (double u : row) sum += u;
                utilities[static_cast<int>(own)] = sum / static_cast<double>(row.size());
            }
        }
        StrategyDistribution dist = softmax_distribution(utilities);
        validate_distribution(dist);
        predictions[agent] = dist;
    }
    return predictions;
}

Evaluation ScriptedCoordinator::evaluate_message(const std::string& message,
                                                 StrategyKind,
                                                 const TaskDescriptor&,
                                                 const AgentId& target_id,
                                                 int round) {
    if (message.empty()) {
        throw ValidationError("evaluate_message: empty message");
    }
    auto it = script_.true_types.find(target_id);
    if (it == script_.true_types.end()) {
        throw ValidationError("evaluate_message: no true type for agent " + target_id);
    }
    auto pos = std::find(agent_ids_.begin(), agent_ids_.end(), target_id);
    auto target_index =
        static_cast<std::uint64_t>(std::distance(agent_ids_.begin(), pos));

    RandomStream stream(
        derive_seed(seed_, static_cast<std::uint64_t>(round), target_index));

    Evaluation eval;
    eval.scores.values.reserve(it->second.dim());
    for (double coord : it->second.values) {
        double noise = script_.noise_sigma * stream.next_gaussian();
        eval.scores.values.push_back(clamp_unit(coord + noise));
    }
    if (script_.confidence_rule.kind == ConfidenceRule::Kind::Fixed) {
        eval.confidence = script_.confidence_rule.value;
    } else {
        double u = stream.next_uniform();
        eval.confidence = script_.confidence_rule.lo +
                          u * (script_.confidence_rule.hi - script_.confidence_rule.lo);
    }
    return eval;
}

}  // namespace beacof::coord
