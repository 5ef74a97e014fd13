#include "beacof/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include "beacof/llm.hpp"
#include "beacof/strategy.hpp"

namespace beacof::runtime {

namespace {

std::vector<AgentId> sorted_agent_ids(const SimulationConfig& config) {
    std::vector<AgentId> ids;
    ids.reserve(config.agents.size());
    for (const AgentSpec& agent : config.agents) ids.push_back(agent.id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

coord::BeliefsSnapshot snapshot_beliefs(const SimulationState& state) {
    coord::BeliefsSnapshot snapshot;
    for (const auto& [id, profile] : state.profiles) {
        snapshot[id] = profile.belief_matrix;
    }
    return snapshot;
}

// Realized utilities for one agent given everyone's actual strategy this
// round. Joint mode reads the tensor at the realized opponent profile;
// separable mode uses the broadcast scalars directly.
std::map<StrategyKind, double> realized_utilities(
    const PayoffTable& payoffs, const AgentId& agent,
    const std::map<AgentId, StrategyKind>& chosen) {
    std::map<StrategyKind, double> realized;
    if (payoffs.mode == PayoffMode::Separable) {
        const auto& row = payoffs.separable.at(agent);
        for (StrategyKind k : all_strategies()) {
            realized[k] = row[static_cast<int>(k)];
        }
        return realized;
    }
    const JointPayoffs& entry = payoffs.joint.at(agent);
    std::vector<StrategyKind> profile;
    profile.reserve(entry.opponents.size());
    for (const AgentId& opponent : entry.opponents) {
        profile.push_back(chosen.at(opponent));
    }
    std::size_t index = profile_index(profile);
    for (StrategyKind k : all_strategies()) {
        realized[k] = entry.rows[static_cast<int>(k)][index];
    }
    return realized;
}

}  // namespace

SimulationState initialize(const SimulationConfig& config) {
    validate_config(config);

    SimulationState state;
    TypeVector prior_mean(std::vector<double>(static_cast<std::size_t>(config.d), 0.5));
    for (const AgentSpec& agent : config.agents) {
        agents::AgentProfile profile;
        profile.agent_id = agent.id;
        profile.role_designation = agent.role;
        if (config.backend == BackendKind::Scripted) {
            profile.private_type = config.scenario.true_types.at(agent.id);
        }
        profile.belief_matrix.observer_id = agent.id;
        for (const AgentSpec& peer : config.agents) {
            if (peer.id == agent.id) continue;
            profile.belief_matrix.targets[peer.id] =
                BeliefState{prior_mean, config.omega_init};
        }
        state.profiles[agent.id] = std::move(profile);
        state.shift_series[agent.id] = {};
    }
    return state;
}

SimulationState run_round(const SimulationState& state,
                          coord::Coordinator& coordinator,
                          agents::MessageBackend& messages,
                          const SimulationConfig& config) {
    if (state.stopped_reason) {
        throw ValidationError("run_round: simulation already stopped");
    }
    const int round = state.round + 1;

    PayoffTable payoffs = coordinator.generate_contextual_payoffs(
        state.history, config.task, snapshot_beliefs(state), round);
    validate_payoff_table(payoffs);

    std::map<AgentId, StrategyDistribution> predictions =
        coordinator.predict_agent_actions(state.history, payoffs, round);
    for (const auto& [id, profile] : state.profiles) {
        auto it = predictions.find(id);
        if (it == predictions.end()) {
            throw ValidationError("run_round: coordinator produced no prediction for " +
                                  id);
        }
        validate_distribution(it->second);
    }

    coord::CoordinatorSignals signals{payoffs, predictions, round};

    SimulationState next = state;
    const auto pre_round = snapshot_beliefs(state);

    std::map<AgentId, StrategyKind> chosen_this_round;
    std::vector<std::size_t> record_slots;

    for (const auto& [id, _] : next.profiles) {  // std::map iterates ids ascending
        agents::AgentProfile& profile = next.profiles[id];
        StrategyKind chosen = agents::select_strategy(profile, signals);
        std::string message = messages.generate_message(profile, chosen, round,
                                                        signals, next.history,
                                                        config.task);
        if (message.empty()) {
            throw ValidationError("run_round: empty message from agent " + id);
        }
        Evaluation evaluation =
            coordinator.evaluate_message(message, chosen, config.task, id, round);
        validate_evaluation(evaluation, "evaluation of " + id);
        if (static_cast<int>(evaluation.scores.dim()) != config.d) {
            std::ostringstream msg;
            msg << "run_round: evaluation for " << id << " has dimension "
                << evaluation.scores.dim() << ", expected " << config.d;
            throw ValidationError(msg.str());
        }

        RoundRecord record;
        record.round = round;
        record.agent_id = id;
        record.strategy = chosen;
        record.message = std::move(message);
        record.evaluation = evaluation;
        record.payoffs = payoffs;
        record.predicted = predictions;
        chosen_this_round[id] = chosen;

        for (auto& [other_id, other_profile] : next.profiles) {
            if (other_id == id) continue;
            other_profile =
                agents::receive_evaluation(other_profile, id, evaluation, config.lambda);
            record.post_beliefs[other_id] = other_profile.belief_matrix.targets.at(id);
        }

        record_slots.push_back(next.history.size());
        next.history.push_back(std::move(record));
    }

    for (std::size_t slot : record_slots) {
        RoundRecord& record = next.history[slot];
        auto realized = realized_utilities(payoffs, record.agent_id, chosen_this_round);
        record.regret = strategy::ex_post_regret(realized, record.strategy);
    }

    for (auto& [id, profile] : next.profiles) {
        double shift = belief::belief_shift(pre_round.at(id), profile.belief_matrix,
                                            static_cast<std::size_t>(config.d),
                                            config.shift_includes_self);
        next.shift_series[id].push_back(shift);
    }

    next.round = round;
    return next;
}

std::unique_ptr<coord::Coordinator> make_coordinator(const SimulationConfig& config) {
    if (config.backend == BackendKind::Scripted) {
        return std::make_unique<coord::ScriptedCoordinator>(
            config.scenario, config.payoff_mode, sorted_agent_ids(config), config.seed);
    }
    return std::make_unique<llm::LlmCoordinator>(config.endpoint,
                                                 sorted_agent_ids(config), config.d);
}

std::unique_ptr<agents::MessageBackend> make_message_backend(
    const SimulationConfig& config) {
    if (config.backend == BackendKind::Scripted) {
        return std::make_unique<agents::ScriptedMessageBackend>();
    }
    return std::make_unique<llm::LlmMessageBackend>(config.endpoint);
}

namespace {

// Cross-observer agreement: largest normalized distance between any two
// observers' means about the same target. Needs at least three agents to be
// meaningful; with fewer there are no observer pairs and the check never
// fires.
std::optional<double> max_pairwise_disagreement(const SimulationState& state, int d) {
    std::optional<double> worst;
    for (const auto& [target, _] : state.profiles) {
        std::vector<const BeliefState*> views;
        for (const auto& [observer, profile] : state.profiles) {
            if (observer == target) continue;
            views.push_back(&profile.belief_matrix.targets.at(target));
        }
        for (std::size_t a = 0; a < views.size(); ++a) {
            for (std::size_t b = a + 1; b < views.size(); ++b) {
                double sum_sq = 0.0;
                for (int i = 0; i < d; ++i) {
                    double diff = views[a]->estimate[static_cast<std::size_t>(i)] -
                                  views[b]->estimate[static_cast<std::size_t>(i)];
                    sum_sq += diff * diff;
                }
                double dist = std::sqrt(sum_sq / d);
                if (!worst || dist > *worst) worst = dist;
            }
        }
    }
    return worst;
}

}  // namespace

metrics::Trace run_simulation(const SimulationConfig& config,
                              coord::Coordinator& coordinator,
                              agents::MessageBackend& messages) {
    SimulationState state = initialize(config);

    metrics::Trace trace;
    trace.config = config;

    while (state.round < config.t_max) {
        SimulationState next;
        try {
            next = run_round(state, coordinator, messages, config);
        } catch (const Error& e) {
            std::cerr << "[beacof] warning: round " << (state.round + 1)
                      << " failed, trace incomplete: " << e.what() << "\n";
            trace.complete = false;
            trace.error_message = e.what();
            break;
        }
        state = std::move(next);

        if (belief::should_stop(state.shift_series, config.epsilon_change,
                                config.patience)) {
            state.stopped_reason = metrics::StopReason::EarlyStop;
            break;
        }
        if (config.consensus_epsilon) {
            auto disagreement = max_pairwise_disagreement(state, config.d);
            if (disagreement && *disagreement < *config.consensus_epsilon) {
                state.stopped_reason = metrics::StopReason::Consensus;
                break;
            }
        }
    }
    if (trace.complete && !state.stopped_reason) {
        state.stopped_reason = metrics::StopReason::Horizon;
    }

    trace.records = state.history;
    trace.shift_series = state.shift_series;
    trace.stop_reason = state.stopped_reason;
    for (const auto& [id, _] : state.profiles) {
        double sum = 0.0;
        int count = 0;
        for (const RoundRecord& record : state.history) {
            if (record.agent_id != id) continue;
            sum += record.regret;
            ++count;
        }
        trace.average_regret[id] = count > 0 ? sum / count : 0.0;
    }
    return trace;
}

metrics::Trace run_simulation(const SimulationConfig& config) {
    auto coordinator = make_coordinator(config);
    auto messages = make_message_backend(config);
    return run_simulation(config, *coordinator, *messages);
}

// ---------------------------------------------------------------------------
// Replay
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void diverged(int round, const std::string& field,
                           const std::string& detail) {
    std::ostringstream msg;
    msg << "replay divergence at round " << round << ", field " << field;
    if (!detail.empty()) msg << ": " << detail;
    throw ReplayDivergenceError(round, field, msg.str());
}

void compare_records(const RoundRecord& recorded, const RoundRecord& replayed,
                     std::size_t index) {
    const std::string prefix = "records[" + std::to_string(index) + "].";
    int round = recorded.round;
    if (recorded.round != replayed.round) {
        diverged(round, prefix + "round", "");
    }
    if (recorded.agent_id != replayed.agent_id) {
        diverged(round, prefix + "agent_id",
                 recorded.agent_id + " vs " + replayed.agent_id);
    }
    if (recorded.strategy != replayed.strategy) {
        diverged(round, prefix + "strategy",
                 to_string(recorded.strategy) + " vs " + to_string(replayed.strategy));
    }
    if (recorded.message != replayed.message) {
        diverged(round, prefix + "message", "");
    }
    if (recorded.evaluation != replayed.evaluation) {
        diverged(round, prefix + "evaluation", "");
    }
    if (recorded.payoffs != replayed.payoffs) {
        diverged(round, prefix + "payoffs", "");
    }
    if (recorded.predicted != replayed.predicted) {
        diverged(round, prefix + "predicted", "");
    }
    if (recorded.regret != replayed.regret) {
        diverged(round, prefix + "regret", "");
    }
    if (recorded.post_beliefs != replayed.post_beliefs) {
        diverged(round, prefix + "post_beliefs", "");
    }
}

}  // namespace

SimulationState replay(const metrics::Trace& trace) {
    if (trace.config.backend != BackendKind::Scripted) {
        throw ValidationError("replay requires scripted backend");
    }
    if (!trace.complete) {
        throw ValidationError("replay: trace is flagged incomplete");
    }

    auto coordinator = make_coordinator(trace.config);
    auto messages = make_message_backend(trace.config);
    metrics::Trace replayed = run_simulation(trace.config, *coordinator, *messages);

    std::size_t shared = std::min(trace.records.size(), replayed.records.size());
    for (std::size_t i = 0; i < shared; ++i) {
        compare_records(trace.records[i], replayed.records[i], i);
    }
    if (trace.records.size() != replayed.records.size()) {
        int round = trace.records.empty() ? 0 : trace.records[shared ? shared - 1 : 0].round;
        diverged(round, "records.size",
                 std::to_string(trace.records.size()) + " recorded vs " +
                     std::to_string(replayed.records.size()) + " replayed");
    }

    for (const auto& [agent, series] : trace.shift_series) {
        auto it = replayed.shift_series.find(agent);
        if (it == replayed.shift_series.end() || it->second.size() != series.size()) {
            diverged(static_cast<int>(series.size()), "shift_series[" + agent + "]",
                     "series shape");
        }
        for (std::size_t i = 0; i < series.size(); ++i) {
            if (series[i] != it->second[i]) {
                diverged(static_cast<int>(i + 1),
                         "shift_series[" + agent + "][" + std::to_string(i) + "]", "");
            }
        }
    }

    int final_round = replayed.records.empty() ? 0 : replayed.records.back().round;
    if (trace.stop_reason != replayed.stop_reason) {
        diverged(final_round, "stop_reason", "");
    }
    if (trace.average_regret != replayed.average_regret) {
        diverged(final_round, "average_regret", "");
    }

    // Reconstruct the final state by running forward again; determinism of
    // the scripted backend makes this equal to the recorded run.
    auto coordinator2 = make_coordinator(trace.config);
    auto messages2 = make_message_backend(trace.config);
    SimulationState state = initialize(trace.config);
    int rounds = final_round;
    for (int t = 0; t < rounds; ++t) {
        state = run_round(state, *coordinator2, *messages2, trace.config);
    }
    state.stopped_reason = replayed.stop_reason;
    return state;
}

}  // namespace beacof::runtime
