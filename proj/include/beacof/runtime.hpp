#pragma once

#include <map>
#include <memory>
#include <optional>

#include "beacof/agents.hpp"
#include "beacof/belief.hpp"
#include "beacof/config.hpp"
#include "beacof/coordinator.hpp"
#include "beacof/core.hpp"
#include "beacof/metrics.hpp"

// Round-loop orchestrator: broadcast, sequential agent turns in ascending id
// order, evaluation fan-out, belief-shift bookkeeping, early stopping, and
// the horizon failsafe. A simulation is strictly sequential; independent
// simulations share no mutable state and may run concurrently.

namespace beacof::runtime {

struct SimulationState {
    int round = 0;  // completed rounds
    std::map<AgentId, agents::AgentProfile> profiles;
    History history;
    std::map<AgentId, belief::ShiftSeries> shift_series;
    std::optional<metrics::StopReason> stopped_reason;

    friend bool operator==(const SimulationState&, const SimulationState&) = default;
};

// All belief means start at 0.5 in every coordinate with precision
// omega_init; history is empty and the round counter is zero.
SimulationState initialize(const SimulationConfig& config);

// Executes one full round against the given backends and returns the
// successor state. The input state is untouched, so a throwing backend
// leaves the caller holding the pre-round state (rollback by construction).
//
// Within the round: payoffs, predictions, broadcast; then per agent in
// ascending id order: strategy selection, message, evaluation, record
// append, belief fan-out to every other agent. Afterwards per-agent ex-post
// regret is filled in from the realized strategies and each observer's
// belief shift against the pre-round snapshot is appended.
SimulationState run_round(const SimulationState& state,
                          coord::Coordinator& coordinator,
                          agents::MessageBackend& messages,
                          const SimulationConfig& config);

// Builds backends matching config.backend.
std::unique_ptr<coord::Coordinator> make_coordinator(const SimulationConfig& config);
std::unique_ptr<agents::MessageBackend> make_message_backend(
    const SimulationConfig& config);

// Loops run_round until the belief-shift criterion fires (EarlyStop), the
// optional consensus check fires (Consensus), or round t_max completes
// (Horizon). A backend failure yields a partial trace flagged incomplete.
metrics::Trace run_simulation(const SimulationConfig& config,
                              coord::Coordinator& coordinator,
                              agents::MessageBackend& messages);
metrics::Trace run_simulation(const SimulationConfig& config);

// Re-executes a completed scripted trace from its config echo and asserts
// equality with the recording round by round. Returns the final state.
// Throws ReplayDivergenceError naming the first mismatching round and field.
SimulationState replay(const metrics::Trace& trace);

}  // namespace beacof::runtime
