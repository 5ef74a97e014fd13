#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Core domain types for the belief-driven collaboration engine: capability
// vectors, Gaussian belief states, the three-way collaboration strategy,
// payoff tables and per-round history records. Everything here is an
// immutable value object once constructed; validation lives in free
// functions invoked at module boundaries.

namespace beacof {

using AgentId = std::string;

// Lower bound on belief precision. Keeps the inverse-variance denominator
// strictly positive.
inline constexpr double kPrecisionFloor = 1e-9;

// Tolerance for probability distributions summing to one.
inline constexpr double kDistributionTolerance = 1e-9;

// Utilities are normalized to this closed range.
inline constexpr double kPayoffMin = 0.0;
inline constexpr double kPayoffMax = 10.0;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

// Trace file problems: unreadable, malformed, schema version mismatch.
struct TraceError : Error {
    using Error::Error;
};

// Raised by replay when a re-executed simulation departs from the recorded
// trace. Carries the first point of divergence.
struct ReplayDivergenceError : Error {
    ReplayDivergenceError(int round_, std::string field_, const std::string& what_)
        : Error(what_), round(round_), field(std::move(field_)) {}
    int round;
    std::string field;
};

// ---------------------------------------------------------------------------
// Strategy labels
// ---------------------------------------------------------------------------

// The discrete collaboration strategies. The enumeration order is a fixed
// total order (Cooperation < Competition < Coopetition) used for
// deterministic argmax tie-breaking.
enum class StrategyKind : int {
    Cooperation = 0,
    Competition = 1,
    Coopetition = 2,
};

inline constexpr int kStrategyCount = 3;

constexpr std::array<StrategyKind, kStrategyCount> all_strategies() {
    return {StrategyKind::Cooperation, StrategyKind::Competition,
            StrategyKind::Coopetition};
}

// Case-sensitive canonical names used in every file and wire message.
const std::string& to_string(StrategyKind kind);
std::optional<StrategyKind> strategy_from_string(const std::string& name);

// ---------------------------------------------------------------------------
// Vectors, beliefs, evaluations
// ---------------------------------------------------------------------------

// A d-dimensional capability vector with every element in [0,1]. Used both
// for an agent's latent type and for per-round evaluation scores.
struct TypeVector {
    std::vector<double> values;

    TypeVector() = default;
    explicit TypeVector(std::vector<double> v) : values(std::move(v)) {}

    std::size_t dim() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }

    friend bool operator==(const TypeVector&, const TypeVector&) = default;
};

// Throws ValidationError unless every element is finite and in [0,1] and the
// dimension is at least one.
void validate_type_vector(const TypeVector& v, const std::string& what);

// Gaussian belief about one peer: mean estimate plus a scalar precision
// (confidence). Precision stays strictly positive; updates floor it at
// kPrecisionFloor.
struct BeliefState {
    TypeVector estimate;
    double precision = 1.0;

    friend bool operator==(const BeliefState&, const BeliefState&) = default;
};

void validate_belief_state(const BeliefState& b, const std::string& what);

// One meta-agent evaluation of a message: per-dimension scores in [0,1] and
// a non-negative confidence.
struct Evaluation {
    TypeVector scores;
    double confidence = 0.0;

    friend bool operator==(const Evaluation&, const Evaluation&) = default;
};

void validate_evaluation(const Evaluation& e, const std::string& what);

// Clamps a finite value into [0,1]. Non-finite input is a validation error.
double clamp_unit(double value);

// ---------------------------------------------------------------------------
// Strategy distributions
// ---------------------------------------------------------------------------

// A probability distribution over the three strategies, indexed by the
// StrategyKind enumeration order.
struct StrategyDistribution {
    std::array<double, kStrategyCount> probabilities{};

    double operator[](StrategyKind k) const {
        return probabilities[static_cast<int>(k)];
    }
    double& operator[](StrategyKind k) {
        return probabilities[static_cast<int>(k)];
    }

    static StrategyDistribution uniform() {
        return {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
    }
    static StrategyDistribution point_mass(StrategyKind k) {
        StrategyDistribution d{};
        d[k] = 1.0;
        return d;
    }

    friend bool operator==(const StrategyDistribution&,
                           const StrategyDistribution&) = default;
};

// Throws ValidationError naming the violation: a negative or non-finite
// entry, or a total further than kDistributionTolerance from one.
void validate_distribution(const StrategyDistribution& dist);

// ---------------------------------------------------------------------------
// Payoff tables
// ---------------------------------------------------------------------------

enum class PayoffMode {
    Separable,  // one scalar per (agent, own strategy)
    Joint,      // per-agent tensor over (own strategy, opponent profile)
};

const std::string& to_string(PayoffMode mode);
std::optional<PayoffMode> payoff_mode_from_string(const std::string& name);

// Joint utilities for one agent. `rows[own]` holds one value per opponent
// strategy profile; profiles are indexed with `opponents[0]` as the least
// significant base-3 digit (see profile_index).
struct JointPayoffs {
    std::vector<AgentId> opponents;
    std::array<std::vector<double>, kStrategyCount> rows;

    friend bool operator==(const JointPayoffs&, const JointPayoffs&) = default;
};

// Encodes an opponent strategy profile as an index in [0, 3^k).
std::size_t profile_index(const std::vector<StrategyKind>& profile);
std::size_t profile_count(std::size_t n_opponents);

// Per-agent utilities over strategy choices, all values in [0,10].
struct PayoffTable {
    PayoffMode mode = PayoffMode::Separable;
    std::map<AgentId, std::array<double, kStrategyCount>> separable;
    std::map<AgentId, JointPayoffs> joint;

    friend bool operator==(const PayoffTable&, const PayoffTable&) = default;
};

// Checks value ranges and, in joint mode, that every row has exactly
// 3^(#opponents) entries.
void validate_payoff_table(const PayoffTable& table);

// ---------------------------------------------------------------------------
// History records
// ---------------------------------------------------------------------------

// One agent turn: the chosen strategy, the emitted message, the meta-agent's
// evaluation, the broadcast the agent acted on, the realized ex-post regret,
// and the post-update belief every observer holds about this agent.
struct RoundRecord {
    int round = 0;
    AgentId agent_id;
    StrategyKind strategy = StrategyKind::Cooperation;
    std::string message;
    Evaluation evaluation;
    PayoffTable payoffs;
    std::map<AgentId, StrategyDistribution> predicted;
    double regret = 0.0;
    std::map<AgentId, BeliefState> post_beliefs;

    friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

using History = std::vector<RoundRecord>;

}  // namespace beacof
