#include "beacof/core.hpp"

#include <cmath>
#include <sstream>

namespace beacof {

namespace {

const std::array<std::string, kStrategyCount> kStrategyNames = {
    "Cooperation", "Competition", "Coopetition"};

}  // namespace

const std::string& to_string(StrategyKind kind) {
    return kStrategyNames[static_cast<int>(kind)];
}

std::optional<StrategyKind> strategy_from_string(const std::string& name) {
    for (StrategyKind k : all_strategies()) {
        if (kStrategyNames[static_cast<int>(k)] == name) return k;
    }
    return std::nullopt;
}

const std::string& to_string(PayoffMode mode) {
    static const std::string separable = "separable";
    static const std::string joint = "joint";
    return mode == PayoffMode::Separable ? separable : joint;
}

std::optional<PayoffMode> payoff_mode_from_string(const std::string& name) {
    if (name == "separable") return PayoffMode::Separable;
    if (name == "joint") return PayoffMode::Joint;
    return std::nullopt;
}

double clamp_unit(double value) {
    if (!std::isfinite(value)) {
        throw ValidationError("clamp_unit: non-finite input");
    }
    if (value < 0.0) return 0.0;
    if (value > 1.0) return 1.0;
    return value;
}

void validate_type_vector(const TypeVector& v, const std::string& what) {
    if (v.values.empty()) {
        throw ValidationError(what + ": dimension must be at least 1");
    }
    for (std::size_t i = 0; i < v.values.size(); ++i) {
        double x = v.values[i];
        if (!std::isfinite(x) || x < 0.0 || x > 1.0) {
            std::ostringstream msg;
            msg << what << ": element " << i << " = " << x
                << " outside [0,1]";
            throw ValidationError(msg.str());
        }
    }
}

void validate_belief_state(const BeliefState& b, const std::string& what) {
    validate_type_vector(b.estimate, what + ".estimate");
    if (!std::isfinite(b.precision) || b.precision <= 0.0) {
        std::ostringstream msg;
        msg << what << ": precision " << b.precision << " must be > 0";
        throw ValidationError(msg.str());
    }
}

void validate_evaluation(const Evaluation& e, const std::string& what) {
    validate_type_vector(e.scores, what + ".scores");
    if (!std::isfinite(e.confidence) || e.confidence < 0.0) {
        std::ostringstream msg;
        msg << what << ": confidence " << e.confidence << " must be >= 0";
        throw ValidationError(msg.str());
    }
}

void validate_distribution(const StrategyDistribution& dist) {
    double sum = 0.0;
    for (StrategyKind k : all_strategies()) {
        double p = dist[k];
        if (!std::isfinite(p)) {
            throw ValidationError("distribution: non-finite entry for " +
                                  to_string(k));
        }
        if (p < 0.0) {
            std::ostringstream msg;
            msg << "distribution: negative entry " << p << " for "
                << to_string(k);
            throw ValidationError(msg.str());
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > kDistributionTolerance) {
        std::ostringstream msg;
        msg << "distribution: sum=" << sum << " deviates from 1 by more than "
            << kDistributionTolerance;
        throw ValidationError(msg.str());
    }
}

std::size_t profile_count(std::size_t n_opponents) {
    std::size_t count = 1;
    for (std::size_t i = 0; i < n_opponents; ++i) count *= kStrategyCount;
    return count;
}

std::size_t profile_index(const std::vector<StrategyKind>& profile) {
    std::size_t index = 0;
    std::size_t base = 1;
    for (StrategyKind k : profile) {
        index += base * static_cast<std::size_t>(k);
        base *= kStrategyCount;
    }
    return index;
}

namespace {

void validate_payoff_value(double u, const std::string& where) {
    if (!std::isfinite(u) || u < kPayoffMin || u > kPayoffMax) {
        std::ostringstream msg;
        msg << where << ": utility " << u << " outside [0,10]";
        throw ValidationError(msg.str());
    }
}

}  // namespace

void validate_payoff_table(const PayoffTable& table) {
    if (table.mode == PayoffMode::Separable) {
        if (table.separable.empty()) {
            throw ValidationError("payoff table: no separable entries");
        }
        for (const auto& [agent, row] : table.separable) {
            for (StrategyKind k : all_strategies()) {
                validate_payoff_value(row[static_cast<int>(k)],
                                      "payoff[" + agent + "][" + to_string(k) + "]");
            }
        }
        return;
    }
    if (table.joint.empty()) {
        throw ValidationError("payoff table: no joint entries");
    }
    for (const auto& [agent, entry] : table.joint) {
        std::size_t expected = profile_count(entry.opponents.size());
        for (StrategyKind k : all_strategies()) {
            const auto& row = entry.rows[static_cast<int>(k)];
            if (row.size() != expected) {
                std::ostringstream msg;
                msg << "payoff[" << agent << "][" << to_string(k) << "]: "
                    << row.size() << " profile entries, expected " << expected;
                throw ValidationError(msg.str());
            }
            for (double u : row) {
                validate_payoff_value(u, "payoff[" + agent + "][" + to_string(k) + "]");
            }
        }
    }
}

}  // namespace beacof
