#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "beacof/core.hpp"

// Gaussian belief kernel: inverse-variance weighted mean updates with a
// forgetting factor on precision, the normalized belief-shift metric, the
// early-stopping predicate, and a Monte Carlo harness for the steady-state
// convergence analysis.

namespace beacof::belief {

// All belief estimates one observer holds about its peers.
struct BeliefMatrix {
    AgentId observer_id;
    std::map<AgentId, BeliefState> targets;

    friend bool operator==(const BeliefMatrix&, const BeliefMatrix&) = default;
};

// Per-observer sequence of belief-shift values, one per completed round.
using ShiftSeries = std::vector<double>;

// Raw update arithmetic, shared by the validated entry point and the
// analysis harness. The posterior mean weighs the prior by its pre-decay
// precision:
//
//   mean'      = (precision * mean + confidence * obs) / (precision + confidence)
//   precision' = max(lambda * precision + confidence, kPrecisionFloor)
//
// No range checks and no clamping; callers own input hygiene.
void update_mean_in_place(std::vector<double>& mean, double precision,
                          const std::vector<double>& obs, double confidence);
double update_precision(double precision, double confidence, double lambda);

// Fuses an observation into a prior belief. Inputs are validated: the prior
// and observation must share a dimension, the observation scores must lie in
// [0,1], and lambda must be in (0,1). The returned estimate is a convex
// combination of prior and observation, so it stays in [0,1].
BeliefState update_belief(const BeliefState& prior, const Evaluation& obs,
                          double lambda);

// Normalized Euclidean distance between two snapshots of one observer's
// belief matrix:
//
//   ||concat(curr) - concat(prev)||_2 / sqrt(m * d)
//
// where m counts the targets in the matrix. With include_self_in_norm the
// normalizer counts one extra (never-updated) block, i.e. sqrt((m+1) * d).
// Result is in [0,1] for unit-range estimates.
double belief_shift(const BeliefMatrix& prev, const BeliefMatrix& curr,
                    std::size_t d, bool include_self_in_norm = false);

// True iff some observer's last `patience` shifts are all strictly below
// epsilon. Observers with fewer than `patience` recorded shifts cannot
// qualify on their own.
bool should_stop(const std::map<AgentId, ShiftSeries>& series, double epsilon,
                 int patience);

// Fixed point of the precision recursion: mean_omega_new / (1 - lambda).
// Throws for lambda outside (0,1).
double steady_state_precision(double lambda, double mean_omega_new);

// ---------------------------------------------------------------------------
// Convergence analysis harness
// ---------------------------------------------------------------------------

struct ConvergenceStats {
    double lambda = 0.0;
    double sigma = 0.0;
    int rounds = 0;
    int trials = 0;
    TypeVector theta;

    // Terminal state per independent chain.
    std::vector<double> final_precisions;
    std::vector<std::vector<double>> final_estimates;

    // Aggregates across chains, per coordinate.
    std::vector<double> empirical_bias;      // mean(b_final - theta)
    std::vector<double> empirical_variance;  // sample variance of b_final

    // Closed-form predictions at the precision fixed point.
    double predicted_precision = 0.0;  // steady_state_precision(lambda, 1)
    double predicted_variance = 0.0;   // alpha/(2-alpha) * sigma^2
};

// Simulates independent chains observing theta plus per-coordinate Gaussian
// noise with unit confidence each round, applying the update kernel without
// clamping (so the unbiased-estimator premise of the analysis holds near the
// range boundary). Each chain owns a stream derived from (seed, trial).
// omega_init may be zero here; the production floor only applies to
// posterior precisions.
//
// Guidance: rounds should be at least 50/(1-lambda) so the precision
// recursion has mixed before terminal statistics are read.
ConvergenceStats run_convergence_oracle(const TypeVector& theta, double sigma,
                                        double lambda, double omega_init,
                                        int rounds, int trials,
                                        std::uint64_t seed);

}  // namespace beacof::belief
