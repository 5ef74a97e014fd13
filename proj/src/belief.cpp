#include "beacof/belief.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "beacof/rng.hpp"

namespace beacof::belief {

void update_mean_in_place(std::vector<double>& mean, double precision,
                          const std::vector<double>& obs, double confidence) {
    double denom = precision + confidence;
    for (std::size_t i = 0; i < mean.size(); ++i) {
        mean[i] = (precision * mean[i] + confidence * obs[i]) / denom;
    }
}

double update_precision(double precision, double confidence, double lambda) {
    return std::max(lambda * precision + confidence, kPrecisionFloor);
}

BeliefState update_belief(const BeliefState& prior, const Evaluation& obs,
                          double lambda) {
    validate_belief_state(prior, "update_belief prior");
    validate_evaluation(obs, "update_belief obs");
    if (!(lambda > 0.0 && lambda < 1.0)) {
        std::ostringstream msg;
        msg << "update_belief: lambda " << lambda << " outside (0,1)";
        throw ValidationError(msg.str());
    }
    if (prior.estimate.dim() != obs.scores.dim()) {
        std::ostringstream msg;
        msg << "update_belief: dimension mismatch, prior d="
            << prior.estimate.dim() << " vs obs d=" << obs.scores.dim();
        throw ValidationError(msg.str());
    }

    BeliefState posterior = prior;
    update_mean_in_place(posterior.estimate.values, prior.precision,
                         obs.scores.values, obs.confidence);
    posterior.precision =
        update_precision(prior.precision, obs.confidence, lambda);
    return posterior;
}

double belief_shift(const BeliefMatrix& prev, const BeliefMatrix& curr,
                    std::size_t d, bool include_self_in_norm) {
    if (prev.observer_id != curr.observer_id) {
        throw ValidationError("belief_shift: snapshots belong to different observers");
    }
    if (prev.targets.size() != curr.targets.size()) {
        throw ValidationError("belief_shift: target sets differ in size");
    }

    double sum_sq = 0.0;
    auto it_prev = prev.targets.begin();
    auto it_curr = curr.targets.begin();
    for (; it_prev != prev.targets.end(); ++it_prev, ++it_curr) {
        if (it_prev->first != it_curr->first) {
            throw ValidationError("belief_shift: mismatched target sets (" +
                                  it_prev->first + " vs " + it_curr->first + ")");
        }
        const auto& a = it_prev->second.estimate.values;
        const auto& b = it_curr->second.estimate.values;
        if (a.size() != d || b.size() != d) {
            std::ostringstream msg;
            msg << "belief_shift: estimate for " << it_prev->first
                << " has dimension " << a.size() << "/" << b.size()
                << ", expected " << d;
            throw ValidationError(msg.str());
        }
        for (std::size_t i = 0; i < d; ++i) {
            double diff = b[i] - a[i];
            sum_sq += diff * diff;
        }
    }

    std::size_t blocks = curr.targets.size() + (include_self_in_norm ? 1 : 0);
    if (blocks == 0 || d == 0) return 0.0;
    return std::sqrt(sum_sq) /
           std::sqrt(static_cast<double>(blocks) * static_cast<double>(d));
}

bool should_stop(const std::map<AgentId, ShiftSeries>& series, double epsilon,
                 int patience) {
    if (!(epsilon > 0.0)) {
        throw ValidationError("should_stop: epsilon must be > 0");
    }
    if (patience < 1) {
        throw ValidationError("should_stop: patience must be >= 1");
    }
    for (const auto& [observer, shifts] : series) {
        if (shifts.size() < static_cast<std::size_t>(patience)) continue;
        bool all_below = true;
        for (std::size_t k = shifts.size() - patience; k < shifts.size(); ++k) {
            if (!(shifts[k] < epsilon)) {  // strict: a tie at epsilon does not stop
                all_below = false;
                break;
            }
        }
        if (all_below) return true;
    }
    return false;
}

double steady_state_precision(double lambda, double mean_omega_new) {
    if (!(lambda > 0.0 && lambda < 1.0)) {
        std::ostringstream msg;
        msg << "steady_state_precision: lambda " << lambda
            << " outside (0,1); fixed point undefined";
        throw ValidationError(msg.str());
    }
    if (!(mean_omega_new > 0.0)) {
        throw ValidationError("steady_state_precision: mean_omega_new must be > 0");
    }
    return mean_omega_new / (1.0 - lambda);
}

// ---------------------------------------------------------------------------
// Convergence analysis harness
// ---------------------------------------------------------------------------

namespace {

struct TrialResult {
    double final_precision = 0.0;
    std::vector<double> final_estimate;
};

TrialResult run_trial(const TypeVector& theta, double sigma, double lambda,
                      double omega_init, int rounds, std::uint64_t stream_seed) {
    const std::size_t d = theta.dim();
    RandomStream stream(stream_seed);

    std::vector<double> mean(d, 0.5);
    double precision = omega_init;
    std::vector<double> obs(d);

    for (int t = 0; t < rounds; ++t) {
        for (std::size_t i = 0; i < d; ++i) {
            obs[i] = theta.values[i] + sigma * stream.next_gaussian();
        }
        // Analysis mode: raw kernel, unit confidence, no clamping.
        update_mean_in_place(mean, precision, obs, 1.0);
        precision = update_precision(precision, 1.0, lambda);
    }
    return {precision, std::move(mean)};
}

}  // namespace

ConvergenceStats run_convergence_oracle(const TypeVector& theta, double sigma,
                                        double lambda, double omega_init,
                                        int rounds, int trials,
                                        std::uint64_t seed) {
    validate_type_vector(theta, "convergence oracle theta");
    if (!(lambda > 0.0 && lambda < 1.0)) {
        throw ValidationError("convergence oracle: lambda outside (0,1)");
    }
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw ValidationError("convergence oracle: sigma must be >= 0");
    }
    if (omega_init < 0.0 || !std::isfinite(omega_init)) {
        throw ValidationError("convergence oracle: omega_init must be >= 0");
    }
    if (rounds < 1) {
        throw ValidationError("convergence oracle: rounds must be >= 1");
    }
    if (trials < 1) {
        throw ValidationError("convergence oracle: trials must be >= 1");
    }

    const std::size_t d = theta.dim();
    std::vector<TrialResult> results(static_cast<std::size_t>(trials));

    auto run_range = [&](int begin, int end) {
        for (int trial = begin; trial < end; ++trial) {
            results[static_cast<std::size_t>(trial)] =
                run_trial(theta, sigma, lambda, omega_init, rounds,
                          derive_seed(seed, static_cast<std::uint64_t>(trial)));
        }
    };

    unsigned workers = std::min<unsigned>(std::thread::hardware_concurrency(),
                                          static_cast<unsigned>(trials));
    if (workers <= 1) {
        run_range(0, trials);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        int chunk = (trials + static_cast<int>(workers) - 1) / static_cast<int>(workers);
        for (unsigned w = 0; w < workers; ++w) {
            int begin = static_cast<int>(w) * chunk;
            int end = std::min(trials, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(run_range, begin, end);
        }
        for (auto& t : pool) t.join();
    }

    ConvergenceStats stats;
    stats.lambda = lambda;
    stats.sigma = sigma;
    stats.rounds = rounds;
    stats.trials = trials;
    stats.theta = theta;
    stats.final_precisions.reserve(results.size());
    stats.final_estimates.reserve(results.size());
    for (auto& r : results) {
        stats.final_precisions.push_back(r.final_precision);
        stats.final_estimates.push_back(std::move(r.final_estimate));
    }

    stats.empirical_bias.assign(d, 0.0);
    stats.empirical_variance.assign(d, 0.0);
    for (const auto& estimate : stats.final_estimates) {
        for (std::size_t i = 0; i < d; ++i) {
            stats.empirical_bias[i] += estimate[i] - theta.values[i];
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        stats.empirical_bias[i] /= static_cast<double>(trials);
    }
    if (trials > 1) {
        std::vector<double> mean_final(d, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            mean_final[i] = stats.empirical_bias[i] + theta.values[i];
        }
        for (const auto& estimate : stats.final_estimates) {
            for (std::size_t i = 0; i < d; ++i) {
                double diff = estimate[i] - mean_final[i];
                stats.empirical_variance[i] += diff * diff;
            }
        }
        for (std::size_t i = 0; i < d; ++i) {
            stats.empirical_variance[i] /= static_cast<double>(trials - 1);
        }
    }

    stats.predicted_precision = steady_state_precision(lambda, 1.0);
    double alpha = 1.0 / (stats.predicted_precision + 1.0);
    stats.predicted_variance = alpha / (2.0 - alpha) * sigma * sigma;
    return stats;
}

}  // namespace beacof::belief
