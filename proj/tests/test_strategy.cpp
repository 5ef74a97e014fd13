#include <doctest.h>

#include <cmath>
#include <random>

#include "beacof/strategy.hpp"

using namespace beacof;
using namespace beacof::strategy;

namespace {

PayoffTable separable_table(const AgentId& agent,
                            std::array<double, kStrategyCount> row) {
    PayoffTable table;
    table.mode = PayoffMode::Separable;
    table.separable[agent] = row;
    return table;
}

// Two-player joint table: one row of 3 entries per own strategy.
PayoffTable joint2_table(const AgentId& agent, const AgentId& opponent,
                         std::array<std::array<double, 3>, 3> rows) {
    PayoffTable table;
    table.mode = PayoffMode::Joint;
    JointPayoffs entry;
    entry.opponents = {opponent};
    for (int k = 0; k < kStrategyCount; ++k) {
        entry.rows[k].assign(rows[k].begin(), rows[k].end());
    }
    table.joint[agent] = std::move(entry);
    return table;
}

OpponentProfileDistribution one_opponent(const AgentId& id,
                                         StrategyDistribution dist) {
    OpponentProfileDistribution opponents;
    opponents.marginals[id] = dist;
    return opponents;
}

}  // namespace

TEST_CASE("expected_utility separable mode ignores opponents") {
    PayoffTable table = separable_table("a", {6.0, 4.0, 5.0});
    OpponentProfileDistribution empty;
    CHECK(expected_utility(table, "a", StrategyKind::Cooperation, empty) == 6.0);
    CHECK(expected_utility(table, "a", StrategyKind::Competition, empty) == 4.0);
    CHECK(expected_utility(table, "a", StrategyKind::Coopetition, empty) == 5.0);
    CHECK_THROWS_AS(expected_utility(table, "missing", StrategyKind::Cooperation, empty),
                    ValidationError);
}

TEST_CASE("expected_utility joint mode, hand-computed two-term expectation") {
    PayoffTable table = joint2_table("a", "b", {{{8, 2, 0}, {0, 0, 0}, {0, 0, 0}}});
    auto opponents = one_opponent("b", StrategyDistribution{{0.5, 0.5, 0.0}});
    CHECK(expected_utility(table, "a", StrategyKind::Cooperation, opponents) ==
          doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("expected_utility joint mode, point mass picks the exact entry") {
    PayoffTable table = joint2_table("a", "b", {{{8, 2, 1}, {3, 7, 4}, {5, 9, 6}}});
    auto opponents =
        one_opponent("b", StrategyDistribution::point_mass(StrategyKind::Competition));
    for (StrategyKind own : all_strategies()) {
        double direct = table.joint.at("a").rows[static_cast<int>(own)][static_cast<int>(
            StrategyKind::Competition)];
        CHECK(expected_utility(table, "a", own, opponents) == direct);
    }
}

TEST_CASE("expected_utility joint mode requires every opponent marginal") {
    PayoffTable table = joint2_table("a", "b", {{{8, 2, 1}, {3, 7, 4}, {5, 9, 6}}});
    OpponentProfileDistribution missing;
    CHECK_THROWS_WITH_AS(
        expected_utility(table, "a", StrategyKind::Cooperation, missing),
        doctest::Contains("missing prediction"), ValidationError);
}

TEST_CASE("best_response picks the dominant entry") {
    PayoffTable table = separable_table("a", {6.0, 4.0, 5.0});
    auto [kind, value] = best_response(table, "a", {});
    CHECK(kind == StrategyKind::Cooperation);
    CHECK(value == 6.0);
}

TEST_CASE("best_response tie-breaks in StrategyKind order") {
    SUBCASE("engineered two-way tie at 5.0") {
        // E[Coop] = E[Comp] = 5, E[Coopet] = 4 under {0.5, 0.5, 0}.
        PayoffTable table = joint2_table("a", "b", {{{8, 2, 0}, {4, 6, 0}, {4, 4, 0}}});
        auto opponents = one_opponent("b", StrategyDistribution{{0.5, 0.5, 0.0}});

        // Brute-force the three expectations as an independent check.
        for (StrategyKind own : all_strategies()) {
            double expectation = 0.0;
            for (StrategyKind other : all_strategies()) {
                expectation += opponents.marginals.at("b")[other] *
                               table.joint.at("a")
                                   .rows[static_cast<int>(own)][static_cast<int>(other)];
            }
            CHECK(expected_utility(table, "a", own, opponents) ==
                  doctest::Approx(expectation).epsilon(1e-15));
        }

        auto [kind, value] = best_response(table, "a", opponents);
        CHECK(kind == StrategyKind::Cooperation);
        CHECK(value == doctest::Approx(5.0).epsilon(1e-15));
    }
    SUBCASE("full tie") {
        PayoffTable table = joint2_table("a", "b", {{{7, 7, 7}, {7, 7, 7}, {7, 7, 7}}});
        auto opponents = one_opponent("b", StrategyDistribution::uniform());
        auto [kind, value] = best_response(table, "a", opponents);
        CHECK(kind == StrategyKind::Cooperation);
        CHECK(value == doctest::Approx(7.0).epsilon(1e-15));
    }
}

TEST_CASE("ex_post_regret worked examples") {
    std::map<StrategyKind, double> realized{{StrategyKind::Cooperation, 7.0},
                                            {StrategyKind::Competition, 9.0},
                                            {StrategyKind::Coopetition, 5.0}};
    CHECK(ex_post_regret(realized, StrategyKind::Cooperation) == 2.0);
    CHECK(ex_post_regret(realized, StrategyKind::Competition) == 0.0);

    std::map<StrategyKind, double> flat{{StrategyKind::Cooperation, 4.0},
                                        {StrategyKind::Competition, 4.0},
                                        {StrategyKind::Coopetition, 4.0}};
    for (StrategyKind k : all_strategies()) {
        CHECK(ex_post_regret(flat, k) == 0.0);
    }

    std::map<StrategyKind, double> incomplete{{StrategyKind::Cooperation, 4.0}};
    CHECK_THROWS_AS(ex_post_regret(incomplete, StrategyKind::Cooperation),
                    ValidationError);
    std::map<StrategyKind, double> out_of_range{{StrategyKind::Cooperation, 11.0},
                                                {StrategyKind::Competition, 0.0},
                                                {StrategyKind::Coopetition, 0.0}};
    CHECK_THROWS_AS(ex_post_regret(out_of_range, StrategyKind::Cooperation),
                    ValidationError);
}

namespace {

struct RandomCase {
    PayoffTable table;
    OpponentProfileDistribution opponents;
};

RandomCase random_joint_case(std::mt19937& rng) {
    std::uniform_real_distribution<double> payoff(0.0, 10.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    RandomCase made;
    made.table = joint2_table("a", "b",
                              {{{payoff(rng), payoff(rng), payoff(rng)},
                                {payoff(rng), payoff(rng), payoff(rng)},
                                {payoff(rng), payoff(rng), payoff(rng)}}});
    double x = unit(rng), y = unit(rng), z = unit(rng);
    double sum = x + y + z;
    if (sum == 0.0) {
        made.opponents = one_opponent("b", StrategyDistribution::uniform());
    } else {
        made.opponents =
            one_opponent("b", StrategyDistribution{{x / sum, y / sum, z / sum}});
    }
    return made;
}

}  // namespace

TEST_CASE("best_response against expected utilities has exactly zero regret") {
    std::mt19937 rng(31);
    for (int iter = 0; iter < 1000; ++iter) {
        RandomCase made = random_joint_case(rng);
        std::map<StrategyKind, double> expectations;
        for (StrategyKind k : all_strategies()) {
            expectations[k] = expected_utility(made.table, "a", k, made.opponents);
        }
        auto [chosen, value] = best_response(made.table, "a", made.opponents);
        CHECK(ex_post_regret(expectations, chosen) == 0.0);
        CHECK(value == expectations[chosen]);
        for (StrategyKind k : all_strategies()) {
            double regret = ex_post_regret(expectations, k);
            CHECK(regret >= 0.0);
            CHECK(regret <= 10.0);
        }
    }
}

TEST_CASE("best_response choice is invariant under positive affine transforms") {
    std::mt19937 rng(32);
    std::uniform_real_distribution<double> scale(0.1, 3.0);
    std::uniform_real_distribution<double> shift(-2.0, 2.0);
    for (int iter = 0; iter < 300; ++iter) {
        RandomCase made = random_joint_case(rng);
        auto [kind, value] = best_response(made.table, "a", made.opponents);

        double a = scale(rng), b = shift(rng);
        PayoffTable transformed = made.table;
        for (auto& row : transformed.joint["a"].rows) {
            for (double& u : row) u = a * u + b;
        }
        auto [kind2, value2] = best_response(transformed, "a", made.opponents);
        CHECK(kind2 == kind);
        CHECK(value2 == doctest::Approx(a * value + b).epsilon(1e-9));
    }
}

TEST_CASE("expected_utility is linear in the opponent distribution") {
    std::mt19937 rng(33);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int iter = 0; iter < 300; ++iter) {
        RandomCase p = random_joint_case(rng);
        RandomCase q = random_joint_case(rng);
        double alpha = unit(rng);

        StrategyDistribution mix{};
        for (int i = 0; i < kStrategyCount; ++i) {
            mix.probabilities[i] =
                alpha * p.opponents.marginals.at("b").probabilities[i] +
                (1.0 - alpha) * q.opponents.marginals.at("b").probabilities[i];
        }
        auto mixed = one_opponent("b", mix);

        for (StrategyKind k : all_strategies()) {
            double lhs = expected_utility(p.table, "a", k, mixed);
            double rhs = alpha * expected_utility(p.table, "a", k, p.opponents) +
                         (1.0 - alpha) * expected_utility(p.table, "a", k, q.opponents);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        }
    }
}

TEST_CASE("product-of-marginals profile probabilities sum to one") {
    std::mt19937 rng(34);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int iter = 0; iter < 100; ++iter) {
        int n_opponents = 1 + static_cast<int>(rng() % 3);
        OpponentProfileDistribution opponents;
        std::vector<AgentId> ids;
        for (int k = 0; k < n_opponents; ++k) {
            AgentId id = "opp" + std::to_string(k);
            ids.push_back(id);
            double x = unit(rng) + 1e-9, y = unit(rng) + 1e-9, z = unit(rng) + 1e-9;
            double sum = x + y + z;
            opponents.marginals[id] = StrategyDistribution{{x / sum, y / sum, z / sum}};
        }
        double total = 0.0;
        for (std::size_t index = 0; index < profile_count(ids.size()); ++index) {
            double p = 1.0;
            std::size_t rest = index;
            for (const AgentId& id : ids) {
                p *= opponents.marginals.at(id)[static_cast<StrategyKind>(rest % 3)];
                rest /= 3;
            }
            total += p;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}
