#include <doctest.h>

#include "beacof/agents.hpp"

using namespace beacof;
using namespace beacof::agents;

namespace {

AgentProfile make_profile(const AgentId& id, const std::string& role,
                          std::vector<AgentId> peers, int d = 2) {
    AgentProfile profile;
    profile.agent_id = id;
    profile.role_designation = role;
    profile.belief_matrix.observer_id = id;
    for (const AgentId& peer : peers) {
        profile.belief_matrix.targets[peer] =
            BeliefState{TypeVector(std::vector<double>(d, 0.5)), 1.0};
    }
    return profile;
}

coord::CoordinatorSignals separable_signals(
    std::map<AgentId, std::array<double, kStrategyCount>> rows, int round = 1) {
    coord::CoordinatorSignals signals;
    signals.payoffs.mode = PayoffMode::Separable;
    signals.payoffs.separable = std::move(rows);
    for (const auto& [id, _] : signals.payoffs.separable) {
        signals.predictions[id] = StrategyDistribution::uniform();
    }
    signals.round = round;
    return signals;
}

}  // namespace

TEST_CASE("select_strategy delegates to the dominant separable entry") {
    AgentProfile profile = make_profile("a", "Advocate", {"b"});
    auto signals = separable_signals({{"a", {6, 4, 5}}, {"b", {5, 5, 5}}});
    CHECK(select_strategy(profile, signals) == StrategyKind::Cooperation);
}

TEST_CASE("select_strategy resolves joint ties by strategy order") {
    AgentProfile profile = make_profile("a", "Advocate", {"b"});
    coord::CoordinatorSignals signals;
    signals.payoffs.mode = PayoffMode::Joint;
    JointPayoffs entry;
    entry.opponents = {"b"};
    entry.rows[0] = {8, 2, 0};
    entry.rows[1] = {4, 6, 0};
    entry.rows[2] = {4, 4, 0};
    signals.payoffs.joint["a"] = entry;
    signals.predictions["a"] = StrategyDistribution::uniform();
    signals.predictions["b"] = StrategyDistribution{{0.5, 0.5, 0.0}};
    signals.round = 1;
    CHECK(select_strategy(profile, signals) == StrategyKind::Cooperation);
}

TEST_CASE("select_strategy fails without a peer prediction in joint mode") {
    AgentProfile profile = make_profile("a", "Advocate", {"b"});
    coord::CoordinatorSignals signals;
    signals.payoffs.mode = PayoffMode::Joint;
    JointPayoffs entry;
    entry.opponents = {"b"};
    for (auto& row : entry.rows) row.assign(3, 5.0);
    signals.payoffs.joint["a"] = entry;
    signals.predictions["a"] = StrategyDistribution::uniform();  // peer b missing
    signals.round = 1;
    CHECK_THROWS_AS(select_strategy(profile, signals), ValidationError);
}

TEST_CASE("strategy choice depends only on broadcast signals, not private type") {
    AgentProfile first = make_profile("a", "Advocate", {"b"});
    first.private_type = TypeVector({0.9, 0.9});
    AgentProfile second = make_profile("a", "Advocate", {"b"});
    second.private_type = TypeVector({0.1, 0.1});
    auto signals = separable_signals({{"a", {2, 9, 4}}, {"b", {5, 5, 5}}});
    CHECK(select_strategy(first, signals) == select_strategy(second, signals));
    CHECK(select_strategy(first, signals) == StrategyKind::Competition);
}

TEST_CASE("scripted message format is ROLE|ROUND|STRATEGY") {
    AgentProfile profile = make_profile("p", "Plaintiff", {"d"});
    CHECK(scripted_message(profile, StrategyKind::Competition, 2) ==
          "Plaintiff|2|Competition");
    ScriptedMessageBackend backend;
    CHECK(backend.generate_message(profile, StrategyKind::Coopetition, 4, {}, {}, {}) ==
          "Plaintiff|4|Coopetition");
}

TEST_CASE("receive_evaluation updates exactly the target entry") {
    AgentProfile observer = make_profile("a", "Advocate", {"b", "c"}, 1);
    Evaluation obs{TypeVector({0.9}), 1.0};

    AgentProfile updated = receive_evaluation(observer, "b", obs, 0.9);
    CHECK(updated.belief_matrix.targets.at("b").estimate[0] ==
          doctest::Approx(0.7).epsilon(1e-15));
    CHECK(updated.belief_matrix.targets.at("b").precision ==
          doctest::Approx(1.9).epsilon(1e-15));
    // The other entry is bitwise untouched.
    CHECK(updated.belief_matrix.targets.at("c") ==
          observer.belief_matrix.targets.at("c"));
    // The input profile itself is unchanged (value semantics).
    CHECK(observer.belief_matrix.targets.at("b").precision == 1.0);
}

TEST_CASE("receive_evaluation rejects self and unknown targets") {
    AgentProfile observer = make_profile("a", "Advocate", {"b"}, 1);
    Evaluation obs{TypeVector({0.9}), 1.0};
    CHECK_THROWS_AS(receive_evaluation(observer, "a", obs, 0.9), ValidationError);
    CHECK_THROWS_AS(receive_evaluation(observer, "zz", obs, 0.9), ValidationError);
}

TEST_CASE("belief updates are observer-independent") {
    AgentProfile first = make_profile("a", "Advocate", {"t"}, 2);
    AgentProfile second = make_profile("b", "Critic", {"t"}, 2);
    Evaluation obs1{TypeVector({0.9, 0.1}), 1.0};
    Evaluation obs2{TypeVector({0.7, 0.3}), 0.5};
    for (const Evaluation& obs : {obs1, obs2}) {
        first = receive_evaluation(first, "t", obs, 0.6);
        second = receive_evaluation(second, "t", obs, 0.6);
    }
    CHECK(first.belief_matrix.targets.at("t") == second.belief_matrix.targets.at("t"));
}
