#include <doctest.h>

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <random>
#include <regex>

#include "beacof/llm.hpp"

using namespace beacof;
using namespace beacof::llm;

namespace {

EndpointConfig test_endpoint() {
    EndpointConfig endpoint;
    endpoint.base_url = "http://localhost:1";
    endpoint.model_name = "test-model";
    endpoint.retry_budget = 3;
    endpoint.backoff_base_ms = 0;
    return endpoint;
}

const std::string kValidMerged = R"({
  "payoff_matrix": {"a": {"Cooperation": 6.0, "Competition": 4.0, "Coopetition": 5.0}},
  "belief_update_vector": [
    {"dimension": "accuracy", "score": 0.9, "confidence": 0.8},
    {"dimension": "reasoning", "score": 0.6, "confidence": 0.7}
  ]
})";

}  // namespace

TEST_CASE("parse_meta_response accepts a plain structured object") {
    MetaResponse response = parse_meta_response(kValidMerged);
    REQUIRE(response.payoff_matrix.has_value());
    CHECK(response.payoff_matrix->at("a")[0] == 6.0);
    REQUIRE(response.belief_update_vector.has_value());
    CHECK(response.belief_update_vector->size() == 2);
    CHECK(response.belief_update_vector->at(0).score == 0.9);
    CHECK_FALSE(response.action_prediction.has_value());
}

TEST_CASE("parse_meta_response tolerates fences and surrounding prose") {
    std::string wrapped = "Sure, here is the analysis you asked for:\n```json\n" +
                          kValidMerged + "\n```\nLet me know if anything is unclear.";
    MetaResponse response = parse_meta_response(wrapped);
    CHECK(response.payoff_matrix.has_value());

    std::string with_decoy =
        "Metadata: {\"note\": \"ignore me\"}\n" + kValidMerged;
    MetaResponse second = parse_meta_response(with_decoy);
    CHECK(second.payoff_matrix.has_value());
}

TEST_CASE("parse_meta_response rejects out-of-range and malformed content") {
    SUBCASE("payoff above 10") {
        std::string bad = R"({"payoff_matrix": {"a": {"Cooperation": 12, "Competition": 4, "Coopetition": 5}}})";
        CHECK_THROWS_WITH_AS(parse_meta_response(bad),
                             doctest::Contains("payoff_matrix"), ParseError);
    }
    SUBCASE("score above 1") {
        std::string bad = R"({"belief_update_vector": [{"score": 1.2, "confidence": 0.5}]})";
        CHECK_THROWS_WITH_AS(parse_meta_response(bad),
                             doctest::Contains("belief_update_vector"), ParseError);
    }
    SUBCASE("negative confidence") {
        std::string bad = R"({"belief_update_vector": [{"score": 0.2, "confidence": -0.1}]})";
        CHECK_THROWS_AS(parse_meta_response(bad), ParseError);
    }
    SUBCASE("missing strategy key") {
        std::string bad = R"({"payoff_matrix": {"a": {"Cooperation": 6, "Competition": 4}}})";
        CHECK_THROWS_WITH_AS(parse_meta_response(bad),
                             doctest::Contains("missing key Coopetition"), ParseError);
    }
    SUBCASE("no structured object at all") {
        CHECK_THROWS_WITH_AS(parse_meta_response("I could not decide on numbers."),
                             doctest::Contains("no structured object"), ParseError);
    }
    SUBCASE("object without any known section") {
        CHECK_THROWS_WITH_AS(parse_meta_response(R"({"something": 1})"),
                             doctest::Contains("missing required key"), ParseError);
    }
}

TEST_CASE("action predictions renormalize near-unit sums and reject worse") {
    std::string near = R"({"action_prediction": {"a": {"Cooperation": 0.5, "Competition": 0.3, "Coopetition": 0.199}}})";
    MetaResponse response = parse_meta_response(near);
    REQUIRE(response.action_prediction.has_value());
    CHECK_NOTHROW(validate_distribution(response.action_prediction->at("a")));

    std::string far = R"({"action_prediction": {"a": {"Cooperation": 0.5, "Competition": 0.3, "Coopetition": 0.5}}})";
    CHECK_THROWS_WITH_AS(parse_meta_response(far), doctest::Contains("sum"),
                         ParseError);
}

TEST_CASE("serialize/parse round-trip is the identity on random responses") {
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> payoff(0.0, 10.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int iter = 0; iter < 200; ++iter) {
        MetaResponse original;
        std::map<AgentId, std::array<double, 3>> payoffs;
        payoffs["agent_one"] = {payoff(rng), payoff(rng), payoff(rng)};
        payoffs["agent_two"] = {payoff(rng), payoff(rng), payoff(rng)};
        original.payoff_matrix = payoffs;

        std::map<AgentId, StrategyDistribution> predictions;
        double x = unit(rng) + 1e-6, y = unit(rng) + 1e-6, z = unit(rng) + 1e-6;
        double sum = x + y + z;
        predictions["agent_one"] = StrategyDistribution{{x / sum, y / sum, z / sum}};
        original.action_prediction = predictions;

        std::vector<BeliefUpdateEntry> entries;
        entries.push_back({"accuracy", unit(rng), unit(rng)});
        entries.push_back({"reasoning", unit(rng), unit(rng)});
        original.belief_update_vector = entries;

        MetaResponse parsed = parse_meta_response(serialize_meta_response(original));
        // The parser renormalizes distributions; a normalized input is a fixed point.
        CHECK(parsed == original);
    }
}

TEST_CASE("to_evaluation collapses per-dimension confidences by mean") {
    std::vector<BeliefUpdateEntry> entries{{"a", 0.9, 0.8}, {"b", 0.5, 0.6}};
    Evaluation eval = to_evaluation(entries);
    CHECK(eval.scores.values == std::vector<double>{0.9, 0.5});
    CHECK(eval.confidence == doctest::Approx(0.7).epsilon(1e-15));
}

// ---------------------------------------------------------------------------
// Prompts
// ---------------------------------------------------------------------------

namespace {

agents::AgentProfile participant_profile() {
    agents::AgentProfile profile;
    profile.agent_id = "alpha";
    profile.role_designation = "Plaintiff";
    profile.belief_matrix.observer_id = "alpha";
    profile.belief_matrix.targets["beta"] =
        BeliefState{TypeVector({0.12345, 0.5}), 1.23456};
    return profile;
}

coord::CoordinatorSignals participant_signals() {
    coord::CoordinatorSignals signals;
    signals.payoffs.mode = PayoffMode::Separable;
    signals.payoffs.separable["alpha"] = {6.0, 4.0, 5.0};
    signals.payoffs.separable["beta"] = {5.0, 5.0, 5.0};
    signals.predictions["alpha"] = StrategyDistribution::uniform();
    signals.predictions["beta"] = StrategyDistribution{{0.2, 0.3, 0.5}};
    signals.round = 1;
    return signals;
}

bool has_unfilled_placeholder(const std::string& text) {
    static const std::regex pattern(R"(\[[A-Z][A-Z_]*\])");
    return std::regex_search(text, pattern);
}

}  // namespace

TEST_CASE("render_meta_prompt carries both task sections and the dimensions") {
    std::string prompt = render_meta_prompt("MedQA", "clinical context", {},
                                            {"accuracy", "reasoning"});
    CHECK(prompt.find("Task 1 (Payoff Estimation)") != std::string::npos);
    CHECK(prompt.find("Task 2 (Evaluation)") != std::string::npos);
    CHECK(prompt.find("accuracy, reasoning") != std::string::npos);
    CHECK(prompt.find("Meta-Agent Coordinator overseeing a MedQA interaction") !=
          std::string::npos);
    CHECK(prompt.find("(no prior rounds)") != std::string::npos);
    CHECK(prompt.find("\"payoff_matrix\"") != std::string::npos);
    CHECK(prompt.find("\"belief_update_vector\"") != std::string::npos);
    CHECK_FALSE(has_unfilled_placeholder(prompt));

    // Purity: same inputs, same bytes.
    CHECK(prompt == render_meta_prompt("MedQA", "clinical context", {},
                                       {"accuracy", "reasoning"}));

    CHECK_THROWS_AS(render_meta_prompt("", "ctx", {}, {"d"}), ValidationError);
    CHECK_THROWS_AS(render_meta_prompt("s", "ctx", {}, {}), ValidationError);
}

TEST_CASE("rendered history lines include evaluations") {
    History history;
    RoundRecord record;
    record.round = 1;
    record.agent_id = "alpha";
    record.strategy = StrategyKind::Competition;
    record.message = "objection";
    record.evaluation = Evaluation{TypeVector({0.25, 0.75}), 0.5};
    history.push_back(record);
    std::string rendered = render_history(history);
    CHECK(rendered.find("round 1 | alpha [Competition]: objection") != std::string::npos);
    CHECK(rendered.find("scores=[0.2500, 0.7500]") != std::string::npos);
}

TEST_CASE("participant prompt contains exactly the chosen directive") {
    auto profile = participant_profile();
    auto signals = participant_signals();
    const std::string coop = "Focus on information synthesis and consensus-building.";
    const std::string comp = "Focus on critical argumentation and error exposure.";
    const std::string coopet = "Balance partial agreement with strategic rebuttal.";

    std::string cooperation = render_participant_prompt(
        profile, signals, StrategyKind::Cooperation, "the disputed claim");
    CHECK(cooperation.find(coop) != std::string::npos);
    CHECK(cooperation.find(comp) == std::string::npos);
    CHECK(cooperation.find(coopet) == std::string::npos);
    CHECK(cooperation.find("adopt a Cooperation approach") != std::string::npos);

    std::string competition = render_participant_prompt(
        profile, signals, StrategyKind::Competition, "the disputed claim");
    CHECK(competition.find(comp) != std::string::npos);
    CHECK(competition.find(coop) == std::string::npos);

    std::string coopetition = render_participant_prompt(
        profile, signals, StrategyKind::Coopetition, "the disputed claim");
    CHECK(coopetition.find(coopet) != std::string::npos);

    CHECK_FALSE(has_unfilled_placeholder(cooperation));
    CHECK(cooperation.find("You are Plaintiff") != std::string::npos);
    CHECK(cooperation.find("the disputed claim") != std::string::npos);

    CHECK_THROWS_AS(render_participant_prompt(profile, signals,
                                              StrategyKind::Cooperation, ""),
                    ValidationError);
}

TEST_CASE("belief state serialization uses four decimals and parses back") {
    auto profile = participant_profile();
    std::string block = render_belief_state(profile.belief_matrix);
    CHECK(block == "beta: mean=[0.1235, 0.5000], confidence=1.2346");

    // Recover the rounded values.
    std::regex number(R"(\d+\.\d{4})");
    std::vector<double> values;
    for (auto it = std::sregex_iterator(block.begin(), block.end(), number);
         it != std::sregex_iterator(); ++it) {
        values.push_back(std::stod(it->str()));
    }
    REQUIRE(values.size() == 3);
    CHECK(values[0] == 0.1235);
    CHECK(values[1] == 0.5);
    CHECK(values[2] == 1.2346);
}

// ---------------------------------------------------------------------------
// Transport
// ---------------------------------------------------------------------------

namespace {

std::string completion_body(const std::string& content) {
    nlohmann::json body{
        {"choices",
         nlohmann::json::array(
             {nlohmann::json{{"message", nlohmann::json{{"role", "assistant"},
                                                        {"content", content}}}}})}};
    return body.dump();
}

}  // namespace

TEST_CASE("chat request body echoes the configured decoding settings") {
    EndpointConfig endpoint = test_endpoint();
    std::string body = build_chat_request_body(endpoint, "sys", "user");
    nlohmann::json doc = nlohmann::json::parse(body);
    CHECK(doc.at("temperature").get<double>() == 0.0);
    CHECK(doc.at("max_tokens").get<int>() == 4096);
    CHECK(doc.at("model").get<std::string>() == "test-model");
    REQUIRE(doc.at("messages").size() == 2);
    CHECK(doc.at("messages").at(0).at("role") == "system");
    CHECK(doc.at("messages").at(1).at("role") == "user");
}

TEST_CASE("chat_complete_with retries transient failures") {
    EndpointConfig endpoint = test_endpoint();
    SUBCASE("two 500s then success") {
        int calls = 0;
        HttpPostFn post = [&](const std::string&, const std::string&,
                              const std::string&, const std::string&, int) {
            ++calls;
            if (calls <= 2) return HttpResponse{500, "busy"};
            return HttpResponse{200, completion_body("hello")};
        };
        CHECK(chat_complete_with(post, endpoint, "s", "u") == "hello");
        CHECK(calls == 3);
    }
    SUBCASE("budget exhausted surfaces a transport error") {
        int calls = 0;
        HttpPostFn post = [&](const std::string&, const std::string&,
                              const std::string&, const std::string&, int) {
            ++calls;
            return HttpResponse{503, "down"};
        };
        CHECK_THROWS_AS(chat_complete_with(post, endpoint, "s", "u"), TransportError);
        CHECK(calls == endpoint.retry_budget);
    }
    SUBCASE("non-retryable status fails immediately") {
        int calls = 0;
        HttpPostFn post = [&](const std::string&, const std::string&,
                              const std::string&, const std::string&, int) {
            ++calls;
            return HttpResponse{404, "nope"};
        };
        CHECK_THROWS_AS(chat_complete_with(post, endpoint, "s", "u"), TransportError);
        CHECK(calls == 1);
    }
    SUBCASE("empty completions are retried") {
        int calls = 0;
        HttpPostFn post = [&](const std::string&, const std::string&,
                              const std::string&, const std::string&, int) {
            ++calls;
            if (calls == 1) return HttpResponse{200, completion_body("")};
            return HttpResponse{200, completion_body("ok")};
        };
        CHECK(chat_complete_with(post, endpoint, "s", "u") == "ok");
        CHECK(calls == 2);
    }
    SUBCASE("connection failures propagate after the budget") {
        int calls = 0;
        HttpPostFn post = [&](const std::string&, const std::string&,
                              const std::string&, const std::string&,
                              int) -> HttpResponse {
            ++calls;
            throw TransportError(TransportError::Kind::Connect, "refused");
        };
        CHECK_THROWS_WITH_AS(chat_complete_with(post, endpoint, "s", "u"),
                             doctest::Contains("retry budget exhausted"),
                             TransportError);
        CHECK(calls == endpoint.retry_budget);
    }
}

// ---------------------------------------------------------------------------
// Live coordinator over a canned chat function
// ---------------------------------------------------------------------------

namespace {

TaskDescriptor llm_task() {
    TaskDescriptor task;
    task.scenario_type = "consultation";
    task.domain_context = "one vignette per session";
    task.query = "the vignette";
    task.dimensions = {"accuracy", "reasoning"};
    return task;
}

const std::string kPayoffCompletion = R"({
  "payoff_matrix": {
    "a": {"Cooperation": 6.0, "Competition": 4.0, "Coopetition": 5.0},
    "b": {"Cooperation": 3.0, "Competition": 7.0, "Coopetition": 5.0}
  },
  "action_prediction": {
    "a": {"Cooperation": 0.6, "Competition": 0.1, "Coopetition": 0.3},
    "b": {"Cooperation": 0.2, "Competition": 0.5, "Coopetition": 0.3}
  }
})";

const std::string kEvalCompletion = R"({
  "belief_update_vector": [
    {"dimension": "accuracy", "score": 0.8, "confidence": 0.9},
    {"dimension": "reasoning", "score": 0.4, "confidence": 0.7}
  ]
})";

}  // namespace

TEST_CASE("LlmCoordinator parses payoffs and stashes predictions") {
    int calls = 0;
    ChatFn chat = [&](const EndpointConfig&, const std::string&, const std::string& user) {
        ++calls;
        CHECK(user.find("Task 1 (Payoff Estimation)") != std::string::npos);
        return kPayoffCompletion;
    };
    LlmCoordinator coordinator(test_endpoint(), {"a", "b"}, 2, chat);
    PayoffTable payoffs = coordinator.generate_contextual_payoffs({}, llm_task(), {}, 1);
    CHECK(calls == 1);
    CHECK(payoffs.mode == PayoffMode::Separable);
    CHECK(payoffs.separable.at("a")[0] == 6.0);
    CHECK(payoffs.separable.at("b")[1] == 7.0);

    auto predictions = coordinator.predict_agent_actions({}, payoffs, 1);
    CHECK(calls == 1);  // served from the stash, no extra call
    CHECK(predictions.at("a")[StrategyKind::Cooperation] ==
          doctest::Approx(0.6).epsilon(1e-12));
    CHECK(coordinator.degraded_payoff_rounds() == 0);
}

TEST_CASE("LlmCoordinator degrades to the neutral table after bad completions") {
    int calls = 0;
    ChatFn chat = [&](const EndpointConfig&, const std::string&, const std::string&) {
        ++calls;
        return std::string("{\"payoff_matrix\": {\"a\": {\"Cooperation\": 12, "
                           "\"Competition\": 4, \"Coopetition\": 5}}}");
    };
    LlmCoordinator coordinator(test_endpoint(), {"a", "b"}, 2, chat);
    PayoffTable payoffs = coordinator.generate_contextual_payoffs({}, llm_task(), {}, 1);
    CHECK(calls == 3);  // full retry budget consumed
    CHECK(coordinator.degraded_payoff_rounds() == 1);
    for (StrategyKind k : all_strategies()) {
        CHECK(payoffs.separable.at("a")[static_cast<int>(k)] == 5.0);
        CHECK(payoffs.separable.at("b")[static_cast<int>(k)] == 5.0);
    }
    auto predictions = coordinator.predict_agent_actions({}, payoffs, 1);
    CHECK(predictions.at("a") == StrategyDistribution::uniform());
}

TEST_CASE("LlmCoordinator evaluates messages and enforces the dimension count") {
    SUBCASE("happy path") {
        ChatFn chat = [&](const EndpointConfig&, const std::string&, const std::string&) {
            return kEvalCompletion;
        };
        LlmCoordinator coordinator(test_endpoint(), {"a", "b"}, 2, chat);
        Evaluation eval = coordinator.evaluate_message("claim text", StrategyKind::Cooperation,
                                                       llm_task(), "a", 1);
        CHECK(eval.scores.values == std::vector<double>{0.8, 0.4});
        CHECK(eval.confidence == doctest::Approx(0.8).epsilon(1e-12));
    }
    SUBCASE("wrong dimension count raises a coordinator error with the raw response") {
        int calls = 0;
        ChatFn chat = [&](const EndpointConfig&, const std::string&, const std::string&) {
            ++calls;
            return std::string(
                R"({"belief_update_vector": [{"score": 0.5, "confidence": 0.5}]})");
        };
        LlmCoordinator coordinator(test_endpoint(), {"a", "b"}, 2, chat);
        try {
            coordinator.evaluate_message("m", StrategyKind::Cooperation, llm_task(), "a", 1);
            FAIL("expected CoordinatorError");
        } catch (const coord::CoordinatorError& e) {
            CHECK(calls == 3);
            CHECK(e.raw_response.find("belief_update_vector") != std::string::npos);
        }
    }
}

TEST_CASE("LlmMessageBackend sends the participant prompt and returns the completion") {
    std::string seen_system, seen_user;
    ChatFn chat = [&](const EndpointConfig&, const std::string& system,
                      const std::string& user) {
        seen_system = system;
        seen_user = user;
        return std::string("I move to dismiss.");
    };
    LlmMessageBackend backend(test_endpoint(), chat);
    auto profile = participant_profile();
    auto signals = participant_signals();
    TaskDescriptor task = llm_task();
    task.personas["alpha"] = "a meticulous litigator";

    std::string message = backend.generate_message(profile, StrategyKind::Competition, 1,
                                                   signals, {}, task);
    CHECK(message == "I move to dismiss.");
    CHECK(seen_system.find("You are Plaintiff, characterized by a meticulous litigator") !=
          std::string::npos);
    CHECK(seen_user.find("Focus on critical argumentation and error exposure.") !=
          std::string::npos);
}

// ---------------------------------------------------------------------------
// Default transport against an in-process server
// ---------------------------------------------------------------------------

#include <httplib.h>

TEST_CASE("default transport speaks OpenAI-compatible HTTP with retries") {
    httplib::Server server;
    std::atomic_int hits{0};
    std::string seen_body, seen_auth, seen_path;
    server.Post("/v1/chat/completions",
                [&](const httplib::Request& request, httplib::Response& response) {
                    int n = ++hits;
                    seen_body = request.body;
                    seen_path = request.path;
                    seen_auth = request.get_header_value("Authorization");
                    if (n <= 2) {
                        response.status = 500;
                        response.set_content("busy", "text/plain");
                        return;
                    }
                    response.set_content(completion_body("from the wire"),
                                         "application/json");
                });
    int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread serving([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    setenv("BEACOF_API_KEY", "sekret", 1);
    EndpointConfig endpoint = test_endpoint();
    endpoint.base_url = "http://127.0.0.1:" + std::to_string(port);

    std::string text = chat_complete(endpoint, "system words", "user words");
    CHECK(text == "from the wire");
    CHECK(hits == 3);  // two 500s retried
    CHECK(seen_path == "/v1/chat/completions");
    CHECK(seen_auth == "Bearer sekret");
    auto doc = nlohmann::json::parse(seen_body);
    CHECK(doc.at("temperature").get<double>() == 0.0);
    CHECK(doc.at("max_tokens").get<int>() == 4096);
    CHECK(doc.at("messages").at(0).at("content") == "system words");
    unsetenv("BEACOF_API_KEY");

    server.stop();
    serving.join();
}

TEST_CASE("default transport maps refused connections to a transport error") {
    EndpointConfig endpoint = test_endpoint();
    endpoint.base_url = "http://127.0.0.1:9";  // discard port, nothing listens
    endpoint.retry_budget = 2;
    endpoint.timeout_ms = 2000;
    CHECK_THROWS_AS(chat_complete(endpoint, "s", "u"), TransportError);
}
