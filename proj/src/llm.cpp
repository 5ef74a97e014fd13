#include "beacof/llm.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

using nlohmann::json;

namespace beacof::llm {

namespace {

void log_warning(const std::string& message) {
    std::cerr << "[beacof] warning: " << message << "\n";
}

std::string fixed4(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", value);
    return buf;
}

std::string truncate_for_log(const std::string& text, std::size_t limit = 240) {
    if (text.size() <= limit) return text;
    return text.substr(0, limit) + "...";
}

}  // namespace

// ---------------------------------------------------------------------------
// Structured responses
// ---------------------------------------------------------------------------

namespace {

// Returns every balanced top-level {...} span in the text, respecting string
// literals and escapes. Code fences and prose fall away naturally.
std::vector<std::string> json_object_candidates(const std::string& text) {
    std::vector<std::string> candidates;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '{') {
            ++i;
            continue;
        }
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        std::size_t j = i;
        for (; j < text.size(); ++j) {
            char c = text[j];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                --depth;
                if (depth == 0) break;
            }
        }
        if (j < text.size() && depth == 0) {
            candidates.push_back(text.substr(i, j - i + 1));
            i = j + 1;
        } else {
            ++i;  // unbalanced; resume after this brace
        }
    }
    return candidates;
}

double require_number(const json& value, const std::string& where,
                      const std::string& fragment) {
    if (!value.is_number()) {
        throw ParseError(where + ": expected a number", fragment);
    }
    return value.get<double>();
}

std::map<AgentId, std::array<double, kStrategyCount>> parse_agent_strategy_map(
    const json& section, const std::string& key, double lo, double hi,
    const std::string& fragment) {
    if (!section.is_object() || section.empty()) {
        throw ParseError(key + ": expected a non-empty object keyed by agent",
                         fragment);
    }
    std::map<AgentId, std::array<double, kStrategyCount>> out;
    for (const auto& [agent, row] : section.items()) {
        if (!row.is_object()) {
            throw ParseError(key + "[" + agent + "]: expected an object", fragment);
        }
        std::array<double, kStrategyCount> values{};
        for (StrategyKind k : all_strategies()) {
            const std::string& name = to_string(k);
            if (!row.contains(name)) {
                throw ParseError(key + "[" + agent + "]: missing key " + name,
                                 fragment);
            }
            double v = require_number(row.at(name), key + "[" + agent + "]." + name,
                                      fragment);
            if (!std::isfinite(v) || v < lo || v > hi) {
                std::ostringstream msg;
                msg << key << "[" << agent << "]." << name << ": value " << v
                    << " outside [" << lo << "," << hi << "]";
                throw ParseError(msg.str(), fragment);
            }
            values[static_cast<int>(k)] = v;
        }
        out[agent] = values;
    }
    return out;
}

}  // namespace

MetaResponse parse_meta_response(const std::string& text) {
    std::vector<std::string> candidates = json_object_candidates(text);
    json doc;
    std::string fragment;
    bool found_object = false;
    for (const std::string& candidate : candidates) {
        json parsed = json::parse(candidate, nullptr, /*allow_exceptions=*/false);
        if (parsed.is_discarded() || !parsed.is_object()) continue;
        found_object = true;
        if (parsed.contains("payoff_matrix") || parsed.contains("action_prediction") ||
            parsed.contains("belief_update_vector")) {
            doc = std::move(parsed);
            fragment = candidate;
            break;
        }
    }
    if (fragment.empty()) {
        if (!found_object) {
            throw ParseError("no structured object found in completion",
                             truncate_for_log(text));
        }
        throw ParseError(
            "missing required key: expected payoff_matrix, action_prediction, "
            "or belief_update_vector",
            truncate_for_log(text));
    }

    MetaResponse response;
    if (doc.contains("payoff_matrix")) {
        response.payoff_matrix = parse_agent_strategy_map(
            doc.at("payoff_matrix"), "payoff_matrix", kPayoffMin, kPayoffMax,
            fragment);
    }
    if (doc.contains("action_prediction")) {
        auto raw = parse_agent_strategy_map(doc.at("action_prediction"),
                                            "action_prediction", 0.0, 1.0, fragment);
        std::map<AgentId, StrategyDistribution> predictions;
        for (auto& [agent, values] : raw) {
            double sum = values[0] + values[1] + values[2];
            if (std::abs(sum - 1.0) > 0.01) {
                std::ostringstream msg;
                msg << "action_prediction[" << agent << "]: probabilities sum to "
                    << sum;
                throw ParseError(msg.str(), fragment);
            }
            StrategyDistribution dist{};
            // Renormalize only sums outside the strict tolerance; exact
            // inputs round-trip untouched.
            bool renormalize = std::abs(sum - 1.0) > kDistributionTolerance;
            for (int i = 0; i < kStrategyCount; ++i) {
                dist.probabilities[i] = renormalize ? values[i] / sum : values[i];
            }
            validate_distribution(dist);
            predictions[agent] = dist;
        }
        response.action_prediction = std::move(predictions);
    }
    if (doc.contains("belief_update_vector")) {
        const json& section = doc.at("belief_update_vector");
        if (!section.is_array() || section.empty()) {
            throw ParseError("belief_update_vector: expected a non-empty array",
                             fragment);
        }
        std::vector<BeliefUpdateEntry> entries;
        entries.reserve(section.size());
        for (const json& item : section) {
            if (!item.is_object()) {
                throw ParseError("belief_update_vector: entries must be objects",
                                 fragment);
            }
            BeliefUpdateEntry entry;
            if (item.contains("dimension")) {
                if (!item.at("dimension").is_string()) {
                    throw ParseError("belief_update_vector: dimension must be a string",
                                     fragment);
                }
                entry.dimension = item.at("dimension").get<std::string>();
            }
            for (const char* field : {"score", "confidence"}) {
                if (!item.contains(field)) {
                    throw ParseError(std::string("belief_update_vector: missing key ") +
                                         field,
                                     fragment);
                }
                double v = require_number(item.at(field),
                                          std::string("belief_update_vector.") + field,
                                          fragment);
                if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
                    std::ostringstream msg;
                    msg << "belief_update_vector." << field << ": value " << v
                        << " outside [0,1]";
                    throw ParseError(msg.str(), fragment);
                }
                if (std::string(field) == "score") {
                    entry.score = v;
                } else {
                    entry.confidence = v;
                }
            }
            entries.push_back(std::move(entry));
        }
        response.belief_update_vector = std::move(entries);
    }
    return response;
}

std::string serialize_meta_response(const MetaResponse& response) {
    json doc = json::object();
    if (response.payoff_matrix) {
        json section = json::object();
        for (const auto& [agent, row] : *response.payoff_matrix) {
            json entry = json::object();
            for (StrategyKind k : all_strategies()) {
                entry[to_string(k)] = row[static_cast<int>(k)];
            }
            section[agent] = std::move(entry);
        }
        doc["payoff_matrix"] = std::move(section);
    }
    if (response.action_prediction) {
        json section = json::object();
        for (const auto& [agent, dist] : *response.action_prediction) {
            json entry = json::object();
            for (StrategyKind k : all_strategies()) {
                entry[to_string(k)] = dist[k];
            }
            section[agent] = std::move(entry);
        }
        doc["action_prediction"] = std::move(section);
    }
    if (response.belief_update_vector) {
        json section = json::array();
        for (const BeliefUpdateEntry& entry : *response.belief_update_vector) {
            json item = json::object();
            if (!entry.dimension.empty()) item["dimension"] = entry.dimension;
            item["score"] = entry.score;
            item["confidence"] = entry.confidence;
            section.push_back(std::move(item));
        }
        doc["belief_update_vector"] = std::move(section);
    }
    return doc.dump();
}

Evaluation to_evaluation(const std::vector<BeliefUpdateEntry>& entries) {
    if (entries.empty()) {
        throw ValidationError("to_evaluation: no belief update entries");
    }
    Evaluation eval;
    eval.scores.values.reserve(entries.size());
    double confidence_sum = 0.0;
    for (const BeliefUpdateEntry& entry : entries) {
        eval.scores.values.push_back(entry.score);
        confidence_sum += entry.confidence;
    }
    eval.confidence = confidence_sum / static_cast<double>(entries.size());
    return eval;
}

// ---------------------------------------------------------------------------
// Prompt rendering
// ---------------------------------------------------------------------------

namespace {

const std::array<std::string, kStrategyCount> kDirectiveLines = {
    "Focus on information synthesis and consensus-building.",
    "Focus on critical argumentation and error exposure.",
    "Balance partial agreement with strategic rebuttal.",
};

void require_nonempty(const std::string& value, const std::string& slot) {
    if (value.empty()) {
        throw ValidationError("prompt rendering: missing value for " + slot);
    }
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += sep;
        out += parts[i];
    }
    return out;
}

std::string render_payoff_row(const PayoffTable& payoffs, const AgentId& agent) {
    std::array<double, kStrategyCount> row{};
    if (payoffs.mode == PayoffMode::Separable) {
        auto it = payoffs.separable.find(agent);
        if (it == payoffs.separable.end()) {
            throw ValidationError("prompt rendering: no payoffs for agent " + agent);
        }
        row = it->second;
    } else {
        auto it = payoffs.joint.find(agent);
        if (it == payoffs.joint.end()) {
            throw ValidationError("prompt rendering: no payoffs for agent " + agent);
        }
        for (StrategyKind k : all_strategies()) {
            const auto& values = it->second.rows[static_cast<int>(k)];
            double sum = 0.0;
            for (double v : values) sum += v;
            row[static_cast<int>(k)] = sum / static_cast<double>(values.size());
        }
    }
    std::vector<std::string> parts;
    for (StrategyKind k : all_strategies()) {
        parts.push_back(to_string(k) + "=" + fixed4(row[static_cast<int>(k)]));
    }
    return join(parts, ", ");
}

std::string render_predictions(const std::map<AgentId, StrategyDistribution>& predictions,
                               const AgentId& exclude) {
    std::vector<std::string> parts;
    for (const auto& [agent, dist] : predictions) {
        if (agent == exclude) continue;
        std::vector<std::string> probs;
        for (StrategyKind k : all_strategies()) {
            probs.push_back(to_string(k) + "=" + fixed4(dist[k]));
        }
        parts.push_back(agent + ": " + join(probs, ", "));
    }
    return parts.empty() ? "(none)" : join(parts, "; ");
}

}  // namespace

const std::string& directive_line(StrategyKind kind) {
    return kDirectiveLines[static_cast<int>(kind)];
}

std::string render_history(const History& history) {
    if (history.empty()) return "(no prior rounds)";
    std::ostringstream out;
    for (std::size_t i = 0; i < history.size(); ++i) {
        const RoundRecord& r = history[i];
        if (i > 0) out << "\n";
        out << "round " << r.round << " | " << r.agent_id << " ["
            << to_string(r.strategy) << "]: " << r.message << " (scores=[";
        for (std::size_t k = 0; k < r.evaluation.scores.dim(); ++k) {
            if (k > 0) out << ", ";
            out << fixed4(r.evaluation.scores[k]);
        }
        out << "], confidence=" << fixed4(r.evaluation.confidence) << ")";
    }
    return out.str();
}

std::string render_belief_state(const belief::BeliefMatrix& matrix) {
    if (matrix.targets.empty()) return "(no peers)";
    std::vector<std::string> parts;
    for (const auto& [target, state] : matrix.targets) {
        std::vector<std::string> coords;
        coords.reserve(state.estimate.dim());
        for (double v : state.estimate.values) coords.push_back(fixed4(v));
        parts.push_back(target + ": mean=[" + join(coords, ", ") +
                        "], confidence=" + fixed4(state.precision));
    }
    return join(parts, "; ");
}

std::string meta_system_instruction(const std::string& scenario_type) {
    require_nonempty(scenario_type, "SCENARIO_TYPE");
    return "You are the Meta-Agent Coordinator overseeing a " + scenario_type +
           " interaction. Your objective is to maintain the strategic "
           "equilibrium of the conversation.";
}

namespace {

std::string task1_block(const std::string& participants) {
    return "Task 1 (Payoff Estimation): Analyze the current state and estimate "
           "the potential utility for each participant (" + participants +
           ") if they adopt one of the following strategies: Cooperation, "
           "Competition, or Coopetition. Assign a scalar value u in [0, 10] to "
           "each strategy-agent pair.";
}

std::string task2_block(const std::string& dimension_list) {
    return "Task 2 (Evaluation): Assess the latest message based on the "
           "following domain-specific dimensions: " + dimension_list +
           ". For each dimension, provide a normalized score s in [0, 1] and a "
           "confidence score omega in [0, 1].";
}

std::string contextual_input_block(const std::string& domain_context,
                                   const History& history) {
    return "Contextual Input:\n- Global Context: " + domain_context +
           "\n- Interaction History: " + render_history(history);
}

}  // namespace

std::string render_meta_prompt(const std::string& scenario_type,
                               const std::string& domain_context,
                               const History& history,
                               const std::vector<std::string>& dimension_list) {
    require_nonempty(domain_context, "DOMAIN_KNOWLEDGE_BASE");
    if (dimension_list.empty()) {
        throw ValidationError("prompt rendering: missing value for DIMENSION_LIST");
    }
    for (const std::string& dim : dimension_list) require_nonempty(dim, "DIMENSION_LIST");

    std::ostringstream out;
    out << meta_system_instruction(scenario_type) << "\n"
        << contextual_input_block(domain_context, history) << "\n"
        << task1_block("all participants") << "\n"
        << task2_block(join(dimension_list, ", ")) << "\n"
        << "Output Requirement: Return the results strictly in a structured "
           "JSON format containing keys for \"payoff_matrix\" and "
           "\"belief_update_vector\".";
    return out.str();
}

std::string render_meta_payoff_prompt(const std::string& scenario_type,
                                      const std::string& domain_context,
                                      const History& history,
                                      const std::vector<AgentId>& agent_ids) {
    require_nonempty(scenario_type, "SCENARIO_TYPE");
    require_nonempty(domain_context, "DOMAIN_KNOWLEDGE_BASE");
    if (agent_ids.empty()) {
        throw ValidationError("prompt rendering: no participants");
    }
    std::string participants = join(agent_ids, ", ");

    std::ostringstream out;
    out << contextual_input_block(domain_context, history) << "\n"
        << task1_block(participants) << "\n"
        << "Also predict, for each participant, a probability distribution over "
           "the three strategies for the coming round.\n"
        << "Output Requirement: Return the results strictly in a structured "
           "JSON format containing keys for \"payoff_matrix\" and "
           "\"action_prediction\", each mapping every participant name to an "
           "object with keys \"Cooperation\", \"Competition\", and "
           "\"Coopetition\".";
    return out.str();
}

std::string render_meta_eval_prompt(const std::string& scenario_type,
                                    const std::string& domain_context,
                                    const std::string& message,
                                    StrategyKind strategy,
                                    const AgentId& target_id,
                                    const std::vector<std::string>& dimension_list) {
    require_nonempty(scenario_type, "SCENARIO_TYPE");
    require_nonempty(domain_context, "DOMAIN_KNOWLEDGE_BASE");
    require_nonempty(message, "MESSAGE");
    require_nonempty(target_id, "TARGET");
    if (dimension_list.empty()) {
        throw ValidationError("prompt rendering: missing value for DIMENSION_LIST");
    }

    std::ostringstream out;
    out << "Contextual Input:\n- Global Context: " << domain_context << "\n"
        << "- Latest message from participant " << target_id << " (declared strategy "
        << to_string(strategy) << "): " << message << "\n"
        << task2_block(join(dimension_list, ", ")) << "\n"
        << "Output Requirement: Return the results strictly in a structured "
           "JSON format containing the key \"belief_update_vector\": an array "
           "with one entry per dimension, in the order listed, each an object "
           "with keys \"dimension\", \"score\", and \"confidence\".";
    return out.str();
}

std::string render_participant_prompt(const agents::AgentProfile& profile,
                                      const coord::CoordinatorSignals& signals,
                                      StrategyKind chosen,
                                      const std::string& query,
                                      const std::string& persona) {
    require_nonempty(profile.role_designation, "AGENT_ROLE");
    require_nonempty(query, "CURRENT_QUERY");
    std::string profile_text =
        persona.empty() ? "the " + profile.role_designation + " participant"
                        : persona;

    std::ostringstream out;
    out << "Role Definition: You are " << profile.role_designation
        << ", characterized by " << profile_text << ".\n"
        << "Game State Injection:\n"
        << "- Current Beliefs: Your subjective assessment of peers' capabilities is "
        << render_belief_state(profile.belief_matrix) << ".\n"
        << "- Strategic Signal: The estimated payoffs for your potential actions are "
        << render_payoff_row(signals.payoffs, profile.agent_id)
        << ". The predicted strategies of your opponents are "
        << render_predictions(signals.predictions, profile.agent_id) << ".\n"
        << "Action Directive: Based on the above information, you have resolved "
           "to adopt a " << to_string(chosen) << " approach. "
        << directive_line(chosen) << "\n"
        << "Task: Generate your response to " << query
        << " ensuring alignment with your selected strategy and private profile.";
    return out.str();
}

// ---------------------------------------------------------------------------
// Transport
// ---------------------------------------------------------------------------

HttpPostFn default_http_post() {
    return [](const std::string& base_url, const std::string& path,
              const std::string& body, const std::string& bearer_token,
              int timeout_ms) -> HttpResponse {
        httplib::Client client(base_url);
        client.set_connection_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
        client.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
        client.set_write_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);

        httplib::Headers headers;
        if (!bearer_token.empty()) {
            headers.emplace("Authorization", "Bearer " + bearer_token);
        }
        httplib::Result result = client.Post(path, headers, body, "application/json");
        if (!result) {
            httplib::Error err = result.error();
            if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
                err == httplib::Error::Write) {
                throw TransportError(TransportError::Kind::Timeout,
                                     "request timed out: " + httplib::to_string(err));
            }
            throw TransportError(TransportError::Kind::Connect,
                                 "connection failed: " + httplib::to_string(err));
        }
        return {result->status, result->body};
    };
}

std::string build_chat_request_body(const EndpointConfig& endpoint,
                                    const std::string& system_prompt,
                                    const std::string& user_prompt) {
    json body = {
        {"model", endpoint.model_name},
        {"messages",
         json::array({json{{"role", "system"}, {"content", system_prompt}},
                      json{{"role", "user"}, {"content", user_prompt}}})},
        {"temperature", endpoint.temperature},
        {"max_tokens", endpoint.max_tokens},
    };
    return body.dump();
}

namespace {

std::string extract_completion_text(const std::string& body) {
    json doc = json::parse(body, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw TransportError(TransportError::Kind::BadPayload,
                             "response body is not a JSON object");
    }
    if (!doc.contains("choices") || !doc.at("choices").is_array() ||
        doc.at("choices").empty()) {
        throw TransportError(TransportError::Kind::BadPayload,
                             "response has no choices");
    }
    const json& first = doc.at("choices").at(0);
    if (!first.contains("message") || !first.at("message").contains("content") ||
        !first.at("message").at("content").is_string()) {
        throw TransportError(TransportError::Kind::BadPayload,
                             "response choice has no message content");
    }
    return first.at("message").at("content").get<std::string>();
}

bool retryable_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

}  // namespace

std::string chat_complete_with(const HttpPostFn& post, const EndpointConfig& endpoint,
                               const std::string& system_prompt,
                               const std::string& user_prompt) {
    const char* key_env = std::getenv("BEACOF_API_KEY");
    const std::string bearer = key_env ? key_env : "";
    const std::string body = build_chat_request_body(endpoint, system_prompt, user_prompt);
    const int attempts = std::max(1, endpoint.retry_budget);

    std::optional<TransportError> last_error;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        if (attempt > 1 && endpoint.backoff_base_ms > 0) {
            int backoff = endpoint.backoff_base_ms * (1 << (attempt - 2));
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
        }
        try {
            HttpResponse response =
                post(endpoint.base_url, "/v1/chat/completions", body, bearer,
                     endpoint.timeout_ms);
            if (response.status != 200) {
                TransportError err(TransportError::Kind::HttpStatus,
                                   "server returned status " +
                                       std::to_string(response.status),
                                   response.status);
                if (!retryable_status(response.status)) throw err;
                last_error = err;
                continue;
            }
            std::string text = extract_completion_text(response.body);
            if (text.empty()) {
                last_error = TransportError(TransportError::Kind::EmptyCompletion,
                                            "empty completion");
                continue;
            }
            if (attempt > 1) {
                log_warning("chat request succeeded after " +
                            std::to_string(attempt - 1) + " retries");
            }
            return text;
        } catch (const TransportError& err) {
            if (err.kind == TransportError::Kind::HttpStatus &&
                !retryable_status(err.status)) {
                throw;
            }
            last_error = err;
        }
    }
    throw TransportError(last_error->kind,
                         "retry budget exhausted after " + std::to_string(attempts) +
                             " attempts: " + last_error->what(),
                         last_error->status);
}

std::string chat_complete(const EndpointConfig& endpoint,
                          const std::string& system_prompt,
                          const std::string& user_prompt) {
    return chat_complete_with(default_http_post(), endpoint, system_prompt, user_prompt);
}

// ---------------------------------------------------------------------------
// Live backend implementations
// ---------------------------------------------------------------------------

namespace {

ChatFn resolve_chat(ChatFn chat) {
    if (chat) return chat;
    return [](const EndpointConfig& endpoint, const std::string& system_prompt,
              const std::string& user_prompt) {
        return chat_complete(endpoint, system_prompt, user_prompt);
    };
}

}  // namespace

LlmCoordinator::LlmCoordinator(EndpointConfig endpoint, std::vector<AgentId> agent_ids,
                               int d, ChatFn chat)
    : endpoint_(std::move(endpoint)),
      agent_ids_(std::move(agent_ids)),
      d_(d),
      chat_(resolve_chat(std::move(chat))) {}

PayoffTable LlmCoordinator::generate_contextual_payoffs(
    const History& history, const TaskDescriptor& task,
    const coord::BeliefsSnapshot&, int round) {
    const std::string system_prompt = meta_system_instruction(task.scenario_type);
    const std::string user_prompt = render_meta_payoff_prompt(
        task.scenario_type, task.domain_context, history, agent_ids_);

    const int attempts = std::max(1, endpoint_.retry_budget);
    std::string failure;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        std::string text;
        try {
            text = chat_(endpoint_, system_prompt, user_prompt);
        } catch (const TransportError& err) {
            failure = err.what();
            break;  // transport retries already happened inside the chat call
        }
        try {
            MetaResponse response = parse_meta_response(text);
            if (!response.payoff_matrix) {
                throw ParseError("payoff_matrix section missing", text);
            }
            if (!response.action_prediction) {
                throw ParseError("action_prediction section missing", text);
            }
            PayoffTable table;
            table.mode = PayoffMode::Separable;
            std::map<AgentId, StrategyDistribution> predictions;
            for (const AgentId& agent : agent_ids_) {
                auto pit = response.payoff_matrix->find(agent);
                if (pit == response.payoff_matrix->end()) {
                    throw ParseError("payoff_matrix missing participant " + agent, text);
                }
                table.separable[agent] = pit->second;
                auto ait = response.action_prediction->find(agent);
                if (ait == response.action_prediction->end()) {
                    throw ParseError("action_prediction missing participant " + agent,
                                     text);
                }
                predictions[agent] = ait->second;
            }
            validate_payoff_table(table);
            stashed_predictions_ = std::move(predictions);
            return table;
        } catch (const ParseError& err) {
            failure = std::string(err.what()) + " | raw: " + truncate_for_log(err.fragment);
        } catch (const ValidationError& err) {
            failure = err.what();
        }
    }

    ++degraded_payoff_rounds_;
    log_warning("round " + std::to_string(round) +
                ": contextual payoff generation failed (" + failure +
                "); falling back to the neutral table");
    PayoffTable fallback;
    fallback.mode = PayoffMode::Separable;
    stashed_predictions_.clear();
    for (const AgentId& agent : agent_ids_) {
        fallback.separable[agent] = {5.0, 5.0, 5.0};
        stashed_predictions_[agent] = StrategyDistribution::uniform();
    }
    return fallback;
}

std::map<AgentId, StrategyDistribution> LlmCoordinator::predict_agent_actions(
    const History&, const PayoffTable&, int) {
    if (!stashed_predictions_.empty()) return stashed_predictions_;
    std::map<AgentId, StrategyDistribution> uniform;
    for (const AgentId& agent : agent_ids_) {
        uniform[agent] = StrategyDistribution::uniform();
    }
    return uniform;
}

Evaluation LlmCoordinator::evaluate_message(const std::string& message,
                                            StrategyKind strategy,
                                            const TaskDescriptor& task,
                                            const AgentId& target_id, int round) {
    if (message.empty()) {
        throw ValidationError("evaluate_message: empty message");
    }
    const std::string system_prompt = meta_system_instruction(task.scenario_type);
    const std::string user_prompt =
        render_meta_eval_prompt(task.scenario_type, task.domain_context, message,
                                strategy, target_id, task.dimensions);

    const int attempts = std::max(1, endpoint_.retry_budget);
    std::string failure;
    std::string last_raw;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        std::string text = chat_(endpoint_, system_prompt, user_prompt);
        last_raw = text;
        try {
            MetaResponse response = parse_meta_response(text);
            if (!response.belief_update_vector) {
                throw ParseError("belief_update_vector section missing", text);
            }
            if (static_cast<int>(response.belief_update_vector->size()) != d_) {
                std::ostringstream msg;
                msg << "belief_update_vector has "
                    << response.belief_update_vector->size()
                    << " dimensions, expected " << d_;
                throw ParseError(msg.str(), text);
            }
            return to_evaluation(*response.belief_update_vector);
        } catch (const ParseError& err) {
            failure = err.what();
        }
    }
    throw coord::CoordinatorError("round " + std::to_string(round) +
                                      ": message evaluation failed after " +
                                      std::to_string(attempts) + " attempts: " + failure,
                                  last_raw);
}

LlmMessageBackend::LlmMessageBackend(EndpointConfig endpoint, ChatFn chat)
    : endpoint_(std::move(endpoint)), chat_(resolve_chat(std::move(chat))) {}

std::string LlmMessageBackend::generate_message(const agents::AgentProfile& profile,
                                                StrategyKind chosen, int,
                                                const coord::CoordinatorSignals& signals,
                                                const History&,
                                                const TaskDescriptor& task) {
    std::string persona;
    auto it = task.personas.find(profile.agent_id);
    if (it != task.personas.end()) persona = it->second;

    const std::string prompt =
        render_participant_prompt(profile, signals, chosen, task.query, persona);
    // First line is the role definition; it doubles as the system prompt.
    std::size_t split = prompt.find('\n');
    const std::string system_prompt = prompt.substr(0, split);
    const std::string user_prompt = prompt.substr(split + 1);

    std::string completion = chat_(endpoint_, system_prompt, user_prompt);
    if (completion.empty()) {
        throw TransportError(TransportError::Kind::EmptyCompletion,
                             "participant completion is empty");
    }
    return completion;
}

}  // namespace beacof::llm
