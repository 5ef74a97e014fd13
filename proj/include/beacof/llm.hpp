#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "beacof/agents.hpp"
#include "beacof/config.hpp"
#include "beacof/coordinator.hpp"
#include "beacof/core.hpp"

// Live backend: prompt rendering for the dual-layer templates, an
// OpenAI-compatible chat client with retry/backoff, and strict parsing of
// structured completions.

namespace beacof::llm {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

// Structured-output problems. `fragment` carries the offending piece of the
// completion for logging.
struct ParseError : Error {
    ParseError(const std::string& what_, std::string fragment_)
        : Error(what_), fragment(std::move(fragment_)) {}
    std::string fragment;
};

struct TransportError : Error {
    enum class Kind { Connect, Timeout, HttpStatus, EmptyCompletion, BadPayload };
    TransportError(Kind kind_, const std::string& what_, int status_ = 0)
        : Error(what_), kind(kind_), status(status_) {}
    Kind kind;
    int status;
};

// ---------------------------------------------------------------------------
// Structured responses
// ---------------------------------------------------------------------------

struct BeliefUpdateEntry {
    std::string dimension;  // may be empty when the model omits the name
    double score = 0.0;
    double confidence = 0.0;

    friend bool operator==(const BeliefUpdateEntry&,
                           const BeliefUpdateEntry&) = default;
};

// Typed view of a meta-agent completion. Sections are optional because the
// coordinator issues trimmed single-task requests; at least one section must
// be present for a parse to succeed.
struct MetaResponse {
    std::optional<std::map<AgentId, std::array<double, kStrategyCount>>> payoff_matrix;
    std::optional<std::map<AgentId, StrategyDistribution>> action_prediction;
    std::optional<std::vector<BeliefUpdateEntry>> belief_update_vector;

    friend bool operator==(const MetaResponse&, const MetaResponse&) = default;
};

// Extracts the first well-formed JSON object from a completion (prose and
// code fences around it are tolerated) and validates it:
//   payoff_matrix        agent -> {strategy name -> utility in [0,10]}
//   action_prediction    agent -> {strategy name -> probability}; sums within
//                        1% of one are renormalized exactly
//   belief_update_vector array of {dimension?, score in [0,1], confidence in [0,1]}
// Throws ParseError when no object is found, a required key inside a section
// is missing, or a value is out of range.
MetaResponse parse_meta_response(const std::string& text);

// Canonical serialization; parse_meta_response(serialize_meta_response(r)) == r.
std::string serialize_meta_response(const MetaResponse& response);

// Collapses per-dimension entries into an Evaluation: scores in entry order,
// confidence as the arithmetic mean of per-dimension confidences.
Evaluation to_evaluation(const std::vector<BeliefUpdateEntry>& entries);

// ---------------------------------------------------------------------------
// Prompt rendering
// ---------------------------------------------------------------------------

// All rendering is pure: same inputs, same bytes. Numeric slots use four
// decimal places.

std::string render_history(const History& history);
std::string render_belief_state(const belief::BeliefMatrix& matrix);

// Full coordination template: system instruction, contextual input, both
// tasks, and the output requirement.
std::string render_meta_prompt(const std::string& scenario_type,
                               const std::string& domain_context,
                               const History& history,
                               const std::vector<std::string>& dimension_list);

// Trimmed single-task variants used for the two calls a round issues.
std::string render_meta_payoff_prompt(const std::string& scenario_type,
                                      const std::string& domain_context,
                                      const History& history,
                                      const std::vector<AgentId>& agent_ids);
std::string render_meta_eval_prompt(const std::string& scenario_type,
                                    const std::string& domain_context,
                                    const std::string& message,
                                    StrategyKind strategy,
                                    const AgentId& target_id,
                                    const std::vector<std::string>& dimension_list);

std::string meta_system_instruction(const std::string& scenario_type);

// Participant template with the game-state injection; includes exactly the
// directive line matching `chosen`.
std::string render_participant_prompt(const agents::AgentProfile& profile,
                                      const coord::CoordinatorSignals& signals,
                                      StrategyKind chosen,
                                      const std::string& query,
                                      const std::string& persona = "");

const std::string& directive_line(StrategyKind kind);

// ---------------------------------------------------------------------------
// Transport
// ---------------------------------------------------------------------------

struct HttpResponse {
    int status = 0;
    std::string body;
};

// POST hook; implementations throw TransportError(Connect/Timeout) on
// transport-level failure. The default uses cpp-httplib.
using HttpPostFn = std::function<HttpResponse(
    const std::string& base_url, const std::string& path, const std::string& body,
    const std::string& bearer_token, int timeout_ms)>;

HttpPostFn default_http_post();

// Request body for POST <base_url>/v1/chat/completions.
std::string build_chat_request_body(const EndpointConfig& endpoint,
                                    const std::string& system_prompt,
                                    const std::string& user_prompt);

// Issues the chat request and returns the assistant text. Transport errors,
// 5xx/429 statuses, and empty completions are retried with exponential
// backoff; retry_budget counts total attempts. Bearer auth comes from the
// BEACOF_API_KEY environment variable when present.
std::string chat_complete(const EndpointConfig& endpoint,
                          const std::string& system_prompt,
                          const std::string& user_prompt);
std::string chat_complete_with(const HttpPostFn& post, const EndpointConfig& endpoint,
                               const std::string& system_prompt,
                               const std::string& user_prompt);

// Chat seam for the coordinator and message backend; lets tests substitute
// canned completions.
using ChatFn = std::function<std::string(const EndpointConfig&,
                                         const std::string& system_prompt,
                                         const std::string& user_prompt)>;

// ---------------------------------------------------------------------------
// Live backend implementations
// ---------------------------------------------------------------------------

// Meta-agent backed by a chat endpoint. Payoff generation retries structured
// failures up to retry_budget attempts, then degrades to a neutral all-5.0
// table with uniform predictions and a logged warning. Message evaluation
// has no neutral fallback; exhausted retries raise CoordinatorError with the
// last raw response attached.
class LlmCoordinator final : public coord::Coordinator {
public:
    LlmCoordinator(EndpointConfig endpoint, std::vector<AgentId> agent_ids, int d,
                   ChatFn chat = {});

    PayoffTable generate_contextual_payoffs(const History& history,
                                            const TaskDescriptor& task,
                                            const coord::BeliefsSnapshot& beliefs,
                                            int round) override;

    std::map<AgentId, StrategyDistribution> predict_agent_actions(
        const History& history, const PayoffTable& payoffs, int round) override;

    Evaluation evaluate_message(const std::string& message, StrategyKind strategy,
                                const TaskDescriptor& task, const AgentId& target_id,
                                int round) override;

    // Rounds that fell back to the neutral table.
    int degraded_payoff_rounds() const { return degraded_payoff_rounds_; }

private:
    EndpointConfig endpoint_;
    std::vector<AgentId> agent_ids_;
    int d_;
    ChatFn chat_;
    std::map<AgentId, StrategyDistribution> stashed_predictions_;
    int degraded_payoff_rounds_ = 0;
};

class LlmMessageBackend final : public agents::MessageBackend {
public:
    explicit LlmMessageBackend(EndpointConfig endpoint, ChatFn chat = {});

    std::string generate_message(const agents::AgentProfile& profile,
                                 StrategyKind chosen, int round,
                                 const coord::CoordinatorSignals& signals,
                                 const History& history,
                                 const TaskDescriptor& task) override;

private:
    EndpointConfig endpoint_;
    ChatFn chat_;
};

}  // namespace beacof::llm
