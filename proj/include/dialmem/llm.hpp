#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dialmem/core.hpp"

namespace dialmem {

using json = nlohmann::json;

enum class TemplateId {
    message_understanding,
    episodic_router_event,
    episodic_router_fact,
    episodic_router_attribute,
    topic_merge,
    route_refine,
    research_integrate,
    info_check,
    follow_up,
    working_answer,
};

inline constexpr std::array<TemplateId, 10> kAllTemplates = {
    TemplateId::message_understanding,  TemplateId::episodic_router_event,
    TemplateId::episodic_router_fact,   TemplateId::episodic_router_attribute,
    TemplateId::topic_merge,            TemplateId::route_refine,
    TemplateId::research_integrate,     TemplateId::info_check,
    TemplateId::follow_up,              TemplateId::working_answer};

std::string_view to_string(TemplateId id);
std::optional<TemplateId> parse_template_id(std::string_view s);

using Bindings = std::map<std::string, std::string>;

struct PromptTemplate {
    TemplateId id;
    std::string_view system_body;
    std::string_view user_body;
};

const PromptTemplate& prompt_template(TemplateId id);

/// Placeholder names ({name}, lowercase and underscores) in template order, deduplicated.
std::vector<std::string> placeholders(TemplateId id);

struct RenderedPrompt {
    std::string system_text;
    std::string user_text;
};

class TemplateError : public InputError {
public:
    using InputError::InputError;
};

/// Substitutes every placeholder; extra bindings are ignored.
/// Throws TemplateError naming the first unbound placeholder.
RenderedPrompt render(TemplateId id, const Bindings& bindings);

// ---------------------------------------------------------------------------
// Requests, responses, and structured payload parsing

struct LlmRequest {
    TemplateId template_id = TemplateId::message_understanding;
    std::string system_text;
    std::string user_text;
    Bindings bindings;  // kept for replay fingerprinting
    std::string model;
    static constexpr double temperature = 0.0;
};

enum class ParseStatus { ok, no_json_found, schema_violation, not_applicable };

std::string_view to_string(ParseStatus s);

struct LlmResponse {
    std::string raw;
    json payload;  // object when status == ok
    ParseStatus status = ParseStatus::not_applicable;
    std::string parse_error;

    bool ok() const { return status == ParseStatus::ok; }
};

class PayloadError : public std::runtime_error {
public:
    PayloadError(ParseStatus status, std::string message, std::string raw,
                 std::vector<std::string> missing = {});
    ParseStatus status() const { return status_; }
    const std::string& raw() const { return raw_; }
    const std::vector<std::string>& missing_keys() const { return missing_; }

private:
    ParseStatus status_;
    std::string raw_;
    std::vector<std::string> missing_;
};

/// Keys each template's JSON reply must contain. Empty for working_answer.
const std::vector<std::string>& required_keys(TemplateId id);

/// Extracts the first well-formed JSON object from `raw` (code fences and
/// surrounding prose are skipped) and checks the template's required keys.
json parse_json_payload(std::string_view raw, TemplateId id);

// ---------------------------------------------------------------------------
// Transports

/// Retryable failure: connection errors and non-2xx statuses.
class TransportError : public GatewayError {
public:
    TransportError(std::string message, int status) : GatewayError(std::move(message)), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

class TransportExhausted : public GatewayError {
public:
    using GatewayError::GatewayError;
};

class ReplayMissError : public GatewayError {
public:
    ReplayMissError(TemplateId id, std::string fingerprint);
    TemplateId template_id() const { return id_; }

private:
    TemplateId id_;
};

class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    virtual std::string send(const LlmRequest& request) = 0;
};

/// Stable hash of the sorted (key, value) pairs, as 16 hex digits.
std::string bindings_fingerprint(const Bindings& bindings);

/// Answers from a fixed script.
///
/// Lookup order: an exact entry keyed by the full-bindings fingerprint, then
/// `match` entries (a subset of bindings that must all be equal) in insertion
/// order. An entry with an empty match set is a per-template wildcard. In
/// strict mode a miss throws ReplayMissError; otherwise it yields an empty reply.
class ScriptedReplayer final : public ChatTransport {
public:
    explicit ScriptedReplayer(bool strict = true) : strict_(strict) {}

    void add_exact(TemplateId id, const Bindings& bindings, std::string response);
    void add_fingerprint(TemplateId id, std::string fingerprint, std::string response);
    void add_match(TemplateId id, Bindings subset, std::string response);

    std::string send(const LlmRequest& request) override;

    bool strict() const { return strict_; }
    std::size_t misses() const { return misses_.load(); }
    std::vector<TemplateId> call_log() const;

    /// {"strict": bool?, "entries": [{"template", "response", and one of
    ///  "bindings" | "fingerprint" | "match"}]}
    static std::shared_ptr<ScriptedReplayer> from_json(const json& script, std::optional<bool> strict = {});
    static std::shared_ptr<ScriptedReplayer> load(const std::filesystem::path& path,
                                                  std::optional<bool> strict = {});

private:
    struct MatchEntry {
        TemplateId id;
        Bindings subset;
        std::string response;
    };

    bool strict_;
    std::map<std::pair<TemplateId, std::string>, std::string> exact_;
    std::vector<MatchEntry> matches_;
    std::atomic<std::size_t> misses_{0};
    mutable std::mutex log_mu_;
    std::vector<TemplateId> log_;
};

/// Adapter for tests and programmatic scripts.
class FunctionTransport final : public ChatTransport {
public:
    using Fn = std::function<std::string(const LlmRequest&)>;
    explicit FunctionTransport(Fn fn) : fn_(std::move(fn)) {}
    std::string send(const LlmRequest& request) override { return fn_(request); }

private:
    Fn fn_;
};

struct OpenAiOptions {
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key;
    std::string model = "gpt-4.1-mini";
    int timeout_seconds = 60;
};

/// Reads ADAMEM_API_BASE, ADAMEM_API_KEY, ADAMEM_MODEL. Throws GatewayError
/// when the key is missing.
OpenAiOptions openai_options_from_env();

/// OpenAI-compatible POST {base}/chat/completions.
class OpenAiChatTransport final : public ChatTransport {
public:
    explicit OpenAiChatTransport(OpenAiOptions options);
    std::string send(const LlmRequest& request) override;

private:
    OpenAiOptions options_;
};

// ---------------------------------------------------------------------------

struct RetryPolicy {
    int max_retries = 2;
    std::chrono::milliseconds base_backoff{500};
};

class LlmGateway {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    explicit LlmGateway(std::shared_ptr<ChatTransport> transport, std::string model = {},
                        RetryPolicy retry = {});

    /// Transport failures are retried with exponential backoff; parse failures
    /// are reported in the response and never retried.
    LlmResponse complete(const LlmRequest& request);

    /// render() + complete().
    LlmResponse call(TemplateId id, const Bindings& bindings);

    void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }
    std::size_t call_count() const { return calls_.load(); }
    const std::string& model() const { return model_; }

private:
    std::shared_ptr<ChatTransport> transport_;
    std::string model_;
    RetryPolicy retry_;
    Sleeper sleeper_;
    std::atomic<std::size_t> calls_{0};
};

}  // namespace dialmem
