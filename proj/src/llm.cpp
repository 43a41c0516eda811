#include "dialmem/llm.hpp"

#include <algorithm>
#include <fstream>
#include <thread>

#include "dialmem/text.hpp"

namespace dialmem {

std::string_view to_string(ParseStatus s) {
    switch (s) {
        case ParseStatus::ok: return "ok";
        case ParseStatus::no_json_found: return "no_json_found";
        case ParseStatus::schema_violation: return "schema_violation";
        case ParseStatus::not_applicable: return "not_applicable";
    }
    return "ok";
}

PayloadError::PayloadError(ParseStatus status, std::string message, std::string raw,
                           std::vector<std::string> missing)
    : std::runtime_error(std::move(message)), status_(status), raw_(std::move(raw)), missing_(std::move(missing)) {}

ReplayMissError::ReplayMissError(TemplateId id, std::string fingerprint)
    : GatewayError("replayer miss for template " + std::string(to_string(id)) + " (fingerprint " +
                   fingerprint + ")"),
      id_(id) {}

const std::vector<std::string>& required_keys(TemplateId id) {
    static const std::vector<std::string> understanding = {"tags", "summary"};
    static const std::vector<std::string> router = {"Action", "Target"};
    static const std::vector<std::string> merge = {"Grouped Topics"};
    static const std::vector<std::string> refine = {"use_graph",    "use_baseline", "graph_topn",
                                                    "hop_k",        "fusion_alpha", "fusion_beta",
                                                    "fusion_gamma", "fusion_delta", "confidence"};
    static const std::vector<std::string> integrate = {"content", "sources"};
    static const std::vector<std::string> info = {"enough"};
    static const std::vector<std::string> follow = {"new_requests"};
    static const std::vector<std::string> none;
    switch (id) {
        case TemplateId::message_understanding: return understanding;
        case TemplateId::episodic_router_event:
        case TemplateId::episodic_router_fact:
        case TemplateId::episodic_router_attribute: return router;
        case TemplateId::topic_merge: return merge;
        case TemplateId::route_refine: return refine;
        case TemplateId::research_integrate: return integrate;
        case TemplateId::info_check: return info;
        case TemplateId::follow_up: return follow;
        case TemplateId::working_answer: return none;
    }
    return none;
}

namespace {

// End index (exclusive) of the balanced object starting at `open`, or npos.
std::size_t match_object(std::string_view s, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = open; i < s.size(); ++i) {
        const char c = s[i];
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
            if (--depth == 0) return i + 1;
        }
    }
    return std::string_view::npos;
}

}  // namespace

json parse_json_payload(std::string_view raw, TemplateId id) {
    std::optional<json> found;
    for (std::size_t pos = raw.find('{'); pos != std::string_view::npos; pos = raw.find('{', pos + 1)) {
        const auto end = match_object(raw, pos);
        if (end == std::string_view::npos) continue;
        auto parsed = json::parse(raw.substr(pos, end - pos), nullptr, /*allow_exceptions=*/false);
        if (!parsed.is_discarded() && parsed.is_object()) {
            found = std::move(parsed);
            break;
        }
    }
    if (!found) {
        throw PayloadError(ParseStatus::no_json_found,
                           "no JSON object found in " + std::string(to_string(id)) + " reply", std::string(raw));
    }
    std::vector<std::string> missing;
    for (const auto& key : required_keys(id)) {
        if (!found->contains(key)) missing.push_back(key);
    }
    if (!missing.empty()) {
        std::string msg = "schema violation in " + std::string(to_string(id)) + " reply: missing";
        for (const auto& k : missing) msg += " \"" + k + "\"";
        throw PayloadError(ParseStatus::schema_violation, msg, std::string(raw), missing);
    }
    return *found;
}

std::string bindings_fingerprint(const Bindings& bindings) {
    // std::map iterates in sorted key order. Unit/record separators keep
    // ("ab","c") distinct from ("a","bc").
    std::uint64_t h = text::fnv1a64("");
    for (const auto& [k, v] : bindings) {
        h = text::fnv1a64(k, h);
        h = text::fnv1a64("\x1f", h);
        h = text::fnv1a64(v, h);
        h = text::fnv1a64("\x1e", h);
    }
    return text::to_hex(h);
}

// ---------------------------------------------------------------------------

void ScriptedReplayer::add_exact(TemplateId id, const Bindings& bindings, std::string response) {
    add_fingerprint(id, bindings_fingerprint(bindings), std::move(response));
}

void ScriptedReplayer::add_fingerprint(TemplateId id, std::string fingerprint, std::string response) {
    exact_[{id, std::move(fingerprint)}] = std::move(response);
}

void ScriptedReplayer::add_match(TemplateId id, Bindings subset, std::string response) {
    matches_.push_back({id, std::move(subset), std::move(response)});
}

std::string ScriptedReplayer::send(const LlmRequest& request) {
    {
        std::lock_guard lock(log_mu_);
        log_.push_back(request.template_id);
    }
    const auto fp = bindings_fingerprint(request.bindings);
    if (auto it = exact_.find({request.template_id, fp}); it != exact_.end()) return it->second;
    for (const auto& m : matches_) {
        if (m.id != request.template_id) continue;
        const bool all = std::all_of(m.subset.begin(), m.subset.end(), [&](const auto& kv) {
            auto b = request.bindings.find(kv.first);
            return b != request.bindings.end() && b->second == kv.second;
        });
        if (all) return m.response;
    }
    ++misses_;
    if (strict_) throw ReplayMissError(request.template_id, fp);
    return {};
}

std::vector<TemplateId> ScriptedReplayer::call_log() const {
    std::lock_guard lock(log_mu_);
    return log_;
}

std::shared_ptr<ScriptedReplayer> ScriptedReplayer::from_json(const json& script, std::optional<bool> strict) {
    if (!script.is_object() || !script.contains("entries") || !script["entries"].is_array())
        throw InputError("script: expected an object with an \"entries\" array");
    const bool is_strict = strict.value_or(script.value("strict", true));
    auto r = std::make_shared<ScriptedReplayer>(is_strict);
    std::size_t i = 0;
    for (const auto& e : script["entries"]) {
        const std::string where = "script.entries[" + std::to_string(i++) + "]";
        if (!e.is_object()) throw InputError(where + ": expected object");
        const auto tid = parse_template_id(e.value("template", ""));
        if (!tid) throw InputError(where + ".template: unknown template id");
        if (!e.contains("response")) throw InputError(where + ".response: missing");
        // Non-string responses are stored as their JSON text.
        std::string response = e["response"].is_string() ? e["response"].get<std::string>() : e["response"].dump();
        const auto to_bindings = [&](const json& j, const char* field) {
            if (!j.is_object()) throw InputError(where + "." + field + ": expected object");
            Bindings b;
            for (const auto& [k, v] : j.items()) {
                if (!v.is_string()) throw InputError(where + "." + field + "." + k + ": expected string");
                b[k] = v.get<std::string>();
            }
            return b;
        };
        if (e.contains("bindings")) {
            r->add_exact(*tid, to_bindings(e["bindings"], "bindings"), std::move(response));
        } else if (e.contains("fingerprint")) {
            r->add_fingerprint(*tid, e["fingerprint"].get<std::string>(), std::move(response));
        } else {
            r->add_match(*tid, e.contains("match") ? to_bindings(e["match"], "match") : Bindings{},
                         std::move(response));
        }
    }
    return r;
}

std::shared_ptr<ScriptedReplayer> ScriptedReplayer::load(const std::filesystem::path& path,
                                                         std::optional<bool> strict) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open script " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError("script " + path.string() + ": malformed JSON at byte " + std::to_string(e.byte));
    }
    return from_json(j, strict);
}

// ---------------------------------------------------------------------------

LlmGateway::LlmGateway(std::shared_ptr<ChatTransport> transport, std::string model, RetryPolicy retry)
    : transport_(std::move(transport)), model_(std::move(model)), retry_(retry),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
    if (!transport_) throw GatewayError("LlmGateway: no transport configured");
}

LlmResponse LlmGateway::complete(const LlmRequest& request) {
    ++calls_;
    LlmRequest req = request;
    if (req.model.empty()) req.model = model_;
    std::string raw;
    for (int attempt = 0;; ++attempt) {
        try {
            raw = transport_->send(req);
            break;
        } catch (const TransportError& e) {
            if (attempt >= retry_.max_retries) {
                throw TransportExhausted(std::string(to_string(req.template_id)) + ": transport failed after " +
                                         std::to_string(attempt + 1) + " attempts: " + e.what());
            }
            sleeper_(retry_.base_backoff * (1 << attempt));
        }
    }
    LlmResponse resp;
    resp.raw = std::move(raw);
    if (required_keys(req.template_id).empty()) {
        resp.status = ParseStatus::not_applicable;
        return resp;
    }
    try {
        resp.payload = parse_json_payload(resp.raw, req.template_id);
        resp.status = ParseStatus::ok;
    } catch (const PayloadError& e) {
        resp.status = e.status();
        resp.parse_error = e.what();
    }
    return resp;
}

LlmResponse LlmGateway::call(TemplateId id, const Bindings& bindings) {
    auto prompt = render(id, bindings);
    LlmRequest req;
    req.template_id = id;
    req.system_text = std::move(prompt.system_text);
    req.user_text = std::move(prompt.user_text);
    req.bindings = bindings;
    return complete(req);
}

}  // namespace dialmem
