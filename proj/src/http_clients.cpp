#include <httplib.h>

#include <cstdlib>

#include "dialmem/embedding.hpp"
#include "dialmem/llm.hpp"

namespace dialmem {

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path without trailing slash
};

Endpoint split_base_url(const std::string& base) {
    const auto scheme = base.find("://");
    if (scheme == std::string::npos) throw GatewayError("invalid base URL (no scheme): " + base);
    const auto slash = base.find('/', scheme + 3);
    Endpoint ep;
    ep.origin = base.substr(0, slash);
    ep.prefix = slash == std::string::npos ? "" : base.substr(slash);
    while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
    return ep;
}

json post_json(const std::string& base_url, const std::string& path, const std::string& api_key,
               const json& body, int timeout_seconds) {
    const auto ep = split_base_url(base_url);
    httplib::Client cli(ep.origin);
    cli.set_connection_timeout(timeout_seconds, 0);
    cli.set_read_timeout(timeout_seconds, 0);
    cli.set_write_timeout(timeout_seconds, 0);
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
    auto res = cli.Post(ep.prefix + path, headers, body.dump(), "application/json");
    if (!res) throw TransportError("POST " + ep.prefix + path + ": " + httplib::to_string(res.error()), -1);
    if (res->status < 200 || res->status >= 300) {
        throw TransportError("POST " + ep.prefix + path + ": HTTP " + std::to_string(res->status), res->status);
    }
    auto parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) throw TransportError("POST " + ep.prefix + path + ": non-JSON body", res->status);
    return parsed;
}

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return (v && *v) ? std::string(v) : std::move(fallback);
}

}  // namespace

OpenAiOptions openai_options_from_env() {
    OpenAiOptions o;
    o.base_url = env_or("ADAMEM_API_BASE", o.base_url);
    o.model = env_or("ADAMEM_MODEL", o.model);
    o.api_key = env_or("ADAMEM_API_KEY", "");
    if (o.api_key.empty()) throw GatewayError("ADAMEM_API_KEY is not set (required for --llm live)");
    return o;
}

OpenAiChatTransport::OpenAiChatTransport(OpenAiOptions options) : options_(std::move(options)) {
    split_base_url(options_.base_url);
}

std::string OpenAiChatTransport::send(const LlmRequest& request) {
    json messages = json::array();
    if (!request.system_text.empty()) messages.push_back({{"role", "system"}, {"content", request.system_text}});
    messages.push_back({{"role", "user"}, {"content", request.user_text}});
    const json body = {
        {"model", request.model.empty() ? options_.model : request.model},
        {"temperature", LlmRequest::temperature},
        {"messages", std::move(messages)},
    };
    const auto reply = post_json(options_.base_url, "/chat/completions", options_.api_key, body,
                                 options_.timeout_seconds);
    try {
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        throw TransportError("chat completion reply lacks choices[0].message.content", 200);
    }
}

HttpEmbedder::HttpEmbedder(HttpEmbedderOptions options) : options_(std::move(options)) {
    split_base_url(options_.base_url);
}

EmbeddingVector HttpEmbedder::embed(std::string_view text) const {
    EmbeddingVector v;
    v.values.assign(static_cast<std::size_t>(options_.dimension), 0.0);
    if (text.empty()) return v;
    const json body = {{"model", options_.model}, {"input", std::string(text)}};
    const auto reply = post_json(options_.base_url, "/embeddings", options_.api_key, body, options_.timeout_seconds);
    std::vector<double> values;
    try {
        values = reply.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const json::exception&) {
        throw TransportError("embedding reply lacks data[0].embedding", 200);
    }
    if (values.size() != v.values.size()) {
        throw GatewayError("embedding endpoint returned dimension " + std::to_string(values.size()) +
                           ", configured " + std::to_string(options_.dimension));
    }
    v.values = std::move(values);
    normalize(v);
    return v;
}

}  // namespace dialmem
