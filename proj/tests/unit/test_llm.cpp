#include <doctest.h>

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "dialmem/llm.hpp"

using namespace dialmem;

namespace {

Bindings all_bound(TemplateId id) {
    Bindings b;
    for (const auto& p : placeholders(id)) b[p] = "<" + p + ">";
    return b;
}

}  // namespace

TEST_CASE("every template renders once fully bound") {
    for (TemplateId id : kAllTemplates) {
        CAPTURE(to_string(id));
        CHECK(parse_template_id(to_string(id)) == id);
        const auto b = all_bound(id);
        CHECK_FALSE(b.empty());
        const auto r = render(id, b);
        for (const auto& [k, v] : b) {
            CHECK(r.user_text.find("{" + k + "}") == std::string::npos);
            CHECK(r.system_text.find("{" + k + "}") == std::string::npos);
        }
    }
}

TEST_CASE("missing binding names the placeholder") {
    auto b = all_bound(TemplateId::info_check);
    const auto first = placeholders(TemplateId::info_check).front();
    b.erase(first);
    CHECK_THROWS_WITH_AS(render(TemplateId::info_check, b), doctest::Contains(first.c_str()), TemplateError);
}

TEST_CASE("payload parsing") {
    SUBCASE("fenced block inside prose") {
        const auto j = parse_json_payload("Sure!\n```json\n{\"enough\": true}\n```\nthanks", TemplateId::info_check);
        CHECK(j["enough"] == true);
    }
    SUBCASE("first well-formed object wins") {
        const auto j = parse_json_payload("{broken {\"enough\": false} {\"enough\": true}", TemplateId::info_check);
        CHECK(j["enough"] == false);
    }
    SUBCASE("braces inside strings") {
        const auto j = parse_json_payload(R"({"content": "a } b {", "sources": []})", TemplateId::research_integrate);
        CHECK(j["content"] == "a } b {");
    }
    SUBCASE("no json") {
        try {
            parse_json_payload("I am not sure.", TemplateId::info_check);
            FAIL("expected PayloadError");
        } catch (const PayloadError& e) {
            CHECK(e.status() == ParseStatus::no_json_found);
        }
    }
    SUBCASE("missing keys are reported") {
        try {
            parse_json_payload(R"({"Action": "ADD"})", TemplateId::episodic_router_fact);
            FAIL("expected PayloadError");
        } catch (const PayloadError& e) {
            CHECK(e.status() == ParseStatus::schema_violation);
            CHECK(e.missing_keys() == std::vector<std::string>{"Target"});
        }
    }
}

TEST_CASE("scripted replayer lookup order") {
    auto r = std::make_shared<ScriptedReplayer>();
    const Bindings b{{"question", "q1"}, {"summary", "s"}};
    r->add_match(TemplateId::info_check, {}, R"({"enough": false})");
    r->add_match(TemplateId::info_check, {{"question", "q1"}}, R"({"enough": "match"})");
    r->add_exact(TemplateId::info_check, b, R"({"enough": "exact"})");
    LlmRequest req;
    req.template_id = TemplateId::info_check;
    req.bindings = b;
    CHECK(r->send(req) == R"({"enough": "exact"})");
    req.bindings["summary"] = "other";
    CHECK(r->send(req) == R"({"enough": false})");  // wildcard was inserted first
    req.template_id = TemplateId::follow_up;
    CHECK_THROWS_AS(r->send(req), ReplayMissError);
    CHECK(r->misses() == 1);
    CHECK(r->call_log().size() == 3);

    ScriptedReplayer lax(false);
    CHECK(lax.send(req).empty());
}

TEST_CASE("fingerprints ignore insertion order but not boundaries") {
    CHECK(bindings_fingerprint({{"a", "1"}, {"b", "2"}}) == bindings_fingerprint({{"b", "2"}, {"a", "1"}}));
    CHECK(bindings_fingerprint({{"ab", "c"}}) != bindings_fingerprint({{"a", "bc"}}));
    CHECK(bindings_fingerprint({}).size() == 16);
}

TEST_CASE("gateway retries transport failures with doubling backoff") {
    int attempts = 0;
    auto t = std::make_shared<FunctionTransport>([&](const LlmRequest&) -> std::string {
        if (++attempts < 3) throw TransportError("boom", 500);
        return R"({"enough": true})";
    });
    LlmGateway gw(t, "m");
    std::vector<long> sleeps;
    gw.set_sleeper([&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); });
    const auto resp = gw.call(TemplateId::info_check, all_bound(TemplateId::info_check));
    CHECK(resp.ok());
    CHECK(resp.payload["enough"] == true);
    CHECK(attempts == 3);
    CHECK(sleeps == std::vector<long>{500, 1000});
    CHECK(gw.call_count() == 1);
}

TEST_CASE("gateway gives up after the retry budget") {
    int attempts = 0;
    auto t = std::make_shared<FunctionTransport>([&](const LlmRequest&) -> std::string {
        ++attempts;
        throw TransportError("down", 503);
    });
    LlmGateway gw(t);
    gw.set_sleeper([](std::chrono::milliseconds) {});
    CHECK_THROWS_AS(gw.call(TemplateId::info_check, all_bound(TemplateId::info_check)), TransportExhausted);
    CHECK(attempts == 3);
}

TEST_CASE("parse failures are not retried") {
    int attempts = 0;
    auto t = std::make_shared<FunctionTransport>([&](const LlmRequest&) {
        ++attempts;
        return std::string("no idea");
    });
    LlmGateway gw(t);
    const auto resp = gw.call(TemplateId::info_check, all_bound(TemplateId::info_check));
    CHECK(resp.status == ParseStatus::no_json_found);
    CHECK(attempts == 1);
    const auto free_text = gw.call(TemplateId::working_answer, all_bound(TemplateId::working_answer));
    CHECK(free_text.status == ParseStatus::not_applicable);
    CHECK(free_text.raw == "no idea");
}

TEST_CASE("openai transport against a local server that fails twice") {
    httplib::Server srv;
    int hits = 0;
    std::string seen_auth;
    json seen_body;
    srv.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        if (++hits <= 2) {
            res.status = 500;
            res.set_content("oops", "text/plain");
            return;
        }
        seen_auth = req.get_header_value("Authorization");
        seen_body = json::parse(req.body);
        res.set_content(json{{"choices", {{{"message", {{"content", "{\"enough\": true}"}}}}}}}.dump(),
                        "application/json");
    });
    const int port = srv.bind_to_any_port("127.0.0.1");
    std::thread th([&] { srv.listen_after_bind(); });
    srv.wait_until_ready();

    OpenAiOptions o;
    o.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    o.api_key = "sk-test";
    o.timeout_seconds = 5;
    LlmGateway gw(std::make_shared<OpenAiChatTransport>(o), "tiny-model");
    std::vector<long> sleeps;
    gw.set_sleeper([&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); });
    const auto resp = gw.call(TemplateId::info_check, all_bound(TemplateId::info_check));
    srv.stop();
    th.join();

    CHECK(resp.ok());
    CHECK(hits == 3);
    CHECK(sleeps == std::vector<long>{500, 1000});
    CHECK(seen_auth == "Bearer sk-test");
    CHECK(seen_body["model"] == "tiny-model");
    CHECK(seen_body["temperature"] == 0.0);
    CHECK(seen_body["messages"].back()["role"] == "user");
}

TEST_CASE("live options need a key") {
    ::unsetenv("ADAMEM_API_KEY");
    CHECK_THROWS_AS(openai_options_from_env(), GatewayError);
    ::setenv("ADAMEM_API_KEY", "k", 1);
    CHECK(openai_options_from_env().api_key == "k");
    ::unsetenv("ADAMEM_API_KEY");
}
