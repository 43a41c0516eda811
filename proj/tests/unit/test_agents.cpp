#include <doctest.h>

#include "dialmem/agents.hpp"
#include "test_support.hpp"

using namespace dialmem;

namespace {

// Research fixture: case one memory with a programmable reasoning model.
struct Bench {
    testing::LoadedCase c = testing::load_case("case_one_transcript.json", "case_one_script.json");
    std::map<TemplateId, int> calls;
    std::map<TemplateId, std::function<std::string(const LlmRequest&)>> replies;
    std::vector<LlmRequest> seen;
    testing::Rig rig{std::make_shared<FunctionTransport>([this](const LlmRequest& r) {
        ++calls[r.template_id];
        seen.push_back(r);
        const auto it = replies.find(r.template_id);
        if (it == replies.end()) throw TransportError("no reply", 500);
        return it->second(r);
    })};

    Bench() {
        c.state.config.planner_mode = PlannerMode::rule_only;
        replies[TemplateId::research_integrate] = [](const LlmRequest&) {
            return json{{"content", "Caroline rode horses with her dad."}, {"sources", {"turn:00000002"}}}.dump();
        };
        replies[TemplateId::working_answer] = [](const LlmRequest&) { return std::string("horseback riding"); };
    }
    ResearchState run(const std::string& q = "What activity did Caroline used to do with her dad?") {
        return research(c.state, q, rig.services());
    }
};

std::string constant(const char* s) { return s; }

}  // namespace

TEST_CASE("enough after the first round stops early") {
    Bench b;
    b.replies[TemplateId::info_check] = [](const LlmRequest&) { return constant(R"({"enough": true})"); };
    const auto rs = b.run();
    CHECK(rs.rounds.size() == 1);
    CHECK(rs.rounds[0].queries == std::vector<std::string>{"What activity did Caroline used to do with her dad?"});
    CHECK(rs.sources == std::vector<std::string>{"turn:00000002"});
    CHECK(b.calls[TemplateId::follow_up] == 0);
    CHECK(b.calls[TemplateId::research_integrate] == 1);
}

TEST_CASE("not enough runs up to the iteration limit") {
    Bench b;
    b.replies[TemplateId::info_check] = [](const LlmRequest&) { return constant(R"({"enough": false})"); };
    b.replies[TemplateId::follow_up] = [](const LlmRequest&) {
        return constant(R"({"new_requests": ["q1", "q2", "q3", "q4", "q5"]})");
    };
    auto rs = b.run();
    REQUIRE(rs.rounds.size() == 2);
    CHECK(rs.rounds[1].queries == std::vector<std::string>{"q1", "q2", "q3"});
    CHECK(rs.rounds[1].retrievals.size() == 3);
    CHECK(b.calls[TemplateId::follow_up] == 1);
    CHECK(b.calls[TemplateId::info_check] == 2);

    b.c.state.config.max_research_iterations = 4;
    b.calls.clear();
    rs = b.run();
    CHECK(rs.rounds.size() == 4);
    CHECK(b.calls[TemplateId::follow_up] == 3);
}

TEST_CASE("integrate failure halts research") {
    Bench b;
    b.replies[TemplateId::research_integrate] = [](const LlmRequest&) { return constant("nope"); };
    const auto rs = b.run();
    CHECK(rs.rounds.size() == 1);
    CHECK(b.calls[TemplateId::info_check] == 0);
    CHECK_FALSE(rs.flags.empty());
    CHECK(rs.summary.empty());
}

TEST_CASE("unknown sources are dropped and flagged") {
    Bench b;
    b.replies[TemplateId::research_integrate] = [](const LlmRequest&) {
        return json{{"content", "x"}, {"sources", {"turn:00000002", "turn:00000099"}}}.dump();
    };
    b.replies[TemplateId::info_check] = [](const LlmRequest&) { return constant(R"({"enough": true})"); };
    const auto rs = b.run();
    CHECK(rs.sources == std::vector<std::string>{"turn:00000002"});
    CHECK(rs.flags.size() == 1);
}

TEST_CASE("info_check outage means not enough, empty follow-ups stop") {
    Bench b;
    b.replies[TemplateId::follow_up] = [](const LlmRequest&) { return constant(R"({"new_requests": []})"); };
    const auto rs = b.run();
    CHECK(rs.rounds.size() == 1);
    CHECK_FALSE(rs.rounds[0].enough);
    CHECK(rs.flags.size() == 2);
}

TEST_CASE("answering") {
    Bench b;
    b.replies[TemplateId::info_check] = [](const LlmRequest&) { return constant(R"({"enough": true})"); };
    const auto rec = ask(b.c.state, "What activity did Caroline used to do with her dad?", b.rig.services());
    CHECK(rec.answer == "horseback riding");
    CHECK_FALSE(rec.abstained);
    CHECK(rec.diagnostics.contains("research"));
    const auto& prompt = b.seen.back();
    REQUIRE(prompt.template_id == TemplateId::working_answer);
    CHECK(prompt.bindings.at("speaker_a") == "Caroline");
    CHECK(prompt.bindings.at("speaker_b") == "Melanie");
    CHECK(prompt.user_text.find("15 July 2023") != std::string::npos);
}

TEST_CASE("abstention without evidence skips the model") {
    Bench b;
    ResearchState empty;
    const auto rec = answer(b.c.state, "zzz qqq", empty, b.rig.services());
    CHECK(rec.abstained);
    CHECK(rec.answer == kAbstention);
    CHECK(b.calls[TemplateId::working_answer] == 0);

    ResearchState some;
    some.summary = "notes";
    b.replies[TemplateId::working_answer] = [](const LlmRequest&) { return constant("   "); };
    CHECK(answer(b.c.state, "zzz", some, b.rig.services()).abstained);
    b.replies.erase(TemplateId::working_answer);
    CHECK(answer(b.c.state, "zzz", some, b.rig.services()).abstained);
}

TEST_CASE("evidence lines") {
    EvidenceCandidate c;
    c.item_id = "turn:00000001";
    c.timestamp = "2023-05-08T13:56:00";
    c.text = "Melanie: hi";
    CHECK(format_evidence({c}) == "[turn:00000001] (2023-05-08T13:56:00) Melanie: hi\n");
}
