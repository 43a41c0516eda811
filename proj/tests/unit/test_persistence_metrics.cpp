#include <doctest.h>

#include <cmath>

#include "dialmem/metrics.hpp"
#include "dialmem/persistence.hpp"
#include "test_support.hpp"

using namespace dialmem;

TEST_CASE("empty conversation round trips byte for byte") {
    const auto s = new_conversation({"Ana", "Ben"}, default_config());
    const auto bytes = snapshot(s);
    CHECK(bytes.back() == '\n');
    CHECK(snapshot(restore(bytes)) == bytes);
}

TEST_CASE("twenty-five turn state round trips with identical retrieval") {
    auto c = testing::load_case("twentyfive_transcript.json", "twentyfive_script.json");
    const auto bytes = snapshot(c.state);
    const auto back = restore(bytes);
    CHECK(snapshot(back) == bytes);
    CHECK(back.graph.nodes().size() == c.state.graph.nodes().size());
    for (const auto* q : {"When did Ava go hiking?", "What does Ava like?", "Why did Ava move?"}) {
        const auto plan = plan_route(q, c.state.config, nullptr);
        const auto a = retrieve(c.state, c.rig.embedder, q, plan, Target::ambiguous);
        const auto b = retrieve(back, c.rig.embedder, q, plan, Target::ambiguous);
        CHECK(to_json(a).dump() == to_json(b).dump());
    }
}

TEST_CASE("restore errors carry a location") {
    const auto bytes = snapshot(new_conversation({"Ana", "Ben"}, default_config()));
    try {
        restore(bytes.substr(0, bytes.size() / 2));
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.where().rfind("byte ", 0) == 0);
    }
    auto doc = json::parse(bytes);
    doc["format_version"] = 2;
    try {
        restore_json(doc);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.where() == "$.format_version");
    }
    doc = json::parse(bytes);
    doc.erase("graph");
    CHECK_THROWS_AS(restore_json(doc), FormatError);
}

TEST_CASE("transcripts") {
    const json doc = {{"participants", {"Ana", "Ben"}},
                      {"sessions",
                       {{{"session_id", "s1"},
                         {"datetime", "2024-01-01T10:00:00"},
                         {"turns", {{{"speaker", "Ana"}, {"text", "hi"}},
                                    {{"speaker", "Ben"}, {"text", "yo"}, {"datetime", "2024-01-01T10:05:00"}}}}}}}};
    const auto t = parse_transcript(doc);
    CHECK(t.sessions[0].turns[0].datetime == "2024-01-01T10:00:00");
    CHECK(t.sessions[0].turns[1].datetime == "2024-01-01T10:05:00");
    CHECK(parse_transcript(to_json(t)).sessions.size() == 1);

    auto bad = doc;
    bad["sessions"][0]["turns"][1]["speaker"] = "Cid";
    try {
        parse_transcript(bad);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.where() == "sessions[0].turns[1].speaker");
    }
    bad = doc;
    bad["sessions"][0]["turns"][1]["datetime"] = "2023-01-01T00:00:00";
    CHECK_THROWS_AS(parse_transcript(bad), FormatError);
}

TEST_CASE("questions") {
    const auto q = parse_questions(json{{"items",
                                        {{{"question", "Pick"}, {"category", "choice"}, {"choices", {"a", "b"}},
                                          {"reference_answer", "b"}},
                                         {{"question", "Free"}}}}});
    CHECK(q.items[0].category == QuestionCategory::choice);
    CHECK(q.items[1].category == QuestionCategory::uncategorized);
    CHECK_FALSE(q.items[1].reference_answer.has_value());
    CHECK_THROWS_AS(parse_questions(json{{"items", {{{"question", "Pick"}, {"category", "choice"}, {"choices", {"a"}}}}}}),
                    FormatError);
    CHECK_THROWS_AS(parse_questions(json{{"items", {{{"question", "x"}, {"category", "trivia"}}}}}), FormatError);
}

TEST_CASE("locomo samples") {
    CHECK(parse_locomo_datetime("1:56 pm on 8 May, 2023") == "2023-05-08T13:56:00");
    CHECK(parse_locomo_datetime("12:05 am on 1 Jan, 2024") == "2024-01-01T00:05:00");
    CHECK_FALSE(parse_locomo_datetime("tuesday").has_value());

    const auto path = testing::fixture("locomo_mini.json");
    const auto t = load_transcript(path);
    CHECK(t.participants == std::vector<ParticipantId>{"Caroline", "Melanie"});
    REQUIRE(t.sessions.size() == 2);
    CHECK(t.sessions[0].turns.size() == 2);
    CHECK(t.sessions[1].datetime == "2023-06-27T10:37:00");
    const auto q = load_questions(path);
    REQUIRE(q.items.size() == 4);
    CHECK(q.items[0].category == QuestionCategory::temporal);
    CHECK(q.items[1].category == QuestionCategory::single_hop);
    CHECK(q.items[2].category == QuestionCategory::open_domain);
    CHECK(q.items[2].reference_answer == "2023");
    CHECK(q.items[3].category == QuestionCategory::multi_hop);
}

TEST_CASE("config overlay") {
    CHECK(config_from_json(json::object()) == default_config());
    CHECK(config_from_json(to_json(default_config())) == default_config());
    const auto c = config_from_json(json{{"top_k", 5}, {"edge_priors", {{"supports", 0.5}}}});
    CHECK(c.top_k == 5);
    CHECK(c.edge_priors.at(EdgeType::supports) == 0.5);
    CHECK(c.edge_priors.at(EdgeType::mentions) == 0.75);
    CHECK_THROWS_AS(config_from_json(json{{"topk", 5}}), InputError);
    CHECK_THROWS_AS(config_from_json(json{{"working_capacity", 3}}), InputError);
}

TEST_CASE("answer normalization") {
    CHECK(metrics::normalize_answer("The  Horseback-Riding, a lot!") == "horsebackriding lot");
    CHECK(metrics::answer_tokens("an apple") == std::vector<std::string>{"apple"});
}

TEST_CASE("token F1") {
    CHECK(metrics::token_f1("a red bike", "red bike fast") == doctest::Approx(0.8));
    CHECK(metrics::token_f1("x", "y") == 0.0);
    CHECK(metrics::token_f1("", "") == 1.0);
    CHECK(metrics::token_f1("the", "bike") == 0.0);
    CHECK(metrics::token_f1("red bike fast", "a red bike") == metrics::token_f1("a red bike", "red bike fast"));
}

TEST_CASE("BLEU-1") {
    CHECK(metrics::bleu1("red", "red bike fast") == doctest::Approx(std::exp(-2.0)));
    CHECK(metrics::bleu1("red bike fast", "red bike fast") == 1.0);
    CHECK(metrics::bleu1("cat cat", "cat") == doctest::Approx(0.5));
    CHECK(metrics::bleu1("", "cat") == 0.0);
}

TEST_CASE("choice matching") {
    CHECK(metrics::match_choice("The Beach.", {"mountains", "beach"}) == 1);
    CHECK(metrics::match_choice("forest", {"mountains", "beach"}) == -1);
}

TEST_CASE("evaluation report is stable") {
    auto c = testing::load_case("case_one_transcript.json", "case_one_script.json");
    const auto qs = load_questions(testing::fixture("case_one_questions.json"));
    const auto r1 = evaluate(c.state, qs, c.rig.services());
    const auto r2 = evaluate(c.state, qs, c.rig.services());
    REQUIRE(r1.records.size() == 1);
    CHECK(r1.records[0].prediction == "horseback riding");
    CHECK(r1.records[0].f1 == 1.0);
    CHECK(r1.overall.f1 == 1.0);
    CHECK(report_hash(r1) == report_hash(r2));
}
