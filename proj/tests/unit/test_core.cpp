#include <doctest.h>

#include "dialmem/core.hpp"
#include "dialmem/graph.hpp"

using namespace dialmem;

TEST_CASE("default config carries the documented defaults") {
    const auto c = default_config();
    CHECK(c.working_capacity == 20);
    CHECK(c.consolidation_segment == 5);
    CHECK(c.top_k == 10);
    CHECK(c.fact_drop_threshold == 0.1);
    CHECK(c.base_hop_depth == 1);
    CHECK(c.base_seed_count == 2);
    CHECK(c.hop_decay == 0.85);
    CHECK(c.max_research_iterations == 2);
    CHECK(c.fusion == FusionWeights{0.7, 0.1, 0.1, 0.1});
    CHECK(c.refine_threshold == 0.75);
    CHECK(c.edge_priors.at(EdgeType::mentions) == 0.75);
    CHECK(c.edge_priors.at(EdgeType::supports) == 0.90);
    CHECK(c.edge_priors.at(EdgeType::same_topic) == 0.55);
    CHECK(c.edge_priors.at(EdgeType::temporal_next) == 0.70);
    CHECK(c.edge_priors.at(EdgeType::speaker_related) == 0.60);
    CHECK(c.edge_priors == default_retrieval_priors());
    CHECK_NOTHROW(validate(c));
}

TEST_CASE("validate names the broken field") {
    auto c = default_config();
    c.consolidation_segment = 25;
    CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("working_capacity"), InputError);
    c = default_config();
    c.edge_priors.erase(EdgeType::supports);
    CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("supports"), InputError);
    c = default_config();
    c.hop_decay = 1.5;
    CHECK_THROWS_AS(validate(c), InputError);
    c = default_config();
    c.top_k = 0;
    CHECK_THROWS_AS(validate(c), InputError);
}

TEST_CASE("timestamps") {
    CHECK(parse_timestamp("1970-01-01") == 0);
    CHECK(parse_timestamp("1970-01-01T00:01:00") == 60);
    CHECK(parse_timestamp("2023-05-08T13:56:00Z") == 1683554160);
    CHECK(parse_timestamp("2023-05-08T15:56:00+02:00") == 1683554160);
    CHECK(parse_timestamp("2023-05-08T13:56") == 1683554160);
    CHECK(parse_timestamp("2024-02-29T00:00:00").has_value());
    CHECK_FALSE(parse_timestamp("2023-02-29").has_value());
    CHECK_FALSE(parse_timestamp("yesterday").has_value());
    CHECK_FALSE(parse_timestamp("").has_value());
    CHECK(format_timestamp(1683554160) == "2023-05-08T13:56:00");
}

TEST_CASE("enum names round trip") {
    for (EdgeType t : kAllEdgeTypes) CHECK(parse_edge_type(to_string(t)) == t);
    for (auto a : {Attitude::Positive, Attitude::Negative, Attitude::Mixed}) CHECK(parse_attitude(to_string(a)) == a);
    CHECK(parse_attitude("positive") == Attitude::Positive);
    CHECK_FALSE(parse_edge_type("knows").has_value());
    CHECK(parse_planner_mode("rule_only") == PlannerMode::rule_only);
}
