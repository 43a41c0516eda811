// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

#include "dialmem/metrics.hpp"
#include "dialmem/persistence.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace dialmem;

namespace {

struct Failure {
    std::string what;
};

void expect(bool ok, const std::string& what) {
    if (!ok) throw Failure{what};
}

bool close(double a, double b, double tol = 1e-12) { return std::fabs(a - b) <= tol; }

// 1 ---------------------------------------------------------------------------
void configuration_fidelity() {
    const auto c = default_config();
    expect(c.working_capacity == 20, "working capacity");
    expect(c.consolidation_segment == 5, "consolidation segment");
    expect(c.top_k == 10, "top_k");
    expect(c.fact_drop_threshold == 0.1, "score-drop threshold");
    expect(c.base_hop_depth == 1, "hop depth");
    expect(c.base_seed_count == 2, "seed count");
    expect(c.hop_decay == 0.85, "hop decay");
    expect(c.refine_threshold == 0.75, "refine threshold");
    expect(c.fusion.alpha == 0.7 && c.fusion.beta == 0.1 && c.fusion.gamma == 0.1 && c.fusion.delta == 0.1,
           "fusion weights");
    const std::map<std::string, double> priors{{"mentions", 0.75},      {"supports", 0.90},
                                               {"same_topic", 0.55},    {"temporal_next", 0.70},
                                               {"speaker_related", 0.60}};
    expect(c.edge_priors.size() == priors.size(), "edge prior count");
    for (const auto& [name, v] : priors) {
        const auto t = parse_edge_type(name);
        expect(t && c.edge_priors.at(*t) == v, "edge prior " + name);
    }
    expect(c.max_research_iterations == 2, "research iterations");
}

// 2 ---------------------------------------------------------------------------
void graph_expansion_oracle() {
    std::mt19937_64 rng(20240201);
    const auto priors = default_retrieval_priors();
    const ParticipantId owners[] = {"Ana", "Ben"};
    std::size_t reached = 0;
    for (int trial = 0; trial < 200; ++trial) {
        MemoryGraph g;
        const int n = std::uniform_int_distribution<int>(1, 12)(rng);
        for (int i = 0; i < n; ++i) {
            GraphNode node;
            node.kind = NodeKind::topic;
            node.owner = owners[rng() % 2];
            node.payload = "n" + std::to_string(i);
            g.add_node(node);
        }
        const int m = std::uniform_int_distribution<int>(0, 3 * n)(rng);
        for (int i = 0; i < m; ++i) {
            const auto a = static_cast<NodeId>(rng() % n), b = static_cast<NodeId>(rng() % n);
            if (a != b) g.add_edge({a, b, kAllEdgeTypes[rng() % kAllEdgeTypes.size()], 0.5});
        }
        std::vector<Seed> seeds;
        for (int s = std::uniform_int_distribution<int>(1, std::min(3, n))(rng); s > 0; --s) {
            seeds.push_back({static_cast<NodeId>(rng() % n), std::uniform_real_distribution<double>(1e-6, 1.0)(rng)});
        }
        const int depth = std::uniform_int_distribution<int>(0, 3)(rng);
        const double decay = std::uniform_real_distribution<double>(0.1, 1.0)(rng);
        std::optional<ParticipantId> owner;
        if (rng() % 3 == 0) owner = owners[rng() % 2];

        const auto got = expand(g, seeds, depth, priors, decay, owner);
        const auto want = oracle::brute_expand(g, seeds, depth, priors, decay, owner);
        expect(got.nodes.size() == want.size(), "trial " + std::to_string(trial) + ": node set size");
        for (const auto& x : got.nodes) {
            const auto it = want.find(x.node);
            expect(it != want.end(), "trial " + std::to_string(trial) + ": unexpected node");
            expect(close(x.score, it->second), "trial " + std::to_string(trial) + ": score");
            reached += x.hops > 0;
        }
    }
    expect(reached > 200, "random graphs too sparse to exercise expansion");
}

// 3 ---------------------------------------------------------------------------
void fusion_oracle() {
    std::mt19937_64 rng(77);
    constexpr std::int64_t kJan1 = 1704067200;  // 2024-01-01T00:00:00Z
    for (int trial = 0; trial < 500; ++trial) {
        const int n = std::uniform_int_distribution<int>(1, 20)(rng);
        std::vector<EvidenceCandidate> pool(static_cast<std::size_t>(n));
        std::vector<oracle::FusionItem> items(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            auto& c = pool[static_cast<std::size_t>(i)];
            auto& o = items[static_cast<std::size_t>(i)];
            c.item_id = o.id = "item:" + std::to_string(i);
            if (rng() % 4 != 0) {
                const int day = static_cast<int>(rng() % 3), hour = static_cast<int>(rng() % 3);
                char ts[32];
                std::snprintf(ts, sizeof ts, "2024-01-%02dT%02d:00:00", day + 1, hour);
                c.timestamp = ts;
                o.epoch = kJan1 + day * 86400 + hour * 3600;
            }
            if (rng() % 2) c.source_turn = o.turn = static_cast<TurnId>(1 + rng() % 4);
        }
        std::vector<std::size_t> order(pool.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<EvidenceCandidate> base, graph;
        for (std::size_t i : order) {
            if (rng() % 3 != 0) {
                items[i].rank_base = static_cast<int>(base.size());
                base.push_back(pool[i]);
            }
        }
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t i : order) {
            if (!items[i].rank_base || rng() % 2) {
                items[i].rank_graph = static_cast<int>(graph.size());
                graph.push_back(pool[i]);
            }
        }
        std::set<std::string> support;
        for (auto& it : items) {
            if (rng() % 3 == 0) {
                it.fact = true;
                support.insert(it.id);
            }
        }
        FusionWeights w;
        if (trial % 2) {
            w = {std::uniform_real_distribution<double>(0.9, 1.0)(rng), std::uniform_real_distribution<double>(0, 0.08)(rng),
                 std::uniform_real_distribution<double>(0, 0.03)(rng), std::uniform_real_distribution<double>(0, 0.03)(rng)};
        }
        const int k = std::uniform_int_distribution<int>(1, 25)(rng);
        const auto got = fuse(base, graph, support, w, k);
        const auto want = oracle::direct_fusion(items, w, k);
        const auto tag = "trial " + std::to_string(trial);
        expect(got.size() == want.size(), tag + ": length");
        for (std::size_t i = 0; i < got.size(); ++i) {
            expect(got[i].item_id == want[i].id, tag + ": order at " + std::to_string(i));
            expect(close(got[i].fused_score, want[i].score), tag + ": score at " + std::to_string(i));
        }
    }
}

// 4 ---------------------------------------------------------------------------
void fifo_model_check() {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 1000; ++trial) {
        const int cap = std::uniform_int_distribution<int>(1, 25)(rng);
        const int seg = std::uniform_int_distribution<int>(1, cap)(rng);
        const int len = std::uniform_int_distribution<int>(0, 80)(rng);
        ParticipantBundle b;
        b.owner = "Ana";
        b.working.capacity = cap;
        oracle::FifoModel model{cap, seg, {}};
        for (TurnId t = 1; t <= len; ++t) {
            NormalizedRecord r;
            r.source_turn = t;
            r.speaker = "Ana";
            r.summary = "s";
            r.topic = {"general"};
            const auto got = write_working(b, std::move(r), seg);
            const auto want = model.push(t);
            const auto tag = "trial " + std::to_string(trial) + " turn " + std::to_string(t);
            expect(got.has_value() == want.has_value(), tag + ": segment boundary");
            if (got) {
                std::vector<TurnId> ids;
                for (const auto& x : *got) ids.push_back(x.source_turn);
                expect(ids == *want, tag + ": segment contents");
            }
            std::vector<TurnId> q;
            for (const auto& x : b.working.queue) q.push_back(x.source_turn);
            expect(q == std::vector<TurnId>(model.queue.begin(), model.queue.end()), tag + ": queue contents");
        }
    }
}

// 5 ---------------------------------------------------------------------------
void clip_soundness() {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> wide(-10.0, 10.0);
    const auto inside = [](const RoutePlan& p) {
        return p.fusion.alpha >= 0.9 && p.fusion.alpha <= 1.0 && p.fusion.beta >= 0.0 && p.fusion.beta <= 0.08 &&
               p.fusion.gamma >= 0.0 && p.fusion.gamma <= 0.03 && p.fusion.delta >= 0.0 && p.fusion.delta <= 0.03 &&
               p.graph_topn >= 1 && p.graph_topn <= 5 && p.hop_k >= 0 && p.hop_k <= 3 && p.confidence >= 0.0 &&
               p.confidence <= 1.0 && (p.use_graph || p.use_baseline);
    };
    const auto config = default_config();
    const std::string q = "Tell me more.";
    auto base = plan_rule(q, detect_cues(q), config);
    base.fusion = {0.95, 0.05, 0.01, 0.01};
    for (int trial = 0; trial < 1000; ++trial) {
        json p = {{"use_graph", rng() % 2 == 0},   {"use_baseline", rng() % 2 == 0},
                  {"graph_topn", wide(rng)},       {"hop_k", static_cast<int>(wide(rng))},
                  {"fusion_alpha", wide(rng)},     {"fusion_beta", wide(rng)},
                  {"fusion_gamma", wide(rng)},     {"fusion_delta", wide(rng)},
                  {"confidence", wide(rng)}};
        if (trial % 10 == 0) p["fusion_beta"] = "high";
        const auto tag = "proposal " + std::to_string(trial);
        if (trial % 2) {
            const auto out = apply_refinement(base, p);
            if (trial % 10 == 0) {
                expect(!out.has_value(), tag + ": mistyped proposal accepted");
                continue;
            }
            expect(out.has_value() && inside(*out), tag + ": outside intervals");
        } else {
            testing::Rig rig(std::make_shared<FunctionTransport>([&](const LlmRequest&) { return p.dump(); }));
            const auto out = refine_plan(q, base, *rig.gateway);
            expect(inside(out), tag + ": refined plan outside intervals");
        }
    }
}

// 6 ---------------------------------------------------------------------------
void cue_gating_table() {
    const std::map<CueCategory, std::vector<std::string>> lists = {
        {CueCategory::temporal, {"when", "date", "year", "month", "time", "last", "ago", "before", "after"}},
        {CueCategory::relation, {"why", "because", "cause", "how", "relationship", "connect", "between"}},
        {CueCategory::attribute, {"prefer", "like", "favorite", "personality", "trait", "attribute"}},
        {CueCategory::single_hop, {"who", "what", "where", "which", "name", "did", "does", "is", "was"}},
    };
    for (const auto& [cat, words] : lists) {
        const auto got = cue_words(cat);
        expect(got.size() == words.size(), std::string(to_string(cat)) + ": list length");
        for (std::size_t i = 0; i < words.size(); ++i) {
            expect(got[i] == words[i], std::string(to_string(cat)) + ": word " + words[i]);
            const auto cues = detect_cues("xx " + words[i] + " yy");
            const bool hit = cat == CueCategory::temporal    ? cues.temporal
                             : cat == CueCategory::relation  ? cues.relation
                             : cat == CueCategory::attribute ? cues.attribute
                                                             : cues.single_hop;
            expect(hit, "detector misses " + words[i]);
        }
    }
    const auto table = parse_document(read_file(testing::fixture("cue_table.json")));
    expect(table["items"].size() == 20, "cue table has 20 rows");
    const auto config = default_config();
    for (const auto& row : table["items"]) {
        const auto q = row["question"].get<std::string>();
        const auto cues = detect_cues(q);
        const bool want = row["use_graph"].get<bool>();
        expect((cues.temporal || cues.relation) == want, "fixture label disagrees with the rule: " + q);
        expect(plan_rule(q, cues, config).use_graph == want, "use_graph: " + q);
        expect(plan_route(q, config, nullptr).use_graph == want, "use_graph via plan_route: " + q);
    }
}

// 7 ---------------------------------------------------------------------------
void scripted_end_to_end() {
    std::set<std::string> hashes_one, hashes_two;
    for (int run = 0; run < 3; ++run) {
        auto one = testing::load_case("case_one_transcript.json", "case_one_script.json");
        const auto r1 = evaluate(one.state, load_questions(testing::fixture("case_one_questions.json")),
                                 one.rig.services());
        expect(r1.records.size() == 1, "case one question count");
        expect(r1.records[0].prediction == "horseback riding", "case one answer: " + r1.records[0].prediction);
        expect(metrics::token_f1(r1.records[0].prediction, *r1.records[0].reference) == 1.0, "case one F1");
        hashes_one.insert(report_hash(r1));

        auto two = testing::load_case("case_two_transcript.json", "case_two_script.json");
        const auto r2 = evaluate(two.state, load_questions(testing::fixture("case_two_questions.json")),
                                 two.rig.services());
        expect(r2.records.size() == 1, "case two question count");
        expect(r2.records[0].prediction == kAbstention, "case two answer: " + r2.records[0].prediction);
        expect(r2.records[0].abstained, "case two abstained");
        hashes_two.insert(report_hash(r2));
    }
    expect(hashes_one.size() == 1 && hashes_two.size() == 1, "report hash differs across runs");
}

// 8 ---------------------------------------------------------------------------
// Unigram precision with clipped counts times brevity penalty, spelled out.
double bleu1_reference(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
    if (cand.empty()) return 0.0;
    std::map<std::string, int> rc, cc;
    for (const auto& t : ref) ++rc[t];
    for (const auto& t : cand) ++cc[t];
    int clipped = 0;
    for (const auto& [t, n] : cc) clipped += std::min(n, rc[t]);
    const double p = static_cast<double>(clipped) / static_cast<double>(cand.size());
    const double c = static_cast<double>(cand.size()), r = static_cast<double>(ref.size());
    const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
    return bp * p;
}

void metric_goldens() {
    expect(close(metrics::token_f1("15 July 2023", "July 2023"), 0.8), "token_f1 golden");
    expect(metrics::bleu1("July 2023", "July 2023") == 1.0, "bleu1 identity");
    expect(close(metrics::bleu1("cat cat", "cat"), bleu1_reference({"cat", "cat"}, {"cat"})), "bleu1 clipping");
    expect(close(metrics::bleu1("cat cat cat dog", "cat dog dog bird mouse"),
                 bleu1_reference({"cat", "cat", "cat", "dog"}, {"cat", "dog", "dog", "bird", "mouse"})),
           "bleu1 clipping with brevity penalty");
}

// 9 ---------------------------------------------------------------------------
void persistence_round_trip() {
    const std::vector<std::string> queries = {"When did Ana go hiking?", "What does Ben like?",
                                              "Why jazz and the lake?", "bread piano"};
    HashEmbedder emb;
    for (int trial = 0; trial < 100; ++trial) {
        const auto state = testing::random_state(1000 + static_cast<std::uint64_t>(trial), 4 + trial % 12);
        const auto bytes = snapshot(state);
        const auto back = restore(bytes);
        const auto tag = "trial " + std::to_string(trial);
        expect(snapshot(back) == bytes, tag + ": snapshot not canonical");
        for (const auto& q : queries) {
            const auto target = resolve_target(q, state.participants[0], state.participants[1]).target;
            for (RouteMode mode : {RouteMode::semantic, RouteMode::graph}) {
                const auto plan = apply_mode(plan_route(q, state.config, nullptr), mode);
                const auto a = to_json(retrieve(state, emb, q, plan, target)).dump();
                const auto b = to_json(retrieve(back, emb, q, plan, target)).dump();
                expect(a == b, tag + ": retrieval differs for " + q);
            }
        }
    }
}

// 10 --------------------------------------------------------------------------
void research_loop_budget() {
    auto base = testing::load_case("case_one_transcript.json", "case_one_script.json");
    base.state.config.planner_mode = PlannerMode::rule_only;
    std::mt19937_64 rng(10);
    const auto run = [&](ConversationState& st, std::function<bool()> enough) {
        auto t = std::make_shared<FunctionTransport>([&](const LlmRequest& r) -> std::string {
            switch (r.template_id) {
                case TemplateId::research_integrate:
                    return json{{"content", "notes"}, {"sources", json::array()}}.dump();
                case TemplateId::info_check: return json{{"enough", enough()}}.dump();
                case TemplateId::follow_up: return R"({"new_requests": ["what else", "and then"]})";
                default: return "";
            }
        });
        testing::Rig rig(t);
        return research(st, "What did Caroline do with her dad?", rig.services());
    };
    for (int trial = 0; trial < 200; ++trial) {
        auto st = base.state;
        st.config.max_research_iterations = std::uniform_int_distribution<int>(1, 5)(rng);
        const auto rs = run(st, [&] { return rng() % 3 == 0; });
        expect(static_cast<int>(rs.rounds.size()) <= st.config.max_research_iterations,
               "trial " + std::to_string(trial) + ": rounds exceed budget");
        for (std::size_t i = 0; i + 1 < rs.rounds.size(); ++i) expect(!rs.rounds[i].enough, "continued after enough");
    }
    for (int trial = 0; trial < 20; ++trial) {
        auto st = base.state;
        st.config.max_research_iterations = 2;
        const auto rs = run(st, [] { return false; });
        expect(rs.rounds.size() == 2, "L=2 with enough=false ran " + std::to_string(rs.rounds.size()) + " rounds");
    }
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<void()> body;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "configuration fidelity", 1, configuration_fidelity},
        {2, "graph expansion oracle", 10, graph_expansion_oracle},
        {3, "fusion oracle", 5, fusion_oracle},
        {4, "FIFO consolidation model", 10, fifo_model_check},
        {5, "refinement clip soundness", 2, clip_soundness},
        {6, "cue lists and gating table", 1, cue_gating_table},
        {7, "scripted end-to-end golden", 30, scripted_end_to_end},
        {8, "metric goldens", 1, metric_goldens},
        {9, "persistence round trip", 20, persistence_round_trip},
        {10, "research loop budget", 5, research_loop_budget},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        std::string detail;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.body();
        } catch (const Failure& f) {
            detail = f.what;
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (detail.empty() && secs > c.budget_s) {
            std::ostringstream os;
            os << "over budget (" << c.budget_s << " s)";
            detail = os.str();
        }
        const bool ok = detail.empty();
        failed += !ok;
        std::printf("%s %2d %-30s %8.3f s%s%s\n", ok ? "PASS" : "FAIL", c.id, c.name, secs, ok ? "" : "  ",
                    detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
