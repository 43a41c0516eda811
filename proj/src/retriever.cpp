#include "dialmem/retriever.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>
#include <tuple>

#include "dialmem/kernels.hpp"
#include "dialmem/text.hpp"

namespace dialmem {

namespace {

EvidenceCandidate message_candidate(const ConversationState& state, TurnId turn, Channel origin, double score) {
    const auto& u = state.utterance(turn);
    EvidenceCandidate c;
    c.item_id = message_item_id(turn);
    c.origins = {origin};
    c.text = u.speaker + ": " + u.text;
    c.source_turn = turn;
    c.timestamp = u.timestamp;
    c.similarity = score;
    return c;
}

// Appends `c` unless its id is already present, in which case origins merge
// and the better similarity is kept.
void merge_into(std::vector<EvidenceCandidate>& list, std::map<std::string, std::size_t>& index,
                EvidenceCandidate c) {
    if (auto it = index.find(c.item_id); it != index.end()) {
        auto& have = list[it->second];
        have.origins.insert(c.origins.begin(), c.origins.end());
        have.similarity = std::max(have.similarity, c.similarity);
        return;
    }
    index.emplace(c.item_id, list.size());
    list.push_back(std::move(c));
}

void sort_by_similarity(std::vector<EvidenceCandidate>& v) {
    std::stable_sort(v.begin(), v.end(), [](const EvidenceCandidate& a, const EvidenceCandidate& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.item_id < b.item_id;
    });
}

using RecencyKey = std::tuple<bool, std::int64_t, bool, TurnId>;

std::optional<RecencyKey> recency_key(const EvidenceCandidate& c) {
    const auto ts = parse_timestamp(c.timestamp);
    if (!ts && !c.source_turn) return std::nullopt;
    return RecencyKey{ts.has_value(), ts.value_or(0), c.source_turn.has_value(), c.source_turn.value_or(0)};
}

// Newer first, then item id ascending.
bool newer(const EvidenceCandidate& a, const EvidenceCandidate& b) {
    const auto ka = recency_key(a), kb = recency_key(b);
    if (ka != kb) return ka > kb;  // nullopt sorts below any key
    return a.item_id < b.item_id;
}

std::vector<KeyedVector> keyed(const auto& items, auto&& id_of, auto&& vec_of) {
    std::vector<KeyedVector> out;
    for (const auto& it : items) out.push_back({id_of(it), vec_of(it)});
    return out;
}

}  // namespace

std::string_view to_string(Channel c) {
    switch (c) {
        case Channel::attr: return "attr";
        case Channel::fact: return "fact";
        case Channel::topic: return "topic";
        case Channel::keyword: return "keyword";
        case Channel::graph: return "graph";
    }
    return "graph";
}

std::string message_item_id(TurnId turn) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "turn:%08lld", static_cast<long long>(turn));
    return buf;
}

BaselineOutput baseline_retrieve(const ConversationState& state, const ParticipantBundle& bundle,
                                 const EmbeddingVector& query, int k, RetrievalDiagnostics* diag) {
    if (k < 1) throw InputError("baseline_retrieve: k must be >= 1");
    BaselineOutput out;
    std::vector<EvidenceCandidate> pool;
    std::map<std::string, std::size_t> index;
    const auto& owner = bundle.owner;

    // Persona channel: preference descriptors and aspect summaries.
    std::map<std::string, std::string> persona_text;
    std::vector<KeyedVector> persona;
    for (const auto& d : bundle.persona.preference_descriptors) {
        const auto id = "persona:" + owner + ":" + (d.source_topics.empty() ? d.text : d.source_topics.front());
        persona.push_back({id, d.embedding});
        persona_text[id] = d.text;
    }
    for (const auto& [name, a] : bundle.persona.aspect_summaries) {
        const auto id = "aspect:" + owner + ":" + name;
        persona.push_back({id, a.embedding});
        persona_text[id] = name + ": " + a.text;
    }
    if (!persona.empty()) {
        const auto hits = top_k_similar(query, persona, k);
        if (diag) diag->attr_hits += hits.size();
        for (const auto& h : hits) {
            EvidenceCandidate c;
            c.item_id = h.id;
            c.origins = {Channel::attr};
            c.text = persona_text[h.id];
            c.similarity = h.score;
            merge_into(pool, index, std::move(c));
        }
    }

    const auto& facts = bundle.episodic.facts;
    if (!facts.empty()) {
        const auto items = keyed(facts, [](const auto& p) { return p.first; },
                                 [](const auto& p) { return p.second.embedding; });
        const auto hits = top_k_similar(query, items, k);
        if (diag) diag->fact_hits += hits.size();
        for (const auto& h : hits) {
            const auto& e = facts.at(h.id);
            out.fact_hits.push_back({h.id, h.score});
            EvidenceCandidate c;
            c.item_id = "fact:" + owner + ":" + h.id;
            c.origins = {Channel::fact};
            c.text = e.text;
            if (!e.supporting_turns.empty()) c.source_turn = e.supporting_turns.back();
            c.timestamp = e.updated_at;
            c.similarity = h.score;
            merge_into(pool, index, std::move(c));
        }
    }

    const auto& topics = bundle.episodic.topic_summaries;
    if (!topics.empty()) {
        const auto items = keyed(topics, [](const auto& p) { return p.first; },
                                 [](const auto& p) { return p.second.embedding; });
        const auto hits = top_k_similar(query, items, k);
        if (diag) diag->topic_hits += hits.size();
        for (const auto& h : hits) {
            for (TurnId t : topics.at(h.id).message_links) {
                if (state.has_turn(t)) merge_into(pool, index, message_candidate(state, t, Channel::topic, h.score));
            }
        }
    }

    sort_by_similarity(pool);
    if (pool.size() > static_cast<std::size_t>(k)) pool.resize(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i].rank_base = static_cast<int>(i);
    out.ranked = std::move(pool);
    return out;
}

int score_drop_cutoff(const std::vector<FactHit>& hits, double tau) {
    if (hits.empty()) return -1;
    for (std::size_t i = 0; i + 1 < hits.size(); ++i) {
        if (hits[i].score - hits[i + 1].score > tau) return static_cast<int>(i);
    }
    return static_cast<int>(hits.size()) - 1;
}

std::vector<EvidenceCandidate> reactivate_context(const ConversationState& state, const ParticipantBundle& bundle,
                                                  const std::vector<FactHit>& hits, double tau) {
    std::vector<EvidenceCandidate> out;
    std::map<std::string, std::size_t> index;
    const int cut = score_drop_cutoff(hits, tau);
    for (int i = 0; i <= cut; ++i) {
        const auto& h = hits[static_cast<std::size_t>(i)];
        const auto it = bundle.episodic.facts.find(h.key);
        if (it == bundle.episodic.facts.end()) continue;
        for (TurnId t : it->second.supporting_turns) {
            if (state.has_turn(t)) merge_into(out, index, message_candidate(state, t, Channel::fact, h.score));
        }
    }
    return out;
}

std::vector<EvidenceCandidate> keyword_backoff(const ConversationState& state, const ParticipantBundle& bundle,
                                               std::string_view question, int k) {
    std::set<std::string> words;
    for (auto& t : text::content_tokens(question)) words.insert(std::move(t));
    std::map<TurnId, int> counts;
    for (const auto& w : words) {
        const auto it = bundle.episodic.word_index.find(w);
        if (it == bundle.episodic.word_index.end()) continue;
        for (TurnId t : it->second) ++counts[t];
    }
    std::vector<std::pair<TurnId, int>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first > b.first;
    });
    std::vector<EvidenceCandidate> out;
    for (const auto& [turn, n] : ranked) {
        if (static_cast<int>(out.size()) >= k) break;
        if (!state.has_turn(turn)) continue;
        out.push_back(message_candidate(state, turn, Channel::keyword, static_cast<double>(n)));
    }
    return out;
}

std::vector<EvidenceCandidate> graph_retrieve(const ConversationState& state, const EmbeddingVector& query,
                                              const RoutePlan& plan, const std::optional<ParticipantId>& owner_filter,
                                              RetrievalDiagnostics* diag) {
    if (!plan.use_graph) throw InputError("graph_retrieve called with a plan that disables the graph");
    if (diag) {
        diag->graph_read = true;
        diag->owner_filter = owner_filter;
    }
    const auto& g = state.graph;
    if (g.empty()) return {};

    std::vector<const EmbeddingVector*> vecs;
    vecs.reserve(g.nodes().size());
    for (const auto& n : g.nodes()) vecs.push_back(&n.embedding);
    const auto scores = kernels::similarity_scores(query, vecs);
    std::vector<NodeId> order(scores.size());
    for (NodeId i = 0; i < order.size(); ++i) order[i] = i;
    const auto topn = std::min<std::size_t>(static_cast<std::size_t>(plan.graph_topn), order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(topn), order.end(),
                      [&](NodeId a, NodeId b) {
                          if (scores[a] != scores[b]) return scores[a] > scores[b];
                          return a < b;
                      });
    std::vector<Seed> seeds;
    for (std::size_t i = 0; i < topn; ++i) {
        seeds.push_back({order[i], std::clamp(scores[order[i]], 1e-6, 1.0)});
    }
    if (diag) diag->graph_seeds = seeds;

    const auto expanded = expand(g, seeds, plan.hop_k, effective_priors(plan, state.config), state.config.hop_decay,
                                 owner_filter);
    std::vector<EvidenceCandidate> out;
    std::map<std::string, std::size_t> index;
    for (const auto& x : expanded.nodes) {
        const auto& n = g.node(x.node);
        EvidenceCandidate c;
        if (n.source_turn && state.has_turn(*n.source_turn)) {
            c = message_candidate(state, *n.source_turn, Channel::graph, x.score);
        } else {
            c.item_id = "node:" + std::to_string(n.id);
            c.origins = {Channel::graph};
            c.text = n.payload;
            c.timestamp = n.timestamp;
            c.similarity = x.score;
        }
        if (index.count(c.item_id)) continue;  // an earlier node already claimed this message
        merge_into(out, index, std::move(c));
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i].rank_graph = static_cast<int>(i);
    if (diag) diag->graph_hits = out.size();
    return out;
}

std::vector<double> recency_scores(const std::vector<EvidenceCandidate>& candidates) {
    std::vector<std::size_t> timed;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (recency_key(candidates[i])) timed.push_back(i);
    }
    std::sort(timed.begin(), timed.end(),
              [&](std::size_t a, std::size_t b) { return newer(candidates[a], candidates[b]); });
    std::vector<double> out(candidates.size(), 0.0);
    const auto n = timed.size();
    for (std::size_t pos = 0; pos < n; ++pos) {
        out[timed[pos]] = n == 1 ? 1.0 : 1.0 - static_cast<double>(pos) / static_cast<double>(n - 1);
    }
    return out;
}

std::vector<EvidenceCandidate> fuse(const std::vector<EvidenceCandidate>& base,
                                    const std::vector<EvidenceCandidate>& graph,
                                    const std::set<std::string>& fact_support, const FusionWeights& weights, int k) {
    if (k < 1) throw InputError("fuse: k must be >= 1");
    std::vector<EvidenceCandidate> merged;
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (index.count(base[i].item_id)) continue;
        auto c = base[i];
        c.rank_base = static_cast<int>(i);
        c.rank_graph.reset();
        index.emplace(c.item_id, merged.size());
        merged.push_back(std::move(c));
    }
    for (std::size_t i = 0; i < graph.size(); ++i) {
        const auto& g = graph[i];
        if (auto it = index.find(g.item_id); it != index.end()) {
            auto& have = merged[it->second];
            if (!have.rank_graph) have.rank_graph = static_cast<int>(i);
            have.origins.insert(g.origins.begin(), g.origins.end());
            continue;
        }
        auto c = g;
        c.rank_base.reset();
        c.rank_graph = static_cast<int>(i);
        index.emplace(c.item_id, merged.size());
        merged.push_back(std::move(c));
    }

    const auto recency = recency_scores(merged);
    for (std::size_t i = 0; i < merged.size(); ++i) {
        auto& c = merged[i];
        c.in_fact_support = fact_support.count(c.item_id) > 0;
        const double s_base = c.rank_base ? 1.0 / (1.0 + *c.rank_base) : 0.0;
        const double s_graph = c.rank_graph ? 1.0 / (1.0 + *c.rank_graph) : 0.0;
        const double s_fact = c.in_fact_support ? 1.0 : 0.1;
        c.fused_score = weights.alpha * s_base + weights.beta * s_graph + weights.gamma * recency[i] +
                        weights.delta * s_fact;
    }
    std::sort(merged.begin(), merged.end(), [](const EvidenceCandidate& a, const EvidenceCandidate& b) {
        if (a.fused_score != b.fused_score) return a.fused_score > b.fused_score;
        return newer(a, b);
    });
    if (merged.size() > static_cast<std::size_t>(k)) merged.resize(static_cast<std::size_t>(k));
    return merged;
}

RetrievalResult retrieve(const ConversationState& state, const Embedder& embedder, std::string_view question,
                         const RoutePlan& plan, Target target) {
    check_plan(plan);
    const auto& cfg = state.config;
    const int k = cfg.top_k;
    RetrievalResult result;
    result.plan = plan;
    result.target = target;
    auto& diag = result.diagnostics;

    std::vector<const ParticipantBundle*> bundles;
    std::optional<ParticipantId> owner_filter;
    switch (target) {
        case Target::user:
            bundles = {&state.bundles[0]};
            owner_filter = state.participants[0];
            break;
        case Target::assistant:
            bundles = {&state.bundles[1]};
            owner_filter = state.participants[1];
            break;
        case Target::both:
        case Target::ambiguous: bundles = {&state.bundles[0], &state.bundles[1]}; break;
    }
    diag.owner_filter = owner_filter;

    const auto query = embedder.embed(question);
    std::vector<EvidenceCandidate> base;
    std::set<std::string> fact_support;
    if (plan.use_baseline) {
        std::vector<EvidenceCandidate> semantic, reactivated, keyword;
        std::map<std::string, std::size_t> sem_idx, re_idx;
        for (const auto* b : bundles) {
            diag.bundles_queried.push_back(b->owner);
            auto out = baseline_retrieve(state, *b, query, k, &diag);
            for (auto& c : out.ranked) {
                if (c.origins.count(Channel::fact)) fact_support.insert(c.item_id);
                merge_into(semantic, sem_idx, std::move(c));
            }
            for (auto& c : reactivate_context(state, *b, out.fact_hits, cfg.fact_drop_threshold)) {
                fact_support.insert(c.item_id);
                merge_into(reactivated, re_idx, std::move(c));
            }
            auto kw = keyword_backoff(state, *b, question, k);
            keyword.insert(keyword.end(), std::make_move_iterator(kw.begin()), std::make_move_iterator(kw.end()));
        }
        if (bundles.size() > 1) {
            sort_by_similarity(semantic);
            if (semantic.size() > static_cast<std::size_t>(k)) semantic.resize(static_cast<std::size_t>(k));
            std::stable_sort(keyword.begin(), keyword.end(), [](const auto& a, const auto& b) {
                if (a.similarity != b.similarity) return a.similarity > b.similarity;
                return *a.source_turn > *b.source_turn;
            });
            if (keyword.size() > static_cast<std::size_t>(k)) keyword.resize(static_cast<std::size_t>(k));
        }
        diag.reactivated = reactivated.size();
        diag.keyword_hits = keyword.size();

        std::map<std::string, std::size_t> idx;
        for (auto* list : {&semantic, &reactivated, &keyword}) {
            for (auto& c : *list) merge_into(base, idx, std::move(c));
        }
        for (std::size_t i = 0; i < base.size(); ++i) base[i].rank_base = static_cast<int>(i);
    }

    std::vector<EvidenceCandidate> graph;
    if (plan.use_graph) graph = graph_retrieve(state, query, plan, owner_filter, &diag);

    result.candidates = fuse(base, graph, fact_support, plan.fusion, k);
    return result;
}

json to_json(const EvidenceCandidate& c) {
    json origins = json::array();
    for (Channel ch : c.origins) origins.push_back(std::string(to_string(ch)));
    json j = {
        {"item_id", c.item_id},     {"origins", origins},
        {"text", c.text},           {"timestamp", c.timestamp},
        {"fused_score", c.fused_score}, {"in_fact_support", c.in_fact_support},
        {"similarity", c.similarity},
    };
    j["source_turn"] = c.source_turn ? json(*c.source_turn) : json(nullptr);
    j["rank_base"] = c.rank_base ? json(*c.rank_base) : json(nullptr);
    j["rank_graph"] = c.rank_graph ? json(*c.rank_graph) : json(nullptr);
    return j;
}

json to_json(const RetrievalResult& r) {
    json cands = json::array();
    for (const auto& c : r.candidates) cands.push_back(to_json(c));
    const auto& d = r.diagnostics;
    return {
        {"target", std::string(to_string(r.target))},
        {"plan", to_json(r.plan)},
        {"candidates", cands},
        {"diagnostics",
         {{"bundles_queried", d.bundles_queried},
          {"attr_hits", d.attr_hits},
          {"fact_hits", d.fact_hits},
          {"topic_hits", d.topic_hits},
          {"keyword_hits", d.keyword_hits},
          {"reactivated", d.reactivated},
          {"graph_read", d.graph_read},
          {"graph_seeds",
           [&] {
               json seeds = json::array();
               for (const auto& s : d.graph_seeds) seeds.push_back({{"node", s.node}, {"score", s.score}});
               return seeds;
           }()},
          {"graph_hits", d.graph_hits},
          {"owner_filter", d.owner_filter ? json(*d.owner_filter) : json(nullptr)}}},
    };
}

}  // namespace dialmem
