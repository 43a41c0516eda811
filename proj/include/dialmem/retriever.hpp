#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dialmem/embedding.hpp"
#include "dialmem/planner.hpp"
#include "dialmem/state.hpp"

namespace dialmem {

enum class Channel { attr, fact, topic, keyword, graph };

std::string_view to_string(Channel c);

struct EvidenceCandidate {
    std::string item_id;
    std::set<Channel> origins;
    std::string text;
    std::optional<TurnId> source_turn;
    std::string timestamp;
    std::optional<int> rank_base;
    std::optional<int> rank_graph;
    bool in_fact_support = false;
    double similarity = 0.0;  // channel score that produced the item
    double fused_score = 0.0;
};

/// "turn:00000042"
std::string message_item_id(TurnId turn);

struct RetrievalDiagnostics {
    std::vector<ParticipantId> bundles_queried;
    std::size_t attr_hits = 0;
    std::size_t fact_hits = 0;
    std::size_t topic_hits = 0;
    std::size_t keyword_hits = 0;
    std::size_t reactivated = 0;
    bool graph_read = false;
    std::vector<Seed> graph_seeds;
    std::size_t graph_hits = 0;
    std::optional<ParticipantId> owner_filter;
};

struct RetrievalResult {
    std::vector<EvidenceCandidate> candidates;  // fused_score descending
    RoutePlan plan;
    Target target = Target::ambiguous;
    RetrievalDiagnostics diagnostics;
};

struct FactHit {
    std::string key;
    double score = 0.0;
};

struct BaselineOutput {
    std::vector<EvidenceCandidate> ranked;  // rank_base set, at most k
    std::vector<FactHit> fact_hits;         // fact channel before the union, score descending
};

/// Union of persona, fact, and topic channels, deduplicated and truncated to k.
BaselineOutput baseline_retrieve(const ConversationState& state, const ParticipantBundle& bundle,
                                 const EmbeddingVector& query, int k, RetrievalDiagnostics* diag = nullptr);

/// Index of the last fact kept by the score-drop rule, or -1 for no hits.
int score_drop_cutoff(const std::vector<FactHit>& hits, double tau);

/// Supporting messages of the facts before the first adjacent gap > tau.
std::vector<EvidenceCandidate> reactivate_context(const ConversationState& state, const ParticipantBundle& bundle,
                                                  const std::vector<FactHit>& hits, double tau);

/// Messages matching question keywords, by distinct match count then newer turn.
std::vector<EvidenceCandidate> keyword_backoff(const ConversationState& state, const ParticipantBundle& bundle,
                                               std::string_view question, int k);

/// Seeds by query similarity, bounded expansion, nodes mapped to their messages.
std::vector<EvidenceCandidate> graph_retrieve(const ConversationState& state, const EmbeddingVector& query,
                                              const RoutePlan& plan, const std::optional<ParticipantId>& owner_filter,
                                              RetrievalDiagnostics* diag = nullptr);

/// Recency prior over candidates: timed items ordered newest first (item id
/// ascending on equal times) spread linearly from 1 to 0; untimed items get 0.
std::vector<double> recency_scores(const std::vector<EvidenceCandidate>& candidates);

/// Four-term rank fusion. `base` and `graph` are rank ordered.
std::vector<EvidenceCandidate> fuse(const std::vector<EvidenceCandidate>& base,
                                    const std::vector<EvidenceCandidate>& graph,
                                    const std::set<std::string>& fact_support, const FusionWeights& weights, int k);

/// Full pipeline for one query string.
RetrievalResult retrieve(const ConversationState& state, const Embedder& embedder, std::string_view question,
                         const RoutePlan& plan, Target target);

json to_json(const EvidenceCandidate& c);
json to_json(const RetrievalResult& r);

}  // namespace dialmem
