#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dialmem/embedding.hpp"
#include "dialmem/llm.hpp"
#include "dialmem/memory.hpp"
#include "dialmem/state.hpp"

namespace dialmem {

/// The two collaborators every LLM-backed memory operation needs.
struct Services {
    LlmGateway& llm;
    const Embedder& embedder;
};

/// Parses the utterance through the message-understanding prompt. Speaker,
/// timestamp, and turn always come from `u`. Malformed or incomplete replies
/// yield a degenerate record (topic "general", summary = truncated text).
/// Gateway failures propagate.
NormalizedRecord understand_message(const Utterance& u, LlmGateway& llm);

/// Fallback record used when message understanding fails.
NormalizedRecord degenerate_record(const Utterance& u);

using PoppedSegment = std::vector<NormalizedRecord>;

/// Appends `rec`; once the queue length reaches capacity the oldest
/// consolidation_segment records are popped and returned in arrival order.
std::optional<PoppedSegment> write_working(ParticipantBundle& bundle, NormalizedRecord rec,
                                           int consolidation_segment);

/// ADD / UPDATE / IGNORE for one item against the current store. An empty
/// store is an ADD without an LLM call; unusable replies and UPDATEs naming a
/// missing key degrade to a flagged ADD.
RouterDecision route_item(ItemKind kind, std::string_view new_item,
                          const std::map<std::string, std::string>& existing, LlmGateway& llm);

/// Routes every event/fact/attribute of the segment into episodic memory and
/// indexes the raw messages into the word index.
ConsolidationReport consolidate(ParticipantBundle& bundle, const PoppedSegment& segment,
                                std::span<const Utterance> history, Services services);

/// Links each key to its single most similar peer and returns the connected
/// components. Clusters and their members are sorted by key.
std::vector<std::vector<std::string>> cluster_keys(const std::vector<KeyedVector>& keys);

struct RegroupReport {
    std::size_t merge_calls = 0;
    std::vector<std::string> flags;
};

/// Rebuilds topic summaries from event clusters and refreshes the
/// preference descriptors derived from merged groups.
RegroupReport regroup_topics(ParticipantBundle& bundle, Services services);

/// Rebuilds aspect summaries from attribute clusters.
RegroupReport refresh_persona_aspects(ParticipantBundle& bundle, Services services);

/// Adds the content tokens of `u` to the bundle's word index.
void index_words(EpisodicStore& store, const Utterance& u);

/// Unique slug key for `text` within `entries` (numeric suffix on collision).
std::string make_key(const std::map<std::string, EpisodicEntry>& entries, std::string_view text);

struct IngestReport {
    TurnId turn = 0;
    bool degenerate = false;
    std::optional<ConsolidationReport> consolidation;
    std::size_t nodes_created = 0;
    std::size_t edges_created = 0;
};

/// Online write path for one utterance: understand, write working memory,
/// index into the graph, and on overflow consolidate, regroup topics,
/// refresh persona aspects, and index the consolidated records.
class MemoryAgent {
public:
    explicit MemoryAgent(Services services) : services_(services) {}

    IngestReport ingest(ConversationState& state, std::string session_id, ParticipantId speaker,
                        std::string text, std::string timestamp);

private:
    Services services_;
};

}  // namespace dialmem
