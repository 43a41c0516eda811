#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dialmem/core.hpp"
#include "dialmem/embedding.hpp"

namespace dialmem {

enum class ItemKind { event, fact, attribute };

std::string_view to_string(ItemKind k);

/// Bounded FIFO of normalized records, oldest first.
struct WorkingMemory {
    std::deque<NormalizedRecord> queue;
    int capacity = 20;
};

struct EpisodicEntry {
    std::string key;
    std::string text;
    std::vector<TurnId> supporting_turns;  // sorted, unique
    std::string created_at;
    std::string updated_at;
    EmbeddingVector embedding;
};

struct TopicSummary {
    std::string name;
    std::string summary;
    std::vector<std::string> member_keys;  // event keys
    std::vector<TurnId> message_links;     // sorted, unique
    EmbeddingVector embedding;
};

struct EpisodicStore {
    std::map<std::string, EpisodicEntry> events;
    std::map<std::string, EpisodicEntry> facts;
    std::map<std::string, EpisodicEntry> attributes;
    std::map<std::string, TopicSummary> topic_summaries;
    std::map<std::string, std::set<TurnId>> word_index;  // lowercase token -> turns

    std::map<std::string, EpisodicEntry>& entries(ItemKind kind);
    const std::map<std::string, EpisodicEntry>& entries(ItemKind kind) const;
};

struct PreferenceDescriptor {
    std::string text;
    std::vector<std::string> source_topics;
    EmbeddingVector embedding;
};

struct AspectSummary {
    std::string aspect;
    std::string text;
    std::vector<std::string> source_attribute_keys;
    EmbeddingVector embedding;
};

struct PersonaStore {
    std::vector<PreferenceDescriptor> preference_descriptors;
    std::map<std::string, AspectSummary> aspect_summaries;
};

struct ParticipantBundle {
    ParticipantId owner;
    WorkingMemory working;
    EpisodicStore episodic;
    PersonaStore persona;
    std::set<std::uint64_t> graph_scope;  // node ids owned in the shared graph
};

enum class RouterAction { ADD, UPDATE, IGNORE };

std::string_view to_string(RouterAction a);

struct RouterDecision {
    RouterAction action = RouterAction::ADD;
    std::optional<std::string> target;   // set only for UPDATE
    std::optional<std::string> matched;  // existing key an IGNORE pointed at, if any
    bool flagged = false;               // downgraded or defaulted
    std::string note;
};

struct ItemDecision {
    ItemKind kind = ItemKind::fact;
    TurnId source_turn = 0;
    std::string item;
    RouterDecision decision;
    // Key the item landed on: the new key for ADD, the target for UPDATE, the
    // matched entry for IGNORE when the router named one.
    std::optional<std::string> resolved_key;
};

struct ConsolidationReport {
    ParticipantId owner;
    std::vector<TurnId> turns;  // segment, arrival order
    std::vector<ItemDecision> decisions;
    std::size_t merge_calls = 0;
    std::vector<std::string> flags;
};

}  // namespace dialmem
