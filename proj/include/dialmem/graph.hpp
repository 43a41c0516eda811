#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "dialmem/core.hpp"
#include "dialmem/embedding.hpp"
#include "dialmem/memory.hpp"

namespace dialmem {

enum class NodeKind { message, topic, fact, attribute, event };

std::string_view to_string(NodeKind k);
std::optional<NodeKind> parse_node_kind(std::string_view s);

using NodeId = std::uint64_t;

struct GraphNode {
    NodeId id = 0;
    NodeKind kind = NodeKind::message;
    ParticipantId owner;
    std::string payload;
    std::string timestamp;
    std::optional<TurnId> source_turn;
    // Identity for get-or-create nodes (topic string, event key, persona key);
    // empty for message and per-message fact/attribute nodes.
    std::string key;
    EmbeddingVector embedding;
};

/// temporal_next edges are directed (forward and backward are separate
/// edges); all other types are traversable in both directions.
struct GraphEdge {
    NodeId from = 0;
    NodeId to = 0;
    EdgeType type = EdgeType::mentions;
    double write_strength = 0.0;

    bool directed() const { return type == EdgeType::temporal_next; }
};

/// Fixed write-time strengths.
namespace write_strength {
inline constexpr double kMentions = 0.75;
inline constexpr double kMessageFact = 0.85;
inline constexpr double kFactEvent = 0.80;
inline constexpr double kMessageAttribute = 0.80;
inline constexpr double kSameSpeakerForward = 0.90;
inline constexpr double kSameSpeakerBackward = 0.45;
inline constexpr double kGlobalForward = 0.70;
inline constexpr double kGlobalBackward = 0.35;
inline constexpr double kSpeakerRelated = 0.65;
inline constexpr double kSameTopic = 0.55;
}  // namespace write_strength

class MemoryGraph {
public:
    NodeId add_node(GraphNode node);
    std::size_t add_edge(const GraphEdge& edge);

    const GraphNode& node(NodeId id) const;
    GraphNode& node(NodeId id);
    bool contains(NodeId id) const { return id < nodes_.size(); }

    const std::vector<GraphNode>& nodes() const { return nodes_; }
    const std::vector<GraphEdge>& edges() const { return edges_; }

    /// Indices of edges traversable out of `id`.
    std::span<const std::size_t> traversable(NodeId id) const;
    static NodeId other_end(const GraphEdge& e, NodeId from) { return e.from == from ? e.to : e.from; }

    std::optional<NodeId> find_keyed(const ParticipantId& owner, NodeKind kind, const std::string& key) const;
    std::optional<NodeId> message_node(TurnId turn) const;
    bool has_edge(NodeId from, NodeId to, EdgeType type) const;

    /// Message nodes in insertion (turn) order.
    const std::vector<NodeId>& message_order() const { return messages_; }

    bool empty() const { return nodes_.empty(); }

private:
    std::vector<GraphNode> nodes_;
    std::vector<GraphEdge> edges_;
    std::vector<std::vector<std::size_t>> adjacency_;
    std::map<std::tuple<ParticipantId, NodeKind, std::string>, NodeId> keyed_;
    std::map<TurnId, NodeId> by_turn_;
    std::vector<NodeId> messages_;
};

struct IndexedIds {
    std::vector<NodeId> nodes;
    std::vector<std::size_t> edges;
};

/// Message node plus topic/fact/attribute nodes and the structural edges
/// (mentions, supports, same_topic, temporal_next pairs, speaker_related).
IndexedIds index_message(MemoryGraph& graph, const NormalizedRecord& record, const Utterance& raw,
                         const Embedder& embedder);

/// Event nodes for routed events, fact->event supports edges for facts from the
/// same source turn, and persona snapshots (descriptors as fact nodes, aspects
/// as attribute nodes). Throws InvariantError on turns with no message node.
IndexedIds index_consolidated(MemoryGraph& graph, const ConsolidationReport& report,
                              const ParticipantBundle& bundle);

struct ExpandedNode {
    NodeId node = 0;
    double score = 0.0;
    int hops = 0;
    std::vector<EdgeType> path;
};

struct ExpansionResult {
    std::vector<ExpandedNode> nodes;  // score descending, node id ascending on ties
};

struct Seed {
    NodeId node = 0;
    double score = 1.0;
};

/// Bounded best-score propagation: reaching v from u over an edge of type e
/// scores s(u) * priors[e] * decay, and each node keeps its best score. Seeds
/// keep their initial scores and are not entered from other nodes. The owner
/// filter only removes nodes from the result; traversal ignores ownership.
ExpansionResult expand(const MemoryGraph& graph, const std::vector<Seed>& seeds, int depth,
                       const EdgePriors& priors, double decay,
                       const std::optional<ParticipantId>& owner_filter = std::nullopt);

/// Retrieval-time propagation priors.
EdgePriors default_retrieval_priors();

}  // namespace dialmem
