#include "dialmem/graph.hpp"

#include <algorithm>
#include <set>

#include "dialmem/text.hpp"

namespace dialmem {

std::string_view to_string(NodeKind k) {
    switch (k) {
        case NodeKind::message: return "message";
        case NodeKind::topic: return "topic";
        case NodeKind::fact: return "fact";
        case NodeKind::attribute: return "attribute";
        case NodeKind::event: return "event";
    }
    return "message";
}

std::optional<NodeKind> parse_node_kind(std::string_view s) {
    for (auto k : {NodeKind::message, NodeKind::topic, NodeKind::fact, NodeKind::attribute, NodeKind::event}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

NodeId MemoryGraph::add_node(GraphNode node) {
    if (node.owner.empty()) throw InvariantError("graph node without owner");
    if (node.payload.empty()) throw InvariantError("graph node with empty payload");
    if (node.kind == NodeKind::message && !node.source_turn) throw InvariantError("message node without turn");
    node.id = nodes_.size();
    if (!node.key.empty()) {
        auto [it, inserted] = keyed_.emplace(std::make_tuple(node.owner, node.kind, node.key), node.id);
        if (!inserted) throw InvariantError("duplicate keyed node " + node.key);
    }
    if (node.kind == NodeKind::message) {
        by_turn_[*node.source_turn] = node.id;
        messages_.push_back(node.id);
    }
    nodes_.push_back(std::move(node));
    adjacency_.emplace_back();
    return nodes_.back().id;
}

std::size_t MemoryGraph::add_edge(const GraphEdge& edge) {
    if (!contains(edge.from) || !contains(edge.to)) throw InvariantError("edge endpoint does not exist");
    if (!(edge.write_strength > 0.0 && edge.write_strength <= 1.0))
        throw InvariantError("edge write strength outside (0,1]");
    const std::size_t idx = edges_.size();
    edges_.push_back(edge);
    adjacency_[edge.from].push_back(idx);
    if (!edge.directed() && edge.to != edge.from) adjacency_[edge.to].push_back(idx);
    return idx;
}

const GraphNode& MemoryGraph::node(NodeId id) const {
    if (!contains(id)) throw InputError("unknown graph node " + std::to_string(id));
    return nodes_[id];
}

GraphNode& MemoryGraph::node(NodeId id) {
    if (!contains(id)) throw InputError("unknown graph node " + std::to_string(id));
    return nodes_[id];
}

std::span<const std::size_t> MemoryGraph::traversable(NodeId id) const {
    if (!contains(id)) throw InputError("unknown graph node " + std::to_string(id));
    return adjacency_[id];
}

std::optional<NodeId> MemoryGraph::find_keyed(const ParticipantId& owner, NodeKind kind, const std::string& key) const {
    auto it = keyed_.find(std::make_tuple(owner, kind, key));
    if (it == keyed_.end()) return std::nullopt;
    return it->second;
}

std::optional<NodeId> MemoryGraph::message_node(TurnId turn) const {
    auto it = by_turn_.find(turn);
    if (it == by_turn_.end()) return std::nullopt;
    return it->second;
}

bool MemoryGraph::has_edge(NodeId from, NodeId to, EdgeType type) const {
    if (!contains(from)) return false;
    for (auto idx : adjacency_[from]) {
        const auto& e = edges_[idx];
        if (e.type == type && e.from == from && e.to == to) return true;
    }
    return false;
}

namespace {

std::set<NodeId> mentioned_topics(const MemoryGraph& g, NodeId message) {
    std::set<NodeId> out;
    for (auto idx : g.traversable(message)) {
        const auto& e = g.edges()[idx];
        if (e.type == EdgeType::mentions && e.from == message) out.insert(e.to);
    }
    return out;
}

}  // namespace

IndexedIds index_message(MemoryGraph& g, const NormalizedRecord& rec, const Utterance& raw,
                         const Embedder& embedder) {
    IndexedIds ids;
    const auto edge = [&](NodeId from, NodeId to, EdgeType type, double strength) {
        ids.edges.push_back(g.add_edge({from, to, type, strength}));
    };

    std::optional<NodeId> prev_global;
    std::optional<NodeId> prev_same;
    if (!g.message_order().empty()) prev_global = g.message_order().back();
    for (auto it = g.message_order().rbegin(); it != g.message_order().rend(); ++it) {
        if (g.node(*it).owner == raw.speaker) {
            prev_same = *it;
            break;
        }
    }

    GraphNode m;
    m.kind = NodeKind::message;
    m.owner = raw.speaker;
    m.payload = raw.text;
    m.timestamp = raw.timestamp;
    m.source_turn = raw.turn_id;
    m.embedding = embedder.embed(raw.text);
    const NodeId msg = g.add_node(std::move(m));
    ids.nodes.push_back(msg);

    std::set<NodeId> topics;
    for (const auto& t : rec.topic) {
        const auto name = text::lowercase(text::trim(t));
        if (name.empty()) continue;
        NodeId tid;
        if (auto found = g.find_keyed(raw.speaker, NodeKind::topic, name)) {
            tid = *found;
        } else {
            GraphNode n;
            n.kind = NodeKind::topic;
            n.owner = raw.speaker;
            n.payload = name;
            n.timestamp = raw.timestamp;
            n.key = name;
            n.embedding = embedder.embed(name);
            tid = g.add_node(std::move(n));
            ids.nodes.push_back(tid);
        }
        if (topics.insert(tid).second) edge(msg, tid, EdgeType::mentions, write_strength::kMentions);
    }

    const auto add_leaf = [&](const std::vector<std::string>& items, NodeKind kind, double strength) {
        for (const auto& item : items) {
            if (item.empty()) continue;
            GraphNode n;
            n.kind = kind;
            n.owner = raw.speaker;
            n.payload = item;
            n.timestamp = raw.timestamp;
            n.source_turn = raw.turn_id;
            n.embedding = embedder.embed(item);
            const NodeId id = g.add_node(std::move(n));
            ids.nodes.push_back(id);
            edge(msg, id, EdgeType::supports, strength);
        }
    };
    add_leaf(rec.facts, NodeKind::fact, write_strength::kMessageFact);
    add_leaf(rec.attributes, NodeKind::attribute, write_strength::kMessageAttribute);

    if (!topics.empty()) {
        const auto& order = g.message_order();
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            if (*it == msg || g.node(*it).owner != raw.speaker) continue;
            const auto other = mentioned_topics(g, *it);
            const bool shares = std::any_of(topics.begin(), topics.end(), [&](NodeId t) { return other.count(t) > 0; });
            if (shares) {
                edge(msg, *it, EdgeType::same_topic, write_strength::kSameTopic);
                break;
            }
        }
    }

    if (prev_global) {
        edge(*prev_global, msg, EdgeType::temporal_next, write_strength::kGlobalForward);
        edge(msg, *prev_global, EdgeType::temporal_next, write_strength::kGlobalBackward);
    }
    if (prev_same) {
        edge(*prev_same, msg, EdgeType::temporal_next, write_strength::kSameSpeakerForward);
        edge(msg, *prev_same, EdgeType::temporal_next, write_strength::kSameSpeakerBackward);
        edge(*prev_same, msg, EdgeType::speaker_related, write_strength::kSpeakerRelated);
    }
    return ids;
}

IndexedIds index_consolidated(MemoryGraph& g, const ConsolidationReport& report, const ParticipantBundle& bundle) {
    IndexedIds ids;
    if (report.turns.empty() && report.decisions.empty()) return ids;
    if (report.owner != bundle.owner) throw InvariantError("consolidation report owner does not match bundle");
    for (TurnId t : report.turns) {
        if (!g.message_node(t)) throw InvariantError("consolidated turn " + std::to_string(t) + " has no message node");
    }
    const auto link = [&](NodeId from, NodeId to, EdgeType type, double strength) {
        if (!g.has_edge(from, to, type)) ids.edges.push_back(g.add_edge({from, to, type, strength}));
    };

    for (const auto& d : report.decisions) {
        if (d.kind != ItemKind::event || !d.resolved_key) continue;
        const auto& events = bundle.episodic.events;
        auto entry = events.find(*d.resolved_key);
        if (entry == events.end()) throw InvariantError("report names missing event key " + *d.resolved_key);
        const auto msg = g.message_node(d.source_turn);
        if (!msg) throw InvariantError("event decision references turn without message node");

        NodeId ev;
        if (auto found = g.find_keyed(bundle.owner, NodeKind::event, entry->first)) {
            ev = *found;
            auto& n = g.node(ev);
            n.payload = entry->second.text;
            n.timestamp = entry->second.updated_at;
            n.embedding = entry->second.embedding;
            n.source_turn = entry->second.supporting_turns.back();
        } else {
            GraphNode n;
            n.kind = NodeKind::event;
            n.owner = bundle.owner;
            n.payload = entry->second.text;
            n.timestamp = entry->second.updated_at;
            n.key = entry->first;
            n.source_turn = entry->second.supporting_turns.back();
            n.embedding = entry->second.embedding;
            ev = g.add_node(std::move(n));
            ids.nodes.push_back(ev);
        }
        for (auto idx : g.traversable(*msg)) {
            const auto e = g.edges()[idx];
            if (e.type != EdgeType::supports || e.from != *msg) continue;
            const auto& fact = g.node(e.to);
            if (fact.kind == NodeKind::fact && fact.key.empty() && fact.source_turn == d.source_turn) {
                link(fact.id, ev, EdgeType::supports, write_strength::kFactEvent);
            }
        }
    }

    // Persona snapshots stay reachable: descriptors as fact nodes, aspects as attribute nodes.
    const auto upsert = [&](NodeKind kind, const std::string& key, const std::string& payload,
                            const EmbeddingVector& emb) {
        if (auto found = g.find_keyed(bundle.owner, kind, key)) {
            auto& n = g.node(*found);
            n.payload = payload;
            n.embedding = emb;
            return *found;
        }
        GraphNode n;
        n.kind = kind;
        n.owner = bundle.owner;
        n.payload = payload;
        n.key = key;
        n.embedding = emb;
        const NodeId id = g.add_node(std::move(n));
        ids.nodes.push_back(id);
        return id;
    };
    for (const auto& d : bundle.persona.preference_descriptors) {
        if (d.source_topics.empty() || d.text.empty()) continue;
        const NodeId id = upsert(NodeKind::fact, "descriptor:" + d.source_topics.front(), d.text, d.embedding);
        for (const auto& topic : d.source_topics) {
            auto ts = bundle.episodic.topic_summaries.find(topic);
            if (ts == bundle.episodic.topic_summaries.end()) continue;
            for (TurnId t : ts->second.message_links) {
                if (auto msg = g.message_node(t)) link(*msg, id, EdgeType::supports, write_strength::kMessageFact);
            }
        }
    }
    for (const auto& [name, aspect] : bundle.persona.aspect_summaries) {
        if (aspect.text.empty()) continue;
        const NodeId id = upsert(NodeKind::attribute, "aspect:" + name, aspect.text, aspect.embedding);
        for (const auto& key : aspect.source_attribute_keys) {
            auto attr = bundle.episodic.attributes.find(key);
            if (attr == bundle.episodic.attributes.end()) continue;
            for (TurnId t : attr->second.supporting_turns) {
                if (auto msg = g.message_node(t)) link(*msg, id, EdgeType::supports, write_strength::kMessageAttribute);
            }
        }
    }
    return ids;
}

ExpansionResult expand(const MemoryGraph& g, const std::vector<Seed>& seeds, int depth, const EdgePriors& priors,
                       double decay, const std::optional<ParticipantId>& owner_filter) {
    if (seeds.empty()) throw InputError("expand: no seeds");
    if (depth < 0) throw InputError("expand: negative depth");
    if (!(decay >= 0.0 && decay <= 1.0)) throw InputError("expand: decay outside [0,1]");
    std::array<double, kAllEdgeTypes.size()> w{};
    for (EdgeType t : kAllEdgeTypes) {
        auto it = priors.find(t);
        if (it == priors.end()) throw InputError("expand: priors missing " + std::string(to_string(t)));
        w[static_cast<std::size_t>(t)] = it->second;
    }

    std::vector<std::optional<ExpandedNode>> best(g.nodes().size());
    std::vector<bool> is_seed(g.nodes().size(), false);
    for (const auto& s : seeds) {
        if (!g.contains(s.node)) throw InputError("expand: unknown seed node " + std::to_string(s.node));
        if (!(s.score > 0.0 && s.score <= 1.0)) throw InputError("expand: seed score outside (0,1]");
        is_seed[s.node] = true;
        auto& slot = best[s.node];
        if (!slot || s.score > slot->score) slot = ExpandedNode{s.node, s.score, 0, {}};
    }

    std::vector<ExpandedNode> frontier;
    for (NodeId id = 0; id < best.size(); ++id) {
        if (is_seed[id]) frontier.push_back(*best[id]);
    }
    for (int d = 0; d < depth && !frontier.empty(); ++d) {
        std::set<NodeId> improved;
        for (const auto& u : frontier) {
            for (auto idx : g.traversable(u.node)) {
                const auto& e = g.edges()[idx];
                const NodeId v = MemoryGraph::other_end(e, u.node);
                if (is_seed[v]) continue;
                const double cand = u.score * w[static_cast<std::size_t>(e.type)] * decay;
                if (!(cand > 0.0)) continue;
                auto& slot = best[v];
                if (!slot || cand > slot->score) {
                    ExpandedNode n{v, cand, u.hops + 1, u.path};
                    n.path.push_back(e.type);
                    slot = std::move(n);
                    improved.insert(v);
                }
            }
        }
        frontier.clear();
        for (NodeId v : improved) frontier.push_back(*best[v]);
    }

    ExpansionResult out;
    for (auto& slot : best) {
        if (!slot) continue;
        if (owner_filter && g.node(slot->node).owner != *owner_filter) continue;
        out.nodes.push_back(std::move(*slot));
    }
    std::sort(out.nodes.begin(), out.nodes.end(), [](const ExpandedNode& a, const ExpandedNode& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.node < b.node;
    });
    return out;
}

EdgePriors default_retrieval_priors() {
    return {
        {EdgeType::mentions, 0.75},
        {EdgeType::supports, 0.90},
        {EdgeType::same_topic, 0.55},
        {EdgeType::temporal_next, 0.70},
        {EdgeType::speaker_related, 0.60},
    };
}

}  // namespace dialmem
