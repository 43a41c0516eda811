#pragma once

// Reference implementations used to check the production code. They favour
// obviousness over speed and share no code with the library beyond types.

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "dialmem/core.hpp"
#include "dialmem/graph.hpp"
#include "dialmem/retriever.hpp"

namespace oracle {

using namespace dialmem;

// Max-product over every simple path of at most `depth` edges that starts at
// a seed and never steps onto a seed.
inline std::map<NodeId, double> brute_expand(const MemoryGraph& g, const std::vector<Seed>& seeds, int depth,
                                             const EdgePriors& priors, double decay,
                                             const std::optional<ParticipantId>& owner = std::nullopt) {
    std::set<NodeId> seed_set;
    std::map<NodeId, double> best;
    for (const auto& s : seeds) {
        seed_set.insert(s.node);
        best[s.node] = std::max(best.count(s.node) ? best[s.node] : 0.0, s.score);
    }
    const auto& edges = g.edges();
    std::function<void(NodeId, double, int, std::set<NodeId>&)> walk = [&](NodeId u, double score, int left,
                                                                          std::set<NodeId>& seen) {
        if (left == 0) return;
        for (const auto& e : edges) {
            NodeId v;
            if (e.from == u) {
                v = e.to;
            } else if (e.to == u && e.type != EdgeType::temporal_next) {
                v = e.from;
            } else {
                continue;
            }
            if (seed_set.count(v) || seen.count(v)) continue;
            const double s = score * priors.at(e.type) * decay;
            if (!(s > 0.0)) continue;
            if (!best.count(v) || s > best[v]) best[v] = s;
            seen.insert(v);
            walk(v, s, left - 1, seen);
            seen.erase(v);
        }
    };
    for (const auto& s : seeds) {
        std::set<NodeId> seen{s.node};
        walk(s.node, best[s.node], depth, seen);
    }
    if (owner) {
        for (auto it = best.begin(); it != best.end();) {
            it = g.node(it->first).owner == *owner ? std::next(it) : best.erase(it);
        }
    }
    return best;
}

// Fusion score, written out term by term.
struct FusionItem {
    std::string id;
    std::optional<std::int64_t> epoch;
    std::optional<TurnId> turn;
    std::optional<int> rank_base;
    std::optional<int> rank_graph;
    bool fact = false;
};

struct FusedRow {
    std::string id;
    double score = 0.0;
};

inline std::vector<FusedRow> direct_fusion(const std::vector<FusionItem>& items, const FusionWeights& w, int k) {
    using Key = std::tuple<bool, std::int64_t, bool, TurnId>;
    const auto key = [](const FusionItem& it) -> std::optional<Key> {
        if (!it.epoch && !it.turn) return std::nullopt;
        return Key{it.epoch.has_value(), it.epoch.value_or(0), it.turn.has_value(), it.turn.value_or(0)};
    };
    std::vector<const FusionItem*> timed;
    for (const auto& it : items) {
        if (key(it)) timed.push_back(&it);
    }
    std::sort(timed.begin(), timed.end(), [&](const FusionItem* a, const FusionItem* b) {
        if (key(*a) != key(*b)) return *key(*a) > *key(*b);
        return a->id < b->id;
    });
    std::map<std::string, double> recency;
    for (std::size_t i = 0; i < timed.size(); ++i) {
        recency[timed[i]->id] =
            timed.size() == 1 ? 1.0 : 1.0 - static_cast<double>(i) / static_cast<double>(timed.size() - 1);
    }
    struct Row {
        const FusionItem* it;
        double score;
    };
    std::vector<Row> rows;
    for (const auto& it : items) {
        const double sb = it.rank_base ? 1.0 / (1.0 + *it.rank_base) : 0.0;
        const double sg = it.rank_graph ? 1.0 / (1.0 + *it.rank_graph) : 0.0;
        const double sr = recency.count(it.id) ? recency[it.id] : 0.0;
        const double sf = it.fact ? 1.0 : 0.1;
        rows.push_back({&it, w.alpha * sb + w.beta * sg + w.gamma * sr + w.delta * sf});
    }
    std::sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
        if (a.score != b.score) return a.score > b.score;
        const auto ka = key(*a.it), kb = key(*b.it);
        if (ka != kb) return ka > kb;
        return a.it->id < b.it->id;
    });
    std::vector<FusedRow> out;
    for (const auto& r : rows) {
        if (static_cast<int>(out.size()) == k) break;
        out.push_back({r.it->id, r.score});
    }
    return out;
}

// Working-memory reference: append, and once full drop the oldest r.
struct FifoModel {
    int capacity;
    int segment;
    std::deque<TurnId> queue;

    std::optional<std::vector<TurnId>> push(TurnId t) {
        queue.push_back(t);
        if (static_cast<int>(queue.size()) != capacity) return std::nullopt;
        std::vector<TurnId> seg(queue.begin(), queue.begin() + segment);
        queue.erase(queue.begin(), queue.begin() + segment);
        return seg;
    }
};

// Nearest-neighbour graph components by exhaustive search.
inline std::vector<std::vector<std::string>> brute_components(std::vector<std::pair<std::string, std::vector<double>>> items) {
    std::sort(items.begin(), items.end());
    const std::size_t n = items.size();
    const auto dot = [&](std::size_t a, std::size_t b) {
        double s = 0.0;
        for (std::size_t i = 0; i < items[a].second.size(); ++i) s += items[a].second[i] * items[b].second[i];
        return s;
    };
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) {
        std::optional<std::size_t> best;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            if (!best || dot(i, j) > dot(i, *best)) best = j;
        }
        if (best) adj[i][*best] = adj[*best][i] = true;
    }
    std::vector<int> comp(n, -1);
    std::vector<std::vector<std::string>> out;
    for (std::size_t s = 0; s < n; ++s) {
        if (comp[s] >= 0) continue;
        std::vector<std::size_t> stack{s};
        std::vector<std::string> members;
        comp[s] = static_cast<int>(out.size());
        while (!stack.empty()) {
            const auto u = stack.back();
            stack.pop_back();
            members.push_back(items[u].first);
            for (std::size_t v = 0; v < n; ++v) {
                if (adj[u][v] && comp[v] < 0) {
                    comp[v] = comp[s];
                    stack.push_back(v);
                }
            }
        }
        std::sort(members.begin(), members.end());
        out.push_back(std::move(members));
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace oracle
