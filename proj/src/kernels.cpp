#include "dialmem/kernels.hpp"

#include <cstdint>

namespace dialmem::kernels {

namespace {

// Below this many items the thread fork costs more than the loop.
constexpr std::ptrdiff_t kParallelMin = 256;

std::size_t best_peer(std::span<const EmbeddingVector* const> items, std::size_t i) {
    std::size_t best = kNoPeer;
    double best_score = 0.0;
    for (std::size_t j = 0; j < items.size(); ++j) {
        if (j == i) continue;
        const double s = cosine_similarity(*items[i], *items[j]);
        if (best == kNoPeer || s > best_score) {
            best = j;
            best_score = s;
        }
    }
    return best;
}

}  // namespace

std::vector<double> similarity_scores_serial(const EmbeddingVector& query,
                                             std::span<const EmbeddingVector* const> items) {
    std::vector<double> out(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) out[i] = cosine_similarity(query, *items[i]);
    return out;
}

std::vector<double> similarity_scores(const EmbeddingVector& query,
                                      std::span<const EmbeddingVector* const> items) {
    const auto n = static_cast<std::ptrdiff_t>(items.size());
    // Dimension mismatches must surface as exceptions, not escape an OpenMP region.
    for (const auto* v : items) {
        if (v->dimension() != query.dimension()) return similarity_scores_serial(query, items);
    }
    std::vector<double> out(items.size());
#pragma omp parallel for schedule(static) if (n >= kParallelMin)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = cosine_similarity(query, *items[static_cast<std::size_t>(i)]);
    }
    return out;
}

std::vector<std::size_t> nearest_peers_serial(std::span<const EmbeddingVector* const> items) {
    std::vector<std::size_t> out(items.size(), kNoPeer);
    for (std::size_t i = 0; i < items.size(); ++i) out[i] = best_peer(items, i);
    return out;
}

std::vector<std::size_t> nearest_peers(std::span<const EmbeddingVector* const> items) {
    const auto n = static_cast<std::ptrdiff_t>(items.size());
    if (!items.empty()) {
        for (const auto* v : items) {
            if (v->dimension() != items[0]->dimension()) return nearest_peers_serial(items);
        }
    }
    std::vector<std::size_t> out(items.size(), kNoPeer);
    // Pairwise cost is quadratic, so the threshold is on n*n work.
#pragma omp parallel for schedule(dynamic, 16) if (n * n >= kParallelMin * 64)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = best_peer(items, static_cast<std::size_t>(i));
    }
    return out;
}

}  // namespace dialmem::kernels
