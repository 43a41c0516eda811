#include "dialmem/embedding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "dialmem/core.hpp"
#include "dialmem/kernels.hpp"
#include "dialmem/text.hpp"

namespace dialmem {

bool EmbeddingVector::is_zero() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

void normalize(EmbeddingVector& v) {
    double sq = 0.0;
    for (double x : v.values) sq += x * x;
    if (sq == 0.0) return;
    const double norm = std::sqrt(sq);
    for (double& x : v.values) x /= norm;
}

EmbeddingVector hash_embed(std::string_view input, int dimension) {
    if (dimension < 1) throw InputError("hash_embed: dimension must be >= 1");
    EmbeddingVector v;
    v.values.assign(static_cast<std::size_t>(dimension), 0.0);
    for (const auto& tok : text::tokenize(input)) {
        const std::uint64_t h = text::fnv1a64(tok);
        const auto idx = static_cast<std::size_t>(h % static_cast<std::uint64_t>(dimension));
        v.values[idx] += (h >> 63) ? -1.0 : 1.0;
    }
    normalize(v);
    return v;
}

HashEmbedder::HashEmbedder(int dimension) : dimension_(dimension) {
    if (dimension < 1) throw InputError("HashEmbedder: dimension must be >= 1");
}

EmbeddingVector HashEmbedder::embed(std::string_view t) const { return hash_embed(t, dimension_); }

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension()) {
        throw InputError("cosine_similarity: dimension mismatch (" + std::to_string(a.dimension()) +
                         " vs " + std::to_string(b.dimension()) + ")");
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
    return std::clamp(dot, -1.0, 1.0);
}

std::uint64_t vector_fingerprint(const EmbeddingVector& v) {
    std::uint64_t h = 14695981039346656037ULL;
    for (double x : v.values) {
        auto bits = std::bit_cast<std::uint64_t>(x);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xFFu;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

std::vector<ScoredId> top_k_similar(const EmbeddingVector& query, const std::vector<KeyedVector>& items,
                                    int k) {
    if (k < 1) throw InputError("top_k_similar: k must be >= 1");
    std::vector<const EmbeddingVector*> ptrs;
    ptrs.reserve(items.size());
    for (const auto& it : items) ptrs.push_back(&it.vector);
    const auto scores = kernels::similarity_scores(query, ptrs);

    std::vector<ScoredId> out;
    out.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) out.push_back({items[i].id, scores[i]});
    const auto order = [](const ScoredId& a, const ScoredId& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    };
    const auto keep = std::min<std::size_t>(out.size(), static_cast<std::size_t>(k));
    std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(keep), out.end(), order);
    out.resize(keep);
    return out;
}

}  // namespace dialmem
