#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dialmem {

/// Unit-norm vector, or all zeros for text with no tokens.
struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dimension() const { return values.size(); }
    bool is_zero() const;
    bool operator==(const EmbeddingVector&) const = default;
};

/// Text-to-vector contract. Implementations must be deterministic and
/// safe to call concurrently.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual int dimension() const = 0;
    virtual EmbeddingVector embed(std::string_view text) const = 0;
    virtual std::string name() const = 0;
};

/// Signed feature hashing over FNV-1a token hashes, L2-normalized.
class HashEmbedder final : public Embedder {
public:
    explicit HashEmbedder(int dimension = 384);
    int dimension() const override { return dimension_; }
    EmbeddingVector embed(std::string_view text) const override;
    std::string name() const override { return "hash"; }

private:
    int dimension_;
};

struct HttpEmbedderOptions {
    std::string base_url;  // e.g. http://localhost:8080/v1
    std::string model;
    std::string api_key;
    int dimension = 384;
    int timeout_seconds = 60;
};

/// OpenAI-compatible /embeddings client. Results are re-normalized locally.
class HttpEmbedder final : public Embedder {
public:
    explicit HttpEmbedder(HttpEmbedderOptions options);
    int dimension() const override { return options_.dimension; }
    EmbeddingVector embed(std::string_view text) const override;
    std::string name() const override { return "http:" + options_.model; }

private:
    HttpEmbedderOptions options_;
};

EmbeddingVector hash_embed(std::string_view text, int dimension = 384);

/// Dot product of unit vectors; 0 when either side is the zero vector.
/// Throws InputError on dimension mismatch.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

/// In-place L2 normalization; leaves a zero vector untouched.
void normalize(EmbeddingVector& v);

/// FNV-1a over the little-endian IEEE-754 bytes of every component.
std::uint64_t vector_fingerprint(const EmbeddingVector& v);

struct ScoredId {
    std::string id;
    double score = 0.0;
    bool operator==(const ScoredId&) const = default;
};

struct KeyedVector {
    std::string id;
    EmbeddingVector vector;
};

/// Similarity-descending, ties by ascending id, truncated to k (k >= 1).
std::vector<ScoredId> top_k_similar(const EmbeddingVector& query,
                                    const std::vector<KeyedVector>& items, int k);

}  // namespace dialmem
