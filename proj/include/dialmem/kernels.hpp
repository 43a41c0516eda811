#pragma once

// Data-parallel scoring loops. Each OpenMP kernel has a serial twin that the
// tests treat as the reference; both evaluate every dot product in the same
// order so results match bit for bit.

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "dialmem/embedding.hpp"

namespace dialmem::kernels {

inline constexpr std::size_t kNoPeer = std::numeric_limits<std::size_t>::max();

std::vector<double> similarity_scores(const EmbeddingVector& query,
                                      std::span<const EmbeddingVector* const> items);
std::vector<double> similarity_scores_serial(const EmbeddingVector& query,
                                             std::span<const EmbeddingVector* const> items);

/// For each item, the index of its most similar other item (lowest index on
/// ties); kNoPeer when the set has a single element.
std::vector<std::size_t> nearest_peers(std::span<const EmbeddingVector* const> items);
std::vector<std::size_t> nearest_peers_serial(std::span<const EmbeddingVector* const> items);

}  // namespace dialmem::kernels
