#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dialmem::text {

/// Lowercased tokens split on every byte that is not an ASCII letter or digit.
/// Bytes >= 0x80 count as token characters so UTF-8 words stay intact.
std::vector<std::string> tokenize(std::string_view s);

/// tokenize() minus the stopword list, original order, duplicates kept.
std::vector<std::string> content_tokens(std::string_view s);

bool is_stopword(std::string_view token);

/// The fixed 30-word list used by the keyword index and keyword backoff.
std::span<const std::string_view> stopwords();

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed);

std::string to_hex(std::uint64_t v);

std::string lowercase(std::string_view s);
std::string trim(std::string_view s);

/// Lowercase, hyphen-separated, at most 80 characters; "item" when nothing survives.
std::string slugify(std::string_view s);

/// True when `needle` (already tokenized) occurs as a contiguous run in `haystack`.
bool contains_token_run(const std::vector<std::string>& haystack,
                        const std::vector<std::string>& needle);

}  // namespace dialmem::text
