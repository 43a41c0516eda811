#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dialmem::metrics {

/// Lowercase, punctuation removed, articles a/an/the dropped, whitespace collapsed.
std::string normalize_answer(std::string_view s);
std::vector<std::string> answer_tokens(std::string_view s);

/// Multiset token overlap F1. Both empty -> 1, exactly one empty -> 0.
double token_f1(std::string_view prediction, std::string_view reference);

/// Clipped unigram precision times brevity penalty. Empty prediction -> 0.
double bleu1(std::string_view prediction, std::string_view reference);

/// Index of the choice whose normalized form equals the normalized
/// prediction, or -1.
int match_choice(std::string_view prediction, const std::vector<std::string>& choices);

}  // namespace dialmem::metrics
