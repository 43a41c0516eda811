#include "dialmem/metrics.hpp"

#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

namespace dialmem::metrics {

std::string normalize_answer(std::string_view s) {
    std::string cleaned;
    cleaned.reserve(s.size());
    for (char c : s) {
        const auto u = static_cast<unsigned char>(c);
        if (u < 0x80 && std::ispunct(u)) continue;
        cleaned.push_back(u < 0x80 ? static_cast<char>(std::tolower(u)) : c);
    }
    std::istringstream in(cleaned);
    std::string word, out;
    while (in >> word) {
        if (word == "a" || word == "an" || word == "the") continue;
        if (!out.empty()) out += ' ';
        out += word;
    }
    return out;
}

std::vector<std::string> answer_tokens(std::string_view s) {
    std::istringstream in(normalize_answer(s));
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

namespace {

std::map<std::string, int> counts(const std::vector<std::string>& toks) {
    std::map<std::string, int> m;
    for (const auto& t : toks) ++m[t];
    return m;
}

int clipped_overlap(const std::vector<std::string>& pred, const std::vector<std::string>& ref) {
    const auto rc = counts(ref);
    int n = 0;
    for (const auto& [tok, c] : counts(pred)) {
        if (auto it = rc.find(tok); it != rc.end()) n += std::min(c, it->second);
    }
    return n;
}

}  // namespace

double token_f1(std::string_view prediction, std::string_view reference) {
    const auto p = answer_tokens(prediction);
    const auto r = answer_tokens(reference);
    if (p.empty() && r.empty()) return 1.0;
    if (p.empty() || r.empty()) return 0.0;
    const int common = clipped_overlap(p, r);
    if (common == 0) return 0.0;
    const double precision = static_cast<double>(common) / static_cast<double>(p.size());
    const double recall = static_cast<double>(common) / static_cast<double>(r.size());
    return 2.0 * precision * recall / (precision + recall);
}

double bleu1(std::string_view prediction, std::string_view reference) {
    const auto p = answer_tokens(prediction);
    const auto r = answer_tokens(reference);
    if (p.empty()) return 0.0;
    const double precision = static_cast<double>(clipped_overlap(p, r)) / static_cast<double>(p.size());
    const double c = static_cast<double>(p.size());
    const double len_r = static_cast<double>(r.size());
    const double bp = c > len_r ? 1.0 : std::exp(1.0 - len_r / c);
    return precision * bp;
}

int match_choice(std::string_view prediction, const std::vector<std::string>& choices) {
    const auto p = normalize_answer(prediction);
    for (std::size_t i = 0; i < choices.size(); ++i) {
        if (normalize_answer(choices[i]) == p) return static_cast<int>(i);
    }
    return -1;
}

}  // namespace dialmem::metrics
