#include "dialmem/text.hpp"

#include <algorithm>
#include <array>

namespace dialmem::text {

namespace {

constexpr std::array<std::string_view, 30> kStopwords = {
    "a",   "an",  "the", "and", "or",  "of",  "to",  "in",   "on",   "at",
    "for", "with", "is", "was", "are", "be",  "do",  "did",  "does", "i",
    "you", "he",  "she", "it",  "my",  "her", "his", "what", "when", "who"};

bool is_token_byte(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

char lower_ascii(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (is_token_byte(static_cast<unsigned char>(ch))) {
            cur.push_back(lower_ascii(ch));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

bool is_stopword(std::string_view token) {
    return std::find(kStopwords.begin(), kStopwords.end(), token) != kStopwords.end();
}

std::span<const std::string_view> stopwords() { return kStopwords; }

std::vector<std::string> content_tokens(std::string_view s) {
    auto toks = tokenize(s);
    std::erase_if(toks, [](const std::string& t) { return is_stopword(t); });
    return toks;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t fnv1a64(std::string_view bytes) { return fnv1a64(bytes, 14695981039346656037ULL); }

std::string to_hex(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), lower_ascii);
    return out;
}

std::string trim(std::string_view s) {
    const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
    std::size_t b = 0, e = s.size();
    while (b < e && ws(s[b])) ++b;
    while (e > b && ws(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string slugify(std::string_view s) {
    std::string out;
    bool pending_dash = false;
    for (char ch : s) {
        if (is_token_byte(static_cast<unsigned char>(ch))) {
            if (pending_dash && !out.empty()) out.push_back('-');
            pending_dash = false;
            out.push_back(lower_ascii(ch));
        } else {
            pending_dash = true;
        }
    }
    if (out.size() > 80) {
        out.resize(80);
        while (!out.empty() && out.back() == '-') out.pop_back();
    }
    if (out.empty()) out = "item";
    return out;
}

bool contains_token_run(const std::vector<std::string>& haystack,
                        const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > haystack.size()) return false;
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

}  // namespace dialmem::text
