#include "dialmem/core.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

namespace dialmem {

std::string_view to_string(Attitude a) {
    switch (a) {
        case Attitude::Positive: return "Positive";
        case Attitude::Negative: return "Negative";
        case Attitude::Mixed: return "Mixed";
    }
    return "Mixed";
}

std::optional<Attitude> parse_attitude(std::string_view s) {
    std::string low;
    for (char c : s) low.push_back(static_cast<char>((c >= 'A' && c <= 'Z') ? c - 'A' + 'a' : c));
    if (low == "positive") return Attitude::Positive;
    if (low == "negative") return Attitude::Negative;
    if (low == "mixed") return Attitude::Mixed;
    return std::nullopt;
}

std::string_view to_string(EdgeType t) {
    switch (t) {
        case EdgeType::mentions: return "mentions";
        case EdgeType::supports: return "supports";
        case EdgeType::same_topic: return "same_topic";
        case EdgeType::temporal_next: return "temporal_next";
        case EdgeType::speaker_related: return "speaker_related";
    }
    return "mentions";
}

std::optional<EdgeType> parse_edge_type(std::string_view s) {
    for (EdgeType t : kAllEdgeTypes) {
        if (to_string(t) == s) return t;
    }
    return std::nullopt;
}

std::string_view to_string(PlannerMode m) {
    return m == PlannerMode::rule_only ? "rule_only" : "hybrid";
}

std::optional<PlannerMode> parse_planner_mode(std::string_view s) {
    if (s == "rule_only") return PlannerMode::rule_only;
    if (s == "hybrid") return PlannerMode::hybrid;
    return std::nullopt;
}

EngineConfig default_config() {
    EngineConfig c;
    c.working_capacity = 20;
    c.consolidation_segment = 5;
    c.top_k = 10;
    c.fact_drop_threshold = 0.1;
    c.base_hop_depth = 1;
    c.base_seed_count = 2;
    c.hop_decay = 0.85;
    c.max_research_iterations = 2;
    c.fusion = FusionWeights{0.7, 0.1, 0.1, 0.1};
    c.edge_priors = {
        {EdgeType::mentions, 0.75},
        {EdgeType::supports, 0.90},
        {EdgeType::same_topic, 0.55},
        {EdgeType::temporal_next, 0.70},
        {EdgeType::speaker_related, 0.60},
    };
    c.refine_threshold = 0.75;
    c.planner_mode = PlannerMode::hybrid;
    c.grounding_threshold = 0.5;
    c.embedding_dimension = 384;
    return c;
}

void validate(const EngineConfig& c) {
    const auto fraction = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
    if (c.consolidation_segment < 1) throw InputError("config: consolidation_segment must be >= 1");
    if (c.working_capacity < c.consolidation_segment)
        throw InputError("config: working_capacity must be >= consolidation_segment");
    if (c.top_k < 1) throw InputError("config: top_k must be >= 1");
    if (c.base_hop_depth < 0) throw InputError("config: base_hop_depth must be >= 0");
    if (c.base_seed_count < 1) throw InputError("config: base_seed_count must be >= 1");
    if (c.max_research_iterations < 1) throw InputError("config: max_research_iterations must be >= 1");
    if (c.embedding_dimension < 1) throw InputError("config: embedding_dimension must be >= 1");
    if (!fraction(c.fact_drop_threshold)) throw InputError("config: fact_drop_threshold outside [0,1]");
    if (!fraction(c.hop_decay)) throw InputError("config: hop_decay outside [0,1]");
    if (!fraction(c.refine_threshold)) throw InputError("config: refine_threshold outside [0,1]");
    if (!fraction(c.grounding_threshold)) throw InputError("config: grounding_threshold outside [0,1]");
    for (double w : {c.fusion.alpha, c.fusion.beta, c.fusion.gamma, c.fusion.delta}) {
        if (!std::isfinite(w) || w < 0.0) throw InputError("config: fusion weights must be >= 0");
    }
    for (EdgeType t : kAllEdgeTypes) {
        auto it = c.edge_priors.find(t);
        if (it == c.edge_priors.end())
            throw InputError("config: edge_priors missing " + std::string(to_string(t)));
        if (!fraction(it->second))
            throw InputError("config: edge prior " + std::string(to_string(t)) + " outside [0,1]");
    }
}

namespace {

bool read_int(std::string_view s, std::size_t& pos, int digits, int& out) {
    if (pos + static_cast<std::size_t>(digits) > s.size()) return false;
    int v = 0;
    for (int i = 0; i < digits; ++i) {
        char c = s[pos + static_cast<std::size_t>(i)];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    pos += static_cast<std::size_t>(digits);
    out = v;
    return true;
}

}  // namespace

std::optional<std::int64_t> parse_timestamp(std::string_view s) {
    using namespace std::chrono;
    std::size_t pos = 0;
    int y = 0, mo = 0, d = 0, hh = 0, mm = 0, ss = 0;
    if (!read_int(s, pos, 4, y)) return std::nullopt;
    if (pos >= s.size() || s[pos++] != '-') return std::nullopt;
    if (!read_int(s, pos, 2, mo)) return std::nullopt;
    if (pos >= s.size() || s[pos++] != '-') return std::nullopt;
    if (!read_int(s, pos, 2, d)) return std::nullopt;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    int offset_seconds = 0;
    if (pos < s.size() && (s[pos] == 'T' || s[pos] == ' ')) {
        ++pos;
        if (!read_int(s, pos, 2, hh)) return std::nullopt;
        if (pos >= s.size() || s[pos++] != ':') return std::nullopt;
        if (!read_int(s, pos, 2, mm)) return std::nullopt;
        if (pos < s.size() && s[pos] == ':') {
            ++pos;
            if (!read_int(s, pos, 2, ss)) return std::nullopt;
            if (pos < s.size() && s[pos] == '.') {
                ++pos;
                while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
            }
        }
        if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
        if (pos < s.size()) {
            if (s[pos] == 'Z') {
                ++pos;
            } else if (s[pos] == '+' || s[pos] == '-') {
                const int sign = s[pos] == '-' ? -1 : 1;
                ++pos;
                int oh = 0, om = 0;
                if (!read_int(s, pos, 2, oh)) return std::nullopt;
                if (pos < s.size() && s[pos] == ':') ++pos;
                if (!read_int(s, pos, 2, om)) return std::nullopt;
                offset_seconds = sign * (oh * 3600 + om * 60);
            }
        }
    }
    if (pos != s.size()) return std::nullopt;
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<std::int64_t>(days) * 86400 + hh * 3600 + mm * 60 + ss - offset_seconds;
}

std::string format_timestamp(std::int64_t epoch_seconds) {
    using namespace std::chrono;
    std::int64_t days = epoch_seconds / 86400;
    std::int64_t rem = epoch_seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(rem / 3600), static_cast<int>((rem / 60) % 60), static_cast<int>(rem % 60));
    return buf;
}

}  // namespace dialmem
