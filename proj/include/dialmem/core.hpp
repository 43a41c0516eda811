#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dialmem {

using ParticipantId = std::string;
using TurnId = std::int64_t;

// Error families map one-to-one onto CLI exit codes (2, 3, 4).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GatewayError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct Utterance {
    TurnId turn_id = 0;
    std::string session_id;
    ParticipantId speaker;
    std::string text;
    std::string timestamp;  // ISO-8601; no zone means UTC
};

enum class Attitude { Positive, Negative, Mixed };

std::string_view to_string(Attitude a);
std::optional<Attitude> parse_attitude(std::string_view s);

// Canonical parse of one utterance; every memory write consumes this.
struct NormalizedRecord {
    TurnId source_turn = 0;
    std::string summary;
    std::vector<std::string> topic;
    Attitude attitude = Attitude::Mixed;
    std::vector<std::string> reason;
    std::vector<std::string> facts;
    std::vector<std::string> attributes;
    std::string rationale;
    ParticipantId speaker;
    std::string timestamp;
    bool degenerate = false;  // produced by the fallback path, not the LLM
};

enum class EdgeType { mentions, supports, same_topic, temporal_next, speaker_related };

inline constexpr std::array<EdgeType, 5> kAllEdgeTypes = {
    EdgeType::mentions, EdgeType::supports, EdgeType::same_topic,
    EdgeType::temporal_next, EdgeType::speaker_related};

std::string_view to_string(EdgeType t);
std::optional<EdgeType> parse_edge_type(std::string_view s);

using EdgePriors = std::map<EdgeType, double>;

struct FusionWeights {
    double alpha = 0.7;  // baseline rank
    double beta = 0.1;   // graph rank
    double gamma = 0.1;  // recency
    double delta = 0.1;  // fact support

    bool operator==(const FusionWeights&) const = default;
};

enum class PlannerMode { rule_only, hybrid };

std::string_view to_string(PlannerMode m);
std::optional<PlannerMode> parse_planner_mode(std::string_view s);

struct EngineConfig {
    int working_capacity = 20;
    int consolidation_segment = 5;
    int top_k = 10;
    double fact_drop_threshold = 0.1;
    int base_hop_depth = 1;
    int base_seed_count = 2;
    double hop_decay = 0.85;
    int max_research_iterations = 2;
    FusionWeights fusion;
    EdgePriors edge_priors;
    double refine_threshold = 0.75;
    PlannerMode planner_mode = PlannerMode::hybrid;
    // Minimum baseline similarity for persona/fact snippets handed to the answer prompt.
    double grounding_threshold = 0.5;
    int embedding_dimension = 384;

    bool operator==(const EngineConfig&) const = default;
};

/// Table defaults used for the benchmark configuration.
EngineConfig default_config();

/// Throws InputError naming the first violated constraint.
void validate(const EngineConfig& config);

/// Parses "YYYY-MM-DD[THH:MM[:SS[.fff]]][Z|+hh:mm|-hh:mm]" into Unix seconds.
/// A missing zone is read as UTC.
std::optional<std::int64_t> parse_timestamp(std::string_view text);

/// Formats Unix seconds as "YYYY-MM-DDTHH:MM:SS".
std::string format_timestamp(std::int64_t epoch_seconds);

}  // namespace dialmem
