#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dialmem/core.hpp"
#include "dialmem/llm.hpp"

namespace dialmem {

enum class Target { user, assistant, both, ambiguous };

std::string_view to_string(Target t);

struct TargetResolution {
    Target target = Target::ambiguous;
};

/// Case-insensitive whole-word name matching.
TargetResolution resolve_target(std::string_view question, const ParticipantId& user_name,
                                const ParticipantId& assistant_name);

enum class CueCategory { temporal, relation, attribute, single_hop };

std::string_view to_string(CueCategory c);

/// The fixed cue vocabulary for one category.
std::span<const std::string_view> cue_words(CueCategory c);

struct CueReport {
    bool temporal = false;
    bool relation = false;
    bool attribute = false;
    bool single_hop = false;
    std::vector<std::string> temporal_words;
    std::vector<std::string> relation_words;
    std::vector<std::string> attribute_words;
    std::vector<std::string> single_hop_words;

    int categories() const { return temporal + relation + attribute + single_hop; }
};

CueReport detect_cues(std::string_view question);

struct RoutePlan {
    bool use_graph = false;
    bool use_baseline = true;
    int graph_topn = 2;
    int hop_k = 1;
    EdgePriors edge_prior_overrides;
    FusionWeights fusion;
    double confidence = 0.0;
    bool refined = false;

    bool operator==(const RoutePlan&) const = default;
};

/// Refinement clip intervals.
namespace clip {
inline constexpr double kAlphaMin = 0.90, kAlphaMax = 1.00;
inline constexpr double kBetaMin = 0.0, kBetaMax = 0.08;
inline constexpr double kGammaMin = 0.0, kGammaMax = 0.03;
inline constexpr double kDeltaMin = 0.0, kDeltaMax = 0.03;
inline constexpr int kTopnMin = 1, kTopnMax = 5;
inline constexpr int kHopMin = 0, kHopMax = 3;
}  // namespace clip

inline constexpr double kPriorBump = 0.1;

double rule_confidence(const CueReport& cues);

RoutePlan plan_rule(std::string_view question, const CueReport& cues, const EngineConfig& config);

/// Applies a refiner proposal (route_refine reply payload) to `plan` with
/// every field clipped. nullopt when any field has the wrong type.
std::optional<RoutePlan> apply_refinement(const RoutePlan& plan, const json& proposal);

/// Asks the route_refine prompt for a proposal. Any failure returns `plan` unchanged.
RoutePlan refine_plan(std::string_view question, const RoutePlan& plan, LlmGateway& llm);

/// Rule plan, refined when the mode is hybrid and confidence is below threshold.
RoutePlan plan_route(std::string_view question, const EngineConfig& config, LlmGateway* llm);

/// Caller-level route override: semantic pins use_graph off, graph pins it
/// on, hybrid leaves the planner's choice.
enum class RouteMode { semantic, graph, hybrid };

std::string_view to_string(RouteMode m);
std::optional<RouteMode> parse_route_mode(std::string_view s);
RoutePlan apply_mode(RoutePlan plan, RouteMode mode);

/// Config priors with the plan's overrides applied.
EdgePriors effective_priors(const RoutePlan& plan, const EngineConfig& config);

/// Checks the structural plan invariants; throws InvariantError.
void check_plan(const RoutePlan& plan);

json to_json(const RoutePlan& plan);

}  // namespace dialmem
