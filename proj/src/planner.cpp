#include "dialmem/planner.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "dialmem/text.hpp"

namespace dialmem {

namespace {

constexpr std::array<std::string_view, 9> kTemporal = {"when", "date", "year", "month", "time",
                                                       "last", "ago",  "before", "after"};
constexpr std::array<std::string_view, 7> kRelation = {"why", "because", "cause", "how",
                                                       "relationship", "connect", "between"};
constexpr std::array<std::string_view, 6> kAttribute = {"prefer", "like", "favorite",
                                                        "personality", "trait", "attribute"};
constexpr std::array<std::string_view, 9> kSingleHop = {"who", "what", "where", "which", "name",
                                                        "did", "does", "is",  "was"};

bool mentions(const std::vector<std::string>& tokens, const ParticipantId& name) {
    const auto needle = text::tokenize(name);
    return !needle.empty() && text::contains_token_run(tokens, needle);
}

std::vector<std::string> matches(const std::vector<std::string>& tokens, std::span<const std::string_view> words) {
    std::vector<std::string> out;
    for (const auto& t : tokens) {
        if (std::find(words.begin(), words.end(), t) != words.end() &&
            std::find(out.begin(), out.end(), t) == out.end()) {
            out.push_back(t);
        }
    }
    return out;
}

std::optional<double> number(const json& j) {
    if (!j.is_number()) return std::nullopt;
    const double v = j.get<double>();
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

int clip_int(double v, int lo, int hi) {
    return static_cast<int>(std::clamp(std::round(v), static_cast<double>(lo), static_cast<double>(hi)));
}

}  // namespace

std::string_view to_string(Target t) {
    switch (t) {
        case Target::user: return "user";
        case Target::assistant: return "assistant";
        case Target::both: return "both";
        case Target::ambiguous: return "ambiguous";
    }
    return "ambiguous";
}

std::string_view to_string(CueCategory c) {
    switch (c) {
        case CueCategory::temporal: return "temporal";
        case CueCategory::relation: return "relation";
        case CueCategory::attribute: return "attribute";
        case CueCategory::single_hop: return "single_hop";
    }
    return "single_hop";
}

std::span<const std::string_view> cue_words(CueCategory c) {
    switch (c) {
        case CueCategory::temporal: return kTemporal;
        case CueCategory::relation: return kRelation;
        case CueCategory::attribute: return kAttribute;
        case CueCategory::single_hop: return kSingleHop;
    }
    return {};
}

TargetResolution resolve_target(std::string_view question, const ParticipantId& user_name,
                                const ParticipantId& assistant_name) {
    if (user_name.empty() || assistant_name.empty() || user_name == assistant_name) {
        throw InputError("target resolution needs two distinct non-empty names");
    }
    const auto tokens = text::tokenize(question);
    const bool u = mentions(tokens, user_name);
    const bool a = mentions(tokens, assistant_name);
    if (u && a) return {Target::both};
    if (u) return {Target::user};
    if (a) return {Target::assistant};
    return {Target::ambiguous};
}

CueReport detect_cues(std::string_view question) {
    const auto tokens = text::tokenize(question);
    CueReport r;
    r.temporal_words = matches(tokens, kTemporal);
    r.relation_words = matches(tokens, kRelation);
    r.attribute_words = matches(tokens, kAttribute);
    r.single_hop_words = matches(tokens, kSingleHop);
    r.temporal = !r.temporal_words.empty();
    r.relation = !r.relation_words.empty();
    r.attribute = !r.attribute_words.empty();
    r.single_hop = !r.single_hop_words.empty();
    return r;
}

double rule_confidence(const CueReport& cues) {
    const int n = cues.categories();
    if (n == 0) return 0.6;
    if (cues.single_hop && (cues.temporal || cues.relation)) return 0.6;
    if (n == 1) return 0.9;
    return 0.8;
}

RoutePlan plan_rule(std::string_view, const CueReport& cues, const EngineConfig& config) {
    RoutePlan p;
    p.use_graph = cues.temporal || cues.relation;
    p.use_baseline = true;
    p.graph_topn = config.base_seed_count;
    p.hop_k = config.base_hop_depth;
    p.fusion = config.fusion;
    p.confidence = rule_confidence(cues);
    const auto bump = [&](EdgeType t) {
        const auto it = config.edge_priors.find(t);
        const double base = it == config.edge_priors.end() ? 0.0 : it->second;
        p.edge_prior_overrides[t] = std::min(1.0, base + kPriorBump);
    };
    if (cues.temporal) bump(EdgeType::temporal_next);
    if (cues.attribute) bump(EdgeType::speaker_related);
    return p;
}

std::optional<RoutePlan> apply_refinement(const RoutePlan& plan, const json& proposal) {
    if (!proposal.is_object()) return std::nullopt;
    const auto get_bool = [&](const char* k) -> std::optional<bool> {
        const auto it = proposal.find(k);
        if (it == proposal.end() || !it->is_boolean()) return std::nullopt;
        return it->get<bool>();
    };
    const auto get_num = [&](const char* k) -> std::optional<double> {
        const auto it = proposal.find(k);
        if (it == proposal.end()) return std::nullopt;
        return number(*it);
    };
    const auto use_graph = get_bool("use_graph");
    const auto use_baseline = get_bool("use_baseline");
    const auto topn = get_num("graph_topn");
    const auto hop = get_num("hop_k");
    const auto a = get_num("fusion_alpha");
    const auto b = get_num("fusion_beta");
    const auto g = get_num("fusion_gamma");
    const auto d = get_num("fusion_delta");
    const auto conf = get_num("confidence");
    if (!use_graph || !use_baseline || !topn || !hop || !a || !b || !g || !d || !conf) return std::nullopt;

    RoutePlan p = plan;
    p.use_graph = *use_graph;
    p.use_baseline = *use_baseline || !*use_graph;
    p.graph_topn = clip_int(*topn, clip::kTopnMin, clip::kTopnMax);
    p.hop_k = clip_int(*hop, clip::kHopMin, clip::kHopMax);
    p.fusion.alpha = std::clamp(*a, clip::kAlphaMin, clip::kAlphaMax);
    p.fusion.beta = std::clamp(*b, clip::kBetaMin, clip::kBetaMax);
    p.fusion.gamma = std::clamp(*g, clip::kGammaMin, clip::kGammaMax);
    p.fusion.delta = std::clamp(*d, clip::kDeltaMin, clip::kDeltaMax);
    p.confidence = std::clamp(*conf, 0.0, 1.0);
    p.refined = true;
    return p;
}

RoutePlan refine_plan(std::string_view question, const RoutePlan& plan, LlmGateway& llm) {
    LlmResponse resp;
    try {
        resp = llm.call(TemplateId::route_refine,
                        {{"question", std::string(question)}, {"current_plan", to_json(plan).dump(2)}});
    } catch (const GatewayError&) {
        return plan;
    }
    if (!resp.ok()) return plan;
    return apply_refinement(plan, resp.payload).value_or(plan);
}

RoutePlan plan_route(std::string_view question, const EngineConfig& config, LlmGateway* llm) {
    auto plan = plan_rule(question, detect_cues(question), config);
    if (llm && config.planner_mode == PlannerMode::hybrid && plan.confidence < config.refine_threshold) {
        plan = refine_plan(question, plan, *llm);
    }
    return plan;
}

std::string_view to_string(RouteMode m) {
    switch (m) {
        case RouteMode::semantic: return "semantic";
        case RouteMode::graph: return "graph";
        case RouteMode::hybrid: return "hybrid";
    }
    return "hybrid";
}

std::optional<RouteMode> parse_route_mode(std::string_view s) {
    for (RouteMode m : {RouteMode::semantic, RouteMode::graph, RouteMode::hybrid}) {
        if (to_string(m) == s) return m;
    }
    return std::nullopt;
}

RoutePlan apply_mode(RoutePlan plan, RouteMode mode) {
    if (mode == RouteMode::semantic) {
        plan.use_graph = false;
        plan.use_baseline = true;
    } else if (mode == RouteMode::graph) {
        plan.use_graph = true;
        plan.graph_topn = std::max(plan.graph_topn, 1);
        plan.hop_k = std::max(plan.hop_k, 0);
    }
    return plan;
}

EdgePriors effective_priors(const RoutePlan& plan, const EngineConfig& config) {
    EdgePriors out = config.edge_priors;
    for (const auto& [t, v] : plan.edge_prior_overrides) out[t] = v;
    return out;
}

void check_plan(const RoutePlan& plan) {
    if (!plan.use_graph && !plan.use_baseline) throw InvariantError("plan disables every channel");
    if (plan.use_graph && (plan.graph_topn < 1 || plan.hop_k < 0)) {
        throw InvariantError("graph plan needs graph_topn >= 1 and hop_k >= 0");
    }
    if (plan.refined) {
        const auto& f = plan.fusion;
        const bool inside = f.alpha >= clip::kAlphaMin && f.alpha <= clip::kAlphaMax && f.beta >= clip::kBetaMin &&
                            f.beta <= clip::kBetaMax && f.gamma >= clip::kGammaMin && f.gamma <= clip::kGammaMax &&
                            f.delta >= clip::kDeltaMin && f.delta <= clip::kDeltaMax &&
                            plan.graph_topn >= clip::kTopnMin && plan.graph_topn <= clip::kTopnMax &&
                            plan.hop_k >= clip::kHopMin && plan.hop_k <= clip::kHopMax;
        if (!inside) throw InvariantError("refined plan outside clip ranges");
    }
}

json to_json(const RoutePlan& plan) {
    json overrides = json::object();
    for (const auto& [t, v] : plan.edge_prior_overrides) overrides[std::string(to_string(t))] = v;
    return {
        {"use_graph", plan.use_graph},
        {"use_baseline", plan.use_baseline},
        {"graph_topn", plan.graph_topn},
        {"hop_k", plan.hop_k},
        {"fusion_alpha", plan.fusion.alpha},
        {"fusion_beta", plan.fusion.beta},
        {"fusion_gamma", plan.fusion.gamma},
        {"fusion_delta", plan.fusion.delta},
        {"confidence", plan.confidence},
        {"refined", plan.refined},
        {"edge_prior_overrides", overrides},
    };
}

}  // namespace dialmem
