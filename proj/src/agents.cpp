#include "dialmem/agents.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "dialmem/text.hpp"

namespace dialmem {

namespace {

std::vector<std::string> strings_of(const json& j) {
    std::vector<std::string> out;
    if (!j.is_array()) return out;
    for (const auto& v : j) {
        if (!v.is_string()) continue;
        auto s = text::trim(v.get<std::string>());
        if (!s.empty()) out.push_back(std::move(s));
    }
    return out;
}

void append_unique(std::vector<std::string>& dst, const std::string& s) {
    if (std::find(dst.begin(), dst.end(), s) == dst.end()) dst.push_back(s);
}

}  // namespace

std::string format_evidence(const std::vector<EvidenceCandidate>& evidence) {
    std::string out;
    for (const auto& c : evidence) {
        out += "[" + c.item_id + "]";
        if (!c.timestamp.empty()) out += " (" + c.timestamp + ")";
        out += " " + c.text + "\n";
    }
    return out;
}

IntegrateResult integrate(std::string_view question, const std::vector<EvidenceCandidate>& evidence,
                          const std::string& current, LlmGateway& llm) {
    IntegrateResult r;
    r.summary = current;
    LlmResponse resp;
    try {
        resp = llm.call(TemplateId::research_integrate, {{"question", std::string(question)},
                                                         {"evidence", format_evidence(evidence)},
                                                         {"current_result", current}});
    } catch (const GatewayError& e) {
        r.ok = false;
        r.flag = std::string("integrate failed: ") + e.what();
        return r;
    }
    if (!resp.ok() || !resp.payload["content"].is_string()) {
        r.ok = false;
        r.flag = "integrate reply unusable: " + (resp.ok() ? std::string("content is not a string") : resp.parse_error);
        return r;
    }
    r.summary = text::trim(resp.payload["content"].get<std::string>());
    r.sources = strings_of(resp.payload["sources"]);
    if (evidence.empty() && current.empty()) r.flag = "low evidence: nothing retrieved";
    return r;
}

ResearchState research(const ConversationState& state, std::string_view question, Services services,
                       AskOptions options) {
    const auto& cfg = state.config;
    ResearchState rs;
    rs.question = std::string(question);
    rs.pending_requests = {rs.question};
    std::set<std::string> retrieved_ids;

    for (int iter = 1; iter <= cfg.max_research_iterations; ++iter) {
        rs.iteration = iter;
        ResearchRound round;
        round.iteration = iter;
        round.queries = std::move(rs.pending_requests);
        rs.pending_requests.clear();

        std::map<std::string, std::size_t> index;
        for (const auto& q : round.queries) {
            const auto target = resolve_target(q, state.participants[0], state.participants[1]).target;
            const auto plan = apply_mode(plan_route(q, cfg, &services.llm), options.mode);
            auto result = retrieve(state, services.embedder, q, plan, target);
            for (const auto& c : result.candidates) {
                retrieved_ids.insert(c.item_id);
                if (!index.count(c.item_id)) {
                    index.emplace(c.item_id, round.evidence.size());
                    round.evidence.push_back(c);
                }
            }
            round.retrievals.push_back(std::move(result));
        }

        auto merged = integrate(rs.question, round.evidence, rs.summary, services.llm);
        if (!merged.flag.empty()) rs.flags.push_back(merged.flag);
        if (!merged.ok) {
            rs.rounds.push_back(std::move(round));
            break;
        }
        rs.summary = merged.summary;
        for (const auto& s : merged.sources) {
            if (retrieved_ids.count(s)) {
                append_unique(rs.sources, s);
            } else {
                rs.flags.push_back("integrate cited unknown source " + s);
            }
        }

        try {
            const auto check = services.llm.call(TemplateId::info_check,
                                                 {{"question", rs.question}, {"result", rs.summary}});
            if (check.ok() && check.payload["enough"].is_boolean()) {
                round.enough = check.payload["enough"].get<bool>();
            } else {
                rs.flags.push_back("info_check reply unusable, treated as not enough");
            }
        } catch (const GatewayError& e) {
            rs.flags.push_back(std::string("info_check failed: ") + e.what());
        }

        if (round.enough || iter == cfg.max_research_iterations) {
            rs.rounds.push_back(std::move(round));
            break;
        }

        try {
            const auto follow = services.llm.call(TemplateId::follow_up,
                                                  {{"question", rs.question}, {"result", rs.summary}});
            if (follow.ok()) round.follow_ups = strings_of(follow.payload["new_requests"]);
        } catch (const GatewayError& e) {
            rs.flags.push_back(std::string("follow_up failed: ") + e.what());
        }
        if (round.follow_ups.size() > kMaxFollowUps) round.follow_ups.resize(kMaxFollowUps);
        rs.pending_requests = round.follow_ups;
        rs.rounds.push_back(std::move(round));
        if (rs.pending_requests.empty()) {
            rs.flags.push_back("no follow-up requests, research stopped");
            break;
        }
    }
    return rs;
}

std::vector<EvidenceCandidate> grounding_items(const ConversationState& state, const Embedder& embedder,
                                               std::string_view question) {
    const auto target = resolve_target(question, state.participants[0], state.participants[1]).target;
    std::vector<const ParticipantBundle*> bundles;
    if (target == Target::user) {
        bundles = {&state.bundles[0]};
    } else if (target == Target::assistant) {
        bundles = {&state.bundles[1]};
    } else {
        bundles = {&state.bundles[0], &state.bundles[1]};
    }
    const auto query = embedder.embed(question);
    std::vector<EvidenceCandidate> out;
    for (const auto* b : bundles) {
        for (auto& c : baseline_retrieve(state, *b, query, state.config.top_k).ranked) {
            const bool kind_ok = c.origins.count(Channel::attr) || c.origins.count(Channel::fact);
            if (kind_ok && c.similarity >= state.config.grounding_threshold) out.push_back(std::move(c));
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const EvidenceCandidate& a, const EvidenceCandidate& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.item_id < b.item_id;
    });
    if (out.size() > kMaxGrounding) out.resize(kMaxGrounding);
    return out;
}

AnswerRecord answer(const ConversationState& state, std::string_view question, const ResearchState& research,
                    Services services) {
    AnswerRecord rec;
    rec.research_summary = research.summary;
    rec.grounding = grounding_items(state, services.embedder, question);
    if (!research.rounds.empty() && !research.rounds.front().retrievals.empty()) {
        rec.plan = research.rounds.front().retrievals.front().plan;
    }

    const auto abstain = [&](std::string flag) {
        rec.answer = std::string(kAbstention);
        rec.abstained = true;
        if (!flag.empty()) rec.flags.push_back(std::move(flag));
    };

    if (text::trim(research.summary).empty() && rec.grounding.empty()) {
        abstain("");
        return rec;
    }

    std::string extra;
    if (!rec.grounding.empty()) {
        extra = "Additional context:\n";
        for (const auto& g : rec.grounding) extra += "- " + g.text + "\n";
    }
    try {
        const auto resp = services.llm.call(TemplateId::working_answer,
                                            {{"speaker_a", state.participants[0]},
                                             {"speaker_b", state.participants[1]},
                                             {"research_summary", research.summary},
                                             {"extra_context", extra},
                                             {"question", std::string(question)}});
        if (text::trim(resp.raw).empty()) {
            abstain("answer reply was empty");
        } else {
            rec.answer = resp.raw;
        }
    } catch (const GatewayError& e) {
        abstain(std::string("answer failed: ") + e.what());
    }
    return rec;
}

AnswerRecord ask(const ConversationState& state, std::string_view question, Services services,
                 AskOptions options) {
    const auto rs = research(state, question, services, options);
    auto rec = answer(state, question, rs, services);
    rec.flags.insert(rec.flags.begin(), rs.flags.begin(), rs.flags.end());
    rec.diagnostics = {{"research", to_json(rs)}, {"rounds", rs.rounds.size()}};
    return rec;
}

json to_json(const ResearchState& r) {
    json rounds = json::array();
    for (const auto& round : r.rounds) {
        json retrievals = json::array();
        for (const auto& x : round.retrievals) retrievals.push_back(to_json(x));
        rounds.push_back({{"iteration", round.iteration},
                          {"queries", round.queries},
                          {"retrievals", retrievals},
                          {"evidence_ids",
                           [&] {
                               json ids = json::array();
                               for (const auto& c : round.evidence) ids.push_back(c.item_id);
                               return ids;
                           }()},
                          {"enough", round.enough},
                          {"follow_ups", round.follow_ups}});
    }
    return {{"question", r.question}, {"summary", r.summary}, {"sources", r.sources},
            {"iteration", r.iteration}, {"rounds", rounds},   {"flags", r.flags}};
}

json to_json(const AnswerRecord& a) {
    json grounding = json::array();
    for (const auto& g : a.grounding) grounding.push_back(to_json(g));
    return {{"answer", a.answer},
            {"research_summary", a.research_summary},
            {"grounding", grounding},
            {"plan", to_json(a.plan)},
            {"abstained", a.abstained},
            {"flags", a.flags},
            {"diagnostics", a.diagnostics.is_null() ? json::object() : a.diagnostics}};
}

}  // namespace dialmem
