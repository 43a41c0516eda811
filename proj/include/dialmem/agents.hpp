#pragma once

#include <string>
#include <vector>

#include "dialmem/retriever.hpp"
#include "dialmem/writer.hpp"

namespace dialmem {

inline constexpr std::string_view kAbstention = "No evidence available";
inline constexpr std::size_t kMaxFollowUps = 3;
inline constexpr std::size_t kMaxGrounding = 3;

struct ResearchRound {
    int iteration = 0;
    std::vector<std::string> queries;
    std::vector<RetrievalResult> retrievals;  // one per query
    std::vector<EvidenceCandidate> evidence;  // merged by item id
    bool enough = false;
    std::vector<std::string> follow_ups;
};

struct ResearchState {
    std::string question;
    std::string summary;
    std::vector<std::string> sources;
    std::vector<std::string> pending_requests;
    int iteration = 0;
    std::vector<ResearchRound> rounds;
    std::vector<std::string> flags;
};

struct IntegrateResult {
    std::string summary;
    std::vector<std::string> sources;
    bool ok = true;
    std::string flag;
};

struct AskOptions {
    RouteMode mode = RouteMode::hybrid;
};

/// Evidence block handed to the integrate prompt, one line per item.
std::string format_evidence(const std::vector<EvidenceCandidate>& evidence);

IntegrateResult integrate(std::string_view question, const std::vector<EvidenceCandidate>& evidence,
                          const std::string& current, LlmGateway& llm);

/// Planning -> Search -> Integrate -> Reflection, at most max_research_iterations rounds.
ResearchState research(const ConversationState& state, std::string_view question, Services services,
                       AskOptions options = {});

struct AnswerRecord {
    std::string answer;
    std::string research_summary;
    std::vector<EvidenceCandidate> grounding;
    RoutePlan plan;  // first-round plan for the original question
    bool abstained = false;
    std::vector<std::string> flags;
    json diagnostics;
};

/// Persona/fact candidates at or above the grounding threshold, best first.
std::vector<EvidenceCandidate> grounding_items(const ConversationState& state, const Embedder& embedder,
                                               std::string_view question);

AnswerRecord answer(const ConversationState& state, std::string_view question, const ResearchState& research,
                    Services services);

/// research() followed by answer().
AnswerRecord ask(const ConversationState& state, std::string_view question, Services services,
                 AskOptions options = {});

json to_json(const ResearchState& r);
json to_json(const AnswerRecord& a);

}  // namespace dialmem
