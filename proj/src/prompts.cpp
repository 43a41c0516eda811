#include <algorithm>

#include "dialmem/llm.hpp"

namespace dialmem {

namespace {

constexpr std::string_view kMessageUnderstanding = R"(Perform topic tagging on this message from user.

Requirements:
1. Identify one primary topic/event in the message.
2. Infer the author's attitude toward the event.
3. Infer the reason behind the attitude.
4. Extract facts or events revealed by the message.
5. Extract user attributes revealed by the message.
6. Produce a one-sentence summary and a brief rationale.

Return JSON:
{
  "text": "original message",
  "tags": {
    "topic": ["..."],
    "attitude": ["Positive|Negative|Mixed"],
    "reason": ["..."],
    "facts": ["..."],
    "attributes": ["..."]
  },
  "summary": "...",
  "rationale": "..."
}

Message:
"{message}")";

#define DIALMEM_ROUTER_BODY(KIND)                                                   \
    "You are a user profile updater that maintains a dictionary of existing\n"      \
    "memory items. For each new message-derived item, analyze whether to update\n"  \
    "the profile and respond in JSON format.\n"                                     \
    "\n"                                                                            \
    "Input:\n"                                                                      \
    "- Profile: existing topics / facts / attributes\n"                             \
    "- Message: a new structured item extracted from the latest utterance\n"        \
    "\n"                                                                            \
    "Processing:\n"                                                                 \
    "- Compare the new item with existing entries semantically.\n"                  \
    "- Choose one action:\n"                                                        \
    "  * UPDATE: a contradictory or revised entry already exists\n"                 \
    "  * ADD: the item is new\n"                                                    \
    "  * IGNORE: an equivalent entry already exists\n"                              \
    "- If there is no matched target, return \"None\".\n"                           \
    "\n"                                                                            \
    "Return JSON:\n"                                                                \
    "{\n"                                                                           \
    "  \"Action\": \"[UPDATE|ADD|IGNORE]\",\n"                                      \
    "  \"Target\": \"matched entry or 'None'\"\n"                                   \
    "}\n"                                                                           \
    "\n"                                                                            \
    "Profile (existing " KIND "):\n"                                                \
    "{profile}\n"                                                                   \
    "\n"                                                                            \
    "Message:\n"                                                                    \
    "{item}"

constexpr std::string_view kRouterEvent = DIALMEM_ROUTER_BODY("events");
constexpr std::string_view kRouterFact = DIALMEM_ROUTER_BODY("facts");
constexpr std::string_view kRouterAttribute = DIALMEM_ROUTER_BODY("attributes");

#undef DIALMEM_ROUTER_BODY

constexpr std::string_view kTopicMerge = R"(Given a group of topics extracted from users' messages, analyze whether
these topics can be logically grouped under common themes.

Rules:
1. Only merge topics that talk about the same underlying event/theme.
2. Preserve the original meaning and context of each topic.
3. Extract as many common details as possible when naming the merged topic.
4. Do not reveal the user's attitude in the merged topic name.
5. Keep distinct concepts separate.

Input:
{topics}

Return JSON:
{
  "Grouped Topics": {
    "NewTopicName1": ["original_topic1", "original_topic2"],
    "NewTopicName2": ["original_topic3"]
  },
  "Grouping Rationale": "Explanation of the grouping"
})";

constexpr std::string_view kRouteRefine = R"(Refine a memory retrieval route plan for precise QA.
Prefer exact extraction for single-hop/temporal questions and avoid
unnecessary graph expansion.

Question:
{question}

Current plan JSON:
{current_plan}

Return only JSON with keys:
{
  "use_graph": true/false,
  "use_baseline": true/false,
  "graph_topn": integer,
  "hop_k": integer,
  "fusion_alpha": number,
  "fusion_beta": number,
  "fusion_gamma": number,
  "fusion_delta": number,
  "confidence": number
})";

constexpr std::string_view kIntegrate = R"(You are the IntegrateAgent. Merge newly retrieved evidence with the current
working notes to produce a consolidated factual summary relevant to the
QUESTION.

QUESTION:
{question}

EVIDENCE:
{evidence}

CURRENT RESULT:
{current_result}

Instructions:
1. Keep useful, on-topic information from CURRENT RESULT.
2. Add new, relevant, well-supported facts from EVIDENCE.
3. Remove off-topic content.
4. Prefer concrete details such as entities, dates, numbers, and events.
5. Resolve contradictions by preferring more specific or more recent evidence.
6. Use timestamps when answering temporal questions.

Return JSON:
{
  "content": "merged factual summary",
  "sources": ["source-1", "source-2", ...]
})";

constexpr std::string_view kInfoCheck = R"(You are the InfoCheckAgent. Judge whether the collected information is
sufficient to answer the QUESTION.

QUESTION:
{question}

RESULT:
{result}

Return JSON:
{
  "enough": true | false
})";

constexpr std::string_view kFollowUp = R"(You are the FollowUpRequestAgent. Generate focused follow-up retrieval
queries for the missing information.

QUESTION:
{question}

RESULT:
{result}

Instructions:
1. Identify what is still missing.
2. Generate 1-3 targeted retrieval queries.
3. Mention concrete entities or events whenever possible.

Return JSON:
{
  "new_requests": ["query-1", "query-2", ...]
})";

constexpr std::string_view kAnswerSystem = R"(You are role-playing as {speaker_b} in a conversation with {speaker_a}.
Your task is to answer questions about {speaker_a} or {speaker_b} in an
extremely concise manner based on the provided research summary.
Any content referring to 'User' refers to {speaker_a}.
Answer as concisely as possible and try to deduce clear answers rather than
return vague statements.)";

constexpr std::string_view kAnswerUser = R"(<RESEARCH SUMMARY>
{research_summary}

{extra_context}

The question is: {question}

Please only provide the content of the answer.
For date questions, use a specific format such as "15 July 2023" whenever
possible. For duration questions, answer in years, months, or days.
Generate answers primarily composed of concrete entities.)";

const std::array<PromptTemplate, 10> kTemplates = {{
    {TemplateId::message_understanding, "", kMessageUnderstanding},
    {TemplateId::episodic_router_event, "", kRouterEvent},
    {TemplateId::episodic_router_fact, "", kRouterFact},
    {TemplateId::episodic_router_attribute, "", kRouterAttribute},
    {TemplateId::topic_merge, "", kTopicMerge},
    {TemplateId::route_refine, "", kRouteRefine},
    {TemplateId::research_integrate, "", kIntegrate},
    {TemplateId::info_check, "", kInfoCheck},
    {TemplateId::follow_up, "", kFollowUp},
    {TemplateId::working_answer, kAnswerSystem, kAnswerUser},
}};

bool is_name_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

// Calls fn(name, begin, end) for each {name} occurrence. JSON braces are skipped.
template <typename Fn>
void scan_placeholders(std::string_view body, Fn&& fn) {
    std::size_t i = 0;
    while (i < body.size()) {
        if (body[i] == '{') {
            std::size_t j = i + 1;
            while (j < body.size() && is_name_char(body[j])) ++j;
            if (j > i + 1 && j < body.size() && body[j] == '}') {
                fn(body.substr(i + 1, j - i - 1), i, j + 1);
                i = j + 1;
                continue;
            }
        }
        ++i;
    }
}

std::string fill(std::string_view body, const Bindings& bindings) {
    std::string out;
    out.reserve(body.size());
    std::size_t last = 0;
    scan_placeholders(body, [&](std::string_view name, std::size_t b, std::size_t e) {
        auto it = bindings.find(std::string(name));
        if (it == bindings.end()) throw TemplateError("missing binding for placeholder {" + std::string(name) + "}");
        out.append(body.substr(last, b - last));
        out.append(it->second);
        last = e;
    });
    out.append(body.substr(last));
    return out;
}

}  // namespace

std::string_view to_string(TemplateId id) {
    switch (id) {
        case TemplateId::message_understanding: return "message_understanding";
        case TemplateId::episodic_router_event: return "episodic_router_event";
        case TemplateId::episodic_router_fact: return "episodic_router_fact";
        case TemplateId::episodic_router_attribute: return "episodic_router_attribute";
        case TemplateId::topic_merge: return "topic_merge";
        case TemplateId::route_refine: return "route_refine";
        case TemplateId::research_integrate: return "research_integrate";
        case TemplateId::info_check: return "info_check";
        case TemplateId::follow_up: return "follow_up";
        case TemplateId::working_answer: return "working_answer";
    }
    return "message_understanding";
}

std::optional<TemplateId> parse_template_id(std::string_view s) {
    for (TemplateId id : kAllTemplates) {
        if (to_string(id) == s) return id;
    }
    return std::nullopt;
}

const PromptTemplate& prompt_template(TemplateId id) { return kTemplates[static_cast<std::size_t>(id)]; }

std::vector<std::string> placeholders(TemplateId id) {
    const auto& t = prompt_template(id);
    std::vector<std::string> out;
    const auto collect = [&](std::string_view name, std::size_t, std::size_t) {
        if (std::find(out.begin(), out.end(), name) == out.end()) out.emplace_back(name);
    };
    scan_placeholders(t.system_body, collect);
    scan_placeholders(t.user_body, collect);
    return out;
}

RenderedPrompt render(TemplateId id, const Bindings& bindings) {
    const auto& t = prompt_template(id);
    return {fill(t.system_body, bindings), fill(t.user_body, bindings)};
}

}  // namespace dialmem
