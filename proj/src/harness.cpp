#include "dialmem/harness.hpp"

#include "dialmem/metrics.hpp"
#include "dialmem/text.hpp"

namespace dialmem {

ConversationState conversation_for(const TranscriptFile& transcript, const EngineConfig& config) {
    return new_conversation(transcript.participants, config);
}

IngestStats ingest_transcript(ConversationState& state, const TranscriptFile& transcript, MemoryAgent& agent) {
    IngestStats stats;
    for (const auto& session : transcript.sessions) {
        for (const auto& turn : session.turns) {
            const auto r = agent.ingest(state, session.session_id, turn.speaker, turn.text, turn.datetime);
            ++stats.turns;
            if (r.degenerate) ++stats.degenerate;
        }
    }
    stats.consolidations = state.consolidations;
    stats.nodes = state.graph.nodes().size();
    stats.edges = state.graph.edges().size();
    return stats;
}

json to_json(const IngestStats& s) {
    return {{"turns", s.turns},
            {"consolidations", s.consolidations},
            {"nodes", s.nodes},
            {"edges", s.edges},
            {"degenerate", s.degenerate}};
}

MetricSummary summarize(const std::vector<const QuestionRecord*>& records) {
    MetricSummary m;
    m.questions = records.size();
    double f1 = 0.0, bleu = 0.0;
    std::size_t correct = 0;
    for (const auto* r : records) {
        if (r->f1 && r->bleu1) {
            ++m.scored;
            f1 += *r->f1;
            bleu += *r->bleu1;
        }
        if (r->correct) {
            ++m.choice_items;
            if (*r->correct) ++correct;
        }
    }
    if (m.scored > 0) {
        m.f1 = f1 / static_cast<double>(m.scored);
        m.bleu1 = bleu / static_cast<double>(m.scored);
    }
    if (m.choice_items > 0) m.accuracy = static_cast<double>(correct) / static_cast<double>(m.choice_items);
    return m;
}

EvalReport evaluate(const ConversationState& state, const QuestionFile& questions, Services services,
                    AskOptions options) {
    EvalReport report;
    const auto n = static_cast<std::ptrdiff_t>(questions.items.size());
    report.records.resize(questions.items.size());

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto& item = questions.items[static_cast<std::size_t>(i)];
        auto& rec = report.records[static_cast<std::size_t>(i)];
        rec.index = static_cast<std::size_t>(i);
        rec.question = item.question;
        rec.category = item.category;
        rec.reference = item.reference_answer;
        try {
            const auto a = ask(state, item.question, services, options);
            rec.prediction = a.answer;
            rec.abstained = a.abstained;
            rec.flags = a.flags;
            rec.rounds = a.diagnostics.value("rounds", std::size_t{0});
        } catch (const std::exception& e) {
            rec.error = e.what();
        }
        if (rec.reference) {
            rec.f1 = metrics::token_f1(rec.prediction, *rec.reference);
            rec.bleu1 = metrics::bleu1(rec.prediction, *rec.reference);
        }
        if (!item.choices.empty() && rec.reference) {
            const int picked = metrics::match_choice(rec.prediction, item.choices);
            rec.correct = picked >= 0 &&
                          metrics::normalize_answer(item.choices[static_cast<std::size_t>(picked)]) ==
                              metrics::normalize_answer(*rec.reference);
        }
    }

    std::vector<const QuestionRecord*> all;
    std::map<std::string, std::vector<const QuestionRecord*>> by_cat;
    for (const auto& r : report.records) {
        all.push_back(&r);
        by_cat[std::string(to_string(r.category))].push_back(&r);
    }
    report.overall = summarize(all);
    for (const auto& [name, recs] : by_cat) report.categories[name] = summarize(recs);
    return report;
}

namespace {

json summary_json(const MetricSummary& m) {
    return {{"questions", m.questions},
            {"scored", m.scored},
            {"f1", m.f1},
            {"bleu1", m.bleu1},
            {"choice_items", m.choice_items},
            {"accuracy", m.accuracy ? json(*m.accuracy) : json(nullptr)}};
}

}  // namespace

json to_json(const EvalReport& r) {
    json cats = json::object();
    for (const auto& [name, m] : r.categories) cats[name] = summary_json(m);
    json recs = json::array();
    for (const auto& q : r.records) {
        recs.push_back({{"index", q.index},
                        {"question", q.question},
                        {"category", std::string(to_string(q.category))},
                        {"prediction", q.prediction},
                        {"reference", q.reference ? json(*q.reference) : json(nullptr)},
                        {"f1", q.f1 ? json(*q.f1) : json(nullptr)},
                        {"bleu1", q.bleu1 ? json(*q.bleu1) : json(nullptr)},
                        {"correct", q.correct ? json(*q.correct) : json(nullptr)},
                        {"abstained", q.abstained},
                        {"rounds", q.rounds},
                        {"flags", q.flags},
                        {"error", q.error}});
    }
    return {{"overall", summary_json(r.overall)}, {"categories", cats}, {"questions", recs}};
}

std::string report_hash(const EvalReport& r) { return text::to_hex(text::fnv1a64(to_json(r).dump())); }

}  // namespace dialmem
