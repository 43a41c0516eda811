#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dialmem/agents.hpp"
#include "dialmem/persistence.hpp"

namespace dialmem {

struct IngestStats {
    std::size_t turns = 0;
    std::size_t consolidations = 0;
    std::size_t nodes = 0;
    std::size_t edges = 0;
    std::size_t degenerate = 0;
};

/// Fresh conversation for the transcript's participants.
ConversationState conversation_for(const TranscriptFile& transcript, const EngineConfig& config);

/// Feeds every turn through the Memory Agent in transcript order.
IngestStats ingest_transcript(ConversationState& state, const TranscriptFile& transcript, MemoryAgent& agent);

json to_json(const IngestStats& s);

struct QuestionRecord {
    std::size_t index = 0;
    std::string question;
    QuestionCategory category = QuestionCategory::uncategorized;
    std::string prediction;
    std::optional<std::string> reference;
    std::optional<double> f1;
    std::optional<double> bleu1;
    std::optional<bool> correct;  // choice items only
    bool abstained = false;
    std::size_t rounds = 0;
    std::vector<std::string> flags;
    std::string error;
};

struct MetricSummary {
    std::size_t questions = 0;
    std::size_t scored = 0;  // with a reference answer
    double f1 = 0.0;
    double bleu1 = 0.0;
    std::size_t choice_items = 0;
    std::optional<double> accuracy;
};

struct EvalReport {
    MetricSummary overall;
    std::map<std::string, MetricSummary> categories;
    std::vector<QuestionRecord> records;
};

/// Answers every question (concurrently when OpenMP allows) and scores the
/// answers. Per-question failures are recorded and the run continues.
EvalReport evaluate(const ConversationState& state, const QuestionFile& questions, Services services,
                    AskOptions options = {});

/// Means over the records; used by evaluate() and by report checks.
MetricSummary summarize(const std::vector<const QuestionRecord*>& records);

json to_json(const EvalReport& r);
std::string report_hash(const EvalReport& r);

}  // namespace dialmem
