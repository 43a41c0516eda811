#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dialmem/llm.hpp"
#include "dialmem/state.hpp"

namespace dialmem {

inline constexpr int kSnapshotFormatVersion = 1;

/// Schema or syntax problem in an input document. `where` is a field path
/// ("sessions[2].turns[0].speaker") or a byte offset ("byte 118").
class FormatError : public InputError {
public:
    FormatError(std::string where, const std::string& message)
        : InputError(where + ": " + message), where_(std::move(where)) {}
    const std::string& where() const { return where_; }

private:
    std::string where_;
};

// ---------------------------------------------------------------------------
// Snapshots

json snapshot_json(const ConversationState& state);
/// Compact JSON, keys sorted, trailing newline.
std::string snapshot(const ConversationState& state);
ConversationState restore(std::string_view bytes);
ConversationState restore_json(const json& doc);

void write_snapshot(const ConversationState& state, const std::filesystem::path& path);
ConversationState read_snapshot(const std::filesystem::path& path);

/// Parses text as JSON, reporting syntax errors by byte offset.
json parse_document(std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Config

json to_json(const EngineConfig& config);
/// Overlays the keys present in `doc` onto `base`; unknown keys are errors.
EngineConfig config_from_json(const json& doc, EngineConfig base = default_config());
EngineConfig load_config(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Input files

struct TranscriptTurn {
    ParticipantId speaker;
    std::string text;
    std::string datetime;  // inherited from the session when absent
};

struct TranscriptSession {
    std::string session_id;
    std::string datetime;
    std::vector<TranscriptTurn> turns;
};

struct TranscriptFile {
    std::vector<ParticipantId> participants;
    std::vector<TranscriptSession> sessions;
};

enum class QuestionCategory { single_hop, multi_hop, temporal, open_domain, choice, uncategorized };

std::string_view to_string(QuestionCategory c);
std::optional<QuestionCategory> parse_question_category(std::string_view s);

struct QuestionItem {
    std::string question;
    std::optional<std::string> reference_answer;
    QuestionCategory category = QuestionCategory::uncategorized;
    std::vector<std::string> choices;
};

struct QuestionFile {
    std::vector<QuestionItem> items;
};

TranscriptFile parse_transcript(const json& doc);
QuestionFile parse_questions(const json& doc);

/// Accepts the canonical layout or a LoCoMo-style sample (or list of samples,
/// in which case the first is used).
TranscriptFile load_transcript(const std::filesystem::path& path);
QuestionFile load_questions(const std::filesystem::path& path);

json to_json(const TranscriptFile& t);
json to_json(const QuestionFile& q);

/// LoCoMo session stamps such as "1:56 pm on 8 May, 2023" -> "2023-05-08T13:56:00".
std::optional<std::string> parse_locomo_datetime(std::string_view s);

bool looks_like_locomo(const json& doc);
/// Maps one LoCoMo sample into the canonical files. Adversarial items
/// (category 5) are skipped.
TranscriptFile locomo_transcript(const json& sample);
QuestionFile locomo_questions(const json& sample);

}  // namespace dialmem
