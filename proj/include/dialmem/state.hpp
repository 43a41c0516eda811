#pragma once

#include <array>
#include <string>
#include <vector>

#include "dialmem/core.hpp"
#include "dialmem/graph.hpp"
#include "dialmem/memory.hpp"

namespace dialmem {

/// Everything one conversation owns: the transcript so far, both participant
/// bundles, and the shared graph. participants[0] is the user,
/// participants[1] the assistant.
struct ConversationState {
    EngineConfig config;
    std::array<ParticipantId, 2> participants;
    std::vector<Utterance> utterances;  // utterances[i].turn_id == i + 1
    std::array<ParticipantBundle, 2> bundles;
    MemoryGraph graph;
    std::size_t consolidations = 0;

    TurnId turn_counter() const { return static_cast<TurnId>(utterances.size()); }

    /// Index of `id` in participants, or -1.
    int participant_index(const ParticipantId& id) const;
    ParticipantBundle& bundle(const ParticipantId& owner);
    const ParticipantBundle& bundle(const ParticipantId& owner) const;

    bool has_turn(TurnId turn) const { return turn >= 1 && turn <= turn_counter(); }
    const Utterance& utterance(TurnId turn) const;
};

/// Throws InputError unless there are exactly two distinct, non-empty names.
ConversationState new_conversation(const std::vector<ParticipantId>& participants, EngineConfig config);

/// Validates and appends the next turn (turn ids are 1..T without gaps).
const Utterance& append_utterance(ConversationState& state, std::string session_id, ParticipantId speaker,
                                  std::string text, std::string timestamp);

}  // namespace dialmem
