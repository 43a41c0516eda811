#include "dialmem/state.hpp"

#include "dialmem/memory.hpp"

namespace dialmem {

std::string_view to_string(ItemKind k) {
    switch (k) {
        case ItemKind::event: return "event";
        case ItemKind::fact: return "fact";
        case ItemKind::attribute: return "attribute";
    }
    return "fact";
}

std::string_view to_string(RouterAction a) {
    switch (a) {
        case RouterAction::ADD: return "ADD";
        case RouterAction::UPDATE: return "UPDATE";
        case RouterAction::IGNORE: return "IGNORE";
    }
    return "ADD";
}

std::map<std::string, EpisodicEntry>& EpisodicStore::entries(ItemKind kind) {
    switch (kind) {
        case ItemKind::event: return events;
        case ItemKind::fact: return facts;
        case ItemKind::attribute: return attributes;
    }
    return facts;
}

const std::map<std::string, EpisodicEntry>& EpisodicStore::entries(ItemKind kind) const {
    return const_cast<EpisodicStore*>(this)->entries(kind);
}

int ConversationState::participant_index(const ParticipantId& id) const {
    for (int i = 0; i < 2; ++i) {
        if (participants[static_cast<std::size_t>(i)] == id) return i;
    }
    return -1;
}

ParticipantBundle& ConversationState::bundle(const ParticipantId& owner) {
    const int i = participant_index(owner);
    if (i < 0) throw InputError("unknown participant \"" + owner + "\"");
    return bundles[static_cast<std::size_t>(i)];
}

const ParticipantBundle& ConversationState::bundle(const ParticipantId& owner) const {
    return const_cast<ConversationState*>(this)->bundle(owner);
}

const Utterance& ConversationState::utterance(TurnId turn) const {
    if (!has_turn(turn)) throw InputError("unknown turn " + std::to_string(turn));
    return utterances[static_cast<std::size_t>(turn - 1)];
}

ConversationState new_conversation(const std::vector<ParticipantId>& participants, EngineConfig config) {
    if (participants.size() != 2) {
        throw InputError("a conversation needs exactly two participants, got " + std::to_string(participants.size()));
    }
    if (participants[0].empty() || participants[1].empty()) throw InputError("participant names must be non-empty");
    if (participants[0] == participants[1]) throw InputError("duplicate participant \"" + participants[0] + "\"");
    validate(config);
    ConversationState s;
    s.config = std::move(config);
    for (std::size_t i = 0; i < 2; ++i) {
        s.participants[i] = participants[i];
        s.bundles[i].owner = participants[i];
        s.bundles[i].working.capacity = s.config.working_capacity;
    }
    return s;
}

const Utterance& append_utterance(ConversationState& state, std::string session_id, ParticipantId speaker,
                                  std::string text, std::string timestamp) {
    if (state.participant_index(speaker) < 0) {
        throw InputError("speaker \"" + speaker + "\" is not a participant of this conversation");
    }
    if (text.empty()) throw InputError("utterance text must be non-empty");
    Utterance u;
    u.turn_id = state.turn_counter() + 1;
    u.session_id = std::move(session_id);
    u.speaker = std::move(speaker);
    u.text = std::move(text);
    u.timestamp = std::move(timestamp);
    state.utterances.push_back(std::move(u));
    return state.utterances.back();
}

}  // namespace dialmem
