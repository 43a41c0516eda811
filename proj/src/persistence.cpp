#include "dialmem/persistence.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include "dialmem/text.hpp"

namespace dialmem {

namespace {

// Typed accessors that report the JSON path of whatever is wrong.
const json& field(const json& obj, const std::string& path, const char* key) {
    if (!obj.is_object()) throw FormatError(path, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) throw FormatError(path + "." + key, "missing");
    return *it;
}

const json* optional_field(const json& obj, const std::string& path, const char* key) {
    if (!obj.is_object()) throw FormatError(path, "expected an object");
    const auto it = obj.find(key);
    return it == obj.end() || it->is_null() ? nullptr : &*it;
}

std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw FormatError(path, "expected a string");
    return j.get<std::string>();
}

std::int64_t as_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw FormatError(path, "expected an integer");
    return j.get<std::int64_t>();
}

double as_double(const json& j, const std::string& path) {
    if (!j.is_number()) throw FormatError(path, "expected a number");
    return j.get<double>();
}

bool as_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) throw FormatError(path, "expected a boolean");
    return j.get<bool>();
}

const json& as_array(const json& j, const std::string& path) {
    if (!j.is_array()) throw FormatError(path, "expected an array");
    return j;
}

const json& as_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw FormatError(path, "expected an object");
    return j;
}

std::string idx(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

std::string str(const json& obj, const std::string& path, const char* key) {
    return as_string(field(obj, path, key), path + "." + key);
}

std::vector<std::string> string_vec(const json& j, const std::string& path) {
    std::vector<std::string> out;
    const auto& a = as_array(j, path);
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(as_string(a[i], idx(path, i)));
    return out;
}

std::vector<TurnId> turn_vec(const json& j, const std::string& path) {
    std::vector<TurnId> out;
    const auto& a = as_array(j, path);
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(as_int(a[i], idx(path, i)));
    return out;
}

json vec_json(const EmbeddingVector& v) { return v.values; }

EmbeddingVector vec_from(const json& j, const std::string& path) {
    EmbeddingVector v;
    const auto& a = as_array(j, path);
    v.values.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v.values.push_back(as_double(a[i], idx(path, i)));
    return v;
}

// --- records and stores ------------------------------------------------------

json record_json(const NormalizedRecord& r) {
    return {{"source_turn", r.source_turn}, {"summary", r.summary},   {"topic", r.topic},
            {"attitude", std::string(to_string(r.attitude))},       {"reason", r.reason},
            {"facts", r.facts},             {"attributes", r.attributes}, {"rationale", r.rationale},
            {"speaker", r.speaker},         {"timestamp", r.timestamp},   {"degenerate", r.degenerate}};
}

NormalizedRecord record_from(const json& j, const std::string& p) {
    NormalizedRecord r;
    r.source_turn = as_int(field(j, p, "source_turn"), p + ".source_turn");
    r.summary = str(j, p, "summary");
    r.topic = string_vec(field(j, p, "topic"), p + ".topic");
    const auto att = str(j, p, "attitude");
    const auto parsed = parse_attitude(att);
    if (!parsed) throw FormatError(p + ".attitude", "unknown attitude \"" + att + "\"");
    r.attitude = *parsed;
    r.reason = string_vec(field(j, p, "reason"), p + ".reason");
    r.facts = string_vec(field(j, p, "facts"), p + ".facts");
    r.attributes = string_vec(field(j, p, "attributes"), p + ".attributes");
    r.rationale = str(j, p, "rationale");
    r.speaker = str(j, p, "speaker");
    r.timestamp = str(j, p, "timestamp");
    r.degenerate = as_bool(field(j, p, "degenerate"), p + ".degenerate");
    return r;
}

json entries_json(const std::map<std::string, EpisodicEntry>& m) {
    json out = json::object();
    for (const auto& [k, e] : m) {
        out[k] = {{"text", e.text},
                  {"supporting_turns", e.supporting_turns},
                  {"created_at", e.created_at},
                  {"updated_at", e.updated_at},
                  {"embedding", vec_json(e.embedding)}};
    }
    return out;
}

std::map<std::string, EpisodicEntry> entries_from(const json& j, const std::string& path) {
    std::map<std::string, EpisodicEntry> out;
    for (const auto& [k, v] : as_object(j, path).items()) {
        const auto p = path + "." + k;
        EpisodicEntry e;
        e.key = k;
        e.text = str(v, p, "text");
        e.supporting_turns = turn_vec(field(v, p, "supporting_turns"), p + ".supporting_turns");
        e.created_at = str(v, p, "created_at");
        e.updated_at = str(v, p, "updated_at");
        e.embedding = vec_from(field(v, p, "embedding"), p + ".embedding");
        out.emplace(k, std::move(e));
    }
    return out;
}

json bundle_json(const ParticipantBundle& b) {
    json queue = json::array();
    for (const auto& r : b.working.queue) queue.push_back(record_json(r));

    json topics = json::object();
    for (const auto& [name, t] : b.episodic.topic_summaries) {
        topics[name] = {{"summary", t.summary},
                        {"member_keys", t.member_keys},
                        {"message_links", t.message_links},
                        {"embedding", vec_json(t.embedding)}};
    }
    json words = json::object();
    for (const auto& [w, turns] : b.episodic.word_index) words[w] = std::vector<TurnId>(turns.begin(), turns.end());

    json descriptors = json::array();
    for (const auto& d : b.persona.preference_descriptors) {
        descriptors.push_back(
            {{"text", d.text}, {"source_topics", d.source_topics}, {"embedding", vec_json(d.embedding)}});
    }
    json aspects = json::object();
    for (const auto& [name, a] : b.persona.aspect_summaries) {
        aspects[name] = {{"text", a.text},
                         {"source_attribute_keys", a.source_attribute_keys},
                         {"embedding", vec_json(a.embedding)}};
    }
    return {{"owner", b.owner},
            {"working", {{"capacity", b.working.capacity}, {"queue", queue}}},
            {"episodic",
             {{"events", entries_json(b.episodic.events)},
              {"facts", entries_json(b.episodic.facts)},
              {"attributes", entries_json(b.episodic.attributes)},
              {"topic_summaries", topics},
              {"word_index", words}}},
            {"persona", {{"preference_descriptors", descriptors}, {"aspect_summaries", aspects}}},
            {"graph_scope", std::vector<std::uint64_t>(b.graph_scope.begin(), b.graph_scope.end())}};
}

ParticipantBundle bundle_from(const json& j, const std::string& p) {
    ParticipantBundle b;
    b.owner = str(j, p, "owner");

    const auto& w = field(j, p, "working");
    b.working.capacity = static_cast<int>(as_int(field(w, p + ".working", "capacity"), p + ".working.capacity"));
    const auto& q = as_array(field(w, p + ".working", "queue"), p + ".working.queue");
    for (std::size_t i = 0; i < q.size(); ++i) b.working.queue.push_back(record_from(q[i], idx(p + ".working.queue", i)));

    const auto ep = p + ".episodic";
    const auto& e = field(j, p, "episodic");
    b.episodic.events = entries_from(field(e, ep, "events"), ep + ".events");
    b.episodic.facts = entries_from(field(e, ep, "facts"), ep + ".facts");
    b.episodic.attributes = entries_from(field(e, ep, "attributes"), ep + ".attributes");
    for (const auto& [name, v] : as_object(field(e, ep, "topic_summaries"), ep + ".topic_summaries").items()) {
        const auto tp = ep + ".topic_summaries." + name;
        TopicSummary t;
        t.name = name;
        t.summary = str(v, tp, "summary");
        t.member_keys = string_vec(field(v, tp, "member_keys"), tp + ".member_keys");
        t.message_links = turn_vec(field(v, tp, "message_links"), tp + ".message_links");
        t.embedding = vec_from(field(v, tp, "embedding"), tp + ".embedding");
        b.episodic.topic_summaries.emplace(name, std::move(t));
    }
    for (const auto& [word, turns] : as_object(field(e, ep, "word_index"), ep + ".word_index").items()) {
        const auto v = turn_vec(turns, ep + ".word_index." + word);
        b.episodic.word_index[word] = std::set<TurnId>(v.begin(), v.end());
    }

    const auto pp = p + ".persona";
    const auto& per = field(j, p, "persona");
    const auto& ds = as_array(field(per, pp, "preference_descriptors"), pp + ".preference_descriptors");
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto dp = idx(pp + ".preference_descriptors", i);
        PreferenceDescriptor d;
        d.text = str(ds[i], dp, "text");
        d.source_topics = string_vec(field(ds[i], dp, "source_topics"), dp + ".source_topics");
        d.embedding = vec_from(field(ds[i], dp, "embedding"), dp + ".embedding");
        b.persona.preference_descriptors.push_back(std::move(d));
    }
    for (const auto& [name, v] : as_object(field(per, pp, "aspect_summaries"), pp + ".aspect_summaries").items()) {
        const auto ap = pp + ".aspect_summaries." + name;
        AspectSummary a;
        a.aspect = name;
        a.text = str(v, ap, "text");
        a.source_attribute_keys = string_vec(field(v, ap, "source_attribute_keys"), ap + ".source_attribute_keys");
        a.embedding = vec_from(field(v, ap, "embedding"), ap + ".embedding");
        b.persona.aspect_summaries.emplace(name, std::move(a));
    }
    const auto& scope = as_array(field(j, p, "graph_scope"), p + ".graph_scope");
    for (std::size_t i = 0; i < scope.size(); ++i) {
        b.graph_scope.insert(static_cast<std::uint64_t>(as_int(scope[i], idx(p + ".graph_scope", i))));
    }
    return b;
}

json graph_json(const MemoryGraph& g) {
    json nodes = json::array();
    for (const auto& n : g.nodes()) {
        nodes.push_back({{"id", n.id},
                         {"kind", std::string(to_string(n.kind))},
                         {"owner", n.owner},
                         {"payload", n.payload},
                         {"timestamp", n.timestamp},
                         {"source_turn", n.source_turn ? json(*n.source_turn) : json(nullptr)},
                         {"key", n.key},
                         {"embedding", vec_json(n.embedding)}});
    }
    json edges = json::array();
    for (const auto& e : g.edges()) {
        edges.push_back({{"from", e.from},
                         {"to", e.to},
                         {"type", std::string(to_string(e.type))},
                         {"write_strength", e.write_strength}});
    }
    return {{"nodes", nodes}, {"edges", edges}};
}

MemoryGraph graph_from(const json& j, const std::string& p) {
    MemoryGraph g;
    const auto& nodes = as_array(field(j, p, "nodes"), p + ".nodes");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto np = idx(p + ".nodes", i);
        const auto& v = nodes[i];
        GraphNode n;
        const auto kind = str(v, np, "kind");
        const auto parsed = parse_node_kind(kind);
        if (!parsed) throw FormatError(np + ".kind", "unknown node kind \"" + kind + "\"");
        n.kind = *parsed;
        n.owner = str(v, np, "owner");
        n.payload = str(v, np, "payload");
        n.timestamp = str(v, np, "timestamp");
        if (const auto* st = optional_field(v, np, "source_turn")) n.source_turn = as_int(*st, np + ".source_turn");
        n.key = str(v, np, "key");
        n.embedding = vec_from(field(v, np, "embedding"), np + ".embedding");
        const auto id = as_int(field(v, np, "id"), np + ".id");
        try {
            if (g.add_node(std::move(n)) != static_cast<NodeId>(id)) throw FormatError(np + ".id", "ids must be 0..N-1 in order");
        } catch (const InvariantError& e) {
            throw FormatError(np, e.what());
        }
    }
    const auto& edges = as_array(field(j, p, "edges"), p + ".edges");
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto ep = idx(p + ".edges", i);
        const auto& v = edges[i];
        GraphEdge e;
        e.from = static_cast<NodeId>(as_int(field(v, ep, "from"), ep + ".from"));
        e.to = static_cast<NodeId>(as_int(field(v, ep, "to"), ep + ".to"));
        const auto type = str(v, ep, "type");
        const auto parsed = parse_edge_type(type);
        if (!parsed) throw FormatError(ep + ".type", "unknown edge type \"" + type + "\"");
        e.type = *parsed;
        e.write_strength = as_double(field(v, ep, "write_strength"), ep + ".write_strength");
        try {
            g.add_edge(e);
        } catch (const std::exception& ex) {
            throw FormatError(ep, ex.what());
        }
    }
    return g;
}

std::string session_path(std::size_t s) { return "sessions[" + std::to_string(s) + "]"; }

QuestionCategory locomo_category(std::int64_t c) {
    switch (c) {
        case 1: return QuestionCategory::multi_hop;
        case 2: return QuestionCategory::temporal;
        case 3: return QuestionCategory::open_domain;
        case 4: return QuestionCategory::single_hop;
        default: return QuestionCategory::uncategorized;
    }
}

const json& first_sample(const json& doc) {
    if (doc.is_array()) {
        if (doc.empty()) throw FormatError("$", "empty sample list");
        return doc.front();
    }
    return doc;
}

}  // namespace

// ---------------------------------------------------------------------------

json parse_document(std::string_view bytes) {
    try {
        return json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw FormatError("byte " + std::to_string(e.byte), "malformed JSON");
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json snapshot_json(const ConversationState& s) {
    json utterances = json::array();
    for (const auto& u : s.utterances) {
        utterances.push_back({{"turn_id", u.turn_id},
                              {"session_id", u.session_id},
                              {"speaker", u.speaker},
                              {"text", u.text},
                              {"timestamp", u.timestamp}});
    }
    return {{"format_version", kSnapshotFormatVersion},
            {"config", to_json(s.config)},
            {"participants", s.participants},
            {"utterances", utterances},
            {"bundles", {bundle_json(s.bundles[0]), bundle_json(s.bundles[1])}},
            {"graph", graph_json(s.graph)},
            {"counters", {{"consolidations", s.consolidations}, {"turns", s.turn_counter()}}}};
}

std::string snapshot(const ConversationState& state) { return snapshot_json(state).dump() + "\n"; }

ConversationState restore_json(const json& doc) {
    const std::string root = "$";
    const auto version = as_int(field(doc, root, "format_version"), "$.format_version");
    if (version != kSnapshotFormatVersion) {
        throw FormatError("$.format_version", "unsupported snapshot version " + std::to_string(version));
    }
    ConversationState s;
    s.config = config_from_json(field(doc, root, "config"), default_config());
    const auto names = string_vec(field(doc, root, "participants"), "$.participants");
    if (names.size() != 2) throw FormatError("$.participants", "expected two names");
    s = [&] {
        try {
            return new_conversation(names, s.config);
        } catch (const InputError& e) {
            throw FormatError("$.participants", e.what());
        }
    }();

    const auto& us = as_array(field(doc, root, "utterances"), "$.utterances");
    for (std::size_t i = 0; i < us.size(); ++i) {
        const auto p = idx("$.utterances", i);
        Utterance u;
        u.turn_id = as_int(field(us[i], p, "turn_id"), p + ".turn_id");
        if (u.turn_id != static_cast<TurnId>(i + 1)) throw FormatError(p + ".turn_id", "turn ids must be 1..T");
        u.session_id = str(us[i], p, "session_id");
        u.speaker = str(us[i], p, "speaker");
        if (s.participant_index(u.speaker) < 0) throw FormatError(p + ".speaker", "unknown speaker");
        u.text = str(us[i], p, "text");
        u.timestamp = str(us[i], p, "timestamp");
        s.utterances.push_back(std::move(u));
    }

    const auto& bs = as_array(field(doc, root, "bundles"), "$.bundles");
    if (bs.size() != 2) throw FormatError("$.bundles", "expected two bundles");
    for (std::size_t i = 0; i < 2; ++i) {
        auto b = bundle_from(bs[i], idx("$.bundles", i));
        if (b.owner != s.participants[i]) throw FormatError(idx("$.bundles", i) + ".owner", "does not match participants");
        s.bundles[i] = std::move(b);
    }
    s.graph = graph_from(field(doc, root, "graph"), "$.graph");
    const auto& counters = field(doc, root, "counters");
    s.consolidations = static_cast<std::size_t>(as_int(field(counters, "$.counters", "consolidations"), "$.counters.consolidations"));
    if (as_int(field(counters, "$.counters", "turns"), "$.counters.turns") != s.turn_counter()) {
        throw FormatError("$.counters.turns", "does not match utterance count");
    }
    return s;
}

ConversationState restore(std::string_view bytes) { return restore_json(parse_document(bytes)); }

void write_snapshot(const ConversationState& state, const std::filesystem::path& path) {
    const auto bytes = snapshot(state);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out << bytes;
    if (!out) throw InputError("failed writing " + path.string());
}

ConversationState read_snapshot(const std::filesystem::path& path) { return restore(read_file(path)); }

// ---------------------------------------------------------------------------

json to_json(const EngineConfig& c) {
    json priors = json::object();
    for (const auto& [t, v] : c.edge_priors) priors[std::string(to_string(t))] = v;
    return {{"working_capacity", c.working_capacity},
            {"consolidation_segment", c.consolidation_segment},
            {"top_k", c.top_k},
            {"fact_drop_threshold", c.fact_drop_threshold},
            {"base_hop_depth", c.base_hop_depth},
            {"base_seed_count", c.base_seed_count},
            {"hop_decay", c.hop_decay},
            {"max_research_iterations", c.max_research_iterations},
            {"fusion",
             {{"alpha", c.fusion.alpha}, {"beta", c.fusion.beta}, {"gamma", c.fusion.gamma}, {"delta", c.fusion.delta}}},
            {"edge_priors", priors},
            {"refine_threshold", c.refine_threshold},
            {"planner_mode", std::string(to_string(c.planner_mode))},
            {"grounding_threshold", c.grounding_threshold},
            {"embedding_dimension", c.embedding_dimension}};
}

EngineConfig config_from_json(const json& doc, EngineConfig c) {
    const std::string root = "config";
    for (const auto& [key, v] : as_object(doc, root).items()) {
        const auto p = root + "." + key;
        const auto as_i = [&] { return static_cast<int>(as_int(v, p)); };
        if (key == "working_capacity") c.working_capacity = as_i();
        else if (key == "consolidation_segment") c.consolidation_segment = as_i();
        else if (key == "top_k") c.top_k = as_i();
        else if (key == "fact_drop_threshold") c.fact_drop_threshold = as_double(v, p);
        else if (key == "base_hop_depth") c.base_hop_depth = as_i();
        else if (key == "base_seed_count") c.base_seed_count = as_i();
        else if (key == "hop_decay") c.hop_decay = as_double(v, p);
        else if (key == "max_research_iterations") c.max_research_iterations = as_i();
        else if (key == "refine_threshold") c.refine_threshold = as_double(v, p);
        else if (key == "grounding_threshold") c.grounding_threshold = as_double(v, p);
        else if (key == "embedding_dimension") c.embedding_dimension = as_i();
        else if (key == "planner_mode") {
            const auto m = parse_planner_mode(as_string(v, p));
            if (!m) throw FormatError(p, "expected rule_only or hybrid");
            c.planner_mode = *m;
        } else if (key == "fusion") {
            for (const auto& [fk, fv] : as_object(v, p).items()) {
                const auto fp = p + "." + fk;
                if (fk == "alpha") c.fusion.alpha = as_double(fv, fp);
                else if (fk == "beta") c.fusion.beta = as_double(fv, fp);
                else if (fk == "gamma") c.fusion.gamma = as_double(fv, fp);
                else if (fk == "delta") c.fusion.delta = as_double(fv, fp);
                else throw FormatError(fp, "unknown key");
            }
        } else if (key == "edge_priors") {
            for (const auto& [ek, ev] : as_object(v, p).items()) {
                const auto t = parse_edge_type(ek);
                if (!t) throw FormatError(p + "." + ek, "unknown edge type");
                c.edge_priors[*t] = as_double(ev, p + "." + ek);
            }
        } else {
            throw FormatError(p, "unknown key");
        }
    }
    validate(c);
    return c;
}

EngineConfig load_config(const std::filesystem::path& path) {
    return config_from_json(parse_document(read_file(path)));
}

// ---------------------------------------------------------------------------

std::string_view to_string(QuestionCategory c) {
    switch (c) {
        case QuestionCategory::single_hop: return "single-hop";
        case QuestionCategory::multi_hop: return "multi-hop";
        case QuestionCategory::temporal: return "temporal";
        case QuestionCategory::open_domain: return "open-domain";
        case QuestionCategory::choice: return "choice";
        case QuestionCategory::uncategorized: return "uncategorized";
    }
    return "uncategorized";
}

std::optional<QuestionCategory> parse_question_category(std::string_view s) {
    for (auto c : {QuestionCategory::single_hop, QuestionCategory::multi_hop, QuestionCategory::temporal,
                   QuestionCategory::open_domain, QuestionCategory::choice, QuestionCategory::uncategorized}) {
        if (to_string(c) == s) return c;
    }
    return std::nullopt;
}

TranscriptFile parse_transcript(const json& doc) {
    TranscriptFile t;
    t.participants = string_vec(field(doc, "$", "participants"), "participants");
    if (t.participants.size() != 2 || t.participants[0].empty() || t.participants[1].empty() ||
        t.participants[0] == t.participants[1]) {
        throw FormatError("participants", "expected two distinct non-empty names");
    }
    const auto& sessions = as_array(field(doc, "$", "sessions"), "sessions");
    std::optional<std::int64_t> last;
    for (std::size_t s = 0; s < sessions.size(); ++s) {
        const auto sp = session_path(s);
        TranscriptSession session;
        session.session_id = str(sessions[s], sp, "session_id");
        session.datetime = str(sessions[s], sp, "datetime");
        if (!parse_timestamp(session.datetime)) throw FormatError(sp + ".datetime", "not an ISO-8601 timestamp");
        const auto& turns = as_array(field(sessions[s], sp, "turns"), sp + ".turns");
        for (std::size_t i = 0; i < turns.size(); ++i) {
            const auto tp = idx(sp + ".turns", i);
            TranscriptTurn turn;
            turn.speaker = str(turns[i], tp, "speaker");
            if (turn.speaker != t.participants[0] && turn.speaker != t.participants[1]) {
                throw FormatError(tp + ".speaker", "unknown speaker \"" + turn.speaker + "\"");
            }
            turn.text = str(turns[i], tp, "text");
            if (turn.text.empty()) throw FormatError(tp + ".text", "empty text");
            const auto* dt = optional_field(turns[i], tp, "datetime");
            turn.datetime = dt ? as_string(*dt, tp + ".datetime") : session.datetime;
            const auto epoch = parse_timestamp(turn.datetime);
            if (!epoch) throw FormatError(tp + ".datetime", "not an ISO-8601 timestamp");
            if (last && *epoch < *last) throw FormatError(tp + ".datetime", "out of chronological order");
            last = epoch;
            session.turns.push_back(std::move(turn));
        }
        t.sessions.push_back(std::move(session));
    }
    return t;
}

QuestionFile parse_questions(const json& doc) {
    QuestionFile q;
    const auto& items = as_array(field(doc, "$", "items"), "items");
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto p = idx("items", i);
        QuestionItem item;
        item.question = str(items[i], p, "question");
        if (text::trim(item.question).empty()) throw FormatError(p + ".question", "empty question");
        if (const auto* r = optional_field(items[i], p, "reference_answer")) {
            item.reference_answer = as_string(*r, p + ".reference_answer");
        }
        if (const auto* c = optional_field(items[i], p, "category")) {
            const auto name = as_string(*c, p + ".category");
            const auto parsed = parse_question_category(name);
            if (!parsed) throw FormatError(p + ".category", "unknown category \"" + name + "\"");
            item.category = *parsed;
        }
        if (const auto* ch = optional_field(items[i], p, "choices")) item.choices = string_vec(*ch, p + ".choices");
        if (item.category == QuestionCategory::choice && item.choices.size() < 2) {
            throw FormatError(p + ".choices", "choice items need at least two choices");
        }
        q.items.push_back(std::move(item));
    }
    return q;
}

TranscriptFile load_transcript(const std::filesystem::path& path) {
    const auto doc = parse_document(read_file(path));
    if (looks_like_locomo(doc)) return locomo_transcript(first_sample(doc));
    return parse_transcript(doc);
}

QuestionFile load_questions(const std::filesystem::path& path) {
    const auto doc = parse_document(read_file(path));
    if (looks_like_locomo(doc)) return locomo_questions(first_sample(doc));
    return parse_questions(doc);
}

json to_json(const TranscriptFile& t) {
    json sessions = json::array();
    for (const auto& s : t.sessions) {
        json turns = json::array();
        for (const auto& turn : s.turns) {
            turns.push_back({{"speaker", turn.speaker}, {"text", turn.text}, {"datetime", turn.datetime}});
        }
        sessions.push_back({{"session_id", s.session_id}, {"datetime", s.datetime}, {"turns", turns}});
    }
    return {{"participants", t.participants}, {"sessions", sessions}};
}

json to_json(const QuestionFile& q) {
    json items = json::array();
    for (const auto& i : q.items) {
        json j = {{"question", i.question}, {"category", std::string(to_string(i.category))}};
        if (i.reference_answer) j["reference_answer"] = *i.reference_answer;
        if (!i.choices.empty()) j["choices"] = i.choices;
        items.push_back(std::move(j));
    }
    return {{"items", items}};
}

std::optional<std::string> parse_locomo_datetime(std::string_view s) {
    static const std::regex re(R"(^\s*(\d{1,2}):(\d{2})\s*([aApP][mM])\s+on\s+(\d{1,2})\s+([A-Za-z]+),?\s+(\d{4})\s*$)");
    static const std::array<std::string_view, 12> months = {"january", "february", "march",     "april",
                                                            "may",     "june",     "july",      "august",
                                                            "september", "october", "november", "december"};
    std::cmatch m;
    const std::string str_copy(s);
    if (!std::regex_match(str_copy.c_str(), m, re)) return std::nullopt;
    int hour = std::stoi(m[1].str());
    const int minute = std::stoi(m[2].str());
    const bool pm = std::tolower(static_cast<unsigned char>(m[3].str()[0])) == 'p';
    if (hour < 1 || hour > 12 || minute > 59) return std::nullopt;
    hour = hour % 12 + (pm ? 12 : 0);
    const auto month_name = text::lowercase(m[5].str());
    int month = 0;
    for (std::size_t i = 0; i < months.size(); ++i) {
        if (months[i] == month_name || (month_name.size() >= 3 && months[i].substr(0, 3) == month_name)) {
            month = static_cast<int>(i) + 1;
            break;
        }
    }
    if (month == 0) return std::nullopt;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:00", std::stoi(m[6].str()), month, std::stoi(m[4].str()),
                  hour, minute);
    if (!parse_timestamp(buf)) return std::nullopt;
    return std::string(buf);
}

bool looks_like_locomo(const json& doc) {
    const json* sample = &doc;
    if (doc.is_array() && !doc.empty()) sample = &doc.front();
    return sample->is_object() && sample->contains("conversation");
}

TranscriptFile locomo_transcript(const json& sample) {
    const std::string root = "conversation";
    const auto& conv = as_object(field(sample, "$", "conversation"), root);
    TranscriptFile t;
    t.participants = {str(conv, root, "speaker_a"), str(conv, root, "speaker_b")};
    // Sessions are numbered session_1, session_2, ...; gaps end the scan.
    for (int n = 1;; ++n) {
        const auto key = "session_" + std::to_string(n);
        const auto it = conv.find(key);
        if (it == conv.end()) break;
        const auto sp = root + "." + key;
        TranscriptSession s;
        s.session_id = key;
        const auto dkey = key + "_date_time";
        const auto raw = str(conv, root, dkey.c_str());
        const auto dt = parse_locomo_datetime(raw);
        if (!dt) throw FormatError(root + "." + dkey, "unrecognized date \"" + raw + "\"");
        s.datetime = *dt;
        const auto& turns = as_array(*it, sp);
        for (std::size_t i = 0; i < turns.size(); ++i) {
            const auto tp = idx(sp, i);
            TranscriptTurn turn;
            turn.speaker = str(turns[i], tp, "speaker");
            turn.text = str(turns[i], tp, "text");
            turn.datetime = s.datetime;
            s.turns.push_back(std::move(turn));
        }
        t.sessions.push_back(std::move(s));
    }
    return parse_transcript(to_json(t));
}

QuestionFile locomo_questions(const json& sample) {
    QuestionFile q;
    const auto& qa = as_array(field(sample, "$", "qa"), "qa");
    for (std::size_t i = 0; i < qa.size(); ++i) {
        const auto p = idx("qa", i);
        const auto cat = as_int(field(qa[i], p, "category"), p + ".category");
        if (cat == 5) continue;
        QuestionItem item;
        item.question = str(qa[i], p, "question");
        item.category = locomo_category(cat);
        const auto& ans = field(qa[i], p, "answer");
        item.reference_answer = ans.is_string() ? ans.get<std::string>() : ans.dump();
        q.items.push_back(std::move(item));
    }
    return q;
}

}  // namespace dialmem
