#include "dialmem/writer.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "dialmem/kernels.hpp"
#include "dialmem/text.hpp"

namespace dialmem {

namespace {

constexpr std::size_t kDegenerateSummaryBytes = 200;

std::vector<std::string> string_list(const json& j) {
    std::vector<std::string> out;
    const auto take = [&](const json& v) {
        if (!v.is_string()) return;
        auto s = text::trim(v.get<std::string>());
        if (!s.empty()) out.push_back(std::move(s));
    };
    if (j.is_array()) {
        for (const auto& v : j) take(v);
    } else {
        take(j);
    }
    return out;
}

std::string truncate_utf8(const std::string& s, std::size_t max_bytes) {
    if (s.size() <= max_bytes) return s;
    std::size_t cut = max_bytes;
    while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
    return s.substr(0, cut);
}

TemplateId router_template(ItemKind kind) {
    switch (kind) {
        case ItemKind::event: return TemplateId::episodic_router_event;
        case ItemKind::fact: return TemplateId::episodic_router_fact;
        case ItemKind::attribute: return TemplateId::episodic_router_attribute;
    }
    return TemplateId::episodic_router_fact;
}

std::optional<std::string> resolve_target(const std::string& target, const std::map<std::string, std::string>& existing) {
    if (existing.count(target)) return target;
    for (const auto& [k, v] : existing) {
        if (v == target) return k;
    }
    return std::nullopt;
}

void insert_sorted(std::vector<TurnId>& v, TurnId t) {
    auto it = std::lower_bound(v.begin(), v.end(), t);
    if (it == v.end() || *it != t) v.insert(it, t);
}

bool is_attitude_word(std::string_view w) {
    const auto low = text::lowercase(w);
    return low == "positive" || low == "negative" || low == "mixed";
}

// Drops attitude labels from a merged name; returns true when any were present.
bool strip_attitude(std::string& name) {
    std::vector<std::string> words;
    std::string cur;
    bool stripped = false;
    const auto flush = [&] {
        if (cur.empty()) return;
        if (const auto toks = text::tokenize(cur); toks.size() == 1 && is_attitude_word(toks[0])) {
            stripped = true;
        } else {
            words.push_back(cur);
        }
        cur.clear();
    };
    for (char c : name) {
        if (c == ' ') {
            flush();
        } else {
            cur.push_back(c);
        }
    }
    flush();
    std::string out;
    for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
    name = out;
    return stripped;
}

struct MergeGroup {
    std::string name;
    std::vector<std::string> members;  // sorted keys
};

// Runs the topic-merge prompt over one multi-key cluster. Members the reply
// does not place (or a reply that cannot be used) come back as singletons.
std::vector<MergeGroup> merge_cluster(const std::vector<std::string>& cluster,
                                      const std::map<std::string, EpisodicEntry>& entries, Services services,
                                      RegroupReport& rep, std::string_view what) {
    json input = json::object();
    for (const auto& k : cluster) input[k] = entries.at(k).text;
    const auto resp = services.llm.call(TemplateId::topic_merge, {{"topics", input.dump(2)}});
    ++rep.merge_calls;

    std::vector<MergeGroup> groups;
    std::set<std::string> assigned;
    if (!resp.ok() || !resp.payload["Grouped Topics"].is_object()) {
        rep.flags.push_back(std::string(what) + " merge reply unusable for cluster starting at " + cluster.front() +
                            (resp.ok() ? "" : ": " + resp.parse_error));
    } else {
        std::map<std::string, std::string> by_text;
        for (const auto& k : cluster) by_text.emplace(entries.at(k).text, k);
        for (const auto& [raw_name, members] : resp.payload["Grouped Topics"].items()) {
            MergeGroup g;
            for (const auto& m : string_list(members)) {
                std::string key;
                if (std::binary_search(cluster.begin(), cluster.end(), m)) {
                    key = m;
                } else if (auto it = by_text.find(m); it != by_text.end()) {
                    key = it->second;
                } else {
                    rep.flags.push_back(std::string(what) + " merge named unknown member \"" + m + "\"");
                    continue;
                }
                if (assigned.insert(key).second) g.members.push_back(key);
            }
            if (g.members.empty()) continue;
            std::sort(g.members.begin(), g.members.end());
            g.name = text::trim(raw_name);
            if (strip_attitude(g.name)) {
                rep.flags.push_back(std::string(what) + " merge name \"" + raw_name + "\" revealed an attitude");
            }
            if (g.name.empty()) g.name = g.members.front();
            groups.push_back(std::move(g));
        }
    }
    for (const auto& k : cluster) {
        if (!assigned.count(k)) groups.push_back({k, {k}});
    }
    return groups;
}

std::vector<MergeGroup> group_entries(const std::map<std::string, EpisodicEntry>& entries, Services services,
                                      RegroupReport& rep, std::string_view what) {
    std::vector<KeyedVector> keyed;
    keyed.reserve(entries.size());
    for (const auto& [k, e] : entries) keyed.push_back({k, e.embedding});
    std::vector<MergeGroup> out;
    if (keyed.empty()) return out;
    for (const auto& cluster : cluster_keys(keyed)) {
        if (cluster.size() == 1) {
            out.push_back({cluster.front(), cluster});
            continue;
        }
        auto groups = merge_cluster(cluster, entries, services, rep, what);
        std::move(groups.begin(), groups.end(), std::back_inserter(out));
    }
    return out;
}

std::string unique_name(const std::string& name, const auto& taken) {
    if (!taken.count(name)) return name;
    for (int i = 2;; ++i) {
        auto candidate = name + " (" + std::to_string(i) + ")";
        if (!taken.count(candidate)) return candidate;
    }
}

std::string joined_text(const std::vector<std::string>& keys, const std::map<std::string, EpisodicEntry>& entries) {
    std::string out;
    for (const auto& k : keys) out += (out.empty() ? "" : "; ") + entries.at(k).text;
    return out;
}

}  // namespace

NormalizedRecord degenerate_record(const Utterance& u) {
    NormalizedRecord r;
    r.source_turn = u.turn_id;
    r.summary = truncate_utf8(u.text, kDegenerateSummaryBytes);
    r.topic = {"general"};
    r.attitude = Attitude::Mixed;
    r.speaker = u.speaker;
    r.timestamp = u.timestamp;
    r.degenerate = true;
    return r;
}

NormalizedRecord understand_message(const Utterance& u, LlmGateway& llm) {
    const auto resp = llm.call(TemplateId::message_understanding, {{"message", u.text}});
    if (!resp.ok()) return degenerate_record(u);
    const auto& p = resp.payload;
    const auto& tags = p["tags"];
    if (!tags.is_object()) return degenerate_record(u);

    NormalizedRecord r;
    r.source_turn = u.turn_id;
    r.speaker = u.speaker;
    r.timestamp = u.timestamp;
    r.topic = string_list(tags.value("topic", json()));
    if (r.topic.empty()) return degenerate_record(u);
    if (const auto att = string_list(tags.value("attitude", json())); !att.empty()) {
        r.attitude = parse_attitude(att.front()).value_or(Attitude::Mixed);
    }
    r.reason = string_list(tags.value("reason", json()));
    r.facts = string_list(tags.value("facts", json()));
    r.attributes = string_list(tags.value("attributes", json()));
    r.summary = p["summary"].is_string() ? text::trim(p["summary"].get<std::string>()) : std::string();
    if (r.summary.empty()) r.summary = truncate_utf8(u.text, kDegenerateSummaryBytes);
    r.rationale = p.value("rationale", json()).is_string() ? p["rationale"].get<std::string>() : std::string();
    return r;
}

std::optional<PoppedSegment> write_working(ParticipantBundle& bundle, NormalizedRecord rec, int consolidation_segment) {
    if (rec.speaker != bundle.owner) {
        throw InputError("record speaker \"" + rec.speaker + "\" does not own bundle \"" + bundle.owner + "\"");
    }
    if (consolidation_segment < 1 || consolidation_segment > bundle.working.capacity) {
        throw InputError("consolidation segment must lie in [1, capacity]");
    }
    auto& q = bundle.working.queue;
    q.push_back(std::move(rec));
    if (static_cast<int>(q.size()) < bundle.working.capacity) return std::nullopt;
    PoppedSegment seg;
    for (int i = 0; i < consolidation_segment; ++i) {
        seg.push_back(std::move(q.front()));
        q.pop_front();
    }
    return seg;
}

RouterDecision route_item(ItemKind kind, std::string_view new_item, const std::map<std::string, std::string>& existing,
                          LlmGateway& llm) {
    RouterDecision d;
    if (existing.empty()) return d;

    const auto resp = llm.call(router_template(kind), {{"profile", json(existing).dump(2)}, {"item", std::string(new_item)}});
    if (!resp.ok()) {
        d.flagged = true;
        d.note = "router reply unusable, defaulted to ADD: " + resp.parse_error;
        return d;
    }
    const auto& action_j = resp.payload["Action"];
    std::string action = action_j.is_string() ? text::trim(action_j.get<std::string>()) : std::string();
    std::erase_if(action, [](char c) { return c == '[' || c == ']'; });
    for (char& c : action) c = static_cast<char>((c >= 'a' && c <= 'z') ? c - 'a' + 'A' : c);

    std::optional<std::string> target;
    if (const auto& t = resp.payload["Target"]; t.is_string()) {
        auto s = text::trim(t.get<std::string>());
        const auto low = text::lowercase(s);
        if (!s.empty() && low != "none" && low != "null") target = std::move(s);
    }

    if (action == "ADD") return d;
    if (action == "IGNORE") {
        d.action = RouterAction::IGNORE;
        if (target) d.matched = resolve_target(*target, existing);
        return d;
    }
    if (action == "UPDATE") {
        if (!target) {
            d.flagged = true;
            d.note = "UPDATE without target, downgraded to ADD";
            return d;
        }
        auto key = resolve_target(*target, existing);
        if (!key) {
            d.flagged = true;
            d.note = "UPDATE target \"" + *target + "\" does not exist, downgraded to ADD";
            return d;
        }
        d.action = RouterAction::UPDATE;
        d.target = std::move(key);
        return d;
    }
    d.flagged = true;
    d.note = "unknown router action \"" + action + "\", defaulted to ADD";
    return d;
}

std::string make_key(const std::map<std::string, EpisodicEntry>& entries, std::string_view source) {
    const auto base = text::slugify(source);
    if (!entries.count(base)) return base;
    for (int i = 2;; ++i) {
        const auto suffix = "-" + std::to_string(i);
        auto stem = base.substr(0, std::min(base.size(), 80 - suffix.size()));
        while (!stem.empty() && stem.back() == '-') stem.pop_back();
        auto candidate = stem + suffix;
        if (!entries.count(candidate)) return candidate;
    }
}

void index_words(EpisodicStore& store, const Utterance& u) {
    for (const auto& tok : text::content_tokens(u.text)) store.word_index[tok].insert(u.turn_id);
}

ConsolidationReport consolidate(ParticipantBundle& bundle, const PoppedSegment& segment,
                                std::span<const Utterance> history, Services services) {
    ConsolidationReport report;
    report.owner = bundle.owner;
    auto& store = bundle.episodic;

    const auto utterance_for = [&](TurnId t) -> const Utterance& {
        if (t < 1 || t > static_cast<TurnId>(history.size()) || history[static_cast<std::size_t>(t - 1)].turn_id != t) {
            throw InvariantError("segment references unknown turn " + std::to_string(t));
        }
        return history[static_cast<std::size_t>(t - 1)];
    };

    const auto apply = [&](ItemKind kind, const NormalizedRecord& rec, const std::string& item,
                           std::string_view key_source) {
        auto& entries = store.entries(kind);
        std::map<std::string, std::string> existing;
        for (const auto& [k, e] : entries) existing.emplace(k, e.text);

        ItemDecision d;
        d.kind = kind;
        d.source_turn = rec.source_turn;
        d.item = item;
        d.decision = route_item(kind, item, existing, services.llm);
        switch (d.decision.action) {
            case RouterAction::ADD: {
                EpisodicEntry e;
                e.key = make_key(entries, key_source);
                e.text = item;
                e.supporting_turns = {rec.source_turn};
                e.created_at = rec.timestamp;
                e.updated_at = rec.timestamp;
                e.embedding = services.embedder.embed(item);
                d.resolved_key = e.key;
                entries.emplace(e.key, std::move(e));
                break;
            }
            case RouterAction::UPDATE: {
                auto& e = entries.at(*d.decision.target);
                e.text = item;
                e.updated_at = rec.timestamp;
                insert_sorted(e.supporting_turns, rec.source_turn);
                e.embedding = services.embedder.embed(item);
                d.resolved_key = e.key;
                break;
            }
            case RouterAction::IGNORE:
                d.resolved_key = d.decision.matched;
                break;
        }
        if (d.decision.flagged) report.flags.push_back(d.decision.note);
        report.decisions.push_back(std::move(d));
    };

    for (const auto& rec : segment) {
        if (rec.speaker != bundle.owner) {
            throw InputError("segment record for turn " + std::to_string(rec.source_turn) +
                             " does not belong to bundle \"" + bundle.owner + "\"");
        }
        const auto& u = utterance_for(rec.source_turn);
        report.turns.push_back(rec.source_turn);
        if (!rec.summary.empty()) {
            apply(ItemKind::event, rec, rec.summary, rec.topic.empty() ? rec.summary : rec.topic.front());
        }
        for (const auto& f : rec.facts) {
            if (!f.empty()) apply(ItemKind::fact, rec, f, f);
        }
        for (const auto& a : rec.attributes) {
            if (!a.empty()) apply(ItemKind::attribute, rec, a, a);
        }
        index_words(store, u);
    }
    return report;
}

std::vector<std::vector<std::string>> cluster_keys(const std::vector<KeyedVector>& keys) {
    if (keys.empty()) throw InputError("cluster_keys: need at least one key");
    std::vector<std::size_t> order(keys.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a].id < keys[b].id; });
    std::vector<const EmbeddingVector*> vecs;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i > 0 && keys[order[i]].id == keys[order[i - 1]].id) {
            throw InputError("cluster_keys: duplicate key " + keys[order[i]].id);
        }
        vecs.push_back(&keys[order[i]].vector);
    }
    const auto peers = kernels::nearest_peers(vecs);

    std::vector<std::size_t> parent(vecs.size());
    std::iota(parent.begin(), parent.end(), 0);
    const auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t i = 0; i < peers.size(); ++i) {
        if (peers[i] == kernels::kNoPeer) continue;
        const auto a = find(i), b = find(peers[i]);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    // Roots are the smallest index of each component, so iterating in index
    // order yields clusters sorted by their first key.
    std::map<std::size_t, std::vector<std::string>> comps;
    for (std::size_t i = 0; i < vecs.size(); ++i) comps[find(i)].push_back(keys[order[i]].id);
    std::vector<std::vector<std::string>> out;
    for (auto& [root, members] : comps) out.push_back(std::move(members));
    return out;
}

RegroupReport regroup_topics(ParticipantBundle& bundle, Services services) {
    RegroupReport rep;
    const auto& events = bundle.episodic.events;
    std::map<std::string, TopicSummary> topics;
    std::vector<PreferenceDescriptor> descriptors;
    for (auto& g : group_entries(events, services, rep, "topic")) {
        TopicSummary t;
        t.name = unique_name(g.name, topics);
        t.summary = joined_text(g.members, events);
        t.member_keys = g.members;
        for (const auto& k : g.members) {
            for (TurnId turn : events.at(k).supporting_turns) insert_sorted(t.message_links, turn);
        }
        t.embedding = services.embedder.embed(t.name + ". " + t.summary);
        if (g.members.size() > 1) {
            PreferenceDescriptor d;
            d.text = t.name + ": " + t.summary;
            d.source_topics = {t.name};
            d.embedding = services.embedder.embed(d.text);
            descriptors.push_back(std::move(d));
        }
        topics.emplace(t.name, std::move(t));
    }
    bundle.episodic.topic_summaries = std::move(topics);
    bundle.persona.preference_descriptors = std::move(descriptors);
    return rep;
}

RegroupReport refresh_persona_aspects(ParticipantBundle& bundle, Services services) {
    RegroupReport rep;
    const auto& attrs = bundle.episodic.attributes;
    std::map<std::string, AspectSummary> aspects;
    for (auto& g : group_entries(attrs, services, rep, "aspect")) {
        AspectSummary a;
        a.aspect = unique_name(g.name, aspects);
        a.text = joined_text(g.members, attrs);
        a.source_attribute_keys = g.members;
        a.embedding = services.embedder.embed(a.aspect + ": " + a.text);
        aspects.emplace(a.aspect, std::move(a));
    }
    bundle.persona.aspect_summaries = std::move(aspects);
    return rep;
}

IngestReport MemoryAgent::ingest(ConversationState& state, std::string session_id, ParticipantId speaker,
                                 std::string text, std::string timestamp) {
    if (state.participant_index(speaker) < 0) {
        throw InputError("speaker \"" + speaker + "\" is not a participant of this conversation");
    }
    if (text.empty()) throw InputError("utterance text must be non-empty");

    // Understand before appending so a gateway failure leaves the state untouched.
    Utterance pending{state.turn_counter() + 1, session_id, speaker, text, timestamp};
    NormalizedRecord rec = understand_message(pending, services_.llm);

    const Utterance& u = append_utterance(state, std::move(session_id), std::move(speaker), std::move(text),
                                          std::move(timestamp));
    auto& bundle = state.bundle(u.speaker);
    IngestReport report;
    report.turn = u.turn_id;
    report.degenerate = rec.degenerate;

    index_words(bundle.episodic, u);
    const auto ids = index_message(state.graph, rec, u, services_.embedder);
    bundle.graph_scope.insert(ids.nodes.begin(), ids.nodes.end());
    report.nodes_created += ids.nodes.size();
    report.edges_created += ids.edges.size();

    auto segment = write_working(bundle, std::move(rec), state.config.consolidation_segment);
    if (segment) {
        auto cons = consolidate(bundle, *segment, state.utterances, services_);
        for (auto sub : {regroup_topics(bundle, services_), refresh_persona_aspects(bundle, services_)}) {
            cons.merge_calls += sub.merge_calls;
            cons.flags.insert(cons.flags.end(), sub.flags.begin(), sub.flags.end());
        }
        const auto more = index_consolidated(state.graph, cons, bundle);
        bundle.graph_scope.insert(more.nodes.begin(), more.nodes.end());
        report.nodes_created += more.nodes.size();
        report.edges_created += more.edges.size();
        ++state.consolidations;
        report.consolidation = std::move(cons);
    }
    return report;
}

}  // namespace dialmem
