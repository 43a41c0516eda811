// dialmem command-line front end: ingest, ask, eval, inspect, snapshot.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "dialmem/harness.hpp"
#include "dialmem/text.hpp"

using namespace dialmem;

namespace {

struct CommonFlags {
    std::string config_path;
    std::string mode = "hybrid";
    int top_k = 0;
    int max_iters = 0;
    std::string llm = "replay";
    std::string script;
    bool verbose = false;
    bool seed_report = false;
    std::string embedder = "hash";
    std::string embed_model = "text-embedding-3-small";
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "JSON config overlay");
    cmd->add_option("--mode", f.mode, "route override")->check(CLI::IsMember({"semantic", "graph", "hybrid"}));
    cmd->add_option("--top-k", f.top_k, "final evidence budget")->check(CLI::PositiveNumber);
    cmd->add_option("--max-iters", f.max_iters, "research rounds")->check(CLI::PositiveNumber);
    cmd->add_option("--llm", f.llm, "gateway backend")->check(CLI::IsMember({"live", "replay"}));
    cmd->add_option("--script", f.script, "replay script (with --llm replay)");
    cmd->add_flag("--verbose", f.verbose, "print plans, candidates, and research trace");
    cmd->add_flag("--seed-report", f.seed_report, "print graph seeds per retrieval");
    cmd->add_option("--embedder", f.embedder, "embedding backend")->check(CLI::IsMember({"hash", "http"}));
    cmd->add_option("--embed-model", f.embed_model, "model for --embedder http");
}

std::unique_ptr<LlmGateway> make_gateway(const CommonFlags& f) {
    if (f.llm == "live") {
        auto opts = openai_options_from_env();
        const auto model = opts.model;
        return std::make_unique<LlmGateway>(std::make_shared<OpenAiChatTransport>(std::move(opts)), model);
    }
    if (f.script.empty()) throw InputError("--llm replay needs --script PATH");
    return std::make_unique<LlmGateway>(ScriptedReplayer::load(f.script), "replay");
}

std::unique_ptr<Embedder> make_embedder(const CommonFlags& f, const EngineConfig& config) {
    if (f.embedder == "http") {
        HttpEmbedderOptions o;
        const char* base = std::getenv("ADAMEM_API_BASE");
        const char* key = std::getenv("ADAMEM_API_KEY");
        o.base_url = base && *base ? base : "https://api.openai.com/v1";
        if (!key || !*key) throw GatewayError("ADAMEM_API_KEY is not set");
        o.api_key = key;
        o.model = f.embed_model;
        o.dimension = config.embedding_dimension;
        return std::make_unique<HttpEmbedder>(std::move(o));
    }
    return std::make_unique<HashEmbedder>(config.embedding_dimension);
}

void apply_overrides(EngineConfig& config, const CommonFlags& f) {
    if (!f.config_path.empty()) config = config_from_json(parse_document(read_file(f.config_path)), config);
    if (f.top_k > 0) config.top_k = f.top_k;
    if (f.max_iters > 0) config.max_research_iterations = f.max_iters;
    validate(config);
}

AskOptions ask_options(const CommonFlags& f) { return {*parse_route_mode(f.mode)}; }

void print_seed_report(const json& research) {
    for (const auto& round : research["rounds"]) {
        for (const auto& r : round["retrievals"]) {
            const auto& d = r["diagnostics"];
            std::printf("round %d seeds:", round["iteration"].get<int>());
            if (!d["graph_read"].get<bool>()) {
                std::printf(" (graph not used)\n");
                continue;
            }
            for (const auto& s : d["graph_seeds"]) {
                std::printf(" node:%llu=%.4f", s["node"].get<unsigned long long>(), s["score"].get<double>());
            }
            std::printf("\n");
        }
    }
}

void print_table(const EvalReport& r) {
    std::printf("%-14s %6s %8s %8s %9s\n", "category", "n", "F1", "BLEU-1", "accuracy");
    const auto row = [](const std::string& name, const MetricSummary& m) {
        char acc[16] = "-";
        if (m.accuracy) std::snprintf(acc, sizeof acc, "%.4f", *m.accuracy);
        std::printf("%-14s %6zu %8.4f %8.4f %9s\n", name.c_str(), m.questions, m.f1, m.bleu1, acc);
    };
    for (const auto& [name, m] : r.categories) row(name, m);
    row("overall", r.overall);
}

int run(int argc, char** argv) {
    CLI::App app{"dialmem: long-term conversational memory engine"};
    app.require_subcommand(1);

    CommonFlags f;
    std::string transcript, snapshot_path, out, question, questions_path;
    bool dump_graph = false;

    auto* ingest = app.add_subcommand("ingest", "process a transcript and write a snapshot");
    ingest->add_option("transcript", transcript, "transcript JSON")->required()->check(CLI::ExistingFile);
    ingest->add_option("--out", out, "snapshot path")->required();
    add_common(ingest, f);

    auto* ask_cmd = app.add_subcommand("ask", "answer one question from a snapshot");
    ask_cmd->add_option("snapshot", snapshot_path)->required()->check(CLI::ExistingFile);
    ask_cmd->add_option("question", question)->required();
    add_common(ask_cmd, f);

    auto* eval = app.add_subcommand("eval", "answer and score a question file");
    eval->add_option("snapshot", snapshot_path)->required()->check(CLI::ExistingFile);
    eval->add_option("questions", questions_path)->required()->check(CLI::ExistingFile);
    eval->add_option("--out", out, "report path");
    add_common(eval, f);

    auto* inspect = app.add_subcommand("inspect", "summarize a snapshot");
    inspect->add_option("snapshot", snapshot_path)->required()->check(CLI::ExistingFile);
    inspect->add_flag("--graph", dump_graph, "dump graph nodes and edges");

    auto* snap = app.add_subcommand("snapshot", "validate a snapshot and rewrite it canonically");
    snap->add_option("snapshot", snapshot_path)->required()->check(CLI::ExistingFile);
    snap->add_option("--out", out, "output path (default: print hash only)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (ingest->parsed()) {
        auto config = default_config();
        apply_overrides(config, f);
        const auto t = load_transcript(transcript);
        auto gateway = make_gateway(f);
        const auto embedder = make_embedder(f, config);
        auto state = conversation_for(t, config);
        MemoryAgent agent({*gateway, *embedder});
        const auto stats = ingest_transcript(state, t, agent);
        write_snapshot(state, out);
        std::printf("turns %zu\nconsolidations %zu\nnodes %zu\nedges %zu\n", stats.turns, stats.consolidations,
                    stats.nodes, stats.edges);
        if (f.verbose) std::printf("degenerate %zu\nllm_calls %zu\n", stats.degenerate, gateway->call_count());
        std::printf("snapshot %s\n", text::to_hex(text::fnv1a64(snapshot(state))).c_str());
        return 0;
    }

    if (ask_cmd->parsed()) {
        auto state = read_snapshot(snapshot_path);
        apply_overrides(state.config, f);
        auto gateway = make_gateway(f);
        const auto embedder = make_embedder(f, state.config);
        const auto rec = ask(state, question, {*gateway, *embedder}, ask_options(f));
        std::printf("%s\n", rec.answer.c_str());
        if (f.seed_report) print_seed_report(rec.diagnostics["research"]);
        if (f.verbose) std::printf("%s\n", to_json(rec).dump(2).c_str());
        return 0;
    }

    if (eval->parsed()) {
        auto state = read_snapshot(snapshot_path);
        apply_overrides(state.config, f);
        const auto qs = load_questions(questions_path);
        auto gateway = make_gateway(f);
        const auto embedder = make_embedder(f, state.config);
        const auto report = evaluate(state, qs, {*gateway, *embedder}, ask_options(f));
        const auto doc = to_json(report).dump(2) + "\n";
        if (!out.empty()) {
            std::FILE* fp = std::fopen(out.c_str(), "wb");
            if (!fp) throw InputError("cannot write " + out);
            std::fwrite(doc.data(), 1, doc.size(), fp);
            std::fclose(fp);
        }
        print_table(report);
        std::printf("report %s\n", report_hash(report).c_str());
        if (f.verbose && out.empty()) std::printf("%s", doc.c_str());
        return 0;
    }

    if (inspect->parsed()) {
        const auto state = read_snapshot(snapshot_path);
        std::printf("participants %s, %s\nturns %lld\nconsolidations %zu\nnodes %zu\nedges %zu\n",
                    state.participants[0].c_str(), state.participants[1].c_str(),
                    static_cast<long long>(state.turn_counter()), state.consolidations, state.graph.nodes().size(),
                    state.graph.edges().size());
        for (const auto& b : state.bundles) {
            std::printf("%s: working %zu, events %zu, facts %zu, attributes %zu, topics %zu, descriptors %zu, aspects %zu\n",
                        b.owner.c_str(), b.working.queue.size(), b.episodic.events.size(), b.episodic.facts.size(),
                        b.episodic.attributes.size(), b.episodic.topic_summaries.size(),
                        b.persona.preference_descriptors.size(), b.persona.aspect_summaries.size());
        }
        if (dump_graph) {
            auto g = snapshot_json(state)["graph"];
            for (auto& n : g["nodes"]) n.erase("embedding");
            std::printf("%s\n", g.dump(2).c_str());
        }
        return 0;
    }

    if (snap->parsed()) {
        const auto state = read_snapshot(snapshot_path);
        if (!out.empty()) write_snapshot(state, out);
        std::printf("snapshot %s\n", text::to_hex(text::fnv1a64(snapshot(state))).c_str());
        return 0;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const InputError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return 2;
    } catch (const GatewayError& e) {
        std::fprintf(stderr, "gateway error: %s\n", e.what());
        return 3;
    } catch (const InvariantError& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 4;
    }
}
