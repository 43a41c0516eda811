#include <doctest.h>

#include <random>

#include "dialmem/embedding.hpp"
#include "dialmem/kernels.hpp"
#include "dialmem/persistence.hpp"
#include "dialmem/text.hpp"
#include "test_support.hpp"

using namespace dialmem;

TEST_CASE("tokenizer") {
    CHECK(text::tokenize("Hello, World! it's 2023") == std::vector<std::string>{"hello", "world", "it", "s", "2023"});
    CHECK(text::tokenize("").empty());
    CHECK(text::tokenize("naïve") == std::vector<std::string>{"naïve"});
    CHECK(text::content_tokens("What did the dog do with my shoe?") == std::vector<std::string>{"dog", "shoe"});
}

TEST_CASE("stopword list is fixed at thirty words") {
    CHECK(text::stopwords().size() == 30);
    for (auto w : {"a", "an", "the", "and", "or", "of", "to", "in", "on", "at", "for", "with", "is", "was", "are",
                   "be", "do", "did", "does", "i", "you", "he", "she", "it", "my", "her", "his", "what", "when", "who"}) {
        CHECK(text::is_stopword(w));
    }
    CHECK_FALSE(text::is_stopword("dad"));
}

TEST_CASE("fnv1a64 reference vectors") {
    CHECK(text::fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(text::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(text::fnv1a64("foobar") == 0x85944171f73967e8ULL);
    CHECK(text::to_hex(0xabcULL) == "0000000000000abc");
}

TEST_CASE("slugify") {
    CHECK(text::slugify("Horseback Riding!") == "horseback-riding");
    CHECK(text::slugify("  --  ") == "item");
    CHECK(text::slugify(std::string(200, 'x')).size() == 80);
}

TEST_CASE("hash embedder matches the independent reference") {
    const auto doc = parse_document(read_file(testing::data_file("hash_embed_golden.json")));
    REQUIRE(doc["cases"].size() == 10);
    for (const auto& c : doc["cases"]) {
        const auto v = hash_embed(c["text"].get<std::string>(), doc["dimension"].get<int>());
        CAPTURE(c["text"].get<std::string>());
        CHECK(text::to_hex(vector_fingerprint(v)) == c["fingerprint"].get<std::string>());
    }
}

TEST_CASE("hash embeddings are unit or zero") {
    const auto v = hash_embed("horse riding with dad");
    double sq = 0;
    for (double x : v.values) sq += x * x;
    CHECK(sq == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(hash_embed("?!").is_zero());
    CHECK(cosine_similarity(v, v) == doctest::Approx(1.0));
    CHECK(cosine_similarity(v, hash_embed("")) == 0.0);
    CHECK_THROWS_AS(cosine_similarity(v, hash_embed("x", 8)), InputError);
}

TEST_CASE("top_k_similar orders by score then id") {
    const auto q = hash_embed("alpha");
    std::vector<KeyedVector> items = {{"b", hash_embed("alpha")}, {"a", hash_embed("alpha")}, {"c", hash_embed("beta")}};
    const auto top = top_k_similar(q, items, 2);
    REQUIRE(top.size() == 2);
    CHECK(top[0].id == "a");
    CHECK(top[1].id == "b");
    CHECK_THROWS_AS(top_k_similar(q, items, 0), InputError);
}

TEST_CASE("parallel kernels agree with serial references bit for bit") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    for (std::size_t n : {0u, 1u, 2u, 17u, 300u, 2000u}) {
        std::vector<EmbeddingVector> vs(n);
        for (auto& v : vs) {
            v.values.resize(64);
            for (double& x : v.values) x = nd(rng);
            normalize(v);
        }
        std::vector<const EmbeddingVector*> ptrs;
        for (auto& v : vs) ptrs.push_back(&v);
        EmbeddingVector q;
        q.values.resize(64);
        for (double& x : q.values) x = nd(rng);
        normalize(q);
        CHECK(kernels::similarity_scores(q, ptrs) == kernels::similarity_scores_serial(q, ptrs));
        CHECK(kernels::nearest_peers(ptrs) == kernels::nearest_peers_serial(ptrs));
    }
}

TEST_CASE("nearest peer ties go to the lowest index") {
    const auto a = hash_embed("one"), b = hash_embed("two");
    std::vector<const EmbeddingVector*> ptrs = {&a, &b, &b};
    const auto peers = kernels::nearest_peers(ptrs);
    CHECK(peers[0] == 1);
    CHECK(peers[1] == 2);
    CHECK(peers[2] == 1);
    std::vector<const EmbeddingVector*> single = {&a};
    CHECK(kernels::nearest_peers(single)[0] == kernels::kNoPeer);
}
