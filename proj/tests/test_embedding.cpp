#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "driftscan/embedding.hpp"
#include "driftscan/errors.hpp"
#include "driftscan/rng.hpp"

using namespace driftscan;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("driftscan_test_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

void write_dsem(const std::string& path, int dim, const std::vector<std::vector<float>>& rows) {
    std::ofstream out(path, std::ios::binary);
    out.write("DSEM", 4);
    std::uint32_t d = static_cast<std::uint32_t>(dim);
    std::uint64_t n = rows.size();
    out.write(reinterpret_cast<const char*>(&d), 4);
    out.write(reinterpret_cast<const char*>(&n), 8);
    for (const auto& r : rows)
        out.write(reinterpret_cast<const char*>(r.data()),
                  static_cast<std::streamsize>(r.size() * sizeof(float)));
}

Vec make_vec(std::initializer_list<double> vals) {
    Vec v(static_cast<Eigen::Index>(vals.size()));
    Eigen::Index i = 0;
    for (double x : vals) v[i++] = x;
    return v;
}

}  // namespace

TEST_CASE("cosine basics") {
    CHECK(cosine(make_vec({1, 0}), make_vec({1, 0})) == doctest::Approx(1.0));
    CHECK(cosine(make_vec({1, 0}), make_vec({0, 1})) == doctest::Approx(0.0));
    CHECK(cosine(make_vec({1, 0}), normalized(make_vec({1, 1}))) ==
          doctest::Approx(0.7071).epsilon(1e-4));
    CHECK_THROWS_AS(cosine(make_vec({1, 0}), make_vec({1, 0, 0})), ValidationError);
}

TEST_CASE("cosine symmetry and bound on random pairs") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        Vec a(8), b(8);
        for (int k = 0; k < 8; ++k) {
            a[k] = rng.normal();
            b[k] = rng.normal();
        }
        const double ab = cosine(a, b);
        CHECK(ab == doctest::Approx(cosine(b, a)).epsilon(1e-12));
        CHECK(std::abs(ab) <= 1.0 + 1e-9);
    }
}

TEST_CASE("normalization is idempotent") {
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        Vec v(16);
        for (int k = 0; k < 16; ++k) v[k] = rng.normal();
        Vec once = normalized(v);
        Vec twice = normalized(once);
        CHECK((once - twice).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK(once.norm() == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("load_embeddings normalizes scaled axis vectors") {
    TempDir dir;
    write_file(dir.file("c.jsonl"),
               "{\"id\":\"a\",\"text\":\"hello there\",\"intent\":null}\n"
               "{\"id\":\"b\",\"text\":\"hi\",\"intent\":\"greet\"}\n"
               "{\"id\":\"c\",\"text\":\"x y z\",\"intent\":null}\n");
    write_dsem(dir.file("e.bin"), 4, {{2, 0, 0, 0}, {2, 0, 0, 0}, {2, 0, 0, 0}});
    auto corpus = load_embeddings(dir.file("c.jsonl"), dir.file("e.bin"));
    REQUIRE(corpus.size() == 3);
    for (const auto& r : corpus) {
        CHECK(r.embedding()[0] == doctest::Approx(1.0));
        CHECK(r.embedding().norm() == doctest::Approx(1.0));
    }
    CHECK(corpus[0].token_length == 2);
    CHECK(corpus[1].intent.value() == "greet");
    CHECK(corpus[2].token_length == 3);
}

TEST_CASE("load_embeddings row-count mismatch names both counts") {
    TempDir dir;
    std::string corpus;
    for (int i = 0; i < 5; ++i)
        corpus += "{\"id\":\"r" + std::to_string(i) + "\",\"text\":\"t\"}\n";
    write_file(dir.file("c.jsonl"), corpus);
    write_dsem(dir.file("e.bin"), 2, {{1, 0}, {1, 0}, {1, 0}, {1, 0}});
    try {
        load_embeddings(dir.file("c.jsonl"), dir.file("e.bin"));
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("5") != std::string::npos);
        CHECK(msg.find("4") != std::string::npos);
    }
}

TEST_CASE("load_embeddings reports NaN rows with index") {
    TempDir dir;
    write_file(dir.file("c.jsonl"),
               "{\"id\":\"a\",\"text\":\"t\"}\n{\"id\":\"b\",\"text\":\"t\"}\n");
    write_dsem(dir.file("e.bin"), 2, {{1, 0}, {std::nanf(""), 0}});
    try {
        load_embeddings(dir.file("c.jsonl"), dir.file("e.bin"));
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("row 1") != std::string::npos);
    }
}

TEST_CASE("load_embeddings accepts JSONL float arrays") {
    TempDir dir;
    write_file(dir.file("c.jsonl"), "{\"id\":\"a\",\"text\":\"t\"}\n");
    write_file(dir.file("e.jsonl"), "[3.0, 0.0, 4.0]\n");
    auto corpus = load_embeddings(dir.file("c.jsonl"), dir.file("e.jsonl"));
    REQUIRE(corpus.size() == 1);
    CHECK(corpus[0].embedding()[0] == doctest::Approx(0.6));
    CHECK(corpus[0].embedding()[2] == doctest::Approx(0.8));
}

TEST_CASE("duplicate corpus ids rejected") {
    TempDir dir;
    write_file(dir.file("c.jsonl"),
               "{\"id\":\"a\",\"text\":\"t\"}\n{\"id\":\"a\",\"text\":\"u\"}\n");
    CHECK_THROWS_AS(load_corpus(dir.file("c.jsonl")), ValidationError);
}

TEST_CASE("corpus round-trips through save/load") {
    SyntheticCorpusSpec spec;
    spec.n_intents = 3;
    spec.per_intent_count = 4;
    spec.dimension = 8;
    spec.seed = 3;
    auto corpus = generate_synthetic_corpus(spec);
    TempDir dir;
    save_corpus(corpus, dir.file("c.jsonl"));
    save_embeddings_binary(corpus, dir.file("e.bin"));
    auto loaded = load_embeddings(dir.file("c.jsonl"), dir.file("e.bin"), 8);
    REQUIRE(loaded.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        CHECK(loaded[i].id == corpus[i].id);
        CHECK(loaded[i].text == corpus[i].text);
        CHECK(loaded[i].intent == corpus[i].intent);
        CHECK(cosine(loaded[i].embedding(), corpus[i].embedding()) > 1.0 - 1e-9);
    }
}

TEST_CASE("synthetic corpus is deterministic by seed") {
    SyntheticCorpusSpec spec;
    spec.n_intents = 2;
    spec.per_intent_count = 3;
    spec.dimension = 8;
    spec.intent_spread = 0.01;
    spec.seed = 7;
    auto a = generate_synthetic_corpus(spec);
    auto b = generate_synthetic_corpus(spec);
    REQUIRE(a.size() == 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == b[i].id);
        CHECK(a[i].text == b[i].text);
        CHECK((a[i].embedding() - b[i].embedding()).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("within-intent cosine exceeds cross-intent cosine") {
    SyntheticCorpusSpec spec;
    spec.n_intents = 2;
    spec.per_intent_count = 3;
    spec.dimension = 8;
    spec.intent_spread = 0.01;
    spec.seed = 7;
    auto corpus = generate_synthetic_corpus(spec);
    double within = 0.0, cross = 0.0;
    int n_within = 0, n_cross = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i)
        for (std::size_t j = i + 1; j < corpus.size(); ++j) {
            const double c = cosine(corpus[i].embedding(), corpus[j].embedding());
            if (corpus[i].intent == corpus[j].intent) {
                within += c;
                ++n_within;
            } else {
                cross += c;
                ++n_cross;
            }
        }
    CHECK(within / n_within > cross / n_cross);
}

TEST_CASE("full-scale synthetic corpus has 22500 requests") {
    SyntheticCorpusSpec spec;
    spec.n_intents = 150;
    spec.per_intent_count = 150;
    spec.dimension = 16;
    spec.seed = 1;
    auto corpus = generate_synthetic_corpus(spec);
    CHECK(corpus.size() == 22500);
}

TEST_CASE("token_length matches whitespace token count") {
    CHECK(count_tokens("") == 0);
    CHECK(count_tokens("one") == 1);
    CHECK(count_tokens("  two   tokens  ") == 2);
}
