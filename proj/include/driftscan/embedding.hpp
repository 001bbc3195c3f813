// Request embeddings: normalization, cosine, corpus/embedding file IO and
// the deterministic synthetic corpus generator used for desk-scale runs.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace driftscan {

using Vec = Eigen::VectorXd;

struct EmbeddedRequest {
    std::string id;
    std::string text;
    std::optional<std::string> intent;
    std::shared_ptr<const Vec> embedding_ptr;
    int token_length = 0;
    std::string source_id;  // set by the upsampler, empty otherwise

    const Vec& embedding() const { return *embedding_ptr; }
};

using Corpus = std::vector<EmbeddedRequest>;

struct SyntheticCorpusSpec {
    int n_intents = 2;
    int per_intent_count = 1;
    int dimension = 512;
    double intent_spread = 0.1;         // within-intent angular dispersion
    double max_centroid_cosine = 0.5;   // separation bound between intents
    std::uint64_t seed = 0;
};

int count_tokens(const std::string& text);

// In-place L2 normalization; throws NumericError on zero or non-finite norm.
void normalize(Vec& v);
Vec normalized(Vec v);

double cosine(const Vec& a, const Vec& b);

// Corpus JSONL: {"id": str, "text": str, "intent": str|null} per line.
Corpus load_corpus(const std::string& corpus_path);
void save_corpus(const Corpus& corpus, const std::string& path);

// Embedding file: binary "DSEM" (u32 dim, u64 rows, f32 row-major) or JSONL
// float arrays, auto-detected by magic. Attaches normalized embeddings.
Corpus load_embeddings(const std::string& corpus_path,
                       const std::string& embeddings_path,
                       int expected_dim = -1);
void save_embeddings_binary(const Corpus& corpus, const std::string& path);

Corpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec);

}  // namespace driftscan
