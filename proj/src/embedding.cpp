#include "driftscan/embedding.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "driftscan/errors.hpp"
#include "driftscan/rng.hpp"

namespace driftscan {

using nlohmann::json;

int count_tokens(const std::string& text) {
    std::istringstream in(text);
    std::string tok;
    int n = 0;
    while (in >> tok) ++n;
    return n;
}

void normalize(Vec& v) {
    if (!v.allFinite()) throw NumericError("normalize: non-finite entry");
    const double norm = v.norm();
    if (norm <= 0.0) throw NumericError("normalize: zero-norm vector");
    v /= norm;
}

Vec normalized(Vec v) {
    normalize(v);
    return v;
}

double cosine(const Vec& a, const Vec& b) {
    if (a.size() != b.size())
        throw ValidationError("cosine: dimension mismatch (" + std::to_string(a.size()) +
                              " vs " + std::to_string(b.size()) + ")");
    if (!a.allFinite() || !b.allFinite()) throw NumericError("cosine: non-finite input");
    const double na = a.norm();
    const double nb = b.norm();
    if (na <= 0.0 || nb <= 0.0) throw NumericError("cosine: zero-norm input");
    return a.dot(b) / (na * nb);
}

Corpus load_corpus(const std::string& corpus_path) {
    std::ifstream in(corpus_path);
    if (!in) throw ValidationError("cannot open corpus file: " + corpus_path);
    Corpus corpus;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ValidationError("corpus line " + std::to_string(lineno) + ": " + e.what());
        }
        EmbeddedRequest r;
        if (!j.contains("id") || !j.contains("text"))
            throw ValidationError("corpus line " + std::to_string(lineno) +
                                  ": missing required field id/text");
        r.id = j.at("id").get<std::string>();
        r.text = j.at("text").get<std::string>();
        if (j.contains("intent") && !j.at("intent").is_null())
            r.intent = j.at("intent").get<std::string>();
        if (j.contains("source_id") && !j.at("source_id").is_null())
            r.source_id = j.at("source_id").get<std::string>();
        r.token_length = count_tokens(r.text);
        if (!seen_ids.insert(r.id).second)
            throw ValidationError("corpus line " + std::to_string(lineno) + ": duplicate id '" +
                                  r.id + "'");
        corpus.push_back(std::move(r));
    }
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write corpus file: " + path);
    for (const auto& r : corpus) {
        json j;
        j["id"] = r.id;
        j["text"] = r.text;
        j["intent"] = r.intent ? json(*r.intent) : json(nullptr);
        if (!r.source_id.empty()) j["source_id"] = r.source_id;
        out << j.dump() << "\n";
    }
}

namespace {

constexpr char kEmbeddingMagic[4] = {'D', 'S', 'E', 'M'};

std::vector<Vec> read_binary_embeddings(std::ifstream& in, const std::string& path) {
    std::uint32_t dim = 0;
    std::uint64_t rows = 0;
    in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
    in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    if (!in) throw ValidationError("truncated embedding header: " + path);
    std::vector<Vec> out;
    out.reserve(rows);
    std::vector<float> row(dim);
    for (std::uint64_t i = 0; i < rows; ++i) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(dim * sizeof(float)));
        if (!in)
            throw ValidationError("truncated embedding row " + std::to_string(i) + " in " + path);
        Vec v(dim);
        for (std::uint32_t k = 0; k < dim; ++k) v[k] = row[k];
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<Vec> read_jsonl_embeddings(std::ifstream& in, const std::string& path) {
    std::vector<Vec> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ValidationError("embedding line " + std::to_string(lineno) + " in " + path +
                                  ": " + e.what());
        }
        if (!j.is_array())
            throw ValidationError("embedding line " + std::to_string(lineno) + ": expected array");
        Vec v(j.size());
        for (std::size_t k = 0; k < j.size(); ++k) v[static_cast<Eigen::Index>(k)] = j[k].get<double>();
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace

Corpus load_embeddings(const std::string& corpus_path, const std::string& embeddings_path,
                       int expected_dim) {
    Corpus corpus = load_corpus(corpus_path);

    std::ifstream in(embeddings_path, std::ios::binary);
    if (!in) throw ValidationError("cannot open embedding file: " + embeddings_path);
    char magic[4] = {};
    in.read(magic, 4);
    std::vector<Vec> rows;
    if (in && std::memcmp(magic, kEmbeddingMagic, 4) == 0) {
        rows = read_binary_embeddings(in, embeddings_path);
    } else {
        in.clear();
        in.seekg(0);
        rows = read_jsonl_embeddings(in, embeddings_path);
    }

    if (rows.size() != corpus.size())
        throw ValidationError("row-count mismatch: corpus has " + std::to_string(corpus.size()) +
                              " records, embedding file has " + std::to_string(rows.size()) +
                              " rows");
    const Eigen::Index dim = rows.empty() ? 0 : rows[0].size();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (expected_dim > 0 && rows[i].size() != expected_dim)
            throw ValidationError("dimension mismatch at row " + std::to_string(i) + ": expected " +
                                  std::to_string(expected_dim) + ", got " +
                                  std::to_string(rows[i].size()));
        if (rows[i].size() != dim)
            throw ValidationError("dimension mismatch at row " + std::to_string(i));
        if (!rows[i].allFinite())
            throw ValidationError("non-finite value at embedding row " + std::to_string(i));
        if (rows[i].norm() <= 0.0)
            throw ValidationError("zero-norm embedding at row " + std::to_string(i));
        normalize(rows[i]);
        corpus[i].embedding_ptr = std::make_shared<const Vec>(std::move(rows[i]));
    }
    return corpus;
}

void save_embeddings_binary(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write embedding file: " + path);
    const std::uint32_t dim =
        corpus.empty() ? 0u : static_cast<std::uint32_t>(corpus.front().embedding().size());
    const std::uint64_t rows = corpus.size();
    out.write(kEmbeddingMagic, 4);
    out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    std::vector<float> row(dim);
    for (const auto& r : corpus) {
        const Vec& v = r.embedding();
        for (std::uint32_t k = 0; k < dim; ++k) row[k] = static_cast<float>(v[k]);
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(dim * sizeof(float)));
    }
}

namespace {

const char* kTextTemplates[] = {
    "%s",
    "%s please",
    "need help with %s",
    "question about %s account",
    "how can i change my %s settings",
    "tell me more about %s options right now",
};

std::string format_template(const char* tpl, const std::string& name) {
    std::string out(tpl);
    const auto pos = out.find("%s");
    out.replace(pos, 2, name);
    return out;
}

}  // namespace

Corpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec) {
    if (spec.n_intents < 2) throw ValidationError("synthetic corpus needs n_intents >= 2");
    if (spec.per_intent_count < 1) throw ValidationError("per_intent_count must be >= 1");
    if (spec.dimension < 2) throw ValidationError("dimension must be >= 2");
    if (spec.intent_spread <= 0.0 || spec.intent_spread > 1.0)
        throw ValidationError("intent_spread must be in (0, 1]");

    Rng rng(spec.seed);
    const int d = spec.dimension;

    // Centroids on the unit sphere, rejection-sampled against the
    // separation bound; falls back to the best attempt when the sphere
    // gets crowded (small d, many intents).
    std::vector<Vec> centroids;
    centroids.reserve(spec.n_intents);
    for (int i = 0; i < spec.n_intents; ++i) {
        Vec best;
        double best_max_cos = 2.0;
        for (int attempt = 0; attempt < 200; ++attempt) {
            Vec c(d);
            for (int k = 0; k < d; ++k) c[k] = rng.normal();
            normalize(c);
            double max_cos = -1.0;
            for (const auto& prev : centroids) max_cos = std::max(max_cos, cosine(c, prev));
            if (max_cos < best_max_cos) {
                best_max_cos = max_cos;
                best = c;
            }
            if (centroids.empty() || max_cos <= spec.max_centroid_cosine) break;
        }
        centroids.push_back(std::move(best));
    }

    Corpus corpus;
    corpus.reserve(static_cast<std::size_t>(spec.n_intents) * spec.per_intent_count);
    constexpr int n_templates = static_cast<int>(std::size(kTextTemplates));
    for (int i = 0; i < spec.n_intents; ++i) {
        const std::string name = "intent_" + std::to_string(i);
        for (int j = 0; j < spec.per_intent_count; ++j) {
            Vec e = centroids[i];
            for (int k = 0; k < d; ++k) e[k] += spec.intent_spread * rng.normal();
            normalize(e);
            EmbeddedRequest r;
            r.id = name + "_" + std::to_string(j);
            r.text = format_template(kTextTemplates[j % n_templates], name);
            r.intent = name;
            r.token_length = count_tokens(r.text);
            r.embedding_ptr = std::make_shared<const Vec>(std::move(e));
            corpus.push_back(std::move(r));
        }
    }
    return corpus;
}

}  // namespace driftscan
