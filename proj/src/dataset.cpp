#include "driftscan/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>

#include <nlohmann/json.hpp>

#include "driftscan/errors.hpp"
#include "driftscan/rng.hpp"

namespace driftscan {

using nlohmann::json;

void LengthDistribution::validate() const {
    double sum = 0.0;
    for (const auto& [len, p] : probs) {
        if (len < 1) throw ValidationError("length distribution: lengths must be positive");
        if (p < 0.0) throw ValidationError("length distribution: negative probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ValidationError("length distribution: probabilities sum to " + std::to_string(sum));
}

LengthDistribution estimate_length_distribution(const Corpus& corpus) {
    if (corpus.empty()) throw ValidationError("estimate_length_distribution: empty corpus");
    LengthDistribution dist;
    for (const auto& r : corpus) dist.probs[r.token_length] += 1.0;
    for (auto& [len, p] : dist.probs) p /= static_cast<double>(corpus.size());
    return dist;
}

LengthDistribution load_length_distribution(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open length distribution file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError("bad length distribution file " + path + ": " + e.what());
    }
    LengthDistribution dist;
    for (const auto& [key, value] : j.at("probs").items())
        dist.probs[std::stoi(key)] = value.get<double>();
    dist.validate();
    return dist;
}

void save_length_distribution(const LengthDistribution& dist, const std::string& path) {
    json probs = json::object();
    for (const auto& [len, p] : dist.probs) probs[std::to_string(len)] = p;
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write length distribution file: " + path);
    out << json{{"probs", std::move(probs)}}.dump(2) << "\n";
}

Corpus upsample(const Corpus& corpus, const UpsampleSpec& spec) {
    if (corpus.empty()) throw ValidationError("upsample: empty corpus");
    if (spec.target_size < 1) throw ValidationError("upsample: target size must be >= 1");
    spec.distribution.validate();

    std::map<int, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < corpus.size(); ++i)
        strata[corpus[i].token_length].push_back(i);

    // Move mass on empty strata to the nearest populated length (smaller
    // length wins distance ties).
    std::map<int, double> probs;
    for (const auto& [len, p] : spec.distribution.probs) {
        if (p <= 0.0) continue;
        if (strata.count(len)) {
            probs[len] += p;
            continue;
        }
        if (spec.fail_on_empty_stratum)
            throw ValidationError("upsample: no corpus utterance of length " +
                                  std::to_string(len));
        int nearest = 0;
        int best_dist = -1;
        for (const auto& [cand, members] : strata) {
            (void)members;
            const int dist = std::abs(cand - len);
            if (best_dist < 0 || dist < best_dist || (dist == best_dist && cand < nearest)) {
                best_dist = dist;
                nearest = cand;
            }
        }
        std::cerr << "upsample: redistributing mass " << p << " from empty length stratum " << len
                  << " to length " << nearest << "\n";
        probs[nearest] += p;
    }

    // Inverse-CDF table over ascending lengths.
    std::vector<std::pair<int, double>> cdf;
    double acc = 0.0;
    for (const auto& [len, p] : probs) {
        acc += p;
        cdf.emplace_back(len, acc);
    }
    if (cdf.empty()) throw ValidationError("upsample: distribution has no positive mass");
    cdf.back().second = 1.0;

    Rng rng(spec.seed);
    Corpus out;
    out.reserve(spec.target_size);
    for (std::uint64_t n = 0; n < spec.target_size; ++n) {
        const double u = rng.uniform();
        int length = cdf.back().first;
        for (const auto& [len, c] : cdf) {
            if (u < c) {
                length = len;
                break;
            }
        }
        const auto& stratum = strata.at(length);
        const std::size_t pick = stratum[rng.uniform_below(stratum.size())];
        EmbeddedRequest r = corpus[pick];
        r.source_id = corpus[pick].id;
        r.id = "up_" + std::to_string(n);
        out.push_back(std::move(r));
    }
    return out;
}

std::pair<Corpus, Corpus> holdout_split(const Corpus& corpus, double drift_fraction,
                                        std::uint64_t seed) {
    std::set<std::string> intent_set;
    for (const auto& r : corpus)
        if (r.intent) intent_set.insert(*r.intent);
    if (intent_set.size() < 2)
        throw ValidationError("holdout_split: need at least 2 labeled intents");

    std::vector<std::string> intents(intent_set.begin(), intent_set.end());
    Rng rng(seed);
    rng.shuffle(intents);

    // Round-half-up, at least one held out.
    const std::size_t k = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::floor(static_cast<double>(intents.size()) * drift_fraction + 0.5)));
    std::set<std::string> drift_intents(intents.begin(),
                                        intents.begin() + static_cast<std::ptrdiff_t>(k));

    Corpus seed_corpus, drift_corpus;
    for (const auto& r : corpus) {
        if (r.intent && drift_intents.count(*r.intent))
            drift_corpus.push_back(r);
        else
            seed_corpus.push_back(r);
    }
    return {std::move(seed_corpus), std::move(drift_corpus)};
}

}  // namespace driftscan
