// Stream-ready corpus construction: empirical length distributions,
// length-stratified upsampling with duplicates, and intent holdout splits.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>

#include "driftscan/embedding.hpp"

namespace driftscan {

struct LengthDistribution {
    std::map<int, double> probs;  // token length -> probability

    void validate() const;
};

struct UpsampleSpec {
    std::uint64_t target_size = 50000;  // full-scale deployments use 600000
    LengthDistribution distribution;
    std::uint64_t seed = 0;
    bool fail_on_empty_stratum = false;
};

LengthDistribution estimate_length_distribution(const Corpus& corpus);

// JSON file: {"probs": {"1": 0.31, "2": 0.18, ...}}.
LengthDistribution load_length_distribution(const std::string& path);
void save_length_distribution(const LengthDistribution& dist, const std::string& path);

// Draws target_size requests: length from the distribution, then uniform
// with replacement from the corpus stratum of that length. Mass on empty
// strata is redistributed to the nearest populated length (or fails, per
// spec flag). Fresh ids, source id recorded, embeddings shared by reference.
Corpus upsample(const Corpus& corpus, const UpsampleSpec& spec);

// Holds out round-half-up(intents * fraction) intents (at least 1) for
// drift injection; everything else is seed data.
std::pair<Corpus, Corpus> holdout_split(const Corpus& corpus, double drift_fraction,
                                        std::uint64_t seed);

}  // namespace driftscan
