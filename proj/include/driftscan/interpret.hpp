// Drift interpretation: greedy average-linkage clustering of post-change
// outliers over cosine similarity, n-gram cluster naming, intent coverage.
#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "driftscan/embedding.hpp"

namespace driftscan {

struct ClusteringConfig {
    double link_threshold = 0.6;
    int min_cluster_size = 5;
    std::optional<int> max_clusters;
    int name_ngram_max = 2;

    void validate() const;
};

struct Cluster {
    std::vector<std::string> members;  // request ids, input order
    Vec centroid;
    std::string name;
    std::optional<std::string> majority_intent;
    double majority_fraction = 0.0;
    double cohesion_floor = 0.0;  // min member-to-centroid cosine
};

struct InterpretationReport {
    std::vector<Cluster> clusters;  // size descending, then name
    int unclustered_count = 0;
    std::optional<double> recall;
};

InterpretationReport cluster_outliers(const std::vector<EmbeddedRequest>& outliers,
                                      const ClusteringConfig& config);

std::string name_cluster(const std::vector<std::string>& texts, const ClusteringConfig& config);

// Fraction of drift intents that are the majority label of at least one cluster.
double coverage_recall(const InterpretationReport& report, const std::set<std::string>& drift_intents);

std::string interpretation_to_json(const InterpretationReport& report);

}  // namespace driftscan
