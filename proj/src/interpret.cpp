#include "driftscan/interpret.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "driftscan/errors.hpp"

namespace driftscan {

using nlohmann::json;

void ClusteringConfig::validate() const {
    if (link_threshold < 0.0 || link_threshold > 1.0)
        throw ValidationError("clustering: link_threshold must be in [0, 1]");
    if (min_cluster_size < 2) throw ValidationError("clustering: min_cluster_size must be >= 2");
    if (name_ngram_max < 1) throw ValidationError("clustering: name_ngram_max must be >= 1");
}

namespace {

const std::unordered_set<std::string>& stopwords() {
    // Mirrors data/stopwords.txt.
    static const std::unordered_set<std::string> words = {
        "a",     "an",    "the",   "is",    "are",   "was",  "were", "be",   "been", "am",
        "to",    "of",    "in",    "on",    "at",    "for",  "with", "by",   "from", "up",
        "my",    "your",  "our",   "his",   "her",   "its",  "their", "i",   "you",  "we",
        "me",    "us",    "it",    "he",    "she",   "they", "them", "this", "that", "these",
        "those", "what",  "which", "who",   "how",   "when", "where", "why", "can",  "could",
        "would", "should", "will", "shall", "may",   "might", "must", "do",  "does", "did",
        "have",  "has",   "had",   "please", "about", "and",  "or",  "but",  "not",  "no",
        "so",    "if",    "then",  "there", "here",  "just", "now",  "want", "need", "like",
        "get",   "tell",  "know",  "right",
    };
    return words;
}

std::vector<std::string> content_tokens(const std::string& text) {
    std::istringstream in(text);
    std::string tok;
    std::vector<std::string> out;
    while (in >> tok) {
        std::string lower;
        for (char c : tok)
            lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        // strip leading/trailing punctuation
        std::size_t b = 0, e = lower.size();
        while (b < e && !std::isalnum(static_cast<unsigned char>(lower[b])) && lower[b] != '_') ++b;
        while (e > b && !std::isalnum(static_cast<unsigned char>(lower[e - 1])) && lower[e - 1] != '_')
            --e;
        lower = lower.substr(b, e - b);
        if (lower.empty() || stopwords().count(lower)) continue;
        out.push_back(std::move(lower));
    }
    return out;
}

struct Group {
    std::vector<std::size_t> members;  // indices into the input, ascending
    Vec sum;
};

}  // namespace

std::string name_cluster(const std::vector<std::string>& texts, const ClusteringConfig& config) {
    if (texts.empty()) throw ValidationError("name_cluster: empty member texts");
    // score = occurrence count * n-gram length (in tokens); ties break
    // lexicographically. Duplicate texts count multiply.
    std::map<std::string, long> counts;
    std::map<std::string, int> lengths;
    for (const auto& text : texts) {
        const auto toks = content_tokens(text);
        for (int n = 1; n <= config.name_ngram_max; ++n) {
            for (std::size_t i = 0; i + n <= toks.size(); ++i) {
                std::string gram = toks[i];
                for (int k = 1; k < n; ++k) gram += " " + toks[i + k];
                ++counts[gram];
                lengths[gram] = n;
            }
        }
    }
    std::string best;
    long best_score = 0;
    for (const auto& [gram, count] : counts) {
        const long score = count * lengths[gram];
        if (score > best_score) {
            best = gram;
            best_score = score;
        }
    }
    return best;  // empty when every token was a stopword
}

InterpretationReport cluster_outliers(const std::vector<EmbeddedRequest>& outliers,
                                      const ClusteringConfig& config) {
    config.validate();
    if (outliers.empty()) throw ValidationError("cluster_outliers: empty input");

    const std::size_t n = outliers.size();
    std::vector<Group> groups(n);
    for (std::size_t i = 0; i < n; ++i) {
        groups[i].members = {i};
        groups[i].sum = outliers[i].embedding();
    }

    // Greedy average-linkage merging. For unit vectors the mean pairwise
    // cosine between groups equals dot(sumA, sumB) / (|A| |B|).
    std::vector<bool> active(n, true);
    auto linkage = [&](std::size_t a, std::size_t b) {
        return groups[a].sum.dot(groups[b].sum) /
               (static_cast<double>(groups[a].members.size()) * groups[b].members.size());
    };
    std::size_t n_active = n;
    while (n_active > 1) {
        double best_link = -2.0;
        std::size_t best_a = 0, best_b = 0;
        for (std::size_t a = 0; a < n; ++a) {
            if (!active[a]) continue;
            for (std::size_t b = a + 1; b < n; ++b) {
                if (!active[b]) continue;
                const double link = linkage(a, b);
                if (link > best_link) {
                    best_link = link;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        if (best_link < config.link_threshold) break;
        // merge b into a, keeping member order ascending
        std::vector<std::size_t> merged;
        std::merge(groups[best_a].members.begin(), groups[best_a].members.end(),
                   groups[best_b].members.begin(), groups[best_b].members.end(),
                   std::back_inserter(merged));
        groups[best_a].members = std::move(merged);
        groups[best_a].sum += groups[best_b].sum;
        active[best_b] = false;
        --n_active;
    }

    InterpretationReport report;
    std::vector<std::size_t> kept;
    for (std::size_t g = 0; g < n; ++g) {
        if (!active[g]) continue;
        if (static_cast<int>(groups[g].members.size()) >= config.min_cluster_size)
            kept.push_back(g);
        else
            report.unclustered_count += static_cast<int>(groups[g].members.size());
    }

    for (std::size_t g : kept) {
        Cluster cluster;
        std::vector<std::string> texts;
        Vec centroid = Vec::Zero(outliers.front().embedding().size());
        std::map<std::string, int> intent_counts;
        for (std::size_t idx : groups[g].members) {
            cluster.members.push_back(outliers[idx].id);
            texts.push_back(outliers[idx].text);
            centroid += outliers[idx].embedding();
            if (outliers[idx].intent) ++intent_counts[*outliers[idx].intent];
        }
        normalize(centroid);
        cluster.centroid = centroid;
        cluster.cohesion_floor = 2.0;
        for (std::size_t idx : groups[g].members)
            cluster.cohesion_floor =
                std::min(cluster.cohesion_floor, cosine(outliers[idx].embedding(), centroid));
        cluster.name = name_cluster(texts, config);
        if (!intent_counts.empty()) {
            auto best = intent_counts.begin();
            for (auto it = intent_counts.begin(); it != intent_counts.end(); ++it)
                if (it->second > best->second) best = it;  // lexicographic smallest on ties
            cluster.majority_intent = best->first;
            cluster.majority_fraction =
                static_cast<double>(best->second) / static_cast<double>(groups[g].members.size());
        }
        report.clusters.push_back(std::move(cluster));
    }

    std::sort(report.clusters.begin(), report.clusters.end(), [](const Cluster& a, const Cluster& b) {
        if (a.members.size() != b.members.size()) return a.members.size() > b.members.size();
        return a.name < b.name;
    });

    if (config.max_clusters && static_cast<int>(report.clusters.size()) > *config.max_clusters) {
        for (std::size_t i = static_cast<std::size_t>(*config.max_clusters);
             i < report.clusters.size(); ++i)
            report.unclustered_count += static_cast<int>(report.clusters[i].members.size());
        report.clusters.resize(static_cast<std::size_t>(*config.max_clusters));
    }
    return report;
}

double coverage_recall(const InterpretationReport& report,
                       const std::set<std::string>& drift_intents) {
    if (drift_intents.empty()) throw ValidationError("coverage_recall: empty drift intent set");
    int covered = 0;
    for (const auto& intent : drift_intents) {
        for (const auto& cluster : report.clusters) {
            if (cluster.majority_intent && *cluster.majority_intent == intent) {
                ++covered;
                break;
            }
        }
    }
    return static_cast<double>(covered) / static_cast<double>(drift_intents.size());
}

std::string interpretation_to_json(const InterpretationReport& report) {
    json clusters = json::array();
    for (const auto& c : report.clusters) {
        clusters.push_back(
            {{"name", c.name},
             {"size", c.members.size()},
             {"majority_intent", c.majority_intent ? json(*c.majority_intent) : json(nullptr)},
             {"member_ids", c.members}});
    }
    json j{{"clusters", std::move(clusters)},
           {"unclustered", report.unclustered_count},
           {"recall", report.recall ? json(*report.recall) : json(nullptr)}};
    return j.dump();
}

}  // namespace driftscan
