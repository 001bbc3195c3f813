// Batch splitting, per-batch scoring against the anchor model, the outlier
// pool and the similarity series fed to change-point detection.
#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "driftscan/autoencoder.hpp"
#include "driftscan/embedding.hpp"

namespace driftscan {

struct DetectorConfig {
    int batch_size = 5000;  // desk-scale experiments use 200
    double gamma = 0.775;   // outlier threshold on reconstruction similarity

    void validate() const;
};

struct Batch {
    int t = 0;  // 1-based time step
    std::vector<EmbeddedRequest> requests;
};

struct OutlierEntry {
    int t = 0;
    EmbeddedRequest request;
    double similarity = 0.0;
};

struct OutlierPool {
    std::vector<OutlierEntry> entries;
};

using SimilaritySeries = std::vector<double>;

struct BatchScore {
    double s = 0.0;                        // batch aggregate (mean)
    std::vector<double> similarities;      // per-request, batch order
    std::vector<std::size_t> outlier_indices;
};

// Splits into floor(n/B) full batches; the remainder is dropped and its
// size reported through dropped (if non-null).
std::vector<Batch> batchify(const Corpus& stream, int batch_size, std::size_t* dropped = nullptr);

BatchScore score_batch(const AnchorModel& model, const Batch& batch, const DetectorConfig& config);

std::vector<EmbeddedRequest> outliers_in_window(const OutlierPool& pool, int t_from, int t_to);

// Pluggable per-batch scorer so baselines reuse the same streaming loop.
class BatchScorer {
  public:
    virtual ~BatchScorer() = default;
    virtual BatchScore score(const Batch& batch) const = 0;
};

class AeScorer : public BatchScorer {
  public:
    AeScorer(const AnchorModel& model, const DetectorConfig& config)
        : model_(model), config_(config) {}
    BatchScore score(const Batch& batch) const override;

  private:
    const AnchorModel& model_;
    DetectorConfig config_;
};

// Processes batches in time order, committing scores to the series and
// outliers to the pool.
class StreamProcessor {
  public:
    explicit StreamProcessor(const BatchScorer& scorer) : scorer_(&scorer) {}

    const BatchScore& process(const Batch& batch);

    const SimilaritySeries& series() const { return series_; }
    const OutlierPool& pool() const { return pool_; }
    const std::vector<BatchScore>& scores() const { return scores_; }

  private:
    const BatchScorer* scorer_;
    SimilaritySeries series_;
    OutlierPool pool_;
    std::vector<BatchScore> scores_;
    int last_t_ = 0;
};

// One line per batch: {"t": int, "s": float, "n_outliers": int, "outlier_ids": [str]}.
void write_batch_report(const std::vector<Batch>& batches,
                        const std::vector<BatchScore>& scores,
                        const std::string& path);

}  // namespace driftscan
