#include "driftscan/stream.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "driftscan/errors.hpp"

namespace driftscan {

using nlohmann::json;

void DetectorConfig::validate() const {
    if (batch_size < 1) throw ValidationError("detector: batch_size must be >= 1");
    if (gamma < 0.0 || gamma > 1.0) throw ValidationError("detector: gamma must be in [0, 1]");
}

std::vector<Batch> batchify(const Corpus& stream, int batch_size, std::size_t* dropped) {
    if (batch_size < 1) throw ValidationError("batchify: batch size must be >= 1");
    const std::size_t b = static_cast<std::size_t>(batch_size);
    const std::size_t n_full = stream.size() / b;
    std::vector<Batch> batches;
    batches.reserve(n_full);
    for (std::size_t i = 0; i < n_full; ++i) {
        Batch batch;
        batch.t = static_cast<int>(i) + 1;
        batch.requests.assign(stream.begin() + static_cast<std::ptrdiff_t>(i * b),
                              stream.begin() + static_cast<std::ptrdiff_t>((i + 1) * b));
        batches.push_back(std::move(batch));
    }
    if (dropped) *dropped = stream.size() - n_full * b;
    return batches;
}

BatchScore score_batch(const AnchorModel& model, const Batch& batch, const DetectorConfig& config) {
    config.validate();
    BatchScore score;
    score.similarities.reserve(batch.requests.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < batch.requests.size(); ++i) {
        const double sim = reconstruction_similarity(model, batch.requests[i].embedding());
        score.similarities.push_back(sim);
        sum += sim;
        if (sim < config.gamma) score.outlier_indices.push_back(i);  // strict <
    }
    if (batch.requests.empty()) throw ValidationError("score_batch: empty batch");
    score.s = sum / static_cast<double>(batch.requests.size());
    return score;
}

std::vector<EmbeddedRequest> outliers_in_window(const OutlierPool& pool, int t_from, int t_to) {
    if (t_from > t_to) throw ValidationError("outliers_in_window: t_from > t_to");
    std::vector<EmbeddedRequest> out;
    for (const auto& entry : pool.entries)
        if (entry.t >= t_from && entry.t <= t_to) out.push_back(entry.request);
    return out;
}

BatchScore AeScorer::score(const Batch& batch) const {
    return score_batch(model_, batch, config_);
}

const BatchScore& StreamProcessor::process(const Batch& batch) {
    if (batch.t != last_t_ + 1)
        throw ValidationError("stream: batch " + std::to_string(batch.t) +
                              " arrived out of order (expected " + std::to_string(last_t_ + 1) +
                              ")");
    BatchScore score = scorer_->score(batch);
    for (std::size_t idx : score.outlier_indices)
        pool_.entries.push_back({batch.t, batch.requests[idx], score.similarities[idx]});
    series_.push_back(score.s);
    scores_.push_back(std::move(score));
    last_t_ = batch.t;
    return scores_.back();
}

void write_batch_report(const std::vector<Batch>& batches, const std::vector<BatchScore>& scores,
                        const std::string& path) {
    if (batches.size() != scores.size())
        throw ValidationError("write_batch_report: batches/scores size mismatch");
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write batch report: " + path);
    for (std::size_t i = 0; i < batches.size(); ++i) {
        json ids = json::array();
        for (std::size_t idx : scores[i].outlier_indices)
            ids.push_back(batches[i].requests[idx].id);
        json line{{"t", batches[i].t},
                  {"s", scores[i].s},
                  {"n_outliers", scores[i].outlier_indices.size()},
                  {"outlier_ids", std::move(ids)}};
        out << line.dump() << "\n";
    }
}

}  // namespace driftscan
