#include "driftscan/baselines.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>

#include "driftscan/errors.hpp"

namespace driftscan {

using Eigen::MatrixXd;

GaussianFit fit_gaussian(const std::vector<Vec>& points) {
    if (points.empty()) throw ValidationError("fit_gaussian: empty point set");
    const Eigen::Index d = points.front().size();
    Vec mean = Vec::Zero(d);
    for (const auto& p : points) {
        if (p.size() != d) throw ValidationError("fit_gaussian: inconsistent dimensions");
        mean += p;
    }
    mean /= static_cast<double>(points.size());
    MatrixXd cov = MatrixXd::Zero(d, d);
    for (const auto& p : points) {
        const Vec c = p - mean;
        cov.noalias() += c * c.transpose();
    }
    cov /= static_cast<double>(points.size());
    cov += 1e-6 * MatrixXd::Identity(d, d);  // shrinkage for small batches
    return {std::move(mean), std::move(cov)};
}

double medoid_similarity(const std::vector<Vec>& anchor_set, const std::vector<Vec>& batch) {
    if (anchor_set.empty() || batch.empty())
        throw ValidationError("medoid_similarity: empty set");
    if (anchor_set.front().size() != batch.front().size())
        throw ValidationError("medoid_similarity: dimension mismatch");
    Vec mean_a = Vec::Zero(anchor_set.front().size());
    for (const auto& v : anchor_set) mean_a += v;
    mean_a /= static_cast<double>(anchor_set.size());
    Vec mean_b = Vec::Zero(batch.front().size());
    for (const auto& v : batch) mean_b += v;
    mean_b /= static_cast<double>(batch.size());
    return cosine(mean_a, mean_b);
}

double fid_from_moments(const GaussianFit& a, const GaussianFit& b) {
    if (a.mean.size() != b.mean.size())
        throw ValidationError("fid: dimension mismatch");
    const double mean_term = (a.mean - b.mean).squaredNorm();

    // tr(sqrt(sym(S1*S2))) via symmetric eigendecomposition; negative
    // eigenvalues from numerical noise are clamped to zero.
    const MatrixXd prod = a.cov * b.cov;
    const MatrixXd sym = 0.5 * (prod + prod.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success)
        throw NumericError("fid: eigendecomposition did not converge");
    double sqrt_trace = 0.0;
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i)
        sqrt_trace += std::sqrt(std::max(0.0, solver.eigenvalues()[i]));

    return mean_term + a.cov.trace() + b.cov.trace() - 2.0 * sqrt_trace;
}

double fid_distance(const std::vector<Vec>& anchor_set, const std::vector<Vec>& batch) {
    return fid_from_moments(fit_gaussian(anchor_set), fit_gaussian(batch));
}

CentroidClassifier::CentroidClassifier(const Corpus& training, double temperature)
    : temperature_(temperature) {
    if (temperature <= 0.0) throw ValidationError("classifier: temperature must be positive");
    std::map<std::string, std::pair<Vec, int>> sums;
    for (const auto& r : training) {
        if (!r.intent) continue;
        auto it = sums.find(*r.intent);
        if (it == sums.end())
            sums.emplace(*r.intent, std::make_pair(r.embedding(), 1));
        else {
            it->second.first += r.embedding();
            ++it->second.second;
        }
    }
    if (sums.empty()) throw ValidationError("classifier: no labeled training requests");
    for (auto& [intent, acc] : sums) {
        Vec c = acc.first / acc.second;
        normalize(c);
        centroids_.push_back(std::move(c));
        intents_.push_back(intent);
    }
}

double CentroidClassifier::confidence(const Vec& e) const {
    double max_score = -1e300;
    std::vector<double> scores;
    scores.reserve(centroids_.size());
    for (const auto& c : centroids_) {
        const double s = cosine(e, c) / temperature_;
        scores.push_back(s);
        max_score = std::max(max_score, s);
    }
    double denom = 0.0;
    for (double s : scores) denom += std::exp(s - max_score);
    return 1.0 / denom;  // exp(max - max) / sum
}

std::vector<double> confidence_series(const CentroidClassifier& classifier,
                                      const std::vector<Batch>& batches) {
    std::vector<double> series;
    series.reserve(batches.size());
    for (const auto& batch : batches) {
        if (batch.requests.empty()) throw ValidationError("confidence_series: empty batch");
        double sum = 0.0;
        for (const auto& r : batch.requests) sum += classifier.confidence(r.embedding());
        series.push_back(sum / static_cast<double>(batch.requests.size()));
    }
    return series;
}

namespace {

std::vector<Vec> batch_vectors(const Batch& batch) {
    std::vector<Vec> out;
    out.reserve(batch.requests.size());
    for (const auto& r : batch.requests) out.push_back(r.embedding());
    return out;
}

}  // namespace

BatchScore MedoidScorer::score(const Batch& batch) const {
    BatchScore s;
    s.s = medoid_similarity(anchor_, batch_vectors(batch));
    return s;
}

BatchScore FidScorer::score(const Batch& batch) const {
    BatchScore s;
    s.s = -fid_from_moments(anchor_fit_, fit_gaussian(batch_vectors(batch)));
    return s;
}

BatchScore ConfidenceScorer::score(const Batch& batch) const {
    if (batch.requests.empty()) throw ValidationError("confidence scorer: empty batch");
    BatchScore s;
    double sum = 0.0;
    for (const auto& r : batch.requests) {
        const double c = classifier_->confidence(r.embedding());
        s.similarities.push_back(c);
        sum += c;
    }
    s.s = sum / static_cast<double>(batch.requests.size());
    return s;
}

}  // namespace driftscan
