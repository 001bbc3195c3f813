// Batch-level dataset similarity baselines (Medoid, FID) and the
// model-dependent classifier-confidence signal, pluggable into the same
// change-point detector.
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "driftscan/embedding.hpp"
#include "driftscan/stream.hpp"

namespace driftscan {

struct GaussianFit {
    Vec mean;
    Eigen::MatrixXd cov;  // symmetric PSD, shrinkage 1e-6*I applied at fit
};

GaussianFit fit_gaussian(const std::vector<Vec>& points);

double medoid_similarity(const std::vector<Vec>& anchor_set, const std::vector<Vec>& batch);

// Squared 2-Wasserstein distance between Gaussians with the given exact
// moments: |mu1-mu2|^2 + tr(S1 + S2 - 2*sqrt(sym(S1*S2))). No shrinkage.
double fid_from_moments(const GaussianFit& a, const GaussianFit& b);

double fid_distance(const std::vector<Vec>& anchor_set, const std::vector<Vec>& batch);

// Nearest-centroid softmax classifier over cosine scores.
class CentroidClassifier {
  public:
    CentroidClassifier(const Corpus& training, double temperature = 0.1);

    // Max softmax probability over intents.
    double confidence(const Vec& e) const;
    int n_intents() const { return static_cast<int>(centroids_.size()); }

  private:
    std::vector<Vec> centroids_;
    std::vector<std::string> intents_;
    double temperature_;
};

std::vector<double> confidence_series(const CentroidClassifier& classifier,
                                      const std::vector<Batch>& batches);

// Batch-level scorers feeding the same streaming loop. Distances are
// negated so drift always pushes the series downward.
class MedoidScorer : public BatchScorer {
  public:
    explicit MedoidScorer(std::vector<Vec> anchor_set) : anchor_(std::move(anchor_set)) {}
    BatchScore score(const Batch& batch) const override;

  private:
    std::vector<Vec> anchor_;
};

class FidScorer : public BatchScorer {
  public:
    explicit FidScorer(const std::vector<Vec>& anchor_set) : anchor_fit_(fit_gaussian(anchor_set)) {}
    BatchScore score(const Batch& batch) const override;

  private:
    GaussianFit anchor_fit_;
};

class ConfidenceScorer : public BatchScorer {
  public:
    explicit ConfidenceScorer(const CentroidClassifier& classifier) : classifier_(&classifier) {}
    BatchScore score(const Batch& batch) const override;

  private:
    const CentroidClassifier* classifier_;
};

}  // namespace driftscan
