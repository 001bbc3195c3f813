// Sequential nonparametric change-point detection over the similarity
// series: repeated max-split two-sample testing with Monte-Carlo
// permutation p-values, holding the run-level false-alarm rate at alpha.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace driftscan {

enum class CpmStatistic { mann_whitney, student_t };

struct CpmConfig {
    double alpha = 0.05;   // run-level false-alarm budget over the horizon
    CpmStatistic statistic = CpmStatistic::mann_whitney;
    int min_history = 8;
    int horizon = 30;      // nominal run length the alpha budget is spread over
    int mc_replicates = 2000;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ChangePointReport {
    bool detected = false;
    std::optional<int> t_d;  // detection index (1-based)
    std::optional<int> t_p;  // estimated change start, < t_d
    std::vector<double> p_value_trail;  // minimal p per tested step
    std::string statistic_name;
};

struct SplitResult {
    double statistic = 0.0;  // max standardized two-sample statistic
    int split = 0;           // argmax k (smallest on ties), 1-based prefix length
};

// Max over k in [2, t-2] of the standardized two-sample statistic between
// the first k and remaining t-k values.
SplitResult max_split_statistic(const std::vector<double>& series, CpmStatistic statistic);

class CpmDetector {
  public:
    explicit CpmDetector(const CpmConfig& config);

    // Appends one observation; tests once t >= min_history. Throws
    // ValidationError if called after detection.
    const ChangePointReport& step(double s_t);

    const ChangePointReport& report() const { return report_; }
    bool detected() const { return report_.detected; }
    int size() const { return static_cast<int>(series_.size()); }

  private:
    CpmConfig config_;
    std::vector<double> series_;
    ChangePointReport report_;
    int tests_performed_ = 0;
};

ChangePointReport run_series(const std::vector<double>& series, const CpmConfig& config);

std::string report_to_json(const ChangePointReport& report);

}  // namespace driftscan
