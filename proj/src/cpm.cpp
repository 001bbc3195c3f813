#include "driftscan/cpm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "driftscan/errors.hpp"
#include "driftscan/rng.hpp"

namespace driftscan {

using nlohmann::json;

void CpmConfig::validate() const {
    if (alpha <= 0.0 || alpha >= 1.0) throw ValidationError("cpm: alpha must be in (0, 1)");
    if (min_history < 4) throw ValidationError("cpm: min_history must be >= 4");
    if (horizon < min_history) throw ValidationError("cpm: horizon must be >= min_history");
    if (mc_replicates < 1) throw ValidationError("cpm: mc_replicates must be positive");
}

namespace {

// Midranks (average rank for ties), 1-based.
std::vector<double> midranks(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

// Sum over tied groups of (c^3 - c); invariant under permutation.
double tie_correction(const std::vector<double>& x) {
    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    double total = 0.0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
        const double c = static_cast<double>(j - i + 1);
        total += c * c * c - c;
        i = j + 1;
    }
    return total;
}

// Max over k in [2, t-2] of |W_k - E[W_k]| / sd(W_k) for rank-sum W_k of
// the first k midranks.
SplitResult mw_max_split(const std::vector<double>& ranks, double tie_sum) {
    const int t = static_cast<int>(ranks.size());
    SplitResult best{0.0, 2};
    double prefix = ranks[0];
    for (int k = 2; k <= t - 2; ++k) {
        prefix += ranks[k - 1];
        const double mean = static_cast<double>(k) * (t + 1) / 2.0;
        const double var = static_cast<double>(k) * (t - k) / 12.0 *
                           ((t + 1) - tie_sum / (static_cast<double>(t) * (t - 1)));
        if (var <= 0.0) continue;
        const double d = std::abs(prefix - mean) / std::sqrt(var);
        if (d > best.statistic + 1e-12) {
            best.statistic = d;
            best.split = k;
        }
    }
    return best;
}

// Pooled two-sample t statistic maximized over splits, via prefix sums.
SplitResult t_max_split(const std::vector<double>& x) {
    const int t = static_cast<int>(x.size());
    SplitResult best{0.0, 2};
    double sum1 = x[0], sumsq1 = x[0] * x[0];
    double total = 0.0, totalsq = 0.0;
    for (double v : x) {
        total += v;
        totalsq += v * v;
    }
    for (int k = 2; k <= t - 2; ++k) {
        sum1 += x[k - 1];
        sumsq1 += x[k - 1] * x[k - 1];
        const double n1 = k, n2 = t - k;
        const double sum2 = total - sum1, sumsq2 = totalsq - sumsq1;
        const double mean1 = sum1 / n1, mean2 = sum2 / n2;
        const double ss1 = sumsq1 - n1 * mean1 * mean1;
        const double ss2 = sumsq2 - n2 * mean2 * mean2;
        const double pooled = (ss1 + ss2) / (n1 + n2 - 2.0);
        const double diff = std::abs(mean1 - mean2);
        double d = 0.0;
        if (pooled > 1e-300)
            d = diff / std::sqrt(pooled * (1.0 / n1 + 1.0 / n2));
        else if (diff > 1e-12)
            d = 1e300;  // zero within-group variance with distinct means
        if (d > best.statistic + 1e-12) {
            best.statistic = d;
            best.split = k;
        }
    }
    return best;
}

const char* statistic_name(CpmStatistic s) {
    return s == CpmStatistic::mann_whitney ? "mann_whitney" : "student_t";
}

}  // namespace

SplitResult max_split_statistic(const std::vector<double>& series, CpmStatistic statistic) {
    if (series.size() < 4)
        throw ValidationError("max_split_statistic: series too short (" +
                              std::to_string(series.size()) + " < 4)");
    if (statistic == CpmStatistic::mann_whitney)
        return mw_max_split(midranks(series), tie_correction(series));
    return t_max_split(series);
}

CpmDetector::CpmDetector(const CpmConfig& config) : config_(config) {
    config_.validate();
    report_.statistic_name = statistic_name(config_.statistic);
}

const ChangePointReport& CpmDetector::step(double s_t) {
    if (report_.detected)
        throw ValidationError("cpm: detector is frozen after detection at t=" +
                              std::to_string(*report_.t_d));
    series_.push_back(s_t);
    const int t = static_cast<int>(series_.size());
    if (t < config_.min_history) return report_;

    SplitResult observed;
    std::vector<double> work;  // ranks (MW) or values (t); permuted in place
    double tie_sum = 0.0;
    if (config_.statistic == CpmStatistic::mann_whitney) {
        work = midranks(series_);
        tie_sum = tie_correction(series_);
        observed = mw_max_split(work, tie_sum);
    } else {
        work = series_;
        observed = t_max_split(work);
    }

    // Monte-Carlo permutation p-value under exchangeability. For the rank
    // statistic, permuting the series permutes its rank vector, so the
    // ranks are shuffled directly.
    Rng rng(derive_seed(config_.seed, static_cast<std::uint64_t>(t)));
    int n_ge = 0;
    for (int rep = 0; rep < config_.mc_replicates; ++rep) {
        rng.shuffle(work);
        const SplitResult r = (config_.statistic == CpmStatistic::mann_whitney)
                                  ? mw_max_split(work, tie_sum)
                                  : t_max_split(work);
        if (r.statistic >= observed.statistic) ++n_ge;
    }
    const double p = (1.0 + n_ge) / (1.0 + config_.mc_replicates);
    report_.p_value_trail.push_back(p);
    ++tests_performed_;

    // Sidak-adjusted per-step level: splits the run-level alpha budget
    // evenly across the tests a horizon-length run performs, keeping the
    // run-level false-alarm rate at or below alpha under repeated testing.
    // Runs longer than the horizon accrue extra false-alarm mass slowly.
    const int budgeted_tests = config_.horizon - config_.min_history + 1;
    const double level = 1.0 - std::pow(1.0 - config_.alpha, 1.0 / budgeted_tests);
    if (p < level) {
        report_.detected = true;
        report_.t_d = t;
        report_.t_p = observed.split;
    }
    return report_;
}

ChangePointReport run_series(const std::vector<double>& series, const CpmConfig& config) {
    if (series.empty()) throw ValidationError("run_series: empty series");
    CpmDetector detector(config);
    for (double s : series) {
        detector.step(s);
        if (detector.detected()) break;
    }
    return detector.report();
}

std::string report_to_json(const ChangePointReport& report) {
    json j{{"detected", report.detected},
           {"t_d", report.t_d ? json(*report.t_d) : json(nullptr)},
           {"t_p", report.t_p ? json(*report.t_p) : json(nullptr)},
           {"p_values", report.p_value_trail},
           {"statistic", report.statistic_name}};
    return j.dump();
}

}  // namespace driftscan
