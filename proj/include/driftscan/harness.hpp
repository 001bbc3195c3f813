// Drift scenario simulation and evaluation: builds anchor/stream batches
// with injected drift, runs the full pipeline and computes the detection
// and interpretation metrics.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "driftscan/autoencoder.hpp"
#include "driftscan/cpm.hpp"
#include "driftscan/embedding.hpp"
#include "driftscan/interpret.hpp"
#include "driftscan/stream.hpp"

namespace driftscan {

enum class ScenarioKind { gradual, uniform, none, anomaly };
enum class ScorerKind { ae, medoid, fid, confidence };

ScenarioKind scenario_kind_from_string(const std::string& s);
std::string to_string(ScenarioKind kind);
ScorerKind scorer_kind_from_string(const std::string& s);
std::string to_string(ScorerKind kind);

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::uniform;
    int n_batches = 30;       // streamed; 2 anchor batches precede them
    int anchor_batches = 2;
    int batch_size = 200;
    int drift_start = 15;     // t_s
    double ramp = 0.01;       // gradual: per-step drift-fraction increment
    double drift_fraction = 0.1;  // uniform / anomaly
    int anomaly_span = 2;
    std::uint64_t seed = 0;

    void validate() const;
};

struct GroundTruth {
    int t_s = 0;
    std::vector<std::string> drift_intents;
    std::vector<double> drift_fractions;  // per streamed batch, realized
    std::vector<int> drift_counts;
};

struct ScenarioData {
    std::vector<Batch> anchor_batches;
    std::vector<Batch> stream_batches;
    GroundTruth ground_truth;
};

ScenarioData build_scenario(const Corpus& seed_corpus, const Corpus& drift_corpus,
                            const ScenarioSpec& spec);

struct RunResult {
    ScenarioKind kind = ScenarioKind::uniform;
    bool detected = false;
    std::optional<int> t_d;
    std::optional<int> t_p;
    std::optional<int> detection_offset;     // |t_d - t_s|
    std::optional<int> detection_deviation;  // |t_p - t_s|
    std::optional<double> drift_rate_at_detection;
    std::optional<double> recall;
    bool false_positive = false;  // kinds none/anomaly only
    bool false_negative = false;  // kinds gradual/uniform only
    SimilaritySeries series;
    std::vector<double> true_fractions;
    ChangePointReport cpm_report;
    InterpretationReport interpretation;
    std::vector<OutlierEntry> window_outliers;  // pool slice [t_p, t_d]
    GroundTruth ground_truth;
};

struct PipelineConfig {
    AutoencoderConfig autoencoder;
    DetectorConfig detector;
    CpmConfig cpm;
    ClusteringConfig clustering;
    ScorerKind scorer = ScorerKind::ae;
};

RunResult run_experiment(const Corpus& seed_corpus, const Corpus& drift_corpus,
                         const ScenarioSpec& scenario, const PipelineConfig& config);

struct EvaluationReport {
    int n_runs = 0;
    int n_detected = 0;
    double detection_rate = 0.0;
    std::optional<double> fp_rate;  // kinds none/anomaly
    std::optional<double> fn_rate;  // kinds gradual/uniform
    std::optional<double> mean_detection_offset;
    std::optional<double> mean_detection_deviation;
    std::optional<double> mean_drift_rate_at_detection;
    std::optional<double> mean_recall;
    std::vector<RunResult> runs;
};

EvaluationReport aggregate(std::vector<RunResult> runs);

// Runs n_runs experiments with per-run seeds derived from the template
// seed; if out_dir is non-empty, writes report.json, series_<run>.csv,
// outliers_<run>.jsonl and clusters_<run>.json.
EvaluationReport run_suite(const Corpus& seed_corpus, const Corpus& drift_corpus,
                           const ScenarioSpec& scenario_template, const PipelineConfig& config,
                           int n_runs, const std::string& out_dir = "");

std::string evaluation_to_json(const EvaluationReport& report);
void write_suite_artifacts(const EvaluationReport& report, const std::string& out_dir);
void write_outlier_file(const std::vector<OutlierEntry>& entries, const std::string& path);
std::vector<OutlierEntry> load_outlier_file(const std::string& path);

}  // namespace driftscan
