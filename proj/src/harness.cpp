#include "driftscan/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>

#include <nlohmann/json.hpp>

#include "driftscan/baselines.hpp"
#include "driftscan/errors.hpp"
#include "driftscan/rng.hpp"

namespace driftscan {

using nlohmann::json;
namespace fs = std::filesystem;

ScenarioKind scenario_kind_from_string(const std::string& s) {
    if (s == "gradual") return ScenarioKind::gradual;
    if (s == "uniform") return ScenarioKind::uniform;
    if (s == "none") return ScenarioKind::none;
    if (s == "anomaly") return ScenarioKind::anomaly;
    throw ValidationError("unknown scenario kind: " + s);
}

std::string to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::gradual: return "gradual";
        case ScenarioKind::uniform: return "uniform";
        case ScenarioKind::none: return "none";
        case ScenarioKind::anomaly: return "anomaly";
    }
    return "?";
}

ScorerKind scorer_kind_from_string(const std::string& s) {
    if (s == "ae") return ScorerKind::ae;
    if (s == "medoid") return ScorerKind::medoid;
    if (s == "fid") return ScorerKind::fid;
    if (s == "confidence") return ScorerKind::confidence;
    throw ValidationError("unknown scorer: " + s);
}

std::string to_string(ScorerKind kind) {
    switch (kind) {
        case ScorerKind::ae: return "ae";
        case ScorerKind::medoid: return "medoid";
        case ScorerKind::fid: return "fid";
        case ScorerKind::confidence: return "confidence";
    }
    return "?";
}

void ScenarioSpec::validate() const {
    if (n_batches < 1) throw ValidationError("scenario: n_batches must be >= 1");
    if (anchor_batches < 1) throw ValidationError("scenario: anchor_batches must be >= 1");
    if (batch_size < 1) throw ValidationError("scenario: batch_size must be >= 1");
    if (drift_start < 1 || drift_start > n_batches)
        throw ValidationError("scenario: drift_start must be within [1, n_batches]");
    if (drift_fraction < 0.0 || drift_fraction > 1.0)
        throw ValidationError("scenario: drift_fraction must be in [0, 1]");
    if (ramp < 0.0 || ramp > 1.0) throw ValidationError("scenario: ramp must be in [0, 1]");
    if (anomaly_span < 1) throw ValidationError("scenario: anomaly_span must be >= 1");
}

namespace {

double nominal_fraction(const ScenarioSpec& spec, int t) {
    if (spec.kind == ScenarioKind::none || t < spec.drift_start) return 0.0;
    switch (spec.kind) {
        case ScenarioKind::gradual:
            return std::min(1.0, spec.ramp * (t - spec.drift_start + 1));
        case ScenarioKind::uniform:
            return spec.drift_fraction;
        case ScenarioKind::anomaly:
            return (t < spec.drift_start + spec.anomaly_span) ? spec.drift_fraction : 0.0;
        default:
            return 0.0;
    }
}

EmbeddedRequest sample_request(const Corpus& corpus, Rng& rng) {
    return corpus[rng.uniform_below(corpus.size())];
}

}  // namespace

ScenarioData build_scenario(const Corpus& seed_corpus, const Corpus& drift_corpus,
                            const ScenarioSpec& spec) {
    spec.validate();
    if (seed_corpus.empty()) throw ValidationError("build_scenario: empty seed corpus");
    if (spec.kind != ScenarioKind::none && drift_corpus.empty())
        throw ValidationError("build_scenario: drifted scenario needs a drift corpus");

    Rng rng(spec.seed);
    ScenarioData data;
    data.ground_truth.t_s = spec.drift_start;
    std::set<std::string> drift_intents;
    for (const auto& r : drift_corpus)
        if (r.intent) drift_intents.insert(*r.intent);
    data.ground_truth.drift_intents.assign(drift_intents.begin(), drift_intents.end());

    for (int i = 0; i < spec.anchor_batches; ++i) {
        Batch batch;
        batch.t = i + 1;
        for (int k = 0; k < spec.batch_size; ++k)
            batch.requests.push_back(sample_request(seed_corpus, rng));
        data.anchor_batches.push_back(std::move(batch));
    }

    for (int t = 1; t <= spec.n_batches; ++t) {
        const double fraction = nominal_fraction(spec, t);
        const int drift_count = static_cast<int>(std::floor(spec.batch_size * fraction + 0.5));
        Batch batch;
        batch.t = t;
        for (int k = 0; k < drift_count; ++k)
            batch.requests.push_back(sample_request(drift_corpus, rng));
        for (int k = drift_count; k < spec.batch_size; ++k)
            batch.requests.push_back(sample_request(seed_corpus, rng));
        rng.shuffle(batch.requests);  // uniform within-batch placement
        data.ground_truth.drift_counts.push_back(drift_count);
        data.ground_truth.drift_fractions.push_back(static_cast<double>(drift_count) /
                                                    spec.batch_size);
        data.stream_batches.push_back(std::move(batch));
    }
    return data;
}

RunResult run_experiment(const Corpus& seed_corpus, const Corpus& drift_corpus,
                         const ScenarioSpec& scenario, const PipelineConfig& config) {
    ScenarioData data = build_scenario(seed_corpus, drift_corpus, scenario);

    std::vector<Vec> anchor_vectors;
    Corpus anchor_requests;
    for (const auto& batch : data.anchor_batches)
        for (const auto& r : batch.requests) {
            anchor_vectors.push_back(r.embedding());
            anchor_requests.push_back(r);
        }

    AnchorModel model;
    std::unique_ptr<CentroidClassifier> classifier;
    std::unique_ptr<BatchScorer> scorer;
    switch (config.scorer) {
        case ScorerKind::ae: {
            AutoencoderConfig ae = config.autoencoder;
            ae.input_dim = static_cast<int>(anchor_vectors.front().size());
            ae.seed = derive_seed(scenario.seed, 0xAEAE);
            model = train_anchor(anchor_vectors, ae);
            scorer = std::make_unique<AeScorer>(model, config.detector);
            break;
        }
        case ScorerKind::medoid:
            scorer = std::make_unique<MedoidScorer>(anchor_vectors);
            break;
        case ScorerKind::fid:
            scorer = std::make_unique<FidScorer>(anchor_vectors);
            break;
        case ScorerKind::confidence:
            classifier = std::make_unique<CentroidClassifier>(anchor_requests);
            scorer = std::make_unique<ConfidenceScorer>(*classifier);
            break;
    }

    CpmConfig cpm = config.cpm;
    cpm.seed = derive_seed(scenario.seed, 0xC9);
    CpmDetector detector(cpm);
    StreamProcessor processor(*scorer);

    RunResult result;
    result.kind = scenario.kind;
    result.ground_truth = data.ground_truth;
    for (const auto& batch : data.stream_batches) {
        processor.process(batch);
        if (!detector.detected()) detector.step(processor.series().back());
    }
    result.series = processor.series();
    result.true_fractions = data.ground_truth.drift_fractions;
    result.cpm_report = detector.report();
    result.detected = result.cpm_report.detected;

    const int t_s = data.ground_truth.t_s;
    const bool drifted =
        scenario.kind == ScenarioKind::gradual || scenario.kind == ScenarioKind::uniform;
    if (result.detected) {
        result.t_d = result.cpm_report.t_d;
        result.t_p = result.cpm_report.t_p;
        result.detection_offset = std::abs(*result.t_d - t_s);
        result.detection_deviation = std::abs(*result.t_p - t_s);
        result.drift_rate_at_detection =
            data.ground_truth.drift_fractions[static_cast<std::size_t>(*result.t_d - 1)];
        result.false_positive = !drifted;

        result.window_outliers.clear();
        for (const auto& entry : processor.pool().entries)
            if (entry.t >= *result.t_p && entry.t <= *result.t_d)
                result.window_outliers.push_back(entry);
        if (!result.window_outliers.empty()) {
            std::vector<EmbeddedRequest> window =
                outliers_in_window(processor.pool(), *result.t_p, *result.t_d);
            result.interpretation = cluster_outliers(window, config.clustering);
            if (!data.ground_truth.drift_intents.empty()) {
                std::set<std::string> intents(data.ground_truth.drift_intents.begin(),
                                              data.ground_truth.drift_intents.end());
                result.recall = coverage_recall(result.interpretation, intents);
                result.interpretation.recall = result.recall;
            }
        } else if (!data.ground_truth.drift_intents.empty()) {
            result.recall = 0.0;
        }
    } else {
        result.false_negative = drifted;
    }
    return result;
}

EvaluationReport aggregate(std::vector<RunResult> runs) {
    EvaluationReport report;
    report.n_runs = static_cast<int>(runs.size());
    int n_fp_eligible = 0, n_fp = 0, n_fn_eligible = 0, n_fn = 0;
    double sum_offset = 0.0, sum_dev = 0.0, sum_rate = 0.0, sum_recall = 0.0;
    int n_off = 0, n_recall = 0;
    for (const auto& r : runs) {
        if (r.detected) ++report.n_detected;
        const bool drifted = r.kind == ScenarioKind::gradual || r.kind == ScenarioKind::uniform;
        if (drifted) {
            ++n_fn_eligible;
            if (r.false_negative) ++n_fn;
        } else {
            ++n_fp_eligible;
            if (r.false_positive) ++n_fp;
        }
        if (r.detection_offset) {
            sum_offset += *r.detection_offset;
            sum_dev += *r.detection_deviation;
            sum_rate += r.drift_rate_at_detection.value_or(0.0);
            ++n_off;
        }
        if (r.recall) {
            sum_recall += *r.recall;
            ++n_recall;
        }
    }
    if (report.n_runs > 0)
        report.detection_rate = static_cast<double>(report.n_detected) / report.n_runs;
    if (n_fp_eligible > 0) report.fp_rate = static_cast<double>(n_fp) / n_fp_eligible;
    if (n_fn_eligible > 0) report.fn_rate = static_cast<double>(n_fn) / n_fn_eligible;
    if (n_off > 0) {
        report.mean_detection_offset = sum_offset / n_off;
        report.mean_detection_deviation = sum_dev / n_off;
        report.mean_drift_rate_at_detection = sum_rate / n_off;
    }
    if (n_recall > 0) report.mean_recall = sum_recall / n_recall;
    report.runs = std::move(runs);
    return report;
}

EvaluationReport run_suite(const Corpus& seed_corpus, const Corpus& drift_corpus,
                           const ScenarioSpec& scenario_template, const PipelineConfig& config,
                           int n_runs, const std::string& out_dir) {
    if (n_runs < 1) throw ValidationError("run_suite: n_runs must be >= 1");
    std::vector<RunResult> runs;
    runs.reserve(static_cast<std::size_t>(n_runs));
    for (int i = 0; i < n_runs; ++i) {
        ScenarioSpec spec = scenario_template;
        spec.seed = derive_seed(scenario_template.seed, static_cast<std::uint64_t>(i) + 1);
        runs.push_back(run_experiment(seed_corpus, drift_corpus, spec, config));
    }
    EvaluationReport report = aggregate(std::move(runs));
    if (!out_dir.empty()) write_suite_artifacts(report, out_dir);
    return report;
}

namespace {

json run_to_json(const RunResult& r) {
    auto opt_int = [](const std::optional<int>& v) { return v ? json(*v) : json(nullptr); };
    auto opt_dbl = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    return json{{"kind", to_string(r.kind)},
                {"detected", r.detected},
                {"t_d", opt_int(r.t_d)},
                {"t_p", opt_int(r.t_p)},
                {"t_s", r.ground_truth.t_s},
                {"detection_offset", opt_int(r.detection_offset)},
                {"detection_deviation", opt_int(r.detection_deviation)},
                {"drift_rate_at_detection", opt_dbl(r.drift_rate_at_detection)},
                {"recall", opt_dbl(r.recall)},
                {"false_positive", r.false_positive},
                {"false_negative", r.false_negative},
                {"drift_intents", r.ground_truth.drift_intents}};
}

}  // namespace

std::string evaluation_to_json(const EvaluationReport& report) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json runs = json::array();
    for (const auto& r : report.runs) runs.push_back(run_to_json(r));
    json j{{"n_runs", report.n_runs},
           {"n_detected", report.n_detected},
           {"detection_rate", report.detection_rate},
           {"fp_rate", opt(report.fp_rate)},
           {"fn_rate", opt(report.fn_rate)},
           {"mean_detection_offset", opt(report.mean_detection_offset)},
           {"mean_detection_deviation", opt(report.mean_detection_deviation)},
           {"mean_drift_rate_at_detection", opt(report.mean_drift_rate_at_detection)},
           {"mean_recall", opt(report.mean_recall)},
           {"runs", std::move(runs)}};
    return j.dump(2);
}

void write_outlier_file(const std::vector<OutlierEntry>& entries, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write outlier file: " + path);
    for (const auto& e : entries) {
        json emb = json::array();
        for (Eigen::Index k = 0; k < e.request.embedding().size(); ++k)
            emb.push_back(e.request.embedding()[k]);
        json line{{"t", e.t},
                  {"id", e.request.id},
                  {"text", e.request.text},
                  {"intent", e.request.intent ? json(*e.request.intent) : json(nullptr)},
                  {"similarity", e.similarity},
                  {"embedding", std::move(emb)}};
        out << line.dump() << "\n";
    }
}

std::vector<OutlierEntry> load_outlier_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open outlier file: " + path);
    std::vector<OutlierEntry> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ValidationError("outlier file line " + std::to_string(lineno) + ": " + e.what());
        }
        OutlierEntry e;
        e.t = j.at("t").get<int>();
        e.similarity = j.at("similarity").get<double>();
        e.request.id = j.at("id").get<std::string>();
        e.request.text = j.at("text").get<std::string>();
        if (j.contains("intent") && !j.at("intent").is_null())
            e.request.intent = j.at("intent").get<std::string>();
        e.request.token_length = count_tokens(e.request.text);
        const auto& arr = j.at("embedding");
        Vec v(arr.size());
        for (std::size_t k = 0; k < arr.size(); ++k)
            v[static_cast<Eigen::Index>(k)] = arr[k].get<double>();
        e.request.embedding_ptr = std::make_shared<const Vec>(std::move(v));
        entries.push_back(std::move(e));
    }
    return entries;
}

void write_suite_artifacts(const EvaluationReport& report, const std::string& out_dir) {
    fs::create_directories(out_dir);
    {
        std::ofstream out(fs::path(out_dir) / "report.json");
        if (!out) throw ValidationError("cannot write report.json in " + out_dir);
        out << evaluation_to_json(report) << "\n";
    }
    for (std::size_t i = 0; i < report.runs.size(); ++i) {
        const RunResult& r = report.runs[i];
        {
            std::ofstream out(fs::path(out_dir) / ("series_" + std::to_string(i) + ".csv"));
            out << "t,s,true_drift_fraction\n";
            for (std::size_t t = 0; t < r.series.size(); ++t)
                out << (t + 1) << "," << json(r.series[t]).dump() << ","
                    << json(r.true_fractions[t]).dump() << "\n";
        }
        write_outlier_file(r.window_outliers,
                           (fs::path(out_dir) / ("outliers_" + std::to_string(i) + ".jsonl")).string());
        {
            std::ofstream out(fs::path(out_dir) / ("clusters_" + std::to_string(i) + ".json"));
            out << interpretation_to_json(r.interpretation) << "\n";
        }
    }
}

}  // namespace driftscan
