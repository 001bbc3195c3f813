// driftscan command-line tool: dataset construction, anchor training,
// stream scoring, scenario simulation, suite evaluation, interpretation.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "driftscan/autoencoder.hpp"
#include "driftscan/baselines.hpp"
#include "driftscan/cpm.hpp"
#include "driftscan/dataset.hpp"
#include "driftscan/embedding.hpp"
#include "driftscan/errors.hpp"
#include "driftscan/harness.hpp"
#include "driftscan/interpret.hpp"
#include "driftscan/rng.hpp"
#include "driftscan/stream.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace driftscan;

namespace {

struct ToolConfig {
    PipelineConfig pipeline;
    ScenarioSpec scenario;
    SyntheticCorpusSpec synthetic;
    double holdout_fraction = 0.2;
    UpsampleSpec upsample;

    ToolConfig() {
        synthetic.n_intents = 40;
        synthetic.per_intent_count = 60;
        synthetic.dimension = 64;
        synthetic.intent_spread = 0.1;
    }
};

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) it->get_to(out);
}

Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh;
    throw ValidationError("unknown activation: " + s);
}

CpmStatistic statistic_from_string(const std::string& s) {
    if (s == "mann_whitney") return CpmStatistic::mann_whitney;
    if (s == "student_t") return CpmStatistic::student_t;
    throw ValidationError("unknown cpm statistic: " + s);
}

void apply_config_file(ToolConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config file: ") + e.what());
    }
    if (auto it = j.find("autoencoder"); it != j.end()) {
        auto& c = cfg.pipeline.autoencoder;
        get_if(*it, "input_dim", c.input_dim);
        get_if(*it, "hidden_dims", c.hidden_dims);
        get_if(*it, "learning_rate", c.learning_rate);
        get_if(*it, "epochs", c.epochs);
        get_if(*it, "batch_size", c.batch_size);
        get_if(*it, "seed", c.seed);
        if (it->contains("activation"))
            c.activation = activation_from_string(it->at("activation").get<std::string>());
    }
    if (auto it = j.find("detector"); it != j.end()) {
        get_if(*it, "batch_size", cfg.pipeline.detector.batch_size);
        get_if(*it, "gamma", cfg.pipeline.detector.gamma);
    }
    if (auto it = j.find("cpm"); it != j.end()) {
        auto& c = cfg.pipeline.cpm;
        get_if(*it, "alpha", c.alpha);
        get_if(*it, "min_history", c.min_history);
        get_if(*it, "mc_replicates", c.mc_replicates);
        get_if(*it, "seed", c.seed);
        if (it->contains("statistic"))
            c.statistic = statistic_from_string(it->at("statistic").get<std::string>());
    }
    if (auto it = j.find("clustering"); it != j.end()) {
        auto& c = cfg.pipeline.clustering;
        get_if(*it, "link_threshold", c.link_threshold);
        get_if(*it, "min_cluster_size", c.min_cluster_size);
        get_if(*it, "name_ngram_max", c.name_ngram_max);
        if (it->contains("max_clusters") && !it->at("max_clusters").is_null())
            c.max_clusters = it->at("max_clusters").get<int>();
    }
    if (j.contains("scorer"))
        cfg.pipeline.scorer = scorer_kind_from_string(j.at("scorer").get<std::string>());
    if (auto it = j.find("scenario"); it != j.end()) {
        auto& s = cfg.scenario;
        if (it->contains("kind"))
            s.kind = scenario_kind_from_string(it->at("kind").get<std::string>());
        get_if(*it, "n_batches", s.n_batches);
        get_if(*it, "anchor_batches", s.anchor_batches);
        get_if(*it, "batch_size", s.batch_size);
        get_if(*it, "drift_start", s.drift_start);
        get_if(*it, "ramp", s.ramp);
        get_if(*it, "drift_fraction", s.drift_fraction);
        get_if(*it, "anomaly_span", s.anomaly_span);
        get_if(*it, "seed", s.seed);
    }
    if (auto it = j.find("synthetic"); it != j.end()) {
        auto& s = cfg.synthetic;
        get_if(*it, "n_intents", s.n_intents);
        get_if(*it, "per_intent_count", s.per_intent_count);
        get_if(*it, "dimension", s.dimension);
        get_if(*it, "intent_spread", s.intent_spread);
        get_if(*it, "max_centroid_cosine", s.max_centroid_cosine);
        get_if(*it, "seed", s.seed);
    }
    if (auto it = j.find("upsample"); it != j.end()) {
        get_if(*it, "target_size", cfg.upsample.target_size);
        get_if(*it, "fail_on_empty_stratum", cfg.upsample.fail_on_empty_stratum);
        get_if(*it, "seed", cfg.upsample.seed);
    }
    get_if(j, "holdout_fraction", cfg.holdout_fraction);
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write file: " + path.string());
    out << content;
}

std::vector<Vec> corpus_vectors(const Corpus& corpus) {
    std::vector<Vec> out;
    out.reserve(corpus.size());
    for (const auto& r : corpus) out.push_back(r.embedding());
    return out;
}

// Seed data for simulate/evaluate: file-backed corpora when provided,
// otherwise a deterministic synthetic corpus split by held-out intents.
struct CorpusArgs {
    std::string seed_corpus, seed_embeddings;
    std::string drift_corpus, drift_embeddings;
};

std::pair<Corpus, Corpus> resolve_corpora(const CorpusArgs& args, const ToolConfig& cfg) {
    if (!args.seed_corpus.empty()) {
        Corpus seed_c = load_embeddings(args.seed_corpus, args.seed_embeddings);
        Corpus drift_c;
        if (!args.drift_corpus.empty())
            drift_c = load_embeddings(args.drift_corpus, args.drift_embeddings);
        return {std::move(seed_c), std::move(drift_c)};
    }
    Corpus corpus = generate_synthetic_corpus(cfg.synthetic);
    return holdout_split(corpus, cfg.holdout_fraction, derive_seed(cfg.synthetic.seed, 0x5EED));
}

void add_corpus_options(CLI::App* cmd, CorpusArgs& args) {
    cmd->add_option("--seed-corpus", args.seed_corpus, "seed corpus JSONL");
    cmd->add_option("--seed-embeddings", args.seed_embeddings, "seed embedding file")
        ->needs(cmd->get_option("--seed-corpus"));
    cmd->add_option("--drift-corpus", args.drift_corpus, "drift corpus JSONL");
    cmd->add_option("--drift-embeddings", args.drift_embeddings, "drift embedding file")
        ->needs(cmd->get_option("--drift-corpus"));
}

void add_scenario_options(CLI::App* cmd, ToolConfig& cfg, std::string& kind, std::string& scorer) {
    cmd->add_option("--kind", kind, "scenario kind: gradual|uniform|none|anomaly");
    cmd->add_option("--scorer", scorer, "batch scorer: ae|medoid|fid|confidence");
    cmd->add_option("--n-batches", cfg.scenario.n_batches, "streamed batches");
    cmd->add_option("--batch-size", cfg.scenario.batch_size, "requests per batch");
    cmd->add_option("--drift-start", cfg.scenario.drift_start, "drift onset step t_s");
    cmd->add_option("--drift-fraction", cfg.scenario.drift_fraction, "uniform/anomaly fraction");
    cmd->add_option("--ramp", cfg.scenario.ramp, "gradual per-step increment");
}

void print_suite_summary(const EvaluationReport& report) {
    json j{{"n_runs", report.n_runs},
           {"n_detected", report.n_detected},
           {"detection_rate", report.detection_rate}};
    if (report.fp_rate) j["fp_rate"] = *report.fp_rate;
    if (report.fn_rate) j["fn_rate"] = *report.fn_rate;
    if (report.mean_detection_offset) j["mean_detection_offset"] = *report.mean_detection_offset;
    if (report.mean_detection_deviation)
        j["mean_detection_deviation"] = *report.mean_detection_deviation;
    if (report.mean_recall) j["mean_recall"] = *report.mean_recall;
    std::cout << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"driftscan: drift detection and interpretation for embedded request streams"};
    app.require_subcommand(1);

    ToolConfig cfg;
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed_override = 0;
    bool seed_given = false;
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--out-dir", out_dir, "output directory");
    app.add_option("--seed", seed_override, "master seed override")
        ->each([&](const std::string&) { seed_given = true; });

    // build-dataset
    auto* build_cmd = app.add_subcommand("build-dataset",
                                         "upsample a corpus to a stream-ready dataset");
    std::string bd_corpus, bd_embeddings, bd_distribution;
    std::uint64_t bd_target = 0;
    bool bd_fail_empty = false;
    build_cmd->add_option("--corpus", bd_corpus, "corpus JSONL")->required();
    build_cmd->add_option("--embeddings", bd_embeddings, "embedding file")->required();
    build_cmd->add_option("--distribution", bd_distribution,
                          "target length distribution JSON (default: estimated from the corpus)");
    build_cmd->add_option("--target-size", bd_target, "number of requests to draw");
    build_cmd->add_flag("--fail-on-empty-stratum", bd_fail_empty,
                        "fail instead of redistributing mass on empty length strata");

    // train-anchor
    auto* train_cmd = app.add_subcommand("train-anchor", "train the anchor autoencoder");
    std::string tr_corpus, tr_embeddings;
    train_cmd->add_option("--corpus", tr_corpus, "anchor corpus JSONL")->required();
    train_cmd->add_option("--embeddings", tr_embeddings, "embedding file")->required();

    // stream
    auto* stream_cmd = app.add_subcommand("stream", "score a corpus as a batched stream");
    std::string st_corpus, st_embeddings, st_model;
    stream_cmd->add_option("--corpus", st_corpus, "stream corpus JSONL")->required();
    stream_cmd->add_option("--embeddings", st_embeddings, "embedding file")->required();
    stream_cmd->add_option("--model", st_model, "anchor model file")->required();

    // simulate / evaluate
    auto* sim_cmd = app.add_subcommand("simulate", "run one drift scenario end to end");
    CorpusArgs sim_corpora;
    std::string sim_kind, sim_scorer;
    add_corpus_options(sim_cmd, sim_corpora);
    add_scenario_options(sim_cmd, cfg, sim_kind, sim_scorer);

    auto* eval_cmd = app.add_subcommand("evaluate", "run a scenario suite and aggregate metrics");
    CorpusArgs eval_corpora;
    std::string eval_kind, eval_scorer;
    int eval_runs = 100;
    add_corpus_options(eval_cmd, eval_corpora);
    add_scenario_options(eval_cmd, cfg, eval_kind, eval_scorer);
    eval_cmd->add_option("--runs", eval_runs, "number of runs")->check(CLI::PositiveNumber);

    // interpret
    auto* int_cmd = app.add_subcommand("interpret", "cluster an outlier-pool file");
    std::string int_outliers;
    std::vector<std::string> int_intents;
    int_cmd->add_option("--outliers", int_outliers, "outlier JSONL file")->required();
    int_cmd->add_option("--drift-intents", int_intents,
                        "ground-truth drift intents for recall")
        ->delimiter(',');

    // run-series
    auto* rs_cmd = app.add_subcommand("run-series",
                                      "change-point detection on a one-column CSV series");
    std::string rs_input;
    rs_cmd->add_option("--input", rs_input, "CSV file, one float per line")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (!config_path.empty()) apply_config_file(cfg, config_path);
        if (seed_given) {
            cfg.scenario.seed = seed_override;
            cfg.synthetic.seed = seed_override;
            cfg.pipeline.autoencoder.seed = seed_override;
            cfg.pipeline.cpm.seed = seed_override;
            cfg.upsample.seed = seed_override;
        }
        fs::create_directories(out_dir);

        if (*build_cmd) {
            Corpus corpus = load_embeddings(bd_corpus, bd_embeddings);
            UpsampleSpec spec = cfg.upsample;
            if (bd_target > 0) spec.target_size = bd_target;
            if (bd_fail_empty) spec.fail_on_empty_stratum = true;
            spec.distribution = bd_distribution.empty()
                                    ? estimate_length_distribution(corpus)
                                    : load_length_distribution(bd_distribution);
            Corpus dataset = upsample(corpus, spec);
            save_corpus(dataset, (fs::path(out_dir) / "dataset.jsonl").string());
            save_embeddings_binary(dataset, (fs::path(out_dir) / "dataset.dsem").string());
            save_length_distribution(spec.distribution,
                                     (fs::path(out_dir) / "length_distribution.json").string());
            std::cout << json{{"dataset_size", dataset.size()},
                              {"source_size", corpus.size()}}
                             .dump()
                      << "\n";
        } else if (*train_cmd) {
            Corpus corpus = load_embeddings(tr_corpus, tr_embeddings);
            if (corpus.empty()) throw ValidationError("train-anchor: empty corpus");
            AutoencoderConfig ae = cfg.pipeline.autoencoder;
            ae.input_dim = static_cast<int>(corpus.front().embedding().size());
            AnchorModel model = train_anchor(corpus_vectors(corpus), ae);
            save_model(model, (fs::path(out_dir) / "model.dsae").string());
            std::string trace = "epoch,loss\n";
            for (std::size_t i = 0; i < model.training_loss_trace.size(); ++i)
                trace += std::to_string(i + 1) + "," +
                         json(model.training_loss_trace[i]).dump() + "\n";
            write_text(fs::path(out_dir) / "loss_trace.csv", trace);
            std::cout << json{{"final_loss", model.training_loss_trace.back()},
                              {"epochs", model.training_loss_trace.size()}}
                             .dump()
                      << "\n";
        } else if (*stream_cmd) {
            AnchorModel model = load_model(st_model);
            Corpus corpus = load_embeddings(st_corpus, st_embeddings, model.config.input_dim);
            std::size_t dropped = 0;
            auto batches = batchify(corpus, cfg.pipeline.detector.batch_size, &dropped);
            if (batches.empty())
                throw ValidationError("stream: corpus smaller than one batch");
            AeScorer scorer(model, cfg.pipeline.detector);
            StreamProcessor processor(scorer);
            CpmDetector detector(cfg.pipeline.cpm);
            for (const auto& batch : batches) {
                processor.process(batch);
                if (!detector.detected()) detector.step(processor.series().back());
            }
            write_batch_report(batches, processor.scores(),
                               (fs::path(out_dir) / "batch_report.jsonl").string());
            std::string series = "t,s\n";
            for (std::size_t t = 0; t < processor.series().size(); ++t)
                series += std::to_string(t + 1) + "," +
                          json(processor.series()[t]).dump() + "\n";
            write_text(fs::path(out_dir) / "series.csv", series);
            write_outlier_file(processor.pool().entries,
                               (fs::path(out_dir) / "outliers.jsonl").string());
            write_text(fs::path(out_dir) / "cpm_report.json",
                       report_to_json(detector.report()) + "\n");
            std::cout << report_to_json(detector.report()) << "\n";
            if (dropped > 0)
                std::cerr << "stream: dropped " << dropped << " trailing requests\n";
        } else if (*sim_cmd || *eval_cmd) {
            const bool is_sim = static_cast<bool>(*sim_cmd);
            const auto& kind_arg = is_sim ? sim_kind : eval_kind;
            const auto& scorer_arg = is_sim ? sim_scorer : eval_scorer;
            if (!kind_arg.empty()) cfg.scenario.kind = scenario_kind_from_string(kind_arg);
            if (!scorer_arg.empty()) cfg.pipeline.scorer = scorer_kind_from_string(scorer_arg);
            auto [seed_c, drift_c] = resolve_corpora(is_sim ? sim_corpora : eval_corpora, cfg);
            const int runs = is_sim ? 1 : eval_runs;
            EvaluationReport report =
                run_suite(seed_c, drift_c, cfg.scenario, cfg.pipeline, runs, out_dir);
            print_suite_summary(report);
        } else if (*int_cmd) {
            auto entries = load_outlier_file(int_outliers);
            std::vector<EmbeddedRequest> requests;
            requests.reserve(entries.size());
            for (const auto& e : entries) requests.push_back(e.request);
            InterpretationReport report = cluster_outliers(requests, cfg.pipeline.clustering);
            if (!int_intents.empty()) {
                std::set<std::string> intents(int_intents.begin(), int_intents.end());
                report.recall = coverage_recall(report, intents);
            }
            write_text(fs::path(out_dir) / "clusters.json",
                       interpretation_to_json(report) + "\n");
            std::cout << interpretation_to_json(report) << "\n";
        } else if (*rs_cmd) {
            std::ifstream in(rs_input);
            if (!in) throw ValidationError("cannot open series file: " + rs_input);
            std::vector<double> series;
            std::string line;
            std::size_t lineno = 0;
            while (std::getline(in, line)) {
                ++lineno;
                if (line.empty()) continue;
                try {
                    series.push_back(std::stod(line));
                } catch (const std::exception&) {
                    if (lineno == 1) continue;  // tolerate a header row
                    throw ValidationError("series line " + std::to_string(lineno) +
                                          ": not a number: " + line);
                }
            }
            ChangePointReport report = run_series(series, cfg.pipeline.cpm);
            write_text(fs::path(out_dir) / "cpm_report.json", report_to_json(report) + "\n");
            std::cout << report_to_json(report) << "\n";
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
