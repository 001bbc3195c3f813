// Python bindings for the main driftscan operations.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <string>
#include <vector>

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

namespace py = pybind11;
using namespace driftscan;

namespace {

Vec vec_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 1) throw ValidationError("expected a 1-d array");
    Vec v(a.shape(0));
    auto r = a.unchecked<1>();
    for (py::ssize_t i = 0; i < a.shape(0); ++i) v[i] = r(i);
    return v;
}

std::vector<Vec> rows_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw ValidationError("expected a 2-d array (rows are vectors)");
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(a.shape(0)));
    auto r = a.unchecked<2>();
    for (py::ssize_t i = 0; i < a.shape(0); ++i) {
        Vec v(a.shape(1));
        for (py::ssize_t k = 0; k < a.shape(1); ++k) v[k] = r(i, k);
        out.push_back(std::move(v));
    }
    return out;
}

py::array_t<double> array_from(const Vec& v) {
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::object json_to_py(const std::string& text) {
    return py::module_::import("json").attr("loads")(text);
}

AutoencoderConfig make_ae_config(int input_dim, const std::vector<int>& hidden_dims,
                                 const std::string& activation, double learning_rate,
                                 int epochs, int batch_size, std::uint64_t seed) {
    AutoencoderConfig config;
    config.input_dim = input_dim;
    config.hidden_dims = hidden_dims;
    if (activation == "relu")
        config.activation = Activation::relu;
    else if (activation == "tanh")
        config.activation = Activation::tanh;
    else
        throw ValidationError("unknown activation: " + activation);
    config.learning_rate = learning_rate;
    config.epochs = epochs;
    config.batch_size = batch_size;
    config.seed = seed;
    return config;
}

}  // namespace

PYBIND11_MODULE(_driftscan, m) {
    m.doc() = "drift detection and interpretation for embedded request streams";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    m.def(
        "cosine",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
            return cosine(vec_from(a), vec_from(b));
        },
        py::arg("a"), py::arg("b"));

    m.def(
        "normalized",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
            return array_from(normalized(vec_from(a)));
        },
        py::arg("v"));

    py::class_<AnchorModel>(m, "AnchorModel")
        .def_property_readonly("loss_trace",
                               [](const AnchorModel& model) { return model.training_loss_trace; })
        .def("reconstruct",
             [](const AnchorModel& model,
                const py::array_t<double, py::array::c_style | py::array::forcecast>& e) {
                 return array_from(reconstruct(model, vec_from(e)));
             },
             py::arg("e"))
        .def("similarity",
             [](const AnchorModel& model,
                const py::array_t<double, py::array::c_style | py::array::forcecast>& e) {
                 return reconstruction_similarity(model, vec_from(e));
             },
             py::arg("e"))
        .def("similarities",
             [](const AnchorModel& model,
                const py::array_t<double, py::array::c_style | py::array::forcecast>& batch) {
                 auto rows = rows_from(batch);
                 std::vector<double> sims(rows.size());
                 for (std::size_t i = 0; i < rows.size(); ++i)
                     sims[i] = reconstruction_similarity(model, rows[i]);
                 return py::array_t<double>(static_cast<py::ssize_t>(sims.size()), sims.data());
             },
             py::arg("batch"))
        .def("save", [](const AnchorModel& model, const std::string& path) { save_model(model, path); },
             py::arg("path"))
        .def_static("load", [](const std::string& path) { return load_model(path); }, py::arg("path"));

    m.def(
        "train_anchor",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& data,
           const std::vector<int>& hidden_dims, const std::string& activation,
           double learning_rate, int epochs, int batch_size, std::uint64_t seed) {
            auto rows = rows_from(data);
            if (rows.empty()) throw ValidationError("train_anchor: empty data");
            auto config = make_ae_config(static_cast<int>(rows.front().size()), hidden_dims,
                                         activation, learning_rate, epochs, batch_size, seed);
            return train_anchor(rows, config);
        },
        py::arg("data"), py::arg("hidden_dims") = std::vector<int>{600, 150, 600},
        py::arg("activation") = "relu", py::arg("learning_rate") = 1e-3, py::arg("epochs") = 200,
        py::arg("batch_size") = 64, py::arg("seed") = 0);

    m.def(
        "run_series",
        [](const std::vector<double>& series, double alpha, const std::string& statistic,
           int min_history, int horizon, int mc_replicates, std::uint64_t seed) {
            CpmConfig config;
            config.alpha = alpha;
            if (statistic == "mann_whitney")
                config.statistic = CpmStatistic::mann_whitney;
            else if (statistic == "student_t")
                config.statistic = CpmStatistic::student_t;
            else
                throw ValidationError("unknown cpm statistic: " + statistic);
            config.min_history = min_history;
            config.horizon = horizon;
            config.mc_replicates = mc_replicates;
            config.seed = seed;
            return json_to_py(report_to_json(run_series(series, config)));
        },
        py::arg("series"), py::arg("alpha") = 0.05, py::arg("statistic") = "mann_whitney",
        py::arg("min_history") = 8, py::arg("horizon") = 30, py::arg("mc_replicates") = 2000,
        py::arg("seed") = 0);

    m.def(
        "cluster_outliers",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& embeddings,
           const std::vector<std::string>& ids, const std::vector<std::string>& texts,
           const std::vector<std::optional<std::string>>& intents, double link_threshold,
           int min_cluster_size, std::optional<int> max_clusters, int name_ngram_max) {
            auto rows = rows_from(embeddings);
            if (ids.size() != rows.size() || texts.size() != rows.size() ||
                (!intents.empty() && intents.size() != rows.size()))
                throw ValidationError("cluster_outliers: ids/texts/intents must match row count");
            std::vector<EmbeddedRequest> requests;
            requests.reserve(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                EmbeddedRequest r;
                r.id = ids[i];
                r.text = texts[i];
                if (!intents.empty()) r.intent = intents[i];
                r.token_length = count_tokens(r.text);
                r.embedding_ptr = std::make_shared<const Vec>(std::move(rows[i]));
                requests.push_back(std::move(r));
            }
            ClusteringConfig config;
            config.link_threshold = link_threshold;
            config.min_cluster_size = min_cluster_size;
            config.max_clusters = max_clusters;
            config.name_ngram_max = name_ngram_max;
            return json_to_py(interpretation_to_json(cluster_outliers(requests, config)));
        },
        py::arg("embeddings"), py::arg("ids"), py::arg("texts"),
        py::arg("intents") = std::vector<std::optional<std::string>>{},
        py::arg("link_threshold") = 0.6, py::arg("min_cluster_size") = 5,
        py::arg("max_clusters") = std::nullopt, py::arg("name_ngram_max") = 2);

    m.def(
        "medoid_similarity",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& anchor,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& batch) {
            return medoid_similarity(rows_from(anchor), rows_from(batch));
        },
        py::arg("anchor"), py::arg("batch"));

    m.def(
        "fid_distance",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& anchor,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& batch) {
            return fid_distance(rows_from(anchor), rows_from(batch));
        },
        py::arg("anchor"), py::arg("batch"));

    m.def(
        "simulate",
        [](const std::string& kind, int n_runs, int n_intents, int per_intent_count,
           int dimension, double intent_spread, double holdout_fraction, int n_batches,
           int batch_size, int drift_start, double drift_fraction, double ramp,
           int anomaly_span, const std::string& scorer, const std::vector<int>& hidden_dims,
           int epochs, double gamma, int mc_replicates, std::uint64_t seed,
           const std::string& out_dir) {
            SyntheticCorpusSpec synthetic;
            synthetic.n_intents = n_intents;
            synthetic.per_intent_count = per_intent_count;
            synthetic.dimension = dimension;
            synthetic.intent_spread = intent_spread;
            synthetic.seed = seed;
            auto corpus = generate_synthetic_corpus(synthetic);
            auto [seed_c, drift_c] =
                holdout_split(corpus, holdout_fraction, derive_seed(seed, 0x5EED));
            PipelineConfig pipeline;
            pipeline.autoencoder.hidden_dims = hidden_dims;
            pipeline.autoencoder.epochs = epochs;
            pipeline.detector.batch_size = batch_size;
            pipeline.detector.gamma = gamma;
            pipeline.cpm.mc_replicates = mc_replicates;
            pipeline.scorer = scorer_kind_from_string(scorer);
            ScenarioSpec scenario;
            scenario.kind = scenario_kind_from_string(kind);
            scenario.n_batches = n_batches;
            scenario.batch_size = batch_size;
            scenario.drift_start = drift_start;
            scenario.drift_fraction = drift_fraction;
            scenario.ramp = ramp;
            scenario.anomaly_span = anomaly_span;
            scenario.seed = seed;
            auto report = run_suite(seed_c, drift_c, scenario, pipeline, n_runs, out_dir);
            return json_to_py(evaluation_to_json(report));
        },
        py::arg("kind") = "uniform", py::arg("n_runs") = 1, py::arg("n_intents") = 10,
        py::arg("per_intent_count") = 60, py::arg("dimension") = 32,
        py::arg("intent_spread") = 0.08, py::arg("holdout_fraction") = 0.2,
        py::arg("n_batches") = 20, py::arg("batch_size") = 100, py::arg("drift_start") = 10,
        py::arg("drift_fraction") = 0.5, py::arg("ramp") = 0.01, py::arg("anomaly_span") = 2,
        py::arg("scorer") = "ae", py::arg("hidden_dims") = std::vector<int>{32, 8, 32},
        py::arg("epochs") = 40, py::arg("gamma") = 0.775, py::arg("mc_replicates") = 2000,
        py::arg("seed") = 0, py::arg("out_dir") = "");
}
