#include <doctest.h>

#include <numeric>
#include <set>

#include "driftscan/dataset.hpp"
#include "driftscan/errors.hpp"
#include "driftscan/harness.hpp"

using namespace driftscan;

namespace {

struct DeskSetup {
    Corpus seed_corpus;
    Corpus drift_corpus;
    PipelineConfig config;
};

DeskSetup desk_setup(std::uint64_t seed = 2) {
    SyntheticCorpusSpec spec;
    spec.n_intents = 10;
    spec.per_intent_count = 60;
    spec.dimension = 32;
    spec.intent_spread = 0.08;
    spec.seed = seed;
    auto corpus = generate_synthetic_corpus(spec);
    auto [seed_c, drift_c] = holdout_split(corpus, 0.2, seed + 1);

    DeskSetup setup;
    setup.seed_corpus = std::move(seed_c);
    setup.drift_corpus = std::move(drift_c);
    setup.config.autoencoder.input_dim = 32;
    setup.config.autoencoder.hidden_dims = {32, 8, 32};
    setup.config.autoencoder.epochs = 40;
    setup.config.detector.batch_size = 100;
    setup.config.detector.gamma = 0.775;
    setup.config.cpm.mc_replicates = 1500;
    return setup;
}

int count_drift_members(const Batch& batch, const std::set<std::string>& drift_intents) {
    int n = 0;
    for (const auto& r : batch.requests)
        if (r.intent && drift_intents.count(*r.intent)) ++n;
    return n;
}

}  // namespace

TEST_CASE("no-drift scenario has zero drift fraction everywhere") {
    auto setup = desk_setup();
    ScenarioSpec spec;
    spec.kind = ScenarioKind::none;
    spec.batch_size = 50;
    spec.n_batches = 10;
    spec.drift_start = 5;
    spec.seed = 3;
    auto data = build_scenario(setup.seed_corpus, setup.drift_corpus, spec);
    for (double f : data.ground_truth.drift_fractions) CHECK(f == 0.0);
    for (int c : data.ground_truth.drift_counts) CHECK(c == 0);
    CHECK(data.anchor_batches.size() == 2);
    CHECK(data.stream_batches.size() == 10);
}

TEST_CASE("uniform scenario injects exactly round(B*fraction) drift requests") {
    auto setup = desk_setup();
    std::set<std::string> drift_intents;
    for (const auto& r : setup.drift_corpus) drift_intents.insert(*r.intent);

    ScenarioSpec spec;
    spec.kind = ScenarioKind::uniform;
    spec.batch_size = 200;
    spec.n_batches = 30;
    spec.drift_start = 15;
    spec.drift_fraction = 0.1;
    spec.seed = 7;
    auto data = build_scenario(setup.seed_corpus, setup.drift_corpus, spec);
    for (int t = 1; t <= 30; ++t) {
        const auto& batch = data.stream_batches[static_cast<std::size_t>(t - 1)];
        const int expected = t >= 15 ? 20 : 0;
        CHECK(data.ground_truth.drift_counts[static_cast<std::size_t>(t - 1)] == expected);
        CHECK(count_drift_members(batch, drift_intents) == expected);
    }
}

TEST_CASE("gradual ramp fraction matches the linear schedule") {
    auto setup = desk_setup();
    ScenarioSpec spec;
    spec.kind = ScenarioKind::gradual;
    spec.batch_size = 200;
    spec.n_batches = 30;
    spec.drift_start = 15;
    spec.ramp = 0.005;
    spec.seed = 9;
    auto data = build_scenario(setup.seed_corpus, setup.drift_corpus, spec);
    CHECK(data.ground_truth.drift_fractions[17] == doctest::Approx(0.02));  // t = 18
    CHECK(data.ground_truth.drift_fractions[13] == 0.0);                    // t = 14
}

TEST_CASE("anomaly scenario is confined to its span") {
    auto setup = desk_setup();
    ScenarioSpec spec;
    spec.kind = ScenarioKind::anomaly;
    spec.batch_size = 100;
    spec.n_batches = 20;
    spec.drift_start = 10;
    spec.drift_fraction = 0.3;
    spec.anomaly_span = 2;
    spec.seed = 11;
    auto data = build_scenario(setup.seed_corpus, setup.drift_corpus, spec);
    for (int t = 1; t <= 20; ++t) {
        const double f = data.ground_truth.drift_fractions[static_cast<std::size_t>(t - 1)];
        if (t == 10 || t == 11)
            CHECK(f == doctest::Approx(0.3));
        else
            CHECK(f == 0.0);
    }
}

TEST_CASE("ground-truth drift counts sum to the injected total") {
    auto setup = desk_setup();
    std::set<std::string> drift_intents;
    for (const auto& r : setup.drift_corpus) drift_intents.insert(*r.intent);
    ScenarioSpec spec;
    spec.kind = ScenarioKind::gradual;
    spec.batch_size = 120;
    spec.n_batches = 25;
    spec.drift_start = 12;
    spec.ramp = 0.02;
    spec.seed = 13;
    auto data = build_scenario(setup.seed_corpus, setup.drift_corpus, spec);
    int injected = 0;
    for (const auto& batch : data.stream_batches)
        injected += count_drift_members(batch, drift_intents);
    const int recorded = std::accumulate(data.ground_truth.drift_counts.begin(),
                                         data.ground_truth.drift_counts.end(), 0);
    CHECK(injected == recorded);
}

TEST_CASE("scenario construction is deterministic per seed") {
    auto setup = desk_setup();
    ScenarioSpec spec;
    spec.kind = ScenarioKind::uniform;
    spec.batch_size = 80;
    spec.n_batches = 12;
    spec.drift_start = 6;
    spec.seed = 21;
    auto a = build_scenario(setup.seed_corpus, setup.drift_corpus, spec);
    auto b = build_scenario(setup.seed_corpus, setup.drift_corpus, spec);
    for (std::size_t i = 0; i < a.stream_batches.size(); ++i)
        for (std::size_t j = 0; j < a.stream_batches[i].requests.size(); ++j)
            CHECK(a.stream_batches[i].requests[j].id == b.stream_batches[i].requests[j].id);
}

TEST_CASE("strong uniform drift is detected with small offset") {
    auto setup = desk_setup();
    ScenarioSpec spec;
    spec.kind = ScenarioKind::uniform;
    spec.batch_size = 100;
    spec.n_batches = 20;
    spec.drift_start = 10;
    spec.drift_fraction = 0.5;
    spec.seed = 40;
    auto result = run_experiment(setup.seed_corpus, setup.drift_corpus, spec, setup.config);
    REQUIRE(result.detected);
    CHECK(*result.detection_offset <= 3);
    CHECK(*result.t_p <= *result.t_d);
    CHECK_FALSE(result.false_positive);
    CHECK(result.drift_rate_at_detection.value() > 0.0);
}

TEST_CASE("a detection in a no-drift run counts as a false positive") {
    RunResult r;
    r.kind = ScenarioKind::none;
    r.detected = true;
    r.false_positive = true;
    auto report = aggregate({r});
    CHECK(report.fp_rate.value() == 1.0);
    CHECK_FALSE(report.fn_rate.has_value());
}

TEST_CASE("aggregate of one run reproduces that run's metrics") {
    auto setup = desk_setup();
    ScenarioSpec spec;
    spec.kind = ScenarioKind::uniform;
    spec.batch_size = 100;
    spec.n_batches = 20;
    spec.drift_start = 10;
    spec.drift_fraction = 0.5;
    spec.seed = 33;
    auto result = run_experiment(setup.seed_corpus, setup.drift_corpus, spec, setup.config);
    auto report = aggregate({result});
    CHECK(report.n_runs == 1);
    CHECK(report.detection_rate == (result.detected ? 1.0 : 0.0));
    if (result.detected) {
        CHECK(report.mean_detection_offset.value() ==
              doctest::Approx(static_cast<double>(*result.detection_offset)));
        CHECK(report.mean_detection_deviation.value() ==
              doctest::Approx(static_cast<double>(*result.detection_deviation)));
    }
}

TEST_CASE("fn count plus detections equals runs for drifted kinds") {
    auto setup = desk_setup();
    ScenarioSpec spec;
    spec.kind = ScenarioKind::uniform;
    spec.batch_size = 100;
    spec.n_batches = 16;
    spec.drift_start = 8;
    spec.drift_fraction = 0.4;
    spec.seed = 1;
    auto report = run_suite(setup.seed_corpus, setup.drift_corpus, spec, setup.config, 4);
    int fn = 0;
    for (const auto& r : report.runs)
        if (r.false_negative) ++fn;
    CHECK(fn + report.n_detected == report.n_runs);
}

TEST_CASE("detected window outliers match pool slice used for clustering") {
    auto setup = desk_setup();
    ScenarioSpec spec;
    spec.kind = ScenarioKind::uniform;
    spec.batch_size = 100;
    spec.n_batches = 20;
    spec.drift_start = 10;
    spec.drift_fraction = 0.5;
    spec.seed = 40;
    auto result = run_experiment(setup.seed_corpus, setup.drift_corpus, spec, setup.config);
    REQUIRE(result.detected);
    REQUIRE(!result.window_outliers.empty());
    for (const auto& e : result.window_outliers) {
        CHECK(e.t >= *result.t_p);
        CHECK(e.t <= *result.t_d);
    }
    int clustered = 0;
    for (const auto& c : result.interpretation.clusters) clustered += static_cast<int>(c.members.size());
    CHECK(clustered + result.interpretation.unclustered_count ==
          static_cast<int>(result.window_outliers.size()));
}

TEST_CASE("run_experiment validates scenario bounds") {
    auto setup = desk_setup();
    ScenarioSpec spec;
    spec.kind = ScenarioKind::uniform;
    spec.drift_start = 99;
    spec.n_batches = 10;
    CHECK_THROWS_AS(build_scenario(setup.seed_corpus, setup.drift_corpus, spec), ValidationError);
}
