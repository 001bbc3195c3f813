#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "driftscan/autoencoder.hpp"
#include "driftscan/errors.hpp"
#include "driftscan/rng.hpp"

using namespace driftscan;

namespace {

std::vector<Vec> random_unit_vectors(int n, int d, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vec> out;
    for (int i = 0; i < n; ++i) {
        Vec v(d);
        for (int k = 0; k < d; ++k) v[k] = rng.normal();
        normalize(v);
        out.push_back(std::move(v));
    }
    return out;
}

// Central finite differences of batch_loss w.r.t. every parameter.
double max_relative_gradient_error(AnchorModel model, const std::vector<Vec>& batch,
                                   double step = 1e-5) {
    const Gradients g = loss_gradient(model, batch);
    double worst = 0.0;
    const double mid = batch_loss(model, batch);
    auto probe = [&](double& param, double analytic) {
        const double saved = param;
        param = saved + step;
        const double hi = batch_loss(model, batch);
        param = saved - step;
        const double lo = batch_loss(model, batch);
        param = saved;
        // One-sided differences disagree where relu is nonsmooth within
        // the probe interval; central differences are meaningless there.
        const double fwd = (hi - mid) / step;
        const double bwd = (mid - lo) / step;
        if (std::abs(fwd - bwd) > 1e-3 * std::max({std::abs(fwd), std::abs(bwd), 1.0})) return;
        const double numeric = (hi - lo) / (2.0 * step);
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(analytic - numeric) / denom);
    };
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        for (Eigen::Index r = 0; r < model.weights[l].rows(); ++r)
            for (Eigen::Index c = 0; c < model.weights[l].cols(); ++c)
                probe(model.weights[l](r, c), g.dW[l](r, c));
        for (Eigen::Index r = 0; r < model.biases[l].size(); ++r)
            probe(model.biases[l][r], g.db[l][r]);
    }
    return worst;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("overfit on a single repeated vector reaches similarity 0.999") {
    auto vecs = random_unit_vectors(1, 8, 21);
    std::vector<Vec> batch(64, vecs[0]);
    AutoencoderConfig config;
    config.input_dim = 8;
    config.hidden_dims = {6, 4, 6};
    config.epochs = 500;
    config.batch_size = 64;
    config.seed = 9;
    AnchorModel model = train_anchor(batch, config);
    CHECK(reconstruction_similarity(model, vecs[0]) >= 0.999);
    CHECK(model.training_loss_trace.back() <= model.training_loss_trace.front());
}

TEST_CASE("training is deterministic: identical weight bytes") {
    auto data = random_unit_vectors(80, 6, 3);
    AutoencoderConfig config;
    config.input_dim = 6;
    config.hidden_dims = {5, 3, 5};
    config.epochs = 20;
    config.seed = 17;
    AnchorModel a = train_anchor(data, config);
    AnchorModel b = train_anchor(data, config);
    REQUIRE(a.weights.size() == b.weights.size());
    for (std::size_t l = 0; l < a.weights.size(); ++l) {
        CHECK(std::memcmp(a.weights[l].data(), b.weights[l].data(),
                          sizeof(double) * a.weights[l].size()) == 0);
        CHECK(std::memcmp(a.biases[l].data(), b.biases[l].data(),
                          sizeof(double) * a.biases[l].size()) == 0);
    }
}

TEST_CASE("zero-weight model reconstructs to the output bias") {
    AutoencoderConfig config;
    config.input_dim = 4;
    config.hidden_dims = {3};
    AnchorModel model = init_model(config);
    for (auto& w : model.weights) w.setZero();
    model.biases.back() = Eigen::VectorXd::Constant(4, 0.25);
    auto vecs = random_unit_vectors(1, 4, 2);
    Vec out = reconstruct(model, vecs[0]);
    for (int k = 0; k < 4; ++k) CHECK(out[k] == doctest::Approx(0.25));
}

TEST_CASE("random model produces finite output of the right shape") {
    AutoencoderConfig config;
    config.input_dim = 10;
    config.hidden_dims = {7, 4};
    config.seed = 33;
    AnchorModel model = init_model(config);
    auto vecs = random_unit_vectors(5, 10, 44);
    for (const auto& v : vecs) {
        Vec out = reconstruct(model, v);
        CHECK(out.size() == 10);
        CHECK(out.allFinite());
        const double sim = reconstruction_similarity(model, v);
        CHECK(sim >= -1.0 - 1e-9);
        CHECK(sim <= 1.0 + 1e-9);
    }
}

TEST_CASE("reconstruct rejects dimension mismatch") {
    AutoencoderConfig config;
    config.input_dim = 4;
    config.hidden_dims = {3};
    AnchorModel model = init_model(config);
    CHECK_THROWS_AS(reconstruct(model, Vec::Zero(5)), ValidationError);
}

TEST_CASE("analytic gradient matches finite differences on small models") {
    AutoencoderConfig config;
    config.input_dim = 4;
    config.hidden_dims = {3};
    config.activation = Activation::tanh;
    config.seed = 5;
    AnchorModel model = init_model(config);
    auto batch = random_unit_vectors(6, 4, 6);
    CHECK(max_relative_gradient_error(model, batch) <= 1e-4);
}

TEST_CASE("gradient check over random configurations (relu and tanh)") {
    Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        AutoencoderConfig config;
        config.input_dim = 3 + static_cast<int>(rng.uniform_below(6));  // d <= 8
        config.hidden_dims = {2 + static_cast<int>(rng.uniform_below(4))};
        if (rng.uniform() < 0.5) config.hidden_dims.push_back(2 + static_cast<int>(rng.uniform_below(3)));
        config.activation = trial % 2 == 0 ? Activation::relu : Activation::tanh;
        config.seed = rng.next_u64();
        AnchorModel model = init_model(config);
        auto batch = random_unit_vectors(5, config.input_dim, rng.next_u64());
        CHECK(max_relative_gradient_error(model, batch) <= 1e-4);
    }
}

TEST_CASE("duplicated batch has identical gradient to the original") {
    AutoencoderConfig config;
    config.input_dim = 5;
    config.hidden_dims = {4};
    config.seed = 8;
    AnchorModel model = init_model(config);
    auto batch = random_unit_vectors(7, 5, 15);
    std::vector<Vec> doubled = batch;
    doubled.insert(doubled.end(), batch.begin(), batch.end());
    const Gradients a = loss_gradient(model, batch);
    const Gradients b = loss_gradient(model, doubled);
    for (std::size_t l = 0; l < a.dW.size(); ++l) {
        CHECK((a.dW[l] - b.dW[l]).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((a.db[l] - b.db[l]).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("gradient vanishes at a perfect fixed point") {
    // Identity weights with linear-friendly input (all-positive so relu is
    // the identity on the forward path).
    AutoencoderConfig config;
    config.input_dim = 4;
    config.hidden_dims = {4};
    AnchorModel model = init_model(config);
    model.weights[0] = Eigen::MatrixXd::Identity(4, 4);
    model.weights[1] = Eigen::MatrixXd::Identity(4, 4);
    model.biases[0].setZero();
    model.biases[1].setZero();
    Vec v(4);
    v << 0.5, 0.5, 0.5, 0.5;
    const Gradients g = loss_gradient(model, {v});
    double norm = 0.0;
    for (const auto& dw : g.dW) norm += dw.squaredNorm();
    for (const auto& db : g.db) norm += db.squaredNorm();
    CHECK(std::sqrt(norm) <= 1e-8);
}

TEST_CASE("smoothed loss trace is non-increasing from epoch 10") {
    auto data = random_unit_vectors(128, 8, 23);
    AutoencoderConfig config;
    config.input_dim = 8;
    config.hidden_dims = {8, 4, 8};
    config.epochs = 60;
    config.seed = 2;
    AnchorModel model = train_anchor(data, config);
    const auto& trace = model.training_loss_trace;
    REQUIRE(trace.size() == 60);
    auto window_mean = [&](std::size_t end) {
        double sum = 0.0;
        for (std::size_t i = end - 10; i < end; ++i) sum += trace[i];
        return sum / 10.0;
    };
    for (std::size_t end = 11; end <= trace.size(); ++end)
        CHECK(window_mean(end) <= window_mean(end - 1) + 1e-9);
}

TEST_CASE("seed-data similarity beats uniform sphere samples in expectation") {
    SyntheticCorpusSpec spec;
    spec.n_intents = 4;
    spec.per_intent_count = 40;
    spec.dimension = 16;
    spec.intent_spread = 0.05;
    spec.seed = 19;
    auto corpus = generate_synthetic_corpus(spec);
    std::vector<Vec> data;
    for (const auto& r : corpus) data.push_back(r.embedding());
    AutoencoderConfig config;
    config.input_dim = 16;
    config.hidden_dims = {12, 6, 12};
    config.epochs = 150;
    config.seed = 4;
    AnchorModel model = train_anchor(data, config);

    double seed_mean = 0.0;
    for (const auto& v : data) seed_mean += reconstruction_similarity(model, v);
    seed_mean /= static_cast<double>(data.size());

    auto sphere = random_unit_vectors(120, 16, 99);
    double sphere_mean = 0.0;
    for (const auto& v : sphere) sphere_mean += reconstruction_similarity(model, v);
    sphere_mean /= static_cast<double>(sphere.size());

    CHECK(seed_mean > sphere_mean);
}

TEST_CASE("model persistence round-trips bit-exactly") {
    auto data = random_unit_vectors(70, 6, 31);
    AutoencoderConfig config;
    config.input_dim = 6;
    config.hidden_dims = {5, 3, 5};
    config.epochs = 10;
    config.seed = 12;
    AnchorModel model = train_anchor(data, config);

    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "driftscan_model_test";
    fs::create_directories(dir);
    const std::string p1 = (dir / "m1.dsae").string();
    const std::string p2 = (dir / "m2.dsae").string();
    save_model(model, p1);
    AnchorModel loaded = load_model(p1);
    save_model(loaded, p2);
    CHECK(read_file(p1) == read_file(p2));
    CHECK(loaded.config.hidden_dims == config.hidden_dims);
    CHECK(loaded.config.seed == config.seed);
    // loaded model reconstructs close to the original (f32 storage)
    Vec probe = data[0];
    CHECK((reconstruct(model, probe) - reconstruct(loaded, probe)).cwiseAbs().maxCoeff() < 1e-5);
    fs::remove_all(dir);
}

TEST_CASE("training rejects undersized seed data") {
    AutoencoderConfig config;
    config.input_dim = 4;
    config.hidden_dims = {3};
    config.batch_size = 64;
    auto data = random_unit_vectors(10, 4, 1);
    CHECK_THROWS_AS(train_anchor(data, config), ValidationError);
}
