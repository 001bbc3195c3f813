#include "driftscan/autoencoder.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "driftscan/errors.hpp"
#include "driftscan/rng.hpp"

namespace driftscan {

using nlohmann::json;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void AutoencoderConfig::validate() const {
    if (input_dim < 1) throw ValidationError("autoencoder: input_dim must be positive");
    if (hidden_dims.empty()) throw ValidationError("autoencoder: hidden_dims must be non-empty");
    for (int h : hidden_dims)
        if (h < 1) throw ValidationError("autoencoder: hidden dims must be positive");
    if (learning_rate <= 0.0) throw ValidationError("autoencoder: learning_rate must be positive");
    if (epochs < 1) throw ValidationError("autoencoder: epochs must be positive");
    if (batch_size < 1) throw ValidationError("autoencoder: batch_size must be positive");
}

std::vector<int> AutoencoderConfig::layer_dims() const {
    std::vector<int> dims = hidden_dims;
    dims.push_back(input_dim);
    return dims;
}

namespace {

inline MatrixXd activate(const MatrixXd& z, Activation act) {
    if (act == Activation::relu) return z.cwiseMax(0.0);
    return z.array().tanh().matrix();
}

inline MatrixXd activate_grad(const MatrixXd& a, Activation act) {
    if (act == Activation::relu)
        return (a.array() > 0.0).cast<double>().matrix();
    return (1.0 - a.array().square()).matrix();
}

// Columns are samples. Hidden layers use the configured activation,
// the output layer is linear.
std::vector<MatrixXd> forward_batch(const AnchorModel& model, const MatrixXd& input) {
    std::vector<MatrixXd> activations;
    activations.reserve(model.weights.size() + 1);
    activations.push_back(input);
    const std::size_t n_layers = model.weights.size();
    for (std::size_t l = 0; l < n_layers; ++l) {
        MatrixXd z = (model.weights[l] * activations.back()).colwise() + model.biases[l];
        if (l + 1 < n_layers) z = activate(z, model.config.activation);
        activations.push_back(std::move(z));
    }
    return activations;
}

MatrixXd to_matrix(const std::vector<Vec>& batch, int dim) {
    MatrixXd m(dim, static_cast<Eigen::Index>(batch.size()));
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (batch[i].size() != dim)
            throw ValidationError("autoencoder: vector dimension " + std::to_string(batch[i].size()) +
                                  " does not match model dimension " + std::to_string(dim));
        m.col(static_cast<Eigen::Index>(i)) = batch[i];
    }
    return m;
}

Gradients backprop(const AnchorModel& model, const MatrixXd& input, double* loss_out) {
    const auto acts = forward_batch(model, input);
    const double n = static_cast<double>(input.cols());
    const MatrixXd residual = acts.back() - input;
    if (loss_out) *loss_out = residual.squaredNorm() / n;

    const std::size_t n_layers = model.weights.size();
    Gradients g;
    g.dW.resize(n_layers);
    g.db.resize(n_layers);

    MatrixXd delta = (2.0 / n) * residual;  // dJ/dz at the linear output
    for (std::size_t l = n_layers; l-- > 0;) {
        g.dW[l] = delta * acts[l].transpose();
        g.db[l] = delta.rowwise().sum();
        if (l > 0) {
            delta = model.weights[l].transpose() * delta;
            delta = delta.cwiseProduct(activate_grad(acts[l], model.config.activation));
        }
    }
    return g;
}

}  // namespace

AnchorModel init_model(const AutoencoderConfig& config) {
    config.validate();
    AnchorModel model;
    model.config = config;
    Rng rng(derive_seed(config.seed, 0));
    int fan_in = config.input_dim;
    for (int fan_out : config.layer_dims()) {
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        MatrixXd w(fan_out, fan_in);
        // Row-major fill order so initialization is independent of Eigen's
        // internal storage layout.
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-limit, limit);
        model.weights.push_back(std::move(w));
        model.biases.emplace_back(VectorXd::Zero(fan_out));
        fan_in = fan_out;
    }
    return model;
}

AnchorModel train_anchor(const std::vector<Vec>& seed_data, const AutoencoderConfig& config) {
    config.validate();
    if (seed_data.empty()) throw ValidationError("train_anchor: empty seed data");
    if (static_cast<int>(seed_data.size()) < config.batch_size)
        throw ValidationError("train_anchor: need at least batch_size (" +
                              std::to_string(config.batch_size) + ") seed vectors, got " +
                              std::to_string(seed_data.size()));

    AnchorModel model = init_model(config);
    const MatrixXd data = to_matrix(seed_data, config.input_dim);
    const std::size_t n = seed_data.size();

    // Adam state.
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::vector<MatrixXd> mW, vW;
    std::vector<VectorXd> mb, vb;
    for (const auto& w : model.weights) {
        mW.emplace_back(MatrixXd::Zero(w.rows(), w.cols()));
        vW.emplace_back(MatrixXd::Zero(w.rows(), w.cols()));
        mb.emplace_back(VectorXd::Zero(w.rows()));
        vb.emplace_back(VectorXd::Zero(w.rows()));
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    long step = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch) + 1));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        int n_minibatches = 0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t stop = std::min(n, start + config.batch_size);
            MatrixXd mb_data(config.input_dim, static_cast<Eigen::Index>(stop - start));
            for (std::size_t i = start; i < stop; ++i)
                mb_data.col(static_cast<Eigen::Index>(i - start)) =
                    data.col(static_cast<Eigen::Index>(order[i]));

            double loss = 0.0;
            Gradients g = backprop(model, mb_data, &loss);
            if (!std::isfinite(loss))
                throw NumericError("train_anchor: non-finite loss at epoch " +
                                   std::to_string(epoch));
            epoch_loss += loss;
            ++n_minibatches;

            ++step;
            const double corr1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double corr2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            for (std::size_t l = 0; l < model.weights.size(); ++l) {
                mW[l] = beta1 * mW[l] + (1.0 - beta1) * g.dW[l];
                vW[l] = beta2 * vW[l] + (1.0 - beta2) * g.dW[l].cwiseProduct(g.dW[l]);
                mb[l] = beta1 * mb[l] + (1.0 - beta1) * g.db[l];
                vb[l] = beta2 * vb[l] + (1.0 - beta2) * g.db[l].cwiseProduct(g.db[l]);
                model.weights[l] -=
                    (config.learning_rate * (mW[l] / corr1).array() /
                     ((vW[l] / corr2).array().sqrt() + eps))
                        .matrix();
                model.biases[l] -=
                    (config.learning_rate * (mb[l] / corr1).array() /
                     ((vb[l] / corr2).array().sqrt() + eps))
                        .matrix();
            }
        }
        model.training_loss_trace.push_back(epoch_loss / n_minibatches);
    }
    return model;
}

Vec reconstruct(const AnchorModel& model, const Vec& e) {
    if (e.size() != model.config.input_dim)
        throw ValidationError("reconstruct: dimension mismatch (" + std::to_string(e.size()) +
                              " vs model " + std::to_string(model.config.input_dim) + ")");
    MatrixXd input(e.size(), 1);
    input.col(0) = e;
    const auto acts = forward_batch(model, input);
    return acts.back().col(0);
}

double reconstruction_similarity(const AnchorModel& model, const Vec& e) {
    return cosine(e, reconstruct(model, e));
}

double batch_loss(const AnchorModel& model, const std::vector<Vec>& batch) {
    if (batch.empty()) throw ValidationError("batch_loss: empty batch");
    const MatrixXd input = to_matrix(batch, model.config.input_dim);
    const auto acts = forward_batch(model, input);
    return (acts.back() - input).squaredNorm() / static_cast<double>(batch.size());
}

Gradients loss_gradient(const AnchorModel& model, const std::vector<Vec>& batch) {
    if (batch.empty()) throw ValidationError("loss_gradient: empty batch");
    const MatrixXd input = to_matrix(batch, model.config.input_dim);
    Gradients g = backprop(model, input, nullptr);
    for (std::size_t l = 0; l < g.dW.size(); ++l)
        if (!g.dW[l].allFinite() || !g.db[l].allFinite())
            throw NumericError("loss_gradient: non-finite gradient at layer " + std::to_string(l));
    return g;
}

namespace {

constexpr char kModelMagic[4] = {'D', 'S', 'A', 'E'};
constexpr std::uint32_t kModelVersion = 1;

void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

json config_to_json(const AutoencoderConfig& c) {
    return json{{"input_dim", c.input_dim},
                {"hidden_dims", c.hidden_dims},
                {"activation", c.activation == Activation::relu ? "relu" : "tanh"},
                {"learning_rate", c.learning_rate},
                {"epochs", c.epochs},
                {"batch_size", c.batch_size},
                {"seed", c.seed}};
}

AutoencoderConfig config_from_json(const json& j) {
    AutoencoderConfig c;
    c.input_dim = j.at("input_dim").get<int>();
    c.hidden_dims = j.at("hidden_dims").get<std::vector<int>>();
    c.activation = j.at("activation").get<std::string>() == "tanh" ? Activation::tanh
                                                                   : Activation::relu;
    c.learning_rate = j.at("learning_rate").get<double>();
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

}  // namespace

void save_model(const AnchorModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write model file: " + path);
    out.write(kModelMagic, 4);
    write_u32(out, kModelVersion);
    write_u32(out, static_cast<std::uint32_t>(model.config.input_dim));
    write_u32(out, static_cast<std::uint32_t>(model.weights.size()));
    std::vector<float> buf;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        const auto& w = model.weights[l];
        write_u32(out, static_cast<std::uint32_t>(w.rows()));
        write_u32(out, static_cast<std::uint32_t>(w.cols()));
        buf.resize(static_cast<std::size_t>(w.size()));
        std::size_t idx = 0;
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) buf[idx++] = static_cast<float>(w(r, c));
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
        buf.resize(static_cast<std::size_t>(model.biases[l].size()));
        for (Eigen::Index r = 0; r < model.biases[l].size(); ++r)
            buf[static_cast<std::size_t>(r)] = static_cast<float>(model.biases[l][r]);
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    out << config_to_json(model.config).dump();
}

AnchorModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open model file: " + path);
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kModelMagic, 4) != 0)
        throw ValidationError("not a model file (bad magic): " + path);
    const std::uint32_t version = read_u32(in);
    if (version != kModelVersion)
        throw ValidationError("unsupported model version " + std::to_string(version));
    const std::uint32_t d = read_u32(in);
    const std::uint32_t n_layers = read_u32(in);

    AnchorModel model;
    std::vector<float> buf;
    for (std::uint32_t l = 0; l < n_layers; ++l) {
        const std::uint32_t rows = read_u32(in);
        const std::uint32_t cols = read_u32(in);
        if (!in) throw ValidationError("truncated model file: " + path);
        buf.resize(static_cast<std::size_t>(rows) * cols);
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        Eigen::MatrixXd w(rows, cols);
        std::size_t idx = 0;
        for (std::uint32_t r = 0; r < rows; ++r)
            for (std::uint32_t c = 0; c < cols; ++c) w(r, c) = buf[idx++];
        model.weights.push_back(std::move(w));
        buf.resize(rows);
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (!in) throw ValidationError("truncated model file: " + path);
        Eigen::VectorXd b(rows);
        for (std::uint32_t r = 0; r < rows; ++r) b[r] = buf[r];
        model.biases.push_back(std::move(b));
    }
    std::string tail((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        model.config = config_from_json(json::parse(tail));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad model config blob: ") + e.what());
    }
    if (model.config.input_dim != static_cast<int>(d))
        throw ValidationError("model header dimension disagrees with config blob");
    return model;
}

}  // namespace driftscan
