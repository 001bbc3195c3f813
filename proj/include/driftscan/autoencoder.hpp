// Anchor autoencoder: a fully-connected MLP trained with Adam to reproduce
// its input embedding, plus binary model persistence ("DSAE").
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "driftscan/embedding.hpp"

namespace driftscan {

enum class Activation { relu, tanh };

struct AutoencoderConfig {
    int input_dim = 512;
    std::vector<int> hidden_dims = {600, 150, 600};
    Activation activation = Activation::relu;
    double learning_rate = 1e-3;
    int epochs = 200;
    int batch_size = 64;
    std::uint64_t seed = 0;

    void validate() const;
    // Layer output widths: hidden_dims followed by input_dim.
    std::vector<int> layer_dims() const;
};

struct AnchorModel {
    // weights[l] is (out x in); biases[l] has out entries.
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    AutoencoderConfig config;
    std::vector<double> training_loss_trace;
};

struct Gradients {
    std::vector<Eigen::MatrixXd> dW;
    std::vector<Eigen::VectorXd> db;
};

// Glorot-uniform initialized model from the config seed (no training).
AnchorModel init_model(const AutoencoderConfig& config);

AnchorModel train_anchor(const std::vector<Vec>& seed_data, const AutoencoderConfig& config);

Vec reconstruct(const AnchorModel& model, const Vec& e);

// cosine(e, reconstruct(model, e)); range [-1, 1].
double reconstruction_similarity(const AnchorModel& model, const Vec& e);

// Mean squared reconstruction error over the batch (summed over dimensions).
double batch_loss(const AnchorModel& model, const std::vector<Vec>& batch);

// Gradient of batch_loss w.r.t. every weight and bias.
Gradients loss_gradient(const AnchorModel& model, const std::vector<Vec>& batch);

void save_model(const AnchorModel& model, const std::string& path);
AnchorModel load_model(const std::string& path);

}  // namespace driftscan
