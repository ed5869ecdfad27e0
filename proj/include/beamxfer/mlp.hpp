#pragma once

#include "beamxfer/dataset.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace beamxfer {

// 2 -> 128 -> 128 -> 128 -> 1024 (one logit per beam pair).
inline const std::vector<int> kBeamNetDims{2, 128, 128, 128, kNumBpls};

inline constexpr std::array<double, kLabelCount> kDefaultLossWeights{0.5, 0.2, 0.15, 0.075, 0.075};
inline constexpr double kProbClamp = 1e-12;

// Neumaier compensated sum; the default weights add up to exactly 1.0 with it.
double compensated_sum(std::span<const double> xs);

struct TrainConfig {
    int epochs = 60;
    int batch_size = 128;
    double initial_lr = 0.2;
    std::vector<int> milestones{20, 40};
    double lr_gamma = 0.1;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::array<double, kLabelCount> loss_weights = kDefaultLossWeights;
    std::uint64_t seed = 0;
    // When epochs * batches-per-epoch falls short of this, the epoch count is
    // raised to reach it and the milestones are stretched proportionally.
    long min_steps = 0;
    // Leading weight layers kept fixed (fine-tuning option; 0 trains all).
    int frozen_layers = 0;

    void validate() const;
};

// Epoch count and milestones actually used for a training set of n samples.
TrainConfig effective_schedule(const TrainConfig& config, std::size_t n);

// "practical" profile for the synthetic scenes: conventional Adam learning
// rate, smaller batches and a floor on optimizer steps.
inline constexpr double kPracticalLearningRate = 2e-3;
inline constexpr int kPracticalBatchSize = 32;
inline constexpr long kPracticalMinSteps = 3000;
TrainConfig default_train_config();
TrainConfig practical_train_config();

// Fully connected ReLU network; weights[l] maps layer l to layer l+1.
struct MlpModel {
    std::vector<int> dims;
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    static MlpModel zeros(const std::vector<int>& dims);
    // He-uniform weights, zero biases.
    static MlpModel he_uniform(const std::vector<int>& dims, std::uint64_t seed);

    int input_dim() const { return dims.front(); }
    int output_dim() const { return dims.back(); }
    std::size_t layer_count() const { return weights.size(); }
    std::size_t parameter_count() const;
    bool all_finite() const;
    void require_finite() const;  // throws ErrorKind::NonFinite

    friend bool operator==(const MlpModel& a, const MlpModel& b);
};

struct ForwardResult {
    Eigen::VectorXd logits;
    Eigen::VectorXd probs;
};

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);
ForwardResult forward(const MlpModel& model, std::span<const double> features);
// Column-per-sample batch inference: (input_dim x B) -> (output_dim x B).
Eigen::MatrixXd forward_logits(const MlpModel& model, const Eigen::MatrixXd& features);

// L = sum_k -w_k ln(max(p[labels[k]], clamp)).
double weighted_ce_loss(std::span<const double> probs, std::span<const int> labels, std::span<const double> weights,
                        double clamp = kProbClamp);

struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    double loss = 0.0;  // mean weighted CE over the batch
};

// Exact gradients of the batch-mean loss. `labels` holds kLabelCount class ids
// per column of `features`.
Gradients backward(const MlpModel& model, const Eigen::MatrixXd& features,
                   std::span<const std::array<int, kLabelCount>> labels, std::span<const double> weights);

struct AdamState {
    std::vector<Eigen::MatrixXd> m_weights, v_weights;
    std::vector<Eigen::VectorXd> m_biases, v_biases;
    long step = 0;

    static AdamState for_model(const MlpModel& model);
};

void adam_step(MlpModel& model, const Gradients& grads, AdamState& state, double lr, const TrainConfig& config);

// initial_lr * gamma^(number of milestones <= epoch).
double lr_at(const TrainConfig& config, int epoch);

struct EpochRecord {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_top1 = std::numeric_limits<double>::quiet_NaN();
};

using TrainHistory = std::vector<EpochRecord>;

struct TrainResult {
    MlpModel model;
    TrainHistory history;
};

// Seeded shuffled mini-batches for config.epochs epochs; the final-epoch
// weights are returned (no early stopping).
TrainResult train(MlpModel model, const BplDataset& train_set, const BplDataset& val_set, const TrainConfig& config,
                  const PositionNormalizer& normalizer);

// m most probable classes, descending, ties to the lower class id.
std::vector<int> predict_top_m(const MlpModel& model, std::span<const double> features, int m);
std::vector<int> top_m_of(std::span<const double> scores, int m);

// Normalised (2 x N) feature matrix for a dataset.
Eigen::MatrixXd feature_matrix(const BplDataset& dataset, const PositionNormalizer& normalizer);

}  // namespace beamxfer
