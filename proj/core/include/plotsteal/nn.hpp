#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "plotsteal/matrix.hpp"
#include "plotsteal/rng.hpp"

namespace plotsteal {

enum class ActivationKind { relu, elu, tanh };

std::string to_string(ActivationKind k);
ActivationKind activation_from_string(const std::string& s);

enum class OptimizerKind { sgd, adam };

std::string to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(const std::string& s);

// Labeled samples: one sample per row.
struct LabeledData {
  Matrix samples;
  std::vector<int> labels;

  std::size_t size() const { return samples.rows(); }
};

// Penultimate-layer outputs paired with the samples' class labels.
struct EmbeddingSet {
  Matrix points;
  std::vector<int> labels;

  std::size_t size() const { return points.rows(); }
};

struct Layer {
  Matrix weight;             // input_dim x output_dim
  std::vector<double> bias;  // output_dim
};

// Fully connected classifier. The hidden activation is applied after every
// layer except the last; the last layer feeds softmax.
class FeedforwardNet {
 public:
  FeedforwardNet() = default;
  // dims = {input, hidden..., class_count}. Glorot-uniform weights, zero bias.
  FeedforwardNet(const std::vector<std::size_t>& dims, ActivationKind hidden_activation, Rng& rng);

  std::size_t layer_count() const { return layers_.size(); }
  std::size_t input_dim() const { return layers_.front().weight.rows(); }
  std::size_t class_count() const { return layers_.back().bias.size(); }
  ActivationKind hidden_activation() const { return hidden_activation_; }

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  // Validates the dimension chain; throws std::invalid_argument if broken.
  void validate() const;

 private:
  std::vector<Layer> layers_;
  ActivationKind hidden_activation_ = ActivationKind::relu;
};

struct ForwardCache {
  // activations[0] is the input batch; activations[l] the post-activation
  // output of layer l for l = 1..L-1.
  std::vector<Matrix> activations;
  // pre_activations[l-1] is the affine output of layer l, l = 1..L.
  std::vector<Matrix> pre_activations;
  Matrix logits;
  Matrix probabilities;
};

ForwardCache forward(const FeedforwardNet& net, const Matrix& batch);

// Mean of -log p[label] over the batch. Probabilities are clamped at 1e-12
// before the log.
double cross_entropy(const Matrix& probabilities, std::span<const int> labels);

struct Gradients {
  std::vector<Matrix> weight;
  std::vector<std::vector<double>> bias;
};

// Gradients of the mean cross-entropy w.r.t. every weight and bias.
Gradients backward(const FeedforwardNet& net, const ForwardCache& cache, std::span<const int> labels);

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::sgd;
  double learning_rate = 0.01;
  std::size_t step_count = 0;
  // SGD
  double momentum = 0.0;
  // Adam
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // First/second moment (Adam) or momentum buffer (SGD, first only).
  std::vector<Matrix> weight_m, weight_v;
  std::vector<std::vector<double>> bias_m, bias_v;

  static OptimizerState sgd(double lr, double momentum = 0.0);
  static OptimizerState adam(double lr);
};

void optimizer_step(OptimizerState& state, FeedforwardNet& net, const Gradients& grads);

struct LossPoint {
  double timestamp;  // fractional epoch
  double loss;
};

struct LossCurve {
  std::vector<LossPoint> train_points;  // 5 per epoch
  std::vector<LossPoint> test_points;   // 1 per epoch
};

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::sgd;
  double learning_rate = 0.01;
  double momentum = 0.0;  // SGD only
};

// Mini-batch training with per-epoch Fisher-Yates shuffling. Records the
// average train loss over 5 contiguous fifths of each epoch's batch sequence
// (remainder batches join the last fifth; if there are fewer than 5 batches
// all five points carry the epoch average) and the average test loss once per
// epoch. Pure function of (initial weights, data, config).
LossCurve train(FeedforwardNet& net, const LabeledData& train_data, const LabeledData& test_data,
                const TrainConfig& config);

double accuracy(const FeedforwardNet& net, const LabeledData& data);

// Post-activation outputs of the layer before the classifier layer.
// Throws std::invalid_argument for single-layer nets.
EmbeddingSet penultimate_embeddings(const FeedforwardNet& net, const LabeledData& samples);

// Fraction of exact zeros, e.g. in penultimate embeddings.
double value_sparsity(const Matrix& m);

// Gradient of the sample's cross-entropy loss w.r.t. the input features.
Matrix input_gradient(const FeedforwardNet& net, const Matrix& sample, int label);

}  // namespace plotsteal
