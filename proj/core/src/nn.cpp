#include "plotsteal/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace plotsteal {

std::string to_string(ActivationKind k) {
  switch (k) {
    case ActivationKind::relu: return "relu";
    case ActivationKind::elu: return "elu";
    case ActivationKind::tanh: return "tanh";
  }
  throw std::logic_error("bad ActivationKind");
}

ActivationKind activation_from_string(const std::string& s) {
  if (s == "relu") return ActivationKind::relu;
  if (s == "elu") return ActivationKind::elu;
  if (s == "tanh") return ActivationKind::tanh;
  throw std::invalid_argument("unknown activation: " + s);
}

std::string to_string(OptimizerKind k) {
  return k == OptimizerKind::sgd ? "sgd" : "adam";
}

OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw std::invalid_argument("unknown optimizer: " + s);
}

namespace {

double activate(ActivationKind k, double x) {
  switch (k) {
    case ActivationKind::relu: return x > 0.0 ? x : 0.0;
    case ActivationKind::elu: return x > 0.0 ? x : std::expm1(x);
    case ActivationKind::tanh: return std::tanh(x);
  }
  return x;
}

// Derivative expressed via pre-activation x.
double activate_grad(ActivationKind k, double x) {
  switch (k) {
    case ActivationKind::relu: return x > 0.0 ? 1.0 : 0.0;
    case ActivationKind::elu: return x > 0.0 ? 1.0 : std::exp(x);
    case ActivationKind::tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

Matrix affine(const Matrix& input, const Layer& layer) {
  Matrix z = matmul(input, layer.weight);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto row = z.row(i);
    for (std::size_t j = 0; j < z.cols(); ++j) row[j] += layer.bias[j];
  }
  return z;
}

void check_labels(std::span<const int> labels, std::size_t rows, std::size_t class_count) {
  if (labels.size() != rows) throw std::invalid_argument("label count does not match batch rows");
  for (int l : labels)
    if (l < 0 || static_cast<std::size_t>(l) >= class_count)
      throw std::invalid_argument("label out of range: " + std::to_string(l));
}

}  // namespace

FeedforwardNet::FeedforwardNet(const std::vector<std::size_t>& dims, ActivationKind hidden_activation,
                               Rng& rng)
    : hidden_activation_(hidden_activation) {
  if (dims.size() < 2) throw std::invalid_argument("net needs at least input and output dims");
  for (std::size_t d : dims)
    if (d == 0) throw std::invalid_argument("zero layer dimension");
  layers_.reserve(dims.size() - 1);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Layer layer;
    layer.weight = Matrix(dims[l], dims[l + 1]);
    const double bound = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
    for (double& w : layer.weight.values()) w = rng.uniform(-bound, bound);
    layer.bias.assign(dims[l + 1], 0.0);
    layers_.push_back(std::move(layer));
  }
}

void FeedforwardNet::validate() const {
  if (layers_.empty()) throw std::invalid_argument("net has no layers");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].bias.size() != layers_[l].weight.cols())
      throw std::invalid_argument("bias/weight shape mismatch at layer " + std::to_string(l));
    if (l + 1 < layers_.size() && layers_[l].weight.cols() != layers_[l + 1].weight.rows())
      throw std::invalid_argument("layer dimension chain broken at layer " + std::to_string(l));
  }
}

ForwardCache forward(const FeedforwardNet& net, const Matrix& batch) {
  if (batch.cols() != net.input_dim())
    throw std::invalid_argument("batch cols " + std::to_string(batch.cols()) +
                                " != input dim " + std::to_string(net.input_dim()));
  ForwardCache cache;
  const auto& layers = net.layers();
  cache.activations.reserve(layers.size());
  cache.pre_activations.reserve(layers.size());
  cache.activations.push_back(batch);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix z = affine(cache.activations.back(), layers[l]);
    cache.pre_activations.push_back(z);
    if (l + 1 < layers.size()) {
      Matrix a = z;
      for (double& v : a.values()) v = activate(net.hidden_activation(), v);
      cache.activations.push_back(std::move(a));
    } else {
      cache.logits = std::move(z);
    }
  }
  // Row-wise softmax with max shift.
  cache.probabilities = Matrix(cache.logits.rows(), cache.logits.cols());
  for (std::size_t i = 0; i < cache.logits.rows(); ++i) {
    const auto lrow = cache.logits.row(i);
    auto prow = cache.probabilities.row(i);
    double mx = lrow[0];
    for (double v : lrow) mx = std::max(mx, v);
    double sum = 0.0;
    for (std::size_t j = 0; j < lrow.size(); ++j) {
      prow[j] = std::exp(lrow[j] - mx);
      sum += prow[j];
    }
    for (std::size_t j = 0; j < lrow.size(); ++j) prow[j] /= sum;
  }
  require_finite(cache.probabilities, "forward probabilities");
  return cache;
}

double cross_entropy(const Matrix& probabilities, std::span<const int> labels) {
  check_labels(labels, probabilities.rows(), probabilities.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < probabilities.rows(); ++i) {
    const double p = std::max(probabilities.at(i, static_cast<std::size_t>(labels[i])), 1e-12);
    total -= std::log(p);
  }
  return total / static_cast<double>(probabilities.rows());
}

Gradients backward(const FeedforwardNet& net, const ForwardCache& cache, std::span<const int> labels) {
  const auto& layers = net.layers();
  const std::size_t L = layers.size();
  if (cache.activations.size() != L || cache.pre_activations.size() != L ||
      cache.activations[0].cols() != net.input_dim())
    throw std::invalid_argument("backward: cache does not match net");
  const std::size_t n = cache.probabilities.rows();
  check_labels(labels, n, net.class_count());

  Gradients grads;
  grads.weight.resize(L);
  grads.bias.resize(L);

  // delta for the softmax + mean cross-entropy head: (p - y) / n.
  Matrix delta = cache.probabilities;
  for (std::size_t i = 0; i < n; ++i) delta.at(i, static_cast<std::size_t>(labels[i])) -= 1.0;
  for (double& v : delta.values()) v /= static_cast<double>(n);

  for (std::size_t l = L; l-- > 0;) {
    grads.weight[l] = matmul_at_b(cache.activations[l], delta);
    grads.bias[l].assign(layers[l].bias.size(), 0.0);
    for (std::size_t i = 0; i < delta.rows(); ++i) {
      const auto drow = delta.row(i);
      for (std::size_t j = 0; j < drow.size(); ++j) grads.bias[l][j] += drow[j];
    }
    if (l > 0) {
      Matrix prev = matmul_a_bt(delta, layers[l].weight);
      const Matrix& z = cache.pre_activations[l - 1];
      for (std::size_t i = 0; i < prev.rows(); ++i) {
        auto prow = prev.row(i);
        const auto zrow = z.row(i);
        for (std::size_t j = 0; j < prow.size(); ++j)
          prow[j] *= activate_grad(net.hidden_activation(), zrow[j]);
      }
      delta = std::move(prev);
    }
  }
  return grads;
}

OptimizerState OptimizerState::sgd(double lr, double momentum) {
  OptimizerState s;
  s.kind = OptimizerKind::sgd;
  s.learning_rate = lr;
  s.momentum = momentum;
  return s;
}

OptimizerState OptimizerState::adam(double lr) {
  OptimizerState s;
  s.kind = OptimizerKind::adam;
  s.learning_rate = lr;
  return s;
}

namespace {

void ensure_accumulators(OptimizerState& state, const FeedforwardNet& net, bool second_moment) {
  if (!state.weight_m.empty()) return;
  for (const auto& layer : net.layers()) {
    state.weight_m.emplace_back(layer.weight.rows(), layer.weight.cols());
    state.bias_m.emplace_back(layer.bias.size(), 0.0);
    if (second_moment) {
      state.weight_v.emplace_back(layer.weight.rows(), layer.weight.cols());
      state.bias_v.emplace_back(layer.bias.size(), 0.0);
    }
  }
}

void check_grad_shapes(const FeedforwardNet& net, const Gradients& grads) {
  const auto& layers = net.layers();
  if (grads.weight.size() != layers.size() || grads.bias.size() != layers.size())
    throw std::invalid_argument("gradient layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (grads.weight[l].rows() != layers[l].weight.rows() ||
        grads.weight[l].cols() != layers[l].weight.cols() ||
        grads.bias[l].size() != layers[l].bias.size())
      throw std::invalid_argument("gradient shape mismatch at layer " + std::to_string(l));
  }
}

}  // namespace

void optimizer_step(OptimizerState& state, FeedforwardNet& net, const Gradients& grads) {
  check_grad_shapes(net, grads);
  state.step_count += 1;
  auto& layers = net.layers();
  if (state.kind == OptimizerKind::sgd) {
    const bool use_momentum = state.momentum != 0.0;
    if (use_momentum) ensure_accumulators(state, net, false);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto& w = layers[l].weight.values();
      const auto& gw = grads.weight[l].values();
      if (use_momentum) {
        auto& mw = state.weight_m[l].values();
        for (std::size_t i = 0; i < w.size(); ++i) {
          mw[i] = state.momentum * mw[i] + gw[i];
          w[i] -= state.learning_rate * mw[i];
        }
        for (std::size_t i = 0; i < layers[l].bias.size(); ++i) {
          state.bias_m[l][i] = state.momentum * state.bias_m[l][i] + grads.bias[l][i];
          layers[l].bias[i] -= state.learning_rate * state.bias_m[l][i];
        }
      } else {
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= state.learning_rate * gw[i];
        for (std::size_t i = 0; i < layers[l].bias.size(); ++i)
          layers[l].bias[i] -= state.learning_rate * grads.bias[l][i];
      }
    }
    return;
  }
  // Adam, bias-corrected.
  ensure_accumulators(state, net, true);
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& w = layers[l].weight.values();
    const auto& gw = grads.weight[l].values();
    auto& mw = state.weight_m[l].values();
    auto& vw = state.weight_v[l].values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      mw[i] = state.beta1 * mw[i] + (1.0 - state.beta1) * gw[i];
      vw[i] = state.beta2 * vw[i] + (1.0 - state.beta2) * gw[i] * gw[i];
      const double mhat = mw[i] / c1;
      const double vhat = vw[i] / c2;
      w[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
    for (std::size_t i = 0; i < layers[l].bias.size(); ++i) {
      const double g = grads.bias[l][i];
      state.bias_m[l][i] = state.beta1 * state.bias_m[l][i] + (1.0 - state.beta1) * g;
      state.bias_v[l][i] = state.beta2 * state.bias_v[l][i] + (1.0 - state.beta2) * g * g;
      const double mhat = state.bias_m[l][i] / c1;
      const double vhat = state.bias_v[l][i] / c2;
      layers[l].bias[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

LossCurve train(FeedforwardNet& net, const LabeledData& train_data, const LabeledData& test_data,
                const TrainConfig& config) {
  if (train_data.size() == 0) throw std::invalid_argument("train: empty dataset");
  if (config.batch_size < 1 || config.epochs < 1)
    throw std::invalid_argument("train: batch_size and epochs must be >= 1");
  check_labels(train_data.labels, train_data.size(), net.class_count());
  check_labels(test_data.labels, test_data.size(), net.class_count());
  if (config.batch_size > train_data.size())
    std::fprintf(stderr, "warning: batch_size %zu exceeds dataset size %zu, using one full batch per epoch\n",
                 config.batch_size, train_data.size());

  Rng rng(config.seed);
  OptimizerState opt = config.optimizer == OptimizerKind::adam
                           ? OptimizerState::adam(config.learning_rate)
                           : OptimizerState::sgd(config.learning_rate, config.momentum);
  const std::size_t n = train_data.size();
  const std::size_t dim = train_data.samples.cols();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  LossCurve curve;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    std::vector<double> batch_losses;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, n - start);
      Matrix batch(count, dim);
      std::vector<int> labels(count);
      for (std::size_t i = 0; i < count; ++i) {
        const std::size_t src = order[start + i];
        std::copy_n(train_data.samples.row(src).data(), dim, batch.row(i).data());
        labels[i] = train_data.labels[src];
      }
      ForwardCache cache = forward(net, batch);
      batch_losses.push_back(cross_entropy(cache.probabilities, labels));
      Gradients grads = backward(net, cache, labels);
      optimizer_step(opt, net, grads);
    }
    // Five train-loss points per epoch: contiguous fifths of the batch
    // sequence, remainder joins the last fifth. With fewer than 5 batches
    // every point carries the epoch average.
    const std::size_t batches = batch_losses.size();
    const std::size_t fifth = batches / 5;
    for (std::size_t f = 0; f < 5; ++f) {
      double avg;
      if (fifth == 0) {
        avg = std::accumulate(batch_losses.begin(), batch_losses.end(), 0.0) /
              static_cast<double>(batches);
      } else {
        const std::size_t begin = f * fifth;
        const std::size_t end = (f == 4) ? batches : (f + 1) * fifth;
        avg = std::accumulate(batch_losses.begin() + static_cast<std::ptrdiff_t>(begin),
                              batch_losses.begin() + static_cast<std::ptrdiff_t>(end), 0.0) /
              static_cast<double>(end - begin);
      }
      curve.train_points.push_back({static_cast<double>(epoch) + (static_cast<double>(f) + 1.0) / 5.0, avg});
    }
    if (test_data.size() > 0) {
      ForwardCache cache = forward(net, test_data.samples);
      curve.test_points.push_back({static_cast<double>(epoch) + 1.0,
                                   cross_entropy(cache.probabilities, test_data.labels)});
    }
  }
  return curve;
}

double accuracy(const FeedforwardNet& net, const LabeledData& data) {
  if (data.size() == 0) return 0.0;
  ForwardCache cache = forward(net, data.samples);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = cache.probabilities.row(i);
    std::size_t arg = 0;
    for (std::size_t j = 1; j < row.size(); ++j)
      if (row[j] > row[arg]) arg = j;
    if (arg == static_cast<std::size_t>(data.labels[i])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

EmbeddingSet penultimate_embeddings(const FeedforwardNet& net, const LabeledData& samples) {
  if (net.layer_count() < 2)
    throw std::invalid_argument("penultimate_embeddings: net must have at least 2 layers");
  ForwardCache cache = forward(net, samples.samples);
  return {cache.activations.back(), samples.labels};
}

double value_sparsity(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  std::size_t zeros = 0;
  for (double v : m.values())
    if (v == 0.0) ++zeros;
  return static_cast<double>(zeros) / static_cast<double>(m.size());
}

Matrix input_gradient(const FeedforwardNet& net, const Matrix& sample, int label) {
  if (sample.rows() != 1) throw std::invalid_argument("input_gradient expects a single-row sample");
  ForwardCache cache = forward(net, sample);
  const std::vector<int> labels{label};
  check_labels(labels, 1, net.class_count());
  const auto& layers = net.layers();

  Matrix delta = cache.probabilities;
  delta.at(0, static_cast<std::size_t>(label)) -= 1.0;
  for (std::size_t l = layers.size(); l-- > 0;) {
    Matrix prev = matmul_a_bt(delta, layers[l].weight);
    if (l > 0) {
      const Matrix& z = cache.pre_activations[l - 1];
      for (std::size_t j = 0; j < prev.cols(); ++j)
        prev.at(0, j) *= activate_grad(net.hidden_activation(), z.at(0, j));
    }
    delta = std::move(prev);
  }
  return delta;
}

}  // namespace plotsteal
