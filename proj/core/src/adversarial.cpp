#include "plotsteal/adversarial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "plotsteal/hash.hpp"

namespace plotsteal {

std::string to_string(SurrogateSelection s) {
  switch (s) {
    case SurrogateSelection::white_box: return "white_box";
    case SurrogateSelection::inferred: return "inferred";
    case SurrogateSelection::random: return "random";
  }
  throw std::logic_error("bad SurrogateSelection");
}

Matrix fgsm(const FeedforwardNet& net, const Matrix& sample, int label, double eps,
            std::span<const double> clamp_lo, std::span<const double> clamp_hi) {
  if (eps <= 0.0) throw std::invalid_argument("fgsm: eps must be > 0");
  const Matrix grad = input_gradient(net, sample, label);
  Matrix adv = sample;
  for (std::size_t j = 0; j < adv.cols(); ++j) {
    const double g = grad.at(0, j);
    double v = adv.at(0, j);
    if (g > 0.0)
      v += eps;
    else if (g < 0.0)
      v -= eps;
    if (!clamp_lo.empty()) v = std::max(v, clamp_lo[j]);
    if (!clamp_hi.empty()) v = std::min(v, clamp_hi[j]);
    adv.at(0, j) = v;
  }
  return adv;
}

namespace {

std::size_t axis_agreement(const HyperparamAssignment& a, const HyperparamAssignment& b,
                           std::span<const InferenceTargetKind> axes) {
  if (axes.empty()) return agreement_count(a, b);
  std::size_t n = 0;
  for (InferenceTargetKind axis : axes) {
    switch (axis) {
      case InferenceTargetKind::activation: n += a.activation == b.activation; break;
      case InferenceTargetKind::hidden_layer_count: n += a.hidden_layers == b.hidden_layers; break;
      case InferenceTargetKind::optimizer: n += a.optimizer.kind == b.optimizer.kind; break;
      case InferenceTargetKind::batch_size: n += a.batch_size == b.batch_size; break;
    }
  }
  return n;
}

}  // namespace

SurrogatePick select_surrogate(const std::vector<ModelRecord>& shadows,
                               const HyperparamAssignment& inferred,
                               std::span<const InferenceTargetKind> matched_axes,
                               SurrogateSelection mode, Rng& rng) {
  if (shadows.empty()) throw std::invalid_argument("select_surrogate: no shadow records");
  const std::size_t full = matched_axes.empty() ? 4 : matched_axes.size();
  SurrogatePick pick;
  switch (mode) {
    case SurrogateSelection::white_box:
      return pick;
    case SurrogateSelection::random:
      pick.shadow_index = static_cast<std::size_t>(rng.uniform_index(shadows.size()));
      return pick;
    case SurrogateSelection::inferred: {
      std::vector<std::size_t> matches;
      for (std::size_t i = 0; i < shadows.size(); ++i)
        if (axis_agreement(shadows[i].label, inferred, matched_axes) == full) matches.push_back(i);
      if (matches.empty()) {
        // Nearest match by count of agreeing hyperparameters.
        pick.exact_match = false;
        std::size_t best_agreement = 0;
        for (std::size_t i = 0; i < shadows.size(); ++i)
          best_agreement =
              std::max(best_agreement, axis_agreement(shadows[i].label, inferred, matched_axes));
        for (std::size_t i = 0; i < shadows.size(); ++i)
          if (axis_agreement(shadows[i].label, inferred, matched_axes) == best_agreement)
            matches.push_back(i);
      }
      pick.shadow_index = matches[rng.uniform_index(matches.size())];
      return pick;
    }
  }
  throw std::logic_error("bad SurrogateSelection");
}

void observed_range(const LabeledData& data, std::vector<double>& lo, std::vector<double>& hi) {
  const std::size_t dims = data.samples.cols();
  lo.assign(dims, 0.0);
  hi.assign(dims, 0.0);
  for (std::size_t j = 0; j < dims; ++j) {
    lo[j] = hi[j] = data.samples.at(0, j);
    for (std::size_t i = 1; i < data.samples.rows(); ++i) {
      lo[j] = std::min(lo[j], data.samples.at(i, j));
      hi[j] = std::max(hi[j], data.samples.at(i, j));
    }
  }
}

std::vector<TransferResult> transfer_eval(const FeedforwardNet& target,
                                          const FeedforwardNet& surrogate,
                                          const LabeledData& samples, const AdvConfig& config,
                                          std::uint64_t seed) {
  if (samples.size() == 0) throw std::invalid_argument("transfer_eval: no samples");
  for (double eps : config.epsilons)
    if (eps <= 0.0) throw std::invalid_argument("transfer_eval: epsilons must be > 0");

  // Pre-filter to samples the target classifies correctly, so the rate
  // measures the attack's effect; the unfiltered rate is reported alongside.
  std::vector<std::size_t> correct;
  ForwardCache cache = forward(target, samples.samples);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto row = cache.probabilities.row(i);
    std::size_t arg = 0;
    for (std::size_t j = 1; j < row.size(); ++j)
      if (row[j] > row[arg]) arg = j;
    if (arg == static_cast<std::size_t>(samples.labels[i])) correct.push_back(i);
  }
  if (correct.empty()) throw std::runtime_error("transfer_eval: target classifies nothing correctly");

  Rng rng(derive_seed(seed, "transfer-sample"));
  rng.shuffle(correct);
  const std::size_t n = std::min(config.sample_count, correct.size());

  const std::size_t dims = samples.samples.cols();
  std::vector<TransferResult> results;
  for (double eps : config.epsilons) {
    std::size_t fooled = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t idx = correct[k];
      Matrix x(1, dims);
      std::copy_n(samples.samples.row(idx).data(), dims, x.row(0).data());
      const int label = samples.labels[idx];
      const Matrix adv = fgsm(surrogate, x, label, eps, config.clamp_lo, config.clamp_hi);
      ForwardCache out = forward(target, adv);
      const auto row = out.probabilities.row(0);
      std::size_t arg = 0;
      for (std::size_t j = 1; j < row.size(); ++j)
        if (row[j] > row[arg]) arg = j;
      if (arg != static_cast<std::size_t>(label)) ++fooled;
    }
    TransferResult r;
    r.epsilon = eps;
    r.sample_count = n;
    r.misclassification_rate = static_cast<double>(fooled) / static_cast<double>(n);
    // Unfiltered view: originally misclassified samples count as successes.
    const std::size_t originally_wrong = samples.size() - correct.size();
    const double scaled = static_cast<double>(fooled) *
                          (static_cast<double>(correct.size()) / static_cast<double>(n));
    r.unfiltered_rate = (scaled + static_cast<double>(originally_wrong)) /
                        static_cast<double>(samples.size());
    results.push_back(r);
  }
  return results;
}

}  // namespace plotsteal
