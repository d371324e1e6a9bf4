#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "plotsteal/nn.hpp"
#include "plotsteal/shadow.hpp"

namespace plotsteal {

struct AdvConfig {
  std::vector<double> epsilons{0.1, 0.2, 0.3};
  std::size_t sample_count = 100;
  // Per-feature clamp range, observed from the data.
  std::vector<double> clamp_lo, clamp_hi;
};

enum class SurrogateSelection { white_box, inferred, random };

std::string to_string(SurrogateSelection s);

// x' = x + eps * sign(grad_x loss), clamped per feature. Features with an
// exactly zero gradient stay untouched.
Matrix fgsm(const FeedforwardNet& net, const Matrix& sample, int label, double eps,
            std::span<const double> clamp_lo, std::span<const double> clamp_hi);

struct SurrogatePick {
  std::size_t shadow_index = 0;  // meaningless in white_box mode
  bool exact_match = true;       // false when the nearest-match fallback fired
};

// white_box: the target itself; inferred: a uniformly random shadow matching
// the inferred assignment on `matched_axes` (all four axes when empty), with
// a nearest-match fallback by agreeing-axis count when no exact match exists;
// random: a uniformly random shadow.
SurrogatePick select_surrogate(const std::vector<ModelRecord>& shadows,
                               const HyperparamAssignment& inferred,
                               std::span<const InferenceTargetKind> matched_axes,
                               SurrogateSelection mode, Rng& rng);

struct TransferResult {
  double epsilon = 0.0;
  double misclassification_rate = 0.0;  // on samples the target classified correctly
  double unfiltered_rate = 0.0;         // over all attacked samples
  std::size_t sample_count = 0;
};

// Crafts FGSM examples on the surrogate from target-test samples the target
// classifies correctly and measures the target's misclassification rate per
// epsilon.
std::vector<TransferResult> transfer_eval(const FeedforwardNet& target,
                                          const FeedforwardNet& surrogate,
                                          const LabeledData& samples, const AdvConfig& config,
                                          std::uint64_t seed);

// Observed per-dimension min/max of a dataset, the FGSM clamp range.
void observed_range(const LabeledData& data, std::vector<double>& lo, std::vector<double>& hi);

}  // namespace plotsteal
