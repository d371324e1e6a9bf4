#pragma once

#include <array>
#include <cstdint>

#include "plotsteal/nn.hpp"

namespace plotsteal {

enum class SyntheticKind { blobs, rings };

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::blobs;
  std::size_t classes = 3;
  std::size_t dims = 16;
  std::size_t samples_per_class = 400;
  double dispersion = 0.35;
  std::uint64_t seed = 0;
};

// Gaussian blobs (or concentric rings) embedded in a seeded random 2-D
// subspace of the feature space; classes balanced; deterministic given seed.
LabeledData make_synthetic_dataset(const SyntheticSpec& spec);

// Four pairwise-disjoint labeled partitions.
struct DatasetBundle {
  LabeledData shadow_train;
  LabeledData shadow_test;
  LabeledData target_train;
  LabeledData target_test;

  const LabeledData& train_split(bool shadow) const { return shadow ? shadow_train : target_train; }
  const LabeledData& test_split(bool shadow) const { return shadow ? shadow_test : target_test; }
};

// Stratified split into shadow_train/shadow_test/target_train/target_test.
// fractions must sum to 1 +- 1e-9; each class lands in each partition within
// +-1 of its proportional count. Throws if any partition would lose a class.
DatasetBundle partition(const LabeledData& data, const std::array<double, 4>& fractions,
                        std::uint64_t seed);

}  // namespace plotsteal
