#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "plotsteal/adversarial.hpp"
#include "plotsteal/attack.hpp"
#include "plotsteal/dataset.hpp"
#include "plotsteal/defense.hpp"
#include "plotsteal/raster.hpp"
#include "plotsteal/shadow.hpp"
#include "plotsteal/tsne.hpp"

namespace plotsteal {

// Full experiment description. Seeds for individual steps are derived from
// master_seed at run time; out_dir and jobs do not participate in the config
// hash.
struct ExperimentConfig {
  // dataset
  SyntheticSpec dataset;
  std::array<double, 4> fractions{0.25, 0.25, 0.25, 0.25};

  // populations
  HyperparamPool pool;
  std::size_t shadow_count = 60;
  std::size_t target_count = 15;
  double filter_threshold = 0.5;
  std::size_t retry_factor = 3;

  // t-SNE
  TsneConfig tsne;
  std::size_t tsne_samples = 240;
  std::size_t plots_per_model = 1;

  // rendering
  RenderConfig render;
  LossPlotConfig loss_render;
  bool loss_axes_with = true;
  bool loss_axes_without = true;

  // attack
  AttackTrainConfig attack;
  std::size_t repetitions = 10;
  std::vector<InferenceTargetKind> targets{InferenceTargetKind::optimizer};
  bool setting_mixed = true;
  bool setting_fixed = false;
  HyperparamAssignment fixed_assignment;
  bool attack_tsne = true;
  bool attack_loss = true;

  // defenses
  std::vector<TsneDefense> tsne_defenses;
  std::vector<LossDefense> loss_defenses;
  std::vector<TsneDefense> adaptive_tsne;
  std::vector<LossDefense> adaptive_loss;

  // utility metrics
  std::size_t knn_k = 5;

  // query baseline
  bool query_enabled = true;
  QueryBaselineConfig query;

  // downstream adversarial examples
  bool downstream_enabled = true;
  std::vector<double> downstream_epsilons{0.1, 0.2, 0.3};
  std::size_t downstream_samples = 120;
  std::size_t downstream_repetitions = 5;
  std::vector<InferenceTargetKind> downstream_infer{
      InferenceTargetKind::optimizer, InferenceTargetKind::activation,
      InferenceTargetKind::hidden_layer_count};

  // run
  std::uint64_t master_seed = 42;
  std::string out_dir = "out";
  std::size_t jobs = 4;

  // Parses .ini-style key/value sections, or JSON when the file ends in
  // .json or starts with '{'. Throws std::runtime_error listing every
  // offending field on validation failure.
  static ExperimentConfig load_file(const std::string& path);
  static ExperimentConfig parse(const std::string& text, bool json);

  // Canonical key=value dump of every hash-relevant field, sorted.
  std::string canonical() const;
  std::uint64_t config_hash() const;
  std::string config_hash_hex() const;

  void validate() const;
};

}  // namespace plotsteal
