#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "plotsteal/defense.hpp"
#include "plotsteal/raster.hpp"
#include "plotsteal/shadow.hpp"
#include "plotsteal/tsne.hpp"

namespace plotsteal {

enum class PlotKind { tsne, loss };

std::string to_string(PlotKind k);
PlotKind plot_kind_from_string(const std::string& s);

// One labeled plot image plus its provenance.
struct AttackSample {
  PlotRaster raster;
  std::size_t label = 0;  // index into the target's candidate list
  std::string model_id;
  PlotKind plot_kind = PlotKind::tsne;
  std::string defense_tag = "none";
};

struct ConfusionMatrix {
  std::size_t classes = 0;
  std::vector<std::size_t> counts;  // rows = true, cols = predicted

  explicit ConfusionMatrix(std::size_t k = 0) : classes(k), counts(k * k, 0) {}
  void add(std::size_t truth, std::size_t predicted) { counts[truth * classes + predicted] += 1; }
  std::size_t at(std::size_t truth, std::size_t predicted) const {
    return counts[truth * classes + predicted];
  }
  std::size_t total() const;
  std::size_t trace() const;
  double accuracy() const;
};

// Everything needed to materialize one model's plots. Defended layouts and
// curves may be precomputed (the defend stage persists them); when absent the
// dataset builder derives them on the fly with the same seeds.
struct PlotSource {
  std::string model_id;
  ModelRole role = ModelRole::shadow;
  HyperparamAssignment label;
  EmbeddingSet embeddings;                  // t-SNE input (embedding defenses refit from here)
  std::vector<TsneLayout> layouts;          // undefended fits, one per plot variant
  std::vector<std::uint64_t> layout_seeds;  // fit seed per layout
  LossCurve loss_curve;
  std::map<std::string, std::vector<TsneLayout>> defended_layouts;  // defense tag -> variants
  std::map<std::string, LossCurve> defended_curves;                 // defense tag -> curve
};

// Seed plumbing shared by the dataset builder and the defend stage, so a
// defended plot is identical no matter which path produced it.
std::uint64_t tsne_defense_noise_seed(std::uint64_t base, const TsneDefense& defense,
                                      const std::string& model_id, std::size_t variant);
std::uint64_t loss_defense_noise_seed(std::uint64_t base, const LossDefense& defense,
                                      const std::string& model_id);
std::uint64_t defended_fit_seed(std::uint64_t layout_seed);

struct BuildOptions {
  PlotKind plot_kind = PlotKind::tsne;
  InferenceTargetKind target = InferenceTargetKind::optimizer;
  bool mixed = true;
  HyperparamAssignment fixed_assignment;  // non-target axes, used when !mixed
  TsneDefense tsne_defense;
  LossDefense loss_defense;
  TsneConfig tsne_config;  // for embedding-stage defended refits
  RenderConfig render;
  LossPlotConfig loss_render;
  std::uint64_t defense_seed_base = 0;
};

// Labels every source's plots with its value for the inference target and
// applies the configured defense (embedding-stage defenses before the refit,
// coordinate/curve defenses after). The fixed setting filters to sources
// whose non-target hyperparameters equal the fixed assignment and requires
// at least 2 represented classes.
std::vector<AttackSample> build_attack_dataset(std::span<const PlotSource> sources,
                                               const HyperparamPool& pool,
                                               const BuildOptions& options);

struct AttackTrainConfig {
  std::size_t input_size = 32;  // rasters are grayscaled + box-filtered to input_size^2
  std::vector<std::size_t> hidden{256, 256};
  std::size_t epochs = 150;
  std::size_t batch_size = 16;
  double learning_rate = 0.001;
  OptimizerKind optimizer = OptimizerKind::adam;
  double momentum = 0.0;
  double val_fraction = 0.2;  // split by model id, never by plot
  std::uint64_t seed = 0;
};

struct AttackModel {
  FeedforwardNet net;
  std::size_t input_size = 32;
  std::size_t classes = 2;
  double val_accuracy = 0.0;
  std::vector<std::string> training_model_ids;  // for provenance checks
};

// Flatten + invert + scale to [0,1]; shared by training and inference.
std::vector<double> raster_features(const PlotRaster& raster, std::size_t input_size);

// Trains the plot classifier on shadow-model plots. Hard error if any sample
// originates from a target model. Keeps the best-validation snapshot.
AttackModel train_attack_model(const std::vector<AttackSample>& dataset, std::size_t classes,
                               const AttackTrainConfig& config);

std::size_t predict(const AttackModel& model, const PlotRaster& raster);

// Accuracy and confusion matrix over held-out samples. Hard error if any
// evaluated model id was part of attack-model training.
std::pair<double, ConfusionMatrix> evaluate_attack(const AttackModel& model,
                                                   const std::vector<AttackSample>& samples);

// Adaptive attacker: single model trained on the concatenation of the
// original dataset and its defended variants. All parts must share the label
// space.
AttackModel adaptive_train(const std::vector<AttackSample>& original,
                           const std::vector<std::vector<AttackSample>>& defended,
                           std::size_t classes, const AttackTrainConfig& config);

// Permutes labels across samples; the shuffled-label sanity control.
std::vector<AttackSample> shuffle_labels(const std::vector<AttackSample>& samples,
                                         std::uint64_t seed);

struct QueryBaselineConfig {
  std::size_t query_count = 100;
  bool posterior_mode = true;  // false: one-hot argmax responses only
  std::vector<std::size_t> hidden{256, 256};
  std::size_t epochs = 100;
  std::size_t batch_size = 16;
  double learning_rate = 0.001;
  double momentum = 0.9;
  std::uint64_t seed = 0;
};

struct QueryBaselineResult {
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  std::size_t feature_dim = 0;
};

// Query-based stealing baseline: a fixed query set is sampled once from the
// shadow-test split; every model answers the same queries; the concatenated
// posteriors (or one-hot labels) feed an MLP trained on shadow models and
// evaluated on target models.
QueryBaselineResult query_baseline(const std::vector<ModelRecord>& shadows,
                                   const std::vector<ModelRecord>& targets,
                                   const LabeledData& query_pool, InferenceTargetKind target,
                                   const HyperparamPool& pool, const QueryBaselineConfig& config);

// Concatenated class-probability responses for one model on the query set.
std::vector<double> query_features(const FeedforwardNet& net, const Matrix& queries,
                                   bool posterior_mode);

}  // namespace plotsteal
