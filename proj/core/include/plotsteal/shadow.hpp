#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plotsteal/dataset.hpp"
#include "plotsteal/nn.hpp"

namespace plotsteal {

struct OptimizerChoice {
  OptimizerKind kind = OptimizerKind::sgd;
  double learning_rate = 0.01;
  double momentum = 0.0;

  bool operator==(const OptimizerChoice&) const = default;
};

// Finite candidate lists, fixed for a whole experiment.
struct HyperparamPool {
  std::vector<ActivationKind> activations{ActivationKind::relu, ActivationKind::elu,
                                          ActivationKind::tanh};
  std::vector<std::size_t> hidden_layer_counts{2, 3, 4};
  std::vector<OptimizerChoice> optimizers{{OptimizerKind::adam, 0.005, 0.0},
                                          {OptimizerKind::sgd, 0.05, 0.0}};
  std::vector<std::size_t> batch_sizes{16, 32, 64, 128};
  std::size_t hidden_width = 32;
  std::size_t epochs = 10;

  void validate() const;
};

struct HyperparamAssignment {
  ActivationKind activation = ActivationKind::relu;
  std::size_t hidden_layers = 2;
  OptimizerChoice optimizer;
  std::size_t batch_size = 32;

  bool operator==(const HyperparamAssignment&) const = default;
};

// The hyperparameter axes an attack can target.
enum class InferenceTargetKind { activation, hidden_layer_count, optimizer, batch_size };

std::string to_string(InferenceTargetKind k);
InferenceTargetKind inference_target_from_string(const std::string& s);

std::size_t candidate_count(InferenceTargetKind kind, const HyperparamPool& pool);
// Index of the assignment's value in the pool's candidate list for that axis.
std::size_t value_index(const HyperparamAssignment& a, InferenceTargetKind kind,
                        const HyperparamPool& pool);
std::string value_name(const HyperparamAssignment& a, InferenceTargetKind kind);
// True when a and b agree on every axis except `kind`.
bool same_except(const HyperparamAssignment& a, const HyperparamAssignment& b,
                 InferenceTargetKind kind);
std::size_t agreement_count(const HyperparamAssignment& a, const HyperparamAssignment& b);

// Each field drawn independently and uniformly from its candidate list.
HyperparamAssignment sample_config(const HyperparamPool& pool, Rng& rng);

enum class ModelRole { shadow, target };

std::string to_string(ModelRole role);

struct ModelRecord {
  FeedforwardNet net;
  HyperparamAssignment label;
  ModelRole role = ModelRole::shadow;
  double test_accuracy = 0.0;
  LossCurve loss_curve;
  std::uint64_t seed = 0;
  std::size_t index = 0;

  std::string id() const;
};

struct PopulationParams {
  std::size_t count = 1;
  ModelRole role = ModelRole::shadow;
  double filter_threshold = 0.5;
  // Extra attempts allowed per slot; total retries stay <= retry_factor*count.
  std::size_t retry_factor = 3;
  std::uint64_t master_seed = 0;
};

// Trains `count` models on the role's train split with independently sampled
// configs, discarding and resampling any whose test accuracy falls below the
// filter threshold. Deterministic given the master seed; results ordered by
// model index. Throws when a slot exhausts its retry budget, listing the
// failing configs.
std::vector<ModelRecord> train_population(const DatasetBundle& bundle, const HyperparamPool& pool,
                                          const PopulationParams& params, std::size_t jobs = 1);

// One population slot in isolation; identical result to that slot within a
// full train_population run, which makes targeted rebuilds possible.
ModelRecord train_population_slot(const DatasetBundle& bundle, const HyperparamPool& pool,
                                  const PopulationParams& params, std::size_t slot);

// On-disk record layout: <dir>/net.bin, label.txt (key-value),
// losscurve.csv (timestamp,split,loss), record.txt.
std::string record_dirname(const ModelRecord& record);
void save_record(const ModelRecord& record, const std::string& dir);
ModelRecord load_record(const std::string& dir);

std::string format_assignment(const HyperparamAssignment& a);

}  // namespace plotsteal
