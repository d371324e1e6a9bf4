#include "plotsteal/attack.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "plotsteal/hash.hpp"

namespace plotsteal {

std::string to_string(PlotKind k) { return k == PlotKind::tsne ? "tsne" : "loss"; }

PlotKind plot_kind_from_string(const std::string& s) {
  if (s == "tsne") return PlotKind::tsne;
  if (s == "loss") return PlotKind::loss;
  throw std::invalid_argument("unknown plot kind: " + s);
}

std::size_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (std::size_t i = 0; i < classes; ++i) t += at(i, i);
  return t;
}

double ConfusionMatrix::accuracy() const {
  const std::size_t n = total();
  return n == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(n);
}

std::uint64_t tsne_defense_noise_seed(std::uint64_t base, const TsneDefense& defense,
                                      const std::string& model_id, std::size_t variant) {
  return derive_seed(base, defense.tag() + "/" + model_id, variant);
}

std::uint64_t loss_defense_noise_seed(std::uint64_t base, const LossDefense& defense,
                                      const std::string& model_id) {
  return derive_seed(base, defense.tag() + "/" + model_id, 0);
}

std::uint64_t defended_fit_seed(std::uint64_t layout_seed) {
  return derive_seed(layout_seed, "defended-fit");
}

std::vector<AttackSample> build_attack_dataset(std::span<const PlotSource> sources,
                                               const HyperparamPool& pool,
                                               const BuildOptions& options) {
  if (sources.empty()) throw std::invalid_argument("build_attack_dataset: no sources");

  std::vector<const PlotSource*> selected;
  for (const auto& src : sources) {
    if (options.mixed || same_except(src.label, options.fixed_assignment, options.target))
      selected.push_back(&src);
  }
  if (selected.empty())
    throw std::invalid_argument("fixed setting matches no records");

  std::set<std::size_t> classes_present;
  for (const auto* src : selected)
    classes_present.insert(value_index(src->label, options.target, pool));
  if (classes_present.size() < 2)
    throw std::invalid_argument("attack dataset covers fewer than 2 classes for target " +
                                to_string(options.target));

  std::vector<AttackSample> samples;
  for (const auto* src : selected) {
    const std::size_t label = value_index(src->label, options.target, pool);
    if (options.plot_kind == PlotKind::tsne) {
      if (src->layouts.empty()) throw std::invalid_argument("source has no layouts: " + src->model_id);
      const auto cached = src->defended_layouts.find(options.tsne_defense.tag());
      for (std::size_t v = 0; v < src->layouts.size(); ++v) {
        TsneLayout layout;
        if (cached != src->defended_layouts.end() && v < cached->second.size()) {
          layout = cached->second[v];
        } else {
          TsneConfig cfg = options.tsne_config;
          if (v < src->layout_seeds.size()) cfg.seed = defended_fit_seed(src->layout_seeds[v]);
          const std::uint64_t noise_seed =
              tsne_defense_noise_seed(options.defense_seed_base, options.tsne_defense,
                                      src->model_id, v);
          layout = apply_tsne_defense(options.tsne_defense, src->embeddings, src->layouts[v], cfg,
                                      noise_seed);
        }
        AttackSample sample;
        sample.raster = render_scatter(layout, options.render);
        sample.label = label;
        sample.model_id = src->model_id;
        sample.plot_kind = PlotKind::tsne;
        sample.defense_tag = options.tsne_defense.tag();
        samples.push_back(std::move(sample));
      }
    } else {
      const auto cached = src->defended_curves.find(options.loss_defense.tag());
      LossCurve curve;
      if (cached != src->defended_curves.end()) {
        curve = cached->second;
      } else {
        const std::uint64_t noise_seed =
            loss_defense_noise_seed(options.defense_seed_base, options.loss_defense, src->model_id);
        curve = apply_loss_defense(options.loss_defense, src->loss_curve, noise_seed);
      }
      AttackSample sample;
      sample.raster = to_grayscale(render_loss(curve, options.loss_render));
      sample.label = label;
      sample.model_id = src->model_id;
      sample.plot_kind = PlotKind::loss;
      sample.defense_tag = options.loss_defense.tag();
      samples.push_back(std::move(sample));
    }
  }
  return samples;
}

std::vector<double> raster_features(const PlotRaster& raster, std::size_t input_size) {
  PlotRaster gray = raster.channels == 3 ? to_grayscale(raster) : raster;
  PlotRaster small = downsample(gray, input_size, input_size);
  std::vector<double> features;
  features.reserve(small.pixels.size());
  // Invert so markers carry the mass and background is zero.
  for (std::uint8_t v : small.pixels) features.push_back((255.0 - v) / 255.0);
  return features;
}

namespace {

struct FeatureDataset {
  Matrix x;
  std::vector<int> y;
  std::vector<std::string> groups;  // source model per row
};

FeatureDataset extract_features(const std::vector<AttackSample>& samples, std::size_t input_size) {
  FeatureDataset ds;
  const std::size_t dim = input_size * input_size;
  ds.x = Matrix(samples.size(), dim);
  ds.y.resize(samples.size());
  ds.groups.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto f = raster_features(samples[i].raster, input_size);
    std::copy(f.begin(), f.end(), ds.x.row(i).data());
    ds.y[i] = static_cast<int>(samples[i].label);
    ds.groups.push_back(samples[i].model_id);
  }
  return ds;
}

LabeledData subset(const FeatureDataset& ds, const std::vector<std::size_t>& rows) {
  LabeledData out;
  out.samples = Matrix(rows.size(), ds.x.cols());
  out.labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(ds.x.row(rows[i]).data(), ds.x.cols(), out.samples.row(i).data());
    out.labels[i] = ds.y[rows[i]];
  }
  return out;
}

// Trains an MLP classifier on the dataset with a group-wise validation split
// and returns the best-validation snapshot.
AttackModel train_feature_classifier(const FeatureDataset& ds, std::size_t classes,
                                     const AttackTrainConfig& config) {
  if (classes < 2) throw std::invalid_argument("attack model needs >= 2 classes");
  if (ds.x.rows() == 0) throw std::invalid_argument("attack model: empty dataset");
  for (int label : ds.y)
    if (label < 0 || static_cast<std::size_t>(label) >= classes)
      throw std::invalid_argument("attack label out of range");

  // Group-wise split: a model's plots never straddle train/validation.
  std::vector<std::string> ids(ds.groups);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  Rng split_rng(derive_seed(config.seed, "val-split"));
  split_rng.shuffle(ids);
  const auto val_groups = static_cast<std::size_t>(
      std::floor(config.val_fraction * static_cast<double>(ids.size())));
  std::set<std::string> val_set(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(val_groups));

  std::vector<std::size_t> train_rows, val_rows;
  for (std::size_t i = 0; i < ds.x.rows(); ++i)
    (val_set.count(ds.groups[i]) ? val_rows : train_rows).push_back(i);
  if (train_rows.empty()) throw std::invalid_argument("attack model: empty training split");

  LabeledData train_data = subset(ds, train_rows);
  LabeledData val_data = subset(ds, val_rows);

  std::vector<std::size_t> dims;
  dims.push_back(ds.x.cols());
  for (std::size_t h : config.hidden) dims.push_back(h);
  dims.push_back(classes);
  Rng init_rng(derive_seed(config.seed, "attack-init"));
  FeedforwardNet net(dims, ActivationKind::relu, init_rng);

  OptimizerState opt = config.optimizer == OptimizerKind::adam
                           ? OptimizerState::adam(config.learning_rate)
                           : OptimizerState::sgd(config.learning_rate, config.momentum);
  Rng shuffle_rng(derive_seed(config.seed, "attack-shuffle"));
  std::vector<std::size_t> order(train_data.size());
  std::iota(order.begin(), order.end(), 0);

  FeedforwardNet best = net;
  double best_val = val_data.size() ? accuracy(net, val_data) : 0.0;
  const std::size_t dim = train_data.samples.cols();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - start);
      Matrix batch(count, dim);
      std::vector<int> labels(count);
      for (std::size_t i = 0; i < count; ++i) {
        std::copy_n(train_data.samples.row(order[start + i]).data(), dim, batch.row(i).data());
        labels[i] = train_data.labels[order[start + i]];
      }
      ForwardCache cache = forward(net, batch);
      Gradients grads = backward(net, cache, labels);
      optimizer_step(opt, net, grads);
    }
    if (val_data.size()) {
      const double val_acc = accuracy(net, val_data);
      if (val_acc > best_val) {
        best_val = val_acc;
        best = net;
      }
    }
  }
  AttackModel model;
  model.net = val_data.size() ? std::move(best) : std::move(net);
  model.input_size = config.input_size;
  model.classes = classes;
  model.val_accuracy = best_val;
  std::sort(ids.begin(), ids.end());  // evaluate_attack binary-searches these
  model.training_model_ids = std::move(ids);
  return model;
}

}  // namespace

AttackModel train_attack_model(const std::vector<AttackSample>& dataset, std::size_t classes,
                               const AttackTrainConfig& config) {
  for (const auto& s : dataset)
    if (s.model_id.rfind("target", 0) == 0)
      throw std::runtime_error("provenance violation: target-model plot in attack training (" +
                               s.model_id + ")");
  std::set<std::size_t> present;
  for (const auto& s : dataset) present.insert(s.label);
  if (present.size() < 2)
    throw std::invalid_argument("attack training set covers fewer than 2 classes");
  return train_feature_classifier(extract_features(dataset, config.input_size), classes, config);
}

std::size_t predict(const AttackModel& model, const PlotRaster& raster) {
  const auto f = raster_features(raster, model.input_size);
  Matrix x(1, f.size());
  std::copy(f.begin(), f.end(), x.row(0).data());
  ForwardCache cache = forward(model.net, x);
  const auto row = cache.probabilities.row(0);
  std::size_t arg = 0;
  for (std::size_t j = 1; j < row.size(); ++j)
    if (row[j] > row[arg]) arg = j;
  return arg;
}

std::pair<double, ConfusionMatrix> evaluate_attack(const AttackModel& model,
                                                   const std::vector<AttackSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("evaluate_attack: no samples");
  for (const auto& s : samples)
    if (std::binary_search(model.training_model_ids.begin(), model.training_model_ids.end(),
                           s.model_id))
      throw std::runtime_error("evaluation sample " + s.model_id + " was used in training");
  ConfusionMatrix confusion(model.classes);
  for (const auto& s : samples) {
    if (s.label >= model.classes) throw std::invalid_argument("evaluation label out of range");
    confusion.add(s.label, predict(model, s.raster));
  }
  return {confusion.accuracy(), confusion};
}

AttackModel adaptive_train(const std::vector<AttackSample>& original,
                           const std::vector<std::vector<AttackSample>>& defended,
                           std::size_t classes, const AttackTrainConfig& config) {
  auto check_labels = [classes](const std::vector<AttackSample>& part) {
    for (const auto& s : part)
      if (s.label >= classes)
        throw std::invalid_argument("adaptive_train: label space mismatch across datasets");
  };
  check_labels(original);
  std::vector<AttackSample> all(original);
  for (const auto& part : defended) {
    check_labels(part);
    all.insert(all.end(), part.begin(), part.end());
  }
  return train_attack_model(all, classes, config);
}

std::vector<AttackSample> shuffle_labels(const std::vector<AttackSample>& samples,
                                         std::uint64_t seed) {
  std::vector<std::size_t> labels;
  labels.reserve(samples.size());
  for (const auto& s : samples) labels.push_back(s.label);
  Rng rng(derive_seed(seed, "label-shuffle"));
  rng.shuffle(labels);
  std::vector<AttackSample> out(samples);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].label = labels[i];
  return out;
}

std::vector<double> query_features(const FeedforwardNet& net, const Matrix& queries,
                                   bool posterior_mode) {
  ForwardCache cache = forward(net, queries);
  std::vector<double> features;
  features.reserve(cache.probabilities.size());
  for (std::size_t i = 0; i < cache.probabilities.rows(); ++i) {
    const auto row = cache.probabilities.row(i);
    if (posterior_mode) {
      features.insert(features.end(), row.begin(), row.end());
    } else {
      std::size_t arg = 0;
      for (std::size_t j = 1; j < row.size(); ++j)
        if (row[j] > row[arg]) arg = j;
      for (std::size_t j = 0; j < row.size(); ++j) features.push_back(j == arg ? 1.0 : 0.0);
    }
  }
  return features;
}

QueryBaselineResult query_baseline(const std::vector<ModelRecord>& shadows,
                                   const std::vector<ModelRecord>& targets,
                                   const LabeledData& query_pool, InferenceTargetKind target,
                                   const HyperparamPool& pool, const QueryBaselineConfig& config) {
  if (shadows.empty() || targets.empty())
    throw std::invalid_argument("query_baseline: empty population");
  if (query_pool.size() == 0) throw std::invalid_argument("query_baseline: empty query pool");

  // One fixed query set, identical across all models.
  std::vector<std::size_t> indices(query_pool.size());
  std::iota(indices.begin(), indices.end(), 0);
  Rng rng(derive_seed(config.seed, "query-set"));
  rng.shuffle(indices);
  const std::size_t m = std::min(config.query_count, indices.size());
  Matrix queries(m, query_pool.samples.cols());
  for (std::size_t i = 0; i < m; ++i)
    std::copy_n(query_pool.samples.row(indices[i]).data(), query_pool.samples.cols(),
                queries.row(i).data());

  const std::size_t classes = candidate_count(target, pool);
  auto to_dataset = [&](const std::vector<ModelRecord>& records) {
    FeatureDataset ds;
    const std::size_t dim = m * records.front().net.class_count();
    ds.x = Matrix(records.size(), dim);
    ds.y.resize(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto f = query_features(records[i].net, queries, config.posterior_mode);
      if (f.size() != dim) throw std::invalid_argument("query_baseline: inconsistent class counts");
      std::copy(f.begin(), f.end(), ds.x.row(i).data());
      ds.y[i] = static_cast<int>(value_index(records[i].label, target, pool));
      ds.groups.push_back(records[i].id());
    }
    return ds;
  };

  FeatureDataset shadow_ds = to_dataset(shadows);
  AttackTrainConfig tc;
  tc.input_size = 0;  // features are already vectors
  tc.hidden = config.hidden;
  tc.epochs = config.epochs;
  tc.batch_size = config.batch_size;
  tc.learning_rate = config.learning_rate;
  tc.optimizer = OptimizerKind::sgd;
  tc.momentum = config.momentum;
  tc.val_fraction = 0.0;  // small populations: train on everything
  tc.seed = config.seed;
  AttackModel model = train_feature_classifier(shadow_ds, classes, tc);

  FeatureDataset target_ds = to_dataset(targets);
  QueryBaselineResult result;
  result.feature_dim = shadow_ds.x.cols();
  result.confusion = ConfusionMatrix(classes);
  for (std::size_t i = 0; i < target_ds.x.rows(); ++i) {
    Matrix x(1, target_ds.x.cols());
    std::copy_n(target_ds.x.row(i).data(), target_ds.x.cols(), x.row(0).data());
    ForwardCache cache = forward(model.net, x);
    const auto row = cache.probabilities.row(0);
    std::size_t arg = 0;
    for (std::size_t j = 1; j < row.size(); ++j)
      if (row[j] > row[arg]) arg = j;
    result.confusion.add(static_cast<std::size_t>(target_ds.y[i]), arg);
  }
  result.accuracy = result.confusion.accuracy();
  return result;
}

}  // namespace plotsteal
