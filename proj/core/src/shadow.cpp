#include "plotsteal/shadow.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "plotsteal/csv.hpp"
#include "plotsteal/hash.hpp"
#include "plotsteal/model_io.hpp"
#include "plotsteal/parallel.hpp"

namespace fs = std::filesystem;

namespace plotsteal {

void HyperparamPool::validate() const {
  if (activations.empty() || hidden_layer_counts.empty() || optimizers.empty() ||
      batch_sizes.empty())
    throw std::invalid_argument("hyperparameter pool has an empty candidate list");
  if (hidden_width == 0 || epochs == 0)
    throw std::invalid_argument("hyperparameter pool: hidden_width and epochs must be >= 1");
  for (std::size_t b : batch_sizes)
    if (b == 0) throw std::invalid_argument("hyperparameter pool: batch size 0");
}

std::string to_string(InferenceTargetKind k) {
  switch (k) {
    case InferenceTargetKind::activation: return "activation";
    case InferenceTargetKind::hidden_layer_count: return "hidden_layers";
    case InferenceTargetKind::optimizer: return "optimizer";
    case InferenceTargetKind::batch_size: return "batch_size";
  }
  throw std::logic_error("bad InferenceTargetKind");
}

InferenceTargetKind inference_target_from_string(const std::string& s) {
  if (s == "activation") return InferenceTargetKind::activation;
  if (s == "hidden_layers") return InferenceTargetKind::hidden_layer_count;
  if (s == "optimizer") return InferenceTargetKind::optimizer;
  if (s == "batch_size") return InferenceTargetKind::batch_size;
  throw std::invalid_argument("unknown inference target: " + s);
}

std::size_t candidate_count(InferenceTargetKind kind, const HyperparamPool& pool) {
  switch (kind) {
    case InferenceTargetKind::activation: return pool.activations.size();
    case InferenceTargetKind::hidden_layer_count: return pool.hidden_layer_counts.size();
    case InferenceTargetKind::optimizer: return pool.optimizers.size();
    case InferenceTargetKind::batch_size: return pool.batch_sizes.size();
  }
  throw std::logic_error("bad InferenceTargetKind");
}

namespace {
template <typename T>
std::size_t index_of(const std::vector<T>& candidates, const T& value, const char* what) {
  auto it = std::find(candidates.begin(), candidates.end(), value);
  if (it == candidates.end())
    throw std::invalid_argument(std::string("assignment value not in pool for ") + what);
  return static_cast<std::size_t>(it - candidates.begin());
}
}  // namespace

std::size_t value_index(const HyperparamAssignment& a, InferenceTargetKind kind,
                        const HyperparamPool& pool) {
  switch (kind) {
    case InferenceTargetKind::activation: return index_of(pool.activations, a.activation, "activation");
    case InferenceTargetKind::hidden_layer_count:
      return index_of(pool.hidden_layer_counts, a.hidden_layers, "hidden_layers");
    case InferenceTargetKind::optimizer: return index_of(pool.optimizers, a.optimizer, "optimizer");
    case InferenceTargetKind::batch_size: return index_of(pool.batch_sizes, a.batch_size, "batch_size");
  }
  throw std::logic_error("bad InferenceTargetKind");
}

std::string value_name(const HyperparamAssignment& a, InferenceTargetKind kind) {
  switch (kind) {
    case InferenceTargetKind::activation: return to_string(a.activation);
    case InferenceTargetKind::hidden_layer_count: return std::to_string(a.hidden_layers);
    case InferenceTargetKind::optimizer: return to_string(a.optimizer.kind);
    case InferenceTargetKind::batch_size: return std::to_string(a.batch_size);
  }
  throw std::logic_error("bad InferenceTargetKind");
}

bool same_except(const HyperparamAssignment& a, const HyperparamAssignment& b,
                 InferenceTargetKind kind) {
  HyperparamAssignment x = a, y = b;
  switch (kind) {
    case InferenceTargetKind::activation: x.activation = y.activation; break;
    case InferenceTargetKind::hidden_layer_count: x.hidden_layers = y.hidden_layers; break;
    case InferenceTargetKind::optimizer: x.optimizer = y.optimizer; break;
    case InferenceTargetKind::batch_size: x.batch_size = y.batch_size; break;
  }
  return x == y;
}

std::size_t agreement_count(const HyperparamAssignment& a, const HyperparamAssignment& b) {
  std::size_t n = 0;
  if (a.activation == b.activation) ++n;
  if (a.hidden_layers == b.hidden_layers) ++n;
  if (a.optimizer.kind == b.optimizer.kind) ++n;
  if (a.batch_size == b.batch_size) ++n;
  return n;
}

HyperparamAssignment sample_config(const HyperparamPool& pool, Rng& rng) {
  pool.validate();
  HyperparamAssignment a;
  a.activation = pool.activations[rng.uniform_index(pool.activations.size())];
  a.hidden_layers = pool.hidden_layer_counts[rng.uniform_index(pool.hidden_layer_counts.size())];
  a.optimizer = pool.optimizers[rng.uniform_index(pool.optimizers.size())];
  a.batch_size = pool.batch_sizes[rng.uniform_index(pool.batch_sizes.size())];
  return a;
}

std::string to_string(ModelRole role) { return role == ModelRole::shadow ? "shadow" : "target"; }

std::string ModelRecord::id() const {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%03zu", to_string(role).c_str(), index);
  return buf;
}

std::string format_assignment(const HyperparamAssignment& a) {
  std::ostringstream os;
  os << "activation=" << to_string(a.activation) << " hidden_layers=" << a.hidden_layers
     << " optimizer=" << to_string(a.optimizer.kind) << " lr=" << fmt_g17(a.optimizer.learning_rate)
     << " batch_size=" << a.batch_size;
  return os.str();
}

ModelRecord train_population_slot(const DatasetBundle& bundle, const HyperparamPool& pool,
                                  const PopulationParams& params, std::size_t slot) {
  pool.validate();
  const bool shadow = params.role == ModelRole::shadow;
  const LabeledData& train_split = bundle.train_split(shadow);
  const LabeledData& test_split = bundle.test_split(shadow);
  if (train_split.size() == 0 || test_split.size() == 0)
    throw std::invalid_argument("train_population: empty split");

  int max_label = 0;
  for (int l : train_split.labels) max_label = std::max(max_label, l);
  const std::size_t classes = static_cast<std::size_t>(max_label) + 1;
  const std::string role_tag = to_string(params.role);

  std::vector<std::string> slot_failures;
  for (std::size_t attempt = 0; attempt <= params.retry_factor; ++attempt) {
    const std::uint64_t key = (static_cast<std::uint64_t>(slot) << 8) | attempt;
    Rng config_rng(derive_seed(params.master_seed, "population-config-" + role_tag, key));
    const HyperparamAssignment assignment = sample_config(pool, config_rng);

    std::vector<std::size_t> dims;
    dims.push_back(train_split.samples.cols());
    for (std::size_t h = 0; h < assignment.hidden_layers; ++h) dims.push_back(pool.hidden_width);
    dims.push_back(classes);

    const std::uint64_t train_seed = derive_seed(params.master_seed, "population-train-" + role_tag, key);
    Rng init_rng(train_seed);
    FeedforwardNet net(dims, assignment.activation, init_rng);

    TrainConfig tc;
    tc.batch_size = assignment.batch_size;
    tc.epochs = pool.epochs;
    tc.seed = derive_seed(train_seed, "epochs");
    tc.optimizer = assignment.optimizer.kind;
    tc.learning_rate = assignment.optimizer.learning_rate;
    tc.momentum = assignment.optimizer.momentum;

    LossCurve curve = train(net, train_split, test_split, tc);
    const double acc = accuracy(net, test_split);
    if (acc >= params.filter_threshold) {
      ModelRecord rec;
      rec.net = std::move(net);
      rec.label = assignment;
      rec.role = params.role;
      rec.test_accuracy = acc;
      rec.loss_curve = std::move(curve);
      rec.seed = train_seed;
      rec.index = slot;
      return rec;
    }
    slot_failures.push_back("slot " + std::to_string(slot) + " attempt " + std::to_string(attempt) +
                            ": acc " + fmt_f6(acc) + " < " + fmt_f6(params.filter_threshold) +
                            " [" + format_assignment(assignment) + "]");
  }
  std::ostringstream os;
  os << "train_population: retry budget exhausted; failing configs:\n";
  for (const auto& f : slot_failures) os << "  " << f << "\n";
  throw std::runtime_error(os.str());
}

std::vector<ModelRecord> train_population(const DatasetBundle& bundle, const HyperparamPool& pool,
                                          const PopulationParams& params, std::size_t jobs) {
  if (params.count < 1) throw std::invalid_argument("train_population: count must be >= 1");
  std::vector<ModelRecord> records(params.count);
  parallel_for(params.count, jobs, [&](std::size_t slot) {
    records[slot] = train_population_slot(bundle, pool, params, slot);
  });
  return records;
}

std::string record_dirname(const ModelRecord& record) {
  std::uint64_t h = fnv1a64(to_string(record.role));
  h = fnv1a64(format_assignment(record.label), h);
  h = fnv1a64_u64(record.seed, h);
  h = fnv1a64_u64(record.index, h);
  return record.id() + "-" + to_hex(h);
}

void save_record(const ModelRecord& record, const std::string& dir) {
  fs::create_directories(dir);
  save_model(record.net, dir + "/net.bin");

  std::ofstream label(dir + "/label.txt");
  label << "activation=" << to_string(record.label.activation) << "\n"
        << "hidden_layers=" << record.label.hidden_layers << "\n"
        << "optimizer=" << to_string(record.label.optimizer.kind) << "\n"
        << "learning_rate=" << fmt_g17(record.label.optimizer.learning_rate) << "\n"
        << "momentum=" << fmt_g17(record.label.optimizer.momentum) << "\n"
        << "batch_size=" << record.label.batch_size << "\n";
  if (!label) throw std::runtime_error("cannot write " + dir + "/label.txt");

  std::ofstream curve(dir + "/losscurve.csv");
  curve << "timestamp,split,loss\n";
  for (const auto& p : record.loss_curve.train_points)
    curve << fmt_g17(p.timestamp) << ",train," << fmt_g17(p.loss) << "\n";
  for (const auto& p : record.loss_curve.test_points)
    curve << fmt_g17(p.timestamp) << ",test," << fmt_g17(p.loss) << "\n";
  if (!curve) throw std::runtime_error("cannot write " + dir + "/losscurve.csv");

  std::ofstream meta(dir + "/record.txt");
  meta << "role=" << to_string(record.role) << "\n"
       << "index=" << record.index << "\n"
       << "seed=" << record.seed << "\n"
       << "test_accuracy=" << fmt_g17(record.test_accuracy) << "\n";
  if (!meta) throw std::runtime_error("cannot write " + dir + "/record.txt");
}

namespace {

std::map<std::string, std::string> read_kv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

}  // namespace

ModelRecord load_record(const std::string& dir) {
  ModelRecord rec;
  rec.net = load_model(dir + "/net.bin");

  auto label = read_kv(dir + "/label.txt");
  rec.label.activation = activation_from_string(label.at("activation"));
  rec.label.hidden_layers = std::stoul(label.at("hidden_layers"));
  rec.label.optimizer.kind = optimizer_from_string(label.at("optimizer"));
  rec.label.optimizer.learning_rate = std::stod(label.at("learning_rate"));
  rec.label.optimizer.momentum = std::stod(label.at("momentum"));
  rec.label.batch_size = std::stoul(label.at("batch_size"));

  auto meta = read_kv(dir + "/record.txt");
  rec.role = meta.at("role") == "shadow" ? ModelRole::shadow : ModelRole::target;
  rec.index = std::stoul(meta.at("index"));
  rec.seed = std::stoull(meta.at("seed"));
  rec.test_accuracy = std::stod(meta.at("test_accuracy"));

  std::ifstream curve(dir + "/losscurve.csv");
  if (!curve) throw std::runtime_error("cannot read " + dir + "/losscurve.csv");
  std::string line;
  std::getline(curve, line);  // header
  while (std::getline(curve, line)) {
    std::istringstream ls(line);
    std::string ts, split, loss;
    if (!std::getline(ls, ts, ',') || !std::getline(ls, split, ',') || !std::getline(ls, loss))
      continue;
    LossPoint p{std::stod(ts), std::stod(loss)};
    if (split == "train")
      rec.loss_curve.train_points.push_back(p);
    else
      rec.loss_curve.test_points.push_back(p);
  }
  return rec;
}

}  // namespace plotsteal
