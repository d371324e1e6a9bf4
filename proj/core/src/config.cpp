#include "plotsteal/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "plotsteal/csv.hpp"
#include "plotsteal/hash.hpp"

#include <json.hpp>

namespace plotsteal {

namespace {

using SectionMap = std::map<std::string, std::map<std::string, std::string>>;

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::istringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

SectionMap parse_ini_sections(const std::string& text) {
  SectionMap sections;
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
    sections[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return sections;
}

SectionMap parse_json_sections(const std::string& text) {
  const nlohmann::json root = nlohmann::json::parse(text);
  if (!root.is_object()) throw std::runtime_error("config json: top level must be an object");
  SectionMap sections;
  for (const auto& [section, body] : root.items()) {
    if (!body.is_object())
      throw std::runtime_error("config json: section '" + section + "' must be an object");
    for (const auto& [key, value] : body.items()) {
      std::string text_value;
      if (value.is_string()) {
        text_value = value.get<std::string>();
      } else if (value.is_array()) {
        std::ostringstream os;
        for (std::size_t i = 0; i < value.size(); ++i) {
          if (i) os << ",";
          if (value[i].is_string())
            os << value[i].get<std::string>();
          else
            os << value[i].dump();
        }
        text_value = os.str();
      } else {
        text_value = value.dump();
      }
      sections[section][key] = text_value;
    }
  }
  return sections;
}

// Typed field access that records every failure instead of stopping at the
// first, so a validation error can list all offending fields at once.
class Reader {
 public:
  explicit Reader(SectionMap sections) : sections_(std::move(sections)) {}

  bool has(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
  }

  std::string str(const std::string& section, const std::string& key, std::string fallback) {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return fallback;
    const auto it = s->second.find(key);
    return it == s->second.end() ? fallback : it->second;
  }

  template <typename Fn>
  void with(const std::string& section, const std::string& key, Fn&& fn) {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return;
    const auto it = s->second.find(key);
    if (it == s->second.end()) return;
    try {
      fn(it->second);
    } catch (const std::exception& e) {
      errors_.push_back(section + "." + key + ": " + e.what());
    }
  }

  void size_field(const std::string& section, const std::string& key, std::size_t& out) {
    with(section, key, [&](const std::string& v) { out = std::stoul(v); });
  }
  void double_field(const std::string& section, const std::string& key, double& out) {
    with(section, key, [&](const std::string& v) { out = std::stod(v); });
  }
  void u64_field(const std::string& section, const std::string& key, std::uint64_t& out) {
    with(section, key, [&](const std::string& v) { out = std::stoull(v); });
  }
  void bool_field(const std::string& section, const std::string& key, bool& out) {
    with(section, key, [&](const std::string& v) {
      if (v == "true" || v == "1" || v == "yes")
        out = true;
      else if (v == "false" || v == "0" || v == "no")
        out = false;
      else
        throw std::invalid_argument("expected boolean, got '" + v + "'");
    });
  }

  void fail(const std::string& field, const std::string& message) {
    errors_.push_back(field + ": " + message);
  }
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  SectionMap sections_;
  std::vector<std::string> errors_;
};

OptimizerChoice parse_optimizer_choice(const std::string& text) {
  // kind:learning_rate[:momentum]
  const auto parts = [&] {
    std::vector<std::string> out;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) out.push_back(trim(item));
    return out;
  }();
  if (parts.empty()) throw std::invalid_argument("empty optimizer spec");
  OptimizerChoice choice;
  choice.kind = optimizer_from_string(parts[0]);
  if (parts.size() > 1) choice.learning_rate = std::stod(parts[1]);
  if (parts.size() > 2) choice.momentum = std::stod(parts[2]);
  return choice;
}

ExperimentConfig from_sections(SectionMap sections) {
  Reader r(std::move(sections));
  ExperimentConfig c;

  r.with("dataset", "kind", [&](const std::string& v) {
    if (v == "blobs")
      c.dataset.kind = SyntheticKind::blobs;
    else if (v == "rings")
      c.dataset.kind = SyntheticKind::rings;
    else
      throw std::invalid_argument("expected blobs or rings");
  });
  r.size_field("dataset", "classes", c.dataset.classes);
  r.size_field("dataset", "dims", c.dataset.dims);
  r.size_field("dataset", "samples_per_class", c.dataset.samples_per_class);
  r.double_field("dataset", "dispersion", c.dataset.dispersion);

  r.with("partition", "fractions", [&](const std::string& v) {
    const auto parts = split_list(v);
    if (parts.size() != 4) throw std::invalid_argument("expected exactly 4 fractions");
    for (std::size_t i = 0; i < 4; ++i) c.fractions[i] = std::stod(parts[i]);
  });

  r.with("pool", "activations", [&](const std::string& v) {
    c.pool.activations.clear();
    for (const auto& item : split_list(v)) c.pool.activations.push_back(activation_from_string(item));
  });
  r.with("pool", "hidden_layers", [&](const std::string& v) {
    c.pool.hidden_layer_counts.clear();
    for (const auto& item : split_list(v)) c.pool.hidden_layer_counts.push_back(std::stoul(item));
  });
  r.with("pool", "optimizers", [&](const std::string& v) {
    c.pool.optimizers.clear();
    for (const auto& item : split_list(v)) c.pool.optimizers.push_back(parse_optimizer_choice(item));
  });
  r.with("pool", "batch_sizes", [&](const std::string& v) {
    c.pool.batch_sizes.clear();
    for (const auto& item : split_list(v)) c.pool.batch_sizes.push_back(std::stoul(item));
  });
  r.size_field("pool", "hidden_width", c.pool.hidden_width);
  r.size_field("pool", "epochs", c.pool.epochs);

  r.size_field("population", "shadow_count", c.shadow_count);
  r.size_field("population", "target_count", c.target_count);
  r.double_field("population", "filter_threshold", c.filter_threshold);
  r.size_field("population", "retry_factor", c.retry_factor);

  r.double_field("tsne", "perplexity", c.tsne.perplexity);
  r.size_field("tsne", "iterations", c.tsne.iterations);
  r.double_field("tsne", "learning_rate", c.tsne.learning_rate);
  r.double_field("tsne", "exaggeration", c.tsne.exaggeration);
  r.size_field("tsne", "exaggeration_iters", c.tsne.exaggeration_iters);
  r.double_field("tsne", "momentum_initial", c.tsne.momentum_initial);
  r.double_field("tsne", "momentum_final", c.tsne.momentum_final);
  r.size_field("tsne", "momentum_switch_iter", c.tsne.momentum_switch_iter);
  r.size_field("tsne", "samples", c.tsne_samples);
  r.size_field("tsne", "plots_per_model", c.plots_per_model);

  r.size_field("render", "canvas", c.render.canvas_width);
  c.render.canvas_height = c.render.canvas_width;
  r.size_field("render", "canvas_height", c.render.canvas_height);
  r.size_field("render", "marker_radius", c.render.marker_radius);
  r.double_field("render", "margin", c.render.margin_fraction);
  r.with("render", "color_mode",
         [&](const std::string& v) { c.render.color_mode = color_mode_from_string(v); });
  r.with("render", "binary_threshold", [&](const std::string& v) {
    const auto t = std::stoul(v);
    if (t > 255) throw std::invalid_argument("threshold must be <= 255");
    c.render.binary_threshold = static_cast<std::uint8_t>(t);
  });

  r.size_field("loss_render", "canvas", c.loss_render.canvas_width);
  c.loss_render.canvas_height = c.loss_render.canvas_width;
  r.size_field("loss_render", "canvas_height", c.loss_render.canvas_height);
  r.size_field("loss_render", "line_thickness", c.loss_render.line_thickness);
  r.double_field("loss_render", "margin", c.loss_render.margin_fraction);
  r.double_field("loss_render", "x_tick_epochs", c.loss_render.x_tick_epochs);
  r.double_field("loss_render", "y_tick_loss", c.loss_render.y_tick_loss);
  r.with("loss_render", "axes_variants", [&](const std::string& v) {
    c.loss_axes_with = false;
    c.loss_axes_without = false;
    for (const auto& item : split_list(v)) {
      if (item == "with")
        c.loss_axes_with = true;
      else if (item == "without")
        c.loss_axes_without = true;
      else
        throw std::invalid_argument("expected with/without");
    }
  });

  r.size_field("attack", "input_size", c.attack.input_size);
  r.with("attack", "hidden", [&](const std::string& v) {
    c.attack.hidden.clear();
    for (const auto& item : split_list(v)) c.attack.hidden.push_back(std::stoul(item));
  });
  r.size_field("attack", "epochs", c.attack.epochs);
  r.size_field("attack", "batch_size", c.attack.batch_size);
  r.double_field("attack", "learning_rate", c.attack.learning_rate);
  r.with("attack", "optimizer",
         [&](const std::string& v) { c.attack.optimizer = optimizer_from_string(v); });
  r.double_field("attack", "momentum", c.attack.momentum);
  r.double_field("attack", "val_fraction", c.attack.val_fraction);
  r.size_field("attack", "repetitions", c.repetitions);
  r.with("attack", "targets", [&](const std::string& v) {
    c.targets.clear();
    for (const auto& item : split_list(v)) c.targets.push_back(inference_target_from_string(item));
  });
  r.with("attack", "plot_kinds", [&](const std::string& v) {
    c.attack_tsne = false;
    c.attack_loss = false;
    for (const auto& item : split_list(v)) {
      if (item == "tsne")
        c.attack_tsne = true;
      else if (item == "loss")
        c.attack_loss = true;
      else
        throw std::invalid_argument("expected tsne/loss");
    }
  });
  r.with("attack", "settings", [&](const std::string& v) {
    c.setting_mixed = false;
    c.setting_fixed = false;
    for (const auto& item : split_list(v)) {
      if (item == "mixed")
        c.setting_mixed = true;
      else if (item == "fixed")
        c.setting_fixed = true;
      else
        throw std::invalid_argument("expected mixed/fixed");
    }
  });
  r.with("attack", "fixed_activation",
         [&](const std::string& v) { c.fixed_assignment.activation = activation_from_string(v); });
  r.size_field("attack", "fixed_hidden_layers", c.fixed_assignment.hidden_layers);
  r.with("attack", "fixed_optimizer", [&](const std::string& v) {
    c.fixed_assignment.optimizer = parse_optimizer_choice(v);
  });
  r.size_field("attack", "fixed_batch_size", c.fixed_assignment.batch_size);

  r.with("defenses", "tsne", [&](const std::string& v) {
    c.tsne_defenses.clear();
    for (const auto& item : split_list(v)) c.tsne_defenses.push_back(TsneDefense::parse(item));
  });
  r.with("defenses", "loss", [&](const std::string& v) {
    c.loss_defenses.clear();
    for (const auto& item : split_list(v)) c.loss_defenses.push_back(LossDefense::parse(item));
  });
  r.with("defenses", "adaptive_tsne", [&](const std::string& v) {
    c.adaptive_tsne.clear();
    for (const auto& item : split_list(v)) c.adaptive_tsne.push_back(TsneDefense::parse(item));
  });
  r.with("defenses", "adaptive_loss", [&](const std::string& v) {
    c.adaptive_loss.clear();
    for (const auto& item : split_list(v)) c.adaptive_loss.push_back(LossDefense::parse(item));
  });

  r.size_field("knn", "k", c.knn_k);

  r.bool_field("query", "enabled", c.query_enabled);
  r.size_field("query", "count", c.query.query_count);
  r.with("query", "hidden", [&](const std::string& v) {
    c.query.hidden.clear();
    for (const auto& item : split_list(v)) c.query.hidden.push_back(std::stoul(item));
  });
  r.size_field("query", "epochs", c.query.epochs);
  r.size_field("query", "batch_size", c.query.batch_size);
  r.double_field("query", "learning_rate", c.query.learning_rate);
  r.double_field("query", "momentum", c.query.momentum);

  r.bool_field("downstream", "enabled", c.downstream_enabled);
  r.with("downstream", "epsilons", [&](const std::string& v) {
    c.downstream_epsilons.clear();
    for (const auto& item : split_list(v)) c.downstream_epsilons.push_back(std::stod(item));
  });
  r.size_field("downstream", "sample_count", c.downstream_samples);
  r.size_field("downstream", "repetitions", c.downstream_repetitions);
  r.with("downstream", "infer", [&](const std::string& v) {
    c.downstream_infer.clear();
    for (const auto& item : split_list(v))
      c.downstream_infer.push_back(inference_target_from_string(item));
  });

  r.u64_field("run", "master_seed", c.master_seed);
  r.with("run", "out_dir", [&](const std::string& v) { c.out_dir = v; });
  r.size_field("run", "jobs", c.jobs);

  if (!r.errors().empty()) {
    std::ostringstream os;
    os << "config parse failed (" << r.errors().size() << " fields):\n";
    for (const auto& e : r.errors()) os << "  " << e << "\n";
    throw std::runtime_error(os.str());
  }
  return c;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text, bool json) {
  ExperimentConfig c = from_sections(json ? parse_json_sections(text) : parse_ini_sections(text));
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  bool json = path.size() > 5 && path.substr(path.size() - 5) == ".json";
  if (!json) {
    const auto first = text.find_first_not_of(" \t\r\n");
    json = first != std::string::npos && text[first] == '{';
  }
  return parse(text, json);
}

void ExperimentConfig::validate() const {
  std::vector<std::string> errors;
  auto check = [&](bool ok, const std::string& field, const std::string& message) {
    if (!ok) errors.push_back(field + ": " + message);
  };

  check(dataset.classes >= 2, "dataset.classes", "need >= 2 classes");
  check(dataset.dims >= 2, "dataset.dims", "need >= 2 dims");
  check(dataset.samples_per_class >= 8, "dataset.samples_per_class", "need >= 8 per class");
  check(dataset.dispersion >= 0.0, "dataset.dispersion", "must be >= 0");
  double frac_total = 0.0;
  for (double f : fractions) frac_total += f;
  check(std::abs(frac_total - 1.0) <= 1e-9, "partition.fractions", "must sum to 1");

  try {
    pool.validate();
  } catch (const std::exception& e) {
    errors.push_back(std::string("pool: ") + e.what());
  }
  check(shadow_count >= 1, "population.shadow_count", "must be >= 1");
  check(target_count >= 1, "population.target_count", "must be >= 1");
  check(filter_threshold >= 0.0 && filter_threshold <= 1.0, "population.filter_threshold",
        "must be in [0,1]");

  check(tsne.perplexity > 1.0, "tsne.perplexity", "must be > 1");
  check(tsne_samples >= 8, "tsne.samples", "must be >= 8");
  check(tsne.perplexity < static_cast<double>(tsne_samples), "tsne.perplexity",
        "must be < tsne.samples");
  check(tsne.iterations >= 1, "tsne.iterations", "must be >= 1");
  check(plots_per_model >= 1, "tsne.plots_per_model", "must be >= 1");

  check(render.marker_radius >= 1, "render.marker_radius", "must be >= 1");
  check(render.margin_fraction >= 0.0 && render.margin_fraction < 0.5, "render.margin",
        "must be in [0, 0.5)");
  check(render.canvas_width >= 32 && render.canvas_height >= 32, "render.canvas",
        "canvas must be >= 32 px");
  check(loss_render.margin_fraction >= 0.0 && loss_render.margin_fraction < 0.5,
        "loss_render.margin", "must be in [0, 0.5)");
  check(loss_axes_with || loss_axes_without, "loss_render.axes_variants",
        "need at least one variant");
  check(!(loss_render.train_color == loss_render.test_color), "loss_render", "colors must differ");

  check(attack.input_size >= 8, "attack.input_size", "must be >= 8");
  check(attack.input_size <= render.canvas_width && attack.input_size <= render.canvas_height,
        "attack.input_size", "must not exceed the render canvas");
  check(attack.epochs >= 1, "attack.epochs", "must be >= 1");
  check(attack.val_fraction >= 0.0 && attack.val_fraction < 1.0, "attack.val_fraction",
        "must be in [0,1)");
  check(repetitions >= 1, "attack.repetitions", "must be >= 1");
  check(!targets.empty(), "attack.targets", "need at least one inference target");
  for (InferenceTargetKind t : targets)
    check(candidate_count(t, pool) >= 2, "attack.targets",
          to_string(t) + " needs >= 2 candidates in the pool");
  check(setting_mixed || setting_fixed, "attack.settings", "need at least one setting");
  check(attack_tsne || attack_loss, "attack.plot_kinds", "need at least one plot kind");

  check(knn_k >= 1 && knn_k < tsne_samples, "knn.k", "must satisfy 1 <= k < tsne.samples");

  if (query_enabled) check(query.query_count >= 1, "query.count", "must be >= 1");
  if (downstream_enabled) {
    check(!downstream_epsilons.empty(), "downstream.epsilons", "need at least one epsilon");
    for (double e : downstream_epsilons)
      check(e > 0.0, "downstream.epsilons", "epsilons must be > 0");
    check(downstream_samples >= 1, "downstream.sample_count", "must be >= 1");
    check(downstream_repetitions >= 1, "downstream.repetitions", "must be >= 1");
    check(!downstream_infer.empty(), "downstream.infer", "need at least one axis");
    for (InferenceTargetKind t : downstream_infer)
      check(candidate_count(t, pool) >= 2, "downstream.infer",
            to_string(t) + " needs >= 2 candidates in the pool");
  }
  check(jobs >= 1, "run.jobs", "must be >= 1");

  // Cross-section consistency.
  if (setting_fixed) {
    try {
      value_index(fixed_assignment, InferenceTargetKind::activation, pool);
      value_index(fixed_assignment, InferenceTargetKind::hidden_layer_count, pool);
      value_index(fixed_assignment, InferenceTargetKind::optimizer, pool);
      value_index(fixed_assignment, InferenceTargetKind::batch_size, pool);
    } catch (const std::exception& e) {
      errors.push_back(std::string("attack.fixed_*: ") + e.what());
    }
  }
  for (const auto& d : adaptive_tsne) {
    const auto tag = d.tag();
    const bool known = std::any_of(tsne_defenses.begin(), tsne_defenses.end(),
                                   [&](const TsneDefense& x) { return x.tag() == tag; });
    check(known, "defenses.adaptive_tsne", tag + " is not in defenses.tsne");
  }
  for (const auto& d : adaptive_loss) {
    const auto tag = d.tag();
    const bool known = std::any_of(loss_defenses.begin(), loss_defenses.end(),
                                   [&](const LossDefense& x) { return x.tag() == tag; });
    check(known, "defenses.adaptive_loss", tag + " is not in defenses.loss");
  }

  if (!errors.empty()) {
    std::ostringstream os;
    os << "config validation failed (" << errors.size() << " errors):\n";
    for (const auto& e : errors) os << "  " << e << "\n";
    throw std::runtime_error(os.str());
  }
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream os;
  os << "dataset.kind=" << (dataset.kind == SyntheticKind::blobs ? "blobs" : "rings") << "\n"
     << "dataset.classes=" << dataset.classes << "\n"
     << "dataset.dims=" << dataset.dims << "\n"
     << "dataset.samples_per_class=" << dataset.samples_per_class << "\n"
     << "dataset.dispersion=" << fmt_g17(dataset.dispersion) << "\n";
  os << "partition.fractions=";
  for (std::size_t i = 0; i < 4; ++i) os << (i ? "," : "") << fmt_g17(fractions[i]);
  os << "\n";

  os << "pool.activations=";
  for (std::size_t i = 0; i < pool.activations.size(); ++i)
    os << (i ? "," : "") << to_string(pool.activations[i]);
  os << "\npool.hidden_layers=";
  for (std::size_t i = 0; i < pool.hidden_layer_counts.size(); ++i)
    os << (i ? "," : "") << pool.hidden_layer_counts[i];
  os << "\npool.optimizers=";
  for (std::size_t i = 0; i < pool.optimizers.size(); ++i)
    os << (i ? "," : "") << to_string(pool.optimizers[i].kind) << ":"
       << fmt_g17(pool.optimizers[i].learning_rate) << ":" << fmt_g17(pool.optimizers[i].momentum);
  os << "\npool.batch_sizes=";
  for (std::size_t i = 0; i < pool.batch_sizes.size(); ++i) os << (i ? "," : "") << pool.batch_sizes[i];
  os << "\npool.hidden_width=" << pool.hidden_width << "\npool.epochs=" << pool.epochs << "\n";

  os << "population.shadow_count=" << shadow_count << "\n"
     << "population.target_count=" << target_count << "\n"
     << "population.filter_threshold=" << fmt_g17(filter_threshold) << "\n"
     << "population.retry_factor=" << retry_factor << "\n";

  os << "tsne.perplexity=" << fmt_g17(tsne.perplexity) << "\n"
     << "tsne.iterations=" << tsne.iterations << "\n"
     << "tsne.learning_rate=" << fmt_g17(tsne.learning_rate) << "\n"
     << "tsne.exaggeration=" << fmt_g17(tsne.exaggeration) << "\n"
     << "tsne.exaggeration_iters=" << tsne.exaggeration_iters << "\n"
     << "tsne.momentum_initial=" << fmt_g17(tsne.momentum_initial) << "\n"
     << "tsne.momentum_final=" << fmt_g17(tsne.momentum_final) << "\n"
     << "tsne.momentum_switch_iter=" << tsne.momentum_switch_iter << "\n"
     << "tsne.samples=" << tsne_samples << "\n"
     << "tsne.plots_per_model=" << plots_per_model << "\n";

  os << "render.canvas=" << render.canvas_width << "x" << render.canvas_height << "\n"
     << "render.marker_radius=" << render.marker_radius << "\n"
     << "render.margin=" << fmt_g17(render.margin_fraction) << "\n"
     << "render.color_mode=" << to_string(render.color_mode) << "\n"
     << "render.binary_threshold=" << static_cast<int>(render.binary_threshold) << "\n";

  os << "loss_render.canvas=" << loss_render.canvas_width << "x" << loss_render.canvas_height << "\n"
     << "loss_render.line_thickness=" << loss_render.line_thickness << "\n"
     << "loss_render.margin=" << fmt_g17(loss_render.margin_fraction) << "\n"
     << "loss_render.x_tick_epochs=" << fmt_g17(loss_render.x_tick_epochs) << "\n"
     << "loss_render.y_tick_loss=" << fmt_g17(loss_render.y_tick_loss) << "\n"
     << "loss_render.axes=" << (loss_axes_with ? "with" : "") << (loss_axes_without ? ",without" : "")
     << "\n";

  os << "attack.input_size=" << attack.input_size << "\nattack.hidden=";
  for (std::size_t i = 0; i < attack.hidden.size(); ++i) os << (i ? "," : "") << attack.hidden[i];
  os << "\nattack.epochs=" << attack.epochs << "\n"
     << "attack.batch_size=" << attack.batch_size << "\n"
     << "attack.learning_rate=" << fmt_g17(attack.learning_rate) << "\n"
     << "attack.optimizer=" << to_string(attack.optimizer) << "\n"
     << "attack.momentum=" << fmt_g17(attack.momentum) << "\n"
     << "attack.val_fraction=" << fmt_g17(attack.val_fraction) << "\n"
     << "attack.repetitions=" << repetitions << "\nattack.targets=";
  for (std::size_t i = 0; i < targets.size(); ++i) os << (i ? "," : "") << to_string(targets[i]);
  os << "\nattack.settings=" << (setting_mixed ? "mixed" : "") << (setting_fixed ? ",fixed" : "")
     << "\nattack.plot_kinds=" << (attack_tsne ? "tsne" : "") << (attack_loss ? ",loss" : "") << "\n";
  if (setting_fixed) os << "attack.fixed=" << format_assignment(fixed_assignment) << "\n";

  os << "defenses.tsne=";
  for (std::size_t i = 0; i < tsne_defenses.size(); ++i)
    os << (i ? "," : "") << tsne_defenses[i].tag();
  os << "\ndefenses.loss=";
  for (std::size_t i = 0; i < loss_defenses.size(); ++i)
    os << (i ? "," : "") << loss_defenses[i].tag();
  os << "\ndefenses.adaptive_tsne=";
  for (std::size_t i = 0; i < adaptive_tsne.size(); ++i)
    os << (i ? "," : "") << adaptive_tsne[i].tag();
  os << "\ndefenses.adaptive_loss=";
  for (std::size_t i = 0; i < adaptive_loss.size(); ++i)
    os << (i ? "," : "") << adaptive_loss[i].tag();
  os << "\n";

  os << "knn.k=" << knn_k << "\n";
  os << "query.enabled=" << (query_enabled ? 1 : 0) << "\n";
  if (query_enabled) {
    os << "query.count=" << query.query_count << "\nquery.hidden=";
    for (std::size_t i = 0; i < query.hidden.size(); ++i) os << (i ? "," : "") << query.hidden[i];
    os << "\nquery.epochs=" << query.epochs << "\n"
       << "query.batch_size=" << query.batch_size << "\n"
       << "query.learning_rate=" << fmt_g17(query.learning_rate) << "\n"
       << "query.momentum=" << fmt_g17(query.momentum) << "\n";
  }
  os << "downstream.enabled=" << (downstream_enabled ? 1 : 0) << "\n";
  if (downstream_enabled) {
    os << "downstream.epsilons=";
    for (std::size_t i = 0; i < downstream_epsilons.size(); ++i)
      os << (i ? "," : "") << fmt_g17(downstream_epsilons[i]);
    os << "\ndownstream.sample_count=" << downstream_samples << "\n"
       << "downstream.repetitions=" << downstream_repetitions << "\ndownstream.infer=";
    for (std::size_t i = 0; i < downstream_infer.size(); ++i)
      os << (i ? "," : "") << to_string(downstream_infer[i]);
    os << "\n";
  }
  os << "master_seed=" << master_seed << "\n";
  return os.str();
}

std::uint64_t ExperimentConfig::config_hash() const { return fnv1a64(canonical()); }

std::string ExperimentConfig::config_hash_hex() const { return to_hex(config_hash()); }

}  // namespace plotsteal
