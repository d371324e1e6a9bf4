#include "plotsteal/defense.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "plotsteal/rng.hpp"

namespace plotsteal {

namespace {

// Tag-friendly number format: round-trips every parameter in practice while
// keeping filenames readable.
std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

double population_std(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                      static_cast<double>(values.size());
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(values.size()));
}

std::vector<double> curve_losses(const std::vector<LossPoint>& points) {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.loss);
  return out;
}

}  // namespace

double round_half_away_from_zero(double v) { return std::round(v); }

double round_to_even_integer(double v) {
  // Nearest even integer; exact odd-integer midpoints go to the larger
  // magnitude (2.9 -> 2, 3.0 -> 4, -3.0 -> -4).
  return 2.0 * std::round(v / 2.0);
}

std::string TsneDefense::tag() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::none: return "none";
    case Kind::round_embeddings: os << "er:" << decimals; break;
    case Kind::threshold_embeddings: os << "et:" << fmt_num(keep_fraction); break;
    case Kind::noise_embeddings: os << "en:" << fmt_num(std_fraction); break;
    case Kind::round_coordinates:
      os << "cr:" << (unit == CoordinateRoundUnit::integer ? "int" : "even");
      break;
    case Kind::noise_coordinates: os << "cn:" << fmt_num(std_fraction); break;
  }
  return os.str();
}

TsneDefense TsneDefense::parse(const std::string& tag) {
  TsneDefense d;
  if (tag == "none") return d;
  const auto colon = tag.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("bad t-SNE defense tag: " + tag);
  const std::string name = tag.substr(0, colon);
  const std::string arg = tag.substr(colon + 1);
  if (name == "er") {
    d.kind = Kind::round_embeddings;
    d.decimals = std::stoul(arg);
  } else if (name == "et") {
    d.kind = Kind::threshold_embeddings;
    d.keep_fraction = std::stod(arg);
    if (!(d.keep_fraction > 0.0 && d.keep_fraction <= 1.0))
      throw std::invalid_argument("et keep fraction must be in (0,1]: " + tag);
  } else if (name == "en") {
    d.kind = Kind::noise_embeddings;
    d.std_fraction = std::stod(arg);
    if (d.std_fraction < 0.0) throw std::invalid_argument("en std fraction must be >= 0: " + tag);
  } else if (name == "cr") {
    d.kind = Kind::round_coordinates;
    if (arg == "int")
      d.unit = CoordinateRoundUnit::integer;
    else if (arg == "even")
      d.unit = CoordinateRoundUnit::even_integer;
    else
      throw std::invalid_argument("cr unit must be int or even: " + tag);
  } else if (name == "cn") {
    d.kind = Kind::noise_coordinates;
    d.std_fraction = std::stod(arg);
    if (d.std_fraction < 0.0) throw std::invalid_argument("cn std fraction must be >= 0: " + tag);
  } else {
    throw std::invalid_argument("unknown t-SNE defense: " + tag);
  }
  return d;
}

std::string LossDefense::tag() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::none: return "none";
    case Kind::gaussian: return "gaussian";
    case Kind::tensorboard: os << "tensorboard:" << fmt_num(weight); break;
    case Kind::sliding_window: os << "sliding:" << window; break;
  }
  return os.str();
}

LossDefense LossDefense::parse(const std::string& tag) {
  LossDefense d;
  if (tag == "none") return d;
  if (tag == "gaussian") {
    d.kind = Kind::gaussian;
    return d;
  }
  const auto colon = tag.find(':');
  const std::string name = colon == std::string::npos ? tag : tag.substr(0, colon);
  if (name == "tensorboard") {
    d.kind = Kind::tensorboard;
    d.weight = colon == std::string::npos ? 0.2 : std::stod(tag.substr(colon + 1));
    if (!(d.weight >= 0.0 && d.weight < 1.0))
      throw std::invalid_argument("tensorboard weight must be in [0,1): " + tag);
  } else if (name == "sliding") {
    d.kind = Kind::sliding_window;
    d.window = colon == std::string::npos ? 2 : std::stoul(tag.substr(colon + 1));
    if (d.window < 1) throw std::invalid_argument("sliding window must be >= 1: " + tag);
  } else {
    throw std::invalid_argument("unknown loss defense: " + tag);
  }
  return d;
}

Matrix round_embeddings(const Matrix& points, std::size_t decimals) {
  const double scale = std::pow(10.0, static_cast<double>(decimals));
  Matrix out = points;
  for (double& v : out.values()) v = round_half_away_from_zero(v * scale) / scale;
  return out;
}

Matrix threshold_embeddings(const Matrix& points, double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw std::invalid_argument("keep_fraction must be in (0,1]");
  const std::size_t d = points.cols();
  // ceil(keep * d), guarding against FP noise pushing an exact integer up.
  const auto keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(d) - 1e-9)));
  if (keep >= d) return points;

  Matrix out(points.rows(), d, 0.0);
  std::vector<std::size_t> order(d);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto row = points.row(i);
    std::iota(order.begin(), order.end(), 0);
    // Largest |value| first; ties keep the lower index.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(row[a]) > std::abs(row[b]);
    });
    for (std::size_t k = 0; k < keep; ++k) out.at(i, order[k]) = row[order[k]];
  }
  return out;
}

Matrix noise_embeddings(const Matrix& points, double std_fraction, std::uint64_t seed) {
  if (std_fraction < 0.0) throw std::invalid_argument("std_fraction must be >= 0");
  if (std_fraction == 0.0) return points;
  const double noise_std = std_fraction * population_std(points.values());
  Matrix out = points;
  Rng rng(seed);
  for (double& v : out.values()) v += noise_std * rng.gaussian();
  return out;
}

TsneLayout round_coordinates(const TsneLayout& layout, CoordinateRoundUnit unit) {
  TsneLayout out = layout;
  for (double& v : out.coords.values())
    v = unit == CoordinateRoundUnit::integer ? round_half_away_from_zero(v)
                                             : round_to_even_integer(v);
  return out;
}

TsneLayout noise_coordinates(const TsneLayout& layout, double std_fraction, std::uint64_t seed) {
  if (std_fraction < 0.0) throw std::invalid_argument("std_fraction must be >= 0");
  TsneLayout out = layout;
  if (std_fraction == 0.0) return out;
  const double noise_std = std_fraction * population_std(layout.coords.values());
  Rng rng(seed);
  for (double& v : out.coords.values()) v += noise_std * rng.gaussian();
  return out;
}

TsneLayout apply_tsne_defense(const TsneDefense& defense, const EmbeddingSet& embeddings,
                              const TsneLayout& undefended, const TsneConfig& config,
                              std::uint64_t noise_seed) {
  switch (defense.kind) {
    case TsneDefense::Kind::none: return undefended;
    case TsneDefense::Kind::round_embeddings: {
      EmbeddingSet defended{round_embeddings(embeddings.points, defense.decimals), embeddings.labels};
      return fit(defended, config);
    }
    case TsneDefense::Kind::threshold_embeddings: {
      EmbeddingSet defended{threshold_embeddings(embeddings.points, defense.keep_fraction),
                            embeddings.labels};
      return fit(defended, config);
    }
    case TsneDefense::Kind::noise_embeddings: {
      EmbeddingSet defended{noise_embeddings(embeddings.points, defense.std_fraction, noise_seed),
                            embeddings.labels};
      return fit(defended, config);
    }
    case TsneDefense::Kind::round_coordinates: return round_coordinates(undefended, defense.unit);
    case TsneDefense::Kind::noise_coordinates:
      return noise_coordinates(undefended, defense.std_fraction, noise_seed);
  }
  throw std::logic_error("bad TsneDefense kind");
}

LossCurve smooth_gaussian(const LossCurve& curve, std::uint64_t seed) {
  const double train_std = population_std(curve_losses(curve.train_points));
  const double test_std = population_std(curve_losses(curve.test_points));
  const double noise_std = 0.5 * (train_std + test_std);
  LossCurve out = curve;
  Rng rng(seed);
  for (auto& p : out.train_points) p.loss = std::max(0.0, p.loss + noise_std * rng.gaussian());
  for (auto& p : out.test_points) p.loss = std::max(0.0, p.loss + noise_std * rng.gaussian());
  return out;
}

LossCurve smooth_tensorboard(const LossCurve& curve, double w) {
  if (!(w >= 0.0 && w < 1.0)) throw std::invalid_argument("tensorboard weight must be in [0,1)");
  LossCurve out = curve;
  auto smooth = [w](const std::vector<LossPoint>& in, std::vector<LossPoint>& dst) {
    for (std::size_t t = 1; t < in.size(); ++t)
      dst[t].loss = w * in[t - 1].loss + (1.0 - w) * in[t].loss;
  };
  smooth(curve.train_points, out.train_points);
  smooth(curve.test_points, out.test_points);
  return out;
}

LossCurve smooth_sliding(const LossCurve& curve, std::size_t window) {
  if (window < 1) throw std::invalid_argument("sliding window must be >= 1");
  LossCurve out = curve;
  auto smooth = [window](const std::vector<LossPoint>& in, std::vector<LossPoint>& dst) {
    for (std::size_t t = 0; t < in.size(); ++t) {
      const std::size_t end = std::min(in.size() - 1, t + window);
      double acc = 0.0;
      for (std::size_t k = t; k <= end; ++k) acc += in[k].loss;
      dst[t].loss = acc / static_cast<double>(end - t + 1);
    }
  };
  smooth(curve.train_points, out.train_points);
  smooth(curve.test_points, out.test_points);
  return out;
}

LossCurve apply_loss_defense(const LossDefense& defense, const LossCurve& curve,
                             std::uint64_t noise_seed) {
  switch (defense.kind) {
    case LossDefense::Kind::none: return curve;
    case LossDefense::Kind::gaussian: return smooth_gaussian(curve, noise_seed);
    case LossDefense::Kind::tensorboard: return smooth_tensorboard(curve, defense.weight);
    case LossDefense::Kind::sliding_window: return smooth_sliding(curve, defense.window);
  }
  throw std::logic_error("bad LossDefense kind");
}

double l2_utility(const LossCurve& original, const LossCurve& defended) {
  if (original.train_points.size() != defended.train_points.size() ||
      original.test_points.size() != defended.test_points.size())
    throw std::invalid_argument("l2_utility: curve length mismatch");
  auto distance = [](const std::vector<LossPoint>& a, const std::vector<LossPoint>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a[i].loss - b[i].loss;
      acc += d * d;
    }
    return std::sqrt(acc);
  };
  return 0.5 * (distance(original.train_points, defended.train_points) +
                distance(original.test_points, defended.test_points));
}

}  // namespace plotsteal
