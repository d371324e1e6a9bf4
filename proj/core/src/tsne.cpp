#include "plotsteal/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "plotsteal/csv.hpp"
#include "plotsteal/rng.hpp"

namespace plotsteal {

void TsneConfig::validate(std::size_t n) const {
  if (!(perplexity > 1.0) || !(perplexity < static_cast<double>(n)))
    throw std::invalid_argument("perplexity must satisfy 1 < perplexity < n");
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (learning_rate <= 0.0) throw std::invalid_argument("learning rate must be > 0");
  if (exaggeration < 1.0) throw std::invalid_argument("exaggeration must be >= 1");
}

namespace {

Matrix squared_distances(const Matrix& points) {
  const std::size_t n = points.rows();
  Matrix d2(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = points.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto b = points.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        const double diff = a[k] - b[k];
        s += diff * diff;
      }
      d2.at(i, j) = s;
      d2.at(j, i) = s;
    }
  }
  return d2;
}

// Fills `probs` with the row-conditional distribution for precision
// beta = 1/(2 sigma^2) and returns the Shannon entropy in bits.
double row_entropy(const Matrix& d2, std::size_t i, double beta, double shift,
                   std::vector<double>& probs) {
  const std::size_t n = d2.rows();
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) {
      probs[j] = 0.0;
      continue;
    }
    probs[j] = std::exp(-(d2.at(i, j) - shift) * beta);
    sum += probs[j];
  }
  double entropy = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    probs[j] /= sum;
    if (probs[j] > 0.0) entropy -= probs[j] * std::log2(probs[j]);
  }
  return entropy;
}

}  // namespace

ConditionalAffinities conditional_affinities(const Matrix& points, double perplexity) {
  const std::size_t n = points.rows();
  if (n < 2) throw std::invalid_argument("conditional_affinities: need >= 2 points");
  if (!(perplexity < static_cast<double>(n)))
    throw std::invalid_argument("perplexity must be < n");
  require_finite(points, "conditional_affinities input");

  const Matrix d2 = squared_distances(points);
  ConditionalAffinities out;
  out.rows = Matrix(n, n);
  out.sigmas.assign(n, 1.0);
  const double target_entropy = std::log2(perplexity);
  constexpr double kSigmaLo = 1e-20, kSigmaHi = 1e20;
  constexpr int kMaxIter = 50;

  std::vector<double> probs(n);
  for (std::size_t i = 0; i < n; ++i) {
    double dmin = 0.0, dmax = 0.0;
    bool first = true;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = d2.at(i, j);
      if (first) {
        dmin = dmax = d;
        first = false;
      } else {
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
      }
    }
    // All neighbors equidistant (includes all-points-identical): the row is
    // uniform for every sigma, so the perplexity cannot be tuned.
    if (dmax - dmin <= 1e-12 * std::max(1.0, dmax)) {
      for (std::size_t j = 0; j < n; ++j)
        out.rows.at(i, j) = (j == i) ? 0.0 : 1.0 / static_cast<double>(n - 1);
      out.sigmas[i] = 1.0;
      continue;
    }

    double log_lo = std::log(kSigmaLo), log_hi = std::log(kSigmaHi);
    auto entropy_at = [&](double log_sigma) {
      const double sigma = std::exp(log_sigma);
      const double beta = 1.0 / (2.0 * sigma * sigma);
      return row_entropy(d2, i, beta, dmin, probs);
    };
    const double h_lo = entropy_at(log_lo);
    const double h_hi = entropy_at(log_hi);
    if (target_entropy < h_lo || target_entropy > h_hi)
      throw std::runtime_error("perplexity search cannot bracket target at row " + std::to_string(i));

    double log_mid = 0.0, entropy = 0.0;
    for (int it = 0; it < kMaxIter; ++it) {
      log_mid = 0.5 * (log_lo + log_hi);
      entropy = entropy_at(log_mid);
      if (entropy > target_entropy)
        log_hi = log_mid;
      else
        log_lo = log_mid;
    }
    entropy = entropy_at(0.5 * (log_lo + log_hi));
    const double achieved = std::exp2(entropy);
    if (std::abs(achieved - perplexity) > 1e-3 * perplexity)
      throw std::runtime_error("perplexity search did not converge at row " + std::to_string(i));
    out.sigmas[i] = std::exp(0.5 * (log_lo + log_hi));
    for (std::size_t j = 0; j < n; ++j) out.rows.at(i, j) = probs[j];
  }
  return out;
}

Matrix symmetrize(const Matrix& conditionals) {
  const std::size_t n = conditionals.rows();
  if (n != conditionals.cols()) throw std::invalid_argument("symmetrize: square matrix required");
  Matrix p(n, n);
  const double denom = 2.0 * static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = (conditionals.at(i, j) + conditionals.at(j, i)) / denom;
      p.at(i, j) = v;
      p.at(j, i) = v;
    }
  }
  return p;
}

Matrix low_dim_affinities(const Matrix& coords) {
  const std::size_t n = coords.rows();
  if (n < 2) throw std::invalid_argument("low_dim_affinities: need >= 2 points");
  Matrix w(n, n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < coords.cols(); ++k) {
        const double diff = coords.at(i, k) - coords.at(j, k);
        d2 += diff * diff;
      }
      const double v = 1.0 / (1.0 + d2);
      w.at(i, j) = v;
      w.at(j, i) = v;
      z += 2.0 * v;  // ordered pairs (i,j) and (j,i)
    }
  }
  for (double& v : w.values()) v /= z;
  return w;
}

double kl_divergence(const Matrix& p, const Matrix& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols())
    throw std::invalid_argument("kl_divergence: shape mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pv = p.values()[i];
    if (pv <= 0.0) continue;
    const double qv = q.values()[i];
    if (qv <= 0.0) throw std::runtime_error("kl_divergence: q is zero where p > 0");
    kl += pv * std::log(pv / qv);
  }
  return kl;
}

Matrix kl_gradient(const Matrix& p, const Matrix& coords) {
  const std::size_t n = coords.rows();
  const std::size_t dims = coords.cols();
  if (p.rows() != n || p.cols() != n) throw std::invalid_argument("kl_gradient: shape mismatch");

  // Unnormalized Student-t weights and their total over ordered pairs.
  Matrix w(n, n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < dims; ++k) {
        const double diff = coords.at(i, k) - coords.at(j, k);
        d2 += diff * diff;
      }
      const double v = 1.0 / (1.0 + d2);
      w.at(i, j) = v;
      w.at(j, i) = v;
      z += 2.0 * v;
    }
  }
  Matrix grad(n, dims);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double wij = w.at(i, j);
      const double mult = 4.0 * (p.at(i, j) - wij / z) * wij;
      for (std::size_t k = 0; k < dims; ++k)
        grad.at(i, k) += mult * (coords.at(i, k) - coords.at(j, k));
    }
  }
  return grad;
}

TsneLayout fit(const EmbeddingSet& embeddings, const TsneConfig& config,
               std::vector<double>* kl_history) {
  const std::size_t n = embeddings.size();
  config.validate(n);
  if (embeddings.labels.size() != n)
    throw std::invalid_argument("fit: labels do not match points");

  const ConditionalAffinities cond = conditional_affinities(embeddings.points, config.perplexity);
  const Matrix p = symmetrize(cond.rows);

  Rng rng(config.seed);
  Matrix coords(n, 2);
  for (double& v : coords.values()) v = 1e-4 * rng.gaussian();
  Matrix velocity(n, 2);
  Matrix gains(n, 2, 1.0);

  Matrix p_ex = p;
  for (double& v : p_ex.values()) v *= config.exaggeration;

  auto sign_of = [](double v) { return v > 0.0 ? 1 : v < 0.0 ? -1 : 0; };
  for (std::size_t iter = 0; iter < config.iterations; ++iter) {
    const bool exaggerated = iter < config.exaggeration_iters;
    const Matrix grad = kl_gradient(exaggerated ? p_ex : p, coords);
    const double momentum =
        iter < config.momentum_switch_iter ? config.momentum_initial : config.momentum_final;
    for (std::size_t i = 0; i < coords.size(); ++i) {
      // Canonical descent: per-coordinate gains grow when the gradient flips
      // against the velocity and shrink while they agree.
      double& g = gains.values()[i];
      g = sign_of(grad.values()[i]) != sign_of(velocity.values()[i]) ? g + 0.2 : g * 0.8;
      g = std::max(g, 0.01);
      velocity.values()[i] =
          momentum * velocity.values()[i] - config.learning_rate * g * grad.values()[i];
      coords.values()[i] += velocity.values()[i];
    }
    // Re-center to keep the layout translation-free.
    for (std::size_t k = 0; k < 2; ++k) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += coords.at(i, k);
      mean /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) coords.at(i, k) -= mean;
    }
    if (!coords.all_finite())
      throw std::runtime_error("t-SNE diverged (non-finite coordinates) at iteration " +
                               std::to_string(iter));
    if (kl_history) kl_history->push_back(kl_divergence(p, low_dim_affinities(coords)));
  }
  return {std::move(coords), embeddings.labels};
}

double knn_utility(const TsneLayout& layout, std::size_t k) {
  const std::size_t n = layout.size();
  if (k < 1 || k >= n) throw std::invalid_argument("knn_utility: need 1 <= k < n");

  std::size_t hits = 0;
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    dist.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = layout.coords.at(i, 0) - layout.coords.at(j, 0);
      const double dy = layout.coords.at(i, 1) - layout.coords.at(j, 1);
      dist.emplace_back(dx * dx + dy * dy, j);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());

    int max_label = 0;
    for (std::size_t t = 0; t < k; ++t)
      max_label = std::max(max_label, layout.labels[dist[t].second]);
    std::vector<std::size_t> votes(static_cast<std::size_t>(max_label) + 1, 0);
    std::vector<double> dist_sum(static_cast<std::size_t>(max_label) + 1, 0.0);
    for (std::size_t t = 0; t < k; ++t) {
      const auto cls = static_cast<std::size_t>(layout.labels[dist[t].second]);
      votes[cls] += 1;
      dist_sum[cls] += std::sqrt(dist[t].first);
    }
    std::size_t best = 0;
    bool have_best = false;
    for (std::size_t cls = 0; cls < votes.size(); ++cls) {
      if (votes[cls] == 0) continue;
      if (!have_best) {
        best = cls;
        have_best = true;
        continue;
      }
      if (votes[cls] > votes[best]) {
        best = cls;
      } else if (votes[cls] == votes[best]) {
        const double mean_new = dist_sum[cls] / static_cast<double>(votes[cls]);
        const double mean_best = dist_sum[best] / static_cast<double>(votes[best]);
        if (mean_new < mean_best) best = cls;  // equal means keep the lower class index
      }
    }
    if (best == static_cast<std::size_t>(layout.labels[i])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

void validate_affinities(const Matrix& p) {
  const std::size_t n = p.rows();
  if (n != p.cols()) throw std::runtime_error("affinity matrix not square");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (p.at(i, i) != 0.0) throw std::runtime_error("affinity diagonal not zero");
    for (std::size_t j = 0; j < n; ++j) {
      const double v = p.at(i, j);
      if (v < 0.0) throw std::runtime_error("negative affinity");
      if (std::abs(v - p.at(j, i)) > 1e-12) throw std::runtime_error("affinity not symmetric");
      total += v;
    }
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::runtime_error("affinity total mass != 1");
}

void save_layout_csv(const TsneLayout& layout, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write layout csv: " + path);
  out << "index,x,y,label\n";
  for (std::size_t i = 0; i < layout.size(); ++i)
    out << i << "," << fmt_g17(layout.coords.at(i, 0)) << "," << fmt_g17(layout.coords.at(i, 1))
        << "," << layout.labels[i] << "\n";
}

TsneLayout load_layout_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read layout csv: " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::array<double, 2>> coords;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string idx, x, y, label;
    if (!std::getline(ls, idx, ',') || !std::getline(ls, x, ',') || !std::getline(ls, y, ',') ||
        !std::getline(ls, label))
      throw std::runtime_error("malformed layout csv line: " + line);
    coords.push_back({std::stod(x), std::stod(y)});
    labels.push_back(std::stoi(label));
  }
  TsneLayout layout;
  layout.coords = Matrix(coords.size(), 2);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    layout.coords.at(i, 0) = coords[i][0];
    layout.coords.at(i, 1) = coords[i][1];
  }
  layout.labels = std::move(labels);
  return layout;
}

}  // namespace plotsteal
