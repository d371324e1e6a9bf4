#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plotsteal/nn.hpp"

namespace plotsteal {

struct TsneConfig {
  double perplexity = 30.0;  // recommended range 5..80
  std::size_t iterations = 500;
  double learning_rate = 200.0;
  double exaggeration = 12.0;
  std::size_t exaggeration_iters = 250;
  double momentum_initial = 0.5;
  double momentum_final = 0.8;
  std::size_t momentum_switch_iter = 250;
  std::uint64_t seed = 0;

  void validate(std::size_t n) const;
};

struct TsneLayout {
  Matrix coords;  // n x 2
  std::vector<int> labels;

  std::size_t size() const { return coords.rows(); }
};

struct ConditionalAffinities {
  Matrix rows;  // row-stochastic, zero diagonal
  std::vector<double> sigmas;
};

// Row-conditional Gaussian affinities p_{j|i}; each sigma_i is found by
// bisection so that 2^(row entropy in bits) matches the target perplexity
// within 1e-3 relative. Rows whose pairwise distances are all equal (e.g. all
// points identical) become uniform, matching the degenerate-input convention.
ConditionalAffinities conditional_affinities(const Matrix& points, double perplexity);

// P = (C + C^T) / 2n. With row-stochastic conditionals the total mass over
// ordered pairs is exactly 1, the same index set the Q normalization uses.
Matrix symmetrize(const Matrix& conditionals);

// Student-t (1 d.o.f.) affinities of a 2-D layout, normalized over ordered
// pairs s != t.
Matrix low_dim_affinities(const Matrix& coords);

// sum_ij p_ij ln(p_ij / q_ij), with 0 * ln(0/q) = 0. Throws when q_ij = 0
// meets p_ij > 0.
double kl_divergence(const Matrix& p, const Matrix& q);

// Analytic gradient of kl_divergence(p, Q(coords)) w.r.t. the coordinates:
// 4 sum_j (p_ij - q_ij)(l_i - l_j)(1 + |l_i - l_j|^2)^-1.
Matrix kl_gradient(const Matrix& p, const Matrix& coords);

// Gradient descent with momentum and early exaggeration from a seeded
// Gaussian init (std 1e-4). Deterministic given the seed. kl_history, when
// given, receives KL(P, Q) per iteration (against the unexaggerated P).
TsneLayout fit(const EmbeddingSet& embeddings, const TsneConfig& config,
               std::vector<double>* kl_history = nullptr);

// Leave-one-out k-nearest-neighbor accuracy on the 2-D coordinates. Vote ties
// break by smallest mean distance, then lowest class index.
double knn_utility(const TsneLayout& layout, std::size_t k);

// Affinity-matrix postconditions: zero diagonal, nonnegative, symmetric
// within 1e-12, total mass 1 within 1e-9. Throws on violation.
void validate_affinities(const Matrix& p);

void save_layout_csv(const TsneLayout& layout, const std::string& path);
TsneLayout load_layout_csv(const std::string& path);

}  // namespace plotsteal
