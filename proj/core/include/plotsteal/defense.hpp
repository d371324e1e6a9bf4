#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "plotsteal/nn.hpp"
#include "plotsteal/tsne.hpp"

namespace plotsteal {

enum class CoordinateRoundUnit { integer, even_integer };

// The five scatter-plot defenses: perturb embeddings before the t-SNE fit
// (E-R, E-T, E-N) or the fitted coordinates (C-R, C-N).
struct TsneDefense {
  enum class Kind { none, round_embeddings, threshold_embeddings, noise_embeddings,
                    round_coordinates, noise_coordinates };
  Kind kind = Kind::none;
  std::size_t decimals = 0;                                      // E-R
  double keep_fraction = 1.0;                                    // E-T
  double std_fraction = 0.0;                                     // E-N / C-N
  CoordinateRoundUnit unit = CoordinateRoundUnit::integer;       // C-R

  bool perturbs_embeddings() const {
    return kind == Kind::round_embeddings || kind == Kind::threshold_embeddings ||
           kind == Kind::noise_embeddings;
  }
  std::string tag() const;
  static TsneDefense parse(const std::string& tag);
  static TsneDefense none_defense() { return {}; }
};

struct LossDefense {
  enum class Kind { none, gaussian, tensorboard, sliding_window };
  Kind kind = Kind::none;
  double weight = 0.2;        // TensorBoard w in [0, 1)
  std::size_t window = 2;     // sliding window s >= 1

  std::string tag() const;
  static LossDefense parse(const std::string& tag);
  static LossDefense none_defense() { return {}; }
};

// E-R: every value rounded half-away-from-zero to `decimals` places.
Matrix round_embeddings(const Matrix& points, std::size_t decimals);

// E-T: per row, keep the ceil(keep_fraction * d) entries of largest absolute
// value (ties keep the lower index), zero the rest.
Matrix threshold_embeddings(const Matrix& points, double keep_fraction);

// E-N: i.i.d. Gaussian noise with std = std_fraction * std(all values).
Matrix noise_embeddings(const Matrix& points, double std_fraction, std::uint64_t seed);

// C-R: round both coordinates to integers or to even integers (ties toward
// the larger magnitude).
TsneLayout round_coordinates(const TsneLayout& layout, CoordinateRoundUnit unit);

// C-N: Gaussian noise on both coordinates, std = std_fraction * std of all
// 2n coordinate values in the plot.
TsneLayout noise_coordinates(const TsneLayout& layout, double std_fraction, std::uint64_t seed);

// Applies any t-SNE defense given the inputs it needs; embedding-stage
// defenses require a refit with `config`.
TsneLayout apply_tsne_defense(const TsneDefense& defense, const EmbeddingSet& embeddings,
                              const TsneLayout& undefended, const TsneConfig& config,
                              std::uint64_t noise_seed);

// Gaussian loss noise; the std is the mean of the train and test curves'
// per-curve stds, applied to both, with losses clamped at >= 0.
LossCurve smooth_gaussian(const LossCurve& curve, std::uint64_t seed);

// TensorBoard smoothing L*_t = w L_{t-1} + (1-w) L_t with the raw previous
// value; L*_0 = L_0. Train and test lists smoothed independently.
LossCurve smooth_tensorboard(const LossCurve& curve, double w);

// Forward sliding-window mean over up to s+1 values, truncated at the end of
// the series.
LossCurve smooth_sliding(const LossCurve& curve, std::size_t window);

LossCurve apply_loss_defense(const LossDefense& defense, const LossCurve& curve,
                             std::uint64_t noise_seed);

// Euclidean distance computed per curve (train, test) and averaged over the
// two curves.
double l2_utility(const LossCurve& original, const LossCurve& defended);

double round_half_away_from_zero(double v);
double round_to_even_integer(double v);

}  // namespace plotsteal
