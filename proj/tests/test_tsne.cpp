#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "plotsteal/tsne.hpp"

using namespace plotsteal;

namespace {

Matrix random_points(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, d);
  for (double& v : m.values()) v = rng.gaussian();
  return m;
}

EmbeddingSet two_blobs_8d(std::size_t per_blob, std::uint64_t seed) {
  Rng rng(seed);
  EmbeddingSet emb;
  emb.points = Matrix(2 * per_blob, 8);
  emb.labels.resize(2 * per_blob);
  for (std::size_t i = 0; i < 2 * per_blob; ++i) {
    const int cls = i < per_blob ? 0 : 1;
    for (std::size_t d = 0; d < 8; ++d)
      emb.points.at(i, d) = (cls ? 10.0 : 0.0) + 0.5 * rng.gaussian();
    emb.labels[i] = cls;
  }
  return emb;
}

double row_perplexity(const Matrix& rows, std::size_t i) {
  double h = 0.0;
  for (std::size_t j = 0; j < rows.cols(); ++j) {
    const double p = rows.at(i, j);
    if (p > 0) h -= p * std::log2(p);
  }
  return std::exp2(h);
}

}  // namespace

TEST_CASE("conditional_affinities: equidistant points give uniform rows") {
  // Standard simplex vertices are pairwise equidistant.
  const std::size_t n = 5;
  Matrix points(n, n);
  for (std::size_t i = 0; i < n; ++i) points.at(i, i) = 1.0;
  const auto cond = conditional_affinities(points, 2.5);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      CHECK(cond.rows.at(i, j) ==
            doctest::Approx(i == j ? 0.0 : 1.0 / (n - 1)).epsilon(1e-12));
}

TEST_CASE("conditional_affinities: a duplicate point dominates its row") {
  // Rows 2-4 keep unique nearest neighbors so every row can reach the target
  // perplexity; rows 0/1 are exact duplicates of each other.
  Matrix points = Matrix::from_rows({{0.0, 0.0},
                                     {0.0, 0.0},  // duplicate of row 0
                                     {100.0, 0.0},
                                     {101.0, 0.0},
                                     {102.5, 0.0}});
  const auto cond = conditional_affinities(points, 1.5);
  double max_entry = 0.0;
  for (std::size_t j = 1; j < 5; ++j) max_entry = std::max(max_entry, cond.rows.at(0, j));
  CHECK(cond.rows.at(0, 1) == max_entry);
  CHECK(cond.rows.at(0, 1) > 0.9);
}

TEST_CASE("conditional_affinities: achieved perplexity within 1e-3 relative") {
  const Matrix points = random_points(6, 3, 11);
  const auto cond = conditional_affinities(points, 3.0);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(std::abs(row_perplexity(cond.rows, i) - 3.0) <= 3.0 * 1e-3);
    double sum = 0.0;
    for (std::size_t j = 0; j < 6; ++j) sum += cond.rows.at(i, j);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(cond.rows.at(i, i) == 0.0);
  }
  // Larger random instance, the default perplexity.
  const Matrix big = random_points(120, 10, 13);
  const auto cond_big = conditional_affinities(big, 30.0);
  for (std::size_t i = 0; i < 120; ++i)
    CHECK(std::abs(row_perplexity(cond_big.rows, i) - 30.0) <= 30.0 * 1e-3);
}

TEST_CASE("conditional_affinities: unreachable perplexity reports the row") {
  const Matrix points = random_points(4, 2, 17);
  CHECK_THROWS_AS(conditional_affinities(points, 3.9), std::runtime_error);
}

TEST_CASE("symmetrize: 2-point and 3-point hand oracles, unit total mass") {
  // n=2: both conditionals are 1, so p_12 = p_21 = (1+1)/(2*2) = 0.5.
  Matrix two = Matrix::from_rows({{0.0, 1.0}, {1.0, 0.0}});
  const Matrix p2 = symmetrize(two);
  CHECK(p2.at(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(p2.at(1, 0) == doctest::Approx(0.5).epsilon(1e-15));
  validate_affinities(p2);

  Matrix three = Matrix::from_rows({{0.0, 0.7, 0.3}, {0.4, 0.0, 0.6}, {0.2, 0.8, 0.0}});
  const Matrix p3 = symmetrize(three);
  CHECK(p3.at(0, 1) == doctest::Approx((0.7 + 0.4) / 6.0).epsilon(1e-15));
  CHECK(p3.at(0, 2) == doctest::Approx((0.3 + 0.2) / 6.0).epsilon(1e-15));
  CHECK(p3.at(1, 2) == doctest::Approx((0.6 + 0.8) / 6.0).epsilon(1e-15));
  validate_affinities(p3);

  // Symmetric conditionals: P is the conditionals divided by n.
  Matrix sym = Matrix::from_rows({{0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}, {0.5, 0.5, 0.0}});
  const Matrix ps = symmetrize(sym);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j) CHECK(ps.at(i, j) == doctest::Approx(sym.at(i, j) / 3.0).epsilon(1e-15));

  // Asymmetry removed exactly.
  const auto cond = conditional_affinities(random_points(8, 3, 19), 4.0);
  const Matrix p = symmetrize(cond.rows);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) CHECK(p.at(i, j) == p.at(j, i));
  validate_affinities(p);
}

TEST_CASE("low_dim_affinities: n=2 gives 0.5 regardless of distance") {
  for (double gap : {0.1, 5.0, 500.0}) {
    Matrix coords = Matrix::from_rows({{0.0, 0.0}, {gap, 0.0}});
    const Matrix q = low_dim_affinities(coords);
    CHECK(q.at(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(q.at(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("low_dim_affinities: equilateral triangle gives 1/6 everywhere") {
  const double h = std::sqrt(3.0) / 2.0;
  Matrix coords = Matrix::from_rows({{0.0, 0.0}, {1.0, 0.0}, {0.5, h}});
  const Matrix q = low_dim_affinities(coords);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j) CHECK(q.at(i, j) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  validate_affinities(q);
}

TEST_CASE("low_dim_affinities: equals the naive double-loop oracle to 1e-12") {
  for (std::size_t n : {5ul, 17ul, 50ul}) {
    const Matrix coords = random_points(n, 2, 23 + n);
    const Matrix q = low_dim_affinities(coords);
    // Naive oracle over ordered pairs.
    double z = 0.0;
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t t = 0; t < n; ++t) {
        if (s == t) continue;
        const double dx = coords.at(s, 0) - coords.at(t, 0);
        const double dy = coords.at(s, 1) - coords.at(t, 1);
        z += 1.0 / (1.0 + dx * dx + dy * dy);
      }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) {
          CHECK(q.at(i, j) == 0.0);
          continue;
        }
        const double dx = coords.at(i, 0) - coords.at(j, 0);
        const double dy = coords.at(i, 1) - coords.at(j, 1);
        const double expected = (1.0 / (1.0 + dx * dx + dy * dy)) / z;
        CHECK(std::abs(q.at(i, j) - expected) < 1e-12);
      }
    validate_affinities(q);
  }
}

TEST_CASE("kl_divergence: zero at P=Q, nonnegative, hand-computed 3-point case") {
  const Matrix q = low_dim_affinities(random_points(6, 2, 31));
  CHECK(kl_divergence(q, q) == doctest::Approx(0.0).epsilon(1e-15));

  const auto cond = conditional_affinities(random_points(6, 4, 37), 3.0);
  const Matrix p = symmetrize(cond.rows);
  CHECK(kl_divergence(p, q) >= 0.0);

  Matrix p3 = Matrix::from_rows({{0.0, 0.2, 0.1}, {0.2, 0.0, 0.15}, {0.1, 0.15, 0.0}});
  Matrix q3 = Matrix::from_rows({{0.0, 0.1, 0.25}, {0.1, 0.0, 0.15}, {0.25, 0.15, 0.0}});
  double expected = 0.0;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j && p3.at(i, j) > 0) expected += p3.at(i, j) * std::log(p3.at(i, j) / q3.at(i, j));
  CHECK(kl_divergence(p3, q3) == doctest::Approx(expected).epsilon(1e-12));

  Matrix qz = q3;
  qz.at(0, 1) = 0.0;
  CHECK_THROWS_AS(kl_divergence(p3, qz), std::runtime_error);
}

TEST_CASE("kl_gradient: matches central finite differences on 5-point layouts") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto cond = conditional_affinities(random_points(5, 4, seed), 2.5);
    const Matrix p = symmetrize(cond.rows);
    Matrix coords = random_points(5, 2, seed + 40);
    const Matrix grad = kl_gradient(p, coords);

    const double h = 1e-6;
    double num = 0.0, denom = 0.0;
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t k = 0; k < 2; ++k) {
        const double original = coords.at(i, k);
        coords.at(i, k) = original + h;
        const double up = kl_divergence(p, low_dim_affinities(coords));
        coords.at(i, k) = original - h;
        const double down = kl_divergence(p, low_dim_affinities(coords));
        coords.at(i, k) = original;
        const double fd = (up - down) / (2.0 * h);
        num += (fd - grad.at(i, k)) * (fd - grad.at(i, k));
        denom += fd * fd;
      }
    CHECK(std::sqrt(num) / std::max(std::sqrt(denom), 1e-12) < 1e-4);
  }
}

TEST_CASE("fit: deterministic, KL trend non-increasing, separable blobs embed well") {
  const EmbeddingSet emb = two_blobs_8d(30, 47);
  TsneConfig config;
  config.perplexity = 10.0;
  config.seed = 3;

  const TsneLayout a = fit(emb, config);
  const TsneLayout b = fit(emb, config);
  CHECK(a.coords.values() == b.coords.values());

  // Last-100-iteration KL slope <= 0 in at least 9 of 10 seeds.
  int good = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    TsneConfig cfg = config;
    cfg.seed = seed;
    std::vector<double> history;
    const TsneLayout layout = fit(emb, cfg, &history);
    REQUIRE(history.size() == cfg.iterations);
    const std::size_t window = 100;
    const std::size_t begin = history.size() - window;
    // Least-squares slope over the final window.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < window; ++i) {
      const double x = static_cast<double>(i);
      const double y = history[begin + i];
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double n = static_cast<double>(window);
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    if (slope <= 0.0) ++good;
    if (seed == 0) CHECK(knn_utility(layout, 5) >= 0.95);
  }
  CHECK(good >= 9);
}

TEST_CASE("fit: divergence reports the iteration") {
  const EmbeddingSet emb = two_blobs_8d(10, 53);
  TsneConfig config;
  config.perplexity = 5.0;
  config.learning_rate = 1e250;
  config.iterations = 50;
  CHECK_THROWS_WITH_AS(static_cast<void>(fit(emb, config)), doctest::Contains("iteration"),
                       std::runtime_error);
}

TEST_CASE("fit: degenerate all-identical input still produces a layout") {
  EmbeddingSet emb;
  emb.points = Matrix(8, 3, 1.5);
  emb.labels.assign(8, 0);
  TsneConfig config;
  config.perplexity = 4.0;
  config.iterations = 50;
  const TsneLayout layout = fit(emb, config);
  CHECK(layout.coords.all_finite());
}

TEST_CASE("knn_utility: separated clusters, duplicates, shuffled labels") {
  // Two tight, far-apart clusters: perfect leave-one-out accuracy.
  TsneLayout layout;
  layout.coords = Matrix(20, 2);
  layout.labels.resize(20);
  Rng rng(59);
  for (std::size_t i = 0; i < 20; ++i) {
    const int cls = i < 10 ? 0 : 1;
    layout.coords.at(i, 0) = (cls ? 100.0 : 0.0) + 0.1 * rng.gaussian();
    layout.coords.at(i, 1) = 0.1 * rng.gaussian();
    layout.labels[i] = cls;
  }
  CHECK(knn_utility(layout, 5) == doctest::Approx(1.0));

  // k=1 with duplicated points of the same label.
  TsneLayout dup;
  dup.coords = Matrix(6, 2);
  dup.labels = {0, 0, 1, 1, 2, 2};
  for (std::size_t i = 0; i < 6; i += 2) {
    dup.coords.at(i, 0) = static_cast<double>(i) * 10.0;
    dup.coords.at(i + 1, 0) = static_cast<double>(i) * 10.0;
  }
  CHECK(knn_utility(dup, 1) == doctest::Approx(1.0));

  // Uniformly shuffled labels on 2 balanced classes: about 0.5.
  TsneLayout shuffled;
  const std::size_t n = 600;
  shuffled.coords = Matrix(n, 2);
  shuffled.labels.resize(n);
  Rng rng2(61);
  for (std::size_t i = 0; i < n; ++i) {
    shuffled.coords.at(i, 0) = rng2.gaussian();
    shuffled.coords.at(i, 1) = rng2.gaussian();
    shuffled.labels[i] = static_cast<int>(i % 2);
  }
  rng2.shuffle(shuffled.labels);
  const double acc = knn_utility(shuffled, 5);
  CHECK(acc > 0.4);
  CHECK(acc < 0.6);

  CHECK_THROWS_AS(knn_utility(shuffled, n), std::invalid_argument);
}

TEST_CASE("layout csv: round trip") {
  TsneLayout layout;
  layout.coords = random_points(7, 2, 67);
  layout.labels = {0, 1, 2, 0, 1, 2, 0};
  const std::string path =
      (std::filesystem::temp_directory_path() / "plotsteal_layout_test.csv").string();
  save_layout_csv(layout, path);
  const TsneLayout loaded = load_layout_csv(path);
  CHECK(loaded.coords.values() == layout.coords.values());
  CHECK(loaded.labels == layout.labels);
  std::filesystem::remove(path);
}
