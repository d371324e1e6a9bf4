#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "plotsteal/defense.hpp"
#include "plotsteal/raster.hpp"

using namespace plotsteal;

namespace {

LossCurve make_curve(std::initializer_list<double> train, std::initializer_list<double> test) {
  LossCurve curve;
  double t = 0.2;
  for (double v : train) {
    curve.train_points.push_back({t, v});
    t += 0.2;
  }
  t = 1.0;
  for (double v : test) {
    curve.test_points.push_back({t, v});
    t += 1.0;
  }
  return curve;
}

}  // namespace

TEST_CASE("round_embeddings: decimals, integer mode, idempotence") {
  Matrix points = Matrix::from_rows({{0.123, -0.456}, {2.5, -2.5}});
  const Matrix one = round_embeddings(points, 1);
  CHECK(one.at(0, 0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(one.at(0, 1) == doctest::Approx(-0.5).epsilon(1e-15));

  // decimals=0 is integer rounding, half away from zero.
  const Matrix ints = round_embeddings(points, 0);
  CHECK(ints.at(1, 0) == 3.0);
  CHECK(ints.at(1, 1) == -3.0);
  CHECK(ints.at(0, 0) == 0.0);

  CHECK(round_embeddings(one, 1).values() == one.values());
}

TEST_CASE("threshold_embeddings: the worked 60% example and properties") {
  Matrix row = Matrix::from_rows({{5.0, 0.0, 3.0, 1.0, 2.0}});
  const Matrix kept = threshold_embeddings(row, 0.6);
  CHECK(kept.at(0, 0) == 5.0);
  CHECK(kept.at(0, 1) == 0.0);
  CHECK(kept.at(0, 2) == 3.0);
  CHECK(kept.at(0, 3) == 0.0);
  CHECK(kept.at(0, 4) == 2.0);

  // keep_fraction = 1 is the identity.
  CHECK(threshold_embeddings(row, 1.0).values() == row.values());

  // Tie break: lower index kept first.
  Matrix ties = Matrix::from_rows({{1.0, 2.0, 2.0, 2.0}});
  const Matrix kept_ties = threshold_embeddings(ties, 0.5);  // ceil(0.5*4) = 2
  CHECK(kept_ties.at(0, 0) == 0.0);
  CHECK(kept_ties.at(0, 1) == 2.0);
  CHECK(kept_ties.at(0, 2) == 2.0);
  CHECK(kept_ties.at(0, 3) == 0.0);

  // Largest by absolute value, well-defined for negative embeddings.
  Matrix negatives = Matrix::from_rows({{-5.0, 4.0, -0.5, 0.1}});
  const Matrix kept_neg = threshold_embeddings(negatives, 0.5);
  CHECK(kept_neg.at(0, 0) == -5.0);
  CHECK(kept_neg.at(0, 1) == 4.0);
  CHECK(kept_neg.at(0, 2) == 0.0);
  CHECK(kept_neg.at(0, 3) == 0.0);

  // Exact kept-count per row: ceil(keep * d).
  Rng rng(5);
  Matrix random(20, 7);
  for (double& v : random.values()) v = rng.gaussian();
  const Matrix kept_rand = threshold_embeddings(random, 0.6);  // ceil(4.2) = 5
  for (std::size_t i = 0; i < 20; ++i) {
    std::size_t nonzero = 0;
    for (std::size_t j = 0; j < 7; ++j)
      if (kept_rand.at(i, j) != 0.0) ++nonzero;
    CHECK(nonzero == 5);
  }
}

TEST_CASE("noise_embeddings: identity at zero, distributional correctness, determinism") {
  Rng rng(7);
  Matrix points(120, 100);
  for (double& v : points.values()) v = 3.0 * rng.gaussian();

  CHECK(noise_embeddings(points, 0.0, 1).values() == points.values());

  const double fraction = 0.5;
  const Matrix noised = noise_embeddings(points, fraction, 11);
  CHECK(noise_embeddings(points, fraction, 11).values() == noised.values());

  // std of all values times the fraction; n*d >= 10^4 keeps the sample std
  // within 5%.
  std::vector<double> all(points.values());
  const double mean = std::accumulate(all.begin(), all.end(), 0.0) / all.size();
  double var = 0.0;
  for (double v : all) var += (v - mean) * (v - mean);
  const double requested = fraction * std::sqrt(var / all.size());

  double noise_var = 0.0;
  double noise_mean = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    noise_mean += noised.values()[i] - points.values()[i];
  noise_mean /= static_cast<double>(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d = noised.values()[i] - points.values()[i] - noise_mean;
    noise_var += d * d;
  }
  const double sample_std = std::sqrt(noise_var / static_cast<double>(points.size()));
  CHECK(std::abs(sample_std - requested) <= 0.05 * requested);
}

TEST_CASE("round_coordinates: integer and even-integer units") {
  TsneLayout layout;
  layout.coords = Matrix::from_rows({{3.7, 2.9}, {-3.7, 3.0}, {0.4, -0.4}});
  layout.labels = {0, 1, 2};

  const TsneLayout ints = round_coordinates(layout, CoordinateRoundUnit::integer);
  CHECK(ints.coords.at(0, 0) == 4.0);   // 3.7 -> 4
  CHECK(ints.coords.at(0, 1) == 3.0);
  CHECK(ints.coords.at(1, 0) == -4.0);
  CHECK(ints.coords.at(2, 0) == 0.0);

  const TsneLayout evens = round_coordinates(layout, CoordinateRoundUnit::even_integer);
  CHECK(evens.coords.at(0, 0) == 4.0);  // 3.7 -> 4 under both units
  CHECK(evens.coords.at(0, 1) == 2.0);  // 2.9 -> 2 (|2.9-2| < |2.9-4|)
  CHECK(evens.coords.at(1, 1) == 4.0);  // exact midpoint 3.0 -> larger magnitude
  CHECK(evens.coords.at(1, 0) == -4.0);
  CHECK(evens.coords.at(2, 1) == 0.0);
}

TEST_CASE("round_coordinates: rendered markers sit on the rounding grid") {
  // A spread layout rounded to integers: every distinct marker center must
  // map from an integer coordinate, i.e. the distinct pixel centers cannot
  // outnumber the integer lattice points in range.
  Rng rng(13);
  TsneLayout layout;
  layout.coords = Matrix(50, 2);
  layout.labels.assign(50, 0);
  for (double& v : layout.coords.values()) v = 4.0 * rng.gaussian();
  const TsneLayout rounded = round_coordinates(layout, CoordinateRoundUnit::integer);
  for (double v : rounded.coords.values()) CHECK(v == std::round(v));

  double xlo = rounded.coords.at(0, 0), xhi = xlo;
  for (std::size_t i = 0; i < 50; ++i) {
    xlo = std::min(xlo, rounded.coords.at(i, 0));
    xhi = std::max(xhi, rounded.coords.at(i, 0));
  }
  std::set<double> distinct_x(rounded.coords.values().begin(),
                              rounded.coords.values().end());
  CHECK(static_cast<double>(distinct_x.size()) <= (xhi - xlo) + 1 + 50);
}

TEST_CASE("noise_coordinates: identity at zero fraction, seeded determinism") {
  TsneLayout layout;
  layout.coords = Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}, {5.0, 6.0}});
  layout.labels = {0, 1, 0};
  CHECK(noise_coordinates(layout, 0.0, 5).coords.values() == layout.coords.values());
  const TsneLayout a = noise_coordinates(layout, 0.05, 5);
  const TsneLayout b = noise_coordinates(layout, 0.05, 5);
  CHECK(a.coords.values() == b.coords.values());
  CHECK(a.coords.values() != layout.coords.values());
}

TEST_CASE("smooth_gaussian: constant curves stay fixed, losses stay nonnegative") {
  const LossCurve constant = make_curve({0.5, 0.5, 0.5}, {0.5, 0.5});
  const LossCurve smoothed = smooth_gaussian(constant, 3);
  for (std::size_t i = 0; i < constant.train_points.size(); ++i)
    CHECK(smoothed.train_points[i].loss == constant.train_points[i].loss);

  const LossCurve varied = make_curve({2.0, 1.0, 0.2, 0.1}, {2.0, 0.5});
  const LossCurve noised = smooth_gaussian(varied, 9);
  CHECK(noised.train_points.size() == varied.train_points.size());
  for (const auto& p : noised.train_points) CHECK(p.loss >= 0.0);
  const LossCurve again = smooth_gaussian(varied, 9);
  for (std::size_t i = 0; i < noised.train_points.size(); ++i)
    CHECK(noised.train_points[i].loss == again.train_points[i].loss);
}

TEST_CASE("smooth_tensorboard: the worked w=0.2 example and identities") {
  const LossCurve curve = make_curve({1.0, 0.5}, {1.0, 0.5});
  const LossCurve smoothed = smooth_tensorboard(curve, 0.2);
  CHECK(smoothed.train_points[0].loss == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(smoothed.train_points[1].loss == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(smoothed.test_points[1].loss == doctest::Approx(0.6).epsilon(1e-15));

  // w=0 is the identity; constant curves are fixed points.
  const LossCurve varied = make_curve({1.0, 0.7, 0.3}, {0.9, 0.6});
  const LossCurve w0 = smooth_tensorboard(varied, 0.0);
  for (std::size_t i = 0; i < varied.train_points.size(); ++i)
    CHECK(w0.train_points[i].loss == varied.train_points[i].loss);
  const LossCurve constant = make_curve({0.4, 0.4, 0.4}, {0.4, 0.4});
  const LossCurve smoothed_const = smooth_tensorboard(constant, 0.7);
  for (std::size_t i = 0; i < constant.train_points.size(); ++i)
    CHECK(smoothed_const.train_points[i].loss == doctest::Approx(0.4).epsilon(1e-15));

  // Raw (not smoothed) previous value enters the formula.
  const LossCurve three = make_curve({1.0, 0.5, 0.25}, {1.0, 1.0});
  const LossCurve sm = smooth_tensorboard(three, 0.2);
  CHECK(sm.train_points[2].loss == doctest::Approx(0.2 * 0.5 + 0.8 * 0.25).epsilon(1e-15));
}

TEST_CASE("smooth_sliding: the worked s=2 example and suffix truncation") {
  const LossCurve curve = make_curve({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0});
  const LossCurve smoothed = smooth_sliding(curve, 2);
  CHECK(smoothed.train_points[0].loss == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(smoothed.train_points[1].loss == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(smoothed.train_points[2].loss == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(smoothed.test_points[1].loss == doctest::Approx(2.5).epsilon(1e-15));

  // s >= length: first output is the global mean.
  const LossCurve wide = smooth_sliding(curve, 10);
  CHECK(wide.train_points[0].loss == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(wide.train_points[2].loss == doctest::Approx(3.0).epsilon(1e-15));

  // Constant curves unchanged; length preserved.
  const LossCurve constant = make_curve({0.7, 0.7, 0.7, 0.7}, {0.7, 0.7});
  const LossCurve sm_const = smooth_sliding(constant, 2);
  REQUIRE(sm_const.train_points.size() == 4);
  for (const auto& p : sm_const.train_points) CHECK(p.loss == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("l2_utility: identity, single-point difference, hand-computed case") {
  const LossCurve curve = make_curve({1.0, 0.8, 0.6}, {0.9, 0.7});
  CHECK(l2_utility(curve, curve) == doctest::Approx(0.0).epsilon(1e-15));

  LossCurve shifted = curve;
  shifted.train_points[1].loss += 0.3;
  CHECK(l2_utility(curve, shifted) == doctest::Approx(0.15).epsilon(1e-12));  // delta / 2

  LossCurve both = curve;
  both.train_points[0].loss += 0.3;
  both.train_points[2].loss -= 0.4;
  both.test_points[1].loss += 0.12;
  const double expected = 0.5 * (std::sqrt(0.3 * 0.3 + 0.4 * 0.4) + 0.12);
  CHECK(l2_utility(curve, both) == doctest::Approx(expected).epsilon(1e-12));

  LossCurve wrong_len = curve;
  wrong_len.train_points.pop_back();
  CHECK_THROWS_AS(l2_utility(curve, wrong_len), std::invalid_argument);
}

TEST_CASE("defense tags: parse/format round trip") {
  for (const std::string tag :
       {"none", "er:0", "er:2", "et:0.59999999999999998", "en:0.5", "cr:int", "cr:even",
        "cn:0.05000000000000000277"}) {
    const TsneDefense d = TsneDefense::parse(tag);
    CHECK(TsneDefense::parse(d.tag()).tag() == d.tag());
  }
  for (const std::string tag : {"none", "gaussian", "tensorboard:0.2", "sliding:2"}) {
    const LossDefense d = LossDefense::parse(tag);
    CHECK(LossDefense::parse(d.tag()).tag() == d.tag());
  }
  CHECK_THROWS_AS(TsneDefense::parse("bogus:1"), std::invalid_argument);
  CHECK_THROWS_AS(LossDefense::parse("sliding:0"), std::invalid_argument);
}

TEST_CASE("apply_tsne_defense: none is the identity on the layout") {
  TsneLayout layout;
  layout.coords = Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}, {0.0, 1.0}, {2.0, 2.0}});
  layout.labels = {0, 1, 0, 1};
  EmbeddingSet emb;
  emb.points = Matrix(4, 3, 1.0);
  emb.labels = layout.labels;
  const TsneLayout out =
      apply_tsne_defense(TsneDefense::none_defense(), emb, layout, TsneConfig{}, 1);
  CHECK(out.coords.values() == layout.coords.values());
}
