#include "plotsteal/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "plotsteal/hash.hpp"

namespace plotsteal {

namespace {

// Two orthonormal seeded random directions spanning the class-layout plane.
std::pair<std::vector<double>, std::vector<double>> random_plane(std::size_t dims, Rng& rng) {
  std::vector<double> u(dims), v(dims);
  for (double& x : u) x = rng.gaussian();
  double nu = std::sqrt(std::inner_product(u.begin(), u.end(), u.begin(), 0.0));
  for (double& x : u) x /= nu;
  for (double& x : v) x = rng.gaussian();
  double dot = std::inner_product(u.begin(), u.end(), v.begin(), 0.0);
  for (std::size_t i = 0; i < dims; ++i) v[i] -= dot * u[i];
  double nv = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
  if (nv < 1e-9) throw std::runtime_error("degenerate random plane");
  for (double& x : v) x /= nv;
  return {std::move(u), std::move(v)};
}

}  // namespace

LabeledData make_synthetic_dataset(const SyntheticSpec& spec) {
  if (spec.classes < 2 || spec.dims < 2)
    throw std::invalid_argument("synthetic dataset needs >= 2 classes and >= 2 dims");
  if (spec.samples_per_class == 0) throw std::invalid_argument("samples_per_class must be >= 1");
  if (spec.dispersion < 0.0) throw std::invalid_argument("dispersion must be >= 0");

  Rng rng(derive_seed(spec.seed, "synthetic-data"));
  auto [u, v] = random_plane(spec.dims, rng);

  const std::size_t n = spec.classes * spec.samples_per_class;
  LabeledData data;
  data.samples = Matrix(n, spec.dims);
  data.labels.resize(n);

  const double two_pi = 6.283185307179586476925286766559;
  std::size_t row = 0;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    const double theta = two_pi * static_cast<double>(c) / static_cast<double>(spec.classes);
    for (std::size_t s = 0; s < spec.samples_per_class; ++s, ++row) {
      double px, py;
      if (spec.kind == SyntheticKind::blobs) {
        px = std::cos(theta);
        py = std::sin(theta);
      } else {
        // Concentric rings: class c lives on radius 1 + 0.75 c.
        const double radius = 1.0 + 0.75 * static_cast<double>(c);
        const double angle = two_pi * rng.uniform();
        px = radius * std::cos(angle);
        py = radius * std::sin(angle);
      }
      auto out = data.samples.row(row);
      for (std::size_t d = 0; d < spec.dims; ++d) out[d] = px * u[d] + py * v[d];
      // dispersion 0 leaves every blob sample exactly on its class center
      if (spec.dispersion > 0.0)
        for (std::size_t d = 0; d < spec.dims; ++d) out[d] += spec.dispersion * rng.gaussian();
      data.labels[row] = static_cast<int>(c);
    }
  }
  return data;
}

DatasetBundle partition(const LabeledData& data, const std::array<double, 4>& fractions,
                        std::uint64_t seed) {
  double total = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw std::invalid_argument("partition fractions must be >= 0");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("partition fractions must sum to 1");
  if (data.size() == 0) throw std::invalid_argument("partition: empty dataset");

  int max_label = 0;
  for (int l : data.labels) max_label = std::max(max_label, l);
  const std::size_t classes = static_cast<std::size_t>(max_label) + 1;

  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < data.size(); ++i)
    by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);

  Rng rng(derive_seed(seed, "partition"));
  std::array<std::vector<std::size_t>, 4> split_indices;

  for (std::size_t c = 0; c < classes; ++c) {
    auto& idx = by_class[c];
    if (idx.empty()) throw std::invalid_argument("partition: class with no samples");
    rng.shuffle(idx);
    // Largest-remainder allocation keeps every split within +-1 of the
    // proportional count.
    const double nc = static_cast<double>(idx.size());
    std::array<std::size_t, 4> counts{};
    std::array<double, 4> remainders{};
    std::size_t assigned = 0;
    for (std::size_t s = 0; s < 4; ++s) {
      const double exact = fractions[s] * nc;
      counts[s] = static_cast<std::size_t>(std::floor(exact));
      remainders[s] = exact - std::floor(exact);
      assigned += counts[s];
    }
    std::array<std::size_t, 4> order{0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
    for (std::size_t k = 0; assigned < idx.size(); ++k, ++assigned) counts[order[k % 4]] += 1;

    for (std::size_t s = 0; s < 4; ++s)
      if (counts[s] == 0)
        throw std::invalid_argument("partition would leave class " + std::to_string(c) +
                                    " empty in split " + std::to_string(s));
    std::size_t cursor = 0;
    for (std::size_t s = 0; s < 4; ++s)
      for (std::size_t k = 0; k < counts[s]; ++k) split_indices[s].push_back(idx[cursor++]);
  }

  auto build = [&](const std::vector<std::size_t>& indices) {
    std::vector<std::size_t> sorted(indices);
    std::sort(sorted.begin(), sorted.end());
    LabeledData out;
    out.samples = Matrix(sorted.size(), data.samples.cols());
    out.labels.resize(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      std::copy_n(data.samples.row(sorted[i]).data(), data.samples.cols(), out.samples.row(i).data());
      out.labels[i] = data.labels[sorted[i]];
    }
    return out;
  };

  DatasetBundle bundle;
  bundle.shadow_train = build(split_indices[0]);
  bundle.shadow_test = build(split_indices[1]);
  bundle.target_train = build(split_indices[2]);
  bundle.target_test = build(split_indices[3]);
  return bundle;
}

}  // namespace plotsteal
