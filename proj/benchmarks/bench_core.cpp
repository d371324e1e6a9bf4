#include <benchmark/benchmark.h>

#include "plotsteal/nn.hpp"
#include "plotsteal/raster.hpp"
#include "plotsteal/tsne.hpp"

using namespace plotsteal;

namespace {

EmbeddingSet blob_embeddings(std::size_t n, std::size_t dims) {
  Rng rng(1);
  EmbeddingSet emb;
  emb.points = Matrix(n, dims);
  emb.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int cls = static_cast<int>(i % 3);
    for (std::size_t d = 0; d < dims; ++d)
      emb.points.at(i, d) = 5.0 * cls + rng.gaussian();
    emb.labels[i] = cls;
  }
  return emb;
}

void BM_ForwardBackward(benchmark::State& state) {
  Rng rng(3);
  FeedforwardNet net({16, 32, 32, 3}, ActivationKind::relu, rng);
  Matrix batch(static_cast<std::size_t>(state.range(0)), 16);
  for (double& v : batch.values()) v = rng.gaussian();
  std::vector<int> labels(batch.rows());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 3);
  for (auto _ : state) {
    ForwardCache cache = forward(net, batch);
    Gradients grads = backward(net, cache, labels);
    benchmark::DoNotOptimize(grads);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(16)->Arg(64)->Arg(256);

void BM_TsneGradient(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const EmbeddingSet emb = blob_embeddings(n, 16);
  const Matrix p = symmetrize(conditional_affinities(emb.points, 30.0).rows);
  Rng rng(5);
  Matrix coords(n, 2);
  for (double& v : coords.values()) v = rng.gaussian();
  for (auto _ : state) {
    Matrix grad = kl_gradient(p, coords);
    benchmark::DoNotOptimize(grad);
  }
  state.SetComplexityN(static_cast<long long>(n));
}
BENCHMARK(BM_TsneGradient)->Arg(120)->Arg(240)->Arg(480)->Complexity(benchmark::oNSquared);

void BM_PerplexitySearch(benchmark::State& state) {
  const EmbeddingSet emb = blob_embeddings(static_cast<std::size_t>(state.range(0)), 16);
  for (auto _ : state) {
    auto cond = conditional_affinities(emb.points, 30.0);
    benchmark::DoNotOptimize(cond);
  }
}
BENCHMARK(BM_PerplexitySearch)->Arg(120)->Arg(240);

void BM_RenderScatter(benchmark::State& state) {
  Rng rng(7);
  TsneLayout layout;
  const std::size_t n = 240;
  layout.coords = Matrix(n, 2);
  layout.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    layout.coords.at(i, 0) = rng.gaussian();
    layout.coords.at(i, 1) = rng.gaussian();
    layout.labels[i] = static_cast<int>(i % 3);
  }
  RenderConfig config;
  for (auto _ : state) {
    PlotRaster img = render_scatter(layout, config);
    benchmark::DoNotOptimize(img);
  }
}
BENCHMARK(BM_RenderScatter);

void BM_Downsample(benchmark::State& state) {
  PlotRaster img(300, 300, 1, 200);
  for (auto _ : state) {
    PlotRaster small = downsample(img, 32, 32);
    benchmark::DoNotOptimize(small);
  }
}
BENCHMARK(BM_Downsample);

void BM_KnnUtility(benchmark::State& state) {
  Rng rng(9);
  TsneLayout layout;
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  layout.coords = Matrix(n, 2);
  layout.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    layout.coords.at(i, 0) = rng.gaussian();
    layout.coords.at(i, 1) = rng.gaussian();
    layout.labels[i] = static_cast<int>(i % 3);
  }
  for (auto _ : state) {
    double utility = knn_utility(layout, 5);
    benchmark::DoNotOptimize(utility);
  }
}
BENCHMARK(BM_KnnUtility)->Arg(240)->Arg(960);

}  // namespace

BENCHMARK_MAIN();
