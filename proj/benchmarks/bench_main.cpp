#include <benchmark/benchmark.h>

#include "hotkit/allset.hpp"
#include "hotkit/model.hpp"
#include "hotkit/textual_hot.hpp"
#include "hotkit/visual_hot.hpp"

namespace hotkit {
namespace {

Matrix gaussian(std::size_t rows, std::size_t cols, SplitMix64& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

// edges of random size 2..max_size over num_vertices vertices
Hypergraph random_hypergraph(std::size_t num_vertices, std::size_t num_edges,
                             std::size_t max_size, SplitMix64& rng) {
  Hypergraph h{num_vertices, {}};
  for (std::size_t e = 0; e < num_edges; ++e) {
    std::vector<VertexId> order(num_vertices);
    for (std::size_t i = 0; i < num_vertices; ++i) order[i] = static_cast<VertexId>(i);
    rng.shuffle(std::span<VertexId>(order));
    order.resize(2 + rng.choice(max_size - 1));
    h.edges.push_back({order, {}});
  }
  return h;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  SplitMix64 rng(1);
  const Matrix a = gaussian(n, n, rng);
  const Matrix b = gaussian(n, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

void BM_MultisetPool(benchmark::State& state) {
  const auto size = static_cast<std::size_t>(state.range(0));
  SplitMix64 rng(2);
  const AllSetBlockParams p = AllSetBlockParams::init(32, 4, rng);
  const Matrix set = gaussian(size, 32, rng);
  for (auto _ : state) benchmark::DoNotOptimize(multiset_pool(set, p));
}
BENCHMARK(BM_MultisetPool)->Arg(4)->Arg(16)->Arg(64);

void BM_Encode(benchmark::State& state) {
  const auto vertices = static_cast<std::size_t>(state.range(0));
  SplitMix64 rng(3);
  const EncoderParams p = EncoderParams::init(EncoderConfig{.num_layers = 2}, 32, 4, rng);
  const Hypergraph h = random_hypergraph(vertices, vertices / 2, 5, rng);
  const Matrix x = gaussian(vertices, 32, rng);
  for (auto _ : state) benchmark::DoNotOptimize(encode(x, h, p));
}
BENCHMARK(BM_Encode)->Arg(32)->Arg(128);

void BM_KMeans(benchmark::State& state) {
  const auto points = static_cast<std::size_t>(state.range(0));
  SplitMix64 rng(4);
  const Matrix patches = gaussian(points, 32, rng);
  const KMeansConfig cfg{.m = 8, .max_iters = 100, .rel_tol = 1e-9, .seed = 0,
                         .transfer_refinement = true};
  for (auto _ : state) benchmark::DoNotOptimize(kmeans(patches, cfg));
}
BENCHMARK(BM_KMeans)->Arg(64)->Arg(256);

void BM_RandomWalkHypergraph(benchmark::State& state) {
  SplitMix64 rng(5);
  ThoughtGraph g;
  for (int i = 0; i < 200; ++i) g.thoughts.push_back("t" + std::to_string(i));
  for (int i = 0; i < 800; ++i)
    g.triples.push_back({static_cast<VertexId>(rng.choice(200)), "r",
                         static_cast<VertexId>(rng.choice(200))});
  WalkConfig cfg;
  cfg.k = 3;
  cfg.n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(build_textual_hot(g, cfg));
}
BENCHMARK(BM_RandomWalkHypergraph)->Arg(64)->Arg(512);

void BM_ForwardStack(benchmark::State& state) {
  const ModelDims dims{.d = 32, .d_c = 32, .d_m = 32, .heads = 4, .layers = 1, .n_text = 16,
                       .n_img = 8};
  SplitMix64 rng(6);
  const HotModelParams p = HotModelParams::init(dims, rng);
  const Hypergraph text = random_hypergraph(24, dims.n_text, 4, rng);
  const Hypergraph image = random_hypergraph(64, dims.n_img, 8, rng);
  const Matrix x = gaussian(24, 32, rng);
  const Matrix patches = gaussian(64, 32, rng);
  const Matrix seq = gaussian(72, 32, rng);
  const StackInputs in{x, text, patches, image, seq};
  for (auto _ : state) benchmark::DoNotOptimize(forward_stack(in, p));
}
BENCHMARK(BM_ForwardStack);

void BM_BackwardStack(benchmark::State& state) {
  const ModelDims dims{.d = 32, .d_c = 32, .d_m = 32, .heads = 4, .layers = 1, .n_text = 16,
                       .n_img = 8};
  SplitMix64 rng(7);
  const HotModelParams p = HotModelParams::init(dims, rng);
  const Hypergraph text = random_hypergraph(24, dims.n_text, 4, rng);
  const Hypergraph image = random_hypergraph(64, dims.n_img, 8, rng);
  const Matrix x = gaussian(24, 32, rng);
  const Matrix patches = gaussian(64, 32, rng);
  const Matrix seq = gaussian(72, 32, rng);
  const StackInputs in{x, text, patches, image, seq};
  StackCache cache;
  const StackOutputs out = forward_stack(in, p, &cache);
  const Matrix upstream = gaussian(out.fused.rows(), out.fused.cols(), rng);
  for (auto _ : state) benchmark::DoNotOptimize(backward_stack(upstream, out, p, cache));
}
BENCHMARK(BM_BackwardStack);

}  // namespace
}  // namespace hotkit

BENCHMARK_MAIN();
