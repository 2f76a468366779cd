#include <benchmark/benchmark.h>

#include <numeric>

#include "surgcurate/batch_mixer.hpp"
#include "surgcurate/curation.hpp"
#include "surgcurate/embedding_store.hpp"
#include "surgcurate/kmeans.hpp"
#include "surgcurate/parallel.hpp"
#include "surgcurate/random.hpp"

using namespace surgcurate;

namespace {

EmbeddingMatrix random_matrix(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> data(rows * dim);
  for (auto& x : data) x = static_cast<float>(rng.uniform_unit());
  std::vector<std::string> ids(rows);
  for (std::size_t i = 0; i < rows; ++i) ids[i] = "r" + std::to_string(i);
  return EmbeddingMatrix(dim, std::move(data), std::move(ids));
}

void BM_LloydStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto points = random_matrix(n, 128, 1);
  const auto centroids = random_matrix(k, 128, 2);
  WorkerPool pool(static_cast<std::size_t>(state.range(2)));
  KMeansOptions options;
  options.pool = &pool;
  for (auto _ : state) {
    auto step = lloyd_step(points.view(), centroids.view(), options);
    benchmark::DoNotOptimize(step.inertia);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_LloydStep)->Args({10000, 64, 1})->Args({10000, 256, 1})->Args({10000, 256, 4})->Unit(benchmark::kMillisecond);

void BM_KMeansPlusPlus(benchmark::State& state) {
  const auto points = random_matrix(20000, 64, 3);
  const auto k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    Rng rng(4);
    auto c = kmeanspp_init(points.view(), k, rng);
    benchmark::DoNotOptimize(c.data());
  }
}
BENCHMARK(BM_KMeansPlusPlus)->Arg(16)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_SelectNearest(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto points = random_matrix(n, 128, 5);
  const std::vector<float> centroid(128, 0.5f);
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  for (auto _ : state) {
    auto picked = select_nearest(points.view(), centroid, rows, points.row_ids(), n / 10);
    benchmark::DoNotOptimize(picked.data());
  }
}
BENCHMARK(BM_SelectNearest)->Arg(1000)->Arg(20000);

void BM_StoreEncode(benchmark::State& state) {
  const auto m = random_matrix(10000, 256, 6);
  for (auto _ : state) {
    auto bytes = encode_store(m);
    benchmark::DoNotOptimize(bytes.data());
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * m.data().size_bytes()));
}
BENCHMARK(BM_StoreEncode)->Unit(benchmark::kMillisecond);

void BM_BatchStream(benchmark::State& state) {
  std::vector<std::string> unlabeled(5000), clinical(500);
  for (std::size_t i = 0; i < unlabeled.size(); ++i) unlabeled[i] = "u" + std::to_string(i);
  for (std::size_t i = 0; i < clinical.size(); ++i) clinical[i] = "c" + std::to_string(i);
  BatchStream stream(unlabeled, clinical, MixPolicy{});
  for (auto _ : state) {
    auto b = stream.next();
    benchmark::DoNotOptimize(b.clip_ids.data());
  }
}
BENCHMARK(BM_BatchStream);

}  // namespace

BENCHMARK_MAIN();
