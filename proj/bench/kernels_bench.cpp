// Serial reference vs OpenMP kernels on the hot paths. Run with
// OMP_NUM_THREADS set to compare scaling.

#include <benchmark/benchmark.h>

#include "latentedit/cli.hpp"
#include "latentedit/kernels.hpp"
#include "latentedit/optimizer.hpp"
#include "latentedit/random.hpp"
#include "latentedit/toy_oracle.hpp"

namespace {

using namespace latentedit;

Execution exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::kSerial : Execution::kParallel;
}

std::vector<LatentCode> codes(std::size_t n, std::uint64_t seed) {
  return cli::make_latent_fixture(seed, n).codes;
}

std::vector<EditDirection> directions(std::size_t n, std::uint64_t seed) {
  std::vector<EditDirection> out;
  for (auto& c : codes(n, seed)) out.push_back(EditDirection::from_values(std::move(c).release()));
  return out;
}

void BM_ApplyEditBatch(benchmark::State& state) {
  const auto w = codes(static_cast<std::size_t>(state.range(1)), 1);
  const auto d = directions(w.size(), 2);
  EditConfig cfg;
  cfg.strategy = HardMaskStrategy{};
  for (auto _ : state) benchmark::DoNotOptimize(apply_edit_batch(w, d, cfg, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_ApplyEditBatch)->ArgsProduct({{0, 1}, {64, 512}})->ArgNames({"parallel", "codes"});

void BM_MapperForwardBatch(benchmark::State& state) {
  const auto model = cli::make_toy_mapper(3);
  const auto w = codes(static_cast<std::size_t>(state.range(1)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(mapper_forward_batch(model, w, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_MapperForwardBatch)->ArgsProduct({{0, 1}, {8, 64}})->ArgNames({"parallel", "codes"});

void BM_LayerReductions(benchmark::State& state) {
  const auto d = directions(1, 5).front();
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::layer_abs_sums(d.values(), exec_of(state)));
    benchmark::DoNotOptimize(kernels::layer_square_sums(d.values(), exec_of(state)));
  }
}
BENCHMARK(BM_LayerReductions)->Arg(0)->Arg(1)->ArgName("parallel");

void BM_FiniteDifferenceGradient(benchmark::State& state) {
  const auto bench = make_benchmark(0);
  const auto obj = bench.objective();
  const auto coords = sample_coordinates(static_cast<std::size_t>(state.range(1)), 6);
  const auto d = directions(1, 7).front();
  for (auto _ : state) {
    benchmark::DoNotOptimize(finite_difference_gradient(obj, d, 1e-5, coords, exec_of(state)));
  }
}
BENCHMARK(BM_FiniteDifferenceGradient)
    ->ArgsProduct({{0, 1}, {256}})
    ->ArgNames({"parallel", "coords"})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
