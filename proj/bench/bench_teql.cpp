#include <benchmark/benchmark.h>

#include <omp.h>

#include "teql/cp_model.hpp"
#include "teql/harness.hpp"
#include "teql/oracle.hpp"

namespace {

teql::CpModel bench_model() {
  return teql::init_model({20, 20, 10, 20}, 10, 3, 11, 0.5);
}

void BM_DenseSerial(benchmark::State& state) {
  const auto model = bench_model();
  for (auto _ : state) benchmark::DoNotOptimize(teql::dense_reconstruct(model));
}

void BM_DenseParallel(benchmark::State& state) {
  const auto model = bench_model();
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(teql::dense_reconstruct_parallel(model));
}

teql::RunConfig bench_config() {
  teql::RunConfig cfg = teql::default_config("pendulum");
  cfg.episodes = 20;
  cfg.seeds = 4;
  return cfg;
}

std::vector<teql::Cell> bench_cells(const teql::RunConfig& cfg) {
  std::vector<teql::Cell> cells;
  for (int s = 0; s < cfg.seeds; ++s) cells.push_back({&cfg, teql::derive_seed(cfg.master_seed, "bench", s)});
  return cells;
}

void BM_CellsSerial(benchmark::State& state) {
  const auto cfg = bench_config();
  const auto cells = bench_cells(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(teql::run_cells_serial(cells));
}

void BM_CellsParallel(benchmark::State& state) {
  const auto cfg = bench_config();
  const auto cells = bench_cells(cfg);
  for (auto _ : state)
    benchmark::DoNotOptimize(teql::run_cells(cells, static_cast<int>(state.range(0))));
}

}  // namespace

BENCHMARK(BM_DenseSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DenseParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CellsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CellsParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
