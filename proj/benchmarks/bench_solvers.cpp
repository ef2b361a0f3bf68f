#include <benchmark/benchmark.h>

#include <vector>

#include "resprog/baselines.hpp"
#include "resprog/channel.hpp"
#include "resprog/conic.hpp"
#include "resprog/fdrp.hpp"
#include "resprog/oracle.hpp"

namespace {

resprog::SystemConfig paper_config() {
  auto cfg = resprog::default_config();
  cfg.horizon_cap = 2;
  cfg.slot_weights = resprog::default_slot_weights(2);
  return cfg;
}

void BM_GenerateChannels(benchmark::State& state) {
  const auto cfg = paper_config();
  std::uint64_t seed = 1;
  for (auto _ : state) {
    auto h = resprog::generate_channels({seed++, true, 1.0}, cfg, 2);
    benchmark::DoNotOptimize(h);
  }
}
BENCHMARK(BM_GenerateChannels);

void BM_Waterfill(benchmark::State& state) {
  std::vector<double> gains(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < gains.size(); ++i) gains[i] = 0.1 + 0.37 * static_cast<double>(i % 7);
  for (auto _ : state) benchmark::DoNotOptimize(resprog::waterfill(gains, 1.0, 0.5));
}
BENCHMARK(BM_Waterfill)->Arg(4)->Arg(64)->Arg(1024);

void BM_ConicSelftest(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(resprog::conic::run_selftest());
}
BENCHMARK(BM_ConicSelftest)->Unit(benchmark::kMillisecond);

void BM_InitializerSolve(benchmark::State& state) {
  const auto cfg = paper_config();
  const auto h = resprog::generate_channels({1, true, 1.0}, cfg, 2);
  const auto compiled = resprog::build_p7(h, cfg, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(resprog::conic::solve(compiled.program));
}
BENCHMARK(BM_InitializerSolve)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_FirstScaStep(benchmark::State& state) {
  const auto cfg = paper_config();
  const auto h = resprog::slice_slots(resprog::generate_channels({1, true, 1.0}, cfg, 2), 2);
  const auto init = resprog::find_min_horizon(h, cfg);
  const auto s = resprog::make_state(h, cfg, init.precoders, 0);
  const auto compiled = resprog::build_p6(h, cfg, init.horizon, s);
  resprog::conic::SolverOptions opts;
  opts.tol = cfg.solver_tol;
  opts.warm_start = resprog::p6_point(compiled, s);
  for (auto _ : state) benchmark::DoNotOptimize(resprog::conic::solve(compiled.program, opts));
}
BENCHMARK(BM_FirstScaStep)->Unit(benchmark::kMillisecond)->Iterations(3);

void BM_OracleMicro(benchmark::State& state) {
  auto cfg = resprog::default_config();
  cfg.num_users = 2;
  cfg.num_subcarriers = 2;
  cfg.num_tx_antennas = 2;
  cfg.horizon_cap = 2;
  cfg.payload_bits = {100.0, 100.0};
  cfg.user_weights = {1.0, 1.0};
  cfg.slot_weights = resprog::default_slot_weights(2);
  const auto h = resprog::generate_channels({3, true, 1.0}, cfg, 2);
  for (auto _ : state) benchmark::DoNotOptimize(resprog::brute_force_orthogonal(h, cfg, 2));
}
BENCHMARK(BM_OracleMicro)->Unit(benchmark::kMillisecond);

void BM_GreedyBaseline(benchmark::State& state) {
  const auto cfg = paper_config();
  const auto h = resprog::generate_channels({1, true, 1.0}, cfg, 2);
  for (auto _ : state) {
    try {
      benchmark::DoNotOptimize(resprog::run_grp(h, cfg));
    } catch (const resprog::HorizonError&) {
    }
  }
}
BENCHMARK(BM_GreedyBaseline);

}  // namespace

BENCHMARK_MAIN();
