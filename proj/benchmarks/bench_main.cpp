#include <benchmark/benchmark.h>

#include <vector>

#include "abundance/cr_model.hpp"
#include "abundance/sim_study.hpp"
#include "abundance/stats.hpp"
#include "abundance/trend.hpp"

using namespace abundance;

static void BM_CrLoglik(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  std::vector<double> p(K, 0.2);
  std::vector<cr::CaptureCount> c;
  for (int k = 0; k < K; ++k) c.push_back({40, k == 0 ? 0 : 8});
  for (auto _ : state) benchmark::DoNotOptimize(cr::cr_loglik(2000, p, c));
}
BENCHMARK(BM_CrLoglik)->Arg(1)->Arg(4)->Arg(16);

static void BM_MannKendall(benchmark::State& state) {
  stats::RngStream rng(1);
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (auto& x : v) x = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(trend::mann_kendall_u(v));
}
BENCHMARK(BM_MannKendall)->Arg(17)->Arg(100)->Arg(1000);

static void BM_MannKendallPosterior(benchmark::State& state) {
  stats::RngStream rng(2);
  std::vector<double> draws(4000 * 17);
  for (auto& x : draws) x = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(trend::mk_posterior(draws, 17));
}
BENCHMARK(BM_MannKendallPosterior);

static void BM_CrSweeps(benchmark::State& state) {
  auto spec = sim::scenario_spec(sim::Scenario::I);
  stats::RngStream rng(3);
  const auto pop = sim::generate_population(spec, rng);
  const auto data = sim::generate_cr_data(pop, spec.beta_cr, spec.sigma2, spec, rng);
  McmcConfig cfg;
  cfg.iterations = state.range(0);
  cfg.burn_in = cfg.iterations / 2;
  cfg.thin = 1;
  for (auto _ : state) benchmark::DoNotOptimize(cr::fit_cr(data, Priors{}, cfg, stats::RngStream(4)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CrSweeps)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
