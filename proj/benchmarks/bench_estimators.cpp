#include <benchmark/benchmark.h>

#include "diffbound/cate_bounds.hpp"
#include "diffbound/irt.hpp"
#include "diffbound/kernel.hpp"
#include "diffbound/moment_inference.hpp"
#include "diffbound/rng.hpp"
#include "diffbound/sim.hpp"

using namespace diffbound;

namespace {

Dataset make_data(std::int64_t n, int d) {
  SimConfig cfg;
  cfg.n = n;
  cfg.d = d;
  cfg.seed = 7;
  return generate(cfg);
}

}  // namespace

static void BM_Generate(benchmark::State& state) {
  SimConfig cfg;
  cfg.n = state.range(0);
  cfg.d = 5;
  for (auto _ : state) {
    cfg.seed++;
    benchmark::DoNotOptimize(generate(cfg));
  }
}
BENCHMARK(BM_Generate)->Arg(1000)->Arg(10000);

static void BM_FitLogistic(benchmark::State& state) {
  const Dataset d = make_data(state.range(0), 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_logistic(d));
  }
}
BENCHMARK(BM_FitLogistic)->Arg(1000)->Arg(10000);

static void BM_AteBounds(benchmark::State& state) {
  const Dataset d = make_data(state.range(0), 5);
  const PropensityModel m = fit_logistic(d);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ate_bounds(d, m, Direction::Mu2Upper));
  }
}
BENCHMARK(BM_AteBounds)->Arg(1000)->Arg(10000);

static void BM_NwRegress(benchmark::State& state) {
  const Dataset d = make_data(state.range(0), 1);
  const KernelSpec k{KernelKind::Gaussian, 0.5, 2};
  for (auto _ : state) {
    benchmark::DoNotOptimize(nw_regress(d.x().col(0), d.y(), 1.0, k));
  }
}
BENCHMARK(BM_NwRegress)->Arg(1000)->Arg(10000);

static void BM_SelectBandwidthCv(benchmark::State& state) {
  const Dataset d = make_data(state.range(0), 1);
  const auto grid = default_bandwidth_grid(d.x().col(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        select_bandwidth_cv(d.x().col(0), d.y(), KernelKind::Gaussian, grid));
  }
}
BENCHMARK(BM_SelectBandwidthCv)->Arg(250)->Arg(1000);

static void BM_BootstrapRegion(benchmark::State& state) {
  const Dataset d = make_data(1000, 5);
  for (auto _ : state) {
    const BootstrapDraws draws =
        bootstrap_estimates(d, {}, static_cast<int>(state.range(0)), 3);
    benchmark::DoNotOptimize(
        confidence_region(draws, 0.05, 0.005, Direction::Mu2Upper));
  }
}
BENCHMARK(BM_BootstrapRegion)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

static void BM_Fit2pl(benchmark::State& state) {
  Rng rng(11);
  const int n = static_cast<int>(state.range(0));
  Eigen::MatrixXi items(n, 4);
  const double alphas[4] = {0.5, 1.5, 1.0, 2.0};
  for (int i = 0; i < n; ++i) {
    const double u = rng.normal();
    for (int j = 0; j < 4; ++j) {
      items(i, j) = rng.bernoulli(item_prob(alphas[j], 0.0, u)) ? 1 : 0;
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_2pl(items));
  }
}
BENCHMARK(BM_Fit2pl)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
