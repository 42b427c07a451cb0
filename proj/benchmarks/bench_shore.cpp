#include <benchmark/benchmark.h>

#include "qxfer/resample.hpp"
#include "qxfer/shore.hpp"
#include "qxfer/synth.hpp"

namespace {

using namespace qxfer;

void BM_DesignMatrix(benchmark::State& state) {
  const GradientScheme s = shell_scheme({1000, 2000, 3000}, static_cast<std::size_t>(state.range(0)), 6);
  for (auto _ : state) benchmark::DoNotOptimize(design_matrix(s, ShoreBasisSpec{}));
}
BENCHMARK(BM_DesignMatrix)->Arg(20)->Arg(90);

void BM_InterpolatorSetup(benchmark::State& state) {
  const GradientScheme src = default_source_scheme();
  const GradientScheme dst = default_target_scheme();
  for (auto _ : state) benchmark::DoNotOptimize(ShoreInterpolator(src, dst, ShoreBasisSpec{}));
}
BENCHMARK(BM_InterpolatorSetup);

void BM_ResampleVolume(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  PhantomConfig cfg = random_subject_config({n, n, n}, 1, 0.0);
  const Phantom ph = generate(cfg, default_source_scheme(), default_target_scheme(), 1);
  const DwiVolume src = normalize_b0(ph.source).dwi;
  const GradientScheme t = default_target_scheme();
  const GradientScheme tdw = t.subset(t.dw_indices());
  ResampleOptions opt;
  opt.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(resample_qspace(src, ph.mask, ShoreBasisSpec{}, tdw, opt));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}
BENCHMARK(BM_ResampleVolume)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace
