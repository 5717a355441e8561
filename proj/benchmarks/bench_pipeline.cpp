// Microbenchmarks for the hot paths: forward simulation, peak extraction,
// trilateration, alignment, and full reconstruction from an exact ensemble.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "pingloop/geometry.hpp"
#include "pingloop/harness.hpp"
#include "pingloop/peaks.hpp"
#include "pingloop/transient.hpp"
#include "pingloop/tribond.hpp"

namespace {

using namespace pingloop;

TotalConfiguration bench_scene(int n) { return sample_scene(n, 0.0, 10.0, 10.0, 42); }

void BM_SimulateResponse(benchmark::State& state) {
  const TotalConfiguration scene = bench_scene(static_cast<int>(state.range(0)));
  SimConfig cfg;
  cfg.photon_budget = 1e8;
  cfg.seed = 7;
  for (auto _ : state) {
    const Histogram h = simulate_response(scene, cfg);
    benchmark::DoNotOptimize(h.counts.data());
  }
}
BENCHMARK(BM_SimulateResponse)->Arg(5)->Arg(10)->Arg(20);

void BM_ExtractPeaks(benchmark::State& state) {
  const TotalConfiguration scene = bench_scene(static_cast<int>(state.range(0)));
  SimConfig cfg;
  cfg.photon_budget = 1e8;
  cfg.seed = 7;
  const Histogram h = simulate_response(scene, cfg);
  const PeakParams params;
  for (auto _ : state) {
    const auto peaks = extract_peaks(h, params);
    benchmark::DoNotOptimize(peaks.data());
  }
}
BENCHMARK(BM_ExtractPeaks)->Arg(5)->Arg(20);

void BM_Trilaterate(benchmark::State& state) {
  const Point3 a{0, 0, 0}, b{2, 0, 0}, c{0.5, 1.5, 0}, p{0.7, 0.4, 1.1};
  const double ra = distance(p, a), rb = distance(p, b), rc = distance(p, c);
  for (auto _ : state) {
    const TrilaterationResult r = trilaterate(a, b, c, ra, rb, rc, 1e-9);
    benchmark::DoNotOptimize(&r);
  }
}
BENCHMARK(BM_Trilaterate);

void BM_AlignCongruence(benchmark::State& state) {
  const TotalConfiguration scene = bench_scene(12);
  std::vector<Point3> shifted = scene.points;
  for (auto& q : shifted) q = q + Point3{0.3, -0.1, 0.2};
  for (auto _ : state) {
    const AlignmentResult r = align_congruence(shifted, scene.points);
    benchmark::DoNotOptimize(&r);
  }
}
BENCHMARK(BM_AlignCongruence);

void BM_Reconstruct(benchmark::State& state) {
  const TotalConfiguration scene = bench_scene(static_cast<int>(state.range(0)));
  const DistanceList beta = enumerate_ensemble(scene);
  ReconParams params;
  params.seed = 9;
  for (auto _ : state) {
    const Reconstruction r = reconstruct(beta, params);
    benchmark::DoNotOptimize(r.points.data());
  }
}
BENCHMARK(BM_Reconstruct)->Arg(4)->Arg(6)->Arg(8);

}  // namespace

BENCHMARK_MAIN();
