// OpenMP kernels against their serial references. Arg(0) is the serial
// version, Arg(1) the parallel one; thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "cocoaudit/matching.hpp"
#include "cocoaudit/raster.hpp"
#include "cocoaudit/surface.hpp"

using namespace cocoaudit;

namespace {

PolygonSet blob(int side) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> radius(0.25 * side, 0.48 * side);
  Ring ring;
  const int n = 64;
  for (int i = 0; i < n; ++i) {
    const double a = 2 * std::numbers::pi * i / n;
    const double r = radius(rng);
    ring.push_back(side / 2.0 + r * std::cos(a));
    ring.push_back(side / 2.0 + r * std::sin(a));
  }
  return PolygonSet{{ring}};
}

constexpr int kSide = 1024;

const BinaryMask& big_mask() {
  static const BinaryMask m = rasterize(blob(kSide), kSide, kSide);
  return m;
}

const AnnotationDataset& synthetic(const char* name) {
  static std::map<std::string, AnnotationDataset> cache;
  auto it = cache.find(name);
  if (it == cache.end()) {
    it = cache.emplace(name, load_dataset(std::string(COCOAUDIT_FIXTURE_DIR) + "/" + name)).first;
  }
  return it->second;
}

void BM_Rasterize(benchmark::State& state) {
  const auto poly = blob(kSide);
  const Window w{0, 0, kSide, kSide};
  for (auto _ : state) {
    auto m = state.range(0) ? rasterize(poly, w) : serial::rasterize(poly, w);
    benchmark::DoNotOptimize(m);
  }
}

void BM_Erode(benchmark::State& state) {
  const auto& m = big_mask();
  for (auto _ : state) {
    auto e = state.range(0) ? erode(m) : serial::erode(m);
    benchmark::DoNotOptimize(e);
  }
}

void BM_Edt(benchmark::State& state) {
  const auto c = contour(big_mask());
  for (auto _ : state) {
    auto d = state.range(0) ? edt(c) : serial::edt(c);
    benchmark::DoNotOptimize(d);
  }
}

void BM_MaskOverlap(benchmark::State& state) {
  const auto& a = big_mask();
  const auto b = erode(erode(a));
  for (auto _ : state) {
    auto o = state.range(0) ? mask_overlap(a, b) : serial::mask_overlap(a, b);
    benchmark::DoNotOptimize(o);
  }
}

void BM_MatchDatasets(benchmark::State& state) {
  const auto& a = synthetic("synthetic_a.json");
  const auto& b = synthetic("synthetic_b.json");
  MatchConfig cfg;
  cfg.iou_mode = IouMode::kMask;
  for (auto _ : state) {
    auto ms = state.range(0) ? match_datasets(a, b, cfg) : serial::match_datasets(a, b, cfg);
    benchmark::DoNotOptimize(ms);
  }
}

void BM_PairMetricsAll(benchmark::State& state) {
  const auto& a = synthetic("synthetic_a.json");
  const auto& b = synthetic("synthetic_b.json");
  const auto pairs = match_datasets(a, b, {}).pairs;
  for (auto _ : state) {
    auto r = state.range(0) ? pair_metrics_all(pairs, a, b) : serial::pair_metrics_all(pairs, a, b);
    benchmark::DoNotOptimize(r);
  }
}

}  // namespace

BENCHMARK(BM_Rasterize)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Erode)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Edt)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MaskOverlap)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MatchDatasets)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairMetricsAll)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
