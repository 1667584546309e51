#include <benchmark/benchmark.h>

#include <blfmm/mlfmm.hpp>

namespace {

constexpr double kPi = 3.14159265358979323846;

blfmm::PointSet make_points(int n) {
  return blfmm::generate_quasiuniform(n, 1, blfmm::BoundingBox{}, 1234, 0.35);
}

std::vector<double> make_weights(int n) {
  std::vector<double> w(n);
  for (int j = 0; j < n; ++j) w[j] = 2.0 * blfmm::uniform01(99, j) - 1.0;
  return w;
}

void BM_DirectMatvec(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  blfmm::RadialKernel k{blfmm::KernelType::Gaussian, 1.0};
  blfmm::PointSet ps = make_points(n);
  std::vector<double> w = make_weights(n);
  for (auto _ : state)
    benchmark::DoNotOptimize(blfmm::direct_matvec(k, ps, w, false, 0.0));
  state.SetComplexityN(n);
}
BENCHMARK(BM_DirectMatvec)->RangeMultiplier(2)->Range(1 << 10, 1 << 13)
    ->Complexity();

void BM_SingleLevelMatvec(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  blfmm::RadialKernel k{blfmm::KernelType::Gaussian, 1.0};
  blfmm::PointSet ps = make_points(n);
  std::vector<double> w = make_weights(n);
  int m = blfmm::choose_truncation(n);
  int level = std::max(2, static_cast<int>(std::lround(
                              std::log2(std::sqrt(static_cast<double>(n))))));
  blfmm::BoxTree tree = blfmm::build_tree(ps, level);
  blfmm::SumRequest req{k, kPi, &ps, w, m};
  for (auto _ : state)
    benchmark::DoNotOptimize(blfmm::fmm_matvec_single(req, tree));
  state.SetComplexityN(n);
}
BENCHMARK(BM_SingleLevelMatvec)->RangeMultiplier(2)->Range(1 << 10, 1 << 15)
    ->Complexity();

void BM_MultilevelMatvec(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  blfmm::RadialKernel k{blfmm::KernelType::Gaussian, 1.0};
  blfmm::PointSet ps = make_points(n);
  std::vector<double> w = make_weights(n);
  int level = std::max(3, static_cast<int>(std::lround(
                              std::log2(static_cast<double>(n) / 32.0))));
  blfmm::BoxTree tree = blfmm::build_tree(ps, level);
  blfmm::LevelGrids grids = blfmm::make_level_grids(
      k, kPi, 32, 1, level, blfmm::GridMode::shared, 10);
  blfmm::SumRequest req{k, kPi, &ps, w, 32};
  for (auto _ : state)
    benchmark::DoNotOptimize(blfmm::mlfmm_matvec(req, tree, grids));
  state.SetComplexityN(n);
}
BENCHMARK(BM_MultilevelMatvec)->RangeMultiplier(2)->Range(1 << 10, 1 << 15)
    ->Complexity();

}  // namespace

BENCHMARK_MAIN();
