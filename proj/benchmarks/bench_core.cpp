#include <benchmark/benchmark.h>

#include "support.hpp"

#include "mintime/analysis.hpp"
#include "mintime/characteristics.hpp"
#include "mintime/dynamics.hpp"
#include "mintime/hjb.hpp"
#include "mintime/target.hpp"

#include <vector>

using namespace mintime;
using namespace mintime::testing;

namespace {

void BM_EvalH(benchmark::State& state) {
  const auto spec = drift_ball(2.0, 0.0, 1.0);
  const State x = make_vector({0.3, -0.7});
  const Costate p = make_vector({-0.6, 0.8});
  for (auto _ : state) benchmark::DoNotOptimize(eval_H(spec, x, p));
}
BENCHMARK(BM_EvalH);

void BM_SolveEikonal(benchmark::State& state) {
  const double h = 0.4 / static_cast<double>(state.range(0));
  const Grid grid(square(3.0), h);
  for (auto _ : state) {
    auto vf = solve(eikonal(), disk_target(), grid);
    benchmark::DoNotOptimize(vf.T.data());
  }
  state.counters["nodes"] = static_cast<double>(grid.size());
}
BENCHMARK(BM_SolveEikonal)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_ExtremalField(benchmark::State& state) {
  const auto spec = drift_ball(2.0, 0.0, 1.0);
  const auto target = disk_target();
  for (auto _ : state) {
    auto field = build_extremal_field(spec, target, static_cast<int>(state.range(0)), 3.0, 0.01);
    benchmark::DoNotOptimize(field.arcs.data());
  }
}
BENCHMARK(BM_ExtremalField)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_CertifyArc(benchmark::State& state) {
  const auto spec = eikonal();
  const auto target = disk_target();
  static const auto vf = solve(spec, target, Grid(square(3.0), 0.05));
  const auto T = time_function(vf);
  const auto field = build_extremal_field(spec, target, 16, 1.5, 0.01);
  const auto& arc = field.arcs.front();
  for (auto _ : state) benchmark::DoNotOptimize(certify_arc(T, arc, target, 20));
}
BENCHMARK(BM_CertifyArc)->Unit(benchmark::kMillisecond);

void BM_DetectNonLipschitz(benchmark::State& state) {
  const auto spec = segment_shadow();
  const auto target = disk_target();
  std::vector<ValueField> levels;
  for (double h : {0.2, 0.1, 0.05}) levels.push_back(solve(spec, target, Grid(square(2.0), h)));
  for (auto _ : state) {
    auto report = detect_nonlipschitz(levels);
    benchmark::DoNotOptimize(report);
  }
}
BENCHMARK(BM_DetectNonLipschitz)->Unit(benchmark::kMillisecond);

void BM_BoxCounting(benchmark::State& state) {
  std::vector<State> cloud;
  for (int i = 0; i < 2000; ++i) cloud.push_back(make_vector({-1.0 + i / 1000.0, 0.25}));
  for (auto _ : state) benchmark::DoNotOptimize(box_counting_dimension(cloud));
}
BENCHMARK(BM_BoxCounting);

}  // namespace

BENCHMARK_MAIN();
