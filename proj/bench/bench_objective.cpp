#include <benchmark/benchmark.h>

#include <omp.h>

#include "cfbounds/case_study.hpp"
#include "cfbounds/objective.hpp"
#include "cfbounds/optimizer.hpp"

using namespace cfb;

namespace {

struct Fixture {
  Scenario sc = cancer::breast_cancer_model();
  Trajectory tr;
  PosteriorSampleSet s;
  std::shared_ptr<const CouplingSpace> space;
  std::unique_ptr<PnObjective> obj;
  std::vector<double> z, g;

  Fixture(const char* path, std::size_t T, std::size_t B) {
    tr = cancer::make_path(path, T);
    s = sample_posterior_paths(sc.model, tr, B, 1);
    space = build_space(sc, tr, s, ConstraintMode::base);
    obj = std::make_unique<PnObjective>(sc.model, tr, s, space, cancer::kDeath);
    z = comonotonic_coupling(space, sc.ranks).z;
    g.assign(space->dim(), 0.0);
  }
};

void BM_ValueGradSerial(benchmark::State& st) {
  Fixture f("path2", static_cast<std::size_t>(st.range(0)), static_cast<std::size_t>(st.range(1)));
  for (auto _ : st) benchmark::DoNotOptimize(f.obj->value_and_gradient_serial(f.z, f.g));
}

void BM_ValueGradParallel(benchmark::State& st) {
  Fixture f("path2", static_cast<std::size_t>(st.range(0)), static_cast<std::size_t>(st.range(1)));
  for (auto _ : st) benchmark::DoNotOptimize(f.obj->value_and_gradient(f.z, f.g));
}

void BM_PosteriorSampling(benchmark::State& st) {
  const auto sc = cancer::breast_cancer_model();
  const auto tr = cancer::make_path("path2", static_cast<std::size_t>(st.range(0)));
  for (auto _ : st)
    benchmark::DoNotOptimize(sample_posterior_paths(sc.model, tr, static_cast<std::size_t>(st.range(1)), 1));
}

void BM_BoundPn(benchmark::State& st) {
  const auto sc = cancer::breast_cancer_model();
  const auto tr = cancer::make_path("path1", static_cast<std::size_t>(st.range(0)));
  SolveOptions o;
  for (auto _ : st)
    benchmark::DoNotOptimize(bound_pn(sc, tr, 100, 1, ConstraintMode::base, o).ub.value);
}

}  // namespace

BENCHMARK(BM_ValueGradSerial)->Args({8, 100})->Args({8, 1000})->Args({100, 100})->Args({100, 1000});
BENCHMARK(BM_ValueGradParallel)->Args({8, 100})->Args({8, 1000})->Args({100, 100})->Args({100, 1000});
BENCHMARK(BM_PosteriorSampling)->Args({8, 1000})->Args({100, 1000});
BENCHMARK(BM_BoundPn)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
