#include <benchmark/benchmark.h>

#include "meshspec/features.hpp"
#include "meshspec/shapes.hpp"

using namespace meshspec;

namespace {

void BM_MixedVoronoiAreas(benchmark::State& state) {
  TriMesh mesh = shapes::icosphere(1.0, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mixed_voronoi_areas(mesh));
  state.SetLabel(std::to_string(mesh.vertex_count()) + " vertices");
}
BENCHMARK(BM_MixedVoronoiAreas)->Arg(3)->Arg(4);

void BM_PrincipalCurvatures(benchmark::State& state) {
  TriMesh mesh = shapes::icosphere(1.0, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(principal_curvatures(mesh));
  state.SetLabel(std::to_string(mesh.vertex_count()) + " vertices");
}
BENCHMARK(BM_PrincipalCurvatures)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_AssembleFeatures(benchmark::State& state) {
  TriMesh mesh = shapes::icosphere(1.0, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(assemble_features(mesh));
  state.SetLabel(std::to_string(mesh.vertex_count()) + " vertices");
}
BENCHMARK(BM_AssembleFeatures)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
