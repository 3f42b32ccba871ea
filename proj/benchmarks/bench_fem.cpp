#include <benchmark/benchmark.h>

#include "meshspec/fem.hpp"
#include "meshspec/shapes.hpp"

using namespace meshspec;

namespace {

TriMesh sphere_for(int subdivisions) { return shapes::icosphere(1.0, subdivisions); }

void BM_AssembleOperators(benchmark::State& state) {
  TriMesh mesh = sphere_for(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto ops = assemble_operators(mesh);
    benchmark::DoNotOptimize(ops.stiffness);
  }
  state.SetLabel(std::to_string(mesh.vertex_count()) + " vertices");
}
BENCHMARK(BM_AssembleOperators)->Arg(3)->Arg(4)->Arg(5);

void BM_SolveSpectrum(benchmark::State& state) {
  TriMesh mesh = sphere_for(4);  // 2562 vertices
  auto ops = assemble_operators(mesh);
  int k = static_cast<int>(state.range(0));
  for (auto _ : state) {
    Spectrum s = solve_spectrum(ops, k);
    benchmark::DoNotOptimize(s.eigenvalues);
  }
  state.SetLabel("k=" + std::to_string(k));
}
BENCHMARK(BM_SolveSpectrum)->Arg(10)->Arg(25)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_LbSpectrumEndToEnd(benchmark::State& state) {
  TriMesh mesh = sphere_for(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    Spectrum s = lb_spectrum(mesh, 50);
    benchmark::DoNotOptimize(s.eigenvalues);
  }
  state.SetLabel(std::to_string(mesh.vertex_count()) + " vertices, k=50");
}
BENCHMARK(BM_LbSpectrumEndToEnd)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
