#include <benchmark/benchmark.h>

#include "meshspec/features.hpp"
#include "meshspec/nn/model.hpp"
#include "meshspec/shapes.hpp"

using namespace meshspec;

namespace {

nn::GraphBatch<float> batch_for(int subdivisions, const nn::GraphData<float>& graph) {
  (void)subdivisions;
  return nn::make_batch<float>({&graph});
}

void BM_GcnForwardDesk(benchmark::State& state) {
  TriMesh mesh = shapes::icosphere(1.0, static_cast<int>(state.range(0)));
  nn::GraphData<float> graph = nn::GraphData<float>::from_features(assemble_features(mesh));
  nn::GraphBatch<float> batch = nn::make_batch<float>({&graph});
  nn::GcnModel<float> model(nn::ModelConfig::desk(49), 1);
  nn::NoGradGuard no_grad;
  for (auto _ : state) {
    auto out = model.forward(batch);
    benchmark::DoNotOptimize(out.value().data());
  }
  state.SetLabel(std::to_string(mesh.vertex_count()) + " vertices, desk preset");
}
BENCHMARK(BM_GcnForwardDesk)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_GcnForwardFull(benchmark::State& state) {
  TriMesh mesh = shapes::icosphere(1.0, 4);
  nn::GraphData<float> graph = nn::GraphData<float>::from_features(assemble_features(mesh));
  nn::GraphBatch<float> batch = nn::make_batch<float>({&graph});
  nn::GcnModel<float> model(nn::ModelConfig::full(49), 1);
  nn::NoGradGuard no_grad;
  for (auto _ : state) {
    auto out = model.forward(batch);
    benchmark::DoNotOptimize(out.value().data());
  }
  state.SetLabel("2562 vertices, full preset");
}
BENCHMARK(BM_GcnForwardFull)->Unit(benchmark::kMillisecond);

void BM_TrainStepDesk(benchmark::State& state) {
  TriMesh mesh = shapes::icosphere(1.0, 3);
  nn::GraphData<float> graph = nn::GraphData<float>::from_features(assemble_features(mesh));
  graph.target.resize(10);
  for (int j = 0; j < 10; ++j) graph.target(j) = static_cast<float>(j + 2);
  std::vector<const nn::GraphData<float>*> ptrs(16, &graph);
  nn::GraphBatch<float> batch = nn::make_batch<float>(ptrs);
  nn::GcnModel<float> model(nn::ModelConfig::desk(10), 1);
  auto params = model.parameters();
  for (auto _ : state) {
    for (auto& [n, p] : params) p.zero_grad();
    auto loss = nn::rpd_loss(model.forward(batch), batch.targets, 1e-8f);
    loss.backward();
    benchmark::DoNotOptimize(loss.scalar());
  }
  state.SetLabel("batch of 16 x 642 vertices");
}
BENCHMARK(BM_TrainStepDesk)->Unit(benchmark::kMillisecond);

}  // namespace
