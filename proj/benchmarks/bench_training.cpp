#include <benchmark/benchmark.h>

#include "blmol/preference_descent.hpp"
#include "blmol/rng.hpp"
#include "blmol/supernet.hpp"
#include "blmol/surrogate.hpp"
#include "blmol/testbed.hpp"

using namespace blmol;

namespace {

void BM_EpoCoefficients(benchmark::State& state) {
  const std::size_t m = static_cast<std::size_t>(state.range(0));
  RandomStream rng = derive_stream(5, "epo");
  std::vector<double> losses(m);
  std::vector<std::vector<double>> grads(m, std::vector<double>(64));
  for (double& v : losses) v = 0.5 + rng.next_double();
  for (auto& row : grads) {
    for (double& v : row) v = rng.next_normal();
  }
  const PreferenceVector r(std::vector<double>(m, 1.0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(epo_coefficients(losses, grads, r));
  }
}
BENCHMARK(BM_EpoCoefficients)->Arg(2)->Arg(3);

void BM_QuadraticEpoTraining(benchmark::State& state) {
  QuadraticMOProblem p;
  p.centers = {{0.0, 0.0}, {2.0, 1.0}};
  TrainConfig cfg;
  cfg.solver = Solver::kEpo;
  cfg.optimizer = Optimizer::kPlain;
  cfg.lr = 0.1;
  cfg.epochs = static_cast<int>(state.range(0));
  cfg.eps_track = 1e-9;
  for (auto _ : state) {
    auto oracle = quad_oracle(p);
    benchmark::DoNotOptimize(
        train_preference(*oracle, PreferenceVector({0.25, 0.75}), cfg, derive_stream(6, "t")));
  }
}
BENCHMARK(BM_QuadraticEpoTraining)->Arg(100)->Arg(400);

void BM_SupernetGradient(benchmark::State& state) {
  SupernetDims dims;
  dims.backbone_depth = 3;
  dims.hidden = 16;
  dims.feature_dim = 3;
  dims.node_classes = 3;
  dims.graph_classes = 3;
  dims.tasks = {Task::kGc, Task::kNc, Task::kLp};
  dims.pref_count = 15;

  SynthConfig synth;
  synth.n_graphs = static_cast<int>(state.range(0));
  synth.nodes_per_graph = 20;
  synth.communities = 3;
  const auto data = synth_dataset(synth, derive_stream(7, "data"));

  Genotype g;
  g.genes.assign(10, 1);
  for (int i = 0; i < 4; ++i) g.genes.push_back(0);
  g.genes.push_back(1);
  const auto plan = decode(g, dims);
  const auto w = init_weights(plan, derive_stream(7, "w"));
  std::vector<int> batch;
  for (int i = 0; i < synth.n_graphs; ++i) batch.push_back(i);

  for (auto _ : state) {
    benchmark::DoNotOptimize(grad(plan, w, data, batch));
  }
}
BENCHMARK(BM_SupernetGradient)->Arg(8)->Arg(42);

void BM_ForestPredict(benchmark::State& state) {
  RandomStream rng = derive_stream(8, "forest");
  SampleTable table;
  table.layout.width = 12;
  for (int i = 0; i < 50; ++i) {
    std::vector<double> x(12);
    for (double& v : x) v = rng.next_double();
    table.features.push_back(x);
    table.targets.push_back({x[0] * 2.0 + x[5]});
  }
  const auto model = fit(SurrogateKind::kForest, table, 0, FitHyper{}, rng.derive("fit"));
  std::vector<double> probe(12, 0.3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.predict(probe));
  }
}
BENCHMARK(BM_ForestPredict);

}  // namespace

BENCHMARK_MAIN();
