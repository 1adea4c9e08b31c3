#include <benchmark/benchmark.h>

#include "rearrange/orca.hpp"
#include "rearrange/policies.hpp"
#include "rearrange/score_model.hpp"
#include "rearrange/targets.hpp"

using namespace rearrange;

namespace {

targets::TaskSpec clustering(int n_per_color) {
  targets::TaskSpec t;
  t.world.n_per_color = n_per_color;
  return t;
}

void BM_ScoreForward(benchmark::State& st) {
  const auto task = clustering(static_cast<int>(st.range(0)));
  const score::ScoreModel model(score::ModelConfig{}, 1);
  Rng rng = make_rng(1);
  const auto s = targets::sample_target(task, rng);
  for (auto _ : st) benchmark::DoNotOptimize(model.score(s, 0.1));
  st.SetLabel("K=" + std::to_string(s.size()));
}
BENCHMARK(BM_ScoreForward)->Arg(3)->Arg(7)->Arg(10);

void BM_DsmStep(benchmark::State& st) {
  const auto task = clustering(static_cast<int>(st.range(0)));
  const auto ds = targets::make_dataset(task, 256, 1);
  const score::ScoreModel model(score::ModelConfig{}, 1);
  Rng rng = make_rng(2);
  const auto batch = score::make_dsm_batch(ds.examples, 64, model.kernel(), 1e-3, rng);
  std::vector<ad::Tensor> grads;
  for (auto _ : st) benchmark::DoNotOptimize(score::dsm_batch_loss(model, batch, &grads));
}
BENCHMARK(BM_DsmStep)->Arg(3)->Arg(7)->Unit(benchmark::kMillisecond);

void BM_OrcaPolicyStep(benchmark::State& st) {
  const auto task = clustering(7);
  const auto policy = planner::orca_policy(planner::analytic_field(task), {0.1, 1e-3, 100},
                                           orca::OrcaParams::from_world(task.world), task.world);
  Rng rng = make_rng(3);
  const auto s = world::sample_initial_state(task.world, rng);
  for (auto _ : st) benchmark::DoNotOptimize(world::step(s, policy(s, 0), task.world));
}
BENCHMARK(BM_OrcaPolicyStep);

void BM_SolveLp2(benchmark::State& st) {
  Rng rng = make_rng(4);
  std::vector<orca::HalfPlane> planes;
  for (int i = 0; i < st.range(0); ++i) {
    const double a = uniform(rng, 0.0, 6.28);
    planes.push_back({{0.3 * std::cos(a), 0.3 * std::sin(a)}, {-std::cos(a), -std::sin(a)}});
  }
  for (auto _ : st) benchmark::DoNotOptimize(orca::solve_lp2(planes, {0.9, 0.1}, 1.0));
}
BENCHMARK(BM_SolveLp2)->Arg(2)->Arg(6);

void BM_SolveLp3(benchmark::State& st) {
  const std::vector<orca::HalfPlane> planes = {
      {{0.0, 0.4}, {0.0, 1.0}}, {{0.0, 0.2}, {0.0, -1.0}}, {{0.3, 0.0}, {-1.0, 0.0}}};
  for (auto _ : st) benchmark::DoNotOptimize(orca::solve_lp3(planes, 1.0));
}
BENCHMARK(BM_SolveLp3);

}  // namespace
BENCHMARK_MAIN();
