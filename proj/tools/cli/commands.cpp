#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <memory>

#include "cli/cli.hpp"
#include "rearrange/error.hpp"
#include "rearrange/io.hpp"
#include "rearrange/metrics.hpp"
#include "rearrange/policies.hpp"
#include "rearrange/rewards.hpp"
#include "rearrange/score_model.hpp"

namespace rearrange::cli {

namespace fs = std::filesystem;

namespace {

// "dir/name.ext" -> "dir/name<suffix>"
fs::path sibling(const fs::path& p, const std::string& suffix) {
  return p.parent_path() / (p.stem().string() + suffix);
}

void write_manifest(const fs::path& path, const nlohmann::json& manifest) {
  io::write_text(path, io::dump_pretty(manifest));
}

std::string trajectory_name(std::uint64_t seed, int episode) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "seed%llu_ep%04d.jsonl", static_cast<unsigned long long>(seed), episode);
  return buf;
}

}  // namespace

targets::TaskSpec TaskFlags::spec() const {
  targets::TaskSpec t;
  t.kind = targets::parse_task_kind(task);
  t.world.n_per_color = n_per_color;
  t.world.horizon = horizon;
  t.world.v_max = v_max;
  t.validate();
  return t;
}

nlohmann::json sample_targets(const SampleTargetsOptions& o, const nlohmann::json& config) {
  const targets::TaskSpec task = o.task.spec();
  if (o.n < 1) throw ValidationError("--n must be at least 1");
  if (o.out.empty()) throw ValidationError("--out is required");
  targets::TargetDataset ds;
  if (o.perturb_std > 0.0) {
    Rng rng = make_rng(o.seed, streams::kOracle);
    ds.task = task;
    ds.examples = eval::oracle_baseline(task, o.n, o.perturb_std, rng);
  } else {
    if (o.perturb_std < 0.0) throw ValidationError("--perturb-std must be non-negative");
    ds = targets::make_dataset(task, o.n, o.seed);
  }
  io::save_dataset(o.out, ds);
  const fs::path mpath = sibling(o.out, ".manifest.json");
  auto manifest = make_manifest("sample-targets", config, {}, {o.out});
  write_manifest(mpath, manifest);
  return manifest;
}

nlohmann::json train_score(const TrainScoreOptions& o, const nlohmann::json& config) {
  if (o.resume) throw ValidationError("resuming training is not supported; start a fresh run");
  if (o.out.empty()) throw ValidationError("--out is required");
  const targets::TargetDataset ds = io::load_dataset(o.data);
  if (ds.examples.empty()) throw ValidationError("dataset " + o.data.string() + " has no examples");
  const std::vector<int> cats = world::canonical_categories(ds.task.world);
  for (std::size_t i = 0; i < ds.examples.size(); ++i) {
    if (ds.examples[i].categories != cats) {
      throw ValidationError("dataset example " + std::to_string(i) + " does not match the header task");
    }
  }

  score::TrainConfig cfg;
  cfg.steps = o.steps;
  cfg.rng_seed = o.seed;
  cfg.batch_size = o.batch;
  cfg.learning_rate = o.lr;
  cfg.hidden = o.hidden;
  const bool quiet = o.quiet;
  const int total = o.steps;
  auto result = score::train(ds, cfg, [quiet, total](int step, double loss) {
    if (!quiet && ((step + 1) % 1000 == 0 || step + 1 == total)) {
      std::cerr << "step " << step + 1 << "/" << total << " loss " << loss << "\n";
    }
  });

  io::save_checkpoint(o.out, result.model);
  const fs::path loss_path = sibling(o.out, ".loss.csv");
  std::string csv = "step,loss\n";
  for (std::size_t i = 0; i < result.loss_history.size(); ++i) {
    csv += std::to_string(i) + "," + nlohmann::json(result.loss_history[i]).dump() + "\n";
  }
  io::write_text(loss_path, csv);
  const fs::path meta_path = sibling(o.out, ".meta.json");
  nlohmann::json meta = {{"train_config", cfg},
                         {"task", ds.task},
                         {"dataset_size", ds.examples.size()},
                         {"final_loss", result.loss_history.back()}};
  io::write_text(meta_path, io::dump_pretty(meta));
  auto manifest = make_manifest("train-score", config, {o.data}, {o.out, loss_path, meta_path});
  write_manifest(sibling(o.out, ".manifest.json"), manifest);
  return manifest;
}

nlohmann::json rollout(const RolloutOptions& o, const nlohmann::json& config) {
  const targets::TaskSpec task = o.task.spec();
  if (o.episodes < 1 || o.seeds < 1) throw ValidationError("--episodes and --seeds must be positive");
  if (o.out.empty()) throw ValidationError("--out is required");
  const std::string& name = o.policy;
  if (name != "orca" && name != "gradient" && name != "oneball" && name != "random") {
    throw ValidationError("unknown policy '" + name + "' (expected orca, gradient, oneball or random)");
  }
  if (o.model && o.analytic) throw ValidationError("--model and --analytic are mutually exclusive");

  planner::ScoreField field;
  double t_min = 1e-3;
  std::vector<fs::path> inputs;
  if (o.model) {
    auto model = std::make_shared<const score::ScoreModel>(io::load_checkpoint(*o.model));
    if (model->config().n_colors != task.world.n_colors) {
      throw ValidationError("checkpoint was trained for " + std::to_string(model->config().n_colors) +
                            " colours, task has " + std::to_string(task.world.n_colors));
    }
    t_min = model->config().t_min;
    field = planner::learned_field(model);
    inputs.push_back(*o.model);
  } else if (o.analytic) {
    field = planner::analytic_field(task);
  } else if (name != "random") {
    throw ValidationError("policy '" + name + "' needs --model or --analytic");
  }

  const planner::NoiseSchedule schedule{o.t0, t_min, task.world.horizon};
  std::vector<fs::path> outputs;
  for (int s = 0; s < o.seeds; ++s) {
    const std::uint64_t seed = o.seed + static_cast<std::uint64_t>(s);
    world::WorldConfig wc = task.world;
    wc.rng_seed = seed;
    const orca::OrcaParams params = orca::OrcaParams::from_world(wc);
    for (int e = 0; e < o.episodes; ++e) {
      world::Policy policy;
      if (name == "orca") {
        policy = planner::orca_policy(field, schedule, params, wc);
      } else if (name == "gradient") {
        policy = planner::gradient_only_policy(field, schedule, wc.v_max);
      } else if (name == "oneball") {
        policy = planner::one_ball_policy(field, schedule, params, wc, o.switch_period);
      } else {
        policy = planner::random_policy(wc.v_max, seed, static_cast<std::uint64_t>(e));
      }
      io::TrajectoryFile f;
      f.header = {task, name, seed, static_cast<std::uint64_t>(e)};
      f.header.task.world.rng_seed = seed;
      f.trajectory = world::rollout(policy, wc, static_cast<std::uint64_t>(e));
      if (field) rewards::annotate_rewards(f.trajectory, field);
      const fs::path path = o.out / trajectory_name(seed, e);
      io::save_trajectory(path, f);
      outputs.push_back(path);
    }
  }
  auto manifest = make_manifest("rollout", config, inputs, outputs);
  write_manifest(o.out / "manifest.json", manifest);
  return manifest;
}

nlohmann::json evaluate(const EvalOptions& o, const nlohmann::json& config) {
  if (o.report.empty()) throw ValidationError("--report is required");
  if (!fs::is_directory(o.traj_dir)) throw ValidationError("trajectory directory " + o.traj_dir.string() + " not found");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(o.traj_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ValidationError("no trajectory files in " + o.traj_dir.string());

  std::map<std::uint64_t, std::vector<world::Trajectory>> by_seed;
  std::optional<targets::TaskSpec> task;
  for (const auto& p : files) {
    io::TrajectoryFile f = io::load_trajectory(p);
    targets::TaskSpec t = f.header.task;
    t.world.rng_seed = 0;
    if (!task) {
      task = t;
    } else if (!(*task == t)) {
      throw ValidationError("mixed tasks: " + p.string() + " differs from the first trajectory");
    }
    by_seed[f.header.seed].push_back(std::move(f.trajectory));
  }

  const targets::TargetDataset gt = io::load_dataset(o.gt);
  const targets::TargetDataset oracle = io::load_dataset(o.oracle);
  for (const auto* ds : {&gt, &oracle}) {
    if (ds->task.kind != task->kind || ds->task.world.num_balls() != task->world.num_balls()) {
      throw ValidationError("reference set does not match the trajectories' task");
    }
  }
  const double oracle_mean = eval::mean_pl(oracle.examples, *task);
  std::vector<std::vector<world::Trajectory>> grouped;
  for (auto& [seed, trajs] : by_seed) grouped.push_back(std::move(trajs));
  const eval::MetricsReport rep = eval::evaluate(grouped, *task, gt.examples, oracle_mean);

  io::write_text(o.report, io::dump_pretty(rep));
  const fs::path csv = sibling(o.report, ".pl.csv");
  io::write_text(csv, io::pl_csv(rep.pl_curve));
  std::vector<fs::path> inputs = files;
  inputs.push_back(o.gt);
  inputs.push_back(o.oracle);
  auto manifest = make_manifest("eval", config, inputs, {o.report, csv});
  write_manifest(sibling(o.report, ".manifest.json"), manifest);
  return manifest;
}

nlohmann::json render(const RenderOptions& o, const nlohmann::json& config) {
  if (o.out_dir.empty()) throw ValidationError("--out-dir is required");
  const io::TrajectoryFile f = io::load_trajectory(o.traj);
  if (f.trajectory.empty()) throw ValidationError("trajectory has no steps");
  const auto states = f.trajectory.states();
  const int horizon = static_cast<int>(f.trajectory.steps.size());
  std::vector<fs::path> outputs;
  for (int k : frame_steps(horizon, o.every)) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d.svg", k);
    const fs::path path = o.out_dir / name;
    io::write_text(path, render_svg(states[static_cast<std::size_t>(k)], f.header.task.world));
    outputs.push_back(path);
  }
  auto manifest = make_manifest("render", config, {o.traj}, outputs);
  write_manifest(o.out_dir / "manifest.json", manifest);
  return manifest;
}

}  // namespace rearrange::cli
