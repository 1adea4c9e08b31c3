// Acceptance runner: one PASS/FAIL line per criterion. With arguments, only
// the listed criteria run (e.g. `rearrange_acceptance 1 5 11`).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "cli/cli.hpp"
#include "lp_oracle.hpp"
#include "rearrange/io.hpp"
#include "rearrange/metrics.hpp"
#include "rearrange/orca.hpp"
#include "rearrange/policies.hpp"
#include "rearrange/rewards.hpp"
#include "rearrange/score_model.hpp"
#include "rearrange/targets.hpp"

namespace fs = std::filesystem;
using namespace rearrange;
using world::BallState;
using world::Policy;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

targets::TaskSpec task_of(targets::TaskKind kind, int n_per_color) {
  targets::TaskSpec t;
  t.kind = kind;
  t.world.n_per_color = n_per_color;
  t.validate();
  return t;
}

score::ScoreModel train_model(const targets::TaskSpec& task, int n_examples, int steps, std::uint64_t seed,
                              double lr = 2e-4) {
  const auto ds = targets::make_dataset(task, n_examples, seed);
  score::TrainConfig cfg;
  cfg.steps = steps;
  cfg.rng_seed = seed;
  cfg.learning_rate = lr;
  return score::train(ds, cfg).model;
}

planner::NoiseSchedule schedule_for(const world::WorldConfig& w) { return {0.1, 1e-3, w.horizon}; }

Policy make_policy(const std::string& name, const planner::ScoreField& field, const world::WorldConfig& w,
                   std::uint64_t episode) {
  const auto params = orca::OrcaParams::from_world(w);
  if (name == "orca") return planner::orca_policy(field, schedule_for(w), params, w);
  if (name == "gradient") return planner::gradient_only_policy(field, schedule_for(w), w.v_max);
  return planner::random_policy(w.v_max, w.rng_seed, episode);
}

std::vector<world::Trajectory> run_episodes(const std::string& policy, const planner::ScoreField& field,
                                            world::WorldConfig w, std::uint64_t seed, int episodes) {
  w.rng_seed = seed;
  std::vector<world::Trajectory> out;
  for (int e = 0; e < episodes; ++e) {
    const auto ep = static_cast<std::uint64_t>(e);
    out.push_back(world::rollout(make_policy(policy, field, w, ep), w, ep));
  }
  return out;
}

// Reverse-mode DSM gradients against central differences, h = 1e-5, on one
// frozen batch. Error is per entry, relative to max(|fd|, 1).
Outcome autodiff_soundness() {
  score::ModelConfig mc;
  mc.hidden = 16;
  const score::ScoreModel m(mc, 11);
  const auto task = task_of(targets::TaskKind::Clustering, 2);
  const auto ds = targets::make_dataset(task, 8, 11);
  Rng rng = make_rng(11, streams::kTraining);
  const auto batch = score::make_dsm_batch(ds.examples, 4, m.kernel(), mc.t_min, rng);
  std::vector<ad::Tensor> grads;
  score::dsm_batch_loss(m, batch, &grads);
  const double h = 1e-5;
  auto params = m.parameters();
  double worst = 0.0, num = 0.0, den = 0.0;
  std::size_t entries = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const double orig = params[k][i];
      params[k][i] = orig + h;
      const double up = score::dsm_batch_loss(score::ScoreModel(mc, params), batch);
      params[k][i] = orig - h;
      const double down = score::dsm_batch_loss(score::ScoreModel(mc, params), batch);
      params[k][i] = orig;
      const double fd = (up - down) / (2 * h);
      const double diff = std::abs(fd - grads[k][i]);
      worst = std::max(worst, diff / std::max(std::abs(fd), 1.0));
      num += diff * diff;
      den += fd * fd;
      ++entries;
    }
  }
  const double global = std::sqrt(num / den);
  return {worst < 1e-5 && global < 1e-5, std::to_string(entries) + " entries, max rel err " + fmt("%.2e", worst) +
                                             ", norm rel err " + fmt("%.2e", global)};
}

// Analytic mixture score against central differences of the log density.
Outcome analytic_score_oracle() {
  double worst = 0.0;
  const double h = 1e-6;
  int n = 0;
  for (auto kind : {targets::TaskKind::Clustering, targets::TaskKind::SixModeClustering}) {
    const auto task = task_of(kind, 7);
    Rng rng = make_rng(12, streams::kOracle, static_cast<std::uint64_t>(kind));
    for (int s = 0; s < 50; ++s, ++n) {
      // Half near a target, half uniformly spread.
      BallState st = s % 2 == 0 ? targets::sample_target(task, rng)
                                : world::sample_initial_state(task.world, rng);
      const Field g = targets::gmm_score(st, task);
      Field fd(st.size());
      for (std::size_t i = 0; i < st.size(); ++i) {
        for (int axis = 0; axis < 2; ++axis) {
          double& x = axis == 0 ? st.positions[i].x : st.positions[i].y;
          const double orig = x;
          x = orig + h;
          const double up = targets::gmm_log_density(st, task);
          x = orig - h;
          const double down = targets::gmm_log_density(st, task);
          x = orig;
          (axis == 0 ? fd[i].x : fd[i].y) = (up - down) / (2 * h);
        }
      }
      Field diff(st.size());
      for (std::size_t i = 0; i < st.size(); ++i) diff[i] = g[i] - fd[i];
      worst = std::max(worst, flat_norm(diff) / flat_norm(fd));
    }
  }
  return {worst < 1e-4, std::to_string(n) + " states, max rel err " + fmt("%.2e", worst)};
}

// One-example dataset: the exact noisy score is -(x - s*) / variance(t).
Outcome dsm_convergence() {
  const auto task = task_of(targets::TaskKind::Clustering, 2);
  const auto ds = targets::make_dataset(task, 1, 13);
  score::TrainConfig cfg;
  cfg.steps = 3000;
  cfg.batch_size = 32;
  cfg.learning_rate = 1e-3;
  cfg.rng_seed = 13;
  const auto model = score::train(ds, cfg).model;
  const BallState& target = ds.examples.front();
  const auto k = model.kernel();
  Rng rng = make_rng(13, streams::kOracle);
  double sum = 0.0;
  int n = 0;
  for (int ti = 0; ti < 10; ++ti) {
    const double t = 0.05 + 0.45 * ti / 9.0;
    for (int r = 0; r < 20; ++r, ++n) {
      const auto p = score::perturb(target, t, k, rng);
      sum += cosine_similarity(model.score(p.noisy, t), p.true_score);
    }
  }
  const double mean = sum / n;
  return {mean >= 0.95, "mean cosine " + fmt("%.4f", mean) + " over t in [0.05, 0.5]"};
}

std::shared_ptr<const score::ScoreModel> clustering_k9_model(int steps, double lr) {
  return std::make_shared<const score::ScoreModel>(
      train_model(task_of(targets::TaskKind::Clustering, 3), 10000, steps, 14, lr));
}

// Near-target states: target samples jittered by 0.01 per coordinate.
std::vector<BallState> near_target_states(const targets::TaskSpec& task, int n, std::uint64_t seed) {
  Rng rng = make_rng(seed, streams::kGroundTruth);
  return eval::oracle_baseline(task, n, 0.01, rng);
}

Outcome learned_field_quality() {
  const auto task = task_of(targets::TaskKind::Clustering, 3);
  const auto model = clustering_k9_model(20000, 2e-4);
  double sum = 0.0;
  const auto states = near_target_states(task, 500, 14);
  for (const auto& s : states) sum += cosine_similarity(model->score(s, 0.01), targets::gmm_score(s, task));
  const double mean = sum / static_cast<double>(states.size());
  return {mean >= 0.6, "K=9, 20k steps: mean cosine " + fmt("%.4f", mean) + " over 500 states"};
}

// 200 random constraint sets. Feasible sets: LP2 against exact enumeration
// and the v_max/500 grid. Infeasible sets: the fallback against the grid
// minimax of the largest penetration.
Outcome orca_lp_correctness() {
  Rng rng = make_rng(15);
  const double v_max = 1.0;
  const int cells = 500;
  const double pitch = v_max / cells;
  double worst_dist = 0.0, worst_violation = 0.0, worst_minimax = 0.0;
  int feasible = 0, infeasible = 0;
  bool ok = true;
  for (int n = 0; n < 200; ++n) {
    std::vector<orca::HalfPlane> planes;
    const int m = 1 + static_cast<int>(uniform(rng, 0.0, 5.999));
    for (int i = 0; i < m; ++i) planes.push_back(oracle::random_plane(rng, v_max));
    const Vec2 pref{uniform(rng, -1.5, 1.5), uniform(rng, -1.5, 1.5)};
    const auto r = orca::solve_lp2(planes, pref, v_max);
    if (r.feasible) {
      ++feasible;
      for (const auto& h : planes) worst_violation = std::max(worst_violation, h.penetration(r.velocity));
      worst_violation = std::max(worst_violation, norm(r.velocity) - v_max);
      const auto exact = oracle::exact_lp2(planes, pref, v_max);
      const auto grid = oracle::grid_lp2(planes, pref, v_max, cells);
      if (!exact) {
        ok = false;
        continue;
      }
      worst_dist = std::max(worst_dist, norm(*exact - r.velocity));
      // No grid point may be closer to v_pref than the returned velocity.
      if (grid.best && norm(r.velocity - pref) > norm(*grid.best - pref) + 1e-12) ok = false;
    } else {
      ++infeasible;
      if (oracle::exact_lp2(planes, pref, v_max)) ok = false;
      const Vec2 v = orca::solve_lp3(planes, v_max, 0, pref);
      const auto grid = oracle::grid_minimax(planes, 0, v_max, cells);
      worst_minimax = std::max(worst_minimax, oracle::max_penetration(planes, 0, v) - grid.objective);
    }
  }
  ok = ok && worst_dist <= 2 * pitch && worst_violation <= 1e-9 && worst_minimax <= 2 * pitch;
  return {ok, std::to_string(feasible) + " feasible / " + std::to_string(infeasible) +
                  " infeasible; max dist to optimum " + fmt("%.2e", worst_dist) + ", max violation " +
                  fmt("%.2e", worst_violation) + ", fallback excess over grid minimax " + fmt("%.2e", worst_minimax)};
}

Outcome rearrangement_efficacy() {
  const auto task = task_of(targets::TaskKind::Clustering, 7);
  const auto field = planner::analytic_field(task);
  Rng rng = make_rng(16, streams::kOracle);
  const double oracle_mean = eval::mean_pl(eval::oracle_baseline(task, 50, 0.005, rng), task);
  auto terminal = [&](const std::string& policy) {
    std::vector<std::vector<world::Trajectory>> by_seed;
    for (std::uint64_t seed = 0; seed < 3; ++seed) by_seed.push_back(run_episodes(policy, field, task.world, seed, 100));
    return eval::pl_curve(by_seed, task, oracle_mean).mean.back();
  };
  const double orca_pl = terminal("orca");
  const double random_pl = terminal("random");
  return {orca_pl >= 0.5 && random_pl <= 0.1,
          "terminal normalised PL: orca " + fmt("%.4g", orca_pl) + ", random " + fmt("%.4g", random_pl)};
}

Outcome ablation_direction() {
  std::string detail;
  bool ok = true;
  for (auto kind : {targets::TaskKind::Circling, targets::TaskKind::Clustering, targets::TaskKind::CirclingClustering}) {
    const auto task = task_of(kind, 7);
    planner::ScoreField field;
    if (task.has_mixture()) {
      field = planner::analytic_field(task);
    } else {
      field = planner::learned_field(
          std::make_shared<const score::ScoreModel>(train_model(task, 2000, 2000, 17, 1e-3)));
    }
    const double grad = eval::acn(run_episodes("gradient", field, task.world, 17, 20));
    const double orca = eval::acn(run_episodes("orca", field, task.world, 17, 20));
    ok = ok && grad > orca;
    detail += std::string(targets::to_string(kind)) + " gradient " + fmt("%.2f", grad) + " vs orca " +
              fmt("%.2f", orca) + "; ";
  }
  detail.resize(detail.size() - 2);
  return {ok, "ACN " + detail};
}

Outcome reward_fidelity() {
  const auto task = task_of(targets::TaskKind::Clustering, 3);
  const auto analytic = planner::analytic_field(task);
  const auto learned = planner::learned_field(clustering_k9_model(4000, 1e-3));
  std::vector<double> exact, r_analytic, r_learned;
  for (const auto& traj : run_episodes("orca", analytic, task.world, 18, 20)) {
    const auto a = rewards::trajectory_rewards(traj, analytic);
    const auto l = rewards::trajectory_rewards(traj, learned);
    for (std::size_t i = 0; i < traj.steps.size(); ++i) {
      exact.push_back(targets::gmm_log_density(traj.steps[i].state_after, task) -
                      targets::gmm_log_density(traj.steps[i].state_before, task));
      r_analytic.push_back(a[i]);
      r_learned.push_back(l[i]);
    }
  }
  const double ca = pearson(r_analytic, exact);
  const double cl = pearson(r_learned, exact);
  return {ca >= 0.95 && cl >= 0.8, std::to_string(exact.size()) + " steps: Pearson analytic " + fmt("%.4f", ca) +
                                       ", learned " + fmt("%.4f", cl)};
}

Outcome equivariance_generalization() {
  const auto task21 = task_of(targets::TaskKind::Clustering, 7);
  const auto model = std::make_shared<const score::ScoreModel>(train_model(task21, 10000, 4000, 19, 1e-3));

  Rng rng = make_rng(19, streams::kOracle);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const BallState s = world::sample_initial_state(task21.world, rng);
    std::vector<std::size_t> perm(s.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    BallState p;
    for (std::size_t i : perm) {
      p.positions.push_back(s.positions[i]);
      p.categories.push_back(s.categories[i]);
    }
    const double t = uniform(rng, 1e-3, 1.0);
    const Field a = model->score(s, t), b = model->score(p, t);
    for (std::size_t j = 0; j < perm.size(); ++j) worst = std::max(worst, norm(b[j] - a[perm[j]]));
  }

  const auto task30 = task_of(targets::TaskKind::Clustering, 10);
  const auto field = planner::learned_field(model);
  int improved = 0;
  const auto trajs = run_episodes("orca", field, task30.world, 19, 50);
  for (const auto& t : trajs) {
    improved += targets::pseudo_likelihood(t.terminal(), task30) > targets::pseudo_likelihood(t.initial(), task30);
  }
  const double frac = improved / 50.0;
  return {worst <= 1e-9 && frac >= 0.9, "permutation max dev " + fmt("%.1e", worst) + "; K=21 model at K=30: " +
                                            std::to_string(improved) + "/50 episodes improve PL"};
}

Outcome six_mode_diagnostics() {
  const auto task = task_of(targets::TaskKind::SixModeClustering, 7);
  const auto ds = targets::make_dataset(task, 1000, 20);
  const auto rep = eval::entropy_report(ds.examples, task);
  bool ok = rep.mean_entropy < 0.1 && rep.mean_posterior.size() == 6;
  std::string modes;
  for (double p : rep.mean_posterior) {
    ok = ok && p >= 0.10 && p <= 0.24;
    modes += fmt("%.3f ", p);
  }
  modes.pop_back();
  return {ok, "mean entropy " + fmt("%.4f", rep.mean_entropy) + ", mode means [" + modes + "]"};
}

// The full CLI pipeline twice with the same seeds, compared byte for byte,
// plus parse/dump round-trips of every format.
Outcome determinism_and_formats() {
  const fs::path root = fs::temp_directory_path() / "rearrange_acceptance_determinism";
  fs::remove_all(root);
  auto pipeline = [&](const fs::path& d) {
    const std::string s = d.string();
    const std::vector<std::vector<std::string>> cmds = {
        {"sample-targets", "--n-per-color", "2", "--n", "50", "--seed", "3", "--out", s + "/data.jsonl"},
        {"sample-targets", "--n-per-color", "2", "--n", "20", "--seed", "4", "--perturb-std", "0.005", "--out",
         s + "/oracle.jsonl"},
        {"train-score", "--data", s + "/data.jsonl", "--steps", "40", "--hidden", "16", "--batch", "8", "--quiet",
         "--out", s + "/model.json"},
        {"rollout", "--policy", "orca", "--model", s + "/model.json", "--n-per-color", "2", "--horizon", "20",
         "--episodes", "2", "--seeds", "2", "--out", s + "/traj"},
        {"eval", "--traj-dir", s + "/traj", "--gt", s + "/data.jsonl", "--oracle", s + "/oracle.jsonl", "--report",
         s + "/report.json"},
        {"render", "--traj", s + "/traj/seed0_ep0001.jsonl", "--every", "5", "--out-dir", s + "/frames"},
    };
    for (const auto& c : cmds) {
      if (cli::run(c) != 0) return false;
    }
    return true;
  };
  const fs::path a = root / "a", b = root / "b";
  if (!pipeline(a) || !pipeline(b)) return {false, "pipeline command failed"};

  // Manifests embed their own paths, so they are compared after the swap.
  std::size_t compared = 0;
  std::string mismatch;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), a);
    std::string ta = io::read_text(e.path()), tb = io::read_text(b / rel);
    if (rel.string().find("manifest") != std::string::npos) {
      for (std::size_t at = ta.find(a.string()); at != std::string::npos; at = ta.find(a.string(), at))
        ta.replace(at, a.string().size(), b.string());
    }
    ++compared;
    if (ta != tb) mismatch += rel.string() + " ";
  }

  std::string broken;
  auto check = [&broken](bool same, const char* what) {
    if (!same) broken += std::string(what) + " ";
  };
  const auto ds = io::load_dataset(a / "data.jsonl");
  check(io::dataset_jsonl(ds) == io::read_text(a / "data.jsonl"), "dataset");
  check(io::parse_dataset_jsonl(io::dataset_jsonl(ds)).examples == ds.examples, "dataset-values");
  const auto model = io::load_checkpoint(a / "model.json");
  check(io::dump(io::checkpoint_json(model)) == io::dump(io::parse_json(io::read_text(a / "model.json"), "model")),
        "checkpoint");
  check(io::model_from_checkpoint(io::checkpoint_json(model)).parameters() == model.parameters(), "checkpoint-values");
  const auto traj = io::load_trajectory(a / "traj/seed0_ep0001.jsonl");
  check(io::trajectory_jsonl(traj) == io::read_text(a / "traj/seed0_ep0001.jsonl"), "trajectory");
  check(io::parse_trajectory_jsonl(io::trajectory_jsonl(traj)).trajectory == traj.trajectory, "trajectory-values");
  const auto rj = io::parse_json(io::read_text(a / "report.json"), "report");
  check(io::dump_pretty(rj.get<eval::MetricsReport>()) == io::read_text(a / "report.json"), "report");
  check(io::pl_csv(rj.get<eval::MetricsReport>().pl_curve) == io::read_text(a / "report.pl.csv"), "pl-csv");
  check(cli::render_svg(traj.trajectory.initial(), traj.header.task.world) == io::read_text(a / "frames/frame_0000.svg"),
        "svg");
  fs::remove_all(root);
  const bool ok = compared > 10 && mismatch.empty() && broken.empty();
  std::string detail = std::to_string(compared) + " files byte-identical across two runs";
  if (!mismatch.empty()) detail = "differ: " + mismatch;
  if (!broken.empty()) detail += "; round-trip broken: " + broken;
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"autodiff soundness", autodiff_soundness},
      {"analytic score oracle", analytic_score_oracle},
      {"DSM convergence", dsm_convergence},
      {"learned field quality", learned_field_quality},
      {"ORCA LP correctness", orca_lp_correctness},
      {"rearrangement efficacy", rearrangement_efficacy},
      {"ablation direction", ablation_direction},
      {"reward fidelity", reward_fidelity},
      {"equivariance and generalization", equivariance_generalization},
      {"six-mode diagnostics", six_mode_diagnostics},
      {"determinism and formats", determinism_and_formats},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::printf("%s [%d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
