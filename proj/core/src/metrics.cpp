#include "rearrange/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rearrange/error.hpp"

namespace rearrange::eval {

int EvalConfig::gt_size_for(targets::TaskKind kind) const {
  if (gt_size > 0) return gt_size;
  return kind == targets::TaskKind::Clustering ? 50 : 20;
}

void EvalConfig::validate() const {
  if (episodes < 1 || seeds < 1) throw ValidationError("episodes and seeds must be positive");
  if (gt_size < 0) throw ValidationError("gt_size must be non-negative");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("gamma must lie in (0, 1]");
}

double mean_pl(std::span<const BallState> states, const targets::TaskSpec& task) {
  if (states.empty()) throw ValidationError("mean PL of an empty set");
  double s = 0.0;
  for (const BallState& st : states) s += targets::pseudo_likelihood(st, task);
  return s / static_cast<double>(states.size());
}

PlCurve pl_curve(const std::vector<std::vector<Trajectory>>& by_seed, const targets::TaskSpec& task,
                 double oracle_mean) {
  if (!(oracle_mean != 0.0) || !std::isfinite(oracle_mean)) throw ValidationError("oracle mean must be finite and nonzero");
  if (by_seed.empty()) throw ValidationError("pl_curve: no seeds");
  std::size_t steps = 0;
  for (const auto& seed : by_seed) {
    if (seed.empty()) throw ValidationError("pl_curve: a seed has no trajectories");
    for (const Trajectory& t : seed) {
      if (t.empty()) throw ValidationError("pl_curve: empty trajectory");
      if (steps == 0) steps = t.steps.size();
      if (t.steps.size() != steps) throw ValidationError("pl_curve: trajectories differ in horizon");
    }
  }
  const std::size_t n_seeds = by_seed.size();
  // per_seed[s][k]: mean normalised PL of seed s at step k.
  std::vector<std::vector<double>> per_seed(n_seeds, std::vector<double>(steps + 1, 0.0));
  for (std::size_t s = 0; s < n_seeds; ++s) {
    for (const Trajectory& t : by_seed[s]) {
      per_seed[s][0] += targets::pseudo_likelihood(t.initial(), task);
      for (std::size_t k = 0; k < steps; ++k) per_seed[s][k + 1] += targets::pseudo_likelihood(t.steps[k].state_after, task);
    }
    for (double& v : per_seed[s]) v /= static_cast<double>(by_seed[s].size()) * oracle_mean;
  }
  PlCurve c;
  c.mean.resize(steps + 1);
  c.lo.resize(steps + 1);
  c.hi.resize(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    double m = 0.0;
    for (std::size_t s = 0; s < n_seeds; ++s) m += per_seed[s][k];
    m /= static_cast<double>(n_seeds);
    double half = 0.0;
    if (n_seeds > 1) {
      double v = 0.0;
      for (std::size_t s = 0; s < n_seeds; ++s) v += (per_seed[s][k] - m) * (per_seed[s][k] - m);
      half = 1.96 * std::sqrt(v / static_cast<double>(n_seeds - 1)) / std::sqrt(static_cast<double>(n_seeds));
    }
    c.mean[k] = m;
    c.lo[k] = m - half;
    c.hi[k] = m + half;
  }
  return c;
}

double chamfer(std::span<const Vec2> a, std::span<const Vec2> b) {
  if (a.empty() || b.empty()) throw ValidationError("chamfer distance of an empty point set");
  auto directed = [](std::span<const Vec2> from, std::span<const Vec2> to) {
    double s = 0.0;
    for (const Vec2& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec2& q : to) best = std::min(best, norm(p - q));
      s += best;
    }
    return s / static_cast<double>(from.size());
  };
  return 0.5 * (directed(a, b) + directed(b, a));
}

double state_distance(const BallState& a, const BallState& b) {
  int colors = 0;
  for (int c : a.categories) colors = std::max(colors, c + 1);
  for (int c : b.categories) colors = std::max(colors, c + 1);
  double d = 0.0;
  std::vector<Vec2> pa, pb;
  for (int c = 0; c < colors; ++c) {
    pa.clear();
    pb.clear();
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a.categories[i] == c) pa.push_back(a.positions[i]);
    for (std::size_t i = 0; i < b.size(); ++i)
      if (b.categories[i] == c) pb.push_back(b.positions[i]);
    if (pa.empty() && pb.empty()) continue;
    if (pa.empty() || pb.empty()) throw ValidationError("states disagree on colour " + std::to_string(c));
    d += chamfer(pa, pb);
  }
  return d;
}

double coverage_score(std::span<const BallState> results, std::span<const BallState> gt) {
  if (results.empty() || gt.empty()) throw ValidationError("coverage score needs results and ground truth");
  double cs = 0.0;
  for (const BallState& g : gt) {
    double best = std::numeric_limits<double>::infinity();
    for (const BallState& r : results) best = std::min(best, state_distance(g, r));
    cs += best;
  }
  return cs;
}

double acn(std::span<const Trajectory> trajectories) {
  if (trajectories.empty()) throw ValidationError("acn of no trajectories");
  double total = 0.0;
  for (const Trajectory& t : trajectories)
    for (const auto& rec : t.steps) total += rec.collision_count;
  return total / static_cast<double>(trajectories.size());
}

double asc(const Trajectory& trajectory) {
  if (trajectory.empty()) throw ValidationError("asc of an empty trajectory");
  double s = 0.0;
  for (const auto& rec : trajectory.steps)
    for (std::size_t i = 0; i < rec.state_after.size(); ++i)
      s += norm_l1(rec.state_after.positions[i] - rec.state_before.positions[i]);
  return s;
}

std::vector<BallState> oracle_baseline(const targets::TaskSpec& task, int n, double perturb_std, Rng& rng) {
  task.validate();
  if (n < 1) throw ValidationError("oracle baseline needs n >= 1");
  if (!(perturb_std >= 0.0)) throw ValidationError("perturb_std must be non-negative");
  std::vector<BallState> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    BallState s = targets::sample_target(task, rng);
    if (perturb_std > 0.0) {
      for (Vec2& p : s.positions) p += perturb_std * Vec2{standard_normal(rng), standard_normal(rng)};
      world::clamp_to_walls(s.positions, task.world);
      world::resolve_overlaps(s.positions, task.world, 100 * task.world.resolution_passes);
    }
    out.push_back(std::move(s));
  }
  return out;
}

EntropyReport entropy_report(std::span<const BallState> states, const targets::TaskSpec& task) {
  if (task.kind != targets::TaskKind::SixModeClustering) {
    throw ValidationError("entropy report requires the six-mode clustering task");
  }
  if (states.empty()) throw ValidationError("entropy report of an empty set");
  EntropyReport r;
  for (const BallState& s : states) {
    const auto post = targets::gmm_posterior(s, task);
    if (r.mean_posterior.empty()) r.mean_posterior.assign(post.probs.size(), 0.0);
    r.mean_entropy += post.entropy;
    for (std::size_t k = 0; k < post.probs.size(); ++k) r.mean_posterior[k] += post.probs[k];
  }
  const double inv = 1.0 / static_cast<double>(states.size());
  r.mean_entropy *= inv;
  for (double& p : r.mean_posterior) p *= inv;
  return r;
}

MetricsReport evaluate(const std::vector<std::vector<Trajectory>>& by_seed, const targets::TaskSpec& task,
                       std::span<const BallState> gt, double oracle_mean) {
  MetricsReport rep;
  rep.task = task.kind;
  rep.oracle_mean = oracle_mean;
  rep.pl_curve = pl_curve(by_seed, task, oracle_mean);
  std::vector<Trajectory> all;
  std::vector<BallState> terminals;
  for (const auto& seed : by_seed) {
    for (const Trajectory& t : seed) {
      all.push_back(t);
      terminals.push_back(t.terminal());
    }
  }
  rep.trajectories = static_cast<int>(all.size());
  rep.horizon = static_cast<int>(all.front().steps.size());
  rep.coverage_score = coverage_score(terminals, gt);
  rep.acn = acn(all);
  double a = 0.0;
  for (const Trajectory& t : all) a += asc(t);
  rep.asc = a / static_cast<double>(all.size());
  if (task.kind == targets::TaskKind::SixModeClustering) rep.entropy = entropy_report(terminals, task);
  return rep;
}

}  // namespace rearrange::eval
