#pragma once

// Evaluation: oracle-normalised pseudo-likelihood curves, coverage score,
// collision and path-length statistics, mode-posterior entropy and the
// oracle baseline.

#include <optional>
#include <span>
#include <vector>

#include "rearrange/rng.hpp"
#include "rearrange/targets.hpp"
#include "rearrange/world.hpp"

namespace rearrange::eval {

using world::BallState;
using world::Trajectory;

struct EvalConfig {
  int episodes = 100;
  int seeds = 5;
  /// 0 picks the task default: 50 for Clustering, 20 otherwise.
  int gt_size = 0;
  double gamma = 0.95;

  int gt_size_for(targets::TaskKind kind) const;
  void validate() const;
};

struct PlCurve {
  std::vector<double> mean;
  std::vector<double> lo;
  std::vector<double> hi;
};

/// Mean pseudo-likelihood of a state set.
double mean_pl(std::span<const BallState> states, const targets::TaskSpec& task);

/// `by_seed[s]` holds the trajectories of seed s. Per step: the mean over
/// seeds of the per-seed mean PL, divided by oracle_mean, with band
/// mean +- 1.96 * (sample std across seeds) / sqrt(seeds).
PlCurve pl_curve(const std::vector<std::vector<Trajectory>>& by_seed, const targets::TaskSpec& task,
                 double oracle_mean);

/// Symmetric Chamfer distance: half the sum of the mean nearest-neighbour
/// Euclidean distances in each direction.
double chamfer(std::span<const Vec2> a, std::span<const Vec2> b);
/// Sum over colours of the Chamfer distance between same-colour balls.
double state_distance(const BallState& a, const BallState& b);
/// sum over gt of min over results of state_distance.
double coverage_score(std::span<const BallState> results, std::span<const BallState> gt);

/// Mean over trajectories of the total collision count.
double acn(std::span<const Trajectory> trajectories);
/// Total L1 path length of all balls.
double asc(const Trajectory& trajectory);

/// Target samples with per-coordinate Gaussian noise, clamped and
/// de-overlapped. perturb_std = 0 returns the samples untouched.
std::vector<BallState> oracle_baseline(const targets::TaskSpec& task, int n, double perturb_std, Rng& rng);

struct EntropyReport {
  double mean_entropy = 0.0;
  std::vector<double> mean_posterior;
};

/// Six-mode task only.
EntropyReport entropy_report(std::span<const BallState> states, const targets::TaskSpec& task);

struct MetricsReport {
  targets::TaskKind task = targets::TaskKind::Clustering;
  int horizon = 0;
  int trajectories = 0;
  double oracle_mean = 0.0;
  PlCurve pl_curve;
  double coverage_score = 0.0;
  double acn = 0.0;
  /// Mean over trajectories.
  double asc = 0.0;
  std::optional<EntropyReport> entropy;
};

MetricsReport evaluate(const std::vector<std::vector<Trajectory>>& by_seed, const targets::TaskSpec& task,
                       std::span<const BallState> gt, double oracle_mean);

}  // namespace rearrange::eval
