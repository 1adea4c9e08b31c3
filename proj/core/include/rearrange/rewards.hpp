#pragma once

// First-order change in log-likelihood along a trajectory, estimated from a
// score field, and running z-score normalisation.

#include <cstdint>
#include <span>
#include <vector>

#include "rearrange/policies.hpp"
#include "rearrange/world.hpp"

namespace rearrange::rewards {

using world::BallState;
using world::Trajectory;

inline constexpr double kRewardNoise = 0.01;

/// <field(s_prev, t), s_next - s_prev> over the flattened state.
double step_reward(const planner::ScoreField& field, const BallState& s_prev, const BallState& s_next,
                   double t = kRewardNoise);

/// Welford running statistics; z-scores use the population std floored at
/// 1e-8, and are 0 until two samples have been seen.
class RunningNormalizer {
 public:
  static constexpr double kStdFloor = 1e-8;

  /// z-score of r against the statistics so far, then absorbs r.
  double operator()(double r);

  std::int64_t count() const { return count_; }
  double mean() const { return mean_; }
  double stddev() const;

 private:
  std::int64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

std::vector<double> normalize(std::span<const double> stream, RunningNormalizer& normalizer);

/// Raw rewards r_1..r_T of every step.
std::vector<double> trajectory_rewards(const Trajectory& traj, const planner::ScoreField& field,
                                       double t = kRewardNoise);

/// sum_t gamma^(t-1) sum_{k<=t} r_k for t = 1..T. Throws on an empty
/// trajectory.
double discounted_surrogate_return(const Trajectory& traj, const planner::ScoreField& field, double gamma = 0.95,
                                   double t = kRewardNoise);
double discounted_surrogate_return(std::span<const double> rewards, double gamma);

/// Fills reward_raw and reward_norm on every step with a fresh normalizer.
void annotate_rewards(Trajectory& traj, const planner::ScoreField& field, double t = kRewardNoise);

}  // namespace rearrange::rewards
