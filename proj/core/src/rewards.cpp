#include "rearrange/rewards.hpp"

#include <algorithm>
#include <cmath>

#include "rearrange/error.hpp"

namespace rearrange::rewards {

double step_reward(const planner::ScoreField& field, const BallState& s_prev, const BallState& s_next, double t) {
  if (s_prev.size() != s_next.size() || s_prev.categories != s_next.categories) {
    throw ValidationError("step_reward: states differ in balls or categories");
  }
  const Field g = field(s_prev, t);
  if (g.size() != s_prev.size()) throw ValidationError("step_reward: field size does not match the state");
  double r = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) r += dot(g[i], s_next.positions[i] - s_prev.positions[i]);
  if (!std::isfinite(r)) throw NumericError("step_reward is not finite");
  return r;
}

double RunningNormalizer::stddev() const {
  if (count_ < 2) return kStdFloor;
  return std::max(kStdFloor, std::sqrt(m2_ / static_cast<double>(count_)));
}

double RunningNormalizer::operator()(double r) {
  const double z = count_ < 2 ? 0.0 : (r - mean_) / stddev();
  ++count_;
  const double delta = r - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (r - mean_);
  return z;
}

std::vector<double> normalize(std::span<const double> stream, RunningNormalizer& normalizer) {
  std::vector<double> out;
  out.reserve(stream.size());
  for (double r : stream) out.push_back(normalizer(r));
  return out;
}

std::vector<double> trajectory_rewards(const Trajectory& traj, const planner::ScoreField& field, double t) {
  std::vector<double> out;
  out.reserve(traj.steps.size());
  for (const auto& rec : traj.steps) out.push_back(step_reward(field, rec.state_before, rec.state_after, t));
  return out;
}

double discounted_surrogate_return(std::span<const double> rewards, double gamma) {
  if (rewards.empty()) throw ValidationError("surrogate return of an empty trajectory");
  double total = 0.0;
  double cumulative = 0.0;
  double disc = 1.0;
  for (double r : rewards) {
    cumulative += r;
    total += disc * cumulative;
    disc *= gamma;
  }
  return total;
}

double discounted_surrogate_return(const Trajectory& traj, const planner::ScoreField& field, double gamma, double t) {
  if (traj.empty()) throw ValidationError("surrogate return of an empty trajectory");
  const auto r = trajectory_rewards(traj, field, t);
  return discounted_surrogate_return(r, gamma);
}

void annotate_rewards(Trajectory& traj, const planner::ScoreField& field, double t) {
  RunningNormalizer norm;
  for (auto& rec : traj.steps) {
    const double r = step_reward(field, rec.state_before, rec.state_after, t);
    rec.reward_raw = r;
    rec.reward_norm = norm(r);
  }
}

}  // namespace rearrange::rewards
