#pragma once

// Control laws built on a score field: gradient-based reference velocities,
// the ORCA-adjusted planner, the one-ball-at-a-time variant and baselines.

#include <cstdint>
#include <functional>
#include <memory>

#include "rearrange/orca.hpp"
#include "rearrange/score_model.hpp"
#include "rearrange/targets.hpp"
#include "rearrange/world.hpp"

namespace rearrange::planner {

using world::Action;
using world::BallState;
using world::Policy;

/// (state, noise level) -> per-ball gradient.
using ScoreField = std::function<Field(const BallState&, double)>;

ScoreField learned_field(std::shared_ptr<const score::ScoreModel> model);
/// Closed-form mixture score of a Clustering or six-mode task. The noise
/// level is ignored: the field is the clean mixture score at every t.
ScoreField analytic_field(const targets::TaskSpec& task);

struct NoiseSchedule {
  double t0 = 0.1;
  double t_end = 1e-3;
  int horizon = 100;

  /// Linear from t0 at step 0 to t_end at step horizon - 1, held there after.
  double at(int step) const;
  void validate() const;
};

/// Rescales the flattened field to norm v_max, then clips each ball to
/// v_max. Fields with norm below 1e-12 give a zero action.
Action gradient_action(const Field& g, double v_max);

Policy gradient_only_policy(ScoreField field, NoiseSchedule schedule, double v_max);

/// Every ball takes the ORCA velocity closest to its gradient action. The
/// other balls' current velocities are taken to be their gradient actions.
Policy orca_policy(ScoreField field, NoiseSchedule schedule, orca::OrcaParams params, world::WorldConfig world);

/// Index of the largest per-ball gradient norm; ties go to the lowest index.
int argmax_component(const Field& g);

/// Moves one ball at a time. Every switch_period steps the ball with the
/// largest gradient component is chosen; its gradient alone is rescaled to
/// v_max and ORCA-adjusted against the resting others. Stateful: build one
/// per episode.
Policy one_ball_policy(ScoreField field, NoiseSchedule schedule, orca::OrcaParams params, world::WorldConfig world,
                       int switch_period = 20);

/// Uniform velocities in the speed disc from (seed, policy stream, episode).
Policy random_policy(double v_max, std::uint64_t seed, std::uint64_t episode);

}  // namespace rearrange::planner
