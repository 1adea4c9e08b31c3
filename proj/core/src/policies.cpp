#include "rearrange/policies.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rearrange/error.hpp"

namespace rearrange::planner {

ScoreField learned_field(std::shared_ptr<const score::ScoreModel> model) {
  if (!model) throw ValidationError("learned field needs a model");
  return [model = std::move(model)](const BallState& s, double t) { return model->score(s, t); };
}

ScoreField analytic_field(const targets::TaskSpec& task) {
  if (!task.has_mixture()) {
    throw ValidationError(std::string("no analytic score for task ") + std::string(targets::to_string(task.kind)));
  }
  auto mix = std::make_shared<const targets::GaussianMixture>(targets::mixture_for(task));
  return [mix](const BallState& s, double) { return mix->score(s); };
}

double NoiseSchedule::at(int step) const {
  if (horizon <= 1 || step <= 0) return t0;
  if (step >= horizon - 1) return t_end;
  return t0 + (t_end - t0) * static_cast<double>(step) / static_cast<double>(horizon - 1);
}

void NoiseSchedule::validate() const {
  if (!(t_end > 0.0 && t_end <= t0 && t0 <= 1.0)) throw ValidationError("noise schedule needs 0 < t_end <= t0 <= 1");
  if (horizon < 1) throw ValidationError("noise schedule horizon must be positive");
}

Action gradient_action(const Field& g, double v_max) {
  Action a;
  a.velocities.assign(g.size(), Vec2{});
  const double n = flat_norm(g);
  if (!(n >= 1e-12) || !std::isfinite(n)) return a;
  const double s = v_max / n;
  for (std::size_t i = 0; i < g.size(); ++i) a.velocities[i] = s * g[i];
  return world::clip_speeds(std::move(a), v_max);
}

Policy gradient_only_policy(ScoreField field, NoiseSchedule schedule, double v_max) {
  schedule.validate();
  return [field = std::move(field), schedule, v_max](const BallState& s, int step) {
    return gradient_action(field(s, schedule.at(step)), v_max);
  };
}

Policy orca_policy(ScoreField field, NoiseSchedule schedule, orca::OrcaParams params, world::WorldConfig world) {
  schedule.validate();
  params.validate();
  return [field = std::move(field), schedule, params, world](const BallState& s, int step) {
    const Action pref = gradient_action(field(s, schedule.at(step)), params.v_max);
    Action out;
    out.velocities.resize(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto cs = orca::orca_constraints(static_cast<int>(i), s, pref.velocities, params, world);
      out.velocities[i] = orca::safe_velocity(cs, pref.velocities[i], params.v_max);
    }
    return out;
  };
}

int argmax_component(const Field& g) {
  int best = 0;
  double best_n = -1.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double n = norm_sq(g[i]);
    if (n > best_n) {
      best_n = n;
      best = static_cast<int>(i);
    }
  }
  return best;
}

Policy one_ball_policy(ScoreField field, NoiseSchedule schedule, orca::OrcaParams params, world::WorldConfig world,
                       int switch_period) {
  schedule.validate();
  params.validate();
  if (switch_period < 1) throw ValidationError("switch_period must be positive");
  // The others rest, so the chosen ball takes the whole avoidance effort.
  params.reciprocity = 1.0;
  auto chosen = std::make_shared<int>(-1);
  return [field = std::move(field), schedule, params, world, switch_period, chosen](const BallState& s, int step) {
    Field g = field(s, schedule.at(step));
    if (*chosen < 0 || step % switch_period == 0) *chosen = argmax_component(g);
    const std::size_t c = static_cast<std::size_t>(*chosen);
    Field masked(s.size(), Vec2{});
    if (c < s.size()) masked[c] = g[c];
    Action pref = gradient_action(masked, params.v_max);
    Action out;
    out.velocities.assign(s.size(), Vec2{});
    if (c < s.size()) {
      const auto cs = orca::orca_constraints(static_cast<int>(c), s, pref.velocities, params, world);
      out.velocities[c] = orca::safe_velocity(cs, pref.velocities[c], params.v_max);
    }
    return out;
  };
}

Policy random_policy(double v_max, std::uint64_t seed, std::uint64_t episode) {
  if (!(v_max > 0.0)) throw ValidationError("random policy v_max must be positive");
  auto rng = std::make_shared<Rng>(make_rng(seed, streams::kPolicy, episode));
  return [rng, v_max](const BallState& s, int) {
    Action a;
    a.velocities.resize(s.size());
    for (Vec2& v : a.velocities) {
      const double r = v_max * std::sqrt(uniform(*rng, 0.0, 1.0));
      const double th = uniform(*rng, 0.0, 2.0 * std::numbers::pi);
      v = {r * std::cos(th), r * std::sin(th)};
    }
    return a;
  };
}

}  // namespace rearrange::planner
