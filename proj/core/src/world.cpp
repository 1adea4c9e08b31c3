#include "rearrange/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "rearrange/error.hpp"

namespace rearrange::world {

void WorldConfig::validate() const {
  if (!(ball_radius > 0.0)) throw ValidationError("ball_radius must be positive");
  if (!(half_extent > ball_radius)) throw ValidationError("half_extent must exceed ball_radius");
  if (!(v_max > 0.0)) throw ValidationError("v_max must be positive");
  if (!(dt > 0.0)) throw ValidationError("dt must be positive");
  if (horizon < 1) throw ValidationError("horizon must be at least 1");
  if (n_colors < 1 || n_per_color < 1) throw ValidationError("need at least one ball");
  if (resolution_passes < 1) throw ValidationError("resolution_passes must be at least 1");
}

std::vector<BallState> Trajectory::states() const {
  std::vector<BallState> out;
  if (steps.empty()) return out;
  out.reserve(steps.size() + 1);
  out.push_back(steps.front().state_before);
  for (const StepRecord& rec : steps) out.push_back(rec.state_after);
  return out;
}

std::vector<int> canonical_categories(const WorldConfig& cfg) {
  std::vector<int> cats(static_cast<std::size_t>(cfg.num_balls()));
  for (std::size_t i = 0; i < cats.size(); ++i) cats[i] = static_cast<int>(i) / cfg.n_per_color;
  return cats;
}

Action clip_speeds(Action action, double v_max) {
  for (Vec2& v : action.velocities) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y)) {
      v = {};
      continue;
    }
    const double speed = norm(v);
    if (speed > v_max) v *= v_max / speed;
  }
  return action;
}

void clamp_to_walls(std::vector<Vec2>& positions, const WorldConfig& cfg) {
  const double b = cfg.bound();
  for (Vec2& p : positions) {
    p.x = std::clamp(p.x, -b, b);
    p.y = std::clamp(p.y, -b, b);
  }
}

ResolveResult resolve_overlaps(std::vector<Vec2>& positions, const WorldConfig& cfg, int max_passes) {
  const double min_dist = 2.0 * cfg.ball_radius;
  const double contact_dist = min_dist - kOverlapTol;
  const std::size_t n = positions.size();
  std::vector<char> touched(n * n, 0);

  ResolveResult result;
  for (int pass = 0; pass < max_passes; ++pass) {
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const Vec2 d = positions[j] - positions[i];
        const double dist = norm(d);
        if (dist < contact_dist) touched[i * n + j] = 1;
        if (dist < min_dist - 1e-12) {
          // Coincident centres separate along +x.
          const Vec2 u = dist > 0.0 ? d / dist : Vec2{1.0, 0.0};
          const double push = 0.5 * (min_dist - dist);
          positions[i] -= push * u;
          positions[j] += push * u;
          moved = true;
        }
      }
    }
    clamp_to_walls(positions, cfg);
    result.passes = pass + 1;
    if (!moved) break;
  }

  double closest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) closest = std::min(closest, norm(positions[j] - positions[i]));
  result.converged = closest >= contact_dist;

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (touched[i * n + j]) result.contacts.emplace_back(static_cast<int>(i), static_cast<int>(j));
  return result;
}

double min_pair_distance(const BallState& state) {
  double closest = std::numeric_limits<double>::infinity();
  const auto& p = state.positions;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j) closest = std::min(closest, norm(p[j] - p[i]));
  return closest;
}

bool inside_walls(const BallState& state, const WorldConfig& cfg) {
  const double b = cfg.bound();
  return std::all_of(state.positions.begin(), state.positions.end(),
                     [b](Vec2 p) { return std::abs(p.x) <= b && std::abs(p.y) <= b; });
}

bool is_legal(const BallState& state, const WorldConfig& cfg) {
  return inside_walls(state, cfg) && min_pair_distance(state) >= 2.0 * cfg.ball_radius - kOverlapTol;
}

BallState sample_initial_state(const WorldConfig& cfg, Rng& rng) {
  cfg.validate();
  const int k = cfg.num_balls();
  const double disc_area = k * std::numbers::pi * cfg.ball_radius * cfg.ball_radius;
  const double box_area = 4.0 * cfg.half_extent * cfg.half_extent;
  if (disc_area > 0.9 * box_area) {
    throw ValidationError("packing infeasible: " + std::to_string(k) + " balls cover more than 90% of the box");
  }

  const double b = cfg.bound();
  BallState state;
  state.categories = canonical_categories(cfg);
  constexpr int kAttempts = 100;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    state.positions.assign(static_cast<std::size_t>(k), Vec2{});
    for (Vec2& p : state.positions) {
      p.x = uniform(rng, -b, b);
      p.y = uniform(rng, -b, b);
    }
    if (resolve_overlaps(state.positions, cfg, 100 * cfg.resolution_passes).converged) return state;
  }
  throw ValidationError("packing infeasible: overlap resolution did not converge");
}

StepRecord step(const BallState& state, const Action& action, const WorldConfig& cfg) {
  if (action.velocities.size() != state.size()) {
    throw ValidationError("action has " + std::to_string(action.velocities.size()) + " velocities for " +
                          std::to_string(state.size()) + " balls");
  }
  StepRecord rec;
  rec.state_before = state;
  rec.action = clip_speeds(action, cfg.v_max);

  BallState next = state;
  for (std::size_t i = 0; i < next.size(); ++i) next.positions[i] += cfg.dt * rec.action.velocities[i];
  clamp_to_walls(next.positions, cfg);
  ResolveResult res = resolve_overlaps(next.positions, cfg, cfg.resolution_passes);
  if (!res.converged) {
    // Dense crowds can need more than the pass budget; keep going so the
    // non-penetration invariant holds after every step.
    ResolveResult more = resolve_overlaps(next.positions, cfg, 99 * cfg.resolution_passes);
    res.contacts.insert(res.contacts.end(), more.contacts.begin(), more.contacts.end());
    std::sort(res.contacts.begin(), res.contacts.end());
    res.contacts.erase(std::unique(res.contacts.begin(), res.contacts.end()), res.contacts.end());
  }

  rec.state_after = std::move(next);
  rec.pair_collisions = std::move(res.contacts);
  rec.collision_count = static_cast<int>(rec.pair_collisions.size());
  return rec;
}

Trajectory rollout_from(const Policy& policy, const BallState& initial, const WorldConfig& cfg) {
  cfg.validate();
  Trajectory traj;
  traj.steps.reserve(static_cast<std::size_t>(cfg.horizon));
  BallState state = initial;
  for (int t = 0; t < cfg.horizon; ++t) {
    StepRecord rec = step(state, policy(state, t), cfg);
    state = rec.state_after;
    traj.steps.push_back(std::move(rec));
  }
  return traj;
}

BallState episode_initial_state(const WorldConfig& cfg, std::uint64_t episode) {
  Rng rng = make_rng(cfg.rng_seed, streams::kInitialState, episode);
  return sample_initial_state(cfg, rng);
}

Trajectory rollout(const Policy& policy, const WorldConfig& cfg, std::uint64_t episode) {
  return rollout_from(policy, episode_initial_state(cfg, episode), cfg);
}

}  // namespace rearrange::world
