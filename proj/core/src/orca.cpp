#include "rearrange/orca.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "rearrange/error.hpp"

namespace rearrange::orca {

namespace {

constexpr double kEps = 1e-12;

// Boundary line of a half-plane in point/direction form; the feasible side is
// to the left of `dir`.
struct Line {
  Vec2 point;
  Vec2 dir;
};

Line to_line(const HalfPlane& h) { return {h.point, {h.normal.y, -h.normal.x}}; }

// Positive when v is on the infeasible side.
double violation(const Line& l, Vec2 v) { return det(l.dir, l.point - v); }

Vec2 unit(Vec2 v) {
  const double n = norm(v);
  return n > 0.0 ? v / n : Vec2{1.0, 0.0};
}

// Optimum on line `no` subject to the disc and lines [0, no).
bool lp1(const std::vector<Line>& lines, std::size_t no, double radius, Vec2 opt, bool direction_opt, Vec2& result) {
  const Line& l = lines[no];
  const double dp = dot(l.point, l.dir);
  const double disc = dp * dp + radius * radius - norm_sq(l.point);
  if (disc < 0.0) return false;
  const double sq = std::sqrt(disc);
  double t_left = -dp - sq;
  double t_right = -dp + sq;
  for (std::size_t i = 0; i < no; ++i) {
    const double denom = det(l.dir, lines[i].dir);
    const double numer = det(lines[i].dir, l.point - lines[i].point);
    if (std::abs(denom) <= kEps) {
      if (numer < 0.0) return false;
      continue;
    }
    const double t = numer / denom;
    if (denom >= 0.0) {
      t_right = std::min(t_right, t);
    } else {
      t_left = std::max(t_left, t);
    }
    if (t_left > t_right) return false;
  }
  if (direction_opt) {
    result = l.point + (dot(opt, l.dir) > 0.0 ? t_right : t_left) * l.dir;
  } else {
    const double t = std::clamp(dot(l.dir, opt - l.point), t_left, t_right);
    result = l.point + t * l.dir;
  }
  return true;
}

// Returns the first line index that could not be satisfied, or lines.size().
std::size_t lp2(const std::vector<Line>& lines, double radius, Vec2 opt, bool direction_opt, Vec2& result) {
  if (direction_opt) {
    result = radius * opt;
  } else if (norm_sq(opt) > radius * radius) {
    result = radius * unit(opt);
  } else {
    result = opt;
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (violation(lines[i], result) > 0.0) {
      const Vec2 saved = result;
      if (!lp1(lines, i, radius, opt, direction_opt, result)) {
        result = saved;
        return i;
      }
    }
  }
  return lines.size();
}

void lp3(const std::vector<Line>& lines, std::size_t hard, std::size_t begin, double radius, Vec2& result) {
  double distance = 0.0;
  for (std::size_t i = begin; i < lines.size(); ++i) {
    if (violation(lines[i], result) <= distance) continue;
    std::vector<Line> proj(lines.begin(), lines.begin() + static_cast<std::ptrdiff_t>(hard));
    for (std::size_t j = hard; j < i; ++j) {
      Line l;
      const double d = det(lines[i].dir, lines[j].dir);
      if (std::abs(d) <= kEps) {
        if (dot(lines[i].dir, lines[j].dir) > 0.0) continue;
        l.point = 0.5 * (lines[i].point + lines[j].point);
      } else {
        l.point = lines[i].point + (det(lines[j].dir, lines[i].point - lines[j].point) / d) * lines[i].dir;
      }
      l.dir = unit(lines[j].dir - lines[i].dir);
      proj.push_back(l);
    }
    const Vec2 saved = result;
    if (lp2(proj, radius, Vec2{-lines[i].dir.y, lines[i].dir.x}, true, result) < proj.size()) result = saved;
    distance = violation(lines[i], result);
  }
}

std::vector<Line> to_lines(const std::vector<HalfPlane>& planes) {
  std::vector<Line> lines;
  lines.reserve(planes.size());
  for (const HalfPlane& h : planes) lines.push_back(to_line(h));
  return lines;
}

}  // namespace

OrcaParams OrcaParams::from_world(const world::WorldConfig& cfg) {
  OrcaParams p;
  p.dt = cfg.dt;
  p.v_max = cfg.v_max;
  return p;
}

void OrcaParams::validate() const {
  if (!(dt > 0.0)) throw ValidationError("orca dt must be positive");
  if (!(tau >= dt)) throw ValidationError("orca tau must be at least dt");
  if (max_neighbors < 0) throw ValidationError("max_neighbors must be non-negative");
  if (!(v_max > 0.0)) throw ValidationError("orca v_max must be positive");
  if (!(reciprocity > 0.0 && reciprocity <= 1.0)) throw ValidationError("reciprocity must lie in (0, 1]");
}

double HalfPlane::penetration(Vec2 v) const { return std::max(0.0, -dot(v - point, normal)); }

std::vector<HalfPlane> wall_constraints(Vec2 position, const OrcaParams& params, const world::WorldConfig& world) {
  std::vector<HalfPlane> out;
  const double h = world.half_extent;
  const double r = world.ball_radius;
  // (distance to wall, outward unit normal of that wall)
  const std::pair<double, Vec2> walls[4] = {
      {h - position.x, {1.0, 0.0}},
      {h + position.x, {-1.0, 0.0}},
      {h - position.y, {0.0, 1.0}},
      {h + position.y, {0.0, -1.0}},
  };
  for (const auto& [d, outward] : walls) {
    const double gap = std::max(0.0, d - r);
    if (gap < params.tau * params.v_max) {
      // v . outward <= gap / dt
      out.push_back(HalfPlane{(gap / params.dt) * outward, -outward});
    }
  }
  return out;
}

std::vector<HalfPlane> neighbor_constraints(int self, const BallState& state, const Field& velocities,
                                            const OrcaParams& params, const world::WorldConfig& world) {
  const std::size_t n = state.size();
  if (self < 0 || static_cast<std::size_t>(self) >= n) throw ValidationError("orca: ball index out of range");
  if (velocities.size() != n) throw ValidationError("orca: one velocity per ball required");
  const std::size_t me = static_cast<std::size_t>(self);
  const double combined = 2.0 * world.ball_radius;
  const double reach = 2.0 * params.v_max * params.tau + combined;

  std::vector<std::pair<double, std::size_t>> near;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == me) continue;
    const double d2 = norm_sq(state.positions[j] - state.positions[me]);
    if (d2 <= reach * reach) near.emplace_back(d2, j);
  }
  std::sort(near.begin(), near.end());
  if (near.size() > static_cast<std::size_t>(params.max_neighbors)) near.resize(static_cast<std::size_t>(params.max_neighbors));

  std::vector<HalfPlane> out;
  const double inv_tau = 1.0 / params.tau;
  const double rsq = combined * combined;
  const Vec2 v_self = velocities[me];
  for (const auto& [dist_sq, j] : near) {
    const Vec2 rel_pos = state.positions[j] - state.positions[me];
    const Vec2 rel_vel = v_self - velocities[j];
    Vec2 dir;
    Vec2 u;
    if (dist_sq > rsq) {
      const Vec2 w = rel_vel - inv_tau * rel_pos;
      const double w_len_sq = norm_sq(w);
      const double dp1 = dot(w, rel_pos);
      if (dp1 < 0.0 && dp1 * dp1 > rsq * w_len_sq) {
        // Closest exit is through the cut-off disc.
        const double w_len = std::sqrt(w_len_sq);
        const Vec2 uw = w / w_len;
        dir = {uw.y, -uw.x};
        u = (combined * inv_tau - w_len) * uw;
      } else {
        // Closest exit is through one of the cone legs.
        const double leg = std::sqrt(dist_sq - rsq);
        if (det(rel_pos, w) > 0.0) {
          dir = Vec2{rel_pos.x * leg - rel_pos.y * combined, rel_pos.x * combined + rel_pos.y * leg} / dist_sq;
        } else {
          dir = -(Vec2{rel_pos.x * leg + rel_pos.y * combined, -rel_pos.x * combined + rel_pos.y * leg} / dist_sq);
        }
        u = dot(rel_vel, dir) * dir - rel_vel;
      }
    } else {
      // Already touching: resolve within one step.
      const double inv_dt = 1.0 / params.dt;
      const Vec2 w = rel_vel - inv_dt * rel_pos;
      const double w_len = norm(w);
      Vec2 uw;
      if (w_len > kEps) {
        uw = w / w_len;
      } else {
        // Coincident and at rest: the lower index backs off along -x.
        uw = me < j ? Vec2{-1.0, 0.0} : Vec2{1.0, 0.0};
      }
      dir = {uw.y, -uw.x};
      u = (combined * inv_dt - w_len) * uw;
    }
    // Feasible side is left of dir, i.e. normal = (-dir.y, dir.x).
    out.push_back(HalfPlane{v_self + params.reciprocity * u, Vec2{-dir.y, dir.x}});
  }
  return out;
}

ConstraintSet orca_constraints(int self, const BallState& state, const Field& velocities, const OrcaParams& params,
                               const world::WorldConfig& world) {
  params.validate();
  ConstraintSet set;
  set.planes = wall_constraints(state.positions.at(static_cast<std::size_t>(self)), params, world);
  set.hard_count = set.planes.size();
  auto nb = neighbor_constraints(self, state, velocities, params, world);
  set.planes.insert(set.planes.end(), nb.begin(), nb.end());
  return set;
}

LpResult solve_lp2(const std::vector<HalfPlane>& constraints, Vec2 v_pref, double v_max) {
  const std::vector<Line> lines = to_lines(constraints);
  LpResult r;
  r.fail_index = lp2(lines, v_max, v_pref, false, r.velocity);
  r.feasible = r.fail_index == lines.size();
  return r;
}

Vec2 solve_lp3(const std::vector<HalfPlane>& constraints, double v_max, std::size_t hard_count, Vec2 v_pref) {
  if (hard_count > constraints.size()) throw ValidationError("solve_lp3: hard_count exceeds constraint count");
  const std::vector<Line> lines = to_lines(constraints);
  Vec2 v;
  const std::size_t fail = lp2(lines, v_max, v_pref, false, v);
  if (fail < lines.size()) lp3(lines, hard_count, fail, v_max, v);
  return v;
}

Vec2 safe_velocity(const ConstraintSet& constraints, Vec2 v_pref, double v_max) {
  return solve_lp3(constraints.planes, v_max, constraints.hard_count, v_pref);
}

}  // namespace rearrange::orca
