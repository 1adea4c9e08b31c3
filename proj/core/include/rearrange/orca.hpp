#pragma once

// Reciprocal collision avoidance for the ball world: half-plane construction
// from truncated velocity obstacles plus box walls, and the incremental 2D
// linear programs that pick a velocity.

#include <cstddef>
#include <vector>

#include "rearrange/vec2.hpp"
#include "rearrange/world.hpp"

namespace rearrange::orca {

using world::BallState;

struct OrcaParams {
  double tau = 0.1;
  double dt = 0.02;
  int max_neighbors = 2;
  double v_max = 1.0;
  /// Share of the avoidance effort taken by this ball.
  double reciprocity = 0.5;

  static OrcaParams from_world(const world::WorldConfig& cfg);
  void validate() const;
};

/// Feasible side: (v - point) . normal >= 0.
struct HalfPlane {
  Vec2 point;
  Vec2 normal;

  bool contains(Vec2 v, double tol = 0.0) const { return dot(v - point, normal) >= -tol; }
  /// Signed distance into the infeasible side (0 when satisfied).
  double penetration(Vec2 v) const;
};

struct ConstraintSet {
  std::vector<HalfPlane> planes;
  /// planes[0, hard_count) are walls; the fallback never relaxes them.
  std::size_t hard_count = 0;
};

/// Wall half-planes for a ball at `position` (empty away from the walls).
std::vector<HalfPlane> wall_constraints(Vec2 position, const OrcaParams& params, const world::WorldConfig& world);

/// Constraints from the max_neighbors nearest balls within reach
/// (2 v_max tau + 2r), ties broken by index.
std::vector<HalfPlane> neighbor_constraints(int self, const BallState& state, const Field& velocities,
                                            const OrcaParams& params, const world::WorldConfig& world);

/// Walls first, then neighbours.
ConstraintSet orca_constraints(int self, const BallState& state, const Field& velocities, const OrcaParams& params,
                               const world::WorldConfig& world);

struct LpResult {
  Vec2 velocity;
  bool feasible = true;
  /// Index of the first constraint that could not be satisfied
  /// (== constraints.size() when feasible).
  std::size_t fail_index = 0;
};

/// Closest point to v_pref inside the speed disc and every half-plane.
LpResult solve_lp2(const std::vector<HalfPlane>& constraints, Vec2 v_pref, double v_max);

/// Velocity in the speed disc minimising the largest penetration of the soft
/// constraints while keeping the first hard_count ones. Returns the solve_lp2
/// result unchanged when that is feasible.
Vec2 solve_lp3(const std::vector<HalfPlane>& constraints, double v_max, std::size_t hard_count = 0,
               Vec2 v_pref = {});

/// solve_lp2 with the solve_lp3 fallback.
Vec2 safe_velocity(const ConstraintSet& constraints, Vec2 v_pref, double v_max);

}  // namespace rearrange::orca
