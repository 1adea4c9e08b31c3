#pragma once

// Kinematic 2D ball world: velocity integration, projection-based overlap
// resolution, wall clamping and per-step collision accounting.

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "rearrange/rng.hpp"
#include "rearrange/vec2.hpp"

namespace rearrange::world {

/// Distance slack below 2r that still counts as touching (metres).
inline constexpr double kOverlapTol = 1e-6;

struct WorldConfig {
  double half_extent = 0.3;
  double ball_radius = 0.025;
  int n_colors = 3;
  int n_per_color = 7;
  double v_max = 1.0;
  double dt = 0.02;
  int horizon = 100;
  int resolution_passes = 10;
  std::uint64_t rng_seed = 0;

  int num_balls() const { return n_colors * n_per_color; }
  /// Largest admissible |x| or |y| for a ball centre.
  double bound() const { return half_extent - ball_radius; }
  /// Throws ValidationError when an invariant is violated.
  void validate() const;

  friend bool operator==(const WorldConfig&, const WorldConfig&) = default;
};

struct BallState {
  std::vector<Vec2> positions;
  std::vector<int> categories;

  std::size_t size() const { return positions.size(); }
  friend bool operator==(const BallState&, const BallState&) = default;
};

struct Action {
  std::vector<Vec2> velocities;

  friend bool operator==(const Action&, const Action&) = default;
};

struct StepRecord {
  BallState state_before;
  Action action;
  BallState state_after;
  int collision_count = 0;
  /// Unordered pairs stored as (i, j) with i < j, sorted.
  std::vector<std::pair<int, int>> pair_collisions;
  std::optional<double> reward_raw;
  std::optional<double> reward_norm;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct Trajectory {
  std::vector<StepRecord> steps;

  bool empty() const { return steps.empty(); }
  const BallState& initial() const { return steps.front().state_before; }
  const BallState& terminal() const { return steps.back().state_after; }
  /// States s_0..s_T (T + 1 entries).
  std::vector<BallState> states() const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// A control law: (state, step index) -> velocities. Stateful policies (e.g.
/// the one-ball planner) must be instantiated once per episode.
using Policy = std::function<Action(const BallState&, int)>;

/// Category of ball i under the canonical ordering (n_per_color per colour).
std::vector<int> canonical_categories(const WorldConfig& cfg);

/// Per-ball speed clip to v_max.
Action clip_speeds(Action action, double v_max);

struct ResolveResult {
  std::vector<std::pair<int, int>> contacts;
  int passes = 0;
  bool converged = false;
};

/// Symmetric pairwise projection in (i, j) lexical order followed by a wall
/// clamp, repeated until no pair overlaps or `max_passes` is exhausted.
/// Pairs closer than 2r - kOverlapTol at any pass are reported as contacts.
ResolveResult resolve_overlaps(std::vector<Vec2>& positions, const WorldConfig& cfg, int max_passes);

void clamp_to_walls(std::vector<Vec2>& positions, const WorldConfig& cfg);

double min_pair_distance(const BallState& state);
bool inside_walls(const BallState& state, const WorldConfig& cfg);
/// Confinement and non-penetration (within kOverlapTol).
bool is_legal(const BallState& state, const WorldConfig& cfg);

/// Uniform positions in the admissible box, de-overlapped. Throws
/// ValidationError("packing infeasible") when the discs cannot fit.
BallState sample_initial_state(const WorldConfig& cfg, Rng& rng);

/// Integrates clipped velocities, clamps to the walls and resolves overlaps
/// with cfg.resolution_passes passes, continuing (up to 100x that budget)
/// only when overlaps remain.
StepRecord step(const BallState& state, const Action& action, const WorldConfig& cfg);

/// Runs cfg.horizon steps from `initial`.
Trajectory rollout_from(const Policy& policy, const BallState& initial, const WorldConfig& cfg);

/// Runs cfg.horizon steps from the initial state drawn for (cfg.rng_seed,
/// episode). Every policy sees the same initial state for a given pair.
Trajectory rollout(const Policy& policy, const WorldConfig& cfg, std::uint64_t episode);

/// Initial state for (cfg.rng_seed, episode), shared across policies.
BallState episode_initial_state(const WorldConfig& cfg, std::uint64_t episode);

}  // namespace rearrange::world
