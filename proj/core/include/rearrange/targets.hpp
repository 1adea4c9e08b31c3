#pragma once

// Target distributions for the ball tasks: samplers, pseudo-likelihoods and
// the analytic Gaussian-mixture density, score and mode posterior.

#include <string_view>
#include <vector>

#include "rearrange/rng.hpp"
#include "rearrange/vec2.hpp"
#include "rearrange/world.hpp"

namespace rearrange::targets {

using world::BallState;

enum class TaskKind { Circling, Clustering, CirclingClustering, SixModeClustering };

std::string_view to_string(TaskKind kind);
/// Accepts snake_case, kebab-case or the concatenated form ("circlingclustering").
TaskKind parse_task_kind(std::string_view name);

struct TaskSpec {
  TaskKind kind = TaskKind::Clustering;
  world::WorldConfig world;
  double gmm_std = 0.05;
  double gmm_center_radius = 0.18;

  void validate() const;
  bool has_mixture() const { return kind == TaskKind::Clustering || kind == TaskKind::SixModeClustering; }

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

struct TargetDataset {
  TaskSpec task;
  std::vector<BallState> examples;
};

struct ModePosterior {
  std::vector<double> probs;
  /// Nats, in [0, log(num_modes)].
  double entropy = 0.0;
};

/// Uniform-weight mixture of isotropic products: mode k places every ball of
/// colour c around centers[k][c] with standard deviation `stddev`.
class GaussianMixture {
 public:
  GaussianMixture(std::vector<std::vector<Vec2>> centers, double stddev);

  std::size_t num_modes() const { return centers_.size(); }
  const Vec2& center(std::size_t mode, int color) const;
  double stddev() const { return stddev_; }

  /// log prod_i N(center(k, c_i), stddev^2 I)(s_i) for every mode k.
  std::vector<double> mode_log_joint(const BallState& state) const;
  double log_density(const BallState& state) const;
  /// Posterior-weighted sum of the per-mode Gaussian scores.
  Field score(const BallState& state) const;
  ModePosterior posterior(const BallState& state) const;

 private:
  std::vector<std::vector<Vec2>> centers_;
  double stddev_;
};

/// Mode/colour centre table for the Clustering (2 modes) and six-mode tasks.
GaussianMixture mixture_for(const TaskSpec& task);

/// Smallest circle radius that fits k balls of radius r without overlap.
double min_circle_radius(int k, double ball_radius);

BallState sample_target(const TaskSpec& task, Rng& rng);

double gmm_log_density(const BallState& state, const TaskSpec& task);
Field gmm_score(const BallState& state, const TaskSpec& task);
ModePosterior gmm_posterior(const BallState& state, const TaskSpec& task);

struct CircleStats {
  /// Population std of sorted adjacent polar-angle gaps (wrap gap included).
  double sigma_theta = 0.0;
  /// Population std of distances to the centroid.
  double sigma_r = 0.0;
};

/// Circle statistics about the all-ball centroid.
CircleStats circle_stats(const BallState& state);
/// Std of the angular gaps between neighbouring balls of one colour about the
/// all-ball centroid. The largest gap (the arc held by other colours) is
/// left out, so a contiguous evenly spaced arc scores 0.
double color_angle_gap_std(const BallState& state, int color);
/// Std of the distances of the per-colour centroids from their joint mean.
double color_centroid_spread(const BallState& state, int n_colors);

/// Task-specific closed-form proxy for target similarity. Requires K >= 3.
double pseudo_likelihood(const BallState& state, const TaskSpec& task);

/// n examples drawn with a generator derived from (seed, targets stream).
TargetDataset make_dataset(const TaskSpec& task, int n, std::uint64_t seed);

}  // namespace rearrange::targets
