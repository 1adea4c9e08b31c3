#include "rearrange/targets.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include "rearrange/error.hpp"

namespace rearrange::targets {
namespace {

constexpr double kPi = std::numbers::pi;

double population_std(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(xs.size()));
}

Vec2 centroid(const std::vector<Vec2>& pts) {
  Vec2 c;
  for (const Vec2& p : pts) c += p;
  return pts.empty() ? c : c / static_cast<double>(pts.size());
}

// Gaps between consecutive sorted polar angles plus the wrap-around gap.
std::vector<double> angular_gaps(std::vector<double> angles) {
  std::vector<double> gaps;
  if (angles.size() < 2) return gaps;
  std::sort(angles.begin(), angles.end());
  gaps.reserve(angles.size());
  for (std::size_t i = 1; i < angles.size(); ++i) gaps.push_back(angles[i] - angles[i - 1]);
  gaps.push_back(2.0 * kPi - (angles.back() - angles.front()));
  return gaps;
}

double log_sum_exp(const std::vector<double>& xs) {
  const double m = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

std::vector<double> softmax(const std::vector<double>& xs) {
  const double lse = log_sum_exp(xs);
  std::vector<double> p(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) p[i] = std::exp(xs[i] - lse);
  return p;
}

void require_mixture(const TaskSpec& task) {
  if (!task.has_mixture()) {
    throw ValidationError("task '" + std::string(to_string(task.kind)) + "' has no Gaussian-mixture density");
  }
}

struct Circle {
  Vec2 center;
  double radius = 0.0;
  double phase = 0.0;
};

Circle sample_circle(const TaskSpec& task, Rng& rng) {
  const auto& w = task.world;
  const int k = w.num_balls();
  const double r_min = min_circle_radius(k, w.ball_radius);
  const double center_span = w.half_extent - w.ball_radius - r_min;
  if (center_span < 0.0) throw ValidationError("no legal circle: " + std::to_string(k) + " balls do not fit");

  Circle c;
  c.center = {uniform(rng, -center_span, center_span), uniform(rng, -center_span, center_span)};
  const double wall_dist = w.half_extent - std::max(std::abs(c.center.x), std::abs(c.center.y));
  const double r_max = wall_dist - w.ball_radius;
  c.radius = r_max > r_min ? uniform(rng, r_min, r_max) : r_min;
  c.phase = uniform(rng, 0.0, 2.0 * kPi);
  return c;
}

Vec2 circle_slot(const Circle& c, int slot, int k) {
  const double a = c.phase + 2.0 * kPi * slot / k;
  return c.center + c.radius * Vec2{std::cos(a), std::sin(a)};
}

BallState sample_circling(const TaskSpec& task, Rng& rng) {
  const int k = task.world.num_balls();
  const Circle c = sample_circle(task, rng);
  BallState s;
  s.categories = world::canonical_categories(task.world);
  s.positions.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) s.positions[static_cast<std::size_t>(i)] = circle_slot(c, i, k);
  return s;
}

BallState sample_circling_clustering(const TaskSpec& task, Rng& rng) {
  const int k = task.world.num_balls();
  const int per = task.world.n_per_color;
  const Circle c = sample_circle(task, rng);
  // Colour order around the circle: R-G-B or R-B-G.
  const bool swap = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
  const std::array<int, 3> order = swap ? std::array<int, 3>{0, 2, 1} : std::array<int, 3>{0, 1, 2};
  const int start = std::uniform_int_distribution<int>(0, k - 1)(rng);

  BallState s;
  s.categories = world::canonical_categories(task.world);
  s.positions.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const int color = s.categories[static_cast<std::size_t>(i)];
    const int arc = static_cast<int>(std::find(order.begin(), order.end(), color) - order.begin());
    const int slot = (start + arc * per + i % per) % k;
    s.positions[static_cast<std::size_t>(i)] = circle_slot(c, slot, k);
  }
  return s;
}

BallState sample_mixture(const TaskSpec& task, Rng& rng) {
  const GaussianMixture gmm = mixture_for(task);
  const auto mode = static_cast<std::size_t>(
      std::uniform_int_distribution<int>(0, static_cast<int>(gmm.num_modes()) - 1)(rng));
  BallState s;
  s.categories = world::canonical_categories(task.world);
  s.positions.resize(s.categories.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Vec2 mu = gmm.center(mode, s.categories[i]);
    s.positions[i] = {mu.x + task.gmm_std * standard_normal(rng), mu.y + task.gmm_std * standard_normal(rng)};
  }
  world::clamp_to_walls(s.positions, task.world);
  world::resolve_overlaps(s.positions, task.world, 100 * task.world.resolution_passes);
  return s;
}

}  // namespace

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Circling: return "circling";
    case TaskKind::Clustering: return "clustering";
    case TaskKind::CirclingClustering: return "circling_clustering";
    case TaskKind::SixModeClustering: return "six_mode_clustering";
  }
  return "unknown";
}

TaskKind parse_task_kind(std::string_view name) {
  std::string key;
  for (char ch : name) {
    if (ch == '-' || ch == '_' || ch == '+') continue;
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  if (key == "circling") return TaskKind::Circling;
  if (key == "clustering") return TaskKind::Clustering;
  if (key == "circlingclustering") return TaskKind::CirclingClustering;
  if (key == "sixmodeclustering" || key == "sixmode") return TaskKind::SixModeClustering;
  throw ValidationError("invalid task name '" + std::string(name) + "'");
}

void TaskSpec::validate() const {
  world.validate();
  if (kind != TaskKind::Circling && world.n_colors != 3) {
    throw ValidationError("task '" + std::string(to_string(kind)) + "' requires exactly 3 colours");
  }
  if (has_mixture()) {
    if (!(gmm_std > 0.0)) throw ValidationError("gmm_std must be positive");
    // One standard deviation around every centre must lie inside the admissible box.
    if (!(gmm_center_radius + gmm_std < world.bound())) {
      throw ValidationError("clusters do not fit: gmm_center_radius + gmm_std >= half_extent - ball_radius");
    }
  }
}

GaussianMixture::GaussianMixture(std::vector<std::vector<Vec2>> centers, double stddev)
    : centers_(std::move(centers)), stddev_(stddev) {
  if (centers_.empty()) throw ValidationError("mixture needs at least one mode");
  if (!(stddev_ > 0.0)) throw ValidationError("mixture stddev must be positive");
  for (const auto& mode : centers_) {
    if (mode.size() != centers_.front().size() || mode.empty()) {
      throw ValidationError("every mode must place every colour");
    }
  }
}

const Vec2& GaussianMixture::center(std::size_t mode, int color) const {
  const auto& m = centers_.at(mode);
  if (color < 0 || static_cast<std::size_t>(color) >= m.size()) {
    throw ValidationError("category " + std::to_string(color) + " outside the mixture's colours");
  }
  return m[static_cast<std::size_t>(color)];
}

std::vector<double> GaussianMixture::mode_log_joint(const BallState& state) const {
  const double var = stddev_ * stddev_;
  const double log_norm = std::log(2.0 * kPi * var);
  std::vector<double> out(centers_.size(), 0.0);
  for (std::size_t k = 0; k < centers_.size(); ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < state.size(); ++i) {
      const Vec2 d = state.positions[i] - center(k, state.categories[i]);
      acc += -norm_sq(d) / (2.0 * var) - log_norm;
    }
    out[k] = acc;
  }
  return out;
}

double GaussianMixture::log_density(const BallState& state) const {
  const double log_w = -std::log(static_cast<double>(centers_.size()));
  std::vector<double> terms = mode_log_joint(state);
  for (double& t : terms) t += log_w;
  return log_sum_exp(terms);
}

Field GaussianMixture::score(const BallState& state) const {
  const std::vector<double> w = softmax(mode_log_joint(state));
  const double inv_var = 1.0 / (stddev_ * stddev_);
  Field g(state.size());
  for (std::size_t k = 0; k < centers_.size(); ++k) {
    for (std::size_t i = 0; i < state.size(); ++i) {
      g[i] -= (w[k] * inv_var) * (state.positions[i] - center(k, state.categories[i]));
    }
  }
  return g;
}

ModePosterior GaussianMixture::posterior(const BallState& state) const {
  ModePosterior post;
  post.probs = softmax(mode_log_joint(state));
  for (double p : post.probs)
    if (p > 0.0) post.entropy -= p * std::log(p);
  return post;
}

GaussianMixture mixture_for(const TaskSpec& task) {
  require_mixture(task);
  const double r = task.gmm_center_radius;
  if (task.kind == TaskKind::Clustering) {
    // Colour c sits at angle c*pi/3 measured as (r sin a, r cos a); the second
    // mode swaps the green and blue centres.
    auto at = [r](int c) { return Vec2{r * std::sin(c * kPi / 3.0), r * std::cos(c * kPi / 3.0)}; };
    return GaussianMixture({{at(0), at(1), at(2)}, {at(0), at(2), at(1)}}, task.gmm_std);
  }
  // Six-mode: every assignment of the three colours to the three locations
  // (r cos a, r sin a) for a = 2pi/3, 4pi/3, 2pi.
  const std::array<Vec2, 3> loc = {Vec2{r * std::cos(2.0 * kPi / 3.0), r * std::sin(2.0 * kPi / 3.0)},
                                   Vec2{r * std::cos(4.0 * kPi / 3.0), r * std::sin(4.0 * kPi / 3.0)},
                                   Vec2{r * std::cos(2.0 * kPi), r * std::sin(2.0 * kPi)}};
  // Location index of (R, G, B) for modes 1..6.
  constexpr std::array<std::array<int, 3>, 6> table = {{
      {0, 1, 2},
      {0, 2, 1},
      {2, 1, 0},
      {1, 2, 0},
      {2, 0, 1},
      {1, 0, 2},
  }};
  std::vector<std::vector<Vec2>> centers;
  for (const auto& row : table) centers.push_back({loc[row[0]], loc[row[1]], loc[row[2]]});
  return GaussianMixture(std::move(centers), task.gmm_std);
}

double min_circle_radius(int k, double ball_radius) {
  if (k <= 1) return 0.0;
  return ball_radius / std::sin(kPi / k);
}

BallState sample_target(const TaskSpec& task, Rng& rng) {
  task.validate();
  switch (task.kind) {
    case TaskKind::Circling: return sample_circling(task, rng);
    case TaskKind::CirclingClustering: return sample_circling_clustering(task, rng);
    case TaskKind::Clustering:
    case TaskKind::SixModeClustering: return sample_mixture(task, rng);
  }
  throw ValidationError("unknown task kind");
}

double gmm_log_density(const BallState& state, const TaskSpec& task) {
  return mixture_for(task).log_density(state);
}

Field gmm_score(const BallState& state, const TaskSpec& task) { return mixture_for(task).score(state); }

ModePosterior gmm_posterior(const BallState& state, const TaskSpec& task) {
  if (task.kind != TaskKind::SixModeClustering) {
    throw ValidationError("mode posterior is defined for the six-mode clustering task only");
  }
  return mixture_for(task).posterior(state);
}

CircleStats circle_stats(const BallState& state) {
  const Vec2 c = centroid(state.positions);
  std::vector<double> dists;
  std::vector<double> angles;
  for (const Vec2& p : state.positions) {
    const Vec2 d = p - c;
    dists.push_back(norm(d));
    angles.push_back(std::atan2(d.y, d.x));
  }
  return {population_std(angular_gaps(std::move(angles))), population_std(dists)};
}

double color_angle_gap_std(const BallState& state, int color) {
  const Vec2 c = centroid(state.positions);
  std::vector<double> angles;
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (state.categories[i] != color) continue;
    const Vec2 d = state.positions[i] - c;
    angles.push_back(std::atan2(d.y, d.x));
  }
  // The largest gap is the stretch held by the other colours; only the gaps
  // between neighbouring balls of this colour count.
  std::vector<double> gaps = angular_gaps(std::move(angles));
  if (!gaps.empty()) gaps.erase(std::max_element(gaps.begin(), gaps.end()));
  return population_std(gaps);
}

double color_centroid_spread(const BallState& state, int n_colors) {
  std::vector<Vec2> centers;
  for (int color = 0; color < n_colors; ++color) {
    std::vector<Vec2> pts;
    for (std::size_t i = 0; i < state.size(); ++i)
      if (state.categories[i] == color) pts.push_back(state.positions[i]);
    if (!pts.empty()) centers.push_back(centroid(pts));
  }
  const Vec2 joint = centroid(centers);
  std::vector<double> dists;
  for (const Vec2& c : centers) dists.push_back(norm(c - joint));
  return population_std(dists);
}

double pseudo_likelihood(const BallState& state, const TaskSpec& task) {
  if (state.size() < 3) throw ValidationError("pseudo-likelihood needs at least 3 balls");
  switch (task.kind) {
    case TaskKind::Circling: {
      const CircleStats cs = circle_stats(state);
      return std::exp(-(cs.sigma_theta + cs.sigma_r));
    }
    case TaskKind::CirclingClustering: {
      const CircleStats cs = circle_stats(state);
      double color_gaps = 0.0;
      for (int color = 0; color < task.world.n_colors; ++color) color_gaps += color_angle_gap_std(state, color);
      const double spread = color_centroid_spread(state, task.world.n_colors);
      return std::exp(-(cs.sigma_theta + cs.sigma_r)) * std::exp(-color_gaps + spread);
    }
    case TaskKind::Clustering:
    case TaskKind::SixModeClustering: return std::exp(gmm_log_density(state, task));
  }
  throw ValidationError("unknown task kind");
}

TargetDataset make_dataset(const TaskSpec& task, int n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("dataset size must be positive");
  task.validate();
  TargetDataset ds;
  ds.task = task;
  ds.examples.reserve(static_cast<std::size_t>(n));
  Rng rng = make_rng(seed, streams::kTargets);
  for (int i = 0; i < n; ++i) ds.examples.push_back(sample_target(task, rng));
  return ds;
}

}  // namespace rearrange::targets
