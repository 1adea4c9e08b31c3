#pragma once

// Brute-force grid oracles for the 2D velocity programs.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "rearrange/orca.hpp"
#include "rearrange/rng.hpp"

namespace rearrange::oracle {

struct GridResult {
  std::optional<Vec2> best;
  double objective = std::numeric_limits<double>::infinity();
};

template <typename Objective, typename Admissible>
GridResult grid_search(double v_max, int cells, Objective objective, Admissible admissible) {
  GridResult r;
  const double pitch = v_max / cells;
  for (int i = -cells; i <= cells; ++i) {
    for (int j = -cells; j <= cells; ++j) {
      const Vec2 v{i * pitch, j * pitch};
      if (norm_sq(v) > v_max * v_max || !admissible(v)) continue;
      const double o = objective(v);
      if (o < r.objective) {
        r.objective = o;
        r.best = v;
      }
    }
  }
  return r;
}

/// Closest admissible grid point to v_pref.
inline GridResult grid_lp2(const std::vector<orca::HalfPlane>& planes, Vec2 v_pref, double v_max, int cells = 500) {
  return grid_search(
      v_max, cells, [v_pref](Vec2 v) { return norm_sq(v - v_pref); },
      [&planes](Vec2 v) {
        return std::all_of(planes.begin(), planes.end(), [v](const orca::HalfPlane& h) { return h.contains(v); });
      });
}

/// Exact closest feasible point by enumerating every candidate the optimum
/// can sit on: v_pref itself, its projections onto each line and the circle,
/// line-circle and line-line intersections.
inline std::optional<Vec2> exact_lp2(const std::vector<orca::HalfPlane>& planes, Vec2 v_pref, double v_max) {
  std::vector<Vec2> cand = {v_pref};
  if (norm(v_pref) > 0.0) cand.push_back(v_max * v_pref / norm(v_pref));
  for (std::size_t i = 0; i < planes.size(); ++i) {
    const auto& h = planes[i];
    const Vec2 dir{h.normal.y, -h.normal.x};
    cand.push_back(h.point + dot(v_pref - h.point, dir) * dir);
    const double b = dot(h.point, dir);
    const double disc = b * b - (norm_sq(h.point) - v_max * v_max);
    if (disc >= 0.0) {
      cand.push_back(h.point + (-b + std::sqrt(disc)) * dir);
      cand.push_back(h.point + (-b - std::sqrt(disc)) * dir);
    }
    for (std::size_t j = i + 1; j < planes.size(); ++j) {
      const auto& g = planes[j];
      const double d = det(h.normal, g.normal);
      if (std::abs(d) < 1e-14) continue;
      const double ch = dot(h.normal, h.point), cg = dot(g.normal, g.point);
      cand.push_back({(ch * g.normal.y - cg * h.normal.y) / d, (h.normal.x * cg - g.normal.x * ch) / d});
    }
  }
  std::optional<Vec2> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (const Vec2& v : cand) {
    if (norm(v) > v_max * (1 + 1e-12)) continue;
    bool ok = true;
    for (const auto& h : planes) ok = ok && h.contains(v, 1e-12);
    if (ok && norm_sq(v - v_pref) < best_d) {
      best_d = norm_sq(v - v_pref);
      best = v;
    }
  }
  return best;
}

inline double max_penetration(const std::vector<orca::HalfPlane>& planes, std::size_t from, Vec2 v) {
  double worst = 0.0;
  for (std::size_t i = from; i < planes.size(); ++i) worst = std::max(worst, planes[i].penetration(v));
  return worst;
}

/// Smallest largest soft-constraint penetration over the grid.
inline GridResult grid_minimax(const std::vector<orca::HalfPlane>& planes, std::size_t hard, double v_max,
                               int cells = 500) {
  return grid_search(
      v_max, cells, [&](Vec2 v) { return max_penetration(planes, hard, v); },
      [&](Vec2 v) {
        for (std::size_t i = 0; i < hard; ++i) {
          if (!planes[i].contains(v)) return false;
        }
        return true;
      });
}

inline orca::HalfPlane random_plane(Rng& rng, double v_max) {
  const double a = uniform(rng, 0.0, 2.0 * 3.141592653589793);
  const double r = v_max * std::sqrt(uniform(rng, 0.0, 1.0));
  const double b = uniform(rng, 0.0, 2.0 * 3.141592653589793);
  return {{r * std::cos(a), r * std::sin(a)}, {std::cos(b), std::sin(b)}};
}

}  // namespace rearrange::oracle
