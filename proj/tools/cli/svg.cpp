#include <cstdio>

#include "cli/cli.hpp"
#include "rearrange/error.hpp"

namespace rearrange::cli {

namespace {

constexpr const char* kPalette[] = {"#d62728", "#2ca02c", "#1f77b4"};
constexpr double kPixels = 400.0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

std::string render_svg(const world::BallState& state, const world::WorldConfig& cfg) {
  const double h = cfg.half_extent;
  const double scale = kPixels / (2.0 * h);
  const std::string size = fmt(kPixels);
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + size + "\" height=\"" + size +
                    "\" viewBox=\"0 0 " + size + " " + size + "\">\n";
  out += "<rect x=\"0.000\" y=\"0.000\" width=\"" + size + "\" height=\"" + size +
         "\" fill=\"#ffffff\" stroke=\"#000000\" stroke-width=\"2\"/>\n";
  for (std::size_t i = 0; i < state.size(); ++i) {
    const int c = state.categories[i];
    const char* color = (c >= 0 && c < 3) ? kPalette[c] : "#7f7f7f";
    const double cx = (state.positions[i].x + h) * scale;
    const double cy = (h - state.positions[i].y) * scale;
    out += "<circle cx=\"" + fmt(cx) + "\" cy=\"" + fmt(cy) + "\" r=\"" + fmt(cfg.ball_radius * scale) +
           "\" fill=\"" + color + "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

std::vector<int> frame_steps(int horizon, int every) {
  if (every < 1) throw ValidationError("--every must be positive");
  std::vector<int> steps;
  for (int k = 0; k <= horizon; k += every) steps.push_back(k);
  if (steps.back() != horizon) steps.push_back(horizon);
  return steps;
}

}  // namespace rearrange::cli
