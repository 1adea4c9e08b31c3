#pragma once

// Command-line front end. Every command writes its outputs plus a manifest
// recording the resolved configuration and SHA-256 hashes of its inputs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rearrange/targets.hpp"
#include "rearrange/world.hpp"

namespace rearrange::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

/// Flags shared by commands that need a task description.
struct TaskFlags {
  std::string task = "clustering";
  int n_per_color = 7;
  int horizon = 100;
  double v_max = 1.0;

  targets::TaskSpec spec() const;
};

struct SampleTargetsOptions {
  TaskFlags task;
  int n = 10000;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  double perturb_std = 0.0;
};

struct TrainScoreOptions {
  std::filesystem::path data;
  int steps = 20000;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  int batch = 64;
  double lr = 2e-4;
  int hidden = 64;
  bool resume = false;
  bool quiet = false;
};

struct RolloutOptions {
  std::string policy = "orca";
  std::optional<std::filesystem::path> model;
  bool analytic = false;
  TaskFlags task;
  int episodes = 100;
  int seeds = 5;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  double t0 = 0.1;
  int switch_period = 20;
};

struct EvalOptions {
  std::filesystem::path traj_dir;
  std::filesystem::path gt;
  std::filesystem::path oracle;
  std::filesystem::path report;
};

struct RenderOptions {
  std::filesystem::path traj;
  int every = 10;
  std::filesystem::path out_dir;
};

// Each command returns the manifest it wrote.
nlohmann::json sample_targets(const SampleTargetsOptions& o, const nlohmann::json& config);
nlohmann::json train_score(const TrainScoreOptions& o, const nlohmann::json& config);
nlohmann::json rollout(const RolloutOptions& o, const nlohmann::json& config);
nlohmann::json evaluate(const EvalOptions& o, const nlohmann::json& config);
nlohmann::json render(const RenderOptions& o, const nlohmann::json& config);

/// SVG of one state: box outline and one disc per ball.
std::string render_svg(const world::BallState& state, const world::WorldConfig& cfg);
/// Steps 0, every, 2*every, ... plus the last step T.
std::vector<int> frame_steps(int horizon, int every);

std::string sha256_file(const std::filesystem::path& path);
nlohmann::json make_manifest(const std::string& command, const nlohmann::json& config,
                             const std::vector<std::filesystem::path>& inputs,
                             const std::vector<std::filesystem::path>& outputs);

/// Parses argv, runs the command and maps errors to exit codes.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace rearrange::cli
