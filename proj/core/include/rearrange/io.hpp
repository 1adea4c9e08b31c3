#pragma once

// File formats: JSON for configs, checkpoints and reports, JSONL for target
// datasets and trajectories (header line first). Floats are written as the
// shortest decimal that round-trips; object keys are sorted.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "rearrange/metrics.hpp"
#include "rearrange/score_model.hpp"
#include "rearrange/targets.hpp"
#include "rearrange/world.hpp"

namespace rearrange::world {
void to_json(nlohmann::json& j, const WorldConfig& c);
void from_json(const nlohmann::json& j, WorldConfig& c);
void to_json(nlohmann::json& j, const BallState& s);
void from_json(const nlohmann::json& j, BallState& s);
void to_json(nlohmann::json& j, const Action& a);
void from_json(const nlohmann::json& j, Action& a);
void to_json(nlohmann::json& j, const StepRecord& r);
void from_json(const nlohmann::json& j, StepRecord& r);
}  // namespace rearrange::world

namespace rearrange::targets {
void to_json(nlohmann::json& j, const TaskSpec& t);
void from_json(const nlohmann::json& j, TaskSpec& t);
}  // namespace rearrange::targets

namespace rearrange::score {
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
}  // namespace rearrange::score

namespace rearrange::eval {
void to_json(nlohmann::json& j, const PlCurve& c);
void from_json(const nlohmann::json& j, PlCurve& c);
void to_json(nlohmann::json& j, const EntropyReport& r);
void from_json(const nlohmann::json& j, EntropyReport& r);
void to_json(nlohmann::json& j, const MetricsReport& r);
void from_json(const nlohmann::json& j, MetricsReport& r);
}  // namespace rearrange::eval

namespace rearrange::io {

using nlohmann::json;

/// Compact single-line JSON.
std::string dump(const json& j);
/// Indented JSON with a trailing newline.
std::string dump_pretty(const json& j);
json parse_json(std::string_view text, const std::string& source);

std::string read_text(const std::filesystem::path& path);
/// Creates parent directories. Throws ValidationError when not writable.
void write_text(const std::filesystem::path& path, std::string_view text);

std::string dataset_jsonl(const targets::TargetDataset& ds);
targets::TargetDataset parse_dataset_jsonl(std::string_view text, const std::string& source = "<dataset>");
void save_dataset(const std::filesystem::path& path, const targets::TargetDataset& ds);
targets::TargetDataset load_dataset(const std::filesystem::path& path);

struct TrajectoryHeader {
  targets::TaskSpec task;
  std::string policy;
  std::uint64_t seed = 0;
  std::uint64_t episode = 0;

  friend bool operator==(const TrajectoryHeader&, const TrajectoryHeader&) = default;
};

struct TrajectoryFile {
  TrajectoryHeader header;
  world::Trajectory trajectory;

  friend bool operator==(const TrajectoryFile&, const TrajectoryFile&) = default;
};

std::string trajectory_jsonl(const TrajectoryFile& file);
TrajectoryFile parse_trajectory_jsonl(std::string_view text, const std::string& source = "<trajectory>");
void save_trajectory(const std::filesystem::path& path, const TrajectoryFile& file);
TrajectoryFile load_trajectory(const std::filesystem::path& path);

/// {"layers": [{"shape", "data"}...], "fourier_seed", plus the model config.
json checkpoint_json(const score::ScoreModel& model);
score::ScoreModel model_from_checkpoint(const json& j);
void save_checkpoint(const std::filesystem::path& path, const score::ScoreModel& model);
score::ScoreModel load_checkpoint(const std::filesystem::path& path);

/// step,mean,lo,hi
std::string pl_csv(const eval::PlCurve& curve);

}  // namespace rearrange::io
