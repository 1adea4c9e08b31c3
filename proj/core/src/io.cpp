#include "rearrange/io.hpp"

#include <fstream>
#include <sstream>

#include "rearrange/error.hpp"

namespace rearrange::world {

void to_json(nlohmann::json& j, const WorldConfig& c) {
  j = {{"half_extent", c.half_extent}, {"ball_radius", c.ball_radius}, {"n_colors", c.n_colors},
       {"n_per_color", c.n_per_color}, {"v_max", c.v_max},           {"dt", c.dt},
       {"horizon", c.horizon},         {"resolution_passes", c.resolution_passes}, {"rng_seed", c.rng_seed}};
}

void from_json(const nlohmann::json& j, WorldConfig& c) {
  const WorldConfig d;
  c.half_extent = j.value("half_extent", d.half_extent);
  c.ball_radius = j.value("ball_radius", d.ball_radius);
  c.n_colors = j.value("n_colors", d.n_colors);
  c.n_per_color = j.value("n_per_color", d.n_per_color);
  c.v_max = j.value("v_max", d.v_max);
  c.dt = j.value("dt", d.dt);
  c.horizon = j.value("horizon", d.horizon);
  c.resolution_passes = j.value("resolution_passes", d.resolution_passes);
  c.rng_seed = j.value("rng_seed", d.rng_seed);
}

void to_json(nlohmann::json& j, const BallState& s) {
  nlohmann::json pos = nlohmann::json::array();
  for (const Vec2& p : s.positions) pos.push_back({p.x, p.y});
  j = {{"positions", std::move(pos)}, {"categories", s.categories}};
}

void from_json(const nlohmann::json& j, BallState& s) {
  s.positions.clear();
  for (const auto& p : j.at("positions")) {
    if (!p.is_array() || p.size() != 2) throw ValidationError("position must be a [x, y] pair");
    s.positions.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  s.categories = j.at("categories").get<std::vector<int>>();
  if (s.categories.size() != s.positions.size()) throw ValidationError("positions and categories differ in length");
}

void to_json(nlohmann::json& j, const Action& a) {
  j = nlohmann::json::array();
  for (const Vec2& v : a.velocities) j.push_back({v.x, v.y});
}

void from_json(const nlohmann::json& j, Action& a) {
  a.velocities.clear();
  for (const auto& v : j) {
    if (!v.is_array() || v.size() != 2) throw ValidationError("velocity must be a [vx, vy] pair");
    a.velocities.push_back({v[0].get<double>(), v[1].get<double>()});
  }
}

void to_json(nlohmann::json& j, const StepRecord& r) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [a, b] : r.pair_collisions) pairs.push_back({a, b});
  j = {{"state_before", r.state_before},
       {"action", r.action},
       {"state_after", r.state_after},
       {"collision_count", r.collision_count},
       {"pair_collisions", std::move(pairs)}};
  if (r.reward_raw) j["reward_raw"] = *r.reward_raw;
  if (r.reward_norm) j["reward_norm"] = *r.reward_norm;
}

void from_json(const nlohmann::json& j, StepRecord& r) {
  r.state_before = j.at("state_before").get<BallState>();
  r.action = j.at("action").get<Action>();
  r.state_after = j.at("state_after").get<BallState>();
  r.collision_count = j.at("collision_count").get<int>();
  r.pair_collisions.clear();
  for (const auto& p : j.at("pair_collisions")) r.pair_collisions.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
  r.reward_raw.reset();
  r.reward_norm.reset();
  if (j.contains("reward_raw")) r.reward_raw = j["reward_raw"].get<double>();
  if (j.contains("reward_norm")) r.reward_norm = j["reward_norm"].get<double>();
}

}  // namespace rearrange::world

namespace rearrange::targets {

void to_json(nlohmann::json& j, const TaskSpec& t) {
  j = {{"kind", std::string(to_string(t.kind))},
       {"world", t.world},
       {"gmm_std", t.gmm_std},
       {"gmm_center_radius", t.gmm_center_radius}};
}

void from_json(const nlohmann::json& j, TaskSpec& t) {
  const TaskSpec d;
  t.kind = parse_task_kind(j.at("kind").get<std::string>());
  t.world = j.contains("world") ? j["world"].get<world::WorldConfig>() : d.world;
  t.gmm_std = j.value("gmm_std", d.gmm_std);
  t.gmm_center_radius = j.value("gmm_center_radius", d.gmm_center_radius);
}

}  // namespace rearrange::targets

namespace rearrange::score {

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"batch_size", c.batch_size}, {"steps", c.steps}, {"learning_rate", c.learning_rate}, {"t_min", c.t_min},
       {"rng_seed", c.rng_seed},     {"hidden", c.hidden}, {"sigma", c.sigma}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  const TrainConfig d;
  c.batch_size = j.value("batch_size", d.batch_size);
  c.steps = j.value("steps", d.steps);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.t_min = j.value("t_min", d.t_min);
  c.rng_seed = j.value("rng_seed", d.rng_seed);
  c.hidden = j.value("hidden", d.hidden);
  c.sigma = j.value("sigma", d.sigma);
}

}  // namespace rearrange::score

namespace rearrange::eval {

void to_json(nlohmann::json& j, const PlCurve& c) { j = {{"mean", c.mean}, {"lo", c.lo}, {"hi", c.hi}}; }

void from_json(const nlohmann::json& j, PlCurve& c) {
  c.mean = j.at("mean").get<std::vector<double>>();
  c.lo = j.at("lo").get<std::vector<double>>();
  c.hi = j.at("hi").get<std::vector<double>>();
}

void to_json(nlohmann::json& j, const EntropyReport& r) {
  j = {{"mean_entropy", r.mean_entropy}, {"mean_posterior", r.mean_posterior}};
}

void from_json(const nlohmann::json& j, EntropyReport& r) {
  r.mean_entropy = j.at("mean_entropy").get<double>();
  r.mean_posterior = j.at("mean_posterior").get<std::vector<double>>();
}

void to_json(nlohmann::json& j, const MetricsReport& r) {
  j = {{"task", std::string(targets::to_string(r.task))},
       {"horizon", r.horizon},
       {"trajectories", r.trajectories},
       {"oracle_mean", r.oracle_mean},
       {"pl_curve", r.pl_curve},
       {"coverage_score", r.coverage_score},
       {"acn", r.acn},
       {"asc", r.asc}};
  if (r.entropy) j["entropy"] = *r.entropy;
}

void from_json(const nlohmann::json& j, MetricsReport& r) {
  r.task = targets::parse_task_kind(j.at("task").get<std::string>());
  r.horizon = j.at("horizon").get<int>();
  r.trajectories = j.at("trajectories").get<int>();
  r.oracle_mean = j.at("oracle_mean").get<double>();
  r.pl_curve = j.at("pl_curve").get<PlCurve>();
  r.coverage_score = j.at("coverage_score").get<double>();
  r.acn = j.at("acn").get<double>();
  r.asc = j.at("asc").get<double>();
  r.entropy.reset();
  if (j.contains("entropy")) r.entropy = j["entropy"].get<EntropyReport>();
}

}  // namespace rearrange::eval

namespace rearrange::io {

namespace {

// Splits on '\n', dropping a trailing empty line; keeps 1-based numbers.
std::vector<std::pair<std::size_t, std::string_view>> lines_of(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> out;
  std::size_t start = 0, no = 1;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.emplace_back(no, line);
    start = end + 1;
    ++no;
  }
  return out;
}

template <typename F>
auto at_line(const std::string& source, std::size_t line, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(source + ":" + std::to_string(line) + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(source + ":" + std::to_string(line) + ": " + e.what());
  }
}

void expect_kind(const json& j, const char* kind) {
  if (!j.is_object() || j.value("kind", std::string()) != kind) {
    throw ValidationError(std::string("expected a header with kind \"") + kind + "\"");
  }
}

}  // namespace

std::string dump(const json& j) { return j.dump(); }

std::string dump_pretty(const json& j) { return j.dump(2) + "\n"; }

json parse_json(std::string_view text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(source + ": " + e.what());
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw RuntimeFailure("write failed for " + path.string());
}

std::string dataset_jsonl(const targets::TargetDataset& ds) {
  std::string out = dump(json{{"kind", "dataset"}, {"task", ds.task}, {"count", ds.examples.size()}});
  out += '\n';
  for (const auto& s : ds.examples) {
    out += dump(json(s));
    out += '\n';
  }
  return out;
}

targets::TargetDataset parse_dataset_jsonl(std::string_view text, const std::string& source) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ValidationError(source + ": empty dataset file");
  targets::TargetDataset ds;
  std::size_t count = 0;
  at_line(source, 1, [&] {
    const json h = json::parse(lines[0].second);
    expect_kind(h, "dataset");
    ds.task = h.at("task").get<targets::TaskSpec>();
    ds.task.validate();
    count = h.at("count").get<std::size_t>();
  });
  const int k = ds.task.world.num_balls();
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto [no, line] = lines[i];
    if (line.empty()) continue;
    at_line(source, no, [&] {
      auto s = json::parse(line).get<world::BallState>();
      if (static_cast<int>(s.size()) != k) {
        throw ValidationError("state has " + std::to_string(s.size()) + " balls, task expects " + std::to_string(k));
      }
      ds.examples.push_back(std::move(s));
    });
  }
  if (ds.examples.size() != count) {
    throw ValidationError(source + ": header promises " + std::to_string(count) + " records, found " +
                          std::to_string(ds.examples.size()));
  }
  return ds;
}

void save_dataset(const std::filesystem::path& path, const targets::TargetDataset& ds) {
  write_text(path, dataset_jsonl(ds));
}

targets::TargetDataset load_dataset(const std::filesystem::path& path) {
  return parse_dataset_jsonl(read_text(path), path.string());
}

std::string trajectory_jsonl(const TrajectoryFile& file) {
  const auto& h = file.header;
  std::string out = dump(json{{"kind", "trajectory"},
                              {"task", h.task},
                              {"policy", h.policy},
                              {"seed", h.seed},
                              {"episode", h.episode},
                              {"steps", file.trajectory.steps.size()}});
  out += '\n';
  for (std::size_t t = 0; t < file.trajectory.steps.size(); ++t) {
    json j = file.trajectory.steps[t];
    j["t"] = t;
    out += dump(j);
    out += '\n';
  }
  return out;
}

TrajectoryFile parse_trajectory_jsonl(std::string_view text, const std::string& source) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ValidationError(source + ": empty trajectory file");
  TrajectoryFile f;
  std::size_t steps = 0;
  at_line(source, 1, [&] {
    const json h = json::parse(lines[0].second);
    expect_kind(h, "trajectory");
    f.header.task = h.at("task").get<targets::TaskSpec>();
    f.header.policy = h.at("policy").get<std::string>();
    f.header.seed = h.at("seed").get<std::uint64_t>();
    f.header.episode = h.at("episode").get<std::uint64_t>();
    steps = h.at("steps").get<std::size_t>();
  });
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto [no, line] = lines[i];
    if (line.empty()) continue;
    at_line(source, no, [&] {
      json j = json::parse(line);
      if (j.at("t").get<std::size_t>() != f.trajectory.steps.size()) throw ValidationError("step index out of order");
      f.trajectory.steps.push_back(j.get<world::StepRecord>());
    });
  }
  if (f.trajectory.steps.size() != steps) {
    throw ValidationError(source + ": header promises " + std::to_string(steps) + " steps, found " +
                          std::to_string(f.trajectory.steps.size()));
  }
  return f;
}

void save_trajectory(const std::filesystem::path& path, const TrajectoryFile& file) {
  write_text(path, trajectory_jsonl(file));
}

TrajectoryFile load_trajectory(const std::filesystem::path& path) {
  return parse_trajectory_jsonl(read_text(path), path.string());
}

json checkpoint_json(const score::ScoreModel& model) {
  json layers = json::array();
  for (const auto& p : model.parameters()) {
    layers.push_back({{"shape", p.shape()}, {"data", std::vector<double>(p.data().begin(), p.data().end())}});
  }
  const auto& c = model.config();
  return {{"layers", std::move(layers)}, {"fourier_seed", c.fourier_seed}, {"fourier_dim", c.fourier_dim},
          {"hidden", c.hidden},          {"n_colors", c.n_colors},         {"sigma", c.sigma},
          {"t_min", c.t_min}};
}

score::ScoreModel model_from_checkpoint(const json& j) {
  try {
    score::ModelConfig c;
    c.fourier_seed = j.at("fourier_seed").get<std::uint64_t>();
    c.fourier_dim = j.value("fourier_dim", c.fourier_dim);
    c.hidden = j.value("hidden", c.hidden);
    c.n_colors = j.value("n_colors", c.n_colors);
    c.sigma = j.value("sigma", c.sigma);
    c.t_min = j.value("t_min", c.t_min);
    std::vector<ad::Tensor> params;
    for (const auto& l : j.at("layers")) {
      params.emplace_back(l.at("shape").get<ad::Shape>(), l.at("data").get<std::vector<double>>());
    }
    return score::ScoreModel(c, std::move(params));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const score::ScoreModel& model) {
  write_text(path, dump(checkpoint_json(model)) + "\n");
}

score::ScoreModel load_checkpoint(const std::filesystem::path& path) {
  return model_from_checkpoint(parse_json(read_text(path), path.string()));
}

std::string pl_csv(const eval::PlCurve& curve) {
  std::string out = "step,mean,lo,hi\n";
  for (std::size_t k = 0; k < curve.mean.size(); ++k) {
    out += std::to_string(k) + "," + json(curve.mean[k]).dump() + "," + json(curve.lo[k]).dump() + "," +
           json(curve.hi[k]).dump() + "\n";
  }
  return out;
}

}  // namespace rearrange::io
