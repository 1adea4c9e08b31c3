#include <CLI11.hpp>

#include <iostream>

#include "cli/cli.hpp"
#include "rearrange/error.hpp"
#include "rearrange/io.hpp"

namespace rearrange::cli {

namespace {

using nlohmann::json;

void add_task_flags(CLI::App& sub, TaskFlags& t) {
  sub.add_option("--task", t.task, "circling, clustering, circling-clustering or six-mode-clustering")
      ->capture_default_str();
  sub.add_option("--n-per-color", t.n_per_color, "balls per colour")->capture_default_str();
  sub.add_option("--horizon", t.horizon, "episode length in steps")->capture_default_str();
  sub.add_option("--v-max", t.v_max, "speed limit (m/s)")->capture_default_str();
}

json task_json(const TaskFlags& t) {
  return {{"task", t.task}, {"n-per-color", t.n_per_color}, {"horizon", t.horizon}, {"v-max", t.v_max}};
}

std::string str(const std::filesystem::path& p) { return p.string(); }

// Flag values from a JSON config file. The file may be a plain object, an
// object keyed by command name, or a manifest (whose "config" is unwrapped).
// Keys already given on the command line are skipped, so flags win.
std::vector<std::string> config_args(const std::filesystem::path& path, const std::string& command,
                                     const std::vector<std::string>& given) {
  json j = io::parse_json(io::read_text(path), path.string());
  if (j.is_object() && j.contains("config") && j["config"].is_object()) j = j["config"];
  if (j.is_object() && j.contains(command) && j[command].is_object()) j = j[command];
  if (!j.is_object()) throw ValidationError(path.string() + ": config must be a JSON object");

  auto on_command_line = [&given](const std::string& flag) {
    for (const std::string& a : given) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
  };
  std::vector<std::string> out;
  for (const auto& [key, value] : j.items()) {
    if (value.is_object()) continue;
    const std::string flag = "--" + key;
    if (on_command_line(flag) || value.is_null()) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) out.push_back(flag);
    } else if (value.is_string()) {
      out.push_back(flag);
      out.push_back(value.get<std::string>());
    } else if (value.is_number() || value.is_array()) {
      if (value.is_array()) throw ValidationError(path.string() + ": config key '" + key + "' must be a scalar");
      out.push_back(flag);
      out.push_back(value.dump());
    }
  }
  return out;
}

struct Parsed {
  std::string config;
  SampleTargetsOptions sample;
  TrainScoreOptions train;
  RolloutOptions roll;
  std::string model_path;
  EvalOptions eval;
  RenderOptions render;
};

void build(CLI::App& app, Parsed& p) {
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", p.config, "JSON config file; command-line flags take precedence");

  auto* s = app.add_subcommand("sample-targets", "write a dataset of target states");
  add_task_flags(*s, p.sample.task);
  s->add_option("--n", p.sample.n, "number of examples")->capture_default_str();
  s->add_option("--seed", p.sample.seed)->capture_default_str();
  s->add_option("--out", p.sample.out, "output JSONL path")->required();
  s->add_option("--perturb-std", p.sample.perturb_std, "Gaussian jitter applied to each target (oracle sets)")
      ->capture_default_str();

  auto* t = app.add_subcommand("train-score", "fit the score network by denoising score matching");
  t->add_option("--data", p.train.data, "dataset JSONL")->required();
  t->add_option("--steps", p.train.steps)->capture_default_str();
  t->add_option("--seed", p.train.seed)->capture_default_str();
  t->add_option("--out", p.train.out, "checkpoint JSON path")->required();
  t->add_option("--batch", p.train.batch)->capture_default_str();
  t->add_option("--lr", p.train.lr)->capture_default_str();
  t->add_option("--hidden", p.train.hidden)->capture_default_str();
  t->add_flag("--resume", p.train.resume, "not supported");
  t->add_flag("--quiet", p.train.quiet, "no progress on stderr");

  auto* r = app.add_subcommand("rollout", "run a policy and write one trajectory file per episode");
  r->add_option("--policy", p.roll.policy, "orca, gradient, oneball or random")->capture_default_str();
  r->add_option("--model", p.model_path, "score checkpoint");
  r->add_flag("--analytic", p.roll.analytic, "use the closed-form mixture score instead of a model");
  add_task_flags(*r, p.roll.task);
  r->add_option("--episodes", p.roll.episodes)->capture_default_str();
  r->add_option("--seeds", p.roll.seeds)->capture_default_str();
  r->add_option("--seed", p.roll.seed, "first seed; seeds are seed, seed+1, ...")->capture_default_str();
  r->add_option("--out", p.roll.out, "output directory")->required();
  r->add_option("--t0", p.roll.t0, "noise level at step 0")->capture_default_str();
  r->add_option("--switch-period", p.roll.switch_period, "oneball: steps between re-selection")
      ->capture_default_str();

  auto* e = app.add_subcommand("eval", "compute metrics over a trajectory directory");
  e->add_option("--traj-dir", p.eval.traj_dir)->required();
  e->add_option("--gt", p.eval.gt, "ground-truth target dataset")->required();
  e->add_option("--oracle", p.eval.oracle, "oracle dataset used to normalise PL")->required();
  e->add_option("--report", p.eval.report, "report JSON path")->required();

  auto* v = app.add_subcommand("render", "write SVG frames of a trajectory");
  v->add_option("--traj", p.render.traj)->required();
  v->add_option("--every", p.render.every)->capture_default_str();
  v->add_option("--out-dir", p.render.out_dir)->required();
}

int dispatch(const std::string& cmd, Parsed& p) {
  if (cmd == "sample-targets") {
    const auto& o = p.sample;
    json c = task_json(o.task);
    c.update({{"n", o.n}, {"seed", o.seed}, {"out", str(o.out)}, {"perturb-std", o.perturb_std}});
    sample_targets(o, c);
  } else if (cmd == "train-score") {
    const auto& o = p.train;
    json c = {{"data", str(o.data)}, {"steps", o.steps}, {"seed", o.seed}, {"out", str(o.out)},
              {"batch", o.batch},    {"lr", o.lr},       {"hidden", o.hidden}};
    train_score(o, c);
  } else if (cmd == "rollout") {
    auto& o = p.roll;
    if (!p.model_path.empty()) o.model = p.model_path;
    json c = task_json(o.task);
    c.update({{"policy", o.policy},
              {"analytic", o.analytic},
              {"episodes", o.episodes},
              {"seeds", o.seeds},
              {"seed", o.seed},
              {"out", str(o.out)},
              {"t0", o.t0},
              {"switch-period", o.switch_period}});
    if (o.model) c["model"] = str(*o.model);
    rollout(o, c);
  } else if (cmd == "eval") {
    const auto& o = p.eval;
    evaluate(o, {{"traj-dir", str(o.traj_dir)}, {"gt", str(o.gt)}, {"oracle", str(o.oracle)}, {"report", str(o.report)}});
  } else {
    const auto& o = p.render;
    render(o, {{"traj", str(o.traj)}, {"every", o.every}, {"out-dir", str(o.out_dir)}});
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  try {
    // First pass finds the command and the config file; the second pass parses
    // the flags with the config values appended.
    std::vector<std::string> full = args;
    std::string command;
    std::filesystem::path config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
      const std::string& a = args[i];
      if (a == "--config" && i + 1 < args.size()) {
        config_path = args[++i];
      } else if (a.rfind("--config=", 0) == 0) {
        config_path = a.substr(9);
      } else if (command.empty() && !a.empty() && a[0] != '-') {
        command = a;
      }
    }
    if (!config_path.empty() && !command.empty()) {
      const auto extra = config_args(config_path, command, args);
      full.insert(full.end(), extra.begin(), extra.end());
    }

    CLI::App app{"Target-gradient-field ball rearrangement", "rearrange"};
    app.set_version_flag("--version", std::string(REARRANGE_VERSION));
    Parsed p;
    build(app, p);
    std::vector<std::string> rev(full.rbegin(), full.rend());
    try {
      app.parse(rev);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? kExitOk : kExitValidation;
    }
    for (const auto* sub : app.get_subcommands()) return dispatch(sub->get_name(), p);
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace rearrange::cli
