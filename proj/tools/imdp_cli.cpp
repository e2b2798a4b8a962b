#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "imdp/amc.hpp"
#include "imdp/errors.hpp"
#include "imdp/experiments.hpp"
#include "imdp/results_io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace imdp;

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;
constexpr int kConfig = 3;
constexpr int kIo = 4;

constexpr const char* kFooter = R"(Exit codes:
  0 success
  1 runtime error
  2 usage error (bad or missing flags)
  3 config error (unreadable schema, bad values, unknown keys)
  4 I/O error (cannot read inputs or write artifacts)

Config document (JSON, schema_version 1; missing keys take defaults, unknown keys are rejected):
  seed, tasks [straight|left|right], world {dt, horizon, goal_threshold, cell_size,
  lanes, team_start_gap, team_speed, goal_past_box, driver}, spawn {conflict_offset,
  follow_offset, speed}, constraints, reward {c_velocity, c_proximity, c_collision,
  delta, goal_bonus, combine product|divisor, rho cues|steps}, training {mode sac|tabular,
  sac {...}, tabular_alpha, tabular_epsilon}, evaluation {episodes, jobs},
  teams [{name, agents [{label, context}]}], modes ["solo:<k>", "random", "trained"].
  `imdp default-config --out cfg.json` writes the full default document.

Artifacts go under --out with the first 12 hex digits of the config hash in every
file name: results-<hash>.csv, results-<hash>.json (sidecar with the full config),
manager-<task>-<team>-<hash>.json (checkpoints), results-<hash>-long.csv (export).)";

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::optional<int> jobs;
  std::optional<std::string> mode;
  std::optional<std::string> reward_form;
  std::string out = "out";
};

exp::ExperimentConfig load(const Overrides& o) {
  exp::ExperimentConfig cfg = exp::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.episodes) cfg.evaluation.episodes = *o.episodes;
  if (o.jobs) cfg.evaluation.jobs = *o.jobs;
  if (o.mode) cfg.modes = {*o.mode};
  if (o.reward_form) {
    cfg.reward.combine = *o.reward_form == "divisor" ? manager::ScaleCombine::Divisor : manager::ScaleCombine::Product;
  }
  cfg.validate();
  return cfg;
}

std::string short_hash(const exp::ExperimentConfig& cfg) { return exp::config_hash(cfg).substr(0, 12); }

void write_results(const Overrides& o, const exp::ExperimentConfig& cfg, const exp::ResultsTable& table,
                   const std::string& command) {
  const fs::path base = fs::path(o.out) / ("results-" + short_hash(cfg));
  exp::write_text(base.string() + ".csv", exp::results_to_csv(table));
  exp::write_text(base.string() + ".json", exp::sidecar(cfg, table, command).dump(2) + "\n");
  std::cout << "wrote " << base.string() << ".csv\n";
}

void print_table(const exp::ResultsTable& table) {
  for (const auto& r : table) {
    std::printf("%-36s n_g=%.3f n_beta=%.3f goals=%d collisions=%d timeouts=%d\n", r.condition_id.c_str(), r.n_g,
                r.mean_interventions, r.goals, r.collisions, r.timeouts);
  }
}

fs::path checkpoint_path(const Overrides& o, const exp::ExperimentConfig& cfg, const std::string& task,
                         const std::string& team) {
  return fs::path(o.out) / ("manager-" + task + "-" + team + "-" + short_hash(cfg) + ".json");
}

const exp::TeamConfig& find_team(const exp::ExperimentConfig& cfg, const std::string& name) {
  for (const auto& t : cfg.teams) {
    if (t.name == name) return t;
  }
  throw ConfigError("no team named '" + name + "' in the config");
}

void log_line(const std::string& s) { std::cerr << s << "\n"; }

int cmd_train(const Overrides& o, const std::string& task_filter, const std::string& team_filter) {
  const auto cfg = load(o);
  for (const auto& task : cfg.tasks) {
    if (!task_filter.empty() && task != task_filter) continue;
    const exp::Scenario scenario(exp::task_from_string(task), cfg.world, cfg.spawn);
    for (const auto& team : cfg.teams) {
      if (!team_filter.empty() && team.name != team_filter) continue;
      log_line("training " + task + "/" + team.name);
      const auto cond = exp::make_condition(cfg, scenario, team);
      const auto trained = exp::train_condition(cfg, cond, team.name);
      const fs::path path = checkpoint_path(o, cfg, task, team.name);
      exp::write_text(path, trained.checkpoint(exp::config_hash(cfg)).dump() + "\n");
      std::cout << "wrote " << path.string() << "\n";
    }
  }
  return kOk;
}

int cmd_eval(const Overrides& o, const std::string& checkpoint, const std::string& task, const std::string& team_name) {
  const auto cfg = load(o);
  const auto& team = find_team(cfg, team_name);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(exp::read_text(checkpoint));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(checkpoint + ": " + e.what());
  }
  const auto trained = rl::TrainedManager::from_checkpoint(j, cfg.training.sac);
  const exp::Scenario scenario(exp::task_from_string(task), cfg.world, cfg.spawn);
  const auto cond = exp::make_condition(cfg, scenario, team);
  const auto episodes =
      exp::evaluate_parallel(cond, trained.policy(), cfg.seed, team.name, cfg.evaluation.episodes, cfg.evaluation.jobs);
  const exp::ResultsTable table{exp::aggregate(episodes, task, team.name, "trained", exp::config_hash(cfg))};
  print_table(table);
  write_results(o, cfg, table, "eval");
  return kOk;
}

int cmd_baseline(const Overrides& o) {
  const auto cfg = load(o);
  exp::ResultsTable table;
  for (const auto& task : cfg.tasks) {
    for (const auto& team : cfg.teams) {
      for (const auto& mode : cfg.modes) {
        if (mode == "trained") continue;
        table.push_back(exp::run_baseline(cfg, task, team, mode));
      }
    }
  }
  print_table(table);
  write_results(o, cfg, table, "baseline");
  return kOk;
}

int cmd_suite(const Overrides& o) {
  const auto cfg = load(o);
  const std::string hash = exp::config_hash(cfg);
  exp::SuiteHooks hooks;
  hooks.log = log_line;
  hooks.on_trained = [&](const std::string& task, const std::string& team, const rl::TrainedManager& m) {
    exp::write_text(checkpoint_path(o, cfg, task, team), m.checkpoint(hash).dump() + "\n");
  };
  const auto table = exp::run_suite(cfg, hooks);
  print_table(table);
  write_results(o, cfg, table, "suite");
  return kOk;
}

int cmd_analyze_amc(const std::string& chain_path, const std::string& out) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(exp::read_text(chain_path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(chain_path + ": " + e.what());
  }
  amc::AbsorbingChain chain;
  try {
    chain = amc::chain_from_json(doc);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(chain_path + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(chain_path + ": " + e.what());
  }
  const amc::Matrix B = amc::absorption_probs(chain);
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < B.rows(); ++i) {
    std::vector<double> row(B.cols());
    for (int j = 0; j < B.cols(); ++j) row[j] = B(i, j);
    const double sum = B.row(i).sum();
    const std::string label = i < static_cast<int>(chain.transient_labels.size()) ? chain.transient_labels[i]
                                                                                   : std::to_string(i);
    std::printf("%s:", label.c_str());
    for (double v : row) std::printf(" %.6f", v);
    std::printf("  (sum %.12f)\n", sum);
    rows.push_back(row);
  }
  if (!out.empty()) {
    exp::write_text(fs::path(out) / "absorption.json", nlohmann::json{{"B", rows}}.dump(2) + "\n");
  }
  return kOk;
}

int cmd_export(const std::string& results, const std::string& out) {
  const auto table = exp::results_from_csv(exp::read_text(results));
  const fs::path src(results);
  const fs::path dest = fs::path(out) / (src.stem().string() + "-long.csv");
  exp::write_text(dest, exp::results_to_long_csv(table));
  std::cout << "wrote " << dest.string() << "\n";
  return kOk;
}

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "Override the master seed");
  sub->add_option("--episodes", o.episodes, "Override the evaluation episode count")->check(CLI::PositiveNumber);
  sub->add_option("--jobs", o.jobs, "Evaluation worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--mode", o.mode, "Restrict to one manager mode: solo:<k>, random or trained");
  sub->add_option("--reward-form", o.reward_form, "Reward scale combination")
      ->check(CLI::IsMember({"product", "divisor"}));
  sub->add_option("--out", o.out, "Output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid-team manager experiments: training, baselines, suites and AMC analysis"};
  app.footer(kFooter);
  app.require_subcommand(1);

  Overrides o;
  std::string task;
  std::string team;
  std::string checkpoint;
  std::string chain;
  std::string results;

  auto* train = app.add_subcommand("train", "Train a manager per task and team; writes checkpoints");
  add_common(train, o);
  train->add_option("--task", task, "Only this task");
  train->add_option("--team", team, "Only this team");

  auto* eval = app.add_subcommand("eval", "Evaluate a trained checkpoint");
  add_common(eval, o);
  eval->add_option("--checkpoint", checkpoint, "Manager checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--task", task, "Task")->required()->check(CLI::IsMember({"straight", "left", "right"}));
  eval->add_option("--team", team, "Team name")->required();

  auto* baseline = app.add_subcommand("baseline", "Solo and random-manager baselines");
  add_common(baseline, o);

  auto* suite = app.add_subcommand("suite", "Train and evaluate every task, team and mode");
  add_common(suite, o);

  auto* amc_cmd = app.add_subcommand("analyze-amc", "Absorption probabilities of a chain document");
  amc_cmd->add_option("--chain", chain, "Chain JSON with Q, R and optional labels")->required()->check(CLI::ExistingFile);
  amc_cmd->add_option("--out", o.out, "Write absorption.json here (empty to skip)");

  auto* exp_cmd = app.add_subcommand("export", "Convert a results file to plot-ready long format");
  exp_cmd->add_option("--results", results, "Results CSV")->required()->check(CLI::ExistingFile);
  exp_cmd->add_option("--out", o.out, "Output directory")->capture_default_str();

  auto* defaults = app.add_subcommand("default-config", "Write the default config document");
  defaults->add_option("--out", o.out, "Destination file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*train) return cmd_train(o, task, team);
    if (*eval) return cmd_eval(o, checkpoint, task, team);
    if (*baseline) return cmd_baseline(o);
    if (*suite) return cmd_suite(o);
    if (*amc_cmd) return cmd_analyze_amc(chain, o.out);
    if (*exp_cmd) return cmd_export(results, o.out);
    if (*defaults) {
      exp::write_text(o.out, exp::to_json(exp::default_config()).dump(2) + "\n");
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
