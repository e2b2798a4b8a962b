#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "imdp/config.hpp"
#include "imdp/manager.hpp"
#include "imdp/scenario.hpp"
#include "imdp/training.hpp"

namespace imdp::exp {

struct EpisodeSummary {
  sim::Outcome outcome = sim::Outcome::Horizon;
  int steps = 0;
  int interventions = 0;
  int delegations = 0;
  /// True when every delegation picked the same agent.
  bool single_agent = true;
  double reward = 0.0;
};

EpisodeSummary summarize(const manager::EpisodeTrace& trace);

/// Fraction of goal outcomes. Throws EmptyTraceSet on an empty set.
double success_rate(std::span<const EpisodeSummary> episodes);
/// Mean per-episode count of violation steps. Throws EmptyTraceSet.
double mean_interventions(std::span<const EpisodeSummary> episodes);

struct ConditionResult {
  std::string condition_id;
  std::string task;
  std::string team;
  std::string mode;
  double n_g = 0.0;
  double mean_interventions = 0.0;
  int episodes = 0;
  int goals = 0;
  int collisions = 0;
  int timeouts = 0;
  double mean_length = 0.0;
  std::string config_hash;

  bool operator==(const ConditionResult&) const = default;
};

using ResultsTable = std::vector<ConditionResult>;

ConditionResult aggregate(std::span<const EpisodeSummary> episodes, const std::string& task,
                          const std::string& team, const std::string& mode, const std::string& config_hash);

/// Everything needed to run episodes of one task with one team.
struct Condition {
  const Scenario* scenario = nullptr;
  std::vector<driver::DriverAgent> team;
  manager::IMDPSpec spec;
  driver::Traffic traffic;
};

Condition make_condition(const ExperimentConfig& cfg, const Scenario& scenario, const TeamConfig& team);

/// Seed of evaluation episode `k`: derive_seed(master, fnv1a("eval/<task>/<team>"), k).
std::uint64_t eval_episode_seed(std::uint64_t master, const std::string& task, const std::string& team, int k);
/// Training seed: derive_seed(master, fnv1a("train/<task>/<team>"), 0).
std::uint64_t train_seed(std::uint64_t master, const std::string& task, const std::string& team);

/// Runs `episodes` evaluation episodes in index order on one thread.
std::vector<EpisodeSummary> evaluate_serial(const Condition& cond, const manager::ManagerPolicy& policy,
                                            std::uint64_t master, const std::string& team_name, int episodes);
/// Same episodes spread over `jobs` OpenMP threads; results are stored by
/// episode index so the output equals evaluate_serial.
std::vector<EpisodeSummary> evaluate_parallel(const Condition& cond, const manager::ManagerPolicy& policy,
                                              std::uint64_t master, const std::string& team_name, int episodes,
                                              int jobs);

/// Parses "solo:<k>", "random" or "trained". Throws ConfigError.
struct ModeSpec {
  enum class Kind { Solo, Random, Trained } kind = Kind::Random;
  int agent = 0;
};
ModeSpec parse_mode(const std::string& mode, int team_size);

rl::TrainedManager train_condition(const ExperimentConfig& cfg, const Condition& cond, const std::string& team_name);

/// Solo or random baseline row for one task and team.
ConditionResult run_baseline(const ExperimentConfig& cfg, const std::string& task, const TeamConfig& team,
                             const std::string& mode);

struct SuiteHooks {
  std::function<void(const std::string&)> log;
  std::function<void(const std::string& task, const std::string& team, const rl::TrainedManager&)> on_trained;
};

/// Every task x team x mode of the config, training once per task and team
/// when a trained mode is requested.
ResultsTable run_suite(const ExperimentConfig& cfg, const SuiteHooks& hooks = {});

}  // namespace imdp::exp
