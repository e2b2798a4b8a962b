#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "imdp/driver.hpp"
#include "imdp/manager.hpp"
#include "imdp/sac.hpp"
#include "json.hpp"

namespace imdp::exp {

inline constexpr int kSchemaVersion = 1;

struct WorldConfig {
  double dt = 0.1;
  int horizon = 300;
  double goal_threshold = 1.0;
  double cell_size = 200.0;
  sim::LaneGeometry lanes;
  /// Distance from the team's start to the intersection box.
  double team_start_gap = 40.0;
  double team_speed = 9.5;
  /// Goal distance past the intersection box along the team path.
  double goal_past_box = 20.0;
  driver::DriverParams driver;
};

struct SpawnConfig {
  /// Arrival offset (seconds, relative to the team's free-drive arrival) of
  /// the background vehicle that forces a conflict.
  std::pair<double, double> conflict_offset{-0.4, 0.4};
  /// Arrival offset of the second background vehicle at its merge point.
  std::pair<double, double> follow_offset{1.5, 2.5};
  std::pair<double, double> speed{8.5, 9.5};
};

struct TrainingConfig {
  /// "sac" or "tabular".
  std::string mode = "sac";
  rl::SacConfig sac;
  /// Tabular mode: Q-learning episodes after the pretraining phases.
  double tabular_alpha = 0.1;
  double tabular_epsilon = 0.1;
};

struct EvaluationConfig {
  int episodes = 250;
  int jobs = 1;
};

struct AgentConfig {
  std::string label;
  perception::PerceptionContext context;
};

struct TeamConfig {
  std::string name;
  std::vector<AgentConfig> agents;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 0;
  std::vector<std::string> tasks{"straight", "left", "right"};
  WorldConfig world;
  SpawnConfig spawn;
  manager::Constraints constraints;
  manager::RewardParams reward;
  TrainingConfig training;
  EvaluationConfig evaluation;
  std::vector<TeamConfig> teams;
  /// "solo:<agent index>", "random" or "trained".
  std::vector<std::string> modes{"solo:0", "solo:1", "random", "trained"};

  /// Throws ConfigError describing the first invalid field.
  void validate() const;
};

nlohmann::json to_json(const perception::PerceptionContext& ctx);
perception::PerceptionContext context_from_json(const nlohmann::json& j);

/// Full document with every default filled in; keys are emitted sorted.
nlohmann::json to_json(const ExperimentConfig& cfg);
/// Missing keys take their defaults; unknown keys and malformed values throw
/// ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
/// Reads and validates a config file. Throws IoError when it cannot be read
/// and ConfigError when it does not parse or validate.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Default suite: the distracted-driver team, the single-error
/// teams at two severities each and the mixed-error teams.
ExperimentConfig default_config();

std::vector<driver::DriverAgent> make_team(const TeamConfig& team);

}  // namespace imdp::exp
