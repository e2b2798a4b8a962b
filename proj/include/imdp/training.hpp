#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "imdp/config.hpp"
#include "imdp/manager.hpp"
#include "imdp/sac.hpp"
#include "imdp/tabular.hpp"
#include "json.hpp"

namespace imdp::rl {

/// World for a training episode, keyed by the episode seed.
using EnvFactory = std::function<sim::WorldState(std::uint64_t episode_seed)>;

struct TrainedManager {
  std::string mode;  // "sac" or "tabular"
  std::optional<SacAgent> sac;
  QTable q;
  StateDiscretizer discretizer;
  /// Episodic reward of every training episode, pretraining included.
  std::vector<double> learning_curve;

  /// Greedy policy (argmax of actor probabilities or of the Q table; ties go
  /// to the lower agent index). Safe for concurrent use.
  manager::ManagerPolicy policy() const;
  int act(const manager::Observation& obs) const;

  nlohmann::json checkpoint(const std::string& config_hash) const;
  static TrainedManager from_checkpoint(const nlohmann::json& j, const SacConfig& cfg);
};

/// Phase 1 runs solo episodes for every agent, phase 2 uniform-random
/// delegations, phase 3 learns (SAC with prioritized replay, or epsilon-greedy
/// tabular Q-learning) with updates after each episode.
TrainedManager train_manager(const EnvFactory& env, const std::vector<driver::DriverAgent>& team,
                             const manager::IMDPSpec& spec, const driver::Traffic& traffic,
                             const exp::TrainingConfig& cfg, std::uint64_t seed);

}  // namespace imdp::rl
