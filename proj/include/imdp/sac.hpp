#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "imdp/manager.hpp"
#include "imdp/network.hpp"
#include "imdp/rng.hpp"
#include "json.hpp"

namespace imdp::rl {

struct SacConfig {
  std::vector<int> hidden{64, 64};
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double alpha_lr = 3e-4;
  double tau = 5e-3;
  /// Entropy target as a fraction of the maximum entropy log |D|.
  double entropy_target_ratio = 0.5;
  double initial_alpha = 0.1;
  int batch_size = 64;
  double per_alpha = 0.6;
  double per_beta_start = 0.4;
  double per_beta_end = 1.0;
  int pretrain_episodes_per_agent = 50;
  int random_episodes = 100;
  int train_episodes = 2000;
  int updates_per_episode = 8;
  std::size_t buffer_capacity = 100'000;
  double gamma = 0.99;

  /// Throws std::invalid_argument on negative rates, gamma outside [0, 1]
  /// or negative counts.
  void validate() const;
};

/// Column-major minibatch of manager transitions.
struct Batch {
  Eigen::MatrixXd obs;
  std::vector<int> actions;
  Eigen::VectorXd rewards;
  Eigen::MatrixXd next_obs;
  Eigen::VectorXd done;
  Eigen::VectorXd weights;

  int size() const { return static_cast<int>(actions.size()); }
};

Batch make_batch(const std::vector<const manager::ManagerTransition*>& items, const std::vector<double>& weights);

Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits);

/// 0.5 * mean_i w_i (Q(s_i, a_i) - y_i)^2 and, when `grads` is given, its
/// gradient with respect to the critic parameters.
double critic_loss(const Mlp& critic, const Batch& batch, const Eigen::VectorXd& targets, Gradients* grads);

/// mean_i sum_a pi(a|s_i) (alpha log pi(a|s_i) - q(s_i, a)) and, when
/// `logit_grads` is given, its gradient with respect to the actor logits.
double actor_loss(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& q, double alpha,
                  Eigen::MatrixXd* logit_grads);

struct UpdateStats {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double alpha = 0.0;
  double entropy = 0.0;
  std::vector<double> td_errors;
};

/// Discrete-action soft actor-critic: categorical actor, twin critics with
/// target copies and an automatically tuned temperature.
class SacAgent {
 public:
  SacAgent(int obs_dim, int actions, const SacConfig& cfg, Rng& rng);

  int actions() const { return actions_; }
  int obs_dim() const { return obs_dim_; }
  double alpha() const { return std::exp(log_alpha_); }

  Eigen::VectorXd probabilities(const manager::Observation& obs) const;
  int greedy(const manager::Observation& obs) const;
  int sample(const manager::Observation& obs, Rng& rng) const;

  /// Soft Bellman targets y = r + gamma (1 - done) sum_a' pi(a'|s')
  /// (min_k Q'_k(s', a') - alpha log pi(a'|s')).
  Eigen::VectorXd targets(const Batch& batch) const;

  /// One gradient step on both critics, the actor and the temperature, then
  /// a soft update of the target critics. Returns per-sample |TD| errors.
  UpdateStats update(const Batch& batch);

  const Mlp& actor() const { return actor_; }
  const Mlp& critic(int k) const { return k == 0 ? q1_ : q2_; }
  const Mlp& target(int k) const { return k == 0 ? q1_target_ : q2_target_; }

  nlohmann::json to_json() const;
  static SacAgent from_json(const nlohmann::json& j, const SacConfig& cfg);

 private:
  SacAgent() = default;

  int obs_dim_ = 0;
  int actions_ = 0;
  SacConfig cfg_;
  double entropy_target_ = 0.0;
  Mlp actor_, q1_, q2_, q1_target_, q2_target_;
  Adam actor_opt_, q1_opt_, q2_opt_;
  double log_alpha_ = 0.0;
  ScalarAdam alpha_opt_;
};

}  // namespace imdp::rl
