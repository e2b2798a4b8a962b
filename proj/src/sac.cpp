#include "imdp/sac.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace imdp::rl {

void SacConfig::validate() const {
  if (hidden.empty()) throw std::invalid_argument("sac needs at least one hidden layer");
  for (int h : hidden) {
    if (h <= 0) throw std::invalid_argument("hidden widths must be positive");
  }
  // Zero learning rates are allowed and freeze the corresponding parameters.
  if (!(actor_lr >= 0.0 && critic_lr >= 0.0 && alpha_lr >= 0.0 && tau >= 0.0 && tau <= 1.0)) {
    throw std::invalid_argument("sac rates must be non-negative and tau at most 1");
  }
  if (!(initial_alpha > 0.0)) throw std::invalid_argument("initial temperature must be positive");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
  if (batch_size <= 0 || buffer_capacity == 0) throw std::invalid_argument("batch size and capacity must be positive");
  if (pretrain_episodes_per_agent < 0 || random_episodes < 0 || train_episodes < 0 || updates_per_episode < 0) {
    throw std::invalid_argument("episode counts must be non-negative");
  }
  if (!(per_alpha >= 0.0) || !(per_beta_start >= 0.0) || !(per_beta_end >= 0.0)) {
    throw std::invalid_argument("replay exponents must be non-negative");
  }
}

Batch make_batch(const std::vector<const manager::ManagerTransition*>& items, const std::vector<double>& weights) {
  if (items.empty()) throw std::invalid_argument("empty batch");
  const auto dim = static_cast<Eigen::Index>(items.front()->observation.size());
  const auto n = static_cast<Eigen::Index>(items.size());
  Batch b;
  b.obs.resize(dim, n);
  b.next_obs.resize(dim, n);
  b.rewards.resize(n);
  b.done.resize(n);
  b.weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& t = *items[i];
    b.obs.col(i) = Eigen::Map<const Eigen::VectorXd>(t.observation.data(), dim);
    b.next_obs.col(i) = Eigen::Map<const Eigen::VectorXd>(t.next_observation.data(), dim);
    b.actions.push_back(t.action);
    b.rewards(i) = t.reward;
    b.done(i) = t.done ? 1.0 : 0.0;
    b.weights(i) = weights.empty() ? 1.0 : weights[i];
  }
  return b;
}

Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double m = logits.col(j).maxCoeff();
    out.col(j) = (logits.col(j).array() - m).exp();
    out.col(j) /= out.col(j).sum();
  }
  return out;
}

namespace {

Eigen::MatrixXd log_softmax_columns(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double m = logits.col(j).maxCoeff();
    const double lse = m + std::log((logits.col(j).array() - m).exp().sum());
    out.col(j) = logits.col(j).array() - lse;
  }
  return out;
}

Eigen::VectorXd as_vector(const manager::Observation& obs) {
  return Eigen::Map<const Eigen::VectorXd>(obs.data(), static_cast<Eigen::Index>(obs.size()));
}

}  // namespace

double critic_loss(const Mlp& critic, const Batch& batch, const Eigen::VectorXd& targets, Gradients* grads) {
  Mlp::Tape tape;
  const Eigen::MatrixXd q = critic.forward(batch.obs, tape);
  const double n = batch.size();
  double loss = 0.0;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(q.rows(), q.cols());
  for (int i = 0; i < batch.size(); ++i) {
    const double diff = q(batch.actions[i], i) - targets(i);
    loss += 0.5 * batch.weights(i) * diff * diff / n;
    g(batch.actions[i], i) = batch.weights(i) * diff / n;
  }
  if (grads) *grads = critic.backward(tape, g);
  return loss;
}

double actor_loss(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& q, double alpha,
                  Eigen::MatrixXd* logit_grads) {
  const Eigen::MatrixXd logp = log_softmax_columns(logits);
  const Eigen::MatrixXd p = logp.array().exp();
  const Eigen::MatrixXd g = alpha * logp - q;
  const double n = static_cast<double>(logits.cols());
  double loss = 0.0;
  if (logit_grads) logit_grads->resize(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.cols(); ++i) {
    const double expected = p.col(i).dot(g.col(i));
    loss += expected / n;
    if (logit_grads) logit_grads->col(i) = p.col(i).cwiseProduct((g.col(i).array() - expected).matrix()) / n;
  }
  return loss;
}

SacAgent::SacAgent(int obs_dim, int actions, const SacConfig& cfg, Rng& rng)
    : obs_dim_(obs_dim), actions_(actions), cfg_(cfg) {
  cfg.validate();
  if (obs_dim <= 0 || actions < 1) throw std::invalid_argument("sac needs a positive observation size and actions");
  std::vector<int> sizes{obs_dim};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(actions);
  actor_ = Mlp(sizes, rng);
  q1_ = Mlp(sizes, rng);
  q2_ = Mlp(sizes, rng);
  q1_target_ = q1_;
  q2_target_ = q2_;
  actor_opt_ = Adam(actor_, cfg.actor_lr);
  q1_opt_ = Adam(q1_, cfg.critic_lr);
  q2_opt_ = Adam(q2_, cfg.critic_lr);
  log_alpha_ = std::log(cfg.initial_alpha);
  alpha_opt_ = ScalarAdam(cfg.alpha_lr);
  entropy_target_ = cfg.entropy_target_ratio * std::log(static_cast<double>(actions));
}

Eigen::VectorXd SacAgent::probabilities(const manager::Observation& obs) const {
  return softmax_columns(actor_.forward(as_vector(obs))).col(0);
}

int SacAgent::greedy(const manager::Observation& obs) const {
  const Eigen::VectorXd logits = actor_.forward(as_vector(obs)).col(0);
  Eigen::Index best = 0;
  for (Eigen::Index a = 1; a < logits.size(); ++a) {
    if (logits(a) > logits(best)) best = a;
  }
  return static_cast<int>(best);
}

int SacAgent::sample(const manager::Observation& obs, Rng& rng) const {
  const Eigen::VectorXd p = probabilities(obs);
  double u = rng.uniform();
  for (Eigen::Index a = 0; a < p.size(); ++a) {
    u -= p(a);
    if (u < 0.0) return static_cast<int>(a);
  }
  return static_cast<int>(p.size()) - 1;
}

Eigen::VectorXd SacAgent::targets(const Batch& batch) const {
  const Eigen::MatrixXd logits = actor_.forward(batch.next_obs);
  const Eigen::MatrixXd logp = log_softmax_columns(logits);
  const Eigen::MatrixXd p = logp.array().exp();
  const Eigen::MatrixXd qmin = q1_target_.forward(batch.next_obs).cwiseMin(q2_target_.forward(batch.next_obs));
  const double a = alpha();
  Eigen::VectorXd y(batch.size());
  for (int i = 0; i < batch.size(); ++i) {
    const double soft_v = p.col(i).dot((qmin.col(i) - a * logp.col(i)));
    y(i) = batch.rewards(i) + cfg_.gamma * (1.0 - batch.done(i)) * soft_v;
  }
  return y;
}

UpdateStats SacAgent::update(const Batch& batch) {
  UpdateStats stats;
  const Eigen::VectorXd y = targets(batch);

  Gradients g1, g2;
  stats.critic_loss = critic_loss(q1_, batch, y, &g1) + critic_loss(q2_, batch, y, &g2);
  {
    const Eigen::MatrixXd q1 = q1_.forward(batch.obs);
    const Eigen::MatrixXd q2 = q2_.forward(batch.obs);
    for (int i = 0; i < batch.size(); ++i) {
      const int a = batch.actions[i];
      stats.td_errors.push_back(std::max(std::abs(q1(a, i) - y(i)), std::abs(q2(a, i) - y(i))));
    }
  }
  q1_opt_.step(q1_, g1);
  q2_opt_.step(q2_, g2);

  const Eigen::MatrixXd qmin = q1_.forward(batch.obs).cwiseMin(q2_.forward(batch.obs));
  Mlp::Tape tape;
  const Eigen::MatrixXd logits = actor_.forward(batch.obs, tape);
  Eigen::MatrixXd dlogits;
  stats.actor_loss = actor_loss(logits, qmin, alpha(), &dlogits);
  actor_opt_.step(actor_, actor_.backward(tape, dlogits));

  const Eigen::MatrixXd logp = log_softmax_columns(logits);
  const Eigen::MatrixXd p = logp.array().exp();
  double entropy = 0.0;
  for (int i = 0; i < batch.size(); ++i) entropy -= p.col(i).dot(logp.col(i)) / batch.size();
  stats.entropy = entropy;
  alpha_opt_.step(log_alpha_, alpha() * (entropy - entropy_target_));
  stats.alpha = alpha();

  q1_target_.soft_update_from(q1_, cfg_.tau);
  q2_target_.soft_update_from(q2_, cfg_.tau);
  return stats;
}

nlohmann::json SacAgent::to_json() const {
  return {{"obs_dim", obs_dim_},     {"actions", actions_},           {"log_alpha", log_alpha_},
          {"actor", rl::to_json(actor_)}, {"critic1", rl::to_json(q1_)}, {"critic2", rl::to_json(q2_)},
          {"target1", rl::to_json(q1_target_)}, {"target2", rl::to_json(q2_target_)}};
}

SacAgent SacAgent::from_json(const nlohmann::json& j, const SacConfig& cfg) {
  SacAgent a;
  a.obs_dim_ = j.at("obs_dim").get<int>();
  a.actions_ = j.at("actions").get<int>();
  a.cfg_ = cfg;
  a.log_alpha_ = j.at("log_alpha").get<double>();
  a.actor_ = mlp_from_json(j.at("actor"));
  a.q1_ = mlp_from_json(j.at("critic1"));
  a.q2_ = mlp_from_json(j.at("critic2"));
  a.q1_target_ = mlp_from_json(j.at("target1"));
  a.q2_target_ = mlp_from_json(j.at("target2"));
  a.actor_opt_ = Adam(a.actor_, cfg.actor_lr);
  a.q1_opt_ = Adam(a.q1_, cfg.critic_lr);
  a.q2_opt_ = Adam(a.q2_, cfg.critic_lr);
  a.alpha_opt_ = ScalarAdam(cfg.alpha_lr);
  a.entropy_target_ = cfg.entropy_target_ratio * std::log(static_cast<double>(a.actions_));
  if (a.actor_.input_size() != a.obs_dim_ || a.actor_.output_size() != a.actions_) {
    throw std::invalid_argument("checkpoint network shapes do not match its header");
  }
  return a;
}

}  // namespace imdp::rl
