#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "imdp/manager.hpp"
#include "imdp/rng.hpp"

namespace imdp::rl {

using QTable = Eigen::MatrixXd;  // states x agents

/// Finite intervention-state decision process. b(s, d, s') is the probability
/// that delegating to d at s is next absorbed at s'; r(s, d, s') the manager
/// reward on that transition. Terminal states have value zero.
struct DiscreteIMDP {
  int states = 0;
  int agents = 0;
  double gamma = 0.9;
  std::vector<double> b;
  std::vector<double> r;
  std::vector<bool> terminal;

  DiscreteIMDP() = default;
  DiscreteIMDP(int states, int agents, double gamma);

  double& prob(int s, int d, int s2) { return b[index(s, d, s2)]; }
  double prob(int s, int d, int s2) const { return b[index(s, d, s2)]; }
  double& reward(int s, int d, int s2) { return r[index(s, d, s2)]; }
  double reward(int s, int d, int s2) const { return r[index(s, d, s2)]; }

  /// Throws NonStochasticTransitions when a row of b is not a distribution.
  void validate(double tol = 1e-9) const;

 private:
  std::size_t index(int s, int d, int s2) const {
    return (static_cast<std::size_t>(s) * agents + d) * states + s2;
  }
};

/// (Hq)(s, d) = sum_s' b(s, d, s') [r(s, d, s') + gamma max_d' q(s', d')],
/// with the max taken as 0 at terminal s' and (Hq)(s, .) = 0 at terminal s.
QTable bellman_operator(const DiscreteIMDP& m, const QTable& q);

struct ValueResult {
  Eigen::VectorXd V;
  QTable Q;
  int iterations = 0;
};

/// Iterates H until the sup-norm Bellman residual drops below `tol`. Requires
/// tol > 0 and gamma < 1 (std::invalid_argument otherwise).
ValueResult value_iteration(const DiscreteIMDP& m, double tol);

struct TabularTransition {
  int s = 0;
  int d = 0;
  double r = 0.0;
  int s2 = 0;
  bool terminal = false;
};

/// Q(s, d) += alpha (r + gamma max_d' Q(s', d') - Q(s, d)); the max is 0 for
/// a terminal s'.
void tabular_q_update(QTable& q, const TabularTransition& t, double alpha, double gamma);

struct QLearningConfig {
  std::int64_t max_updates = 50'000'000;
  /// Sup-norm target against a reference Q, checked every `check_every` updates.
  double tolerance = 1e-3;
  std::int64_t check_every = 100'000;
  std::uint64_t seed = 0;
};

struct QLearningResult {
  QTable Q;
  std::int64_t updates = 0;
  double error = 0.0;
};

/// Asynchronous Q-learning from sampled transitions: state-action pairs are
/// visited round-robin, successors drawn from b, and the step size of pair
/// (s, d) after n visits is 1 / (1 + (1 - gamma) n). Stops once the sup-norm
/// distance to `reference` falls below the tolerance (or after max_updates
/// when `reference` is empty).
QLearningResult q_learning(const DiscreteIMDP& m, const QLearningConfig& cfg, const QTable& reference = {});

double sup_norm(const QTable& a, const QTable& b);

/// Maximum-likelihood DiscreteIMDP from observed transitions: empirical
/// successor frequencies and mean rewards. Unvisited pairs self-loop with zero
/// reward; states seen only as terminal successors are marked terminal.
DiscreteIMDP estimate_discrete_imdp(const std::vector<TabularTransition>& transitions, int states, int agents,
                                    double gamma);

/// Tabular state of a manager observation: (team segment kind, bucket of the
/// nearest conflict distance, last cue kind).
struct StateDiscretizer {
  manager::ObservationLayout layout;
  std::vector<double> distance_edges{0.1, 0.3, 0.6};

  int states() const { return 3 * (static_cast<int>(distance_edges.size()) + 1) * manager::ObservationLayout::kCueFeatures; }
  int operator()(const manager::Observation& obs) const;
};

}  // namespace imdp::rl
