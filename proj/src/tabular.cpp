#include "imdp/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "imdp/errors.hpp"

namespace imdp::rl {

DiscreteIMDP::DiscreteIMDP(int states_, int agents_, double gamma_)
    : states(states_), agents(agents_), gamma(gamma_) {
  if (states <= 0 || agents <= 0) throw std::invalid_argument("DiscreteIMDP needs states and agents");
  const auto n = static_cast<std::size_t>(states) * agents * states;
  b.assign(n, 0.0);
  r.assign(n, 0.0);
  terminal.assign(states, false);
}

void DiscreteIMDP::validate(double tol) const {
  const auto n = static_cast<std::size_t>(states) * agents * states;
  if (b.size() != n || r.size() != n || terminal.size() != static_cast<std::size_t>(states)) {
    throw std::invalid_argument("DiscreteIMDP tables have the wrong size");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
  for (int s = 0; s < states; ++s) {
    for (int d = 0; d < agents; ++d) {
      double sum = 0.0;
      for (int s2 = 0; s2 < states; ++s2) {
        const double p = prob(s, d, s2);
        if (!(p >= 0.0)) throw NonStochasticTransitions("negative transition probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > tol) {
        throw NonStochasticTransitions("b(" + std::to_string(s) + ", " + std::to_string(d) + ", .) sums to " +
                                       std::to_string(sum));
      }
    }
  }
}

namespace {

Eigen::VectorXd greedy_values(const DiscreteIMDP& m, const QTable& q) {
  Eigen::VectorXd v(m.states);
  for (int s = 0; s < m.states; ++s) v(s) = m.terminal[s] ? 0.0 : q.row(s).maxCoeff();
  return v;
}

}  // namespace

QTable bellman_operator(const DiscreteIMDP& m, const QTable& q) {
  const Eigen::VectorXd v = greedy_values(m, q);
  QTable out = QTable::Zero(m.states, m.agents);
  for (int s = 0; s < m.states; ++s) {
    if (m.terminal[s]) continue;
    for (int d = 0; d < m.agents; ++d) {
      double acc = 0.0;
      for (int s2 = 0; s2 < m.states; ++s2) {
        const double p = m.prob(s, d, s2);
        if (p != 0.0) acc += p * (m.reward(s, d, s2) + m.gamma * v(s2));
      }
      out(s, d) = acc;
    }
  }
  return out;
}

double sup_norm(const QTable& a, const QTable& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("Q tables differ in shape");
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

ValueResult value_iteration(const DiscreteIMDP& m, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (!(m.gamma < 1.0)) throw std::invalid_argument("value iteration needs gamma < 1");
  m.validate();
  ValueResult res;
  res.Q = QTable::Zero(m.states, m.agents);
  for (;;) {
    QTable next = bellman_operator(m, res.Q);
    const double residual = sup_norm(next, res.Q);
    res.Q = std::move(next);
    ++res.iterations;
    if (residual < tol) break;
  }
  // One more sweep so the reported residual bound refers to the returned Q.
  res.Q = bellman_operator(m, res.Q);
  res.V = greedy_values(m, res.Q);
  return res;
}

void tabular_q_update(QTable& q, const TabularTransition& t, double alpha, double gamma) {
  const double next = t.terminal ? 0.0 : q.row(t.s2).maxCoeff();
  q(t.s, t.d) += alpha * (t.r + gamma * next - q(t.s, t.d));
}

QLearningResult q_learning(const DiscreteIMDP& m, const QLearningConfig& cfg, const QTable& reference) {
  m.validate();
  Rng rng(cfg.seed);
  QLearningResult res;
  res.Q = QTable::Zero(m.states, m.agents);
  std::vector<std::int64_t> visits(static_cast<std::size_t>(m.states) * m.agents, 0);

  std::vector<std::pair<int, int>> pairs;
  for (int s = 0; s < m.states; ++s) {
    if (m.terminal[s]) continue;
    for (int d = 0; d < m.agents; ++d) pairs.emplace_back(s, d);
  }
  const bool check = reference.size() > 0;
  if (pairs.empty()) {
    res.error = check ? sup_norm(res.Q, reference) : 0.0;
    return res;
  }

  std::size_t next_pair = 0;
  while (res.updates < cfg.max_updates) {
    const auto [s, d] = pairs[next_pair];
    next_pair = (next_pair + 1) % pairs.size();
    double u = rng.uniform();
    int s2 = m.states - 1;
    for (int k = 0; k < m.states; ++k) {
      u -= m.prob(s, d, k);
      if (u < 0.0) {
        s2 = k;
        break;
      }
    }
    const auto n = visits[static_cast<std::size_t>(s) * m.agents + d]++;
    const double alpha = 1.0 / (1.0 + (1.0 - m.gamma) * static_cast<double>(n));
    tabular_q_update(res.Q, {s, d, m.reward(s, d, s2), s2, static_cast<bool>(m.terminal[s2])}, alpha, m.gamma);
    ++res.updates;
    if (check && res.updates % cfg.check_every == 0) {
      res.error = sup_norm(res.Q, reference);
      if (res.error < cfg.tolerance) return res;
    }
  }
  res.error = check ? sup_norm(res.Q, reference) : 0.0;
  return res;
}

DiscreteIMDP estimate_discrete_imdp(const std::vector<TabularTransition>& transitions, int states, int agents,
                                    double gamma) {
  DiscreteIMDP m(states, agents, gamma);
  std::vector<double> counts(m.b.size(), 0.0);
  std::vector<double> reward_sum(m.b.size(), 0.0);
  std::vector<double> totals(static_cast<std::size_t>(states) * agents, 0.0);
  std::vector<bool> source(states, false);
  std::vector<bool> terminal_target(states, false);
  for (const auto& t : transitions) {
    if (t.s < 0 || t.s >= states || t.s2 < 0 || t.s2 >= states) throw std::out_of_range("state index out of range");
    if (t.d < 0 || t.d >= agents) throw UnknownAgent("transition uses agent " + std::to_string(t.d));
    const std::size_t i = (static_cast<std::size_t>(t.s) * agents + t.d) * states + t.s2;
    counts[i] += 1.0;
    reward_sum[i] += t.r;
    totals[static_cast<std::size_t>(t.s) * agents + t.d] += 1.0;
    source[t.s] = true;
    if (t.terminal) terminal_target[t.s2] = true;
  }
  for (int s = 0; s < states; ++s) {
    m.terminal[s] = terminal_target[s] && !source[s];
    for (int d = 0; d < agents; ++d) {
      const double total = totals[static_cast<std::size_t>(s) * agents + d];
      if (total == 0.0) {
        m.prob(s, d, s) = 1.0;
        continue;
      }
      for (int s2 = 0; s2 < states; ++s2) {
        const std::size_t i = (static_cast<std::size_t>(s) * agents + d) * states + s2;
        if (counts[i] == 0.0) continue;
        m.prob(s, d, s2) = counts[i] / total;
        m.reward(s, d, s2) = reward_sum[i] / counts[i];
      }
    }
  }
  return m;
}

int StateDiscretizer::operator()(const manager::Observation& obs) const {
  int segment = 0;
  for (int k = 0; k < 3; ++k) {
    if (obs.at(2 + k) > 0.5) segment = k;
  }
  double nearest = 1.0;
  for (int i = 0; i < layout.background; ++i) {
    nearest = std::min(nearest, std::abs(obs.at(layout.background_offset(i))));
  }
  const int bucket =
      static_cast<int>(std::upper_bound(distance_edges.begin(), distance_edges.end(), nearest) - distance_edges.begin());
  int cue = 0;
  for (int k = 0; k < manager::ObservationLayout::kCueFeatures; ++k) {
    if (obs.at(layout.cue_offset() + k) > 0.5) cue = k;
  }
  const int buckets = static_cast<int>(distance_edges.size()) + 1;
  return (segment * buckets + bucket) * manager::ObservationLayout::kCueFeatures + cue;
}

}  // namespace imdp::rl
