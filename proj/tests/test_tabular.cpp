#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "imdp/errors.hpp"
#include "imdp/replay.hpp"
#include "imdp/tabular.hpp"

using namespace imdp;
using namespace imdp::rl;

namespace {

// Root state 0 with agent 0 going to a +1 goal and agent 1 to a -1 failure.
DiscreteIMDP goal_or_fail() {
  DiscreteIMDP m(3, 2, 0.9);
  m.terminal = {false, true, true};
  m.prob(0, 0, 1) = 1.0;
  m.reward(0, 0, 1) = 1.0;
  m.prob(0, 1, 2) = 1.0;
  m.reward(0, 1, 2) = -1.0;
  for (int s : {1, 2}) {
    for (int d = 0; d < 2; ++d) m.prob(s, d, s) = 1.0;
  }
  return m;
}

DiscreteIMDP random_imdp(Rng& rng, int states, int agents, double gamma) {
  DiscreteIMDP m(states, agents, gamma);
  m.terminal.assign(states, false);
  m.terminal[states - 1] = true;
  for (int s = 0; s < states; ++s) {
    for (int d = 0; d < agents; ++d) {
      double sum = 0.0;
      for (int s2 = 0; s2 < states; ++s2) sum += (m.prob(s, d, s2) = rng.uniform());
      for (int s2 = 0; s2 < states; ++s2) {
        m.prob(s, d, s2) /= sum;
        m.reward(s, d, s2) = rng.uniform(-1.0, 1.0);
      }
    }
  }
  return m;
}

// Independent Bellman evaluation written directly from the definition.
double bellman(const DiscreteIMDP& m, const QTable& q, int s, int d) {
  if (m.terminal[s]) return 0.0;
  double v = 0.0;
  for (int s2 = 0; s2 < m.states; ++s2) {
    const double next = m.terminal[s2] ? 0.0 : q.row(s2).maxCoeff();
    v += m.prob(s, d, s2) * (m.reward(s, d, s2) + m.gamma * next);
  }
  return v;
}

}  // namespace

TEST_CASE("value iteration hand cases") {
  SUBCASE("one-step problem") {
    DiscreteIMDP m(2, 1, 0.5);
    m.terminal = {false, true};
    m.prob(0, 0, 1) = 1.0;
    m.reward(0, 0, 1) = 0.7;
    m.prob(1, 0, 1) = 1.0;
    const auto r = value_iteration(m, 1e-12);
    CHECK(r.V(0) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(r.V(1) == 0.0);
  }
  SUBCASE("goal versus failure") {
    const auto r = value_iteration(goal_or_fail(), 1e-12);
    CHECK(r.Q(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.Q(0, 1) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(r.V(0) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("symmetric agents tie") {
    DiscreteIMDP m(3, 2, 0.9);
    m.terminal = {false, false, true};
    for (int d = 0; d < 2; ++d) {
      m.prob(0, d, 1) = 0.5;
      m.prob(0, d, 2) = 0.5;
      m.reward(0, d, 2) = 1.0;
      m.prob(1, d, 2) = 1.0;
      m.reward(1, d, 2) = 0.25;
      m.prob(2, d, 2) = 1.0;
    }
    const auto r = value_iteration(m, 1e-12);
    CHECK(r.Q(0, 0) == r.Q(0, 1));
    CHECK(r.V(0) == doctest::Approx(0.5 + 0.5 * 0.9 * 0.25).epsilon(1e-12));
  }
  SUBCASE("bad inputs") {
    DiscreteIMDP m = goal_or_fail();
    CHECK_THROWS_AS(value_iteration(m, 0.0), std::invalid_argument);
    m.gamma = 1.0;
    CHECK_THROWS_AS(value_iteration(m, 1e-6), std::invalid_argument);
    m = goal_or_fail();
    m.prob(0, 0, 1) = 0.5;
    CHECK_THROWS_AS(value_iteration(m, 1e-6), NonStochasticTransitions);
  }
}

TEST_CASE("bellman operator matches the definition and contracts") {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const DiscreteIMDP m = random_imdp(rng, 2 + static_cast<int>(rng.index(6)), 2 + static_cast<int>(rng.index(2)),
                                       rng.uniform(0.1, 0.95));
    QTable q1(m.states, m.agents);
    QTable q2(m.states, m.agents);
    for (int s = 0; s < m.states; ++s) {
      for (int d = 0; d < m.agents; ++d) {
        q1(s, d) = rng.uniform(-5, 5);
        q2(s, d) = rng.uniform(-5, 5);
      }
    }
    const QTable h1 = bellman_operator(m, q1);
    const QTable h2 = bellman_operator(m, q2);
    for (int s = 0; s < m.states; ++s) {
      for (int d = 0; d < m.agents; ++d) CHECK(std::abs(h1(s, d) - bellman(m, q1, s, d)) < 1e-12);
    }
    CHECK(sup_norm(h1, h2) <= m.gamma * sup_norm(q1, q2) + 1e-12);

    const auto vi = value_iteration(m, 1e-10);
    CHECK(sup_norm(bellman_operator(m, vi.Q), vi.Q) < 1e-10);
  }
}

TEST_CASE("tabular q update") {
  QTable q = QTable::Zero(2, 2);
  q(1, 0) = 3.0;
  tabular_q_update(q, {0, 0, 1.0, 1, false}, 0.0, 0.9);
  CHECK(q(0, 0) == 0.0);
  tabular_q_update(q, {0, 0, 1.0, 1, true}, 1.0, 0.9);
  CHECK(q(0, 0) == 1.0);
  tabular_q_update(q, {0, 1, 1.0, 1, false}, 0.5, 0.9);
  CHECK(q(0, 1) == doctest::Approx(0.5 * (1.0 + 0.9 * 3.0)).epsilon(1e-15));
}

TEST_CASE("q-learning converges to the value-iteration fixed point") {
  SUBCASE("two-agent goal or failure") {
    const DiscreteIMDP m = goal_or_fail();
    const auto vi = value_iteration(m, 1e-12);
    QLearningConfig cfg;
    cfg.seed = 3;
    const auto ql = q_learning(m, cfg, vi.Q);
    CHECK(ql.error < 1e-3);
    CHECK(sup_norm(ql.Q, vi.Q) < 1e-3);
  }
  SUBCASE("random discrete IMDP") {
    Rng rng(31);
    const DiscreteIMDP m = random_imdp(rng, 4, 2, 0.7);
    const auto vi = value_iteration(m, 1e-12);
    QLearningConfig cfg;
    cfg.seed = 5;
    const auto ql = q_learning(m, cfg, vi.Q);
    CHECK(ql.error < 1e-3);
    CHECK(sup_norm(ql.Q, vi.Q) < 1e-3);
    for (int s = 0; s < m.states; ++s) {
      if (m.terminal[s]) continue;
      Eigen::Index a = 0;
      Eigen::Index b = 0;
      ql.Q.row(s).maxCoeff(&a);
      vi.Q.row(s).maxCoeff(&b);
      if (std::abs(vi.Q(s, 0) - vi.Q(s, 1)) > 1e-2) CHECK(a == b);
    }
  }
  SUBCASE("bit-for-bit reproducible") {
    const DiscreteIMDP m = goal_or_fail();
    QLearningConfig cfg;
    cfg.max_updates = 20000;
    cfg.seed = 8;
    CHECK(q_learning(m, cfg).Q == q_learning(m, cfg).Q);
  }
}

TEST_CASE("estimated discrete IMDP from transitions") {
  const DiscreteIMDP truth = goal_or_fail();
  std::vector<TabularTransition> data;
  for (int i = 0; i < 30; ++i) {
    data.push_back({0, 0, 1.0, 1, true});
    data.push_back({0, 1, -1.0, 2, true});
  }
  const DiscreteIMDP est = estimate_discrete_imdp(data, 3, 2, 0.9);
  CHECK_NOTHROW(est.validate());
  CHECK(est.terminal[1]);
  CHECK(est.terminal[2]);
  CHECK_FALSE(est.terminal[0]);
  const auto a = value_iteration(est, 1e-12);
  const auto b = value_iteration(truth, 1e-12);
  CHECK(sup_norm(a.Q, b.Q) < 1e-12);
}

TEST_CASE("sum tree") {
  SumTree t(5);
  CHECK(t.total() == 0.0);
  t.set(0, 1.0);
  t.set(3, 2.0);
  t.set(4, 0.5);
  CHECK(t.total() == 3.5);
  CHECK(t.min() == 0.5);
  CHECK(t.find(0.0) == 0);
  CHECK(t.find(0.99) == 0);
  CHECK(t.find(1.0) == 3);
  CHECK(t.find(2.99) == 3);
  CHECK(t.find(3.2) == 4);
  t.set(4, 4.0);
  CHECK(t.min() == 1.0);
}

TEST_CASE("prioritized replay sampling") {
  Rng rng(2);
  SUBCASE("uniform priorities") {
    PrioritizedReplay<int> buf(8);
    for (int i = 0; i < 8; ++i) buf.insert(i, 1.0);
    std::vector<int> hits(8, 0);
    for (int k = 0; k < 2000; ++k) {
      const auto batch = buf.sample(8, 0.4, rng);
      for (std::size_t j = 0; j < batch.ids.size(); ++j) {
        ++hits[batch.ids[j]];
        CHECK(batch.weights[j] == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
    for (int h : hits) CHECK(std::abs(h / 16000.0 - 0.125) < 0.01);
  }
  SUBCASE("priorities 3 and 1 with alpha 1") {
    PrioritizedReplay<int> buf(2, 1.0);
    buf.insert(0, 3.0);
    buf.insert(1, 1.0);
    int first = 0;
    const int n = 10000;
    for (int k = 0; k < n; ++k) first += buf.sample(1, 0.5, rng).ids[0] == 0;
    CHECK(std::abs(first / double(n) - 0.75) < 0.02);
    const auto batch = buf.sample(64, 1.0, rng);
    for (std::size_t j = 0; j < batch.ids.size(); ++j) {
      CHECK(batch.weights[j] > 0.0);
      CHECK(batch.weights[j] <= 1.0);
      // w_i = (N P_i)^-1 / max_k (N P_k)^-1.
      CHECK(batch.weights[j] == doctest::Approx(batch.ids[j] == 0 ? 1.0 / 3.0 : 1.0).epsilon(1e-12));
    }
  }
  SUBCASE("errors, overwrite and updates") {
    PrioritizedReplay<int> buf(3);
    CHECK_THROWS_AS(buf.sample(1, 0.4, rng), EmptyBuffer);
    CHECK_THROWS(buf.insert(1, 0.0));
    CHECK_THROWS_AS(PrioritizedReplay<int>(0), std::invalid_argument);
    for (int i = 0; i < 5; ++i) buf.insert(i);
    CHECK(buf.size() == 3);
    CHECK(buf.at(0) == 3);
    CHECK(buf.at(1) == 4);
    CHECK(buf.at(2) == 2);
    buf.update({0, 2}, {5.0, 2.0});
    CHECK(buf.priority(0) == doctest::Approx(5.0));
    CHECK(buf.priority(2) == doctest::Approx(2.0));
    const auto fresh = buf.insert(9);
    CHECK(buf.priority(fresh) == doctest::Approx(5.0));
    CHECK_THROWS(buf.update({0}, {-1.0}));
    CHECK_THROWS(buf.update({7}, {1.0}));
  }
}

TEST_CASE("state discretizer") {
  manager::ObservationLayout layout{2, 2};
  StateDiscretizer disc{layout};
  manager::Observation obs(layout.dimension(), 0.0);
  obs[2] = 1.0;
  obs[layout.background_offset(0)] = 1.0;
  obs[layout.background_offset(1)] = 1.0;
  obs[layout.cue_offset()] = 1.0;
  std::set<int> seen;
  for (int seg = 0; seg < 3; ++seg) {
    for (double dist : {0.05, 0.2, 0.5, 0.9}) {
      for (int cue = 0; cue < 4; ++cue) {
        manager::Observation o = obs;
        o[2] = o[3] = o[4] = 0.0;
        o[2 + seg] = 1.0;
        o[layout.background_offset(1)] = dist;
        for (int c = 0; c < 4; ++c) o[layout.cue_offset() + c] = c == cue ? 1.0 : 0.0;
        const int s = disc(o);
        CHECK(s >= 0);
        CHECK(s < disc.states());
        seen.insert(s);
      }
    }
  }
  CHECK(static_cast<int>(seen.size()) == disc.states());
}
