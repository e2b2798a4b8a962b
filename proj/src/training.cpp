#include "imdp/training.hpp"

#include <algorithm>
#include <stdexcept>

#include "imdp/replay.hpp"

namespace imdp::rl {

namespace {

int argmax_row(const QTable& q, int s) {
  int best = 0;
  for (int d = 1; d < q.cols(); ++d) {
    if (q(s, d) > q(s, best)) best = d;
  }
  return best;
}

}  // namespace

int TrainedManager::act(const manager::Observation& obs) const {
  if (sac) return sac->greedy(obs);
  return argmax_row(q, discretizer(obs));
}

manager::ManagerPolicy TrainedManager::policy() const {
  return [this](const manager::Observation& obs, Rng&) { return act(obs); };
}

nlohmann::json TrainedManager::checkpoint(const std::string& config_hash) const {
  nlohmann::json j{{"format", "imdp-manager"}, {"version", 1}, {"mode", mode}, {"config_hash", config_hash}};
  if (sac) {
    j["sac"] = sac->to_json();
  } else {
    std::vector<std::vector<double>> rows(q.rows(), std::vector<double>(q.cols()));
    for (int s = 0; s < q.rows(); ++s) {
      for (int d = 0; d < q.cols(); ++d) rows[s][d] = q(s, d);
    }
    j["q"] = rows;
    j["layout"] = {{"background", discretizer.layout.background}, {"agents", discretizer.layout.agents}};
    j["distance_edges"] = discretizer.distance_edges;
  }
  return j;
}

TrainedManager TrainedManager::from_checkpoint(const nlohmann::json& j, const SacConfig& cfg) {
  if (j.value("format", std::string{}) != "imdp-manager" || j.value("version", 0) != 1) {
    throw std::invalid_argument("not a manager checkpoint");
  }
  TrainedManager m;
  m.mode = j.at("mode").get<std::string>();
  if (m.mode == "sac") {
    m.sac = SacAgent::from_json(j.at("sac"), cfg);
  } else {
    const auto rows = j.at("q").get<std::vector<std::vector<double>>>();
    m.q = QTable::Zero(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t s = 0; s < rows.size(); ++s) {
      for (std::size_t d = 0; d < rows[s].size(); ++d) m.q(s, d) = rows[s][d];
    }
    m.discretizer.layout.background = j.at("layout").at("background").get<int>();
    m.discretizer.layout.agents = j.at("layout").at("agents").get<int>();
    m.discretizer.distance_edges = j.at("distance_edges").get<std::vector<double>>();
  }
  return m;
}

TrainedManager train_manager(const EnvFactory& env, const std::vector<driver::DriverAgent>& team,
                             const manager::IMDPSpec& spec, const driver::Traffic& traffic,
                             const exp::TrainingConfig& cfg, std::uint64_t seed) {
  spec.validate();
  cfg.sac.validate();
  if (cfg.mode != "sac" && cfg.mode != "tabular") throw std::invalid_argument("unknown training mode " + cfg.mode);
  const int agents = static_cast<int>(team.size());

  TrainedManager out;
  out.mode = cfg.mode;
  std::uint64_t episode = 0;
  auto run = [&](const manager::ManagerPolicy& policy) {
    const std::uint64_t es = derive_seed(seed, 0x65706973u, episode++);
    const sim::WorldState world = env(es);
    manager::EpisodeStreams streams(es, team.size());
    manager::EpisodeTrace trace = manager::run_episode(world, spec, policy, team, traffic, streams);
    out.learning_curve.push_back(trace.reward);
    return trace;
  };

  const sim::WorldState probe = env(derive_seed(seed, 0x70726f62u, 0));
  const manager::ObservationLayout layout = manager::observation_layout(probe, spec);
  Rng rng(derive_seed(seed, 0x6e657473u, 0));

  // Phases 1 and 2 fill the same experience pool in both modes.
  std::vector<manager::ManagerTransition> warmup;
  for (int d = 0; d < agents; ++d) {
    for (int e = 0; e < cfg.sac.pretrain_episodes_per_agent; ++e) {
      auto trace = run(manager::solo_policy(d));
      for (auto& t : trace.transitions) warmup.push_back(std::move(t));
    }
  }
  for (int e = 0; e < cfg.sac.random_episodes; ++e) {
    auto trace = run(manager::random_policy(agents));
    for (auto& t : trace.transitions) warmup.push_back(std::move(t));
  }

  if (cfg.mode == "tabular") {
    out.discretizer.layout = layout;
    out.q = QTable::Zero(out.discretizer.states(), agents);
    const double gamma = spec.gamma;
    auto learn = [&](const manager::ManagerTransition& t) {
      const TabularTransition tt{out.discretizer(t.observation), t.action, t.reward,
                                 out.discretizer(t.next_observation), t.done};
      tabular_q_update(out.q, tt, cfg.tabular_alpha, gamma);
    };
    for (const auto& t : warmup) learn(t);
    const double eps = cfg.tabular_epsilon;
    const manager::ManagerPolicy explore = [&](const manager::Observation& obs, Rng& r) {
      if (r.uniform() < eps) return static_cast<int>(r.index(agents));
      return argmax_row(out.q, out.discretizer(obs));
    };
    for (int e = 0; e < cfg.sac.train_episodes; ++e) {
      const auto trace = run(explore);
      for (const auto& t : trace.transitions) learn(t);
    }
    return out;
  }

  SacAgent agent(layout.dimension(), agents, cfg.sac, rng);
  PrioritizedReplay<manager::ManagerTransition> buffer(cfg.sac.buffer_capacity, cfg.sac.per_alpha);
  for (auto& t : warmup) buffer.insert(std::move(t));

  const manager::ManagerPolicy explore = [&agent](const manager::Observation& obs, Rng& r) {
    return agent.sample(obs, r);
  };
  const int total = cfg.sac.train_episodes;
  for (int e = 0; e < total; ++e) {
    auto trace = run(explore);
    for (auto& t : trace.transitions) buffer.insert(std::move(t));
    if (buffer.size() == 0) continue;
    const double frac = total > 1 ? static_cast<double>(e) / (total - 1) : 1.0;
    const double beta = cfg.sac.per_beta_start + frac * (cfg.sac.per_beta_end - cfg.sac.per_beta_start);
    for (int u = 0; u < cfg.sac.updates_per_episode; ++u) {
      const SampleBatch sample = buffer.sample(static_cast<std::size_t>(cfg.sac.batch_size), beta, rng);
      std::vector<const manager::ManagerTransition*> items;
      for (std::size_t id : sample.ids) items.push_back(&buffer.at(id));
      const UpdateStats stats = agent.update(make_batch(items, sample.weights));
      std::vector<double> priorities;
      for (double td : stats.td_errors) priorities.push_back(td + 1e-6);
      buffer.update(sample.ids, priorities);
    }
  }
  out.sac = std::move(agent);
  return out;
}

}  // namespace imdp::rl
