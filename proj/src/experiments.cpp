#include "imdp/experiments.hpp"

#include <charconv>
#include <memory>

#include "imdp/errors.hpp"
#include "imdp/results_io.hpp"

namespace imdp::exp {

EpisodeSummary summarize(const manager::EpisodeTrace& trace) {
  EpisodeSummary s;
  s.outcome = trace.outcome;
  s.steps = trace.steps;
  s.interventions = trace.interventions;
  s.delegations = static_cast<int>(trace.delegations.size());
  s.reward = trace.reward;
  for (int d : trace.delegations) {
    if (d != trace.delegations.front()) s.single_agent = false;
  }
  return s;
}

double success_rate(std::span<const EpisodeSummary> episodes) {
  if (episodes.empty()) throw EmptyTraceSet("success_rate of an empty trace set");
  std::size_t goals = 0;
  for (const auto& e : episodes) goals += e.outcome == sim::Outcome::Goal;
  return static_cast<double>(goals) / static_cast<double>(episodes.size());
}

double mean_interventions(std::span<const EpisodeSummary> episodes) {
  if (episodes.empty()) throw EmptyTraceSet("mean_interventions of an empty trace set");
  long total = 0;
  for (const auto& e : episodes) total += e.interventions;
  return static_cast<double>(total) / static_cast<double>(episodes.size());
}

ConditionResult aggregate(std::span<const EpisodeSummary> episodes, const std::string& task,
                          const std::string& team, const std::string& mode, const std::string& config_hash) {
  ConditionResult r;
  r.condition_id = task + "/" + team + "/" + mode;
  r.task = task;
  r.team = team;
  r.mode = mode;
  r.n_g = success_rate(episodes);
  r.mean_interventions = mean_interventions(episodes);
  r.episodes = static_cast<int>(episodes.size());
  long steps = 0;
  for (const auto& e : episodes) {
    r.goals += e.outcome == sim::Outcome::Goal;
    r.collisions += e.outcome == sim::Outcome::Collision;
    r.timeouts += e.outcome == sim::Outcome::Horizon;
    steps += e.steps;
  }
  r.mean_length = static_cast<double>(steps) / static_cast<double>(episodes.size());
  r.config_hash = config_hash;
  return r;
}

Condition make_condition(const ExperimentConfig& cfg, const Scenario& scenario, const TeamConfig& team) {
  Condition c;
  c.scenario = &scenario;
  c.team = make_team(team);
  c.spec.roster = c.team;
  c.spec.constraints = cfg.constraints;
  c.spec.reward = cfg.reward;
  c.spec.gamma = cfg.training.sac.gamma;
  c.spec.validate();
  c.traffic.params = cfg.world.driver;
  return c;
}

std::uint64_t eval_episode_seed(std::uint64_t master, const std::string& task, const std::string& team, int k) {
  return derive_seed(master, fnv1a("eval/" + task + "/" + team), static_cast<std::uint64_t>(k));
}

std::uint64_t train_seed(std::uint64_t master, const std::string& task, const std::string& team) {
  return derive_seed(master, fnv1a("train/" + task + "/" + team), 0);
}

ModeSpec parse_mode(const std::string& mode, int team_size) {
  ModeSpec m;
  if (mode == "random") {
    m.kind = ModeSpec::Kind::Random;
  } else if (mode == "trained") {
    m.kind = ModeSpec::Kind::Trained;
  } else if (mode.starts_with("solo:")) {
    m.kind = ModeSpec::Kind::Solo;
    const std::string idx = mode.substr(5);
    const auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), m.agent);
    if (ec != std::errc{} || ptr != idx.data() + idx.size() || idx.empty()) {
      throw ConfigError("bad mode '" + mode + "'");
    }
    if (m.agent < 0 || m.agent >= team_size) throw ConfigError("mode '" + mode + "' names a missing agent");
  } else {
    throw ConfigError("unknown mode '" + mode + "'");
  }
  return m;
}

namespace {

manager::ManagerPolicy baseline_policy(const ModeSpec& m, int team_size) {
  if (m.kind == ModeSpec::Kind::Solo) return manager::solo_policy(m.agent);
  return manager::random_policy(team_size);
}

}  // namespace

rl::TrainedManager train_condition(const ExperimentConfig& cfg, const Condition& cond, const std::string& team_name) {
  const Scenario& scenario = *cond.scenario;
  const rl::EnvFactory env = [&scenario](std::uint64_t s) { return scenario.spawn(s); };
  return rl::train_manager(env, cond.team, cond.spec, cond.traffic, cfg.training,
                           train_seed(cfg.seed, to_string(scenario.task()), team_name));
}

ConditionResult run_baseline(const ExperimentConfig& cfg, const std::string& task, const TeamConfig& team,
                             const std::string& mode) {
  cfg.validate();
  const Scenario scenario(task_from_string(task), cfg.world, cfg.spawn);
  const Condition cond = make_condition(cfg, scenario, team);
  const ModeSpec m = parse_mode(mode, static_cast<int>(cond.team.size()));
  if (m.kind == ModeSpec::Kind::Trained) throw ConfigError("run_baseline takes a solo or random mode");
  const auto episodes = evaluate_parallel(cond, baseline_policy(m, static_cast<int>(cond.team.size())), cfg.seed,
                                          team.name, cfg.evaluation.episodes, cfg.evaluation.jobs);
  return aggregate(episodes, task, team.name, mode, config_hash(cfg));
}

ResultsTable run_suite(const ExperimentConfig& cfg, const SuiteHooks& hooks) {
  cfg.validate();
  const std::string hash = config_hash(cfg);
  ResultsTable table;
  for (const auto& task : cfg.tasks) {
    const Scenario scenario(task_from_string(task), cfg.world, cfg.spawn);
    for (const auto& team : cfg.teams) {
      const Condition cond = make_condition(cfg, scenario, team);
      const int n = static_cast<int>(cond.team.size());
      std::unique_ptr<rl::TrainedManager> trained;
      for (const auto& mode : cfg.modes) {
        const ModeSpec m = parse_mode(mode, n);
        manager::ManagerPolicy policy;
        if (m.kind == ModeSpec::Kind::Trained) {
          if (!trained) {
            if (hooks.log) hooks.log("training " + task + "/" + team.name);
            trained = std::make_unique<rl::TrainedManager>(train_condition(cfg, cond, team.name));
            if (hooks.on_trained) hooks.on_trained(task, team.name, *trained);
          }
          policy = trained->policy();
        } else {
          policy = baseline_policy(m, n);
        }
        const auto episodes =
            evaluate_parallel(cond, policy, cfg.seed, team.name, cfg.evaluation.episodes, cfg.evaluation.jobs);
        table.push_back(aggregate(episodes, task, team.name, mode, hash));
        if (hooks.log) {
          const auto& r = table.back();
          hooks.log(r.condition_id + " n_g=" + std::to_string(r.n_g) +
                    " n_beta=" + std::to_string(r.mean_interventions));
        }
      }
    }
  }
  return table;
}

}  // namespace imdp::exp
