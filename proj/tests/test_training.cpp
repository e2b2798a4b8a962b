#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "imdp/config.hpp"
#include "imdp/experiments.hpp"
#include "imdp/results_io.hpp"
#include "imdp/scenario.hpp"
#include "imdp/training.hpp"

using namespace imdp;
using namespace imdp::exp;

namespace {

ExperimentConfig tiny(const std::string& mode) {
  ExperimentConfig cfg = default_config();
  cfg.training.mode = mode;
  cfg.training.sac.pretrain_episodes_per_agent = 10;
  cfg.training.sac.random_episodes = 20;
  cfg.training.sac.train_episodes = 120;
  cfg.training.sac.hidden = {32, 32};
  cfg.training.sac.batch_size = 32;
  return cfg;
}

const TeamConfig& team_named(const ExperimentConfig& cfg, const std::string& name) {
  for (const auto& t : cfg.teams) {
    if (t.name == name) return t;
  }
  throw std::runtime_error("no team " + name);
}

struct Fixture {
  ExperimentConfig cfg;
  Scenario scenario;
  Condition cond;

  Fixture(ExperimentConfig c, Task task, const std::string& team)
      : cfg(std::move(c)), scenario(task, cfg.world, cfg.spawn), cond(make_condition(cfg, scenario, team_named(cfg, team))) {}
};

bool same(const std::vector<EpisodeSummary>& a, const std::vector<EpisodeSummary>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].outcome != b[i].outcome || a[i].steps != b[i].steps || a[i].interventions != b[i].interventions ||
        a[i].reward != b[i].reward)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("untrained manager is deterministic and checkpoints") {
  ExperimentConfig cfg = tiny("sac");
  cfg.training.sac.train_episodes = 0;
  Fixture f(cfg, Task::Left, "night-a");
  const auto a = train_condition(f.cfg, f.cond, "night-a");
  const auto b = train_condition(f.cfg, f.cond, "night-a");
  const std::string hash = config_hash(f.cfg);
  CHECK(a.checkpoint(hash) == b.checkpoint(hash));
  CHECK(a.learning_curve.size() == 2 * 10 + 20);

  auto broken = a.checkpoint(hash);
  broken["format"] = "pickle";
  CHECK_THROWS_AS(rl::TrainedManager::from_checkpoint(broken, f.cfg.training.sac), std::invalid_argument);
}

TEST_CASE("sac checkpoint round trip preserves the policy") {
  Fixture f(tiny("sac"), Task::Left, "night-a");
  const auto trained = train_condition(f.cfg, f.cond, "night-a");
  const auto j = trained.checkpoint(config_hash(f.cfg));
  const auto restored = rl::TrainedManager::from_checkpoint(nlohmann::json::parse(j.dump()), f.cfg.training.sac);
  CHECK(restored.checkpoint(config_hash(f.cfg)) == j);
  const auto ea = evaluate_serial(f.cond, trained.policy(), f.cfg.seed, "night-a", 40);
  const auto eb = evaluate_serial(f.cond, restored.policy(), f.cfg.seed, "night-a", 40);
  CHECK(same(ea, eb));
}

TEST_CASE("tabular training is deterministic") {
  Fixture f(tiny("tabular"), Task::Left, "night-fog");
  const auto a = train_condition(f.cfg, f.cond, "night-fog");
  const auto b = train_condition(f.cfg, f.cond, "night-fog");
  CHECK(a.mode == "tabular");
  CHECK_FALSE(a.sac.has_value());
  CHECK(a.checkpoint("h") == b.checkpoint("h"));
  CHECK(a.q.rows() == a.discretizer.states());
  const auto restored = rl::TrainedManager::from_checkpoint(a.checkpoint("h"), f.cfg.training.sac);
  CHECK(same(evaluate_serial(f.cond, a.policy(), 7, "x", 30), evaluate_serial(f.cond, restored.policy(), 7, "x", 30)));
}

TEST_CASE("a small budget learns to hand control to the AI when the human is distracted") {
  for (const std::string mode : {"sac", "tabular"}) {
    Fixture f(tiny(mode), Task::Left, "distracted");
    const auto trained = train_condition(f.cfg, f.cond, "distracted");
    const auto eps = evaluate_serial(f.cond, trained.policy(), f.cfg.seed, "distracted", 100);
    const auto ai = evaluate_serial(f.cond, manager::solo_policy(1), f.cfg.seed, "distracted", 100);
    INFO(mode);
    CHECK(success_rate(eps) >= success_rate(ai) - 0.05);
    CHECK(mean_interventions(eps) <= mean_interventions(ai) + 0.5);
  }
}
