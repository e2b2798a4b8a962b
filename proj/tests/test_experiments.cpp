#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "imdp/config.hpp"
#include "imdp/errors.hpp"
#include "imdp/experiments.hpp"
#include "imdp/results_io.hpp"
#include "imdp/scenario.hpp"

using namespace imdp;
using namespace imdp::exp;

namespace {

std::vector<EpisodeSummary> summaries(int goals, int collisions, int timeouts) {
  std::vector<EpisodeSummary> out;
  for (int i = 0; i < goals; ++i) out.push_back({sim::Outcome::Goal, 60, 1, 2, true, 1.0});
  for (int i = 0; i < collisions; ++i) out.push_back({sim::Outcome::Collision, 40, 2, 2, true, -1.0});
  for (int i = 0; i < timeouts; ++i) out.push_back({sim::Outcome::Horizon, 300, 0, 1, true, 0.0});
  return out;
}

ExperimentConfig small_config() {
  ExperimentConfig cfg = default_config();
  cfg.tasks = {"left"};
  cfg.teams = {cfg.teams[1]};  // night-a
  cfg.modes = {"solo:0", "solo:1", "random"};
  cfg.evaluation.episodes = 40;
  return cfg;
}

const TeamConfig& team_named(const ExperimentConfig& cfg, const std::string& name) {
  for (const auto& t : cfg.teams) {
    if (t.name == name) return t;
  }
  throw std::runtime_error("no team " + name);
}

}  // namespace

TEST_CASE("success rate and mean interventions") {
  const auto a = summaries(200, 50, 0);
  CHECK(success_rate(a) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(success_rate(summaries(0, 10, 0)) == 0.0);
  CHECK(success_rate(summaries(10, 0, 0)) == 1.0);
  std::vector<EpisodeSummary> two(2);
  two[0].interventions = 2;
  two[1].interventions = 4;
  CHECK(mean_interventions(two) == 3.0);
  CHECK(mean_interventions(summaries(0, 0, 5)) == 0.0);
  CHECK_THROWS_AS(success_rate({}), EmptyTraceSet);
  CHECK_THROWS_AS(mean_interventions({}), EmptyTraceSet);
}

TEST_CASE("aggregate invariants") {
  const auto eps = summaries(7, 3, 2);
  const auto r = aggregate(eps, "left", "night-a", "random", "abc");
  CHECK(r.condition_id == "left/night-a/random");
  CHECK(r.goals + r.collisions + r.timeouts == r.episodes);
  CHECK(r.n_g * r.episodes == doctest::Approx(std::round(r.n_g * r.episodes)));
  CHECK(r.mean_length == doctest::Approx((7 * 60 + 3 * 40 + 2 * 300) / 12.0));
  // 250 episodes keep the 95% binomial half-width within 0.07.
  CHECK(1.96 * std::sqrt(0.25 / 250.0) <= 0.07);
  CHECK(default_config().evaluation.episodes == 250);
}

TEST_CASE("mode parsing") {
  CHECK(parse_mode("solo:1", 2).kind == ModeSpec::Kind::Solo);
  CHECK(parse_mode("solo:1", 2).agent == 1);
  CHECK(parse_mode("random", 2).kind == ModeSpec::Kind::Random);
  CHECK(parse_mode("trained", 2).kind == ModeSpec::Kind::Trained);
  CHECK_THROWS_AS(parse_mode("solo:2", 2), ConfigError);
  CHECK_THROWS_AS(parse_mode("solo:", 2), ConfigError);
  CHECK_THROWS_AS(parse_mode("solo:x", 2), ConfigError);
  CHECK_THROWS_AS(parse_mode("greedy", 2), ConfigError);
}

TEST_CASE("config round trip and validation") {
  const ExperimentConfig cfg = default_config();
  CHECK(cfg.seed == 7);
  CHECK(cfg.teams.size() == 9);
  const auto j = to_json(cfg);
  CHECK(to_json(config_from_json(j)) == j);
  CHECK(config_from_json(nlohmann::json::object()).seed == ExperimentConfig{}.seed);

  auto bad = j;
  bad["surprise"] = 1;
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
  bad = j;
  bad["world"]["surprise"] = 1;
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
  bad = j;
  bad["schema_version"] = 2;
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
  bad = j;
  bad["evaluation"]["episodes"] = 0;
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
  bad = j;
  bad["evaluation"]["episodes"] = "many";
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
  bad = j;
  bad["tasks"] = {"uturn"};
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
  bad = j;
  bad["modes"] = {"solo:5"};
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
  bad = j;
  bad["teams"][1]["agents"][0]["context"]["decay"]["y_tau"] = 1.0;
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);

  const auto dir = std::filesystem::temp_directory_path() / "imdp_test_config";
  std::filesystem::create_directories(dir);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), IoError);
  write_text(dir / "broken.json", "{ not json");
  CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
  write_text(dir / "good.json", j.dump(2));
  CHECK(to_json(load_config(dir / "good.json")) == j);

  const auto team = make_team(cfg.teams[0]);
  REQUIRE(team.size() == 2);
  CHECK(team[1].action_set == driver::kActionSet);
}

TEST_CASE("config hash is canonical") {
  const ExperimentConfig cfg = default_config();
  const std::string h = config_hash(cfg);
  CHECK(h.size() == 64);
  CHECK(h.find_first_not_of("0123456789abcdef") == std::string::npos);
  // Key order in the source document does not matter.
  const std::string reordered = R"({"seed": 7, "schema_version": 1})";
  const auto a = config_from_json(nlohmann::json::parse(reordered));
  const auto b = config_from_json(nlohmann::json::parse(R"({"schema_version": 1, "seed": 7})"));
  CHECK(config_hash(a) == config_hash(b));
  ExperimentConfig changed = cfg;
  changed.seed = 8;
  CHECK(config_hash(changed) != h);
  ExperimentConfig threads = cfg;
  threads.evaluation.jobs = 4;
  CHECK(config_hash(threads) == h);
  CHECK(config_hash(config_from_json(to_json(cfg))) == h);
}

TEST_CASE("results csv round trip and schema") {
  ResultsTable t;
  ConditionResult r;
  r.condition_id = "left/night-a/random";
  r.task = "left";
  r.team = "night-a";
  r.mode = "random";
  r.n_g = 0.1 + 0.2;
  r.mean_interventions = 1.0 / 3.0;
  r.episodes = 250;
  r.goals = 75;
  r.collisions = 170;
  r.timeouts = 5;
  r.mean_length = 123.456789012345678;
  r.config_hash = "deadbeef";
  t.push_back(r);
  r.team = "odd, \"quoted\" team";
  r.n_g = 5e-324;
  t.push_back(r);

  const std::string csv = results_to_csv(t);
  CHECK(results_from_csv(csv) == t);
  const std::string header = csv.substr(0, csv.find('\n'));
  CHECK(header ==
        "condition_id,task,team,mode,n_g,mean_interventions,episodes,goals,collisions,timeouts,mean_length,"
        "config_hash");
  CHECK_THROWS_AS(results_from_csv("a,b\n"), IoError);
  CHECK_THROWS_AS(results_from_csv(header + "\nx,y\n"), IoError);

  const std::string longform = results_to_long_csv(t);
  CHECK(longform.substr(0, longform.find('\n')) == "condition_id,task,team,mode,metric,value");
  CHECK(std::count(longform.begin(), longform.end(), '\n') == 1 + 6 * 2);

  const auto side = sidecar(default_config(), t, "suite");
  CHECK(side["config_hash"] == config_hash(default_config()));
  CHECK(side["results"].size() == 2);
  CHECK(side["columns"].get<std::vector<std::string>>() == result_columns());
  CHECK_THROWS_AS(read_text("/nonexistent/imdp/file.csv"), IoError);
  CHECK_THROWS_AS(write_text("/proc/imdp/file.csv", "x"), IoError);
}

TEST_CASE("serial and parallel evaluation agree") {
  const ExperimentConfig cfg = small_config();
  const Scenario scenario(Task::Left, cfg.world, cfg.spawn);
  const Condition cond = make_condition(cfg, scenario, cfg.teams[0]);
  const auto policy = manager::random_policy(2);
  const auto serial = evaluate_serial(cond, policy, cfg.seed, "night-a", 30);
  for (int jobs : {1, 2, 3}) {
    const auto par = evaluate_parallel(cond, policy, cfg.seed, "night-a", 30, jobs);
    REQUIRE(par.size() == serial.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
      CHECK(par[i].outcome == serial[i].outcome);
      CHECK(par[i].steps == serial[i].steps);
      CHECK(par[i].interventions == serial[i].interventions);
      CHECK(par[i].reward == serial[i].reward);
    }
  }
  CHECK(eval_episode_seed(7, "left", "a", 0) != eval_episode_seed(7, "left", "b", 0));
  CHECK(eval_episode_seed(7, "left", "a", 0) != eval_episode_seed(7, "left", "a", 1));
  CHECK(eval_episode_seed(7, "left", "a", 3) == eval_episode_seed(7, "left", "a", 3));
}

TEST_CASE("baselines") {
  ExperimentConfig cfg = default_config();
  cfg.evaluation.episodes = 60;
  const auto ai = run_baseline(cfg, "straight", team_named(cfg, "distracted"), "solo:1");
  CHECK(ai.n_g == 1.0);
  CHECK(ai.collisions == 0);
  const auto human = run_baseline(cfg, "straight", team_named(cfg, "distracted"), "solo:0");
  CHECK(human.n_g <= 0.05);
  const auto random = run_baseline(cfg, "straight", team_named(cfg, "distracted"), "random");
  CHECK(random.n_g > human.n_g);
  CHECK(random.n_g < ai.n_g);
  CHECK_THROWS_AS(run_baseline(cfg, "straight", team_named(cfg, "distracted"), "trained"), ConfigError);
}

TEST_CASE("suite determinism and trace properties") {
  const ExperimentConfig cfg = small_config();
  const ResultsTable a = run_suite(cfg);
  const ResultsTable b = run_suite(cfg);
  CHECK(a == b);
  CHECK(results_to_csv(a) == results_to_csv(b));
  REQUIRE(a.size() == 3);
  for (const auto& r : a) {
    CHECK(r.n_g >= 0.0);
    CHECK(r.n_g <= 1.0);
    CHECK(r.goals + r.collisions + r.timeouts == r.episodes);
    CHECK(r.config_hash == config_hash(cfg));
  }

  ExperimentConfig none = cfg;
  none.tasks.clear();
  CHECK(run_suite(none).empty());

  // Solo traces never change agent; collisions end no later than the longest goal.
  const Scenario scenario(Task::Left, cfg.world, cfg.spawn);
  const Condition cond = make_condition(cfg, scenario, cfg.teams[0]);
  for (int k = 0; k < 2; ++k) {
    const auto eps = evaluate_serial(cond, manager::solo_policy(k), cfg.seed, "night-a", 40);
    for (const auto& e : eps) CHECK(e.single_agent);
  }
  const auto eps = evaluate_serial(cond, manager::random_policy(2), cfg.seed, "night-a", 80);
  int max_goal = 0;
  int max_collision = 0;
  for (const auto& e : eps) {
    if (e.outcome == sim::Outcome::Goal) max_goal = std::max(max_goal, e.steps);
    if (e.outcome == sim::Outcome::Collision) max_collision = std::max(max_collision, e.steps);
  }
  CHECK(max_goal > 0);
  CHECK(max_collision <= max_goal);
}

TEST_CASE("scenario spawns are seeded") {
  const ExperimentConfig cfg = default_config();
  for (auto task : {Task::Straight, Task::Left, Task::Right}) {
    const Scenario s(task, cfg.world, cfg.spawn);
    const auto a = s.spawn(11);
    const auto b = s.spawn(11);
    const auto c = s.spawn(12);
    REQUIRE(a.vehicles.size() == 3);
    bool differs = false;
    for (std::size_t i = 0; i < a.vehicles.size(); ++i) {
      CHECK(a.vehicles[i].arc == b.vehicles[i].arc);
      CHECK(a.vehicles[i].speed == b.vehicles[i].speed);
      differs = differs || a.vehicles[i].arc != c.vehicles[i].arc || a.vehicles[i].speed != c.vehicles[i].speed;
    }
    CHECK(differs);
    CHECK_FALSE(a.terminal());
  }
  CHECK(task_from_string("left") == Task::Left);
  CHECK_THROWS_AS(task_from_string("north"), ConfigError);
}
