#include "imdp/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "imdp/errors.hpp"

namespace imdp::exp {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

void read_range(const json& j, const char* key, std::pair<double, double>& out, const std::string& where) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigError(where + "." + key + " must be a [lo, hi] pair");
  }
  out = {v[0].get<double>(), v[1].get<double>()};
}

json range_json(const std::pair<double, double>& r) { return json::array({r.first, r.second}); }

json driver_json(const driver::DriverParams& p) {
  return {{"max_speed", p.max_speed},
          {"left_turn_speed", p.left_turn_speed},
          {"right_turn_speed", p.right_turn_speed},
          {"speed_band", p.speed_band},
          {"min_safe", p.min_safe},
          {"lookahead", p.lookahead},
          {"crossing_clearance", p.crossing_clearance},
          {"turn_margin", p.turn_margin}};
}

driver::DriverParams driver_from_json(const json& j) {
  const std::string w = "world.driver";
  check_keys(j, {"max_speed", "left_turn_speed", "right_turn_speed", "speed_band", "min_safe", "lookahead",
                 "crossing_clearance", "turn_margin"},
             w);
  driver::DriverParams p;
  read(j, "max_speed", p.max_speed, w);
  read(j, "left_turn_speed", p.left_turn_speed, w);
  read(j, "right_turn_speed", p.right_turn_speed, w);
  read(j, "speed_band", p.speed_band, w);
  read(j, "min_safe", p.min_safe, w);
  read(j, "lookahead", p.lookahead, w);
  read(j, "crossing_clearance", p.crossing_clearance, w);
  read(j, "turn_margin", p.turn_margin, w);
  return p;
}

json world_json(const WorldConfig& w) {
  return {{"dt", w.dt},
          {"horizon", w.horizon},
          {"goal_threshold", w.goal_threshold},
          {"cell_size", w.cell_size},
          {"lane_width", w.lanes.lane_width},
          {"box_half", w.lanes.box_half},
          {"arc_segments", w.lanes.arc_segments},
          {"team_start_gap", w.team_start_gap},
          {"team_speed", w.team_speed},
          {"goal_past_box", w.goal_past_box},
          {"driver", driver_json(w.driver)}};
}

WorldConfig world_from_json(const json& j) {
  const std::string w = "world";
  check_keys(j, {"dt", "horizon", "goal_threshold", "cell_size", "lane_width", "box_half", "arc_segments",
                 "team_start_gap", "team_speed", "goal_past_box", "driver"},
             w);
  WorldConfig c;
  read(j, "dt", c.dt, w);
  read(j, "horizon", c.horizon, w);
  read(j, "goal_threshold", c.goal_threshold, w);
  read(j, "cell_size", c.cell_size, w);
  read(j, "lane_width", c.lanes.lane_width, w);
  read(j, "box_half", c.lanes.box_half, w);
  read(j, "arc_segments", c.lanes.arc_segments, w);
  read(j, "team_start_gap", c.team_start_gap, w);
  read(j, "team_speed", c.team_speed, w);
  read(j, "goal_past_box", c.goal_past_box, w);
  if (j.contains("driver")) c.driver = driver_from_json(j.at("driver"));
  return c;
}

json sac_json(const rl::SacConfig& s) {
  return {{"hidden", s.hidden},
          {"actor_lr", s.actor_lr},
          {"critic_lr", s.critic_lr},
          {"alpha_lr", s.alpha_lr},
          {"tau", s.tau},
          {"entropy_target_ratio", s.entropy_target_ratio},
          {"initial_alpha", s.initial_alpha},
          {"batch_size", s.batch_size},
          {"per_alpha", s.per_alpha},
          {"per_beta_start", s.per_beta_start},
          {"per_beta_end", s.per_beta_end},
          {"pretrain_episodes_per_agent", s.pretrain_episodes_per_agent},
          {"random_episodes", s.random_episodes},
          {"train_episodes", s.train_episodes},
          {"updates_per_episode", s.updates_per_episode},
          {"buffer_capacity", s.buffer_capacity},
          {"gamma", s.gamma}};
}

rl::SacConfig sac_from_json(const json& j) {
  const std::string w = "training.sac";
  check_keys(j, {"hidden", "actor_lr", "critic_lr", "alpha_lr", "tau", "entropy_target_ratio", "initial_alpha",
                 "batch_size", "per_alpha", "per_beta_start", "per_beta_end", "pretrain_episodes_per_agent",
                 "random_episodes", "train_episodes", "updates_per_episode", "buffer_capacity", "gamma"},
             w);
  rl::SacConfig s;
  read(j, "hidden", s.hidden, w);
  read(j, "actor_lr", s.actor_lr, w);
  read(j, "critic_lr", s.critic_lr, w);
  read(j, "alpha_lr", s.alpha_lr, w);
  read(j, "tau", s.tau, w);
  read(j, "entropy_target_ratio", s.entropy_target_ratio, w);
  read(j, "initial_alpha", s.initial_alpha, w);
  read(j, "batch_size", s.batch_size, w);
  read(j, "per_alpha", s.per_alpha, w);
  read(j, "per_beta_start", s.per_beta_start, w);
  read(j, "per_beta_end", s.per_beta_end, w);
  read(j, "pretrain_episodes_per_agent", s.pretrain_episodes_per_agent, w);
  read(j, "random_episodes", s.random_episodes, w);
  read(j, "train_episodes", s.train_episodes, w);
  read(j, "updates_per_episode", s.updates_per_episode, w);
  read(j, "buffer_capacity", s.buffer_capacity, w);
  read(j, "gamma", s.gamma, w);
  return s;
}

std::string combine_name(manager::ScaleCombine c) { return c == manager::ScaleCombine::Product ? "product" : "divisor"; }
std::string rho_name(manager::RhoDenominator r) { return r == manager::RhoDenominator::TotalCues ? "cues" : "steps"; }

}  // namespace

json to_json(const perception::PerceptionContext& ctx) {
  using namespace perception;
  return std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, BaseRange>) {
          return {{"kind", "base"}, {"range", c.range}};
        } else if constexpr (std::is_same_v<T, Night>) {
          return {{"kind", "night"},
                  {"range", c.range},
                  {"x_tau", c.decay.x_tau},
                  {"y_tau", c.decay.y_tau},
                  {"headlight_length", c.headlight.length},
                  {"headlight_half_angle", c.headlight.half_angle}};
        } else if constexpr (std::is_same_v<T, Fog>) {
          return {{"kind", "fog"}, {"range", c.range}, {"x_tau", c.decay.x_tau}, {"y_tau", c.decay.y_tau}};
        } else if constexpr (std::is_same_v<T, Distraction>) {
          return {{"kind", "distraction"},
                  {"range", c.range},
                  {"mask", {{"min", {c.mask.min.x, c.mask.min.y}}, {"max", {c.mask.max.x, c.mask.max.y}}}}};
        } else {
          return {{"kind", "color"},
                  {"range", c.range},
                  {"color", {c.blindness_color.r, c.blindness_color.g, c.blindness_color.b}},
                  {"base_fail", c.base_fail}};
        }
      },
      ctx);
}

perception::PerceptionContext context_from_json(const json& j) {
  using namespace perception;
  const std::string w = "agent.context";
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    throw ConfigError(w + " needs a string 'kind'");
  }
  const std::string kind = j.at("kind").get<std::string>();
  PerceptionContext ctx;
  if (kind == "base") {
    check_keys(j, {"kind", "range"}, w);
    BaseRange c;
    read(j, "range", c.range, w);
    ctx = c;
  } else if (kind == "night") {
    check_keys(j, {"kind", "range", "x_tau", "y_tau", "headlight_length", "headlight_half_angle"}, w);
    Night c;
    read(j, "range", c.range, w);
    read(j, "x_tau", c.decay.x_tau, w);
    read(j, "y_tau", c.decay.y_tau, w);
    read(j, "headlight_length", c.headlight.length, w);
    read(j, "headlight_half_angle", c.headlight.half_angle, w);
    ctx = c;
  } else if (kind == "fog") {
    check_keys(j, {"kind", "range", "x_tau", "y_tau"}, w);
    Fog c;
    read(j, "range", c.range, w);
    read(j, "x_tau", c.decay.x_tau, w);
    read(j, "y_tau", c.decay.y_tau, w);
    ctx = c;
  } else if (kind == "distraction") {
    check_keys(j, {"kind", "range", "mask"}, w);
    Distraction c;
    read(j, "range", c.range, w);
    c.mask = ObservationMask::forward_left(c.range);
    if (j.contains("mask")) {
      const json& m = j.at("mask");
      if (m.is_string()) {
        const auto name = m.get<std::string>();
        if (name == "full") {
          c.mask = ObservationMask::full(c.range);
        } else if (name == "forward_left") {
          c.mask = ObservationMask::forward_left(c.range);
        } else {
          throw ConfigError(w + ".mask must be 'full', 'forward_left' or a {min, max} box");
        }
      } else {
        check_keys(m, {"min", "max"}, w + ".mask");
        try {
          const auto lo = m.at("min").get<std::vector<double>>();
          const auto hi = m.at("max").get<std::vector<double>>();
          if (lo.size() != 2 || hi.size() != 2) throw ConfigError(w + ".mask corners need two coordinates");
          c.mask = {{lo[0], lo[1]}, {hi[0], hi[1]}};
        } catch (const json::exception& e) {
          throw ConfigError(w + ".mask: " + e.what());
        }
      }
    }
    ctx = c;
  } else if (kind == "color") {
    check_keys(j, {"kind", "range", "color", "base_fail"}, w);
    ColorBlind c;
    read(j, "range", c.range, w);
    read(j, "base_fail", c.base_fail, w);
    if (j.contains("color")) {
      std::vector<int> rgb;
      read(j, "color", rgb, w);
      if (rgb.size() != 3) throw ConfigError(w + ".color must be [r, g, b]");
      c.blindness_color = {rgb[0], rgb[1], rgb[2]};
    }
    ctx = c;
  } else {
    throw ConfigError("unknown perception context kind '" + kind + "'");
  }
  try {
    validate(ctx);
  } catch (const std::exception& e) {
    throw ConfigError(w + ": " + e.what());
  }
  return ctx;
}

json to_json(const ExperimentConfig& cfg) {
  json teams = json::array();
  for (const auto& t : cfg.teams) {
    json agents = json::array();
    for (const auto& a : t.agents) agents.push_back({{"label", a.label}, {"context", to_json(a.context)}});
    teams.push_back({{"name", t.name}, {"agents", agents}});
  }
  const auto& c = cfg.constraints;
  const auto& r = cfg.reward;
  return {{"schema_version", cfg.schema_version},
          {"seed", cfg.seed},
          {"tasks", cfg.tasks},
          {"world", world_json(cfg.world)},
          {"spawn",
           {{"conflict_offset", range_json(cfg.spawn.conflict_offset)},
            {"follow_offset", range_json(cfg.spawn.follow_offset)},
            {"speed", range_json(cfg.spawn.speed)}}},
          {"constraints",
           {{"max_straight", c.max_straight},
            {"max_left", c.max_left},
            {"max_right", c.max_right},
            {"speed_grace", c.speed_grace},
            {"min_proximity", c.min_proximity}}},
          {"reward",
           {{"c_velocity", r.c_velocity},
            {"c_proximity", r.c_proximity},
            {"c_collision", r.c_collision},
            {"delta", r.delta},
            {"goal_bonus", r.goal_bonus},
            {"combine", combine_name(r.combine)},
            {"rho", rho_name(r.rho)}}},
          {"training",
           {{"mode", cfg.training.mode},
            {"sac", sac_json(cfg.training.sac)},
            {"tabular_alpha", cfg.training.tabular_alpha},
            {"tabular_epsilon", cfg.training.tabular_epsilon}}},
          {"evaluation", {{"episodes", cfg.evaluation.episodes}, {"jobs", cfg.evaluation.jobs}}},
          {"teams", teams},
          {"modes", cfg.modes}};
}

ExperimentConfig config_from_json(const json& j) {
  check_keys(j, {"schema_version", "seed", "tasks", "world", "spawn", "constraints", "reward", "training",
                 "evaluation", "teams", "modes"},
             "config");
  ExperimentConfig cfg;
  read(j, "schema_version", cfg.schema_version, "config");
  if (cfg.schema_version != kSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(cfg.schema_version));
  }
  read(j, "seed", cfg.seed, "config");
  read(j, "tasks", cfg.tasks, "config");
  if (j.contains("world")) cfg.world = world_from_json(j.at("world"));
  if (j.contains("spawn")) {
    const json& s = j.at("spawn");
    check_keys(s, {"conflict_offset", "follow_offset", "speed"}, "spawn");
    read_range(s, "conflict_offset", cfg.spawn.conflict_offset, "spawn");
    read_range(s, "follow_offset", cfg.spawn.follow_offset, "spawn");
    read_range(s, "speed", cfg.spawn.speed, "spawn");
  }
  if (j.contains("constraints")) {
    const json& c = j.at("constraints");
    const std::string w = "constraints";
    check_keys(c, {"max_straight", "max_left", "max_right", "speed_grace", "min_proximity"}, w);
    read(c, "max_straight", cfg.constraints.max_straight, w);
    read(c, "max_left", cfg.constraints.max_left, w);
    read(c, "max_right", cfg.constraints.max_right, w);
    read(c, "speed_grace", cfg.constraints.speed_grace, w);
    read(c, "min_proximity", cfg.constraints.min_proximity, w);
  }
  if (j.contains("reward")) {
    const json& r = j.at("reward");
    const std::string w = "reward";
    check_keys(r, {"c_velocity", "c_proximity", "c_collision", "delta", "goal_bonus", "combine", "rho"}, w);
    read(r, "c_velocity", cfg.reward.c_velocity, w);
    read(r, "c_proximity", cfg.reward.c_proximity, w);
    read(r, "c_collision", cfg.reward.c_collision, w);
    read(r, "delta", cfg.reward.delta, w);
    read(r, "goal_bonus", cfg.reward.goal_bonus, w);
    std::string combine = combine_name(cfg.reward.combine);
    read(r, "combine", combine, w);
    if (combine == "product") {
      cfg.reward.combine = manager::ScaleCombine::Product;
    } else if (combine == "divisor") {
      cfg.reward.combine = manager::ScaleCombine::Divisor;
    } else {
      throw ConfigError("reward.combine must be 'product' or 'divisor'");
    }
    std::string rho = rho_name(cfg.reward.rho);
    read(r, "rho", rho, w);
    if (rho == "cues") {
      cfg.reward.rho = manager::RhoDenominator::TotalCues;
    } else if (rho == "steps") {
      cfg.reward.rho = manager::RhoDenominator::Steps;
    } else {
      throw ConfigError("reward.rho must be 'cues' or 'steps'");
    }
  }
  if (j.contains("training")) {
    const json& t = j.at("training");
    check_keys(t, {"mode", "sac", "tabular_alpha", "tabular_epsilon"}, "training");
    read(t, "mode", cfg.training.mode, "training");
    if (t.contains("sac")) cfg.training.sac = sac_from_json(t.at("sac"));
    read(t, "tabular_alpha", cfg.training.tabular_alpha, "training");
    read(t, "tabular_epsilon", cfg.training.tabular_epsilon, "training");
  }
  if (j.contains("evaluation")) {
    const json& e = j.at("evaluation");
    check_keys(e, {"episodes", "jobs"}, "evaluation");
    read(e, "episodes", cfg.evaluation.episodes, "evaluation");
    read(e, "jobs", cfg.evaluation.jobs, "evaluation");
  }
  if (j.contains("teams")) {
    const json& teams = j.at("teams");
    if (!teams.is_array()) throw ConfigError("teams must be an array");
    cfg.teams.clear();
    for (const auto& t : teams) {
      check_keys(t, {"name", "agents"}, "team");
      TeamConfig team;
      read(t, "name", team.name, "team");
      if (!t.contains("agents") || !t.at("agents").is_array()) throw ConfigError("team needs an agents array");
      for (const auto& a : t.at("agents")) {
        check_keys(a, {"label", "context"}, "agent");
        AgentConfig agent;
        read(a, "label", agent.label, "agent");
        if (!a.contains("context")) throw ConfigError("agent '" + agent.label + "' has no context");
        agent.context = context_from_json(a.at("context"));
        team.agents.push_back(std::move(agent));
      }
      cfg.teams.push_back(std::move(team));
    }
  }
  read(j, "modes", cfg.modes, "config");
  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  if (schema_version != kSchemaVersion) throw ConfigError("unsupported schema_version");
  for (const auto& t : tasks) {
    if (t != "straight" && t != "left" && t != "right") throw ConfigError("unknown task '" + t + "'");
  }
  if (!(world.dt > 0.0) || world.horizon <= 0 || !(world.goal_threshold > 0.0)) {
    throw ConfigError("world needs dt > 0, horizon > 0 and goal_threshold > 0");
  }
  if (!(world.cell_size > 4.0 * world.lanes.box_half) || !(world.lanes.lane_width > 0.0) ||
      !(world.lanes.box_half >= world.lanes.lane_width) || world.lanes.arc_segments < 1) {
    throw ConfigError("world lane geometry is inconsistent");
  }
  if (!(world.team_start_gap >= 0.0) || world.team_start_gap > 0.5 * world.cell_size - world.lanes.box_half) {
    throw ConfigError("world.team_start_gap must fit inside the approach");
  }
  if (!(world.goal_past_box > 0.0) || world.goal_past_box > 0.5 * world.cell_size - world.lanes.box_half) {
    throw ConfigError("world.goal_past_box must fit inside the exit");
  }
  if (!(world.team_speed >= 0.0)) throw ConfigError("world.team_speed must be non-negative");
  const auto& d = world.driver;
  if (!(d.max_speed > 0.0 && d.left_turn_speed > 0.0 && d.right_turn_speed > 0.0 && d.min_safe > 0.0 &&
        d.lookahead > 0.0 && d.speed_band >= 0.0)) {
    throw ConfigError("world.driver parameters must be positive");
  }
  const auto ordered = [](const std::pair<double, double>& r) { return r.first <= r.second; };
  if (!ordered(spawn.conflict_offset) || !ordered(spawn.follow_offset) || !ordered(spawn.speed) ||
      !(spawn.speed.first >= 0.0)) {
    throw ConfigError("spawn ranges must be ordered [lo, hi] with non-negative speeds");
  }
  if (training.mode != "sac" && training.mode != "tabular") {
    throw ConfigError("training.mode must be 'sac' or 'tabular'");
  }
  try {
    training.sac.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("training.sac: ") + e.what());
  }
  if (!(training.tabular_alpha > 0.0 && training.tabular_alpha <= 1.0) ||
      !(training.tabular_epsilon >= 0.0 && training.tabular_epsilon <= 1.0)) {
    throw ConfigError("tabular step size and exploration must lie in (0, 1] and [0, 1]");
  }
  if (evaluation.episodes < 1) throw ConfigError("evaluation.episodes must be at least 1");
  if (evaluation.jobs < 1) throw ConfigError("evaluation.jobs must be at least 1");
  std::set<std::string> names;
  for (const auto& t : teams) {
    if (t.name.empty()) throw ConfigError("team names must be non-empty");
    if (!names.insert(t.name).second) throw ConfigError("duplicate team name '" + t.name + "'");
    if (t.agents.size() < 2) throw ConfigError("team '" + t.name + "' needs at least two agents");
    for (const auto& a : t.agents) {
      try {
        perception::validate(a.context);
      } catch (const std::exception& e) {
        throw ConfigError("team '" + t.name + "': " + e.what());
      }
    }
  }
  for (const auto& m : modes) {
    if (m == "random" || m == "trained") continue;
    if (m.rfind("solo:", 0) == 0) {
      const std::string idx = m.substr(5);
      if (!idx.empty() && idx.find_first_not_of("0123456789") == std::string::npos) {
        const int k = std::stoi(idx);
        for (const auto& t : teams) {
          if (k >= static_cast<int>(t.agents.size())) {
            throw ConfigError("mode '" + m + "' exceeds the roster of team '" + t.name + "'");
          }
        }
        continue;
      }
    }
    throw ConfigError("unknown mode '" + m + "'");
  }
  manager::IMDPSpec spec;
  spec.constraints = constraints;
  spec.reward = reward;
  spec.roster.resize(2);
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " does not parse: " + e.what());
  }
  return config_from_json(j);
}

namespace {

AgentConfig agent(std::string label, perception::PerceptionContext ctx) { return {std::move(label), std::move(ctx)}; }

perception::Night night(double x_tau) {
  perception::Night n;
  n.decay.x_tau = x_tau;
  return n;
}

perception::Fog fog(double x_tau) {
  perception::Fog f;
  f.decay.x_tau = x_tau;
  return f;
}

perception::ColorBlind color(double base_fail) {
  perception::ColorBlind c;
  c.base_fail = base_fail;
  return c;
}

}  // namespace

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.seed = 7;
  perception::Distraction distracted;
  distracted.mask = perception::ObservationMask::full(distracted.range);
  const AgentConfig ai = agent("ai", perception::BaseRange{});
  // Base severities sit where the single-error drivers fail often on some
  // tasks but not all. Severity pairs: decay rates 5% (night) and 7% (fog)
  // apart, colour detection success 0.65 and 0.75.
  constexpr double kNight = 60.0;
  constexpr double kFog = 90.0;
  cfg.teams = {
      {"distracted", {agent("human", distracted), ai}},
      {"night-a", {agent("human", night(kNight)), ai}},
      {"night-b", {agent("human", night(kNight / 1.05)), ai}},
      {"fog-a", {agent("human", fog(kFog)), ai}},
      {"fog-b", {agent("human", fog(kFog / 1.07)), ai}},
      {"color-a", {agent("human", color(0.35)), ai}},
      {"color-b", {agent("human", color(0.25)), ai}},
      {"night-color", {agent("night", night(kNight)), agent("color", color(0.35))}},
      {"night-fog", {agent("night", night(kNight)), agent("fog", fog(kFog))}},
  };
  return cfg;
}

std::vector<driver::DriverAgent> make_team(const TeamConfig& team) {
  std::vector<driver::DriverAgent> out;
  for (const auto& a : team.agents) out.push_back({a.label, a.context, driver::kActionSet});
  return out;
}

}  // namespace imdp::exp
