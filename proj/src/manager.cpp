#include "imdp/manager.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "imdp/errors.hpp"
#include "imdp/path_conflicts.hpp"

namespace imdp::manager {

std::string to_string(CueKind k) {
  switch (k) {
    case CueKind::Velocity:
      return "velocity";
    case CueKind::Proximity:
      return "proximity";
    case CueKind::Collision:
      return "collision";
    case CueKind::TerminalGoal:
      return "terminal-goal";
    case CueKind::TerminalHorizon:
      return "terminal-horizon";
  }
  return "?";
}

double Constraints::speed_threshold(sim::SegmentKind kind) const {
  double base = max_straight;
  if (kind == sim::SegmentKind::LeftTurn) base = max_left;
  if (kind == sim::SegmentKind::RightTurn) base = max_right;
  return base * (1.0 + speed_grace);
}

void CueCounts::add(CueKind k) {
  switch (k) {
    case CueKind::Velocity:
      ++velocity;
      break;
    case CueKind::Proximity:
      ++proximity;
      break;
    case CueKind::Collision:
      ++collision;
      break;
    default:
      break;
  }
}

void IMDPSpec::validate() const {
  if (roster.size() < 2) throw std::invalid_argument("agent roster needs at least two agents");
  const auto& c = constraints;
  if (!(c.max_straight > 0.0 && c.max_left > 0.0 && c.max_right > 0.0 && c.min_proximity > 0.0) ||
      !(c.speed_grace >= 0.0)) {
    throw std::invalid_argument("constraint thresholds must be positive");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
  const auto& r = reward;
  if (!(r.c_velocity >= 0.0 && r.c_proximity >= 0.0 && r.c_collision >= 0.0)) {
    throw std::invalid_argument("cue costs must be non-negative");
  }
  if (!(r.delta > 0.0)) throw std::invalid_argument("reward scale delta must be positive");
}

bool ProximityLatch::enter(int other) { return active_.insert(other).second; }

namespace {

bool shares_path(const sim::WorldState& world, const sim::Vehicle& team, const sim::Vehicle& other) {
  if (world.conflicts) return !world.conflicts->between(*team.path, *other.path).empty();
  return !sim::compute_path_conflicts(*team.path, *other.path, 0.45 * world.map->lanes().lane_width).empty();
}

// Proximity violations against path-conflicting vehicles, ascending id.
std::vector<std::pair<int, double>> proximity_violations(const sim::WorldState& world, const Constraints& c) {
  std::vector<std::pair<int, double>> out;
  const sim::Vehicle& team = world.team();
  for (const auto& v : world.vehicles) {
    if (v.id == team.id || !v.active) continue;
    const double d = geom::distance(team.position(), v.position());
    if (d < c.min_proximity && shares_path(world, team, v)) out.emplace_back(v.id, d);
  }
  return out;
}

bool involves_team(const sim::WorldState& world) {
  const auto& col = world.events.collision;
  return col && (col->first == world.team_id || col->second == world.team_id);
}

}  // namespace

bool violates(const sim::WorldState& world, const Constraints& c) {
  const sim::Vehicle& team = world.team();
  if (team.speed > c.speed_threshold(team.segment())) return true;
  if (world.events.collision) return true;
  return !proximity_violations(world, c).empty();
}

int beta(const sim::WorldState& world, const IMDPSpec& spec, bool delegated_this_step) {
  if (world.terminal()) return 1;
  return violates(world, spec.constraints) && !delegated_this_step ? 1 : 0;
}

bool is_violation(CueKind k) {
  return k == CueKind::Velocity || k == CueKind::Proximity || k == CueKind::Collision;
}

std::vector<InterventionCue> classify_cues(const sim::WorldState& world, const IMDPSpec& spec,
                                           ProximityLatch* latch) {
  std::vector<InterventionCue> cues;
  const int step = world.step_index;
  const sim::Vehicle& team = world.team();
  if (world.events.collision) {
    const auto [a, b] = *world.events.collision;
    const int other = involves_team(world) ? (a == world.team_id ? b : a) : a;
    cues.push_back({CueKind::Collision, step, 0.0, other});
  }
  if (team.speed > spec.constraints.speed_threshold(team.segment())) {
    cues.push_back({CueKind::Velocity, step, team.speed, -1});
  }
  const auto prox = proximity_violations(world, spec.constraints);
  std::set<int> violating;
  for (const auto& [id, d] : prox) {
    violating.insert(id);
    if (!latch || latch->enter(id)) cues.push_back({CueKind::Proximity, step, d, id});
  }
  if (latch) {
    for (const auto& v : world.vehicles) {
      if (!violating.contains(v.id)) latch->leave(v.id);
    }
  }
  if (world.terminal() && !world.events.collision) {
    const CueKind k = world.team_at_goal() ? CueKind::TerminalGoal : CueKind::TerminalHorizon;
    cues.push_back({k, step, 0.0, -1});
  }
  return cues;
}

double episodic_reward(sim::Outcome outcome, const CueCounts& counts, const RewardParams& params, int steps) {
  const int total = counts.total();
  double denom = 1.0;
  if (params.rho == RhoDenominator::TotalCues) {
    denom = std::max(1, total);
  } else {
    denom = std::max(1, steps);
  }
  const double weighted =
      (counts.velocity * params.c_velocity + counts.proximity * params.c_proximity +
       counts.collision * params.c_collision) /
      denom;
  const double arg = params.combine == ScaleCombine::Product ? params.delta * weighted : weighted / params.delta;
  // tanh rounds to exactly 1 for large arguments; keep the penalty below 1.
  const double penalty = std::min(std::tanh(arg), std::nextafter(1.0, 0.0));
  const double bonus = params.goal_bonus && outcome == sim::Outcome::Goal ? 1.0 : 0.0;
  return bonus - penalty;
}

ObservationLayout observation_layout(const sim::WorldState& world, const IMDPSpec& spec) {
  return {static_cast<int>(world.vehicles.size()) - 1, static_cast<int>(spec.roster.size())};
}

namespace {

constexpr double kDistanceScale = 100.0;
constexpr double kSpeedScale = 10.0;

double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }

// Next conflict region on the team path that neither vehicle has cleared.
std::optional<sim::ConflictRegion> next_conflict(const sim::WorldState& world, const sim::Vehicle& team,
                                                 const sim::Vehicle& other) {
  const auto regions = world.conflicts ? world.conflicts->between(*team.path, *other.path)
                                       : sim::compute_path_conflicts(*team.path, *other.path, 1.8);
  std::optional<sim::ConflictRegion> best;
  for (const auto& r : regions) {
    if (team.arc > r.self_exit || other.arc > r.other_point + (r.self_exit - r.self_point)) continue;
    if (!best || r.self_point < best->self_point) best = r;
  }
  return best;
}

}  // namespace

Observation manager_observation(const sim::WorldState& world, const IMDPSpec& spec, LastCue last_cue) {
  const ObservationLayout layout = observation_layout(world, spec);
  Observation obs(layout.dimension(), 0.0);
  const sim::Vehicle& team = world.team();
  const double len = team.path->length();
  obs[0] = len > 0.0 ? std::clamp(team.arc / len, 0.0, 1.0) : 0.0;
  obs[1] = team.speed / spec.constraints.max_straight;
  obs[2 + static_cast<int>(team.segment())] = 1.0;

  int i = 0;
  for (const auto& v : world.vehicles) {
    if (v.id == team.id) continue;
    const int o = layout.background_offset(i++);
    obs[o + 0] = kSentinel;
    obs[o + 1] = kSentinel;
    obs[o + 3] = kSentinel;
    if (!v.active) continue;
    if (const auto r = next_conflict(world, team, v)) {
      obs[o + 0] = clamp_unit((r->self_point - team.arc) / kDistanceScale);
      obs[o + 1] = clamp_unit((r->other_point - v.arc) / kDistanceScale);
      obs[o + 4] = r->kind == sim::ConflictKind::Crossing ? 1.0 : 0.0;
      obs[o + 5] = r->kind == sim::ConflictKind::Crossing ? 0.0 : 1.0;
    }
    const geom::Vec2 rel = v.position() - team.position();
    const double dist = geom::norm(rel);
    if (dist > 0.0) {
      const geom::Vec2 vel_t{team.speed * std::cos(team.heading), team.speed * std::sin(team.heading)};
      const geom::Vec2 vel_o{v.speed * std::cos(v.heading), v.speed * std::sin(v.heading)};
      obs[o + 2] = clamp_unit(-geom::dot(rel, vel_o - vel_t) / dist / kSpeedScale);
    }
    driver::DriverParams params;
    params.min_safe = spec.constraints.min_proximity;
    if (const auto it = driver::time_to_interaction(team, v, params.min_safe, world.conflicts.get(), params)) {
      obs[o + 3] = std::min(1.0, it->time_to_interaction / params.lookahead);
    }
  }

  for (std::size_t k = 0; k < spec.roster.size(); ++k) {
    const int o = layout.agent_offset(static_cast<int>(k));
    const auto& ctx = spec.roster[k].context;
    obs[o + perception::context_kind(ctx)] = 1.0;
    obs[o + 5] = perception::context_severity(ctx);
  }
  obs[layout.cue_offset() + static_cast<int>(last_cue)] = 1.0;
  return obs;
}

ManagerPolicy solo_policy(int agent) {
  return [agent](const Observation&, Rng&) { return agent; };
}

ManagerPolicy random_policy(int agents) {
  return [agents](const Observation&, Rng& rng) { return static_cast<int>(rng.index(agents)); };
}

EpisodeStreams::EpisodeStreams(std::uint64_t episode_seed, std::size_t roster_size)
    : manager(derive_seed(episode_seed, 1, 0)), background(derive_seed(episode_seed, 2, 0)) {
  agents.reserve(roster_size);
  for (std::size_t k = 0; k < roster_size; ++k) agents.emplace_back(derive_seed(episode_seed, 100, k));
}

namespace {

LastCue dominant(const std::vector<InterventionCue>& cues) {
  LastCue out = LastCue::None;
  for (const auto& c : cues) {
    if (c.kind == CueKind::Collision) return LastCue::Collision;
    if (c.kind == CueKind::Proximity) out = LastCue::Proximity;
    if (c.kind == CueKind::Velocity && out == LastCue::None) out = LastCue::Velocity;
  }
  return out;
}

}  // namespace

EpisodeTrace run_episode(const sim::WorldState& world0, const IMDPSpec& spec, const ManagerPolicy& policy,
                         const std::vector<driver::DriverAgent>& team, const driver::Traffic& traffic,
                         EpisodeStreams& streams) {
  if (team.size() != spec.roster.size() || streams.agents.size() != team.size()) {
    throw RosterMismatch("team has " + std::to_string(team.size()) + " agents but the roster has " +
                         std::to_string(spec.roster.size()));
  }
  const int n_agents = static_cast<int>(team.size());
  auto choose = [&](const Observation& obs) {
    const int d = policy(obs, streams.manager);
    if (d < 0 || d >= n_agents) throw UnknownAgent("manager chose agent " + std::to_string(d));
    return d;
  };

  EpisodeTrace trace;
  sim::WorldState world = world0;
  ProximityLatch latch;
  // Violations already present at the start are not cues of the team's making.
  classify_cues(world, spec, &latch);

  Observation obs = manager_observation(world, spec, LastCue::None);
  int agent = choose(obs);
  trace.delegations.push_back(agent);
  ManagerTransition pending{obs, agent, 0.0, {}, false, world.step_index, 0};

  while (!world.terminal()) {
    const auto accels = driver::plan_step(world, team[agent], traffic, streams.agents[agent], streams.background);
    world = sim::step_world(world, accels);
    const auto cues = classify_cues(world, spec, &latch);
    bool fired = false;
    for (const auto& c : cues) {
      if (is_violation(c.kind)) {
        trace.cue_counts.add(c.kind);
        fired = true;
      }
    }
    if (fired) ++trace.interventions;
    if (!world.terminal() && !fired) continue;

    Observation next = manager_observation(world, spec, dominant(cues));
    pending.next_observation = next;
    pending.next_step = world.step_index;
    pending.done = world.terminal();
    trace.transitions.push_back(std::move(pending));
    if (world.terminal()) break;
    agent = choose(next);
    trace.delegations.push_back(agent);
    pending = ManagerTransition{std::move(next), agent, 0.0, {}, false, world.step_index, 0};
  }

  trace.outcome = *world.outcome();
  trace.steps = world.step_index;
  trace.reward = episodic_reward(trace.outcome, trace.cue_counts, spec.reward, trace.steps);
  for (auto& t : trace.transitions) t.reward = trace.reward;
  return trace;
}

}  // namespace imdp::manager
