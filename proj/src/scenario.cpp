#include "imdp/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "imdp/driver.hpp"
#include "imdp/errors.hpp"
#include "imdp/path_conflicts.hpp"

namespace imdp::exp {

std::string to_string(Task t) {
  switch (t) {
    case Task::Straight:
      return "straight";
    case Task::Left:
      return "left";
    case Task::Right:
      return "right";
  }
  return "?";
}

Task task_from_string(const std::string& s) {
  if (s == "straight") return Task::Straight;
  if (s == "left") return Task::Left;
  if (s == "right") return Task::Right;
  throw ConfigError("unknown task '" + s + "'");
}

namespace {

constexpr sim::Rgb kRed{255, 0, 0};
constexpr sim::Rgb kBlue{0, 0, 255};
constexpr sim::Rgb kWhite{255, 255, 255};

std::vector<BackgroundRole> roles_for(Task task) {
  using sim::Edge;
  using sim::Maneuver;
  switch (task) {
    case Task::Straight:
      return {{{Edge::West, Maneuver::Straight, std::nullopt}, true, kRed},
              {{Edge::East, Maneuver::Right, std::nullopt}, false, kBlue}};
    case Task::Left:
      return {{{Edge::North, Maneuver::Straight, std::nullopt}, true, kRed},
              {{Edge::East, Maneuver::Straight, std::nullopt}, false, kBlue}};
    case Task::Right:
      return {{{Edge::West, Maneuver::Straight, std::nullopt}, true, kRed},
              {{Edge::North, Maneuver::Left, std::nullopt}, false, kBlue}};
  }
  return {};
}

sim::Maneuver team_maneuver(Task task) {
  switch (task) {
    case Task::Left:
      return sim::Maneuver::Left;
    case Task::Right:
      return sim::Maneuver::Right;
    case Task::Straight:
      break;
  }
  return sim::Maneuver::Straight;
}

// Last arc at which the path is still inside the intersection box.
double box_exit_arc(const sim::Path& path, sim::Vec2 center, double half) {
  const double step = 0.05;
  double last = -1.0;
  for (double s = 0.0; s <= path.length(); s += step) {
    const sim::Vec2 p = path.position_at(s);
    if (std::abs(p.x - center.x) <= half + 1e-9 && std::abs(p.y - center.y) <= half + 1e-9) last = s;
  }
  if (last < 0.0) throw NoSuchRoute("team path never enters the intersection box");
  return last;
}

// Arrival time at `target` given per-step arcs recorded every dt.
double arrival_time(const std::vector<double>& arcs, double target, double dt) {
  if (arcs.empty()) return std::numeric_limits<double>::infinity();
  if (arcs.front() >= target) return 0.0;
  for (std::size_t k = 1; k < arcs.size(); ++k) {
    if (arcs[k] >= target) {
      const double frac = (target - arcs[k - 1]) / (arcs[k] - arcs[k - 1]);
      return (static_cast<double>(k - 1) + frac) * dt;
    }
  }
  return std::numeric_limits<double>::infinity();
}

std::vector<double> free_drive(const sim::Path& path, double arc, double speed, double target, const WorldConfig& w,
                               double max_time) {
  auto p = std::make_shared<const sim::Path>(path);
  sim::Vehicle v = sim::make_vehicle(0, p, arc, speed, path.length());
  std::vector<double> arcs{v.arc};
  const int steps = static_cast<int>(std::ceil(max_time / w.dt));
  for (int k = 0; k < steps && v.arc < target; ++k) {
    const double a = driver::select_action(v, std::nullopt, driver::governing_segment(v, w.dt, w.driver), w.driver);
    v = sim::step_vehicle(v, a, w.dt);
    arcs.push_back(v.arc);
    if (v.speed == 0.0 && a <= 0.0) break;
  }
  return arcs;
}

}  // namespace

double Scenario::free_drive_time(const sim::Path& path, double arc, double speed, double target_arc,
                                 const WorldConfig& world, double max_time) {
  return arrival_time(free_drive(path, arc, speed, target_arc, world, max_time), target_arc, world.dt);
}

Scenario::Scenario(Task task, const WorldConfig& world, const SpawnConfig& spawn)
    : task_(task), world_(world), spawn_(spawn), roles_(roles_for(task)) {
  auto map = std::make_shared<const sim::RoadMap>(
      sim::build_map({{sim::RoadCell(sim::CellKind::FourWay)}}, world.cell_size, world.lanes));
  team_path_ = std::make_shared<const sim::Path>(
      sim::extract_lane_path(*map, {sim::Edge::South, team_maneuver(task), std::nullopt}));
  for (const auto& role : roles_) bg_paths_.push_back(std::make_shared<const sim::Path>(sim::extract_lane_path(*map, role.route)));

  const double half = 0.5 * world.cell_size;
  const double box = world.lanes.box_half;
  team_start_ = half - box - world.team_start_gap;
  team_goal_ = std::min(team_path_->length(), box_exit_arc(*team_path_, map->cell_center(0, 0), box) + world.goal_past_box);

  std::vector<sim::Vehicle> vehicles;
  vehicles.push_back(sim::make_vehicle(0, team_path_, team_start_, world.team_speed, team_goal_, kWhite));
  for (std::size_t i = 0; i < roles_.size(); ++i) {
    vehicles.push_back(sim::make_vehicle(static_cast<int>(i) + 1, bg_paths_[i], 0.0, 0.0, bg_paths_[i]->length(),
                                         roles_[i].color));
  }
  base_ = sim::make_world(std::move(vehicles), map, world.dt, world.horizon, world.goal_threshold, 0);

  team_arrival_ = free_drive(*team_path_, team_start_, world.team_speed, team_path_->length(), world, 120.0);
  for (std::size_t i = 0; i < roles_.size(); ++i) {
    const auto regions = base_.conflicts->between(*bg_paths_[i], *team_path_);
    std::optional<sim::ConflictRegion> pick;
    for (const auto& r : regions) {
      if (r.other_point < team_start_) continue;
      if (!pick || r.other_point < pick->other_point) pick = r;
    }
    if (!pick) throw NoSuchRoute("background route " + std::to_string(i + 1) + " never meets the team path");
    timing_points_.emplace_back(pick->self_point, pick->other_point);
  }
}

sim::WorldState Scenario::spawn(std::uint64_t episode_seed) const {
  Rng rng(derive_seed(episode_seed, 3, 0));
  sim::WorldState w = base_;
  for (std::size_t i = 0; i < roles_.size(); ++i) {
    const auto& range = roles_[i].forced ? spawn_.conflict_offset : spawn_.follow_offset;
    const double offset = rng.uniform(range.first, range.second);
    const double speed = rng.uniform(spawn_.speed.first, spawn_.speed.second);
    const auto [bg_point, team_point] = timing_points_[i];
    const double target = arrival_time(team_arrival_, team_point, world_.dt) + offset;
    const sim::Path& path = *bg_paths_[i];

    // Free-drive arrival time falls as the start moves forward; bisect for the
    // start arc that meets the target, clamped to the path.
    double lo = 0.0;
    double hi = bg_point;
    if (free_drive_time(path, lo, speed, bg_point, world_) <= target) {
      hi = lo;
    } else if (free_drive_time(path, hi, speed, bg_point, world_) >= target) {
      lo = hi;
    } else {
      for (int it = 0; it < 50; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (free_drive_time(path, mid, speed, bg_point, world_) > target) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
    }
    sim::Vehicle& v = w.vehicles[i + 1];
    v = sim::make_vehicle(v.id, v.path, 0.5 * (lo + hi), speed, v.goal_arc, v.color, v.half_extents);
  }
  return w;
}

}  // namespace imdp::exp
