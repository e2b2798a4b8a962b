#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "imdp/config.hpp"
#include "imdp/sim_world.hpp"

namespace imdp::exp {

enum class Task { Straight, Left, Right };
std::string to_string(Task t);
/// Throws ConfigError for unknown names.
Task task_from_string(const std::string& s);

struct BackgroundRole {
  sim::Route route;
  /// Timed against the team's arrival with the conflict offset (true) or the
  /// follow offset (false).
  bool forced = false;
  sim::Rgb color;
};

/// Team approaches a single four-way intersection from the south and
/// performs the task maneuver. Two background vehicles are timed against the
/// team's free-drive schedule: one forces a conflict (crossing, or merging
/// for the right turn), the other arrives at its merge point later.
class Scenario {
 public:
  Scenario(Task task, const WorldConfig& world, const SpawnConfig& spawn);

  Task task() const { return task_; }
  const sim::WorldState& base() const { return base_; }
  const std::vector<BackgroundRole>& roles() const { return roles_; }
  double team_start_arc() const { return team_start_; }
  double team_goal_arc() const { return team_goal_; }

  /// World for one episode; jitter is drawn from a stream derived from
  /// `episode_seed`.
  sim::WorldState spawn(std::uint64_t episode_seed) const;

  /// Free-drive time (no other vehicles) for a vehicle starting at `arc` with
  /// `speed` on `path` to reach `target_arc`; infinity if it never does
  /// within `max_time`.
  static double free_drive_time(const sim::Path& path, double arc, double speed, double target_arc,
                                const WorldConfig& world, double max_time = 60.0);

 private:
  Task task_;
  WorldConfig world_;
  SpawnConfig spawn_;
  std::vector<BackgroundRole> roles_;
  std::shared_ptr<const sim::Path> team_path_;
  std::vector<std::shared_ptr<const sim::Path>> bg_paths_;
  /// Per background vehicle: its own arc and the team arc at the timed point.
  std::vector<std::pair<double, double>> timing_points_;
  std::vector<double> team_arrival_;
  double team_start_ = 0.0;
  double team_goal_ = 0.0;
  sim::WorldState base_;
};

}  // namespace imdp::exp
