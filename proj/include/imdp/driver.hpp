#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "imdp/path_conflicts.hpp"
#include "imdp/perception.hpp"
#include "imdp/rng.hpp"
#include "imdp/sim_world.hpp"

namespace imdp::driver {

inline constexpr double kAccelerate = 1.0;
inline constexpr double kNoOp = 0.0;
inline constexpr double kDecelerate = -1.8;
inline constexpr std::array<double, 3> kActionSet{kAccelerate, kNoOp, kDecelerate};

struct DriverParams {
  double max_speed = 9.5;
  double left_turn_speed = 3.5;
  double right_turn_speed = 2.5;
  /// Dead band around the desired speed that suppresses accelerate/brake chatter.
  double speed_band = 0.05;
  double min_safe = 10.0;
  /// Constant-speed projection horizon in seconds.
  double lookahead = 8.0;
  /// Distance past a crossing point after which a vehicle has cleared it.
  double crossing_clearance = 3.9;
  /// Extra distance kept when braking ahead of a turn.
  double turn_margin = 6.0;
};

/// A delegable driver: a perception context plus the shared rule set.
struct DriverAgent {
  std::string label;
  perception::PerceptionContext context;
  std::array<double, 3> action_set = kActionSet;
};

enum class InteractionKind { Crossing, Merging, Following };

struct Interaction {
  int other_id = -1;
  InteractionKind kind = InteractionKind::Crossing;
  double time_to_interaction = 0.0;
  /// Arc on the observer's own path where the conflict sits.
  double conflict_arc = 0.0;
};

double desired_speed(sim::SegmentKind kind, const DriverParams& params = {});

/// Segment kind whose speed limit governs right now: the current one, or an
/// upcoming turn once the remaining distance only just allows braking for it.
sim::SegmentKind governing_segment(const sim::Vehicle& v, double dt, const DriverParams& params = {});

/// Constant-speed projection of both vehicles along their paths; a vehicle
/// above the speed limit of an upcoming turn is projected braking for it.
std::optional<Interaction> time_to_interaction(const sim::Vehicle& self, const sim::Vehicle& other, double min_safe,
                                               const sim::PathConflictTable* conflicts = nullptr,
                                               const DriverParams& params = {});

/// Directed "considers interacting" relation gathered before any vehicle acts.
class DeferenceGraph {
 public:
  void add(int from, int to) { edges_.insert({from, to}); }
  bool defers(int from, int to) const { return edges_.contains({from, to}); }
  bool empty() const { return edges_.empty(); }

 private:
  std::set<std::pair<int, int>> edges_;
};

/// Drops candidates that already defer to `self_id` when `self_id` holds
/// priority (lower id), so two vehicles never wait on each other, then picks
/// the earliest interaction (ties to the lower id).
std::optional<Interaction> earliest_interaction(int self_id, const std::vector<Interaction>& candidates,
                                                const DeferenceGraph& deference);

std::optional<Interaction> find_interacting(const sim::Vehicle& self, const std::vector<sim::Vehicle>& detected,
                                            double min_safe, const DeferenceGraph& deference,
                                            const sim::PathConflictTable* conflicts = nullptr,
                                            const DriverParams& params = {});

double select_action(const sim::Vehicle& self, const std::optional<Interaction>& interaction,
                     sim::SegmentKind segment_kind, const DriverParams& params = {});

/// detect -> earliest interacting vehicle -> acceleration, for one vehicle.
double drive_step(const DriverAgent& agent, const sim::WorldState& world, int vehicle_id, Rng& rng,
                  const DeferenceGraph& deference = {}, const DriverParams& params = {});

/// Rule-based traffic around a team vehicle. Background vehicles share the
/// rules but ignore the team vehicle unless it leads them on a shared lane.
struct Traffic {
  perception::PerceptionContext background_context = perception::BaseRange{};
  DriverParams params;
};

/// Accelerations for every active vehicle for one synchronous step. All
/// detections are drawn first (ascending id), then the deference graph is
/// formed and actions are chosen in ascending id order. The team vehicle's
/// draws come from `team_rng`, every other vehicle's from `background_rng`.
std::map<int, double> plan_step(const sim::WorldState& world, const DriverAgent& team_agent, const Traffic& traffic,
                                Rng& team_rng, Rng& background_rng);

}  // namespace imdp::driver
