#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "imdp/geometry.hpp"

namespace imdp::sim {

using geom::Vec2;

enum class CellKind { Straight, TIntersection, FourWay };
enum class Edge { South = 0, East = 1, North = 2, West = 3 };
enum class LaneDirection { In, Out };
enum class SegmentKind { Straight = 0, LeftTurn = 1, RightTurn = 2 };
enum class Maneuver { Left, Right, Straight };

std::string to_string(Edge e);
std::string to_string(SegmentKind k);
std::string to_string(Maneuver m);
Maneuver maneuver_from_string(const std::string& s);
Edge edge_from_string(const std::string& s);

/// A lane crossing a cell edge. `slot` is the sign of the lane's offset from
/// the edge midpoint along the global axis of that edge (x for North/South
/// edges, y for East/West edges); lanes sit half a lane width off the middle.
struct LaneEndpoint {
  Edge edge;
  int slot;
  LaneDirection direction;

  bool operator==(const LaneEndpoint&) const = default;
};

/// One square road tile. Orientation counts counter-clockwise quarter turns
/// applied to the canonical layout: Straight runs east-west, TIntersection
/// is open to the south, east and west. Traffic drives on the right.
class RoadCell {
 public:
  RoadCell(CellKind kind, int orientation = 0);

  CellKind kind() const { return kind_; }
  int orientation() const { return orientation_; }
  const std::vector<LaneEndpoint>& lane_endpoints() const { return endpoints_; }

  std::vector<LaneEndpoint> endpoints_on(Edge e) const;
  bool has_endpoint(Edge e, LaneDirection dir) const;

 private:
  CellKind kind_;
  int orientation_;
  std::vector<LaneEndpoint> endpoints_;
};

struct LaneGeometry {
  double lane_width = 4.0;
  /// Half size of the square conflict box in the middle of an intersection.
  double box_half = 4.0;
  /// Chords used to approximate a quarter-circle turn.
  int arc_segments = 24;
};

/// Grid of road cells; row 0 is the southern row, column 0 the western one.
/// Cell (r, c) covers [c*size, (c+1)*size] x [r*size, (r+1)*size].
class RoadMap {
 public:
  RoadMap(std::vector<std::vector<RoadCell>> cells, double cell_size, LaneGeometry lanes);

  int rows() const { return static_cast<int>(cells_.size()); }
  int cols() const { return static_cast<int>(cells_.front().size()); }
  const RoadCell& cell(int row, int col) const { return cells_[row][col]; }
  double cell_size() const { return cell_size_; }
  const LaneGeometry& lanes() const { return lanes_; }
  Vec2 cell_center(int row, int col) const;

  /// First intersection cell in row-major order, if any.
  std::optional<std::pair<int, int>> primary_intersection() const;

 private:
  std::vector<std::vector<RoadCell>> cells_;
  double cell_size_;
  LaneGeometry lanes_;
};

/// Validates lane compatibility between every pair of adjacent cells.
/// Throws IncompatibleCells naming the offending shared edge.
RoadMap build_map(std::vector<std::vector<RoadCell>> cells, double cell_size, LaneGeometry lanes = {});

/// Polyline the vehicle is locked to, parameterised by arc length.
class Path {
 public:
  Path(std::vector<Vec2> waypoints, std::vector<SegmentKind> kinds);

  const std::vector<Vec2>& waypoints() const { return waypoints_; }
  const std::vector<double>& cumulative() const { return cumulative_; }
  const std::vector<SegmentKind>& kinds() const { return kinds_; }
  double length() const { return cumulative_.back(); }

  std::size_t interval_at(double arc) const;
  Vec2 position_at(double arc) const;
  double heading_at(double arc) const;
  SegmentKind kind_at(double arc) const;

  struct Projection {
    double arc;
    double distance;
  };
  Projection project(Vec2 p) const;

  /// Start of the next interval after `arc` whose kind differs from Straight,
  /// together with its kind; nullopt when the rest of the path is straight.
  std::optional<std::pair<double, SegmentKind>> next_turn_after(double arc) const;

 private:
  std::vector<Vec2> waypoints_;
  std::vector<double> cumulative_;
  std::vector<SegmentKind> kinds_;
};

struct Route {
  Edge approach;
  Maneuver maneuver;
  /// Intersection cell; defaults to the map's primary intersection.
  std::optional<std::pair<int, int>> cell;
};

/// Lane path entering the intersection cell from `route.approach`, performing
/// the maneuver and continuing straight through neighbouring cells to the
/// map boundary. Throws NoSuchRoute when the lanes do not exist.
Path extract_lane_path(const RoadMap& map, const Route& route);

struct Rgb {
  int r = 0;
  int g = 0;
  int b = 0;
  bool operator==(const Rgb&) const = default;
};

struct Vehicle {
  int id = 0;
  std::shared_ptr<const Path> path;
  double arc = 0.0;
  double speed = 0.0;
  double heading = 0.0;
  /// Half length along the heading, half width across it.
  Vec2 half_extents{2.4, 1.0};
  Rgb color{};
  double goal_arc = 0.0;
  /// Cleared once a background vehicle reaches its goal and leaves the map.
  bool active = true;

  Vec2 position() const { return path->position_at(arc); }
  geom::OrientedRect footprint() const;
  SegmentKind segment() const { return path->kind_at(arc); }
};

/// Places a vehicle on its path with heading matched to the path tangent.
Vehicle make_vehicle(int id, std::shared_ptr<const Path> path, double arc, double speed, double goal_arc,
                     Rgb color = {}, Vec2 half_extents = {2.4, 1.0});

/// Semi-implicit Euler along the path; speed saturates at zero and the arc
/// position at the path end.
Vehicle step_vehicle(const Vehicle& v, double accel, double dt);

bool goal_reached(const Vehicle& v, double threshold);

struct WorldEvents {
  std::optional<std::pair<int, int>> collision;
  std::set<int> goals_reached;
};

enum class Outcome { Goal, Collision, Horizon };
std::string to_string(Outcome o);

class PathConflictTable;

struct WorldState {
  std::vector<Vehicle> vehicles;  // sorted by id
  std::shared_ptr<const RoadMap> map;
  std::shared_ptr<const PathConflictTable> conflicts;
  int step_index = 0;
  double dt = 0.1;
  int horizon = 300;
  double goal_threshold = 1.0;
  int team_id = 0;
  WorldEvents events;

  const Vehicle& vehicle(int id) const;
  const Vehicle& team() const { return vehicle(team_id); }
  bool team_at_goal() const { return events.goals_reached.contains(team_id); }
  bool terminal() const;
  /// Outcome of a terminal world; nullopt while the episode is running.
  std::optional<Outcome> outcome() const;
};

/// Builds a world and precomputes the conflict geometry between every pair of
/// distinct paths carried by the vehicles.
WorldState make_world(std::vector<Vehicle> vehicles, std::shared_ptr<const RoadMap> map, double dt = 0.1,
                      int horizon = 300, double goal_threshold = 1.0, int team_id = 0);

/// Lowest-id pair of active vehicles whose footprints overlap with positive area.
std::optional<std::pair<int, int>> detect_collision(const WorldState& world);

/// Advances every active vehicle by one shared dt. Vehicles missing from
/// `accels` coast. Throws SteppingTerminated on a terminal world.
WorldState step_world(const WorldState& world, const std::map<int, double>& accels);

}  // namespace imdp::sim
