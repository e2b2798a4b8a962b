#include "imdp/sim_world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "imdp/errors.hpp"
#include "imdp/path_conflicts.hpp"

namespace imdp::sim {

std::string to_string(Edge e) {
  switch (e) {
    case Edge::South: return "south";
    case Edge::East: return "east";
    case Edge::North: return "north";
    case Edge::West: return "west";
  }
  return "?";
}

std::string to_string(SegmentKind k) {
  switch (k) {
    case SegmentKind::Straight: return "straight";
    case SegmentKind::LeftTurn: return "left-turn";
    case SegmentKind::RightTurn: return "right-turn";
  }
  return "?";
}

std::string to_string(Maneuver m) {
  switch (m) {
    case Maneuver::Left: return "left";
    case Maneuver::Right: return "right";
    case Maneuver::Straight: return "straight";
  }
  return "?";
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::Goal: return "goal";
    case Outcome::Collision: return "collision";
    case Outcome::Horizon: return "horizon";
  }
  return "?";
}

Maneuver maneuver_from_string(const std::string& s) {
  if (s == "left") return Maneuver::Left;
  if (s == "right") return Maneuver::Right;
  if (s == "straight") return Maneuver::Straight;
  throw NoSuchRoute("unknown maneuver '" + s + "'");
}

Edge edge_from_string(const std::string& s) {
  if (s == "south") return Edge::South;
  if (s == "east") return Edge::East;
  if (s == "north") return Edge::North;
  if (s == "west") return Edge::West;
  throw NoSuchRoute("unknown edge '" + s + "'");
}

namespace {

Edge rotate_edge(Edge e, int quarter_turns) {
  return static_cast<Edge>(((static_cast<int>(e) + quarter_turns) % 4 + 4) % 4);
}

// Rotating an endpoint CCW: S->E keeps the slot sign, E->N flips it,
// N->W keeps it and W->S flips it (the edge axis changes from x to y or back).
LaneEndpoint rotate_endpoint(LaneEndpoint ep, int quarter_turns) {
  const int q = ((quarter_turns % 4) + 4) % 4;
  for (int i = 0; i < q; ++i) {
    if (ep.edge == Edge::East || ep.edge == Edge::West) ep.slot = -ep.slot;
    ep.edge = rotate_edge(ep.edge, 1);
  }
  return ep;
}

std::vector<LaneEndpoint> four_way_edge(Edge e) {
  // Right-hand traffic: on the south edge northbound traffic enters at x=+h.
  switch (e) {
    case Edge::South: return {{Edge::South, +1, LaneDirection::In}, {Edge::South, -1, LaneDirection::Out}};
    case Edge::North: return {{Edge::North, -1, LaneDirection::In}, {Edge::North, +1, LaneDirection::Out}};
    case Edge::East: return {{Edge::East, +1, LaneDirection::In}, {Edge::East, -1, LaneDirection::Out}};
    case Edge::West: return {{Edge::West, -1, LaneDirection::In}, {Edge::West, +1, LaneDirection::Out}};
  }
  return {};
}

Edge opposite(Edge e) { return rotate_edge(e, 2); }

}  // namespace

RoadCell::RoadCell(CellKind kind, int orientation) : kind_(kind), orientation_(((orientation % 4) + 4) % 4) {
  std::vector<Edge> open;
  switch (kind) {
    case CellKind::Straight: open = {Edge::West, Edge::East}; break;
    case CellKind::TIntersection: open = {Edge::South, Edge::East, Edge::West}; break;
    case CellKind::FourWay: open = {Edge::South, Edge::East, Edge::North, Edge::West}; break;
  }
  for (Edge e : open) {
    for (LaneEndpoint ep : four_way_edge(e)) endpoints_.push_back(rotate_endpoint(ep, orientation_));
  }
}

std::vector<LaneEndpoint> RoadCell::endpoints_on(Edge e) const {
  std::vector<LaneEndpoint> out;
  std::copy_if(endpoints_.begin(), endpoints_.end(), std::back_inserter(out),
               [e](const LaneEndpoint& ep) { return ep.edge == e; });
  return out;
}

bool RoadCell::has_endpoint(Edge e, LaneDirection dir) const {
  return std::any_of(endpoints_.begin(), endpoints_.end(),
                     [&](const LaneEndpoint& ep) { return ep.edge == e && ep.direction == dir; });
}

RoadMap::RoadMap(std::vector<std::vector<RoadCell>> cells, double cell_size, LaneGeometry lanes)
    : cells_(std::move(cells)), cell_size_(cell_size), lanes_(lanes) {}

Vec2 RoadMap::cell_center(int row, int col) const { return {(col + 0.5) * cell_size_, (row + 0.5) * cell_size_}; }

std::optional<std::pair<int, int>> RoadMap::primary_intersection() const {
  for (int r = 0; r < rows(); ++r) {
    for (int c = 0; c < cols(); ++c) {
      if (cells_[r][c].kind() != CellKind::Straight) return std::pair{r, c};
    }
  }
  return std::nullopt;
}

namespace {

// Lanes on a shared edge are compatible when both sides are empty, or when
// each lane of one cell meets a lane of the other at the same slot with the
// opposite direction.
bool edges_match(const std::vector<LaneEndpoint>& a, const std::vector<LaneEndpoint>& b) {
  if (a.size() != b.size()) return false;
  for (const LaneEndpoint& ea : a) {
    const bool found = std::any_of(b.begin(), b.end(), [&](const LaneEndpoint& eb) {
      return eb.slot == ea.slot && eb.direction != ea.direction;
    });
    if (!found) return false;
  }
  return true;
}

}  // namespace

RoadMap build_map(std::vector<std::vector<RoadCell>> cells, double cell_size, LaneGeometry lanes) {
  if (cells.empty() || cells.front().empty()) throw IncompatibleCells("road map grid is empty");
  for (const auto& row : cells) {
    if (row.size() != cells.front().size()) throw IncompatibleCells("road map grid is ragged");
  }
  if (!(cell_size > 2.0 * lanes.box_half) || !(lanes.box_half > 0.5 * lanes.lane_width)) {
    throw IncompatibleCells("cell size too small for the lane geometry");
  }
  const int rows = static_cast<int>(cells.size());
  const int cols = static_cast<int>(cells.front().size());
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols &&
          !edges_match(cells[r][c].endpoints_on(Edge::East), cells[r][c + 1].endpoints_on(Edge::West))) {
        throw IncompatibleCells("east edge of cell (" + std::to_string(r) + "," + std::to_string(c) + ")");
      }
      if (r + 1 < rows &&
          !edges_match(cells[r][c].endpoints_on(Edge::North), cells[r + 1][c].endpoints_on(Edge::South))) {
        throw IncompatibleCells("north edge of cell (" + std::to_string(r) + "," + std::to_string(c) + ")");
      }
    }
  }
  return RoadMap(std::move(cells), cell_size, lanes);
}

// ---------------------------------------------------------------------------
// Path

Path::Path(std::vector<Vec2> waypoints, std::vector<SegmentKind> kinds)
    : waypoints_(std::move(waypoints)), kinds_(std::move(kinds)) {
  if (waypoints_.size() < 2 || kinds_.size() + 1 != waypoints_.size()) {
    throw NoSuchRoute("path needs at least two waypoints and one kind per interval");
  }
  cumulative_.reserve(waypoints_.size());
  cumulative_.push_back(0.0);
  for (std::size_t i = 1; i < waypoints_.size(); ++i) {
    const double seg = geom::distance(waypoints_[i - 1], waypoints_[i]);
    if (!(seg > 0.0)) throw NoSuchRoute("path waypoints must be distinct");
    cumulative_.push_back(cumulative_.back() + seg);
  }
}

std::size_t Path::interval_at(double arc) const {
  if (arc <= 0.0) return 0;
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), arc);
  const auto idx = static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
  return std::min(idx == 0 ? 0 : idx - 1, kinds_.size() - 1);
}

Vec2 Path::position_at(double arc) const {
  arc = std::clamp(arc, 0.0, length());
  const std::size_t i = interval_at(arc);
  const double seg = cumulative_[i + 1] - cumulative_[i];
  const double t = (arc - cumulative_[i]) / seg;
  return waypoints_[i] + (waypoints_[i + 1] - waypoints_[i]) * t;
}

double Path::heading_at(double arc) const {
  const std::size_t i = interval_at(std::clamp(arc, 0.0, length()));
  const Vec2 d = waypoints_[i + 1] - waypoints_[i];
  return std::atan2(d.y, d.x);
}

SegmentKind Path::kind_at(double arc) const { return kinds_[interval_at(std::clamp(arc, 0.0, length()))]; }

Path::Projection Path::project(Vec2 p) const {
  Projection best{0.0, std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i + 1 < waypoints_.size(); ++i) {
    const double t = geom::project_onto_segment(p, waypoints_[i], waypoints_[i + 1]);
    const Vec2 q = waypoints_[i] + (waypoints_[i + 1] - waypoints_[i]) * t;
    const double d = geom::distance(p, q);
    if (d < best.distance) {
      best.distance = d;
      best.arc = cumulative_[i] + t * (cumulative_[i + 1] - cumulative_[i]);
    }
  }
  return best;
}

std::optional<std::pair<double, SegmentKind>> Path::next_turn_after(double arc) const {
  for (std::size_t i = interval_at(arc); i < kinds_.size(); ++i) {
    if (kinds_[i] != SegmentKind::Straight && cumulative_[i + 1] > arc) {
      return std::pair{cumulative_[i], kinds_[i]};
    }
  }
  return std::nullopt;
}

namespace {

// Appends a straight run through neighbouring cells from `cell` in direction
// `dir` until the map boundary. Returns the boundary point.
Vec2 extend_to_boundary(const RoadMap& map, Vec2 from, Edge towards) {
  const double w = map.cols() * map.cell_size();
  const double h = map.rows() * map.cell_size();
  switch (towards) {
    case Edge::North: return {from.x, h};
    case Edge::South: return {from.x, 0.0};
    case Edge::East: return {w, from.y};
    case Edge::West: return {0.0, from.y};
  }
  return from;
}

void check_lane_continues(const RoadMap& map, int row, int col, Edge towards, LaneDirection leaving) {
  // Walks neighbour cells and verifies that the straight lane keeps existing.
  int r = row, c = col;
  Edge e = towards;
  LaneDirection dir = leaving;
  while (true) {
    if (!map.cell(r, c).has_endpoint(e, dir)) {
      throw NoSuchRoute("no lane at the " + to_string(e) + " edge of cell (" + std::to_string(r) + "," +
                        std::to_string(c) + ")");
    }
    switch (e) {
      case Edge::North: ++r; break;
      case Edge::South: --r; break;
      case Edge::East: ++c; break;
      case Edge::West: --c; break;
    }
    if (r < 0 || c < 0 || r >= map.rows() || c >= map.cols()) return;
    // Arriving through the opposite edge; the lane must run across the cell.
    const Edge entry = opposite(e);
    const LaneDirection arriving = dir == LaneDirection::Out ? LaneDirection::In : LaneDirection::Out;
    if (!map.cell(r, c).has_endpoint(entry, arriving)) {
      throw NoSuchRoute("lane broken at cell (" + std::to_string(r) + "," + std::to_string(c) + ")");
    }
  }
}

}  // namespace

Path extract_lane_path(const RoadMap& map, const Route& route) {
  const auto where = route.cell ? route.cell : map.primary_intersection();
  if (!where) throw NoSuchRoute("map has no intersection cell");
  const auto [row, col] = *where;
  if (row < 0 || col < 0 || row >= map.rows() || col >= map.cols()) throw NoSuchRoute("route cell outside map");
  const RoadCell& cell = map.cell(row, col);

  // Canonical frame: approach from the south heading north. Quarter turns that
  // map South onto the approach edge carry the canonical path into place.
  const int turns = static_cast<int>(route.approach);
  const Edge exit_canonical = route.maneuver == Maneuver::Straight ? Edge::North
                              : route.maneuver == Maneuver::Left   ? Edge::West
                                                                   : Edge::East;
  const Edge exit_edge = rotate_edge(exit_canonical, turns);
  if (!cell.has_endpoint(route.approach, LaneDirection::In) || !cell.has_endpoint(exit_edge, LaneDirection::Out)) {
    throw NoSuchRoute("cell (" + std::to_string(row) + "," + std::to_string(col) + ") has no " +
                      to_string(route.maneuver) + " route from the " + to_string(route.approach));
  }
  if (cell.kind() == CellKind::Straight && route.maneuver != Maneuver::Straight) {
    throw NoSuchRoute("straight cells carry no turns");
  }

  const double half = 0.5 * map.cell_size();
  const double h = 0.5 * map.lanes().lane_width;
  const double b = map.lanes().box_half;
  const int n = map.lanes().arc_segments;

  std::vector<Vec2> pts{{h, -half}};
  std::vector<SegmentKind> kinds;
  switch (route.maneuver) {
    case Maneuver::Straight:
      pts.push_back({h, half});
      kinds.push_back(SegmentKind::Straight);
      break;
    case Maneuver::Right: {
      pts.push_back({h, -b});
      kinds.push_back(SegmentKind::Straight);
      const double r = b - h;
      for (int i = 1; i <= n; ++i) {
        const double a = std::numbers::pi - 0.5 * std::numbers::pi * i / n;
        pts.push_back({b + r * std::cos(a), -b + r * std::sin(a)});
        kinds.push_back(SegmentKind::RightTurn);
      }
      pts.back() = {b, -h};
      pts.push_back({half, -h});
      kinds.push_back(SegmentKind::Straight);
      break;
    }
    case Maneuver::Left: {
      pts.push_back({h, -b});
      kinds.push_back(SegmentKind::Straight);
      const double r = b + h;
      for (int i = 1; i <= n; ++i) {
        const double a = 0.5 * std::numbers::pi * i / n;
        pts.push_back({-b + r * std::cos(a), -b + r * std::sin(a)});
        kinds.push_back(SegmentKind::LeftTurn);
      }
      pts.back() = {-b, h};
      pts.push_back({-half, h});
      kinds.push_back(SegmentKind::Straight);
      break;
    }
  }

  const Vec2 center = map.cell_center(row, col);
  for (Vec2& p : pts) p = geom::rotate_quarter(p, turns) + center;

  // Continue through neighbouring cells on both ends.
  check_lane_continues(map, row, col, route.approach, LaneDirection::In);
  check_lane_continues(map, row, col, exit_edge, LaneDirection::Out);
  const Vec2 start = extend_to_boundary(map, pts.front(), route.approach);
  const Vec2 end = extend_to_boundary(map, pts.back(), exit_edge);
  if (geom::distance(start, pts.front()) > 1e-9) {
    pts.insert(pts.begin(), start);
    kinds.insert(kinds.begin(), SegmentKind::Straight);
  }
  if (geom::distance(end, pts.back()) > 1e-9) {
    pts.push_back(end);
    kinds.push_back(SegmentKind::Straight);
  }
  return Path(std::move(pts), std::move(kinds));
}

// ---------------------------------------------------------------------------
// Vehicles and world

geom::OrientedRect Vehicle::footprint() const { return {position(), heading, half_extents.x, half_extents.y}; }

Vehicle make_vehicle(int id, std::shared_ptr<const Path> path, double arc, double speed, double goal_arc, Rgb color,
                     Vec2 half_extents) {
  Vehicle v;
  v.id = id;
  v.arc = std::clamp(arc, 0.0, path->length());
  v.speed = std::max(0.0, speed);
  v.heading = path->heading_at(v.arc);
  v.goal_arc = goal_arc;
  v.color = color;
  v.half_extents = half_extents;
  v.path = std::move(path);
  return v;
}

Vehicle step_vehicle(const Vehicle& v, double accel, double dt) {
  Vehicle next = v;
  next.speed = std::max(0.0, v.speed + accel * dt);
  next.arc = std::min(v.path->length(), v.arc + next.speed * dt);
  next.heading = v.path->heading_at(next.arc);
  return next;
}

bool goal_reached(const Vehicle& v, double threshold) { return std::abs(v.goal_arc - v.arc) <= threshold; }

const Vehicle& WorldState::vehicle(int id) const {
  const auto it = std::lower_bound(vehicles.begin(), vehicles.end(), id,
                                   [](const Vehicle& v, int key) { return v.id < key; });
  if (it == vehicles.end() || it->id != id) throw std::out_of_range("no vehicle with id " + std::to_string(id));
  return *it;
}

bool WorldState::terminal() const { return events.collision.has_value() || team_at_goal() || step_index >= horizon; }

std::optional<Outcome> WorldState::outcome() const {
  if (events.collision) return Outcome::Collision;
  if (team_at_goal()) return Outcome::Goal;
  if (step_index >= horizon) return Outcome::Horizon;
  return std::nullopt;
}

WorldState make_world(std::vector<Vehicle> vehicles, std::shared_ptr<const RoadMap> map, double dt, int horizon,
                      double goal_threshold, int team_id) {
  std::sort(vehicles.begin(), vehicles.end(), [](const Vehicle& a, const Vehicle& b) { return a.id < b.id; });
  std::vector<std::shared_ptr<const Path>> paths;
  for (const Vehicle& v : vehicles) {
    if (std::find(paths.begin(), paths.end(), v.path) == paths.end()) paths.push_back(v.path);
  }
  const double tolerance = map ? 0.45 * map->lanes().lane_width : 1.8;
  WorldState w;
  w.vehicles = std::move(vehicles);
  w.map = std::move(map);
  w.conflicts = std::make_shared<const PathConflictTable>(paths, tolerance);
  w.dt = dt;
  w.horizon = horizon;
  w.goal_threshold = goal_threshold;
  w.team_id = team_id;
  w.events.collision = detect_collision(w);
  return w;
}

std::optional<std::pair<int, int>> detect_collision(const WorldState& world) {
  const auto& vs = world.vehicles;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (!vs[i].active) continue;
    const auto fi = vs[i].footprint();
    for (std::size_t j = i + 1; j < vs.size(); ++j) {
      if (!vs[j].active) continue;
      if (geom::overlaps(fi, vs[j].footprint())) return std::pair{vs[i].id, vs[j].id};
    }
  }
  return std::nullopt;
}

WorldState step_world(const WorldState& world, const std::map<int, double>& accels) {
  if (world.events.collision) throw SteppingTerminated("world already collided");
  if (world.team_at_goal()) throw SteppingTerminated("team vehicle already reached its goal");
  if (world.step_index >= world.horizon) throw SteppingTerminated("horizon reached");

  WorldState next = world;
  for (Vehicle& v : next.vehicles) {
    if (!v.active) continue;
    const auto it = accels.find(v.id);
    v = step_vehicle(v, it == accels.end() ? 0.0 : it->second, world.dt);
  }
  ++next.step_index;
  for (Vehicle& v : next.vehicles) {
    if (v.active && goal_reached(v, world.goal_threshold)) {
      next.events.goals_reached.insert(v.id);
      if (v.id != world.team_id) v.active = false;
    }
  }
  next.events.collision = detect_collision(next);
  return next;
}

}  // namespace imdp::sim
