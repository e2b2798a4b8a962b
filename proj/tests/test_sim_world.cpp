#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <memory>

#include "imdp/errors.hpp"
#include "imdp/geometry.hpp"
#include "imdp/path_conflicts.hpp"
#include "imdp/rng.hpp"
#include "imdp/sim_world.hpp"

using namespace imdp;
using namespace imdp::sim;

namespace {

std::shared_ptr<const RoadMap> four_way() {
  return std::make_shared<const RoadMap>(build_map({{RoadCell(CellKind::FourWay)}}, 200.0));
}

std::shared_ptr<const Path> straight_path(Vec2 a, Vec2 b) {
  return std::make_shared<const Path>(std::vector<Vec2>{a, b}, std::vector<SegmentKind>{SegmentKind::Straight});
}

}  // namespace

TEST_CASE("single four-way cell exposes in and out lanes on every edge") {
  const RoadMap map = build_map({{RoadCell(CellKind::FourWay)}}, 200.0);
  CHECK(map.rows() == 1);
  CHECK(map.cols() == 1);
  int in = 0;
  int out = 0;
  for (const auto& ep : map.cell(0, 0).lane_endpoints()) {
    (ep.direction == LaneDirection::In ? in : out)++;
  }
  CHECK(in == 4);
  CHECK(out == 4);
  for (Edge e : {Edge::South, Edge::East, Edge::North, Edge::West}) {
    CHECK(map.cell(0, 0).has_endpoint(e, LaneDirection::In));
    CHECK(map.cell(0, 0).has_endpoint(e, LaneDirection::Out));
  }
}

TEST_CASE("aligned straight cells connect and rotated ones do not") {
  CHECK_NOTHROW(build_map({{RoadCell(CellKind::Straight), RoadCell(CellKind::Straight)}}, 100.0));
  CHECK_THROWS_AS(build_map({{RoadCell(CellKind::Straight, 1), RoadCell(CellKind::Straight)}}, 100.0),
                  IncompatibleCells);
  CHECK_THROWS_AS(build_map({}, 100.0), IncompatibleCells);
}

TEST_CASE("lane paths through a four-way intersection") {
  const auto map = four_way();
  const Path straight = extract_lane_path(*map, {Edge::South, Maneuver::Straight, std::nullopt});
  for (auto k : straight.kinds()) CHECK(k == SegmentKind::Straight);

  const Path left = extract_lane_path(*map, {Edge::South, Maneuver::Left, std::nullopt});
  const Path right = extract_lane_path(*map, {Edge::South, Maneuver::Right, std::nullopt});
  double left_arc = 0.0;
  double right_arc = 0.0;
  for (std::size_t i = 0; i < left.kinds().size(); ++i) {
    if (left.kinds()[i] == SegmentKind::LeftTurn) left_arc += left.cumulative()[i + 1] - left.cumulative()[i];
  }
  for (std::size_t i = 0; i < right.kinds().size(); ++i) {
    if (right.kinds()[i] == SegmentKind::RightTurn) right_arc += right.cumulative()[i + 1] - right.cumulative()[i];
  }
  CHECK(left_arc > 0.0);
  CHECK(right_arc > 0.0);
  CHECK(right_arc < left_arc);

  // The left-turn interval lies inside the intersection box.
  const double half = map->lanes().box_half;
  const Vec2 c = map->cell_center(0, 0);
  for (std::size_t i = 0; i < left.kinds().size(); ++i) {
    if (left.kinds()[i] != SegmentKind::LeftTurn) continue;
    const Vec2 p = left.waypoints()[i];
    CHECK(std::abs(p.x - c.x) <= half + 1e-9);
    CHECK(std::abs(p.y - c.y) <= half + 1e-9);
  }

  for (std::size_t i = 1; i < left.cumulative().size(); ++i) CHECK(left.cumulative()[i] > left.cumulative()[i - 1]);
}

TEST_CASE("routes missing from the map raise NoSuchRoute") {
  const auto map = std::make_shared<const RoadMap>(build_map({{RoadCell(CellKind::TIntersection)}}, 200.0));
  CHECK_THROWS_AS(extract_lane_path(*map, {Edge::North, Maneuver::Straight, std::nullopt}), NoSuchRoute);
}

TEST_CASE("step_vehicle update rule") {
  const auto path = straight_path({0, 0}, {100, 0});
  const Vehicle stopped = make_vehicle(0, path, 10.0, 0.0, 100.0);
  CHECK(step_vehicle(stopped, -1.8, 0.1).speed == 0.0);
  CHECK(step_vehicle(stopped, -1.8, 0.1).arc == 10.0);

  const Vehicle v = make_vehicle(0, path, 10.0, 5.0, 100.0);
  const Vehicle s = step_vehicle(v, 1.0, 0.1);
  CHECK(s.speed == doctest::Approx(5.1).epsilon(1e-12));
  CHECK(s.arc - v.arc == doctest::Approx(0.51).epsilon(1e-12));
  CHECK(step_vehicle(v, 0.0, 0.1).speed == 5.0);

  const Vehicle end = step_vehicle(make_vehicle(0, path, 99.9, 9.5, 100.0), 1.0, 0.1);
  CHECK(end.arc == 100.0);
}

TEST_CASE("collision detection") {
  const auto map = four_way();
  const auto p1 = straight_path({0, 0}, {200, 0});
  const auto p2 = straight_path({200, 0}, {0, 0});
  {
    WorldState w = make_world({make_vehicle(0, p1, 10, 0, 200), make_vehicle(1, p1, 60, 0, 200)}, map);
    CHECK_FALSE(detect_collision(w).has_value());
  }
  {
    WorldState w = make_world({make_vehicle(0, p1, 10, 0, 200), make_vehicle(1, p1, 10, 0, 200)}, map);
    const auto c = detect_collision(w);
    REQUIRE(c.has_value());
    CHECK(c->first == 0);
    CHECK(c->second == 1);
  }
  {
    // Rectangles meeting exactly at their edges have zero-area contact.
    WorldState w = make_world({make_vehicle(0, p1, 10, 0, 200), make_vehicle(1, p1, 14.8, 0, 200)}, map);
    CHECK_FALSE(detect_collision(w).has_value());
  }
  {
    geom::OrientedRect a{{0, 0}, 0.0, 1.0, 1.0};
    geom::OrientedRect b{{2, 2}, 0.0, 1.0, 1.0};
    CHECK_FALSE(geom::overlaps(a, b));
    CHECK_FALSE(geom::overlaps(b, a));
    b.center = {1.5, 1.5};
    CHECK(geom::overlaps(a, b));
    CHECK(geom::overlaps(b, a));
  }
  {
    // Head-on approach collides after a few steps and ends the episode.
    WorldState w = make_world({make_vehicle(0, p1, 90, 5, 200), make_vehicle(1, p2, 90, 5, 200)}, map);
    int guard = 0;
    while (!w.terminal() && guard++ < 100) w = step_world(w, {});
    REQUIRE(w.events.collision.has_value());
    CHECK(w.outcome() == Outcome::Collision);
    CHECK_THROWS_AS(step_world(w, {}), SteppingTerminated);
  }
}

TEST_CASE("goal detection and horizon") {
  const auto map = four_way();
  const auto p = straight_path({0, 0}, {200, 0});
  Vehicle v = make_vehicle(0, p, 50.0, 0.0, 50.0);
  CHECK(goal_reached(v, 1.0));
  v.arc = 49.5;
  CHECK(goal_reached(v, 1.0));
  v.arc = 48.0;
  CHECK_FALSE(goal_reached(v, 1.0));

  WorldState w = make_world({make_vehicle(0, p, 48.5, 5.0, 50.0)}, map);
  w = step_world(w, {{0, 0.0}});
  CHECK(w.team_at_goal());
  CHECK(w.outcome() == Outcome::Goal);

  WorldState h = make_world({make_vehicle(0, p, 0.0, 0.0, 150.0)}, map, 0.1, 3);
  for (int k = 0; k < 3; ++k) h = step_world(h, {});
  CHECK(h.outcome() == Outcome::Horizon);
  CHECK_THROWS_AS(step_world(h, {}), SteppingTerminated);
}

TEST_CASE("stepping is deterministic, monotone and path-locked") {
  const auto map = four_way();
  const auto left = std::make_shared<const Path>(extract_lane_path(*map, {Edge::South, Maneuver::Left, std::nullopt}));
  const auto right = std::make_shared<const Path>(extract_lane_path(*map, {Edge::East, Maneuver::Right, std::nullopt}));
  WorldState w = make_world({make_vehicle(0, left, 0.0, 3.0, left->length()),
                             make_vehicle(1, right, 0.0, 6.0, right->length())},
                            map);
  Rng rng(11);
  for (int k = 0; k < 150 && !w.terminal(); ++k) {
    std::map<int, double> a{{0, rng.bernoulli(0.5) ? 1.0 : -1.8}, {1, rng.bernoulli(0.5) ? 1.0 : 0.0}};
    const WorldState n1 = step_world(w, a);
    const WorldState n2 = step_world(w, a);
    for (std::size_t i = 0; i < w.vehicles.size(); ++i) {
      CHECK(n1.vehicles[i].arc == n2.vehicles[i].arc);
      CHECK(n1.vehicles[i].speed == n2.vehicles[i].speed);
      CHECK(n1.vehicles[i].speed >= 0.0);
      CHECK(n1.vehicles[i].arc >= w.vehicles[i].arc);
      const auto& v = n1.vehicles[i];
      CHECK(v.path->project(v.position()).distance <= 1e-9);
    }
    w = n1;
  }
}

TEST_CASE("conflict table classifies crossing and shared-lane regions") {
  const auto map = four_way();
  const Path north = extract_lane_path(*map, {Edge::South, Maneuver::Straight, std::nullopt});
  const Path east = extract_lane_path(*map, {Edge::West, Maneuver::Straight, std::nullopt});
  const Path merge = extract_lane_path(*map, {Edge::East, Maneuver::Right, std::nullopt});
  const auto crossing = compute_path_conflicts(north, east, 1.8);
  REQUIRE(crossing.size() == 1);
  CHECK(crossing[0].kind == ConflictKind::Crossing);
  const auto shared = compute_path_conflicts(north, merge, 1.8);
  REQUIRE_FALSE(shared.empty());
  CHECK(shared.back().kind == ConflictKind::Merging);
  const auto same = compute_path_conflicts(north, north, 1.8);
  REQUIRE(same.size() == 1);
  CHECK(same[0].kind == ConflictKind::Following);
}
