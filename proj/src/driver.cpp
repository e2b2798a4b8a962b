#include "imdp/driver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace imdp::driver {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Restricts [lo, hi] to the set of t where a + b*t >= 0.
void restrict(double& lo, double& hi, double a, double b) {
  if (b == 0.0) {
    if (a < 0.0) hi = -1.0;
    return;
  }
  const double root = -a / b;
  if (b > 0.0) {
    lo = std::max(lo, root);
  } else {
    hi = std::min(hi, root);
  }
}

// Constant-speed projection that slows at the deceleration limit for an
// upcoming turn whose speed limit is lower than the current speed.
struct Profile {
  double v0 = 0.0;
  double v1 = 0.0;
  double cruise = 0.0;  // distance held at v0 before braking
  double brake = -kDecelerate;

  double brake_dist() const { return (v0 * v0 - v1 * v1) / (2.0 * brake); }
  double brake_time() const { return (v0 - v1) / brake; }

  double time_to(double distance) const {
    if (distance <= 0.0) return 0.0;
    if (v0 <= 0.0) return kInf;
    if (distance <= cruise) return distance / v0;
    const double left = distance - cruise;
    if (left <= brake_dist()) return cruise / v0 + (v0 - std::sqrt(v0 * v0 - 2.0 * brake * left)) / brake;
    return cruise / v0 + brake_time() + (left - brake_dist()) / v1;
  }

  double travelled(double t) const {
    if (t <= 0.0) return 0.0;
    const double t_cruise = v0 > 0.0 ? cruise / v0 : kInf;
    if (t <= t_cruise) return v0 * t;
    const double tb = std::min(t - t_cruise, brake_time());
    double x = cruise + v0 * tb - 0.5 * brake * tb * tb;
    if (t - t_cruise > brake_time()) x += v1 * (t - t_cruise - brake_time());
    return x;
  }
};

Profile profile(const sim::Vehicle& v, const DriverParams& p) {
  Profile pr{v.speed, v.speed, kInf};
  const auto turn = v.path->next_turn_after(v.arc);
  if (!turn || turn->first <= v.arc) return pr;
  const double v_turn = desired_speed(turn->second, p);
  if (v_turn >= v.speed) return pr;
  pr.v1 = v_turn;
  pr.cruise = std::max(0.0, turn->first - v.arc - p.turn_margin - pr.brake_dist());
  return pr;
}

std::optional<Interaction> crossing(const sim::Vehicle& self, const sim::Vehicle& other,
                                    const sim::ConflictRegion& r, double min_safe, const DriverParams& p) {
  const double da = r.self_point - self.arc;
  const double db = r.other_point - other.arc;
  if (da < -p.crossing_clearance || db < -p.crossing_clearance) return std::nullopt;
  const Profile pa = profile(self, p);
  const Profile pb = profile(other, p);
  const double ta = pa.time_to(da);
  const double tb = pb.time_to(db);

  double t = kInf;
  if (ta <= p.lookahead && std::abs(db - pb.travelled(ta)) < min_safe) t = std::min(t, ta);
  if (tb <= p.lookahead && std::abs(da - pa.travelled(tb)) < min_safe) t = std::min(t, std::min(ta, tb));
  if (t == kInf && std::abs(da) < min_safe && std::abs(db) < min_safe) t = 0.0;
  if (t == kInf) return std::nullopt;
  return Interaction{other.id, InteractionKind::Crossing, std::max(0.0, t), r.self_point};
}

// Shared lane: both vehicles use a common along-lane coordinate anchored at
// the region entry. A vehicle ahead (or level) within min_safe is yielded to.
// Before merging, the merge entry is also treated like a crossing point so the
// merging vehicle gives way to traffic arriving from behind; `leader_only`
// skips that check and only looks at the current gap.
std::optional<Interaction> shared_lane(const sim::Vehicle& self, const sim::Vehicle& other,
                                       const sim::ConflictRegion& r, double min_safe, const DriverParams& p,
                                       bool leader_only) {
  const double shared = r.self_exit - r.self_point;
  const double xa = self.arc - r.self_point;
  const double xb = other.arc - r.other_point;
  if (xa > shared || xb > shared) return std::nullopt;
  const double va = self.speed;
  const double vb = other.speed;
  const auto kind = r.kind == sim::ConflictKind::Following ? InteractionKind::Following : InteractionKind::Merging;

  std::optional<Interaction> best;
  double lo = 0.0;
  // A leader-only observer reacts to the present gap, not a projected one.
  double hi = leader_only ? 0.0 : p.lookahead;
  restrict(lo, hi, xb - xa, vb - va);                       // other ahead or level
  restrict(lo, hi, min_safe - (xb - xa) - 1e-12, va - vb);  // gap below min_safe
  restrict(lo, hi, xb, vb);                                 // other on the shared lane
  restrict(lo, hi, xa + min_safe, va);                      // self near the shared lane
  restrict(lo, hi, shared - xa, -va);                       // self not yet past it
  if (lo <= hi) best = Interaction{other.id, kind, lo, r.self_point + xb};

  if (!leader_only && r.kind == sim::ConflictKind::Merging && xa < 0.0) {
    if (auto merge = crossing(self, other, r, min_safe, p)) {
      merge->kind = kind;
      if (!best || merge->time_to_interaction < best->time_to_interaction) best = merge;
    }
  }
  return best;
}

std::optional<Interaction> interaction(const sim::Vehicle& self, const sim::Vehicle& other, double min_safe,
                                       const sim::PathConflictTable* conflicts, const DriverParams& params,
                                       bool leader_only);

bool earlier(const Interaction& a, const Interaction& b) {
  if (a.time_to_interaction != b.time_to_interaction) return a.time_to_interaction < b.time_to_interaction;
  return a.other_id < b.other_id;
}

std::vector<Interaction> candidates(const sim::Vehicle& self, const std::vector<const sim::Vehicle*>& detected,
                                    double min_safe, const sim::PathConflictTable* conflicts, const DriverParams& p,
                                    std::optional<int> team_id) {
  std::vector<Interaction> out;
  for (const sim::Vehicle* other : detected) {
    if (other->id == self.id || !other->active) continue;
    const bool leader_only = team_id && other->id == *team_id;
    if (auto it = interaction(self, *other, min_safe, conflicts, p, leader_only)) out.push_back(*it);
  }
  return out;
}

}  // namespace

double desired_speed(sim::SegmentKind kind, const DriverParams& params) {
  switch (kind) {
    case sim::SegmentKind::LeftTurn:
      return params.left_turn_speed;
    case sim::SegmentKind::RightTurn:
      return params.right_turn_speed;
    case sim::SegmentKind::Straight:
      break;
  }
  return params.max_speed;
}

sim::SegmentKind governing_segment(const sim::Vehicle& v, double dt, const DriverParams& params) {
  const sim::SegmentKind current = v.segment();
  const auto turn = v.path->next_turn_after(v.arc);
  if (!turn || turn->first <= v.arc) return current;
  const double v_turn = desired_speed(turn->second, params);
  if (v.speed <= v_turn) return current;
  const double brake = -kDecelerate;
  const double needed = (v.speed * v.speed - v_turn * v_turn) / (2.0 * brake);
  const double available = turn->first - v.arc - params.turn_margin - v.speed * dt;
  return needed >= available ? turn->second : current;
}

namespace {

std::optional<Interaction> interaction(const sim::Vehicle& self, const sim::Vehicle& other, double min_safe,
                                       const sim::PathConflictTable* conflicts, const DriverParams& params,
                                       bool leader_only) {
  if (self.id == other.id) return std::nullopt;
  std::vector<sim::ConflictRegion> regions;
  if (conflicts) {
    regions = conflicts->between(*self.path, *other.path);
  } else {
    // Same tolerance the world tables use for the default lane width.
    regions = sim::compute_path_conflicts(*self.path, *other.path, 1.8);
  }
  std::optional<Interaction> best;
  for (const auto& r : regions) {
    std::optional<Interaction> it;
    if (r.kind == sim::ConflictKind::Crossing) {
      // A vehicle that only follows the rules with respect to a leader
      // ignores crossings entirely.
      if (!leader_only) it = crossing(self, other, r, min_safe, params);
    } else {
      it = shared_lane(self, other, r, min_safe, params, leader_only);
    }
    if (it && (!best || earlier(*it, *best))) best = it;
  }
  return best;
}

}  // namespace

std::optional<Interaction> time_to_interaction(const sim::Vehicle& self, const sim::Vehicle& other, double min_safe,
                                               const sim::PathConflictTable* conflicts, const DriverParams& params) {
  return interaction(self, other, min_safe, conflicts, params, false);
}

std::optional<Interaction> earliest_interaction(int self_id, const std::vector<Interaction>& candidates,
                                                const DeferenceGraph& deference) {
  std::optional<Interaction> best;
  for (const auto& c : candidates) {
    if (self_id < c.other_id && deference.defers(c.other_id, self_id)) continue;
    if (!best || earlier(c, *best)) best = c;
  }
  return best;
}

std::optional<Interaction> find_interacting(const sim::Vehicle& self, const std::vector<sim::Vehicle>& detected,
                                            double min_safe, const DeferenceGraph& deference,
                                            const sim::PathConflictTable* conflicts, const DriverParams& params) {
  std::vector<const sim::Vehicle*> ptrs;
  for (const auto& v : detected) ptrs.push_back(&v);
  return earliest_interaction(self.id, candidates(self, ptrs, min_safe, conflicts, params, std::nullopt), deference);
}

double select_action(const sim::Vehicle& self, const std::optional<Interaction>& interaction,
                     sim::SegmentKind segment_kind, const DriverParams& params) {
  if (interaction) return self.speed > 0.0 ? kDecelerate : kNoOp;
  const double target = desired_speed(segment_kind, params);
  if (self.speed < target - params.speed_band) return kAccelerate;
  if (self.speed > target + params.speed_band) return kDecelerate;
  return kNoOp;
}

double drive_step(const DriverAgent& agent, const sim::WorldState& world, int vehicle_id, Rng& rng,
                  const DeferenceGraph& deference, const DriverParams& params) {
  const sim::Vehicle& self = world.vehicle(vehicle_id);
  const std::set<int> ids = perception::sample_detections(agent.context, self, world.vehicles, rng);
  std::vector<const sim::Vehicle*> detected;
  for (int id : ids) detected.push_back(&world.vehicle(id));
  const auto cands = candidates(self, detected, params.min_safe, world.conflicts.get(), params, std::nullopt);
  const auto chosen = earliest_interaction(self.id, cands, deference);
  return select_action(self, chosen, governing_segment(self, world.dt, params), params);
}

std::map<int, double> plan_step(const sim::WorldState& world, const DriverAgent& team_agent, const Traffic& traffic,
                                Rng& team_rng, Rng& background_rng) {
  const DriverParams& p = traffic.params;
  std::vector<const sim::Vehicle*> actors;
  for (const auto& v : world.vehicles) {
    if (v.active) actors.push_back(&v);
  }

  std::vector<std::vector<Interaction>> cands(actors.size());
  DeferenceGraph graph;
  for (std::size_t i = 0; i < actors.size(); ++i) {
    const sim::Vehicle& self = *actors[i];
    const bool is_team = self.id == world.team_id;
    const auto& ctx = is_team ? team_agent.context : traffic.background_context;
    Rng& rng = is_team ? team_rng : background_rng;
    const std::set<int> ids = perception::sample_detections(ctx, self, world.vehicles, rng);
    std::vector<const sim::Vehicle*> detected;
    for (int id : ids) detected.push_back(&world.vehicle(id));
    const std::optional<int> ignore = is_team ? std::nullopt : std::optional<int>(world.team_id);
    cands[i] = candidates(self, detected, p.min_safe, world.conflicts.get(), p, ignore);
    for (const auto& c : cands[i]) graph.add(self.id, c.other_id);
  }

  std::map<int, double> accels;
  for (std::size_t i = 0; i < actors.size(); ++i) {
    const sim::Vehicle& self = *actors[i];
    const auto chosen = earliest_interaction(self.id, cands[i], graph);
    accels[self.id] = select_action(self, chosen, governing_segment(self, world.dt, p), p);
  }
  return accels;
}

}  // namespace imdp::driver
