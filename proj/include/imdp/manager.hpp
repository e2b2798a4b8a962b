#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "imdp/driver.hpp"
#include "imdp/rng.hpp"
#include "imdp/sim_world.hpp"

namespace imdp::manager {

enum class CueKind { Velocity, Proximity, Collision, TerminalGoal, TerminalHorizon };
std::string to_string(CueKind k);

struct InterventionCue {
  CueKind kind;
  int step_index = 0;
  /// Speed for velocity cues, centre distance for proximity cues.
  double measurement = 0.0;
  int other_id = -1;
};

struct Constraints {
  double max_straight = 9.5;
  double max_left = 3.5;
  double max_right = 2.5;
  /// Relative grace above the segment maximum before a velocity cue fires.
  double speed_grace = 0.05;
  double min_proximity = 10.0;

  double speed_threshold(sim::SegmentKind kind) const;
};

enum class ScaleCombine { Product, Divisor };
enum class RhoDenominator { TotalCues, Steps };

struct RewardParams {
  double c_velocity = 5.0;
  double c_proximity = 20.0;
  double c_collision = 75.0;
  double delta = 300.0;
  bool goal_bonus = true;
  ScaleCombine combine = ScaleCombine::Product;
  RhoDenominator rho = RhoDenominator::TotalCues;
};

struct CueCounts {
  int velocity = 0;
  int proximity = 0;
  int collision = 0;

  int total() const { return velocity + proximity + collision; }
  void add(CueKind k);
  bool operator==(const CueCounts&) const = default;
};

struct IMDPSpec {
  std::vector<driver::DriverAgent> roster;
  Constraints constraints;
  RewardParams reward;
  double gamma = 0.99;

  /// Throws std::invalid_argument on a roster below two agents, non-positive
  /// thresholds or gamma outside [0, 1].
  void validate() const;
};

/// Remembers which (team, other) pairs are inside a proximity violation so a
/// sustained near miss cues only once per violation interval.
class ProximityLatch {
 public:
  /// True when the violation with `other` starts now.
  bool enter(int other);
  void leave(int other) { active_.erase(other); }
  bool inside(int other) const { return active_.contains(other); }

 private:
  std::set<int> active_;
};

/// True when the team vehicle currently violates a manager constraint.
bool violates(const sim::WorldState& world, const Constraints& c);

/// 1 iff (a constraint is violated and no delegation was made in this state)
/// or the world is terminal.
int beta(const sim::WorldState& world, const IMDPSpec& spec, bool delegated_this_step);

/// Velocity, proximity and collision cues of the current world state, followed
/// by a terminal-goal or terminal-horizon marker when the episode has ended.
/// The collision cue, when present, comes first. With a latch, proximity cues
/// fire only on entry into a violation interval.
std::vector<InterventionCue> classify_cues(const sim::WorldState& world, const IMDPSpec& spec,
                                           ProximityLatch* latch = nullptr);

bool is_violation(CueKind k);

/// R = 1{goal} - tanh(combine(delta, sum_x rho_x c_x)), kept strictly above -1.
double episodic_reward(sim::Outcome outcome, const CueCounts& counts, const RewardParams& params, int steps = 0);

/// Last-cue slot of the observation: none, velocity, proximity, collision.
enum class LastCue { None = 0, Velocity = 1, Proximity = 2, Collision = 3 };

struct ObservationLayout {
  int background = 0;
  int agents = 0;

  static constexpr int kTeamFeatures = 5;
  static constexpr int kBackgroundFeatures = 6;
  static constexpr int kAgentFeatures = 6;
  static constexpr int kCueFeatures = 4;

  int dimension() const {
    return kTeamFeatures + kBackgroundFeatures * background + kAgentFeatures * agents + kCueFeatures;
  }
  int background_offset(int i) const { return kTeamFeatures + kBackgroundFeatures * i; }
  int agent_offset(int k) const { return kTeamFeatures + kBackgroundFeatures * background + kAgentFeatures * k; }
  int cue_offset() const { return kTeamFeatures + kBackgroundFeatures * background + kAgentFeatures * agents; }
};

using Observation = std::vector<double>;

/// Sentinel for time-to-interaction and conflict distances with no conflict ahead.
inline constexpr double kSentinel = 1.0;

/// Feature layout, per slot:
///  team: arc fraction, speed / 9.5, segment one-hot (straight, left, right)
///  background vehicle i (ascending id, team excluded): team distance to the
///    next conflict / 100, its distance to it / 100, closing speed / 10,
///    time to interaction / 8, crossing flag, shared-lane flag
///  agent k: context one-hot (base, night, fog, distraction, color), severity
///  last cue one-hot
Observation manager_observation(const sim::WorldState& world, const IMDPSpec& spec, LastCue last_cue);
ObservationLayout observation_layout(const sim::WorldState& world, const IMDPSpec& spec);

struct ManagerTransition {
  Observation observation;
  int action = 0;
  double reward = 0.0;
  Observation next_observation;
  bool done = false;
  int step = 0;
  int next_step = 0;
};

struct EpisodeTrace {
  std::vector<ManagerTransition> transitions;
  CueCounts cue_counts;
  sim::Outcome outcome = sim::Outcome::Horizon;
  int steps = 0;
  /// World steps at which at least one violation cue fired (n_beta).
  int interventions = 0;
  /// Agent chosen at each decision point, step 0 included.
  std::vector<int> delegations;
  double reward = 0.0;
};

/// Chooses an agent index from an observation. Must be safe to call
/// concurrently when evaluation runs in parallel.
using ManagerPolicy = std::function<int(const Observation&, Rng&)>;

ManagerPolicy solo_policy(int agent);
ManagerPolicy random_policy(int agents);

/// Independent streams used inside one episode, all derived from its seed.
struct EpisodeStreams {
  Rng manager;
  Rng background;
  std::vector<Rng> agents;

  EpisodeStreams(std::uint64_t episode_seed, std::size_t roster_size);
};

/// Delegates at step 0 and at every cue-bearing non-terminal step; the chosen
/// agent drives all intermediate steps. The episodic reward is written into
/// every transition. Throws RosterMismatch when `team` and spec.roster differ
/// in size.
EpisodeTrace run_episode(const sim::WorldState& world0, const IMDPSpec& spec, const ManagerPolicy& policy,
                         const std::vector<driver::DriverAgent>& team, const driver::Traffic& traffic,
                         EpisodeStreams& streams);

}  // namespace imdp::manager
