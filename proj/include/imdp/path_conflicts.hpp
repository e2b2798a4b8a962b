#pragma once

#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "imdp/sim_world.hpp"

namespace imdp::sim {

enum class ConflictKind { Crossing, Merging, Following };

/// Stretch of `self` path lying within the lateral tolerance of `other` path.
///
/// For crossings, `self_point`/`other_point` are the arc positions of closest
/// approach. For merging and following (shared lane) they mark the entry of
/// the shared stretch on each path, so `arc - point` is a common along-lane
/// coordinate for both vehicles.
struct ConflictRegion {
  ConflictKind kind;
  double self_enter;
  double self_exit;
  double self_point;
  double other_point;
};

std::vector<ConflictRegion> compute_path_conflicts(const Path& self, const Path& other, double lateral_tolerance,
                                                   double sample_step = 0.25);

/// Immutable cache of conflict regions for every ordered pair of paths in a
/// world. Safe to share between threads.
class PathConflictTable {
 public:
  PathConflictTable(const std::vector<std::shared_ptr<const Path>>& paths, double lateral_tolerance);

  /// Regions of `self` against `other`; computed on demand (uncached) for
  /// paths the table was not built with.
  std::vector<ConflictRegion> between(const Path& self, const Path& other) const;
  double lateral_tolerance() const { return tolerance_; }

 private:
  double tolerance_;
  std::vector<std::shared_ptr<const Path>> keep_alive_;
  std::map<std::pair<const Path*, const Path*>, std::vector<ConflictRegion>> table_;
};

}  // namespace imdp::sim
