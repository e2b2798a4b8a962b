#include "imdp/path_conflicts.hpp"

#include <cmath>
#include <limits>

namespace imdp::sim {

std::vector<ConflictRegion> compute_path_conflicts(const Path& self, const Path& other, double lateral_tolerance,
                                                   double sample_step) {
  const double len = self.length();
  const auto samples = static_cast<std::size_t>(std::ceil(len / sample_step)) + 1;
  std::vector<double> arcs(samples);
  std::vector<Path::Projection> proj(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    arcs[i] = std::min(len, static_cast<double>(i) * sample_step);
    proj[i] = other.project(self.position_at(arcs[i]));
  }

  std::vector<ConflictRegion> out;
  std::size_t i = 0;
  while (i < samples) {
    if (proj[i].distance >= lateral_tolerance) {
      ++i;
      continue;
    }
    const std::size_t first = i;
    std::size_t closest = i;
    double other_min = proj[i].arc;
    double other_max = proj[i].arc;
    while (i < samples && proj[i].distance < lateral_tolerance) {
      if (proj[i].distance < proj[closest].distance) closest = i;
      other_min = std::min(other_min, proj[i].arc);
      other_max = std::max(other_max, proj[i].arc);
      ++i;
    }
    const std::size_t last = i - 1;

    const bool self_from_start = first == 0;
    const bool self_to_end = last == samples - 1;
    const bool other_from_start = other_min <= sample_step;
    const bool other_to_end = other_max >= other.length() - sample_step;

    ConflictRegion region{};
    region.self_enter = arcs[first];
    region.self_exit = arcs[last];
    if (self_from_start && other_from_start) {
      region.kind = ConflictKind::Following;
      region.self_point = arcs[first];
      region.other_point = proj[first].arc;
    } else if (self_to_end && other_to_end) {
      region.kind = ConflictKind::Merging;
      region.self_point = arcs[first];
      region.other_point = proj[first].arc;
    } else {
      region.kind = ConflictKind::Crossing;
      region.self_point = arcs[closest];
      region.other_point = proj[closest].arc;
    }
    out.push_back(region);
  }
  return out;
}

PathConflictTable::PathConflictTable(const std::vector<std::shared_ptr<const Path>>& paths, double lateral_tolerance)
    : tolerance_(lateral_tolerance), keep_alive_(paths) {
  for (const auto& a : paths) {
    for (const auto& b : paths) {
      table_.emplace(std::pair{a.get(), b.get()}, compute_path_conflicts(*a, *b, tolerance_));
    }
  }
}

std::vector<ConflictRegion> PathConflictTable::between(const Path& self, const Path& other) const {
  const auto it = table_.find({&self, &other});
  if (it != table_.end()) return it->second;
  return compute_path_conflicts(self, other, tolerance_);
}

}  // namespace imdp::sim
