#pragma once

#include <set>
#include <string>
#include <variant>
#include <vector>

#include "imdp/geometry.hpp"
#include "imdp/rng.hpp"
#include "imdp/sim_world.hpp"

namespace imdp::perception {

/// Exponential fall-off reaching `y_tau` at distance `x_tau`.
struct DecayParams {
  double x_tau = 30.0;
  double y_tau = 0.1;

  double tau() const;
};

/// Circular sector in front of the vehicle inside which detection is certain.
struct HeadlightRegion {
  double length = 20.0;
  double half_angle = 15.0 * 3.14159265358979323846 / 180.0;
};

/// Axis-aligned box in the observer frame (x forward, y to the left, origin
/// at the observer centre).
struct ObservationMask {
  geom::Vec2 min{0.0, 0.0};
  geom::Vec2 max{0.0, 0.0};

  double area() const;
  /// Mask hiding everything within `range` around the observer.
  static ObservationMask full(double range);
  /// Mask hiding the forward-left quadrant up to `range`.
  static ObservationMask forward_left(double range);
};

struct BaseRange {
  double range = 50.0;
};
struct Night {
  DecayParams decay;
  HeadlightRegion headlight;
  double range = 50.0;
};
struct Fog {
  DecayParams decay;
  double range = 50.0;
};
struct Distraction {
  ObservationMask mask;
  double range = 50.0;
};
struct ColorBlind {
  sim::Rgb blindness_color{255, 0, 0};
  double base_fail = 0.35;
  double range = 50.0;
};

using PerceptionContext = std::variant<BaseRange, Night, Fog, Distraction, ColorBlind>;

/// Tag index of the context (0 base, 1 night, 2 fog, 3 distraction, 4 color).
int context_kind(const PerceptionContext& ctx);
std::string context_name(const PerceptionContext& ctx);
double context_range(const PerceptionContext& ctx);
/// Scalar in [0, 1] summarising how strongly a context degrades detection.
double context_severity(const PerceptionContext& ctx);
/// Throws InvalidDecayParams (decay contexts) or std::invalid_argument.
void validate(const PerceptionContext& ctx);

/// tau = -x_tau / ln(y_tau). Throws InvalidDecayParams unless x_tau > 0 and
/// 0 < y_tau < 1.
double decay_tau(double x_tau, double y_tau);

double exp_decay(double distance, double tau);

/// Weighted Euclidean ("redmean") colour distance.
double color_distance(sim::Rgb c1, sim::Rgb c2);

/// Upper bound of color_distance over the RGB cube used to normalise similarity.
inline constexpr double kColorDistanceMax = 765.0;

/// Fraction of the target rectangle (observer frame) hidden by the mask.
double mask_coverage_ratio(const ObservationMask& mask, const geom::OrientedRect& target);

/// Expresses `target`'s footprint in `observer`'s body frame.
geom::OrientedRect to_observer_frame(const sim::Vehicle& observer, const sim::Vehicle& target);

bool in_headlight(const HeadlightRegion& region, const sim::Vehicle& observer, const sim::Vehicle& target);

double detection_probability(const PerceptionContext& ctx, const sim::Vehicle& observer, const sim::Vehicle& target);

/// One Bernoulli draw per active target in ascending id order (always one
/// draw per target, so stream consumption does not depend on the outcome).
std::set<int> sample_detections(const PerceptionContext& ctx, const sim::Vehicle& observer,
                                const std::vector<sim::Vehicle>& others, Rng& rng);

}  // namespace imdp::perception
