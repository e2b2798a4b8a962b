#include "imdp/perception.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "imdp/errors.hpp"

namespace imdp::perception {

double DecayParams::tau() const { return decay_tau(x_tau, y_tau); }

double ObservationMask::area() const { return std::max(0.0, max.x - min.x) * std::max(0.0, max.y - min.y); }

ObservationMask ObservationMask::full(double range) {
  const double r = range + 10.0;
  return {{-r, -r}, {r, r}};
}

ObservationMask ObservationMask::forward_left(double range) { return {{0.0, 0.0}, {range, range}}; }

int context_kind(const PerceptionContext& ctx) { return static_cast<int>(ctx.index()); }

std::string context_name(const PerceptionContext& ctx) {
  static constexpr const char* names[] = {"base", "night", "fog", "distraction", "color"};
  return names[ctx.index()];
}

double context_range(const PerceptionContext& ctx) {
  return std::visit([](const auto& c) { return c.range; }, ctx);
}

namespace {

// Detection failure of a decaying context 20 m out.
constexpr double kSeverityReference = 20.0;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

double context_severity(const PerceptionContext& ctx) {
  return std::visit(
      Overloaded{
          [](const BaseRange&) { return 0.0; },
          [](const Night& n) { return 1.0 - exp_decay(kSeverityReference, n.decay.tau()); },
          [](const Fog& f) { return 1.0 - exp_decay(kSeverityReference, f.decay.tau()); },
          [](const Distraction& d) {
            const double full = 4.0 * d.range * d.range;
            return std::clamp(d.mask.area() / full, 0.0, 1.0);
          },
          [](const ColorBlind& c) { return c.base_fail; },
      },
      ctx);
}

void validate(const PerceptionContext& ctx) {
  if (!(context_range(ctx) > 0.0)) throw std::invalid_argument("sensing range must be positive");
  std::visit(Overloaded{
                 [](const BaseRange&) {},
                 [](const Night& n) {
                   (void)n.decay.tau();
                   if (!(n.headlight.length > 0.0) || !(n.headlight.half_angle > 0.0) ||
                       !(n.headlight.half_angle < 0.5 * std::numbers::pi)) {
                     throw std::invalid_argument("headlight region needs length > 0 and 0 < half_angle < pi/2");
                   }
                 },
                 [](const Fog& f) { (void)f.decay.tau(); },
                 [](const Distraction&) {},
                 [](const ColorBlind& c) {
                   if (!(c.base_fail >= 0.0 && c.base_fail <= 1.0)) {
                     throw std::invalid_argument("base_fail must lie in [0, 1]");
                   }
                 },
             },
             ctx);
}

double decay_tau(double x_tau, double y_tau) {
  if (!(x_tau > 0.0) || !(y_tau > 0.0) || !(y_tau < 1.0)) {
    throw InvalidDecayParams("decay needs x_tau > 0 and 0 < y_tau < 1");
  }
  return -x_tau / std::log(y_tau);
}

double exp_decay(double distance, double tau) { return std::exp(-distance / tau); }

double color_distance(sim::Rgb c1, sim::Rgb c2) {
  const double rbar = 0.5 * (c1.r + c2.r);
  const double dr = c1.r - c2.r;
  const double dg = c1.g - c2.g;
  const double db = c1.b - c2.b;
  return std::sqrt((2.0 + rbar / 256.0) * dr * dr + 4.0 * dg * dg + (2.0 + (255.0 - rbar) / 256.0) * db * db);
}

double mask_coverage_ratio(const ObservationMask& mask, const geom::OrientedRect& target) {
  const auto corners = target.corners();
  const double total = target.area();
  if (!(total > 0.0) || mask.area() <= 0.0) return 0.0;
  const geom::Polygon clipped = geom::clip_to_box(corners, mask.min, mask.max);
  return std::clamp(std::abs(geom::signed_area(clipped)) / total, 0.0, 1.0);
}

geom::OrientedRect to_observer_frame(const sim::Vehicle& observer, const sim::Vehicle& target) {
  geom::OrientedRect r = target.footprint();
  r.center = geom::rotate(r.center - observer.position(), -observer.heading);
  r.heading -= observer.heading;
  return r;
}

bool in_headlight(const HeadlightRegion& region, const sim::Vehicle& observer, const sim::Vehicle& target) {
  const geom::Vec2 fwd{std::cos(observer.heading), std::sin(observer.heading)};
  const geom::Vec2 anchor = observer.position() + fwd * observer.half_extents.x;
  const geom::Vec2 rel = target.position() - anchor;
  const double dist = geom::norm(rel);
  if (dist > region.length) return false;
  if (dist == 0.0) return true;
  const double cos_angle = geom::dot(rel, fwd) / dist;
  return cos_angle >= std::cos(region.half_angle);
}

double detection_probability(const PerceptionContext& ctx, const sim::Vehicle& observer, const sim::Vehicle& target) {
  const double dist = geom::distance(observer.position(), target.position());
  if (dist > context_range(ctx)) return 0.0;
  return std::visit(Overloaded{
                        [](const BaseRange&) { return 1.0; },
                        [&](const Night& n) {
                          if (in_headlight(n.headlight, observer, target)) return 1.0;
                          return exp_decay(dist, n.decay.tau());
                        },
                        [&](const Fog& f) { return exp_decay(dist, f.decay.tau()); },
                        [&](const Distraction& d) {
                          return 1.0 - mask_coverage_ratio(d.mask, to_observer_frame(observer, target));
                        },
                        [&](const ColorBlind& c) {
                          const double similarity =
                              std::max(0.0, 1.0 - color_distance(target.color, c.blindness_color) / kColorDistanceMax);
                          return 1.0 - c.base_fail * similarity;
                        },
                    },
                    ctx);
}

std::set<int> sample_detections(const PerceptionContext& ctx, const sim::Vehicle& observer,
                                const std::vector<sim::Vehicle>& others, Rng& rng) {
  std::vector<const sim::Vehicle*> targets;
  for (const auto& v : others) {
    if (v.id != observer.id && v.active) targets.push_back(&v);
  }
  std::sort(targets.begin(), targets.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
  std::set<int> detected;
  for (const sim::Vehicle* t : targets) {
    const double p = detection_probability(ctx, observer, *t);
    if (rng.uniform() < p) detected.insert(t->id);
  }
  return detected;
}

}  // namespace imdp::perception
