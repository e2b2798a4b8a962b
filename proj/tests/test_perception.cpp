#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <memory>

#include "imdp/errors.hpp"
#include "imdp/perception.hpp"

using namespace imdp;
using namespace imdp::perception;
using sim::Vec2;

namespace {

std::shared_ptr<const sim::Path> line(Vec2 a, Vec2 b) {
  return std::make_shared<const sim::Path>(std::vector<Vec2>{a, b},
                                           std::vector<sim::SegmentKind>{sim::SegmentKind::Straight});
}

// Observer at the origin heading +x; target at (x, y) heading +x.
std::pair<sim::Vehicle, sim::Vehicle> pair_at(double x, double y, sim::Rgb color = {0, 0, 255}) {
  auto obs = line({-100, 0}, {100, 0});
  auto tgt = line({-100, y}, {100, y});
  return {sim::make_vehicle(0, obs, 100.0, 5.0, 200.0), sim::make_vehicle(1, tgt, 100.0 + x, 5.0, 200.0, color)};
}

double redmean(sim::Rgb a, sim::Rgb b) {
  const double rbar = 0.5 * (a.r + b.r);
  const double dr = a.r - b.r;
  const double dg = a.g - b.g;
  const double db = a.b - b.b;
  return std::sqrt((2.0 + rbar / 256.0) * dr * dr + 4.0 * dg * dg + (2.0 + (255.0 - rbar) / 256.0) * db * db);
}

}  // namespace

TEST_CASE("decay_tau hand values and errors") {
  CHECK(decay_tau(30.0, 0.1) == doctest::Approx(13.029).epsilon(1e-4));
  CHECK(decay_tau(10.0, std::exp(-1.0)) == doctest::Approx(10.0).epsilon(1e-14));
  CHECK_THROWS_AS(decay_tau(10.0, 1.0), InvalidDecayParams);
  CHECK_THROWS_AS(decay_tau(10.0, 0.0), InvalidDecayParams);
  CHECK_THROWS_AS(decay_tau(0.0, 0.5), InvalidDecayParams);
  CHECK_THROWS_AS(decay_tau(-1.0, 0.5), InvalidDecayParams);
}

TEST_CASE("exp_decay values") {
  CHECK(exp_decay(0.0, 7.0) == 1.0);
  CHECK(exp_decay(7.0, 7.0) == doctest::Approx(0.36787944117).epsilon(1e-10));
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const double x = rng.uniform(0.5, 200.0);
    const double y = rng.uniform(0.01, 0.99);
    CHECK(std::abs(exp_decay(x, decay_tau(x, y)) - y) < 1e-12);
  }
}

TEST_CASE("color distance matches the redmean formula") {
  CHECK(color_distance({10, 20, 30}, {10, 20, 30}) == 0.0);
  CHECK(color_distance({255, 0, 0}, {0, 255, 0}) == doctest::Approx(650.0).epsilon(0.1 / 650.0));
  CHECK(color_distance({0, 0, 0}, {255, 255, 255}) == doctest::Approx(764.8).epsilon(0.1 / 764.8));
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const sim::Rgb a{int(rng.index(256)), int(rng.index(256)), int(rng.index(256))};
    const sim::Rgb b{int(rng.index(256)), int(rng.index(256)), int(rng.index(256))};
    CHECK(color_distance(a, b) == doctest::Approx(redmean(a, b)).epsilon(1e-12));
    CHECK(color_distance(a, b) == color_distance(b, a));
    CHECK(color_distance(a, b) >= 0.0);
    CHECK(color_distance(a, b) <= kColorDistanceMax);
  }
}

TEST_CASE("mask coverage ratio") {
  const geom::OrientedRect target{{10.0, 0.0}, 0.0, 2.0, 1.0};
  CHECK(mask_coverage_ratio({{20, 20}, {30, 30}}, target) == 0.0);
  CHECK(mask_coverage_ratio({{0, -5}, {20, 5}}, target) == doctest::Approx(1.0));
  CHECK(mask_coverage_ratio({{0, -5}, {10, 5}}, target) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(mask_coverage_ratio({{0, 0}, {20, 5}}, target) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("detection probability per context") {
  {
    const auto [o, t] = pair_at(10.0, 0.0);
    CHECK(detection_probability(BaseRange{50}, o, t) == 1.0);
    const auto [o2, t2] = pair_at(60.0, 0.0);
    CHECK(detection_probability(BaseRange{50}, o2, t2) == 0.0);
  }
  {
    Night n;
    n.decay = {30.0, 0.1};
    const auto [o, t] = pair_at(10.0, 0.0);  // straight ahead, inside the headlight cone
    CHECK(detection_probability(n, o, t) == 1.0);
    const auto [o2, t2] = pair_at(0.0, 15.0);  // abeam, outside the cone
    CHECK(detection_probability(n, o2, t2) == doctest::Approx(exp_decay(15.0, n.decay.tau())).epsilon(1e-12));
  }
  {
    Fog f;
    f.decay = {30.0, 0.1};
    const auto [o, t] = pair_at(30.0, 0.0);
    CHECK(detection_probability(f, o, t) == doctest::Approx(0.1).epsilon(1e-12));
  }
  {
    Distraction d{ObservationMask::full(50.0), 50.0};
    const auto [o, t] = pair_at(10.0, 3.0);
    CHECK(detection_probability(d, o, t) == 0.0);
  }
  {
    ColorBlind c;
    c.base_fail = 0.35;
    const auto [o, t] = pair_at(10.0, 0.0, {255, 0, 0});
    CHECK(detection_probability(c, o, t) == doctest::Approx(0.65).epsilon(1e-12));
    const auto [o2, t2] = pair_at(10.0, 0.0, {0, 0, 255});
    CHECK(detection_probability(c, o2, t2) > 0.65);
  }
}

TEST_CASE("decay monotonicity and severity ordering") {
  Fog mild;
  mild.decay = {40.0, 0.1};
  Fog harsh;
  harsh.decay = {30.0, 0.1};
  Night night;
  night.decay = {30.0, 0.1};
  double prev = 1.0;
  for (double d = 0.5; d < 50.0; d += 0.5) {
    const auto [o, t] = pair_at(0.0, d);
    const double p = detection_probability(harsh, o, t);
    CHECK(p <= prev);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    CHECK(detection_probability(mild, o, t) >= p);
    CHECK(detection_probability(night, o, t) <= 1.0);
    prev = p;
  }
}

TEST_CASE("sample_detections draws") {
  const auto [o, near] = pair_at(10.0, 0.0);
  sim::Vehicle far = near;
  far.id = 2;
  far.arc = 190.0;
  const std::vector<sim::Vehicle> others{o, near, far};
  Rng rng(1);
  const auto all = sample_detections(BaseRange{50}, o, others, rng);
  CHECK(all == std::set<int>{1});
  const auto none = sample_detections(Distraction{ObservationMask::full(50.0), 50.0}, o, others, rng);
  CHECK(none.empty());

  // Colour-blind observer against a half-similar target colour gives p = 0.5.
  ColorBlind c;
  c.base_fail = 1.0;
  c.blindness_color = {0, 0, 0};
  const double target_d = 0.5 * kColorDistanceMax;
  // Grey level whose distance from black equals half the normalising range.
  int grey = 0;
  while (color_distance({0, 0, 0}, {grey, grey, grey}) < target_d) ++grey;
  const auto [o3, t3] = pair_at(10.0, 0.0, {grey, grey, grey});
  const double p = detection_probability(c, o3, t3);
  Rng r2(99);
  int hits = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) hits += sample_detections(c, o3, {o3, t3}, r2).size();
  CHECK(std::abs(p - 0.5) < 0.01);
  CHECK(std::abs(static_cast<double>(hits) / n - p) < 0.02);

  Rng a(42);
  Rng b(42);
  CHECK(sample_detections(c, o3, {o3, t3}, a) == sample_detections(c, o3, {o3, t3}, b));
}

TEST_CASE("context validation") {
  Night bad;
  bad.decay = {30.0, 1.5};
  CHECK_THROWS_AS(validate(PerceptionContext{bad}), InvalidDecayParams);
  ColorBlind c;
  c.base_fail = 1.5;
  CHECK_THROWS(validate(PerceptionContext{c}));
  CHECK_THROWS(validate(PerceptionContext{BaseRange{-1.0}}));
  CHECK_NOTHROW(validate(PerceptionContext{BaseRange{50.0}}));
}
