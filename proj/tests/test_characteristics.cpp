#include "doctest.h"
#include "support.hpp"

#include "mintime/characteristics.hpp"
#include "mintime/error.hpp"

#include <cmath>
#include <numbers>

using namespace mintime;
using namespace mintime::testing;

namespace {

TerminalCondition normal_tc(const Multifunction& spec, const TargetSet& target, double theta) {
  return make_terminal_condition(boundary_point_at(target, spec, make_vector({theta})), 1e-9);
}

double h_deviation(const DualArc& arc, double level) {
  double dev = 0.0;
  for (double h : arc.h_trace) dev = std::max(dev, std::abs(h - level));
  return dev;
}

ExtremalField field_of(const Multifunction& spec, int count, double horizon, double step) {
  FieldOptions fo;
  fo.arc.stop_box = square(3.0);
  return build_extremal_field(spec, disk_target(), count, horizon, step, fo);
}

}  // namespace

TEST_CASE("eikonal arc from (1,0) is the ray to (3,0)") {
  const auto spec = eikonal();
  const auto target = disk_target();
  const auto tc = normal_tc(spec, target, 0.0);
  CHECK(tc.kind == ArcKind::kNormal);
  CHECK(tc.p_terminal.isApprox(make_vector({-1.0, 0.0}), 1e-12));

  const auto arc = integrate_dual_arc(spec, target, tc, 2.0, 1e-2);
  CHECK(arc.times.front() == 0.0);
  CHECK(arc.duration() == doctest::Approx(2.0));
  CHECK((arc.x_path.front() - make_vector({3.0, 0.0})).norm() < 1e-12);
  CHECK((arc.x_path.back() - make_vector({1.0, 0.0})).norm() < 1e-12);
  for (const auto& p : arc.p_path) CHECK((p - make_vector({-1.0, 0.0})).norm() < 1e-12);
  CHECK(h_deviation(arc, 1.0) <= 1e-10);
  for (std::size_t k = 1; k < arc.size(); ++k) CHECK(arc.times[k] > arc.times[k - 1]);
}

TEST_CASE("terminal condition classification") {
  const auto target = disk_target();
  const auto drift = drift_ball(2, 0, 1);
  // xi = -(cos, sin), H = 1 - 2 cos(theta)
  const auto bp = boundary_point_at(target, drift, make_vector({std::numbers::pi}));
  CHECK(bp.h_value == doctest::Approx(3.0));
  const auto tc = make_terminal_condition(bp, 1e-6);
  CHECK(tc.kind == ArcKind::kNormal);
  CHECK((tc.p_terminal - bp.xi / 3.0).norm() < 1e-14);

  const auto sigma = boundary_point_at(target, drift, make_vector({std::numbers::pi / 3}));
  CHECK(std::abs(sigma.h_value) < 1e-12);
  const auto htc = make_terminal_condition(sigma, 1e-6);
  CHECK(htc.kind == ArcKind::kHorizontal);
  CHECK((htc.p_terminal - sigma.xi).norm() == 0.0);
  CHECK(to_string(ArcKind::kHorizontal) == "horizontal");
}

TEST_CASE("Hamiltonian constancy decays at fourth order on the shear") {
  const auto spec = shear_drift_ball();
  const auto target = disk_target();
  for (double theta : {0.4, 2.0, 3.7, 5.5}) {
    const auto tc = normal_tc(spec, target, theta);
    REQUIRE(tc.kind == ArcKind::kNormal);
    std::vector<double> dev;
    for (double step : {1e-2, 5e-3, 2.5e-3}) dev.push_back(h_deviation(integrate_dual_arc(spec, target, tc, 1.5, step), 1.0));
    CAPTURE(theta);
    CHECK(dev[0] <= 1e-6);
    // below ~1e-13 the trace is at rounding level
    if (dev[1] > 1e-13) CHECK(std::log2(dev[0] / dev[1]) >= 3.0);
    if (dev[2] > 1e-13) CHECK(std::log2(dev[1] / dev[2]) >= 3.0);
  }
}

TEST_CASE("time reversal and Euler identity") {
  const auto target = disk_target();
  for (const auto& spec : {eikonal(), drift_ball(2, 0, 1), shear_drift_ball()}) {
    for (double theta : {1.9, 3.1, 4.4}) {
      const auto tc = normal_tc(spec, target, theta);
      if (tc.kind != ArcKind::kNormal || tc.boundary_point.h_value < 0.0) continue;
      const double step = 1e-2;
      const auto arc = integrate_dual_arc(spec, target, tc, 1.0, step);
      const auto [x, p] = integrate_forward(spec, arc.x_path.front(), arc.p_path.front(), arc.duration(), step);
      const double tol = 10 * std::pow(step, 4) + 1e-9;
      CHECK((x - tc.boundary_point.x_bar).norm() <= tol);
      CHECK((p - tc.p_terminal).norm() <= tol * std::max(1.0, tc.p_terminal.norm()));
      for (std::size_t k = 0; k < arc.size(); ++k)
        CHECK(std::abs(arc.p_path[k].dot(arc.xdot_path[k]) - arc.h_trace[k]) <= 1e-10);
    }
  }
}

TEST_CASE("arc preconditions and costate blowup") {
  const auto spec = eikonal();
  const auto target = disk_target();
  const auto tc = normal_tc(spec, target, 0.0);
  CHECK_THROWS_AS(integrate_dual_arc(spec, target, tc, 0.0, 1e-3), Error);
  CHECK_THROWS_AS(integrate_dual_arc(spec, target, tc, 1.0, 0.2), Error);
  auto off = tc;
  off.boundary_point.x_bar = make_vector({1.5, 0.0});
  CHECK_THROWS_AS(integrate_dual_arc(spec, target, off, 1.0, 1e-2), Error);

  ArcOptions tight;
  tight.costate_max = 0.5;
  try {
    integrate_dual_arc(spec, target, tc, 1.0, 1e-2, tight);
    FAIL("expected costate blowup");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCostateBlowup);
  }
}

TEST_CASE("arcs stop when they leave the box") {
  ArcOptions o;
  o.stop_box = square(2.0);
  const auto arc = integrate_dual_arc(eikonal(), disk_target(), normal_tc(eikonal(), disk_target(), 0.0), 3.0, 1e-2, o);
  CHECK(arc.left_box);
  CHECK(arc.x_path.front()[0] <= 2.0 + 1e-2);
  CHECK(arc.x_path.front()[0] > 1.9);
}

TEST_CASE("eikonal field: radial rays, no crossings") {
  const auto field = build_extremal_field(eikonal(), disk_target(), 16, 2.0, 1e-2);
  REQUIRE(field.arcs.size() == 16);
  for (std::size_t i = 0; i < field.arcs.size(); ++i) {
    const auto& arc = field.arcs[i];
    CHECK(field.valid[i]);
    CHECK(!field.crossing[i]);
    CHECK(arc.kind == ArcKind::kNormal);
    CHECK((arc.x_path.front() - 3.0 * arc.x_path.back()).norm() < 1e-10);
  }
  CHECK(field.skipped_inward == 0);
  CHECK(field.match_radius > 0.0);
  CHECK_THROWS_AS(build_extremal_field(eikonal(), disk_target(), 4, 2.0, 1e-2), Error);
}

TEST_CASE("constant drift field over a disk has no crossings") {
  // T is convex here: the reachable set at time t is a convex hull of translates of the disk.
  const auto field = field_of(drift_ball(2, 0, 1), 128, 6.0, 1e-2);
  std::size_t normal = 0;
  for (std::size_t i = 0; i < field.arcs.size(); ++i) {
    CHECK(!field.crossing[i]);
    normal += field.arcs[i].kind == ArcKind::kNormal;
  }
  CHECK(normal > 40);
  CHECK(field.skipped_inward > 40);
}

TEST_CASE("slow pocket focuses the field on the symmetry axis") {
  const auto field = field_of(slow_ball(), 128, 6.0, 1e-2);
  std::size_t crossed = 0;
  for (std::size_t i = 0; i < field.boundary_count; ++i) {
    if (!field.crossing[i]) continue;
    ++crossed;
    const auto& arc = field.arcs[i];
    const double s = field.crossing_time_to_go[i];
    CHECK(s < arc.duration());
    std::size_t k = 0;
    while (k + 1 < arc.size() && arc.time_to_go(k) > s + 0.5 * arc.step) ++k;
    // mirror-image arcs meet on x2 = 0, next to the pocket at (-1.8, 0)
    CHECK(std::abs(arc.x_path[k][1]) < 0.05);
    CHECK(std::abs(arc.x_path[k][0] + 1.8) < 0.3);
  }
  CHECK(crossed >= 2);
}

TEST_CASE("Sigma points of the segment example carry horizontal arcs") {
  const auto spec = segment_example();
  const auto field = field_of(spec, 64, 1.0, 1e-2);
  std::size_t horizontal = 0;
  for (std::size_t i = 0; i < field.arcs.size(); ++i) {
    if (!field.valid[i] || field.arcs[i].kind != ArcKind::kHorizontal) continue;
    ++horizontal;
    CHECK(h_deviation(field.arcs[i], 0.0) <= 1e-6 + field.sigma_threshold);
    const auto& x = field.arcs[i].x_path.back();
    CHECK(std::min((x - make_vector({1, 0})).norm(), (x - make_vector({0, 1})).norm()) < 1e-6);
  }
  CHECK(horizontal >= 2);
}

TEST_CASE("flow Phi") {
  const auto spec = eikonal();
  const auto target = disk_target();
  const State xb = make_vector({1.0, 0.0});
  CHECK(flow_phi(spec, target, 0.0, xb, 1e-2) == xb);
  CHECK((flow_phi(spec, target, 1.5, xb, 1e-2) - make_vector({2.5, 0.0})).norm() < 1e-12);

  // with H(x_bar, xi) = 1 Phi coincides with the time-reversed dual arc
  const double step = 1e-2;
  auto check_against_arc = [&](const Multifunction& s, double theta) {
    const auto tc = normal_tc(s, target, theta);
    REQUIRE(tc.boundary_point.h_value == doctest::Approx(1.0));
    const auto arc = integrate_dual_arc(s, target, tc, 1.0, step);
    const State phi = flow_phi(s, target, 1.0, tc.boundary_point.x_bar, step);
    CHECK((phi - arc.x_path.front()).norm() <= 10 * step);
  };
  for (double theta : {0.0, 1.0, 2.5, 4.0}) check_against_arc(spec, theta);
  check_against_arc(shear_drift_ball(), std::numbers::pi / 2);
  check_against_arc(shear_drift_ball(), 0.0);
}

TEST_CASE("sticky branches follow either side of a tie") {
  const auto spec = segment_shadow();
  const auto target = disk_target();
  const State top = make_vector({0.0, 1.0});
  const auto left = flow_phi_path(spec, target, top, 1.0, 1e-2);
  CHECK((left.back().x - make_vector({-1.0, 1.0})).norm() < 1e-9);
  const auto right = flow_phi_path(spec, target, top, 1.0, 1e-2, BranchRule::kSticky, make_vector({-1.0, 0.0}));
  CHECK((right.back().x - make_vector({1.0, 1.0})).norm() < 1e-9);
  for (const auto& s : right) CHECK(std::abs(s.x[1] - 1.0) < 1e-12);
}

TEST_CASE("value synthesis on the eikonal field") {
  const auto target = disk_target();
  const auto field = field_of(eikonal(), 128, 2.0, 1e-2);
  const auto s = synthesize_T(field, target, make_vector({2.0, 0.0}));
  REQUIRE(s);
  CHECK(std::abs(s->value - 1.0) <= field.match_radius);
  CHECK(field.arcs[static_cast<std::size_t>(s->arc)].kind == ArcKind::kNormal);

  const auto inside = synthesize_T(field, target, make_vector({0.3, -0.2}));
  REQUIRE(inside);
  CHECK(inside->value == 0.0);
  CHECK(inside->arc == -1);

  CHECK(!synthesize_T(field, target, make_vector({2.9, 2.9})));

  std::mt19937_64 rng(7);
  for (int k = 0; k < 200; ++k) {
    const Vector q = random_vector(rng, 2, -2.0, 2.0);
    const auto v = synthesize_T(field, target, q);
    REQUIRE(v);
    CHECK(std::abs(v->value - std::max(q.norm() - 1.0, 0.0)) <= field.match_radius);
  }
}

TEST_CASE("horizontal arcs never supply values") {
  const auto spec = segment_example();
  const auto target = disk_target();
  const auto field = field_of(spec, 64, 1.0, 1e-2);
  std::mt19937_64 rng(3);
  int matched = 0;
  for (int k = 0; k < 300; ++k) {
    const Vector q = random_vector(rng, 2, -2.0, 2.0);
    const auto v = synthesize_T(field, target, q);
    if (!v || v->arc < 0) continue;
    ++matched;
    CHECK(field.arcs[static_cast<std::size_t>(v->arc)].kind == ArcKind::kNormal);
  }
  CHECK(matched > 0);
}

TEST_CASE("field construction is deterministic") {
  const auto a = field_of(shear_drift_ball(), 48, 1.0, 1e-2);
  const auto b = field_of(shear_drift_ball(), 48, 1.0, 1e-2);
  REQUIRE(a.arcs.size() == b.arcs.size());
  for (std::size_t i = 0; i < a.arcs.size(); ++i) {
    CHECK(a.arcs[i].x_path == b.arcs[i].x_path);
    CHECK(a.crossing[i] == b.crossing[i]);
  }
}
