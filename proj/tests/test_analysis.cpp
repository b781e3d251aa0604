#include "doctest.h"
#include "support.hpp"

#include "mintime/analysis.hpp"
#include "mintime/error.hpp"

#include <cmath>
#include <numbers>

using namespace mintime;
using namespace mintime::testing;

namespace {

constexpr double kH = 0.05;

const ValueField& eikonal_field() {
  static const ValueField vf = solve(eikonal(), disk_target(), Grid(square(3.0), kH));
  return vf;
}

std::vector<ValueField> refinement(const Multifunction& spec, double half, int levels, const SolveOptions& o = {}) {
  std::vector<ValueField> out;
  double h = 0.1;
  for (int l = 0; l < levels; ++l, h /= 2) out.push_back(solve(spec, disk_target(), Grid(square(half), h), o));
  return out;
}

const std::vector<ValueField>& shadow_levels() {
  static const auto levels = refinement(segment_shadow(), 2.0, 3);
  return levels;
}

const NonLipschitzReport& shadow_report() {
  static const NonLipschitzReport rep = detect_nonlipschitz(shadow_levels());
  return rep;
}

// x(t) = (3 - s t, 0) for t up to 2 / s, constant costate
Trajectory radial(double s, double pscale, int nodes = 2000) {
  Trajectory tr;
  const double duration = 2.0 / s;
  for (int k = 0; k <= nodes; ++k) {
    const double t = duration * k / nodes;
    tr.t.push_back(t);
    tr.x.push_back(make_vector({3.0 - s * t, 0.0}));
    tr.p.push_back(make_vector({-pscale, 0.0}));
  }
  return tr;
}

bool lists(const Verdict& v, Condition c) { return std::find(v.failures.begin(), v.failures.end(), c) != v.failures.end(); }

std::vector<State> annulus(int count, double r0, double r1, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<State> pts;
  for (int i = 0; i < count; ++i) {
    const double r = r0 + (r1 - r0) * u(rng), th = 2 * std::numbers::pi * u(rng);
    pts.push_back(make_vector({r * std::cos(th), r * std::sin(th)}));
  }
  return pts;
}

}  // namespace

TEST_CASE("eikonal certificate at (2,0)") {
  const auto T = time_function(eikonal_field());
  const auto good = certify_supergradient(T, make_vector({2.0, 0.0}), make_vector({-1.0, 0.0}), CertificateKind::kProximal);
  CHECK(good.certified());
  CHECK(good.C5 <= 1.0 + 10 * kH);
  CHECK(good.sample_count == 500);
  CHECK(good.sample_radius == 0.2);
  CHECK(good.used == 500);
  CHECK(good.beta_lo >= -0.4 - 1e-9);
  CHECK(good.beta_hi <= 0.2 + 1e-9);

  const auto bad = certify_supergradient(T, make_vector({2.0, 0.0}), make_vector({1.0, 0.0}), CertificateKind::kProximal);
  CHECK(bad.status == CertificateStatus::kCapExceeded);
  CHECK(bad.first_order > 0.9);

  // the rescaled costate is not a supergradient either
  const auto half = certify_supergradient(T, make_vector({2.0, 0.0}), make_vector({-0.5, 0.0}), CertificateKind::kProximal);
  CHECK(half.status == CertificateStatus::kCapExceeded);
}

TEST_CASE("certificate preconditions") {
  const auto T = time_function(eikonal_field());
  CHECK_THROWS_AS(certify_supergradient(T, make_vector({9.0, 0.0}), make_vector({-1.0, 0.0}), CertificateKind::kProximal),
                  Error);
  CertificateOptions o;
  o.radius = 0.0;
  CHECK_THROWS_AS(certify_supergradient(T, make_vector({2.0, 0.0}), make_vector({-1.0, 0.0}), CertificateKind::kProximal, o),
                  Error);
}

TEST_CASE("Normal eikonal arcs certify along their length") {
  const auto T = time_function(eikonal_field());
  FieldOptions fo;
  fo.arc.stop_box = square(3.0);
  const auto field = build_extremal_field(eikonal(), disk_target(), 16, 2.0, 1e-2, fo);
  for (std::size_t i = 0; i < field.arcs.size(); ++i) {
    const auto cert = certify_arc(T, field.arcs[i], disk_target(), 20);
    REQUIRE(cert.certificates.size() == 20);
    CHECK(cert.fraction() >= 0.95);
    for (const auto& c : cert.certificates) {
      CHECK(c.kind == CertificateKind::kProximal);
      CHECK(std::abs(c.x.norm() - 1.0) >= 5 * kH - 1e-9);
    }
  }
}

TEST_CASE("shadow Horizontal arcs yield Horizontal certificates") {
  const auto& vf = shadow_levels().back();
  const auto T = time_function(vf);
  FieldOptions fo;
  fo.arc.stop_box = square(2.0);
  const auto field = build_extremal_field(segment_shadow(), disk_target(), 64, 2.0, 1e-2, fo);
  int horizontal = 0;
  for (std::size_t i = 0; i < field.arcs.size(); ++i) {
    if (!field.valid[i] || field.arcs[i].kind != ArcKind::kHorizontal) continue;
    ++horizontal;
    const auto cert = certify_arc(T, field.arcs[i], disk_target(), 20);
    REQUIRE(!cert.certificates.empty());
    CHECK(cert.fraction() == 1.0);
    for (const auto& c : cert.certificates) {
      CHECK(c.kind == CertificateKind::kHorizontal);
      CHECK(std::isfinite(c.C5));
      CHECK(std::abs(std::abs(c.x[1]) - 1.0) < 1e-6);
    }
  }
  CHECK(horizontal >= 2);
}

TEST_CASE("constancy reports") {
  const auto target = disk_target();
  const auto spec = eikonal();
  const auto tc = make_terminal_condition(boundary_point_at(target, spec, make_vector({0.4})), 1e-9);
  const auto rep = hamiltonian_constancy_report(integrate_dual_arc(spec, target, tc, 2.0, 1e-2));
  CHECK(rep.level == 1.0);
  CHECK(rep.max_deviation <= 1e-10);
  CHECK(rep.mean_deviation <= rep.max_deviation);

  const auto drift = drift_ball(2, 0, 1);
  const auto dtc = make_terminal_condition(boundary_point_at(target, drift, make_vector({2.5})), 1e-9);
  const auto ref = constancy_refinement(drift, target, dtc, 2.0, {1e-2, 5e-3, 2.5e-3});
  REQUIRE(ref.orders.size() == 2);
  CHECK(ref.min_order() >= 3.0);

  // nonlinear drift so the error is not at rounding level
  const auto shear = shear_drift_ball();
  const auto stc = make_terminal_condition(boundary_point_at(target, shear, make_vector({2.0})), 1e-9);
  const auto sref = constancy_refinement(shear, target, stc, 1.5, {1e-2, 5e-3, 2.5e-3});
  CHECK(sref.max_deviation.front() > kConstancyFloor);
  CHECK(sref.min_order() >= 3.0);
  CHECK(sref.max_deviation.back() <= 1e-6);
}

TEST_CASE("segment example Horizontal arcs stay at level 0") {
  const auto target = disk_target();
  const auto spec = segment_example();
  const double sigma = sigma_threshold(target, spec, 512);
  for (double theta : {0.0, std::numbers::pi / 2}) {
    const auto tc = make_terminal_condition(boundary_point_at(target, spec, make_vector({theta})), sigma);
    REQUIRE(tc.kind == ArcKind::kHorizontal);
    const auto rep = hamiltonian_constancy_report(integrate_dual_arc(spec, target, tc, 1.0, 1e-3));
    CHECK(rep.level == 0.0);
    CHECK(rep.max_deviation <= 1e-8 + sigma);
  }
}

TEST_CASE("verifier accepts the analytic ray") {
  const auto v = verify_optimality(eikonal(), eikonal_field(), disk_target(), radial(1.0, 1.0));
  CHECK(v.optimal);
  CHECK(v.first_failure == Condition::kNone);
  CHECK(v.failures.empty());
  CHECK(v.conclusion_residual <= 5 * kH);
  CHECK(v.slope_residual <= 5 * kH);
  CHECK(v.slope == doctest::Approx(-1.0).epsilon(1e-3));
  CHECK(v.certified == v.certificate_checks);
  CHECK(v.certificate_checks == 25);
  CHECK(v.dyn_tol == doctest::Approx(10 * 1e-3));
  CHECK(v.ham_tol == 1e-3);
  CHECK(v.concl_tol == doctest::Approx(5 * kH));
}

TEST_CASE("verifier rejects perturbed trajectories") {
  const auto& vf = eikonal_field();
  const auto target = disk_target();

  SUBCASE("scaled costate") {
    const auto v = verify_optimality(eikonal(), vf, target, radial(1.0, 0.5));
    CHECK_FALSE(v.optimal);
    CHECK(lists(v, Condition::kHamiltonian));
    CHECK(v.max_hamiltonian_residual == doctest::Approx(0.5));
    CHECK_FALSE(lists(v, Condition::kDynamics));
  }
  SUBCASE("dilated by 10%") {
    auto tr = radial(1.0, 1.0);
    for (auto& t : tr.t) t *= 1.1;
    const auto v = verify_optimality(eikonal(), vf, target, tr);
    CHECK_FALSE(v.optimal);
    CHECK(v.first_failure == Condition::kDynamics);
    CHECK(v.max_dynamics_residual == doctest::Approx(1.0 - 1.0 / 1.1).epsilon(1e-6));
    // the time excess 0.2 is inside 5h, so only (a) sees it
    CHECK(v.failures.size() == 1);
  }
  SUBCASE("dilated by 50%") {
    auto tr = radial(1.0, 1.0);
    for (auto& t : tr.t) t *= 1.5;
    const auto v = verify_optimality(eikonal(), vf, target, tr);
    CHECK(v.first_failure == Condition::kDynamics);
    CHECK(lists(v, Condition::kConclusion));
    CHECK(v.max_hamiltonian_residual <= 1e-12);
  }
  SUBCASE("spiral with the same endpoints") {
    Trajectory tr;
    const int nodes = 4000;
    for (int k = 0; k <= nodes; ++k) {
      const double s = static_cast<double>(k) / nodes, r = 3 - 2 * s, th = 4 * std::numbers::pi * s * (1 - s);
      tr.x.push_back(make_vector({r * std::cos(th), r * std::sin(th)}));
      tr.p.push_back(make_vector({-1.0, 0.0}));
    }
    tr.t.push_back(0.0);
    for (int k = 1; k <= nodes; ++k) tr.t.push_back(tr.t.back() + (tr.x[k] - tr.x[k - 1]).norm());
    REQUIRE(tr.t.back() > 2.2);
    const auto v = verify_optimality(eikonal(), vf, target, tr);
    CHECK_FALSE(v.optimal);
    CHECK(v.first_failure == Condition::kDynamics);
    CHECK(lists(v, Condition::kConclusion));
    CHECK(v.slope_residual > v.concl_tol);
  }
  SUBCASE("must end on the target") {
    auto tr = radial(1.0, 1.0);
    tr.t.pop_back();
    tr.x.pop_back();
    tr.p.pop_back();
    tr.t.pop_back();
    tr.x.pop_back();
    tr.p.pop_back();
    tr.x.back() = make_vector({1.5, 0.0});
    CHECK_THROWS_AS(verify_optimality(eikonal(), vf, target, tr), Error);
  }
}

TEST_CASE("verifier accepts characteristic trajectories and rejects lengthened ones") {
  const auto& vf = eikonal_field();
  const auto target = disk_target();
  const auto spec = eikonal();
  for (double theta : {0.7, 2.2, 4.0}) {
    const auto tc = make_terminal_condition(boundary_point_at(target, spec, make_vector({theta})), 1e-9);
    const auto arc = integrate_dual_arc(spec, target, tc, 1.8, 1e-3);
    auto tr = trajectory_from_arc(arc);
    CHECK(tr.t.front() == 0.0);
    CHECK(target.g(tr.x.back()) <= 1e-9);
    const auto v = verify_optimality(spec, vf, target, tr);
    CHECK(v.optimal);
    for (auto& t : tr.t) t *= 1.1;
    const auto w = verify_optimality(spec, vf, target, tr);
    CHECK_FALSE(w.optimal);
    CHECK(w.first_failure == Condition::kDynamics);
  }
}

TEST_CASE("eikonal and Petrov-type drift have no singular cloud") {
  const auto eik = detect_nonlipschitz(refinement(eikonal(), 3.0, 3));
  CHECK(eik.points.empty());
  CHECK(eik.unbounded.empty());
  CHECK(eik.spacings.size() == 3);

  const auto weak = detect_nonlipschitz(refinement(drift_ball(0.5, 0.0, 1.0), 3.0, 3));
  CHECK(weak.points.empty());
}

TEST_CASE("shadow cloud sits next to the tangent lines") {
  const auto& rep = shadow_report();
  REQUIRE(rep.points.size() >= 100);
  CHECK(rep.unbounded.empty());
  REQUIRE(rep.ratios.size() == rep.points.size());
  REQUIRE(rep.severity.size() == rep.points.size());
  for (std::size_t i = 0; i < rep.points.size(); ++i) {
    CHECK(std::abs(std::abs(rep.points[i][1]) - 1.0) <= 0.025 + 1e-9);
    CHECK(rep.ratios[i] >= rep.L0);
    CHECK(rep.severity[i] >= 0);
  }
  bool left = false, right = false;
  for (const auto& p : rep.points) {
    left = left || p[0] < -1.0;
    right = right || p[0] > 1.0;
  }
  CHECK(left);
  CHECK(right);
}

TEST_CASE("detector preconditions") {
  CHECK_THROWS_AS(detect_nonlipschitz({eikonal_field()}), Error);
  SolveOptions o;
  o.max_iterations = 3;
  o.throw_on_nonconvergence = false;
  auto levels = refinement(eikonal(), 2.0, 2, o);
  CHECK_THROWS_AS(detect_nonlipschitz(levels), Error);
}

TEST_CASE("difference ratios of the eikonal field") {
  const auto r = difference_ratios(eikonal_field());
  const auto& vf = eikonal_field();
  double worst = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (vf.in_target[i]) CHECK(r[i] == -1.0);
    worst = std::max(worst, r[i]);
  }
  CHECK(worst <= 1.5);
  CHECK(worst >= 0.9);
}

TEST_CASE("descent traces end near Sigma on the shadow scenario") {
  const auto target = disk_target();
  const auto spec = segment_shadow();
  const auto sigma = find_sigma_set(target, spec, 512);
  REQUIRE(sigma.size() == 2);
  const double h = shadow_levels().back().grid.min_spacing();
  const double tol = sigma_threshold(target, spec, 512);
  const auto rep = check_sigma_duality(shadow_levels().back(), spec, target, shadow_report().points, sigma, 10 * h, 2 * tol);
  CHECK(rep.entries.size() == shadow_report().points.size());
  CHECK(rep.failures == 0);
  for (const auto& e : rep.entries) {
    CHECK(e.reached_target);
    CHECK(e.sigma_h <= 2 * tol);
  }
}

TEST_CASE("eikonal descent") {
  const auto tr = trace_descent(eikonal_field(), eikonal(), disk_target(), make_vector({2.0, 0.0}));
  CHECK(tr.reached_target);
  CHECK((tr.path.back() - make_vector({1.0, 0.0})).norm() <= 2 * kH);
}

TEST_CASE("flow-out containment") {
  const auto target = disk_target();
  FlowoutOptions fo;
  fo.clip = square(2.0);

  SUBCASE("eikonal is vacuous") {
    const auto rep = flowout_check(eikonal(), target, {}, {}, fo);
    CHECK(rep.max_distance == 0.0);
    CHECK_FALSE(rep.alarm);
  }
  SUBCASE("shadow cloud lies on the flow-out of Sigma") {
    const auto spec = segment_shadow();
    const auto sigma = find_sigma_set(target, spec, 512);
    const auto rep = flowout_check(spec, target, sigma, shadow_report().points, fo);
    const double h = shadow_levels().back().grid.min_spacing();
    CHECK_FALSE(rep.alarm);
    CHECK(rep.lattice_spacing == doctest::Approx(1e-2));
    CHECK(rep.distances.size() == shadow_report().points.size());
    CHECK(rep.max_distance <= 5 * h + rep.lattice_spacing);
    for (const auto& s : rep.samples) CHECK(fo.clip->contains(s));
  }
  SUBCASE("singular points without Sigma raise the alarm") {
    const auto rep = flowout_check(eikonal(), target, {}, {make_vector({0.0, 1.5})}, fo);
    CHECK(rep.alarm);
    CHECK(std::isinf(rep.max_distance));
  }
}

TEST_CASE("box counting on synthetic clouds") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<State> seg, patch;
  for (int i = 0; i < 1000; ++i) {
    const double s = u(rng);
    seg.push_back(make_vector({s, 0.3 * s}));
    patch.push_back(make_vector({u(rng), u(rng)}));
  }
  const auto a = box_counting_dimension(seg);
  CHECK(a.dimension >= 0.85);
  CHECK(a.dimension <= 1.15);
  CHECK(a.scales.size() >= 4);
  CHECK(a.counts.size() == a.scales.size());
  const auto b = box_counting_dimension(patch);
  CHECK(b.dimension >= 1.8);
  CHECK(b.dimension <= 2.2);

  const auto fixed = box_counting_dimension(patch, {0.5, 0.25, 0.125, 0.0625});
  CHECK(fixed.scales.size() == 4);
  CHECK(fixed.counts.front() <= 9);

  seg.resize(49);
  CHECK_THROWS_AS(box_counting_dimension(seg), Error);
  CHECK_THROWS_AS(box_counting_dimension(patch, {0.5, 0.25, 0.125}), Error);
}

TEST_CASE("exterior sphere on the eikonal annulus") {
  const auto T = time_function(eikonal_field());
  const auto pts = annulus(100, 1.2, 2.0, 11);
  const auto rep = exterior_sphere_scan(T, pts);
  CHECK(rep.no_normal == 0);
  CHECK(rep.radius == 0.3);
  CHECK(rep.min_theta >= 1.0 - 10 * kH);
  for (double th : rep.theta) CHECK(th > 0.0);

  const auto off = exterior_sphere_scan(T, {make_vector({9.0, 9.0})});
  CHECK(off.no_normal == 1);
  CHECK(std::isnan(off.theta.front()));
}

TEST_CASE("exterior sphere of a spherical bowl") {
  // hypograph of c - sqrt(R^2 - |y|^2) has the exterior ball of radius R everywhere
  const double R = 1.5, c = 2.0;
  TimeFunction bowl;
  bowl.value = [&](const State& y) -> std::optional<double> { return c - std::sqrt(R * R - y.squaredNorm()); };
  bowl.gradient = [&](const State& y) -> std::optional<Vector> { return Vector(y / std::sqrt(R * R - y.squaredNorm())); };
  std::mt19937_64 rng(3);
  std::vector<State> pts;
  for (int i = 0; i < 40; ++i) pts.push_back(random_vector(rng, 2, -0.4, 0.4));
  const auto rep = exterior_sphere_scan(bowl, pts);
  CHECK(rep.min_theta >= 0.8 * R);
  CHECK(rep.min_theta <= 1.2 * R);
}

TEST_CASE("Lipschitz ratios agree with the gradient bound") {
  const auto T = time_function(eikonal_field());
  const auto pts = annulus(100, 1.2, 2.0, 5);
  CHECK(exterior_sphere_scan(T, pts).min_theta > 0.0);
  CHECK(sampled_time_lipschitz(T, pts, 0.2, 50) <= 1.0 * (1.0 + 0.1));
}

TEST_CASE("DPP monotonicity along random admissible trajectories") {
  std::mt19937_64 rng(17);
  for (std::uint64_t s = 0; s < 4; ++s) {
    const State x0 = random_vector(rng, 2, -2.5, 2.5);
    CHECK(dpp_violation(eikonal(), eikonal_field(), x0, 2.0, 1e-2, s) <= 5 * kH);
  }
}
