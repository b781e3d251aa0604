// Acceptance suite: one PASS/FAIL line per criterion. Exit status is 0 when every failing
// criterion is listed in --expect-fail.

#include "support.hpp"

#include "mintime/analysis.hpp"
#include "mintime/characteristics.hpp"
#include "mintime/error.hpp"
#include "mintime/hjb.hpp"
#include "mintime_cli/commands.hpp"
#include "mintime_cli/io.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace mintime;
using namespace mintime::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> lines;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    lines.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
};

std::string num(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

constexpr double kH = 0.05;
constexpr std::uint64_t kSeed = 20240611;

Box box3() { return square(3.0); }

const ValueField& eikonal_vf() {
  static const ValueField vf = solve(eikonal(), disk_target(), Grid(box3(), kH));
  return vf;
}

const ValueField& drift_vf() {
  static const ValueField vf = solve(drift_ball(2, 0, 1), disk_target(), Grid(box3(), kH));
  return vf;
}

ExtremalField field_of(const Multifunction& spec, double horizon, double step, const Box& box, int count = 64) {
  FieldOptions fo;
  fo.arc.stop_box = box;
  return build_extremal_field(spec, disk_target(), count, horizon, step, fo);
}

std::vector<ValueField> ladder(const Multifunction& spec, const Box& box, double coarse, int levels, SolveOptions o = {}) {
  std::vector<ValueField> out;
  double h = coarse;
  for (int l = 0; l < levels; ++l, h /= 2) {
    out.push_back(solve(spec, disk_target(), Grid(box, h), o));
    if (o.T_max == 0.0) o.T_max = out.front().T_max;
  }
  return out;
}

const std::vector<ValueField>& shadow_ladder() {
  static const auto levels = ladder(segment_shadow(), square(2.0), 0.1, 3);
  return levels;
}

const NonLipschitzReport& shadow_cloud() {
  static const auto rep = detect_nonlipschitz(shadow_ladder());
  return rep;
}

// ---------------------------------------------------------------- 1

Outcome eikonal_accuracy() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const ValueField vf = solve(eikonal(), disk_target(), Grid(box3(), kH));
  const double elapsed = seconds_since(t0);
  double worst = 0.0;
  std::size_t reachable = 0;
  for (std::size_t i = 0; i < vf.grid.size(); ++i) {
    if (!vf.reachable[i]) continue;
    ++reachable;
    worst = std::max(worst, std::abs(vf.T[i] - std::max(vf.grid.node(i).norm() - 1.0, 0.0)));
  }
  o.check(reachable == vf.grid.size(), "all " + std::to_string(vf.grid.size()) + " nodes reachable");
  o.check(worst <= 5 * kH, "max |T - (|x| - 1)+| = " + num(worst) + " <= 5h = " + num(5 * kH));
  o.check(elapsed <= 60.0, "solve time " + num(elapsed, 3) + " s <= 60 s");
  return o;
}

// ---------------------------------------------------------------- 2

Outcome hamiltonian_constancy() {
  Outcome o;
  // orders come from the whole ladder; pairs whose finer deviation is at accumulated rounding
  // (50 eps per step) carry no order information
  const std::vector<double> steps = {2e-2, 1e-2, 5e-3, 2.5e-3, 1e-3};
  const double horizon = 2.0;
  auto rounding = [&](double step) { return 50.0 * std::numeric_limits<double>::epsilon() * horizon / step; };
  ArcOptions ao;
  ao.stop_box = box3();
  struct Case {
    std::string name;
    Multifunction spec;
  };
  const std::vector<Case> cases = {
      {"eikonal", eikonal()},
      {"Ball(0, 0.15 + |x - (-1.8, 0)|^2)", slow_ball()},
      {"DriftBall c = (2, 0)", drift_ball(2, 0, 1)},
      {"DriftBall c(x) = (x2, 0)", shear_drift_ball()}};
  const auto target = disk_target();
  for (const auto& c : cases) {
    const auto samples = sample_boundary(target, c.spec, 64);
    const double thr = sigma_threshold(target, c.spec, 512);
    double worst = 0.0, order = std::numeric_limits<double>::infinity();
    std::size_t arcs = 0;
    for (const auto& bp : samples) {
      if (bp.h_value <= thr) continue;  // Horizontal or inward samples have no Normal arc
      const auto tc = make_terminal_condition(bp, thr);
      const auto ref = constancy_refinement(c.spec, target, tc, horizon, steps, ao);
      worst = std::max(worst, ref.max_deviation.back());
      for (std::size_t k = 1; k < steps.size(); ++k) {
        if (ref.max_deviation[k] <= rounding(steps[k])) continue;
        order = std::min(order, std::log(ref.max_deviation[k - 1] / ref.max_deviation[k]) / std::log(steps[k - 1] / steps[k]));
      }
      ++arcs;
    }
    o.check(arcs > 0 && worst <= 1e-6, c.name + ": " + std::to_string(arcs) + " Normal arcs, max |H - 1| at step 1e-3 = " +
                                           num(worst) + " <= 1e-6");
    o.check(order >= 3.0, c.name + ": observed order " + (std::isinf(order) ? std::string("inf (rounding level)") : num(order)) +
                              " >= 3");
  }

  const auto spec = segment_example();
  const double sigma = sigma_threshold(target, spec, 512);
  const auto field = field_of(spec, 1.5, 1e-3, square(1.5));
  double worst = 0.0;
  std::size_t horizontal = 0;
  for (std::size_t i = 0; i < field.arcs.size(); ++i) {
    if (!field.valid[i] || field.arcs[i].kind != ArcKind::kHorizontal) continue;
    ++horizontal;
    worst = std::max(worst, hamiltonian_constancy_report(field.arcs[i]).max_deviation);
  }
  o.check(horizontal > 0 && worst <= 1e-6 + sigma, "Segment Example: " + std::to_string(horizontal) +
                                                       " Horizontal arcs, max |H| = " + num(worst) + " <= 1e-6 + " + num(sigma));
  return o;
}

// ---------------------------------------------------------------- 3

struct ArcTally {
  std::size_t arcs = 0, passed = 0;
  double worst = 1.0;
};

ArcTally certify_field(const TimeFunction& T, const ExtremalField& field, ArcKind kind, const CertificateOptions& co) {
  ArcTally t;
  for (std::size_t i = 0; i < field.arcs.size(); ++i) {
    if (!field.valid[i] || field.arcs[i].kind != kind) continue;
    const auto ac = certify_arc(T, uncrossed_arc(field, i), disk_target(), 20, co);
    ++t.arcs;
    const double f = ac.certificates.empty() ? 0.0 : ac.fraction();
    t.worst = std::min(t.worst, f);
    if (f >= 0.95) ++t.passed;
  }
  return t;
}

Outcome supergradient_propagation() {
  Outcome o;
  CertificateOptions co;
  co.seed = kSeed;

  struct Case {
    std::string name;
    Multifunction spec;
    const ValueField* vf;
  };
  const std::vector<Case> normal = {{"eikonal", eikonal(), &eikonal_vf()}, {"DriftBall c = (2, 0)", drift_ball(2, 0, 1), &drift_vf()}};
  for (const auto& c : normal) {
    const auto T = time_function(*c.vf);
    const auto field = field_of(c.spec, 4.5, 1e-2, box3());
    const auto t = certify_field(T, field, ArcKind::kNormal, co);
    o.check(t.arcs > 0 && t.passed == t.arcs, c.name + ": " + std::to_string(t.passed) + "/" + std::to_string(t.arcs) +
                                                  " Normal arcs certified at >= 95% of sampled times (worst " + num(t.worst) + ")");

    std::size_t reversed = 0, rejected = 0;
    for (std::size_t i = 0; i < field.arcs.size(); ++i) {
      if (!field.valid[i] || field.arcs[i].kind != ArcKind::kNormal) continue;
      const auto& arc = field.arcs[i];
      const std::size_t k = arc.size() / 2;
      const auto cert = certify_supergradient(T, arc.x_path[k], Costate(-arc.p_path[k]), CertificateKind::kProximal, co);
      ++reversed;
      rejected += cert.status == CertificateStatus::kCapExceeded;
    }
    o.check(reversed > 0 && rejected == reversed,
            c.name + ": reversed-sign candidates cap-exceeded at " + std::to_string(rejected) + "/" + std::to_string(reversed) + " arcs");
  }

  const auto T = time_function(shadow_ladder().back());
  const auto field = field_of(segment_shadow(), 3.0, 1e-2, square(2.0));
  const auto t = certify_field(T, field, ArcKind::kHorizontal, co);
  o.check(t.arcs > 0 && t.passed == t.arcs, "segment shadow: " + std::to_string(t.passed) + "/" + std::to_string(t.arcs) +
                                                " Horizontal arcs certified with Horizontal kind (worst " + num(t.worst) + ")");
  return o;
}

// ---------------------------------------------------------------- 4

Outcome oracle_cross_validation() {
  Outcome o;
  struct Case {
    std::string name;
    Multifunction spec;
    const ValueField* vf;
  };
  const std::vector<Case> cases = {{"eikonal", eikonal(), &eikonal_vf()}, {"DriftBall c = (2, 0)", drift_ball(2, 0, 1), &drift_vf()}};
  const auto target = disk_target();
  for (const auto& c : cases) {
    const auto field = field_of(c.spec, 6.0, 1e-2, box3(), 128);
    const double tol = 5 * kH + 2 * field.match_radius;
    std::mt19937_64 rng(kSeed);
    std::size_t drawn = 0, bad = 0, unmatched = 0;
    double worst = 0.0;
    while (drawn < 500) {
      const State q = random_vector(rng, 2, -3.0, 3.0);
      const auto hjb = c.vf->value_at(q);
      if (!hjb || *hjb >= c.vf->T_max - c.vf->tol) continue;
      ++drawn;
      const auto s = synthesize_T(field, target, q);
      if (!s) {
        ++unmatched;
        continue;
      }
      const double err = std::abs(s->value - *hjb);
      worst = std::max(worst, err);
      bad += err > tol;
    }
    o.check(unmatched == 0 && bad == 0, c.name + ": " + std::to_string(drawn - bad - unmatched) + "/500 agree within 5h + 2 match-radius = " +
                                            num(tol) + " (max " + num(worst) + ", " + std::to_string(unmatched) + " without an arc node)");
  }
  return o;
}

// ---------------------------------------------------------------- 5

Trajectory ray(double angle, double dilation, int nodes = 1500) {
  Trajectory tr;
  const Vector u = make_vector({std::cos(angle), std::sin(angle)});
  for (int k = 0; k <= nodes; ++k) {
    const double s = 1.5 * k / nodes;  // distance travelled from radius 2.5
    tr.t.push_back(dilation * s);
    tr.x.push_back(Vector((2.5 - s) * u));
    tr.p.push_back(Vector(-u));
  }
  return tr;
}

Outcome sufficient_condition() {
  Outcome o;
  const auto& vf = eikonal_vf();
  const auto target = disk_target();
  const auto spec = eikonal();
  for (double angle : {0.3, 1.9, 3.6, 5.0}) {
    const auto v = verify_optimality(spec, vf, target, ray(angle, 1.0));
    o.check(v.optimal && v.slope_residual <= 5 * kH,
            "ray at angle " + num(angle) + ": optimal, |slope + 1| duration = " + num(v.slope_residual) + " <= 5h");
  }
  for (double f : {1.1, 1.5}) {
    const auto v = verify_optimality(spec, vf, target, ray(0.3, f));
    o.check(!v.optimal && v.first_failure != Condition::kNone,
            "dilation x" + num(f) + ": rejected, first failing condition " + to_string(v.first_failure));
  }
  Trajectory sp;
  const int nodes = 4000;
  for (int k = 0; k <= nodes; ++k) {
    const double s = static_cast<double>(k) / nodes, r = 3 - 2 * s, th = 4 * std::numbers::pi * s * (1 - s);
    sp.x.push_back(make_vector({r * std::cos(th), r * std::sin(th)}));
    sp.p.push_back(Vector(-sp.x.back() / r));
  }
  sp.t.push_back(0.0);
  for (int k = 1; k <= nodes; ++k) sp.t.push_back(sp.t.back() + (sp.x[k] - sp.x[k - 1]).norm());
  const auto v = verify_optimality(spec, vf, target, sp);
  o.check(!v.optimal && v.first_failure != Condition::kNone,
          "spiral with the ray's endpoints: rejected, first failing condition " + to_string(v.first_failure));
  return o;
}

// ---------------------------------------------------------------- 6

Outcome duality() {
  Outcome o;
  const auto target = disk_target();
  const auto spec = segment_shadow();
  const auto& rep = shadow_cloud();
  const auto sigma = find_sigma_set(target, spec, 512);
  const double thr = sigma_threshold(target, spec, 512);
  const double h = shadow_ladder().back().grid.min_spacing();
  const auto du = check_sigma_duality(shadow_ladder().back(), spec, target, rep.points, sigma, 10 * h, 2 * thr);
  double worst = 0.0;
  for (const auto& e : du.entries) worst = std::max(worst, e.sigma_distance);
  o.check(!rep.points.empty() && du.failures == 0,
          "segment shadow: " + std::to_string(rep.points.size()) + " persistent points, " + std::to_string(du.failures) +
              " descent traces off Sigma (max distance " + num(worst) + " <= 10h = " + num(10 * h) + ", |H| <= " + num(2 * thr) + ")");
  const auto eik = detect_nonlipschitz(ladder(eikonal(), box3(), 0.2, 3));
  o.check(eik.points.empty(), "eikonal: singular cloud has " + std::to_string(eik.points.size()) + " points");
  return o;
}

// ---------------------------------------------------------------- 7

Outcome flowout_containment() {
  Outcome o;
  const auto target = disk_target();
  {
    const auto spec = segment_example();
    SolveOptions so;
    so.T_max = 4.0;
    so.tol = 1e-6;
    so.max_iterations = 200000;
    const auto levels = ladder(spec, square(1.5), 0.1, 4, so);
    const auto rep = detect_nonlipschitz(levels);
    const auto sigma = find_sigma_set(target, spec, 512);
    FlowoutOptions fo;
    fo.clip = square(1.5);
    const auto fl = flowout_check(spec, target, sigma, rep.points, fo);
    const double h = levels.back().grid.min_spacing();
    o.check(!fl.alarm && fl.max_distance <= 5 * h + fl.lattice_spacing,
            "Segment Example (h = " + num(h) + "): " + std::to_string(rep.points.size()) + " singular points, distance " +
                num(fl.max_distance) + " <= 5h + lattice = " + num(5 * h + fl.lattice_spacing) + ", " +
                std::to_string(sigma.size()) + " Sigma points, " + std::to_string(fl.samples.size()) + " flow samples");
  }
  {
    const auto spec = segment_shadow();
    const auto sigma = find_sigma_set(target, spec, 512);
    FlowoutOptions fo;
    fo.clip = square(2.0);
    const auto fl = flowout_check(spec, target, sigma, shadow_cloud().points, fo);
    const double h = shadow_ladder().back().grid.min_spacing();
    o.check(!fl.alarm && !shadow_cloud().points.empty() && fl.max_distance <= 5 * h + fl.lattice_spacing,
            "segment shadow (h = " + num(h) + "): " + std::to_string(shadow_cloud().points.size()) + " singular points, distance " +
                num(fl.max_distance) + " <= " + num(5 * h + fl.lattice_spacing));
  }
  return o;
}

// ---------------------------------------------------------------- 8

Outcome rectifiability() {
  Outcome o;
  const auto rep = detect_nonlipschitz(ladder(drift_ball(2, 0, 1), box3(), 0.1, 3));
  if (rep.points.size() < 50) {
    o.check(false, "DriftBall cloud has only " + std::to_string(rep.points.size()) + " points");
  } else {
    const auto bc = box_counting_dimension(rep.points);
    o.check(bc.dimension >= 0.8 && bc.dimension <= 1.2,
            "DriftBall cloud (" + std::to_string(rep.points.size()) + " points): dimension " + num(bc.dimension) + " in [0.8, 1.2]");
  }
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<State> seg, patch;
  for (int i = 0; i < 4000; ++i) {
    const double s = u(rng);
    seg.push_back(make_vector({-1.0 + 2.0 * s, 0.3 + 0.5 * s}));
    patch.push_back(make_vector({u(rng), u(rng)}));
  }
  const double d1 = box_counting_dimension(seg).dimension, d2 = box_counting_dimension(patch).dimension;
  o.check(std::abs(d1 - 1.0) <= 0.2, "synthetic segment: dimension " + num(d1) + " within 0.2 of 1");
  o.check(std::abs(d2 - 2.0) <= 0.2, "synthetic patch: dimension " + num(d2) + " within 0.2 of 2");
  return o;
}

// ---------------------------------------------------------------- 9

Outcome hypotheses() {
  Outcome o;
  const Box box = square(2.0);
  struct Case {
    std::string name;
    Multifunction spec;
  };
  for (const auto& c : std::vector<Case>{{"Ball(0, 1)", eikonal()}, {"DriftBall c = (2, 0)", drift_ball(2, 0, 1)},
                                         {"DriftBall c(x) = (x2, 0)", shear_drift_ball()}}) {
    const auto r = check_hypotheses(c.spec, box, 2000, kSeed);
    o.check(r.pass_F() && r.pass_H(), c.name + ": (F) " + (r.pass_F() ? "pass" : "fail") + ", (H) " + (r.pass_H() ? "pass" : "fail") +
                                          ", K = " + num(r.lipschitz_F));
  }
  const Multifunction root(2, BallFamily{vector_fn::Zero{}, scalar_fn::SqrtAbsCoord{0, 1.0}});
  const auto r = check_hypotheses(root, box, 2000, kSeed);
  o.check(!r.pass_F2, "Ball(0, sqrt|x1|): lipschitz_F fails (K = " + num(r.lipschitz_F) + ", growth slope " +
                          num(r.lipschitz_growth_slope) + ")");

  const std::vector<Case> all = {{"Ball", slow_ball()},
                                 {"DriftBall", shear_drift_ball()},
                                 {"Segment", segment_example()},
                                 {"Polytope", Multifunction(2, PolytopeFamily{{vector_fn::Constant{make_vector({1.0, 0.0})},
                                                                               vector_fn::Affine{Matrix::Identity(2, 2), Vector::Zero(2)},
                                                                               vector_fn::Constant{make_vector({-1.0, -0.5})}}})}};
  std::mt19937_64 rng(kSeed);
  for (const auto& c : all) {
    double euler = 0.0, homog = 0.0;
    for (int k = 0; k < 10000; ++k) {
      const State x = random_vector(rng, 2, -2.0, 2.0);
      const Costate p = random_vector(rng, 2, -3.0, 3.0);
      const double lambda = std::uniform_real_distribution<double>(0.01, 10.0)(rng);
      const double H = eval_H(c.spec, x, p);
      const double scale = std::max(1.0, std::abs(H));
      euler = std::max(euler, std::abs(p.dot(grad_p_H(c.spec, x, p)) - H) / scale);
      homog = std::max(homog, std::abs(eval_H(c.spec, x, Costate(lambda * p)) - lambda * H) / (lambda * scale));
    }
    o.check(euler <= 1e-12 && homog <= 1e-12, c.name + ": Euler identity " + num(euler, 2) + ", homogeneity " + num(homog, 2) +
                                                  " <= 1e-12 over 10^4 samples");
  }
  return o;
}

// ---------------------------------------------------------------- 10

Outcome reproducibility(const fs::path& scenarios) {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "mintime_acceptance";
  fs::remove_all(root);
  for (const std::string name : {"eikonal_disk", "segment_shadow", "drift_disk"}) {
    const std::string scn = (scenarios / (name + ".scn")).string();
    std::vector<fs::path> dirs = {root / (name + "_a"), root / (name + "_b")};
    bool ran = true;
    for (const auto& d : dirs) {
      for (const std::string cmd : {"solve", "analyze"}) {
        const std::vector<std::string> args = {"mintime", cmd, "--scenario", scn, "--out", d.string(), "--quiet", "--seed", "7"};
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        ran = ran && cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err) == 0;
      }
      const std::vector<std::string> args = {"mintime", "report", "--out", d.string(), "--quiet"};
      std::vector<const char*> argv;
      for (const auto& a : args) argv.push_back(a.c_str());
      std::ostringstream out, err;
      ran = ran && cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err) == 0;
    }
    if (!ran) {
      o.check(false, name + ": a CLI stage or manifest validation failed");
      continue;
    }
    auto ma = cli::Json::parse(cli::read_file(dirs[0] / "manifest.json"));
    auto mb = cli::Json::parse(cli::read_file(dirs[1] / "manifest.json"));
    std::size_t files = 0, differ = 0;
    for (const auto& f : ma.at("files")) {
      const std::string rel = f.at("path").get<std::string>();
      ++files;
      differ += cli::read_file(dirs[0] / rel) != cli::read_file(dirs[1] / rel);
    }
    ma.erase("stages");
    mb.erase("stages");
    o.check(differ == 0 && ma == mb, name + ": " + std::to_string(files) + " files byte-identical (" + std::to_string(differ) +
                                         " differ), manifests validate and agree outside stage timings");
  }
  fs::remove_all(root);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string expect_fail, only;
  std::string scenarios = MINTIME_SCENARIO_DIR;
  app.add_option("--expect-fail", expect_fail, "comma-separated criteria known to fail");
  app.add_option("--only", only, "comma-separated criteria to run");
  app.add_option("--scenarios", scenarios, "scenario directory");
  CLI11_PARSE(app, argc, argv);

  auto parse_list = [](const std::string& s) {
    std::set<int> out;
    std::stringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ','))
      if (!tok.empty()) out.insert(std::stoi(tok));
    return out;
  };
  const std::set<int> expected = parse_list(expect_fail), selected = parse_list(only);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"eikonal accuracy", eikonal_accuracy},
      {"Hamiltonian constancy", hamiltonian_constancy},
      {"supergradient propagation", supergradient_propagation},
      {"oracle cross-validation", oracle_cross_validation},
      {"sufficient condition", sufficient_condition},
      {"non-Lipschitz / Sigma duality", duality},
      {"flow-out containment", flowout_containment},
      {"rectifiability proxy", rectifiability},
      {"hypothesis checkers", hypotheses},
      {"reproducibility", [&] { return reproducibility(scenarios); }},
  };

  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out.check(false, std::string("exception: ") + e.what());
    }
    const bool known = expected.count(id) > 0;
    std::cout << "criterion " << id << " " << (out.pass ? "PASS" : "FAIL") << " " << criteria[i].first << " ("
              << num(seconds_since(t0), 3) << " s)" << (!out.pass && known ? " [expected failure]" : "")
              << (out.pass && known ? " [listed as expected failure]" : "") << "\n";
    for (const auto& line : out.lines) std::cout << "    " << line << "\n";
    std::cout.flush();
    if (!out.pass && !known) ++unexpected;
  }
  std::cout << (unexpected == 0 ? "acceptance: no unexpected failures\n" : "acceptance: unexpected failures\n");
  return unexpected == 0 ? 0 : 1;
}
