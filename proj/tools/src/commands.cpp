#include "mintime_cli/commands.hpp"

#include "mintime/analysis.hpp"
#include "mintime/characteristics.hpp"
#include "mintime/error.hpp"
#include "mintime/hjb.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

namespace mintime::cli {

namespace fs = std::filesystem;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return kExitParse;
    case ErrorCode::kValidation:
    case ErrorCode::kPreconditionViolation:
    case ErrorCode::kInvalidArgument: return kExitValidation;
    case ErrorCode::kNonConvergence: return kExitNonConvergence;
    case ErrorCode::kMissingInputs: return kExitMissingInputs;
    default: return kExitInternal;
  }
}

Json defaults_json() {
  Json table = Json::array();
  for (const auto& s : settings_table()) {
    Json row;
    row["key"] = s.key;
    row["default"] = s.required ? Json(nullptr) : Json(s.fallback);
    row["required"] = s.required;
    row["doc"] = s.doc;
    table.push_back(row);
  }
  return table;
}

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kValue = "value.csv";
constexpr const char* kField = "field.json";
constexpr const char* kHypotheses = "hypotheses.json";
constexpr const char* kAnalysis = "analysis.json";
constexpr const char* kSummary = "summary.txt";
constexpr const char* kVerdict = "verdict.json";

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json scenario_echo(const Scenario& sc) {
  Json j;
  j["name"] = sc.name;
  j["dimension"] = sc.dimension;
  j["seed"] = sc.seed;
  Json settings;
  for (const auto& [k, v] : sc.resolved) settings[k] = v;
  j["settings"] = settings;
  return j;
}

/// Manifest of an output directory; files are written through it so each one is hashed.
class Manifest {
 public:
  Manifest(fs::path dir, const Scenario& sc, bool fresh) : dir_(std::move(dir)) {
    const fs::path path = dir_ / kManifest;
    if (!fresh) {
      const Json old = Json::parse(read_file(path), nullptr, false);
      if (old.is_discarded() || !old.is_object()) throw Error(ErrorCode::kParse, "manifest.json is not valid JSON");
      if (old.contains("stages")) stages_ = old["stages"];
      if (old.contains("files"))
        for (const auto& f : old["files"]) files_[f.at("path").get<std::string>()] = f;
    }
    head_["tool"] = "mintime";
    head_["version"] = kToolVersion;
    head_["scenario"] = scenario_echo(sc);
    head_["defaults"] = defaults_json();
  }

  void write(const std::string& rel, const std::string& bytes) {
    write_file(dir_ / rel, bytes);
    Json f;
    f["path"] = rel;
    f["sha256"] = sha256_hex(bytes);
    f["bytes"] = bytes.size();
    files_[rel] = f;
  }

  void stage(const std::string& name, double seconds) {
    Json s;
    s["stage"] = name;
    s["seconds"] = seconds;
    for (auto& old : stages_)
      if (old.at("stage") == name) {
        old = s;
        return;
      }
    stages_.push_back(s);
  }

  void save() const {
    Json j = head_;
    j["stages"] = stages_;
    Json files = Json::array();
    for (const auto& [_, f] : files_) files.push_back(f);
    j["files"] = files;
    write_file(dir_ / kManifest, dump_json(j));
  }

 private:
  fs::path dir_;
  Json head_;
  Json stages_ = Json::array();
  std::map<std::string, Json> files_;
};

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

std::ostream& log(const RunContext& ctx) {
  static std::ostringstream sink;
  sink.str("");
  return ctx.quiet || !ctx.log ? sink : *ctx.log;
}

Json hypotheses_json(const HypothesisReport& r) {
  Json j;
  j["lipschitz_F"] = number(r.lipschitz_F);
  j["semiconvexity_c0"] = number(r.semiconvexity_c0);
  j["grad_p_lipschitz_K1"] = number(r.grad_p_lipschitz_K1);
  j["growth_K2"] = number(r.growth_K2);
  j["lipschitz_growth_slope"] = number(r.lipschitz_growth_slope);
  j["semiconvexity_growth_slope"] = number(r.semiconvexity_growth_slope);
  j["grad_p_growth_slope"] = number(r.grad_p_growth_slope);
  j["pass_F1"] = r.pass_F1;
  j["pass_F2"] = r.pass_F2;
  j["pass_H1"] = r.pass_H1;
  j["pass_H2"] = r.pass_H2;
  j["pass_growth"] = r.pass_growth;
  j["pass_F"] = r.pass_F();
  j["pass_H"] = r.pass_H();
  j["sample_count"] = r.sample_count;
  j["evaluations"] = r.evaluations;
  j["scale_count"] = r.scale_count;
  j["seed"] = r.seed;
  return j;
}

Json boundary_point_json(const BoundaryPoint& bp) {
  Json j;
  j["x_bar"] = to_json(bp.x_bar);
  j["xi"] = to_json(bp.xi);
  j["H"] = bp.h_value;
  return j;
}

struct SigmaScan {
  std::vector<BoundaryPoint> points;
  std::string error;
};

SigmaScan scan_sigma(const Scenario& sc) {
  SigmaScan s;
  try {
    s.points = find_sigma_set(*sc.target, *sc.dynamics, sc.field.sigma_resolution, sc.analysis.sigma_mode,
                              sc.tolerances.sigma);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kPreconditionViolation) throw;
    s.error = e.what();
  }
  return s;
}

Json sigma_json(const SigmaScan& s, double threshold) {
  Json j;
  j["threshold"] = threshold;
  Json pts = Json::array();
  for (const auto& bp : s.points) pts.push_back(boundary_point_json(bp));
  j["points"] = pts;
  j["error"] = s.error.empty() ? Json(nullptr) : Json(s.error);
  return j;
}

Json hypothesis_stage(const Scenario& sc) {
  const auto& spec = *sc.dynamics;
  const auto& target = *sc.target;
  Json j;
  j["scenario"] = sc.name;
  j["checks"] = hypotheses_json(check_hypotheses(spec, sc.box, sc.analysis.hypothesis_samples, sc.seed));

  const auto samples = sample_boundary(target, spec, sc.field.boundary_count);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& bp : samples) {
    lo = std::min(lo, bp.h_value);
    hi = std::max(hi, bp.h_value);
  }
  Json b;
  b["samples"] = samples.size();
  b["H_min"] = number(lo);
  b["H_max"] = number(hi);
  b["petrov"] = !samples.empty() && lo > 0.0;
  j["boundary"] = b;

  const double thr = sigma_threshold(target, spec, sc.field.sigma_resolution, sc.tolerances.sigma);
  j["sigma"] = sigma_json(scan_sigma(sc), thr);

  const auto nd = check_nondegeneracy(target, spec, samples, thr);
  Json n;
  n["checked"] = nd.entries.size();
  n["violations"] = nd.violations;
  n["skipped"] = nd.skipped;
  n["min_angle"] = number(nd.min_angle);
  n["angle_tolerance"] = nd.angle_tolerance;
  j["nondegeneracy"] = n;
  return j;
}

std::string arc_csv(const DualArc& arc, int n) {
  std::string out = "t";
  for (int a = 0; a < n; ++a) out += ",x" + std::to_string(a + 1);
  for (int a = 0; a < n; ++a) out += ",p" + std::to_string(a + 1);
  out += ",H\n";
  for (std::size_t k = 0; k < arc.size(); ++k) {
    out += format_number(arc.times[k]);
    for (int a = 0; a < n; ++a) out += "," + format_number(arc.x_path[k][a]);
    for (int a = 0; a < n; ++a) out += "," + format_number(arc.p_path[k][a]);
    out += "," + format_number(arc.h_trace[k]) + "\n";
  }
  return out;
}

std::string arc_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "arcs/arc_%03zu.csv", i);
  return buf;
}

ExtremalField extremal_field(const Scenario& sc) {
  FieldOptions fo;
  fo.arc.stop_box = sc.box;
  fo.sigma_resolution = sc.field.sigma_resolution;
  return build_extremal_field(*sc.dynamics, *sc.target, sc.field.boundary_count, sc.horizon, sc.field.step, fo);
}

Json field_json(const Scenario& sc, const ValueField& vf, const ExtremalField& field) {
  Json j;
  j["scenario"] = sc.name;
  j["solver"] = solver_meta(vf);
  Json f;
  f["boundary_count"] = field.boundary_count;
  f["skipped_inward"] = field.skipped_inward;
  f["sigma_threshold"] = field.sigma_threshold;
  f["boundary_spacing"] = field.boundary_spacing;
  f["match_radius"] = field.match_radius;
  f["horizon"] = field.horizon;
  f["step"] = field.step;
  j["field"] = f;
  Json arcs = Json::array();
  for (std::size_t i = 0; i < field.arcs.size(); ++i) {
    const auto& arc = field.arcs[i];
    Json a;
    a["index"] = i;
    a["kind"] = to_string(arc.kind);
    a["terminal"] = boundary_point_json(arc.terminal.boundary_point);
    a["p_terminal"] = to_json(arc.terminal.p_terminal);
    a["valid"] = field.valid[i] != 0;
    a["failure"] = field.failures[i].empty() ? Json(nullptr) : Json(field.failures[i]);
    a["nodes"] = arc.size();
    a["duration"] = arc.duration();
    a["crossing"] = field.crossing[i] != 0;
    a["crossing_time_to_go"] = number(field.crossing_time_to_go[i]);
    a["branch_switch"] = arc.branch_switch;
    a["left_box"] = arc.left_box;
    a["file"] = arc.size() > 0 ? Json(arc_name(i)) : Json(nullptr);
    arcs.push_back(a);
  }
  j["arcs"] = arcs;
  return j;
}

struct SolveOutputs {
  Json field;
  Json hypotheses;
  ValueField vf;
};

SolveOutputs load_solve_outputs(const RunContext& ctx, const Scenario& sc) {
  for (const char* f : {kManifest, kValue, kField, kHypotheses})
    if (!fs::exists(ctx.out / f))
      throw Error(ErrorCode::kMissingInputs, std::string(f) + " not found in " + ctx.out.string() + "; run solve first");
  SolveOutputs s;
  s.field = Json::parse(read_file(ctx.out / kField), nullptr, false);
  s.hypotheses = Json::parse(read_file(ctx.out / kHypotheses), nullptr, false);
  if (s.field.is_discarded() || s.hypotheses.is_discarded())
    throw Error(ErrorCode::kParse, "solve outputs are not valid JSON");
  s.vf = value_field_from_csv(read_file(ctx.out / kValue), sc.grid(), *sc.target, s.field.at("solver"));
  return s;
}

Json verdict_entry(const std::string& name, bool pass, const std::string& detail) {
  Json j;
  j["name"] = name;
  j["pass"] = pass;
  j["detail"] = detail;
  return j;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

/// Reachable off-target nodes at least `margin` from the target and `radius` from the box edge.
std::vector<State> region_sample(const ValueField& vf, const TargetSet& target, double margin, double radius, int count,
                                 std::uint64_t seed) {
  std::vector<std::size_t> pool;
  const Box& box = vf.grid.bounds();
  for (std::size_t i = 0; i < vf.grid.size(); ++i) {
    if (!vf.reachable[i] || vf.in_target[i] || vf.T[i] >= 0.9 * vf.T_max) continue;
    const State x = vf.grid.node(i);
    const double gn = target.grad_g(x).norm();
    if (!(gn > 0.0) || target.g(x) < margin * gn) continue;
    if (((x - box.lower).array() < radius).any() || ((box.upper - x).array() < radius).any()) continue;
    pool.push_back(i);
  }
  std::vector<State> out;
  if (pool.empty()) return out;
  std::mt19937_64 rng(seed);
  for (int k = 0; k < count && !pool.empty(); ++k) {
    const std::size_t j = static_cast<std::size_t>(rng() % pool.size());
    out.push_back(vf.grid.node(pool[j]));
    pool[j] = pool.back();
    pool.pop_back();
  }
  return out;
}

Json points_json(const std::vector<State>& pts) {
  Json a = Json::array();
  for (const auto& p : pts) a.push_back(to_json(p));
  return a;
}

}  // namespace

void run_solve(const RunContext& ctx) {
  const Scenario sc = load_scenario(ctx.scenario, ctx.overrides);
  Stopwatch clock;
  for (const char* stale : {kAnalysis, kSummary, kVerdict}) fs::remove(ctx.out / stale);
  fs::remove_all(ctx.out / "arcs");
  fs::create_directories(ctx.out);
  Manifest manifest(ctx.out, sc, true);

  log(ctx) << "[" << sc.name << "] hypotheses\n";
  const Json hyp = hypothesis_stage(sc);
  manifest.write(kHypotheses, dump_json(hyp));
  manifest.stage("solve.hypotheses", clock.lap());

  log(ctx) << "[" << sc.name << "] hjb h=" << sc.h << "\n";
  SolveOptions so = sc.solve;
  so.throw_on_nonconvergence = true;
  const ValueField vf = solve(*sc.dynamics, *sc.target, sc.grid(), so);
  manifest.write(kValue, value_csv(vf));
  manifest.stage("solve.hjb", clock.lap());

  log(ctx) << "[" << sc.name << "] extremal field\n";
  const ExtremalField field = extremal_field(sc);
  for (std::size_t i = 0; i < field.arcs.size(); ++i)
    if (field.arcs[i].size() > 0) manifest.write(arc_name(i), arc_csv(field.arcs[i], sc.dimension));
  manifest.write(kField, dump_json(field_json(sc, vf, field)));
  manifest.stage("solve.field", clock.lap());
  manifest.save();
  log(ctx) << "[" << sc.name << "] solve done: " << vf.iterations << " sweeps, " << field.arcs.size() << " arcs\n";
}

void run_analyze(const RunContext& ctx) {
  const Scenario sc = load_scenario(ctx.scenario, ctx.overrides);
  const SolveOutputs in = load_solve_outputs(ctx, sc);
  const auto& spec = *sc.dynamics;
  const auto& target = *sc.target;
  const ValueField& vf = in.vf;
  const double h = vf.grid.min_spacing();
  Stopwatch clock;
  Manifest manifest(ctx.out, sc, false);

  // arcs: constancy and certificates
  log(ctx) << "[" << sc.name << "] arcs\n";
  const ExtremalField field = extremal_field(sc);
  const TimeFunction T = time_function(vf);
  CertificateOptions copt = sc.analysis.certificate;
  Json arcs = Json::array(), certs = Json::array();
  bool constancy_ok = true, normal_ok = true, horizontal_ok = true;
  std::size_t normal_arcs = 0, normal_passed = 0, horizontal_arcs = 0, horizontal_passed = 0;
  double worst_dev = 0.0;
  for (std::size_t i = 0; i < field.arcs.size(); ++i) {
    if (!field.valid[i]) continue;
    const auto& arc = field.arcs[i];
    const bool normal = arc.kind == ArcKind::kNormal;
    const auto cr = hamiltonian_constancy_report(arc);
    const double allowed = sc.tolerances.constancy + (normal ? 0.0 : field.sigma_threshold);
    const bool const_ok = cr.max_deviation <= allowed;
    constancy_ok = constancy_ok && const_ok;
    worst_dev = std::max(worst_dev, cr.max_deviation);

    // past the first crossing the arc is no longer optimal
    const DualArc prefix = uncrossed_arc(field, i);
    const auto ac = certify_arc(T, prefix, target, sc.analysis.arc_samples, copt);
    const bool cert_ok = !ac.certificates.empty() && ac.fraction() >= sc.tolerances.certificate_fraction;
    (normal ? normal_arcs : horizontal_arcs)++;
    if (cert_ok) (normal ? normal_passed : horizontal_passed)++;
    (normal ? normal_ok : horizontal_ok) = (normal ? normal_ok : horizontal_ok) && cert_ok;

    Json a;
    a["index"] = i;
    a["kind"] = to_string(arc.kind);
    a["x_bar"] = to_json(arc.terminal.boundary_point.x_bar);
    a["duration"] = arc.duration();
    a["crossing"] = field.crossing[i] != 0;
    a["constancy"] = {{"level", cr.level}, {"max_deviation", cr.max_deviation}, {"mean_deviation", cr.mean_deviation},
                      {"tolerance", allowed}, {"pass", const_ok}};
    a["certified_span"] = prefix.duration();
    a["certified"] = ac.certified;
    a["sampled"] = ac.certificates.size();
    a["certified_fraction"] = ac.fraction();
    a["certificate_pass"] = cert_ok;
    arcs.push_back(a);
    for (const auto& c : ac.certificates) {
      Json cj;
      cj["arc"] = i;
      cj["x"] = to_json(c.x);
      cj["kind"] = to_string(c.kind);
      cj["status"] = to_string(c.status);
      cj["C5"] = number(c.C5);
      cj["first_order"] = c.first_order;
      cj["used"] = c.used;
      certs.push_back(cj);
    }
  }
  manifest.stage("analyze.arcs", clock.lap());

  // singularities on a refinement ladder ending at the solved grid
  log(ctx) << "[" << sc.name << "] singularities (" << sc.analysis.refinement_levels << " levels)\n";
  std::vector<ValueField> levels;
  SolveOptions so = sc.solve;
  so.T_max = vf.T_max;
  for (int k = sc.analysis.refinement_levels - 1; k >= 1; --k)
    levels.push_back(solve(spec, target, sc.grid(sc.h * std::ldexp(1.0, k)), so));
  levels.push_back(vf);
  const NonLipschitzReport nl = detect_nonlipschitz(levels, sc.analysis.nonlipschitz);

  const SigmaScan sigma = scan_sigma(sc);
  const double thr = sigma_threshold(target, spec, sc.field.sigma_resolution, sc.tolerances.sigma);
  const double dist_tol = sc.tolerances.duality_h * h;
  const DualityReport du = check_sigma_duality(vf, spec, target, nl.points, sigma.points, dist_tol, 2 * thr);
  const FlowoutReport fl = flowout_check(spec, target, sigma.points, nl.points, sc.analysis.flowout);
  std::optional<BoxCount> bc;
  if (nl.points.size() >= 50) bc = box_counting_dimension(nl.points);
  manifest.stage("analyze.singularities", clock.lap());

  log(ctx) << "[" << sc.name << "] exterior sphere\n";
  const auto region = region_sample(vf, target, 5 * h, sc.analysis.exterior_radius, sc.analysis.exterior_points, sc.seed);
  const auto ext = exterior_sphere_scan(T, region, sc.analysis.exterior_radius, sc.analysis.exterior_samples, sc.seed);
  manifest.stage("analyze.exterior", clock.lap());

  Json sing;
  sing["spacings"] = nl.spacings;
  sing["L0"] = nl.L0;
  sing["growth"] = nl.growth;
  sing["candidates"] = nl.candidates;
  sing["points"] = points_json(nl.points);
  sing["ratios"] = nl.ratios;
  sing["severity"] = nl.severity;
  sing["unbounded"] = points_json(nl.unbounded);
  sing["sigma"] = sigma_json(sigma, thr);
  Json duj;
  duj["distance_tol"] = du.distance_tol;
  duj["h_tol"] = du.h_tol;
  duj["checked"] = du.entries.size();
  duj["failures"] = du.failures;
  double worst_sigma = 0.0;
  for (const auto& e : du.entries) worst_sigma = std::max(worst_sigma, e.sigma_distance);
  duj["max_sigma_distance"] = number(worst_sigma);
  sing["duality"] = duj;
  const double flow_tol = 5 * h + fl.lattice_spacing;
  sing["flowout"] = {{"samples", fl.samples.size()}, {"branches", fl.branches}, {"max_distance", number(fl.max_distance)},
                     {"lattice_spacing", fl.lattice_spacing}, {"tolerance", flow_tol}, {"alarm", fl.alarm}};
  if (bc) sing["box_counting"] = {{"dimension", bc->dimension}, {"scales", bc->scales}, {"counts", bc->counts}};
  else sing["box_counting"] = nullptr;
  Json extj;
  extj["points"] = ext.points.size();
  extj["radius"] = ext.radius;
  extj["min_theta"] = number(ext.min_theta);
  extj["no_normal"] = ext.no_normal;
  Json th = Json::array();
  for (double t : ext.theta) th.push_back(number(t));
  extj["theta"] = th;
  sing["exterior_sphere"] = extj;

  const bool empty = nl.points.empty();
  Json verdicts = Json::array();
  verdicts.push_back(verdict_entry("constancy", constancy_ok, "max |H - level| " + fmt(worst_dev)));
  verdicts.push_back(verdict_entry("normal_certificates", normal_ok,
                                   std::to_string(normal_passed) + "/" + std::to_string(normal_arcs) + " arcs"));
  verdicts.push_back(verdict_entry("horizontal_certificates", horizontal_ok,
                                   std::to_string(horizontal_passed) + "/" + std::to_string(horizontal_arcs) + " arcs"));
  verdicts.push_back(verdict_entry("duality", du.failures == 0,
                                   empty ? "no singular points" : std::to_string(du.failures) + " of " +
                                                                      std::to_string(du.entries.size()) + " traces fail"));
  verdicts.push_back(verdict_entry("flowout", !fl.alarm && fl.max_distance <= flow_tol,
                                   empty ? "no singular points" : "max distance " + fmt(fl.max_distance)));
  const bool rect_ok = !bc || bc->dimension <= sc.dimension - 1 + 0.2;
  verdicts.push_back(verdict_entry("rectifiability", rect_ok,
                                   bc ? "box-counting dimension " + fmt(bc->dimension)
                                      : std::to_string(nl.points.size()) + " points, too few to estimate"));
  verdicts.push_back(verdict_entry("exterior_sphere", ext.no_normal == 0 && ext.min_theta > 0.0,
                                   "min theta " + fmt(ext.min_theta) + " over " + std::to_string(ext.points.size()) + " points"));

  Json tol;
  tol["sigma"] = sc.tolerances.sigma;
  tol["sigma_threshold"] = thr;
  tol["constancy"] = sc.tolerances.constancy;
  tol["certificate_fraction"] = sc.tolerances.certificate_fraction;
  tol["certificate_radius"] = copt.radius;
  tol["certificate_count"] = copt.count;
  tol["certificate_cap"] = copt.cap;
  tol["first_order_tol"] = copt.first_order_tol;
  tol["duality_distance"] = dist_tol;
  tol["duality_h"] = 2 * thr;
  tol["flowout"] = flow_tol;
  tol["growth"] = nl.growth;
  tol["ham"] = sc.tolerances.ham;
  tol["dyn"] = sc.tolerances.dyn;
  tol["concl"] = sc.tolerances.concl;

  Json report;
  report["scenario"] = scenario_echo(sc);
  report["hypotheses"] = in.hypotheses;
  report["arcs"] = arcs;
  report["certificates"] = certs;
  report["singularity"] = sing;
  report["verdicts"] = verdicts;
  report["tolerances"] = tol;
  manifest.write(kAnalysis, dump_json(report));

  std::ostringstream sum;
  const auto& hc = in.hypotheses.at("checks");
  sum << "scenario " << sc.name << " (n = " << sc.dimension << ", h = " << format_number(h) << ")\n";
  sum << "hypotheses F " << (hc.at("pass_F").get<bool>() ? "pass" : "fail") << ", H "
      << (hc.at("pass_H").get<bool>() ? "pass" : "fail") << ", K = " << hc.at("lipschitz_F").dump() << "\n";
  sum << "arcs " << normal_arcs << " normal, " << horizontal_arcs << " horizontal\n";
  sum << "sigma " << sigma.points.size() << " points\n";
  sum << "singular cloud " << nl.points.size() << " points, " << nl.unbounded.size() << " unbounded\n";
  bool all = true;
  for (const auto& v : verdicts) {
    const bool pass = v.at("pass").get<bool>();
    all = all && pass;
    sum << (pass ? "PASS " : "FAIL ") << v.at("name").get<std::string>() << ": " << v.at("detail").get<std::string>() << "\n";
  }
  sum << (all ? "all verdicts pass\n" : "some verdicts fail\n");
  manifest.write(kSummary, sum.str());
  manifest.stage("analyze.report", clock.lap());
  manifest.save();
  log(ctx) << sum.str();
}

void run_verify(const RunContext& ctx) {
  const Scenario sc = load_scenario(ctx.scenario, ctx.overrides);
  const SolveOutputs in = load_solve_outputs(ctx, sc);
  const int n = sc.dimension;
  Stopwatch clock;

  const CsvTable csv = parse_csv(read_file(ctx.trajectory));
  const int tcol = csv.column("t");
  if (tcol < 0) throw Error(ErrorCode::kParse, "trajectory CSV has no column t");
  std::vector<int> xcol, pcol;
  for (int a = 1; a <= n; ++a) {
    const int xc = csv.column("x" + std::to_string(a));
    if (xc < 0) throw Error(ErrorCode::kParse, "trajectory CSV has no column x" + std::to_string(a));
    xcol.push_back(xc);
    const int pc = csv.column("p" + std::to_string(a));
    if (pc >= 0) pcol.push_back(pc);
  }
  if (!pcol.empty() && static_cast<int>(pcol.size()) != n)
    throw Error(ErrorCode::kParse, "trajectory CSV has some but not all costate columns");
  if (csv.rows.size() < 2) throw Error(ErrorCode::kParse, "trajectory CSV needs at least two rows");

  Trajectory tr;
  for (const auto& row : csv.rows) {
    tr.t.push_back(row[static_cast<std::size_t>(tcol)]);
    State x(n);
    for (int a = 0; a < n; ++a) x[a] = row[static_cast<std::size_t>(xcol[static_cast<std::size_t>(a)])];
    tr.x.push_back(x);
    if (!pcol.empty()) {
      Costate p(n);
      for (int a = 0; a < n; ++a) p[a] = row[static_cast<std::size_t>(pcol[static_cast<std::size_t>(a)])];
      tr.p.push_back(p);
    }
  }
  for (std::size_t k = 1; k < tr.t.size(); ++k)
    if (!(tr.t[k] > tr.t[k - 1])) throw Error(ErrorCode::kParse, "trajectory times must increase");

  const bool synthesized = pcol.empty();
  std::size_t filled = 0;
  if (synthesized) {
    const TimeFunction T = time_function(in.vf);
    std::vector<std::optional<Costate>> p(tr.x.size());
    for (std::size_t k = 0; k < tr.x.size(); ++k)
      if (auto g = T.gradient(tr.x[k])) p[k] = Costate(-*g);
    // carry the nearest available gradient into nodes without one (target, unreachable stencil)
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (p[k]) continue;
      std::optional<Costate> best;
      for (std::size_t d = 1; d < p.size() && !best; ++d) {
        if (k >= d && p[k - d]) best = p[k - d];
        else if (k + d < p.size() && p[k + d]) best = p[k + d];
      }
      if (!best) throw Error(ErrorCode::kValidation, "no gradient of T is available along the trajectory");
      p[k] = best;
      ++filled;
    }
    // -grad T fixes the direction; the magnitude comes from H(x, p) = 1, which the grid gradient misses by O(h)
    tr.p.clear();
    for (std::size_t k = 0; k < p.size(); ++k) {
      Costate q = *p[k];
      const double hv = eval_H(*sc.dynamics, tr.x[k], q);
      if (hv > 0.0) q /= hv;
      tr.p.push_back(q);
    }
  }

  VerifyOptions vo;
  vo.dyn_tol = sc.tolerances.dyn;
  if (synthesized && vo.dyn_tol == 0.0) {
    // the grid gradient direction is only O(h) accurate, so grad_p H of the synthesized p is too
    double max_dt = 0.0;
    for (std::size_t k = 1; k < tr.t.size(); ++k) max_dt = std::max(max_dt, tr.t[k] - tr.t[k - 1]);
    vo.dyn_tol = std::max(10.0 * max_dt, 2.0 * in.vf.grid.min_spacing());
  }
  vo.ham_tol = sc.tolerances.ham;
  vo.concl_tol = sc.tolerances.concl;
  vo.certificate = sc.analysis.certificate;
  const Verdict v = verify_optimality(*sc.dynamics, in.vf, *sc.target, tr, vo);

  Json j;
  j["scenario"] = sc.name;
  j["trajectory"] = ctx.trajectory.filename().string();
  j["nodes"] = tr.t.size();
  j["costate"] = synthesized ? "synthesized from -grad T, scaled to H = 1" : "from CSV";
  j["costate_filled"] = filled;
  j["optimal"] = v.optimal;
  j["verdict"] = v.optimal ? "optimal" : "not-verified";
  j["first_failure"] = to_string(v.first_failure);
  Json fails = Json::array();
  for (auto c : v.failures) fails.push_back(to_string(c));
  j["failures"] = fails;
  j["tolerances"] = {{"dyn", v.dyn_tol}, {"ham", v.ham_tol}, {"concl", v.concl_tol}};
  j["residuals"] = {{"dynamics", v.max_dynamics_residual},   {"hamiltonian", v.max_hamiltonian_residual},
                    {"conclusion", v.conclusion_residual},   {"slope", v.slope},
                    {"slope_residual", v.slope_residual},    {"certificate_checks", v.certificate_checks},
                    {"certified", v.certified}};

  Manifest manifest(ctx.out, sc, false);
  manifest.write(kVerdict, dump_json(j));
  manifest.stage("verify", clock.lap());
  manifest.save();
  log(ctx) << "[" << sc.name << "] " << (v.optimal ? "optimal" : "not-verified")
           << (v.optimal ? "" : " (first failure: " + to_string(v.first_failure) + ")") << "\n";
}

void run_report(const RunContext& ctx) {
  const Json m = Json::parse(read_file(ctx.out / kManifest), nullptr, false);
  if (m.is_discarded() || !m.is_object() || !m.contains("files"))
    throw Error(ErrorCode::kParse, "manifest.json is malformed");
  std::set<std::string> seen;
  for (const auto& f : m.at("files")) {
    const std::string rel = f.at("path").get<std::string>();
    if (!seen.insert(rel).second) throw Error(ErrorCode::kValidation, "manifest lists " + rel + " twice");
    const fs::path p = ctx.out / rel;
    if (!fs::exists(p)) throw Error(ErrorCode::kMissingInputs, "manifest lists missing file " + rel);
    const std::string bytes = read_file(p);
    if (sha256_hex(bytes) != f.at("sha256").get<std::string>() || bytes.size() != f.at("bytes").get<std::size_t>())
      throw Error(ErrorCode::kValidation, "hash mismatch for " + rel);
  }
  auto& out = log(ctx);
  out << "manifest ok: " << seen.size() << " files, scenario " << m.at("scenario").at("name").get<std::string>()
      << ", " << m.at("tool").get<std::string>() << " " << m.at("version").get<std::string>() << "\n";
  for (const auto& s : m.at("stages"))
    out << "  " << s.at("stage").get<std::string>() << " " << fmt(s.at("seconds").get<double>()) << " s\n";
  if (seen.count(kSummary)) out << read_file(ctx.out / kSummary);
  if (seen.count(kVerdict)) {
    const Json v = Json::parse(read_file(ctx.out / kVerdict));
    out << "verify " << v.at("trajectory").get<std::string>() << ": " << v.at("verdict").get<std::string>() << "\n";
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Minimum-time analysis toolkit"};
  app.require_subcommand(1);
  RunContext ctx;
  ctx.log = &out;
  std::string scenario, outdir, trajectory;
  double grid_h = 0.0;
  std::uint64_t seed = 0;

  auto common = [&](CLI::App* sub, bool needs_scenario) {
    auto* s = sub->add_option("--scenario", scenario, "scenario file");
    if (needs_scenario) s->required();
    sub->add_option("--out", outdir, "output directory")->required();
    sub->add_option("--grid-h", grid_h, "override grid.h");
    sub->add_option("--seed", seed, "override the scenario seed");
    sub->add_flag("--quiet", ctx.quiet, "suppress progress output");
  };
  auto* solve_cmd = app.add_subcommand("solve", "hypotheses, HJB solve and extremal field");
  auto* analyze_cmd = app.add_subcommand("analyze", "certificates, singularities and verdicts");
  auto* verify_cmd = app.add_subcommand("verify", "sufficient-condition check of a trajectory CSV");
  auto* report_cmd = app.add_subcommand("report", "validate the manifest and print the summary");
  common(solve_cmd, true);
  common(analyze_cmd, true);
  common(verify_cmd, true);
  common(report_cmd, false);
  verify_cmd->add_option("--trajectory", trajectory, "CSV with t, x1..xn and optionally p1..pn")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitParse;
  }

  ctx.scenario = scenario;
  ctx.out = outdir;
  ctx.trajectory = trajectory;
  for (auto* sub : {solve_cmd, analyze_cmd, verify_cmd, report_cmd}) {
    if (sub->count("--grid-h")) ctx.overrides.h = grid_h;
    if (sub->count("--seed")) ctx.overrides.seed = seed;
  }

  try {
    if (solve_cmd->parsed()) run_solve(ctx);
    else if (analyze_cmd->parsed()) run_analyze(ctx);
    else if (verify_cmd->parsed()) run_verify(ctx);
    else run_report(ctx);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace mintime::cli
