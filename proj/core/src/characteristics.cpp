#include "mintime/characteristics.hpp"

#include "mintime/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mintime {

std::string to_string(ArcKind kind) { return kind == ArcKind::kNormal ? "normal" : "horizontal"; }

TerminalCondition make_terminal_condition(const BoundaryPoint& bp, double sigma_threshold) {
  TerminalCondition tc;
  tc.boundary_point = bp;
  if (std::abs(bp.h_value) > sigma_threshold) {
    tc.kind = ArcKind::kNormal;
    tc.p_terminal = bp.xi / bp.h_value;
  } else {
    tc.kind = ArcKind::kHorizontal;
    tc.p_terminal = bp.xi;
  }
  return tc;
}

namespace {

struct Phase {
  State x;
  Costate p;
};

// One classical RK4 step of (x, p)' = rhs(x, p).
template <class Rhs>
Phase rk4(const Phase& y, double h, Rhs&& rhs) {
  const Phase k1 = rhs(y.x, y.p);
  const Phase k2 = rhs(y.x + 0.5 * h * k1.x, y.p + 0.5 * h * k1.p);
  const Phase k3 = rhs(y.x + 0.5 * h * k2.x, y.p + 0.5 * h * k2.p);
  const Phase k4 = rhs(y.x + h * k3.x, y.p + h * k3.p);
  return {y.x + (h / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
          y.p + (h / 6.0) * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p)};
}

int step_count(double duration, double step) {
  if (!(step > 0.0) || !(duration >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "step must be > 0");
  return static_cast<int>(std::ceil(duration / step - 1e-9));
}

}  // namespace

DualArc integrate_dual_arc(const Multifunction& spec, const TargetSet& target, const TerminalCondition& tc,
                           double horizon, double step, const ArcOptions& options) {
  if (!(horizon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "horizon must be > 0");
  if (!(step > 0.0) || step > horizon / 10.0 * (1.0 + 1e-12))
    throw Error(ErrorCode::kInvalidArgument, "step must be in (0, horizon / 10]");
  if (std::abs(target.g(tc.boundary_point.x_bar)) > kBoundaryTolerance)
    throw Error(ErrorCode::kOffBoundary, "terminal point is not on the target boundary");

  const int n_steps = step_count(horizon, step);
  const double ds = horizon / n_steps;
  auto reversed = [&](const State& x, const Costate& p) { return Phase{-grad_p_H(spec, x, p), grad_x_H(spec, x, p)}; };

  DualArc arc;
  arc.kind = tc.kind;
  arc.terminal = tc;
  arc.step = ds;

  std::vector<double> s_values;
  Phase y{tc.boundary_point.x_bar, tc.p_terminal};
  int previous_branch = 0;
  for (int k = 0; k <= n_steps; ++k) {
    const double pn = y.p.norm();
    if (!(pn >= options.costate_min && pn <= options.costate_max))
      throw Error(ErrorCode::kCostateBlowup, "|p| = " + std::to_string(pn) + " left the admissible range");
    if (options.stop_box && !options.stop_box->contains(y.x)) {
      arc.left_box = true;
      break;
    }
    const int branch = selection_branch(spec, y.x, y.p);
    if (k > 0 && branch != previous_branch && !arc.branch_switch) {
      arc.branch_switch = true;
      arc.warnings.push_back("non-smooth crossing: selection branch switched at time-to-go " +
                             std::to_string(k * ds));
    }
    previous_branch = branch;
    s_values.push_back(k * ds);
    arc.x_path.push_back(y.x);
    arc.p_path.push_back(y.p);
    arc.xdot_path.push_back(grad_p_H(spec, y.x, y.p));
    arc.h_trace.push_back(eval_H(spec, y.x, y.p));
    if (k < n_steps) y = rk4(y, ds, reversed);
  }

  // Store in ascending physical time with the boundary point last.
  const double total = s_values.back();
  std::reverse(arc.x_path.begin(), arc.x_path.end());
  std::reverse(arc.p_path.begin(), arc.p_path.end());
  std::reverse(arc.xdot_path.begin(), arc.xdot_path.end());
  std::reverse(arc.h_trace.begin(), arc.h_trace.end());
  arc.times.resize(s_values.size());
  for (std::size_t k = 0; k < s_values.size(); ++k) arc.times[k] = total - s_values[s_values.size() - 1 - k];
  return arc;
}

std::pair<State, Costate> integrate_forward(const Multifunction& spec, const State& x0, const Costate& p0,
                                            double duration, double step) {
  const int n_steps = step_count(duration, step);
  if (n_steps == 0) return {x0, p0};
  const double h = duration / n_steps;
  auto forward = [&](const State& x, const Costate& p) { return Phase{grad_p_H(spec, x, p), -grad_x_H(spec, x, p)}; };
  Phase y{x0, p0};
  for (int k = 0; k < n_steps; ++k) y = rk4(y, h, forward);
  return {y.x, y.p};
}

namespace {

std::int64_t bucket_key(const State& x, double cell) {
  std::int64_t key = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const auto c = static_cast<std::int64_t>(std::floor(x[i] / cell));
    key = key * 2000003 + (c + 1000000);
  }
  return key;
}

// Position at time-to-go index j (0 is the boundary point).
const State& node_from_boundary(const DualArc& arc, std::size_t j) { return arc.x_path[arc.size() - 1 - j]; }
const Vector& velocity_from_boundary(const DualArc& arc, std::size_t j) { return arc.xdot_path[arc.size() - 1 - j]; }

double cross2(const Vector& a, const Vector& b) { return a[0] * b[1] - a[1] * b[0]; }

}  // namespace

ExtremalField build_extremal_field(const Multifunction& spec, const TargetSet& target, int boundary_count,
                                   double horizon, double step, const FieldOptions& options) {
  if (boundary_count < 8) throw Error(ErrorCode::kInvalidArgument, "boundary_count must be >= 8");
  ExtremalField field;
  field.horizon = horizon;
  field.step = step;
  field.boundary_count = static_cast<std::size_t>(boundary_count);

  const auto samples = sample_boundary(target, spec, boundary_count);
  double hmax = 0.0;
  for (const auto& bp : samples) hmax = std::max(hmax, std::abs(bp.h_value));
  field.sigma_threshold = kSigmaTolerance * (hmax > 0.0 ? hmax : 1.0);

  std::vector<double> adjacent;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const std::size_t next = (k + 1) % samples.size();
    if (next == 0 && !target.closed_boundary()) break;
    adjacent.push_back((samples[next].x_bar - samples[k].x_bar).norm());
  }
  std::sort(adjacent.begin(), adjacent.end());
  field.boundary_spacing = adjacent.empty() ? 0.0 : adjacent[adjacent.size() / 2];

  std::vector<TerminalCondition> terminals;
  for (const auto& bp : samples) {
    if (bp.h_value < -field.sigma_threshold) {
      ++field.skipped_inward;  // no admissible velocity enters the target here
      continue;
    }
    terminals.push_back(make_terminal_condition(bp, field.sigma_threshold));
  }
  const std::size_t boundary_arcs = terminals.size();
  if (options.include_sigma && (target.dim() == 2 || target.dim() == 3)) {
    for (const auto& bp : find_sigma_set(target, spec, options.sigma_resolution, SigmaMode::kSignChange)) {
      TerminalCondition tc;
      tc.boundary_point = bp;
      tc.kind = ArcKind::kHorizontal;
      tc.p_terminal = bp.xi;
      terminals.push_back(tc);
    }
  }

  for (const auto& tc : terminals) {
    try {
      field.arcs.push_back(integrate_dual_arc(spec, target, tc, horizon, step, options.arc));
      field.failures.emplace_back();
      field.valid.push_back(1);
    } catch (const Error& e) {
      DualArc failed;
      failed.kind = tc.kind;
      failed.terminal = tc;
      field.arcs.push_back(std::move(failed));
      field.failures.emplace_back(e.what());
      field.valid.push_back(0);
    }
  }
  const std::size_t count = field.arcs.size();
  field.crossing.assign(count, 0);
  field.crossing_time_to_go.assign(count, std::numeric_limits<double>::infinity());

  std::vector<std::size_t> normal;
  for (std::size_t a = 0; a < boundary_arcs; ++a)
    if (field.valid[a] && field.arcs[a].kind == ArcKind::kNormal && field.arcs[a].size() > 1) normal.push_back(a);

  auto mark = [&](std::size_t a, std::size_t j) {
    const double s = field.arcs[a].times.empty() ? 0.0 : field.arcs[a].time_to_go(field.arcs[a].size() - 1 - j);
    field.crossing[a] = 1;
    field.crossing_time_to_go[a] = std::min(field.crossing_time_to_go[a], s);
  };

  // Jacobian sign change between chart neighbors (planar only).
  if (target.dim() == 2 && normal.size() >= 2) {
    const bool cyclic = target.closed_boundary() && normal.size() == field.boundary_count;
    for (std::size_t k = 0; k + (cyclic ? 0 : 1) < normal.size(); ++k) {
      const std::size_t a = normal[k];
      const std::size_t b = normal[(k + 1) % normal.size()];
      const std::size_t len = std::min(field.arcs[a].size(), field.arcs[b].size());
      double reference = 0.0;
      for (std::size_t j = 1; j < len; ++j) {
        const Vector d = node_from_boundary(field.arcs[b], j) - node_from_boundary(field.arcs[a], j);
        const double det = cross2(d, -velocity_from_boundary(field.arcs[a], j));
        const double scale = d.norm() * velocity_from_boundary(field.arcs[a], j).norm();
        if (std::abs(det) <= 1e-12 * std::max(scale, 1e-300)) continue;
        if (reference == 0.0) {
          reference = det;
        } else if ((det > 0.0) != (reference > 0.0)) {
          mark(a, j);
          mark(b, j);
          break;
        }
      }
    }
  }

  // Same-time nearest-arc collapse.
  const double collapse = 0.25 * field.boundary_spacing;
  std::size_t longest = 0;
  for (auto a : normal) longest = std::max(longest, field.arcs[a].size());
  for (std::size_t j = 1; j < longest; ++j) {
    for (std::size_t ia = 0; ia < normal.size(); ++ia) {
      const auto& arc_a = field.arcs[normal[ia]];
      if (j >= arc_a.size() || field.crossing[normal[ia]]) continue;
      const State& xa = node_from_boundary(arc_a, j);
      for (std::size_t ib = 0; ib < normal.size(); ++ib) {
        if (ib == ia) continue;
        const auto& arc_b = field.arcs[normal[ib]];
        if (j >= arc_b.size()) continue;
        if ((xa - node_from_boundary(arc_b, j)).norm() < collapse) {
          mark(normal[ia], j);
          break;
        }
      }
    }
  }

  // Match radius: twice the node spacing of the field, along and across arcs.
  double along = 0.0;
  std::vector<double> across;
  for (std::size_t k = 0; k < normal.size(); ++k) {
    const auto& arc = field.arcs[normal[k]];
    for (std::size_t i = 1; i < arc.size(); ++i) along = std::max(along, (arc.x_path[i] - arc.x_path[i - 1]).norm());
    if (k + 1 < normal.size() || (target.closed_boundary() && normal.size() == field.boundary_count)) {
      const auto& next = field.arcs[normal[(k + 1) % normal.size()]];
      const std::size_t len = std::min(arc.size(), next.size());
      for (std::size_t j = 0; j < len; ++j)
        across.push_back((node_from_boundary(arc, j) - node_from_boundary(next, j)).norm());
    }
  }
  double across_median = field.boundary_spacing;
  if (!across.empty()) {
    std::nth_element(across.begin(), across.begin() + static_cast<std::ptrdiff_t>(across.size() / 2), across.end());
    across_median = across[across.size() / 2];
  }
  field.match_radius = 2.0 * std::max(along, across_median);

  field.index.cell = field.match_radius > 0.0 ? field.match_radius : 1.0;
  for (auto a : normal) {
    const auto& arc = field.arcs[a];
    for (std::size_t i = 0; i < arc.size(); ++i) {
      field.index.buckets[bucket_key(arc.x_path[i], field.index.cell)].emplace_back(static_cast<std::uint32_t>(a),
                                                                                   static_cast<std::uint32_t>(i));
    }
  }
  return field;
}

std::vector<FlowSample> flow_phi_path(const Multifunction& spec, const TargetSet& target, const State& x_bar,
                                      double t, double step, BranchRule rule,
                                      const std::optional<Vector>& initial_velocity) {
  if (!(t >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "flow time must be >= 0");
  std::vector<FlowSample> out;
  Phase y{x_bar, -target.grad_g(x_bar)};
  out.push_back({0.0, y.x, y.p});
  if (t == 0.0) return out;
  const int n_steps = step_count(t, step);
  const double h = t / n_steps;
  Vector preferred = initial_velocity ? *initial_velocity : grad_p_H(spec, y.x, y.p);
  auto select = [&](const State& x, const Costate& p) {
    return rule == BranchRule::kSticky ? grad_p_H_toward(spec, x, p, preferred) : grad_p_H(spec, x, p);
  };
  auto rhs = [&](const State& x, const Costate& p) { return Phase{-select(x, p), grad_x_H(spec, x, p)}; };
  for (int k = 0; k < n_steps; ++k) {
    y = rk4(y, h, rhs);
    const double pn = y.p.norm();
    if (!(pn >= 1e-8 && pn <= 1e8)) throw Error(ErrorCode::kCostateBlowup, "costate left the admissible range");
    if (rule == BranchRule::kSticky) preferred = select(y.x, y.p);
    out.push_back({(k + 1) * h, y.x, y.p});
  }
  return out;
}

State flow_phi(const Multifunction& spec, const TargetSet& target, double t, const State& x_bar, double step) {
  if (t == 0.0) return x_bar;
  return flow_phi_path(spec, target, x_bar, t, step).back().x;
}

DualArc arc_prefix(const DualArc& arc, double time_to_go) {
  if (arc.size() == 0 || !(time_to_go < arc.duration())) return arc;
  std::size_t first = 0;
  while (first + 1 < arc.size() && arc.time_to_go(first) > time_to_go) ++first;
  DualArc out = arc;
  auto cut = [first](auto& v) { v.erase(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(first)); };
  cut(out.times);
  cut(out.x_path);
  cut(out.p_path);
  cut(out.xdot_path);
  cut(out.h_trace);
  const double t0 = out.times.front();
  for (double& t : out.times) t -= t0;
  return out;
}

DualArc uncrossed_arc(const ExtremalField& field, std::size_t i) {
  const DualArc& arc = field.arcs.at(i);
  return field.crossing[i] ? arc_prefix(arc, field.crossing_time_to_go[i]) : arc;
}

std::optional<Synthesis> synthesize_T(const ExtremalField& field, const TargetSet& target, const State& query) {
  if (field.arcs.empty()) throw Error(ErrorCode::kInvalidArgument, "extremal field is empty");
  if (target.contains(query)) return Synthesis{0.0, -1};
  const double cell = field.index.cell;
  const int n = static_cast<int>(query.size());
  std::optional<Synthesis> best;
  int total = 1;
  for (int i = 0; i < n; ++i) total *= 3;
  for (int code = 0; code < total; ++code) {
    State probe = query;
    int rest = code;
    for (int i = 0; i < n; ++i) {
      probe[i] += cell * (rest % 3 - 1);
      rest /= 3;
    }
    const auto it = field.index.buckets.find(bucket_key(probe, cell));
    if (it == field.index.buckets.end()) continue;
    for (const auto& [a, i] : it->second) {
      const auto& arc = field.arcs[a];
      const State& x = arc.x_path[i];
      if ((x - query).norm() > field.match_radius) continue;
      const double s = arc.time_to_go(i);
      if (!(s < field.crossing_time_to_go[a])) continue;
      if (!best || s < best->value) best = Synthesis{s, static_cast<int>(a)};
    }
  }
  return best;
}

}  // namespace mintime
