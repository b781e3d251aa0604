#include "mintime/analysis.hpp"

#include "mintime/error.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>

namespace mintime {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector random_unit(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> normal;
  Vector u(n);
  do {
    for (int i = 0; i < n; ++i) u[i] = normal(rng);
  } while (u.norm() < 1e-12);
  return u / u.norm();
}

// Nodes of `grid` within sup-distance `radius` of x.
template <class F>
void for_nodes_near(const Grid& grid, const State& x, double radius, F&& f) {
  const int n = grid.dim();
  std::array<int, kMaxDim> lo{}, hi{};
  for (int a = 0; a < kMaxDim; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    if (a >= n) continue;
    const double h = grid.spacing()[a];
    const double offset = x[a] - grid.bounds().lower[a];
    lo[ua] = std::max(0, static_cast<int>(std::ceil((offset - radius) / h - 1e-9)));
    hi[ua] = std::min(grid.count(a) - 1, static_cast<int>(std::floor((offset + radius) / h + 1e-9)));
    if (lo[ua] > hi[ua]) return;
  }
  for (int i = lo[0]; i <= hi[0]; ++i)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int k = lo[2]; k <= hi[2]; ++k) f(grid.index({i, j, k}));
}

std::size_t nearest_node(const Grid& grid, const State& x) {
  std::array<int, kMaxDim> m{};
  for (int a = 0; a < grid.dim(); ++a) {
    const double u = (x[a] - grid.bounds().lower[a]) / grid.spacing()[a];
    m[static_cast<std::size_t>(a)] = std::clamp(static_cast<int>(std::lround(u)), 0, grid.count(a) - 1);
  }
  return grid.index(m);
}

}  // namespace

TimeFunction time_function(const ValueField& vf) {
  auto grad = std::make_shared<GradientField>(gradient_field(vf));
  TimeFunction f;
  const ValueField* field = &vf;
  f.value = [field](const State& x) { return field->value_at(x); };
  f.gradient = [field, grad](const State& x) -> std::optional<Vector> {
    const Grid& grid = field->grid;
    std::array<int, kMaxDim> cell{};
    std::array<double, kMaxDim> frac{};
    if (!grid.locate(x, cell, frac)) return std::nullopt;
    // multilinear over the cell when every corner carries a gradient, else the nearest node
    const int n = grid.dim();
    Vector g = Vector::Zero(n);
    bool complete = true;
    for (int corner = 0; corner < (1 << n) && complete; ++corner) {
      std::array<int, kMaxDim> m = cell;
      double w = 1.0;
      for (int a = 0; a < n; ++a) {
        const bool up = (corner >> a) & 1;
        m[static_cast<std::size_t>(a)] += up;
        w *= up ? frac[static_cast<std::size_t>(a)] : 1.0 - frac[static_cast<std::size_t>(a)];
      }
      const std::size_t j = grid.index(m);
      if (!grad->valid[j]) complete = false;
      else g += w * grad->gradient[j];
    }
    if (complete) return g;
    const std::size_t i = nearest_node(grid, x);
    if (!grad->valid[i]) return std::nullopt;
    return grad->gradient[i];
  };
  f.resolution = vf.grid.min_spacing();
  return f;
}

std::string to_string(CertificateKind kind) { return kind == CertificateKind::kProximal ? "proximal" : "horizontal"; }

std::string to_string(CertificateStatus status) {
  switch (status) {
    case CertificateStatus::kCertified: return "certified";
    case CertificateStatus::kCapExceeded: return "cap-exceeded";
    case CertificateStatus::kNoSamples: return "no-samples";
  }
  return "unknown";
}

SupergradientCertificate certify_supergradient(const TimeFunction& T, const State& x, const Costate& p,
                                               CertificateKind kind, const CertificateOptions& options) {
  if (!(options.radius > 0.0) || options.count < 1) throw Error(ErrorCode::kInvalidArgument, "certificate radius and count must be positive");
  const auto tx = T.value(x);
  if (!tx) throw Error(ErrorCode::kPreconditionViolation, "certificate point is not reachable");

  SupergradientCertificate c;
  c.x = x;
  c.vector = p;
  c.kind = kind;
  c.sample_radius = options.radius;
  c.sample_count = options.count;
  const double alpha = kind == CertificateKind::kProximal ? 1.0 : 0.0;
  const double nu = std::sqrt(p.squaredNorm() + alpha * alpha);
  if (!(nu > 0.0)) throw Error(ErrorCode::kZeroCostate, "certificate vector is zero");

  const double lo = options.min_scale > 0.0 ? options.min_scale : std::max(0.5 * T.resolution, 1e-6 * options.radius);
  const double log_lo = std::log(std::min(lo, options.radius));
  const double log_hi = std::log(options.radius);
  const double inner = options.first_order_scale > 0.0 ? options.first_order_scale : 4.0 * lo;
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = static_cast<int>(x.size());

  double c5 = 0.0;
  double worst_cos = 0.0;
  c.beta_lo = kInf;
  c.beta_hi = -kInf;
  for (int k = 0; k < options.count; ++k) {
    const double eps = std::exp(log_lo + (log_hi - log_lo) * unit(rng));
    const State y = x + eps * random_unit(rng, n);
    const double lambda = (k % 2 == 0) ? 0.0 : unit(rng);
    const auto ty = T.value(y);
    if (!ty) continue;
    ++c.used;
    const double db = (*ty - options.radius * lambda) - *tx;
    c.beta_lo = std::min(c.beta_lo, db);
    c.beta_hi = std::max(c.beta_hi, db);
    const Vector dy = y - x;
    const double lhs = p.dot(dy) + alpha * db;
    const double rhs = dy.squaredNorm() + db * db;
    const double chord = std::sqrt(rhs);
    if (eps <= inner) worst_cos = std::max(worst_cos, lhs / (nu * chord));
    const double excess = lhs - options.first_order_tol * nu * chord;
    if (excess > 0.0) c5 = std::max(c5, excess / rhs);
  }
  c.first_order = worst_cos;
  if (c.used == 0) {
    c.beta_lo = c.beta_hi = 0.0;
    c.status = CertificateStatus::kNoSamples;
    return c;
  }
  c.C5 = c5;
  c.status = (worst_cos > options.first_order_tol || c5 > options.cap) ? CertificateStatus::kCapExceeded
                                                                        : CertificateStatus::kCertified;
  return c;
}

ArcCertification certify_arc(const TimeFunction& T, const DualArc& arc, const TargetSet& target, int samples,
                             const CertificateOptions& options) {
  ArcCertification out;
  std::vector<std::size_t> eligible;
  const double margin = options.target_margin >= 0.0 ? options.target_margin : 5.0 * T.resolution;
  for (std::size_t k = 0; k < arc.size(); ++k) {
    const State& x = arc.x_path[k];
    const double g = target.g(x);
    if (g <= kBoundaryTolerance || g < margin * target.grad_g(x).norm() || !T.value(x)) continue;
    eligible.push_back(k);
  }
  if (eligible.empty() || samples <= 0) return out;
  const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(samples), eligible.size());
  const auto kind = arc.kind == ArcKind::kNormal ? CertificateKind::kProximal : CertificateKind::kHorizontal;
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t k = eligible[(j * (eligible.size() - 1)) / std::max<std::size_t>(m - 1, 1)];
    CertificateOptions o = options;
    o.seed = options.seed + k;
    out.certificates.push_back(certify_supergradient(T, arc.x_path[k], arc.p_path[k], kind, o));
    out.certified += out.certificates.back().certified();
  }
  return out;
}

ConstancyReport hamiltonian_constancy_report(const DualArc& arc) {
  ConstancyReport r;
  r.level = arc.kind == ArcKind::kNormal ? 1.0 : 0.0;
  double sum = 0.0;
  for (double h : arc.h_trace) {
    const double d = std::abs(h - r.level);
    r.max_deviation = std::max(r.max_deviation, d);
    sum += d;
  }
  if (!arc.h_trace.empty()) r.mean_deviation = sum / static_cast<double>(arc.h_trace.size());
  return r;
}

double RefinementReport::min_order() const {
  double m = kInf;
  for (double o : orders) m = std::min(m, o);
  return m;
}

RefinementReport constancy_refinement(const Multifunction& spec, const TargetSet& target, const TerminalCondition& tc,
                                      double horizon, const std::vector<double>& steps, const ArcOptions& options) {
  RefinementReport r;
  r.steps = steps;
  for (double s : steps)
    r.max_deviation.push_back(hamiltonian_constancy_report(integrate_dual_arc(spec, target, tc, horizon, s, options)).max_deviation);
  for (std::size_t k = 1; k < steps.size(); ++k) {
    const double a = r.max_deviation[k - 1];
    const double b = r.max_deviation[k];
    if (b <= kConstancyFloor || a <= kConstancyFloor)
      r.orders.push_back(kInf);
    else
      r.orders.push_back(std::log(a / b) / std::log(steps[k - 1] / steps[k]));
  }
  return r;
}

Trajectory trajectory_from_arc(const DualArc& arc) { return Trajectory{arc.times, arc.x_path, arc.p_path}; }

std::string to_string(Condition condition) {
  switch (condition) {
    case Condition::kNone: return "none";
    case Condition::kDynamics: return "dynamics";
    case Condition::kSupergradient: return "supergradient";
    case Condition::kHamiltonian: return "hamiltonian";
    case Condition::kConclusion: return "conclusion";
  }
  return "unknown";
}

Verdict verify_optimality(const Multifunction& spec, const ValueField& vf, const TargetSet& target,
                          const Trajectory& tr, const VerifyOptions& options) {
  const std::size_t m = tr.t.size();
  if (m < 3 || tr.x.size() != m || tr.p.size() != m) throw Error(ErrorCode::kInvalidArgument, "trajectory needs >= 3 aligned samples");
  for (std::size_t k = 1; k < m; ++k)
    if (!(tr.t[k] > tr.t[k - 1])) throw Error(ErrorCode::kInvalidArgument, "trajectory times must increase");
  if (!(target.g(tr.x.back()) <= 1e-6)) throw Error(ErrorCode::kPreconditionViolation, "trajectory does not end on the target");

  double max_dt = 0.0;
  for (std::size_t k = 1; k < m; ++k) max_dt = std::max(max_dt, tr.t[k] - tr.t[k - 1]);
  Verdict v;
  v.dyn_tol = options.dyn_tol > 0.0 ? options.dyn_tol : 10.0 * max_dt;
  v.ham_tol = options.ham_tol;
  v.concl_tol = options.concl_tol > 0.0 ? options.concl_tol : 5.0 * vf.grid.min_spacing();

  // (a) with second-order differences, one-sided at the ends
  for (std::size_t k = 0; k < m; ++k) {
    Vector xdot;
    if (k == 0) {
      const double h0 = tr.t[1] - tr.t[0], h1 = tr.t[2] - tr.t[1];
      xdot = -(2 * h0 + h1) / (h0 * (h0 + h1)) * tr.x[0] + (h0 + h1) / (h0 * h1) * tr.x[1] - h0 / (h1 * (h0 + h1)) * tr.x[2];
    } else if (k == m - 1) {
      const double h0 = tr.t[m - 2] - tr.t[m - 3], h1 = tr.t[m - 1] - tr.t[m - 2];
      xdot = h1 / (h0 * (h0 + h1)) * tr.x[m - 3] - (h0 + h1) / (h0 * h1) * tr.x[m - 2] + (2 * h1 + h0) / (h1 * (h0 + h1)) * tr.x[m - 1];
    } else {
      xdot = (tr.x[k + 1] - tr.x[k - 1]) / (tr.t[k + 1] - tr.t[k - 1]);
    }
    v.max_dynamics_residual = std::max(v.max_dynamics_residual, (xdot - grad_p_H(spec, tr.x[k], tr.p[k])).norm());
    v.max_hamiltonian_residual = std::max(v.max_hamiltonian_residual, std::abs(eval_H(spec, tr.x[k], tr.p[k]) - 1.0));
  }

  // (b) at evenly spaced off-target nodes
  const TimeFunction T = time_function(vf);
  std::vector<std::size_t> off;
  const double margin = options.certificate.target_margin >= 0.0 ? options.certificate.target_margin : 5.0 * T.resolution;
  for (std::size_t k = 0; k < m; ++k) {
    const double g = target.g(tr.x[k]);
    if (g > kBoundaryTolerance && g >= margin * target.grad_g(tr.x[k]).norm()) off.push_back(k);
  }
  const std::size_t checks = std::min<std::size_t>(off.size(), static_cast<std::size_t>(std::max(options.certificate_nodes, 0)));
  bool cert_ok = true;
  for (std::size_t j = 0; j < checks; ++j) {
    const std::size_t k = off[(j * (off.size() - 1)) / std::max<std::size_t>(checks - 1, 1)];
    ++v.certificate_checks;
    if (!T.value(tr.x[k])) {
      cert_ok = false;
      continue;
    }
    CertificateOptions o = options.certificate;
    o.seed += k;
    const auto c = certify_supergradient(T, tr.x[k], tr.p[k], CertificateKind::kProximal, o);
    if (c.certified()) ++v.certified; else cert_ok = false;
  }

  // conclusion
  bool concl_ok = true;
  std::vector<double> tv(m);
  const auto t0 = T.value(tr.x.front());
  for (std::size_t k = 0; k < m && t0; ++k) {
    const auto tk = T.value(tr.x[k]);
    if (!tk) {
      concl_ok = false;
      break;
    }
    tv[k] = *tk;
    v.conclusion_residual = std::max(v.conclusion_residual, std::abs(*tk - (*t0 - (tr.t[k] - tr.t[0]))));
  }
  if (!t0) concl_ok = false;
  if (concl_ok) {
    const double tbar = std::accumulate(tr.t.begin(), tr.t.end(), 0.0) / static_cast<double>(m);
    const double vbar = std::accumulate(tv.begin(), tv.end(), 0.0) / static_cast<double>(m);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      sxy += (tr.t[k] - tbar) * (tv[k] - vbar);
      sxx += (tr.t[k] - tbar) * (tr.t[k] - tbar);
    }
    v.slope = sxy / sxx;
    v.slope_residual = std::abs(v.slope + 1.0) * (tr.t.back() - tr.t.front());
    concl_ok = v.conclusion_residual <= v.concl_tol && v.slope_residual <= v.concl_tol;
  } else {
    v.conclusion_residual = kInf;
    v.slope_residual = kInf;
  }

  if (v.max_dynamics_residual > v.dyn_tol) v.failures.push_back(Condition::kDynamics);
  if (!cert_ok) v.failures.push_back(Condition::kSupergradient);
  if (v.max_hamiltonian_residual > v.ham_tol) v.failures.push_back(Condition::kHamiltonian);
  if (!concl_ok) v.failures.push_back(Condition::kConclusion);
  v.optimal = v.failures.empty();
  v.first_failure = v.optimal ? Condition::kNone : v.failures.front();
  return v;
}

std::vector<double> difference_ratios(const ValueField& vf) {
  const Grid& g = vf.grid;
  const int n = g.dim();
  std::vector<double> r(g.size(), -1.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!vf.reachable[i] || vf.in_target[i]) continue;
    const auto m = g.multi_index(i);
    double best = 0.0;
    bool ok = true;
    for (int a = 0; a < n && ok; ++a) {
      const int c = m[static_cast<std::size_t>(a)];
      if (c == 0 || c == g.count(a) - 1) {
        ok = false;
        break;
      }
      const std::size_t s = g.stride(a);
      if (!vf.reachable[i + s] || !vf.reachable[i - s]) {
        ok = false;
        break;
      }
      best = std::max(best, std::abs(vf.T[i + s] - vf.T[i - s]) / (2.0 * g.spacing()[a]));
    }
    if (ok) r[i] = best;
  }
  return r;
}

NonLipschitzReport detect_nonlipschitz(const std::vector<ValueField>& levels, const NonLipschitzOptions& options) {
  if (levels.size() < 2) throw Error(ErrorCode::kInvalidArgument, "refinement needs at least two levels");
  for (const auto& vf : levels)
    if (!vf.converged) throw Error(ErrorCode::kPreconditionViolation, "value field did not converge");
  NonLipschitzReport rep;
  rep.growth = options.growth;
  std::vector<std::vector<double>> ratios;
  for (const auto& vf : levels) {
    ratios.push_back(difference_ratios(vf));
    rep.spacings.push_back(vf.grid.min_spacing());
  }
  if (options.L0 > 0.0) {
    rep.L0 = options.L0;
  } else {
    std::vector<double> c;
    for (double r : ratios.front())
      if (r >= 0.0) c.push_back(r);
    if (c.empty()) return rep;
    std::nth_element(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(c.size() / 2), c.end());
    rep.L0 = 2.0 * std::max(c[c.size() / 2], 1e-12);
  }

  const ValueField& fine = levels.back();
  const auto& rf = ratios.back();
  for (std::size_t i = 0; i < fine.grid.size(); ++i) {
    if (rf[i] < rep.L0) continue;
    ++rep.candidates;
    const State x = fine.grid.node(i);
    if (options.ridge) {
      // suppress unless the ratio peaks along the axis that realizes it
      int axis = 0;
      double best = -1.0;
      for (int a = 0; a < fine.grid.dim(); ++a) {
        const std::size_t st = fine.grid.stride(a);
        const double d = std::abs(fine.T[i + st] - fine.T[i - st]) / fine.grid.spacing()[a];
        if (d > best) {
          best = d;
          axis = a;
        }
      }
      const std::size_t st = fine.grid.stride(axis);
      if (rf[i + st] > rf[i] || rf[i - st] > rf[i]) continue;
    }
    std::vector<double> chain(levels.size(), -1.0);
    double tloc = 0.0;
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const auto& vf = levels[l];
      const double rad = vf.grid.min_spacing();
      for_nodes_near(vf.grid, x, rad, [&](std::size_t j) {
        chain[l] = std::max(chain[l], ratios[l][j]);
        if (vf.reachable[j]) tloc = std::max(tloc, vf.T[j] / vf.T_max);
      });
    }
    bool persistent = chain.front() > 0.0;
    for (std::size_t l = 1; l < chain.size() && persistent; ++l) persistent = chain[l] >= options.growth * chain[l - 1];
    if (!persistent) continue;
    if (tloc >= options.unbounded_fraction) {
      rep.unbounded.push_back(x);
      continue;
    }
    rep.points.push_back(x);
    rep.ratios.push_back(rf[i]);
    rep.severity.push_back(static_cast<int>(std::floor(std::log2(rf[i] / rep.L0))));
  }
  return rep;
}

DescentTrace trace_descent(const ValueField& vf, const Multifunction& spec, const TargetSet& target, const State& x,
                           int max_steps) {
  DescentTrace tr;
  const int limit = max_steps > 0 ? max_steps : static_cast<int>(std::ceil(2.0 * vf.T_max / vf.tau)) + 1;
  State y = x;
  tr.path.push_back(y);
  for (int k = 0; k < limit; ++k) {
    if (target.contains(y)) {
      tr.reached_target = true;
      break;
    }
    const Backup b = bellman_backup(vf, spec, y);
    if (!b.valid || b.value >= vf.T_max - vf.tol) break;
    y = y + vf.tau * b.velocity;
    tr.path.push_back(y);
  }
  if (!tr.reached_target) tr.reached_target = target.contains(y);
  return tr;
}

DualityReport check_sigma_duality(const ValueField& vf, const Multifunction& spec, const TargetSet& target,
                                  const std::vector<State>& points, const std::vector<BoundaryPoint>& sigma,
                                  double distance_tol, double h_tol) {
  DualityReport rep;
  rep.distance_tol = distance_tol;
  rep.h_tol = h_tol;
  for (const auto& x : points) {
    DualityEntry e;
    e.start = x;
    const auto tr = trace_descent(vf, spec, target, x);
    e.endpoint = tr.path.back();
    e.reached_target = tr.reached_target;
    for (const auto& s : sigma) {
      const double d = (s.x_bar - e.endpoint).norm();
      if (d < e.sigma_distance) {
        e.sigma_distance = d;
        e.sigma_h = std::abs(s.h_value);
      }
    }
    if (!e.reached_target || !(e.sigma_distance <= distance_tol) || !(e.sigma_h <= h_tol)) ++rep.failures;
    rep.entries.push_back(std::move(e));
  }
  return rep;
}

FlowoutReport flowout_check(const Multifunction& spec, const TargetSet& target, const std::vector<BoundaryPoint>& sigma,
                            const std::vector<State>& singular, const FlowoutOptions& options) {
  if (!(options.lattice_dt > 0.0) || !(options.step > 0.0) || !(options.horizon > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "flow-out horizon, step and lattice spacing must be positive");
  FlowoutReport rep;
  rep.alarm = sigma.empty() && !singular.empty();
  const int stride = std::max(1, static_cast<int>(std::lround(options.lattice_dt / options.step)));
  for (const auto& s : sigma) {
    const Costate p0 = -target.grad_g(s.x_bar);
    auto branches = maximizer_set(spec, s.x_bar, p0);
    if (branches.empty()) branches.push_back(grad_p_H(spec, s.x_bar, p0));
    for (const auto& v : branches) {
      ++rep.branches;
      const auto path = branches.size() > 1
                            ? flow_phi_path(spec, target, s.x_bar, options.horizon, options.step, BranchRule::kSticky, v)
                            : flow_phi_path(spec, target, s.x_bar, options.horizon, options.step);
      const State* prev = nullptr;
      for (std::size_t k = static_cast<std::size_t>(stride); k < path.size(); k += static_cast<std::size_t>(stride)) {
        const State& x = path[k].x;
        if (options.clip && !options.clip->contains(x)) break;
        if (prev) rep.lattice_spacing = std::max(rep.lattice_spacing, (x - *prev).norm());
        rep.samples.push_back(x);
        prev = &rep.samples.back();
      }
    }
  }
  for (const auto& x : singular) {
    double d = kInf;
    for (const auto& y : rep.samples) d = std::min(d, (x - y).norm());
    rep.distances.push_back(d);
    rep.max_distance = std::max(rep.max_distance, d);
  }
  return rep;
}

BoxCount box_counting_dimension(const std::vector<State>& cloud, std::vector<double> scales) {
  if (cloud.size() < 50) throw Error(ErrorCode::kInsufficientPoints, "box counting needs at least 50 points");
  const int n = static_cast<int>(cloud.front().size());
  Vector lo = cloud.front(), hi = cloud.front();
  for (const auto& x : cloud) {
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  auto count = [&](double eps) {
    std::vector<std::array<std::int64_t, kMaxDim>> keys;
    keys.reserve(cloud.size());
    for (const auto& x : cloud) {
      std::array<std::int64_t, kMaxDim> k{};
      for (int i = 0; i < n; ++i) k[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(std::floor((x[i] - lo[i]) / eps));
      keys.push_back(k);
    }
    std::sort(keys.begin(), keys.end());
    return static_cast<std::size_t>(std::unique(keys.begin(), keys.end()) - keys.begin());
  };
  BoxCount out;
  if (scales.empty()) {
    const double extent = (hi - lo).maxCoeff();
    if (!(extent > 0.0)) throw Error(ErrorCode::kInsufficientPoints, "cloud has zero extent");
    for (int k = 1; k <= 30; ++k) {
      const double eps = extent / std::ldexp(1.0, k);
      const std::size_t c = count(eps);
      if (3 * c > cloud.size()) break;
      scales.push_back(eps);
      out.counts.push_back(c);
    }
  } else {
    for (double eps : scales) {
      if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "box scales must be positive");
      out.counts.push_back(count(eps));
    }
  }
  out.scales = scales;
  if (scales.size() < 4) throw Error(ErrorCode::kInsufficientPoints, "box counting needs at least 4 scales");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(scales.size());
  for (std::size_t k = 0; k < scales.size(); ++k) {
    const double a = std::log(1.0 / scales[k]);
    const double b = std::log(static_cast<double>(out.counts[k]));
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  out.dimension = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return out;
}

ExteriorSphereReport exterior_sphere_scan(const TimeFunction& T, const std::vector<State>& points, double radius,
                                          int samples, std::uint64_t seed, double inner) {
  ExteriorSphereReport rep;
  rep.radius = radius;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // oracle error ~ resolution swamps the curvature term |z|^2 / (2 theta) below |z| ~ sqrt(resolution)
  const double automatic = std::max(0.5 * radius, std::sqrt(T.resolution));
  const double lo = std::clamp(inner > 0.0 ? inner : automatic, std::max(T.resolution, 1e-6 * radius), radius);
  using Lifted = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim + 1, 1>;
  for (const auto& x : points) {
    rep.points.push_back(x);
    const auto tx = T.value(x);
    if (!tx) {
      ++rep.no_normal;
      rep.theta.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const int n = static_cast<int>(x.size());
    std::vector<Lifted> zs;
    for (int k = 0; k < samples; ++k) {
      const State y = x + (lo + (radius - lo) * unit(rng)) * random_unit(rng, n);
      const auto ty = T.value(y);
      if (!ty) continue;
      Lifted z(n + 1);
      z.head(n) = y - x;
      z[n] = *ty - *tx;
      zs.push_back(z);
    }
    // realized radius for the normal (-q, 1) / |.|
    auto realized = [&](const Vector& q) {
      Lifted nu(n + 1);
      nu.head(n) = -q;
      nu[n] = 1.0;
      nu /= nu.norm();
      double theta = kInf;
      for (const auto& z : zs) {
        const double s = nu.dot(z);
        if (s > 0.0) theta = std::min(theta, z.squaredNorm() / (2.0 * s));
      }
      return theta;
    };
    const auto grad = T.gradient ? T.gradient(x) : std::nullopt;
    Vector q = grad ? *grad : Vector::Zero(n);
    double theta = realized(q);
    // pattern search over the tilt: the condition asks for some normal, the gradient is a start
    for (double step = 0.1; step > 1e-4 && std::isfinite(theta);) {
      bool moved = false;
      for (int a = 0; a < n && !moved; ++a)
        for (double sgn : {1.0, -1.0}) {
          Vector c = q;
          c[a] += sgn * step;
          const double th = realized(c);
          if (th > theta) {
            theta = th;
            q = c;
            moved = true;
            break;
          }
        }
      if (!moved) step *= 0.5;
    }
    if (!grad && !(theta >= T.resolution)) {
      ++rep.no_normal;
      rep.theta.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    rep.theta.push_back(theta);
    rep.min_theta = std::min(rep.min_theta, theta);
  }
  return rep;
}

double sampled_time_lipschitz(const TimeFunction& T, const std::vector<State>& points, double radius, int pairs_per_point,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (const auto& x : points) {
    const auto tx = T.value(x);
    if (!tx) continue;
    for (int k = 0; k < pairs_per_point; ++k) {
      const double eps = radius * std::max(unit(rng), 1e-3);
      const State y = x + eps * random_unit(rng, static_cast<int>(x.size()));
      const auto ty = T.value(y);
      if (ty) worst = std::max(worst, std::abs(*ty - *tx) / eps);
    }
  }
  return worst;
}

double dpp_violation(const Multifunction& spec, const ValueField& vf, const State& x0, double duration, double step,
                     std::uint64_t seed) {
  if (!(step > 0.0) || !(duration > 0.0)) throw Error(ErrorCode::kInvalidArgument, "duration and step must be positive");
  std::mt19937_64 rng(seed);
  std::vector<double> t{0.0};
  std::vector<double> value;
  State x = x0;
  const auto v0 = vf.value_at(x);
  if (!v0) throw Error(ErrorCode::kPreconditionViolation, "DPP start point is not reachable");
  value.push_back(*v0);
  const int hold = 10;  // a control index is held for this many steps
  std::size_t control = 0;
  const int steps = static_cast<int>(std::ceil(duration / step));
  for (int k = 0; k < steps; ++k) {
    const auto controls = discretize_velocities(spec, x, vf.directions);
    if (k % hold == 0) control = std::uniform_int_distribution<std::size_t>(0, controls.size() - 1)(rng);
    x = x + step * controls[control % controls.size()];
    const auto tv = vf.value_at(x);
    if (!tv) break;
    t.push_back((k + 1) * step);
    value.push_back(*tv);
  }
  double worst = -kInf;
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = i + 1; j < t.size(); ++j) worst = std::max(worst, value[i] - (t[j] - t[i]) - value[j]);
  return worst;
}

}  // namespace mintime
