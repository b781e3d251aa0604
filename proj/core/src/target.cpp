#include "mintime/target.hpp"

#include "mintime/error.hpp"
#include "overloaded.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace mintime {

using detail::Overloaded;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Matrix hyperplane_basis(const Vector& normal) {
  const int n = static_cast<int>(normal.size());
  const Vector a = normal / normal.norm();
  Matrix basis(n, std::max(n - 1, 0));
  if (n == 2) {
    basis.col(0) = make_vector({-a[1], a[0]});
  } else if (n == 3) {
    Eigen::Index pick = 0;
    a.cwiseAbs().minCoeff(&pick);
    Eigen::Vector3d e = Eigen::Vector3d::Zero();
    e[pick] = 1.0;
    const Eigen::Vector3d a3(a[0], a[1], a[2]);
    const Eigen::Vector3d t1 = a3.cross(e).normalized();
    const Eigen::Vector3d t2 = a3.cross(t1);
    basis.col(0) = make_vector({t1[0], t1[1], t1[2]});
    basis.col(1) = make_vector({t2[0], t2[1], t2[2]});
  }
  return basis;
}

}  // namespace

TargetSet::TargetSet(LevelSet g, std::optional<Box> chart_box) : g_(std::move(g)), chart_box_(std::move(chart_box)) {
  if (g_.dim() == 0) throw Error(ErrorCode::kInvalidArgument, "target level set is empty");
  if (chart_box_ && (chart_box_->dim() != g_.dim() || !chart_box_->nondegenerate()))
    throw Error(ErrorCode::kInvalidArgument, "chart box must be nondegenerate and match the target dimension");
  if (const auto* h = std::get_if<HalfSpaceLevelSet>(&g_.shape())) {
    const int n = g_.dim();
    plane_base_ = h->offset * h->normal / h->normal.squaredNorm();
    plane_tangents_ = hyperplane_basis(h->normal);
    plane_lower_ = Vector::Constant(std::max(n - 1, 0), -1.0);
    plane_upper_ = Vector::Constant(std::max(n - 1, 0), 1.0);
    if (chart_box_ && n == 2) {
      // Exact intersection of the line with the box.
      const Vector tau = plane_tangents_.col(0);
      double lo = -std::numeric_limits<double>::infinity();
      double hi = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) {
        if (std::abs(tau[i]) < 1e-15) {
          if (plane_base_[i] < chart_box_->lower[i] || plane_base_[i] > chart_box_->upper[i]) lo = hi = 0.0;
          continue;
        }
        double a = (chart_box_->lower[i] - plane_base_[i]) / tau[i];
        double b = (chart_box_->upper[i] - plane_base_[i]) / tau[i];
        if (a > b) std::swap(a, b);
        lo = std::max(lo, a);
        hi = std::min(hi, b);
      }
      if (!(hi > lo)) throw Error(ErrorCode::kInvalidArgument, "half-space boundary misses the chart box");
      plane_lower_[0] = lo;
      plane_upper_[0] = hi;
    } else if (chart_box_ && n == 3) {
      plane_lower_.setConstant(std::numeric_limits<double>::infinity());
      plane_upper_.setConstant(-std::numeric_limits<double>::infinity());
      for (int corner = 0; corner < 8; ++corner) {
        Vector c(3);
        for (int i = 0; i < 3; ++i) c[i] = (corner >> i) & 1 ? chart_box_->upper[i] : chart_box_->lower[i];
        const Vector t = plane_tangents_.transpose() * (c - plane_base_);
        plane_lower_ = plane_lower_.cwiseMin(t);
        plane_upper_ = plane_upper_.cwiseMax(t);
      }
    }
  }
}

bool TargetSet::closed_boundary() const { return !std::holds_alternative<HalfSpaceLevelSet>(g_.shape()); }

bool TargetSet::chart_periodic(int k) const {
  if (!closed_boundary()) return false;
  return dim() == 2 ? k == 0 : k == 1;
}

double TargetSet::chart_lower(int k) const {
  if (!closed_boundary()) return plane_lower_[k];
  return 0.0;
}

double TargetSet::chart_upper(int k) const {
  if (!closed_boundary()) return plane_upper_[k];
  if (dim() == 2) return kTwoPi;
  return k == 0 ? std::numbers::pi : kTwoPi;
}

State TargetSet::chart_point(const Vector& u) const {
  const int n = dim();
  if (u.size() != n - 1) throw Error(ErrorCode::kInvalidArgument, "chart coordinate dimension mismatch");
  return std::visit(Overloaded{
                        [&](const HalfSpaceLevelSet&) -> State { return plane_base_ + plane_tangents_ * u; },
                        [&](const auto& s) -> State {
                          Vector center;
                          Vector axes;
                          if constexpr (std::is_same_v<std::decay_t<decltype(s)>, DiskLevelSet>) {
                            center = s.center;
                            axes = Vector::Constant(n, s.radius);
                          } else {
                            center = s.center;
                            axes = s.semi_axes;
                          }
                          Vector d(n);
                          if (n == 2) {
                            d << std::cos(u[0]), std::sin(u[0]);
                          } else {
                            d << std::sin(u[0]) * std::cos(u[1]), std::sin(u[0]) * std::sin(u[1]), std::cos(u[0]);
                          }
                          return center + axes.cwiseProduct(d);
                        },
                    },
                    g_.shape());
}

Costate inner_normal(const TargetSet& target, const State& x_bar) {
  if (std::abs(target.g(x_bar)) > kBoundaryTolerance)
    throw Error(ErrorCode::kOffBoundary, "point is not on the target boundary");
  const Vector grad = target.grad_g(x_bar);
  const double norm = grad.norm();
  if (norm < 1e-10) throw Error(ErrorCode::kDegenerateGradient, "|grad g| < 1e-10 on the boundary");
  return -grad / norm;
}

State project_to_boundary(const TargetSet& target, const State& x, int max_iterations) {
  State y = x;
  int polish = 0;
  for (int it = 0; it < max_iterations; ++it) {
    const double g = target.g(y);
    if (std::abs(g) <= kBoundaryTolerance) {
      // A few extra Newton steps push |g| down to rounding level.
      if (polish++ >= 2 || g == 0.0) return y;
    }
    const Vector grad = target.grad_g(y);
    const double gg = grad.squaredNorm();
    if (gg < 1e-20) throw Error(ErrorCode::kDegenerateGradient, "grad g vanishes during projection");
    y -= (g / gg) * grad;
    if (!y.allFinite()) break;
  }
  if (y.allFinite() && std::abs(target.g(y)) <= kBoundaryTolerance) return y;
  throw Error(ErrorCode::kNonConvergence, "projection to the boundary did not converge");
}

BoundaryPoint boundary_point_at(const TargetSet& target, const Multifunction& spec, const Vector& u) {
  BoundaryPoint bp;
  bp.param = u;
  bp.x_bar = project_to_boundary(target, target.chart_point(u));
  bp.xi = inner_normal(target, bp.x_bar);
  bp.h_value = eval_H(spec, bp.x_bar, bp.xi);
  return bp;
}

std::vector<BoundaryPoint> sample_boundary(const TargetSet& target, const Multifunction& spec, int count) {
  if (count < 4) throw Error(ErrorCode::kInvalidArgument, "boundary sample count must be >= 4");
  const int n = target.dim();
  std::vector<BoundaryPoint> out;
  if (n == 1) {
    std::vector<State> points;
    std::visit(Overloaded{
                   [&](const DiskLevelSet& s) {
                     points.push_back(s.center - Vector::Constant(1, s.radius));
                     points.push_back(s.center + Vector::Constant(1, s.radius));
                   },
                   [&](const EllipseLevelSet& s) {
                     points.push_back(s.center - s.semi_axes);
                     points.push_back(s.center + s.semi_axes);
                   },
                   [&](const HalfSpaceLevelSet& s) { points.push_back(Vector::Constant(1, s.offset / s.normal[0])); },
               },
               target.level_set().shape());
    for (const auto& x : points) {
      BoundaryPoint bp;
      bp.x_bar = x;
      bp.xi = inner_normal(target, x);
      bp.h_value = eval_H(spec, x, bp.xi);
      bp.param = Vector(0);
      out.push_back(bp);
    }
    return out;
  }
  if (n == 2) {
    const double lo = target.chart_lower(0);
    const double hi = target.chart_upper(0);
    for (int k = 0; k < count; ++k) {
      const double t = target.chart_periodic(0) ? lo + (hi - lo) * k / count : lo + (hi - lo) * (k + 0.5) / count;
      out.push_back(boundary_point_at(target, spec, make_vector({t})));
    }
    return out;
  }
  if (target.closed_boundary()) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
      const double z = 1.0 - 2.0 * (k + 0.5) / count;
      double phi = std::fmod(golden * k, kTwoPi);
      out.push_back(boundary_point_at(target, spec, make_vector({std::acos(z), phi})));
    }
    return out;
  }
  const int m = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(count))));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double a = target.chart_lower(0) + (target.chart_upper(0) - target.chart_lower(0)) * (i + 0.5) / m;
      const double b = target.chart_lower(1) + (target.chart_upper(1) - target.chart_lower(1)) * (j + 0.5) / m;
      out.push_back(boundary_point_at(target, spec, make_vector({a, b})));
    }
  }
  return out;
}

namespace {

struct Row {
  // Maps the scanned coordinate to full chart coordinates.
  std::function<Vector(double)> chart;
  double lo = 0.0;
  double hi = 1.0;
  bool periodic = false;
};

std::vector<Row> scan_rows(const TargetSet& target, int resolution) {
  std::vector<Row> rows;
  if (target.dim() == 2) {
    rows.push_back({[](double u) { return make_vector({u}); }, target.chart_lower(0), target.chart_upper(0),
                    target.chart_periodic(0)});
    return rows;
  }
  // Rows along both chart coordinates, so zero sets aligned with either one are crossed.
  const int count = std::max(resolution / 2, 2);
  for (int j = 0; j < count; ++j) {
    const double a = target.chart_lower(0) + (target.chart_upper(0) - target.chart_lower(0)) * (j + 0.5) / count;
    rows.push_back({[a](double u) { return make_vector({a, u}); }, target.chart_lower(1), target.chart_upper(1),
                    target.chart_periodic(1)});
  }
  for (int j = 0; j < count; ++j) {
    const double span = target.chart_upper(1) - target.chart_lower(1);
    const double b = target.chart_lower(1) + span * (target.chart_periodic(1) ? j : j + 0.5) / count;
    rows.push_back({[b](double u) { return make_vector({u, b}); }, target.chart_lower(0), target.chart_upper(0),
                    target.chart_periodic(0)});
  }
  return rows;
}

template <class F>
double golden_min(F&& f, double a, double b) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a);
  double d = a + r * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-15 * (1.0 + std::abs(a)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? c : d;
}

template <class F>
double bisect(F&& f, double a, double b, double fa) {
  for (int it = 0; it < 200 && (b - a) > 1e-15 * (1.0 + std::abs(a)); ++it) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm < 0.0) == (fa < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

struct RowSamples {
  std::vector<double> u;
  std::vector<double> h;
};

RowSamples sample_row(const TargetSet& target, const Multifunction& spec, const Row& row, int resolution) {
  RowSamples s;
  const int count = std::max(resolution, 8);
  for (int k = 0; k < count; ++k) {
    const double u = row.periodic ? row.lo + (row.hi - row.lo) * k / count
                                  : row.lo + (row.hi - row.lo) * k / (count - 1);
    s.u.push_back(u);
    s.h.push_back(boundary_point_at(target, spec, row.chart(u)).h_value);
  }
  return s;
}

}  // namespace

double sigma_threshold(const TargetSet& target, const Multifunction& spec, int resolution, double sigma_tol) {
  double hmax = 0.0;
  for (const auto& row : scan_rows(target, resolution)) {
    for (double h : sample_row(target, spec, row, resolution).h) hmax = std::max(hmax, std::abs(h));
  }
  return sigma_tol * (hmax > 0.0 ? hmax : 1.0);
}

std::vector<BoundaryPoint> find_sigma_set(const TargetSet& target, const Multifunction& spec, int resolution,
                                          SigmaMode mode, double sigma_tol) {
  const int n = target.dim();
  if (n != 2 && n != 3) throw Error(ErrorCode::kInvalidArgument, "Sigma detection needs n = 2 or n = 3");
  if (resolution < 8) throw Error(ErrorCode::kInvalidArgument, "Sigma resolution must be >= 8");

  const auto rows = scan_rows(target, resolution);
  std::vector<RowSamples> samples;
  double hmax = 0.0;
  for (const auto& row : rows) {
    samples.push_back(sample_row(target, spec, row, resolution));
    for (double h : samples.back().h) {
      if (mode == SigmaMode::kStrict && h < -1e-9)
        throw Error(ErrorCode::kPreconditionViolation, "H(x_bar, xi) < 0 on the boundary; 0 is not in F there");
      hmax = std::max(hmax, std::abs(h));
    }
  }
  const double threshold = sigma_tol * (hmax > 0.0 ? hmax : 1.0);

  std::vector<BoundaryPoint> out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Row& row = rows[r];
    const auto& s = samples[r];
    const auto m = static_cast<std::ptrdiff_t>(s.u.size());
    const double spacing = s.u.size() > 1 ? std::abs(s.u[1] - s.u[0]) : 1.0;
    auto h_at = [&](double u) {
      if (!row.periodic) u = std::clamp(u, row.lo, row.hi);
      return boundary_point_at(target, spec, row.chart(u)).h_value;
    };
    auto abs_h = [&](double u) { return std::abs(h_at(u)); };
    std::vector<double> candidates;
    for (std::ptrdiff_t k = 0; k < m; ++k) {
      const bool has_prev = row.periodic || k > 0;
      const bool has_next = row.periodic || k + 1 < m;
      const double here = std::abs(s.h[k]);
      const double prev = has_prev ? std::abs(s.h[(k - 1 + m) % m]) : std::numeric_limits<double>::infinity();
      const double next = has_next ? std::abs(s.h[(k + 1) % m]) : std::numeric_limits<double>::infinity();
      if (here <= prev && here <= next) {
        const double a = has_prev ? s.u[k] - spacing : s.u[k];
        const double b = has_next ? s.u[k] + spacing : s.u[k];
        candidates.push_back(golden_min(abs_h, a, b));
      }
      if (mode == SigmaMode::kSignChange && has_next) {
        const double h0 = s.h[k];
        const double h1 = s.h[(k + 1) % m];
        if ((h0 < 0.0 && h1 > 0.0) || (h0 > 0.0 && h1 < 0.0)) {
          candidates.push_back(bisect(h_at, s.u[k], s.u[k] + spacing, h0));
        }
      }
    }
    std::vector<BoundaryPoint> accepted;
    for (double u : candidates) {
      if (row.periodic) {
        u = std::fmod(u - row.lo, row.hi - row.lo);
        if (u < 0.0) u += row.hi - row.lo;
        u += row.lo;
      } else {
        u = std::clamp(u, row.lo, row.hi);
      }
      auto bp = boundary_point_at(target, spec, row.chart(u));
      if (std::abs(bp.h_value) > threshold) continue;
      bool duplicate = false;
      for (auto& other : accepted) {
        if ((other.x_bar - bp.x_bar).norm() < 1e-7) {
          if (std::abs(bp.h_value) < std::abs(other.h_value)) other = bp;
          duplicate = true;
          break;
        }
      }
      if (!duplicate) accepted.push_back(bp);
    }
    std::sort(accepted.begin(), accepted.end(), [](const BoundaryPoint& a, const BoundaryPoint& b) {
      return a.param[a.param.size() - 1] < b.param[b.param.size() - 1];
    });
    out.insert(out.end(), accepted.begin(), accepted.end());
  }
  return out;
}

NondegeneracyReport check_nondegeneracy(const TargetSet& target, const Multifunction& spec,
                                        const std::vector<BoundaryPoint>& points, double sigma_threshold,
                                        double angle_tol) {
  NondegeneracyReport report;
  report.angle_tolerance = angle_tol;
  report.min_angle = std::numbers::pi / 2.0;
  for (const auto& bp : points) {
    NondegeneracyEntry e;
    e.x_bar = bp.x_bar;
    const Vector grad = target.grad_g(bp.x_bar);
    if (!(grad.norm() > 0.0)) throw Error(ErrorCode::kZeroCostate, "grad g vanishes at a boundary point");
    e.in_sigma = std::abs(eval_H(spec, bp.x_bar, bp.xi)) <= sigma_threshold;
    if (e.in_sigma) {
      ++report.skipped;
      report.entries.push_back(e);
      continue;
    }
    const Costate q = -grad;
    e.w = grad_x_H(spec, bp.x_bar, q) - target.hessian_g(bp.x_bar) * grad_p_H(spec, bp.x_bar, q);
    const Vector unit = grad / grad.norm();
    const double along = e.w.dot(unit);
    const double across = (e.w - along * unit).norm();
    if (e.w.norm() <= 1e-12 * (1.0 + grad.norm())) {
      e.angle = 0.0;
    } else {
      e.angle = std::atan2(across, std::abs(along));
    }
    e.violation = e.angle < angle_tol;
    if (e.violation) ++report.violations;
    report.min_angle = std::min(report.min_angle, e.angle);
    report.entries.push_back(e);
  }
  return report;
}

double proximal_normal_sigma(const TargetSet& target, const State& x_bar) {
  const Matrix hess = target.hessian_g(x_bar);
  const double norm = Eigen::SelfAdjointEigenSolver<Matrix>(hess).eigenvalues().cwiseAbs().maxCoeff();
  return norm / (2.0 * target.grad_g(x_bar).norm());
}

}  // namespace mintime
