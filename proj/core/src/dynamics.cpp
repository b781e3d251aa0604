#include "mintime/dynamics.hpp"

#include "mintime/error.hpp"
#include "overloaded.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace mintime {

using detail::Overloaded;

namespace {

constexpr double kTieTolerance = 1e-12;

void require_nonzero(const Costate& p) {
  if (!(p.norm() > kZeroCostateNorm)) throw Error(ErrorCode::kZeroCostate, "costate must be nonzero");
}

bool lex_less(const Vector& a, const Vector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

struct PolytopeEval {
  std::vector<Vector> vertices;
  std::vector<std::size_t> tied;  // sorted lexicographically by vertex value
  double best = 0.0;
};

PolytopeEval evaluate_polytope(const PolytopeFamily& f, const State& x, const Costate& p) {
  PolytopeEval out;
  out.vertices.reserve(f.vertices.size());
  double max_norm = 0.0;
  out.best = -std::numeric_limits<double>::infinity();
  for (const auto& v : f.vertices) {
    out.vertices.push_back(v.value(x));
    max_norm = std::max(max_norm, out.vertices.back().norm());
    out.best = std::max(out.best, p.dot(out.vertices.back()));
  }
  const double eps = kTieTolerance * p.norm() * (1.0 + max_norm);
  for (std::size_t i = 0; i < out.vertices.size(); ++i) {
    if (p.dot(out.vertices[i]) >= out.best - eps) out.tied.push_back(i);
  }
  std::stable_sort(out.tied.begin(), out.tied.end(),
                   [&](std::size_t a, std::size_t b) { return lex_less(out.vertices[a], out.vertices[b]); });
  return out;
}

// Sign of <p, n> with the tie resolved to +1.
double segment_sign(const Vector& n, const Costate& p) {
  const double s = p.dot(n);
  if (std::abs(s) <= kTieTolerance * p.norm()) return 1.0;
  return s > 0.0 ? 1.0 : -1.0;
}

bool segment_tied(const Vector& n, const Costate& p) { return std::abs(p.dot(n)) <= kTieTolerance * p.norm(); }

Vector unit(const Costate& p) { return p / p.norm(); }

}  // namespace

Multifunction::Multifunction(int dim, Family family) : dim_(dim), family_(std::move(family)) {
  if (dim_ < 1 || dim_ > kMaxDim) throw Error(ErrorCode::kInvalidArgument, "dimension must be in [1, 3]");
  std::visit(Overloaded{
                 [](const BallFamily& f) {
                   if (const auto* c = std::get_if<scalar_fn::Constant>(&f.radius.variant()); c && c->value < 0.0)
                     throw Error(ErrorCode::kInvalidArgument, "ball radius must be >= 0");
                 },
                 [](const PolytopeFamily& f) {
                   if (f.vertices.empty()) throw Error(ErrorCode::kInvalidArgument, "polytope needs at least one vertex");
                 },
                 [](const SegmentFamily& f) {
                   if (!f.direction.is_unit())
                     throw Error(ErrorCode::kInvalidArgument, "segment direction must be a unit vector field");
                   if (const auto* c = std::get_if<scalar_fn::Constant>(&f.scale.variant()); c && c->value < 0.0)
                     throw Error(ErrorCode::kInvalidArgument, "segment scale must be >= 0");
                 },
                 [](const DriftBallFamily& f) {
                   if (!(f.radius > 0.0)) throw Error(ErrorCode::kInvalidArgument, "drift-ball radius must be > 0");
                 },
             },
             family_);
}

std::string Multifunction::family_name() const {
  return std::visit(Overloaded{
                        [](const BallFamily&) { return std::string("ball"); },
                        [](const PolytopeFamily&) { return std::string("polytope"); },
                        [](const SegmentFamily&) { return std::string("segment"); },
                        [](const DriftBallFamily&) { return std::string("drift_ball"); },
                    },
                    family_);
}

double eval_H(const Multifunction& spec, const State& x, const Costate& p) {
  return std::visit(Overloaded{
                        [&](const BallFamily& f) { return p.dot(f.center.value(x)) + f.radius.value(x) * p.norm(); },
                        [&](const PolytopeFamily& f) {
                          double best = -std::numeric_limits<double>::infinity();
                          for (const auto& v : f.vertices) best = std::max(best, p.dot(v.value(x)));
                          return best;
                        },
                        [&](const SegmentFamily& f) { return f.scale.value(x) * std::abs(p.dot(f.direction.value(x))); },
                        [&](const DriftBallFamily& f) { return p.dot(f.drift.value(x)) + f.radius * p.norm(); },
                    },
                    spec.family());
}

Vector grad_p_H(const Multifunction& spec, const State& x, const Costate& p) {
  require_nonzero(p);
  return std::visit(Overloaded{
                        [&](const BallFamily& f) -> Vector { return f.center.value(x) + f.radius.value(x) * unit(p); },
                        [&](const PolytopeFamily& f) -> Vector {
                          const auto eval = evaluate_polytope(f, x, p);
                          return eval.vertices[eval.tied.front()];
                        },
                        [&](const SegmentFamily& f) -> Vector {
                          const Vector n = f.direction.value(x);
                          return segment_sign(n, p) * f.scale.value(x) * n;
                        },
                        [&](const DriftBallFamily& f) -> Vector { return f.drift.value(x) + f.radius * unit(p); },
                    },
                    spec.family());
}

std::vector<Vector> maximizer_set(const Multifunction& spec, const State& x, const Costate& p) {
  require_nonzero(p);
  return std::visit(Overloaded{
                        [&](const PolytopeFamily& f) {
                          const auto eval = evaluate_polytope(f, x, p);
                          std::vector<Vector> out;
                          for (auto i : eval.tied) out.push_back(eval.vertices[i]);
                          return out;
                        },
                        [&](const SegmentFamily& f) {
                          const Vector n = f.direction.value(x);
                          const double psi = f.scale.value(x);
                          if (segment_tied(n, p) && psi > 0.0) return std::vector<Vector>{psi * n, -psi * n};
                          return std::vector<Vector>{segment_sign(n, p) * psi * n};
                        },
                        [&](const auto&) { return std::vector<Vector>{grad_p_H(spec, x, p)}; },
                    },
                    spec.family());
}

Vector grad_p_H_toward(const Multifunction& spec, const State& x, const Costate& p, const Vector& preferred) {
  const auto candidates = maximizer_set(spec, x, p);
  const Vector* best = &candidates.front();
  for (const auto& c : candidates) {
    if ((c - preferred).squaredNorm() < (*best - preferred).squaredNorm()) best = &c;
  }
  return *best;
}

int selection_branch(const Multifunction& spec, const State& x, const Costate& p) {
  require_nonzero(p);
  return std::visit(Overloaded{
                        [&](const PolytopeFamily& f) { return static_cast<int>(evaluate_polytope(f, x, p).tied.front()); },
                        [&](const SegmentFamily& f) { return segment_sign(f.direction.value(x), p) > 0.0 ? 1 : -1; },
                        [](const auto&) { return 0; },
                    },
                    spec.family());
}

Vector grad_x_H_fd(const Multifunction& spec, const State& x, const Costate& p, double step) {
  const double h = step > 0.0 ? step : 1e-5 * (1.0 + x.norm());
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    State xp = x;
    State xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (eval_H(spec, xp, p) - eval_H(spec, xm, p)) / (2.0 * h);
  }
  return g;
}

Vector grad_x_H(const Multifunction& spec, const State& x, const Costate& p) {
  require_nonzero(p);
  auto analytic = std::visit(
      Overloaded{
          [&](const BallFamily& f) -> std::optional<Vector> {
            const auto jc = f.center.jacobian(x);
            const auto gr = f.radius.gradient(x);
            if (!jc || !gr) return std::nullopt;
            return Vector(jc->transpose() * p + p.norm() * *gr);
          },
          [&](const PolytopeFamily& f) -> std::optional<Vector> {
            const auto eval = evaluate_polytope(f, x, p);
            const auto jv = f.vertices[eval.tied.front()].jacobian(x);
            if (!jv) return std::nullopt;
            return Vector(jv->transpose() * p);
          },
          [&](const SegmentFamily& f) -> std::optional<Vector> {
            const auto jn = f.direction.jacobian(x);
            const auto gpsi = f.scale.gradient(x);
            if (!jn || !gpsi) return std::nullopt;
            const Vector n = f.direction.value(x);
            const double s = p.dot(n);
            return Vector(std::abs(s) * *gpsi + segment_sign(n, p) * f.scale.value(x) * (jn->transpose() * p));
          },
          [&](const DriftBallFamily& f) -> std::optional<Vector> {
            const auto jc = f.drift.jacobian(x);
            if (!jc) return std::nullopt;
            return Vector(jc->transpose() * p);
          },
      },
      spec.family());
  if (analytic) return *analytic;
  return grad_x_H_fd(spec, x, p);
}

double max_speed(const Multifunction& spec, const State& x) {
  return std::visit(Overloaded{
                        [&](const BallFamily& f) { return f.center.value(x).norm() + f.radius.value(x); },
                        [&](const PolytopeFamily& f) {
                          double best = 0.0;
                          for (const auto& v : f.vertices) best = std::max(best, v.value(x).norm());
                          return best;
                        },
                        [&](const SegmentFamily& f) { return f.scale.value(x); },
                        [&](const DriftBallFamily& f) { return f.drift.value(x).norm() + f.radius; },
                    },
                    spec.family());
}

bool contains_velocity(const Multifunction& spec, const State& x, const Vector& w, double tol) {
  return std::visit(
      Overloaded{
          [&](const BallFamily& f) { return (w - f.center.value(x)).norm() <= f.radius.value(x) + tol; },
          [&](const DriftBallFamily& f) { return (w - f.drift.value(x)).norm() <= f.radius + tol; },
          [&](const SegmentFamily& f) {
            const Vector n = f.direction.value(x);
            const double along = w.dot(n);
            return (w - along * n).norm() <= tol && std::abs(along) <= f.scale.value(x) + tol;
          },
          [&](const PolytopeFamily& f) {
            std::vector<Vector> verts;
            for (const auto& v : f.vertices) {
              verts.push_back(v.value(x));
              if ((verts.back() - w).norm() <= tol) return true;
            }
            // Support-function test over sampled directions and vertex-difference normals.
            auto supported = [&](const Vector& u) {
              if (u.norm() == 0.0) return true;
              double h = -std::numeric_limits<double>::infinity();
              for (const auto& v : verts) h = std::max(h, u.dot(v));
              return u.dot(w) <= h + tol * u.norm();
            };
            const auto n = w.size();
            if (n == 2) {
              for (int k = 0; k < 720; ++k) {
                const double a = 2.0 * std::numbers::pi * k / 720.0;
                if (!supported(make_vector({std::cos(a), std::sin(a)}))) return false;
              }
              for (std::size_t i = 0; i < verts.size(); ++i) {
                for (std::size_t j = i + 1; j < verts.size(); ++j) {
                  const Vector d = verts[j] - verts[i];
                  if (!supported(make_vector({-d[1], d[0]})) || !supported(make_vector({d[1], -d[0]}))) return false;
                }
              }
              return true;
            }
            for (Eigen::Index i = 0; i < n; ++i) {
              Vector u = Vector::Zero(n);
              u[i] = 1.0;
              if (!supported(u) || !supported(-u)) return false;
            }
            return true;
          },
      },
      spec.family());
}

int default_direction_count(int dim) {
  if (dim == 1) return 2;
  if (dim == 2) return 32;
  return 92;
}

namespace {

std::vector<Vector> unit_directions(int dim, int count) {
  std::vector<Vector> out;
  if (dim == 1) {
    out.push_back(make_vector({1.0}));
    out.push_back(make_vector({-1.0}));
    return out;
  }
  if (dim == 2) {
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
      const double a = 2.0 * std::numbers::pi * k / count;
      out.push_back(make_vector({std::cos(a), std::sin(a)}));
    }
    return out;
  }
  // Fibonacci sphere.
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < count; ++k) {
    const double z = 1.0 - 2.0 * (k + 0.5) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double a = golden * k;
    out.push_back(make_vector({r * std::cos(a), r * std::sin(a), z}));
  }
  return out;
}

std::vector<Vector> ball_velocities(const Vector& c, double r, int dim, int count) {
  auto dirs = unit_directions(dim, count);
  for (auto& d : dirs) d = c + r * d;
  return dirs;
}

}  // namespace

std::vector<Vector> discretize_velocities(const Multifunction& spec, const State& x, int directions) {
  const int dim = spec.dim();
  return std::visit(
      Overloaded{
          [&](const BallFamily& f) { return ball_velocities(f.center.value(x), f.radius.value(x), dim, directions); },
          [&](const DriftBallFamily& f) { return ball_velocities(f.drift.value(x), f.radius, dim, directions); },
          [&](const SegmentFamily& f) {
            const Vector v = f.scale.value(x) * f.direction.value(x);
            return std::vector<Vector>{v, -v, Vector::Zero(dim)};
          },
          [&](const PolytopeFamily& f) {
            std::vector<Vector> verts;
            for (const auto& v : f.vertices) verts.push_back(v.value(x));
            std::vector<Vector> out = verts;
            if (verts.size() < 2) return out;
            if (dim == 2) {
              Vector centroid = Vector::Zero(2);
              for (const auto& v : verts) centroid += v;
              centroid /= static_cast<double>(verts.size());
              auto ordered = verts;
              std::sort(ordered.begin(), ordered.end(), [&](const Vector& a, const Vector& b) {
                return std::atan2(a[1] - centroid[1], a[0] - centroid[0]) <
                       std::atan2(b[1] - centroid[1], b[0] - centroid[0]);
              });
              for (std::size_t i = 0; i < ordered.size(); ++i) {
                out.push_back(0.5 * (ordered[i] + ordered[(i + 1) % ordered.size()]));
              }
              return out;
            }
            for (std::size_t i = 0; i < verts.size(); ++i) {
              for (std::size_t j = i + 1; j < verts.size(); ++j) out.push_back(0.5 * (verts[i] + verts[j]));
            }
            return out;
          },
      },
      spec.family());
}

namespace {

Vector uniform_in_box(const Box& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector x(box.dim());
  for (int i = 0; i < box.dim(); ++i) x[i] = box.lower[i] + u(rng) * (box.upper[i] - box.lower[i]);
  return x;
}

Vector random_unit(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(dim);
  do {
    for (int i = 0; i < dim; ++i) v[i] = g(rng);
  } while (v.norm() < 1e-8);
  return v / v.norm();
}

// Least-squares slope of log(values) against log(1/scales).
double loglog_slope(const std::vector<double>& scales, const std::vector<double>& values) {
  double max_value = 0.0;
  for (double v : values) max_value = std::max(max_value, v);
  if (max_value <= 1e-12) return 0.0;
  const double floor = 1e-14 * max_value;
  const auto m = static_cast<double>(values.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double lx = std::log(1.0 / scales[k]);
    const double ly = std::log(std::max(values[k], floor));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = m * sxx - sx * sx;
  return denom > 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
}

// Differences at the level of floating-point noise carry no slope information
// and would otherwise dominate the finest scales.
double above_rounding(double difference, double scale) {
  return std::abs(difference) <= 64.0 * std::numeric_limits<double>::epsilon() * scale ? 0.0 : difference;
}

// One tracked difference-quotient probe.
enum class Probe { kLipschitz, kSemiconvexity, kGradP };

struct ProbeResult {
  double estimate = 0.0;
  double slope = 0.0;
};

struct Sampler {
  const Multifunction& spec;
  const Box& box;
  std::vector<Vector> centers;
  std::vector<Costate> costates;
  std::size_t evaluations = 0;

  // Pair endpoints centered at x along axis, shifted into the box.
  bool pair(const Vector& x, int axis, double delta, Vector& a, Vector& b, Vector& mid) const {
    if (box.upper[axis] - box.lower[axis] < delta) return false;
    double c = x[axis];
    c = std::clamp(c, box.lower[axis] + 0.5 * delta, box.upper[axis] - 0.5 * delta);
    mid = x;
    for (int i = 0; i < box.dim(); ++i) mid[i] = std::clamp(mid[i], box.lower[i], box.upper[i]);
    mid[axis] = c;
    a = mid;
    b = mid;
    a[axis] = c - 0.5 * delta;
    b[axis] = c + 0.5 * delta;
    return true;
  }

  double quotient(Probe probe, const Vector& x, double delta) {
    double worst = 0.0;
    Vector a, b, mid;
    for (int axis = 0; axis < box.dim(); ++axis) {
      if (!pair(x, axis, delta, a, b, mid)) continue;
      for (const auto& p : costates) {
        double q = 0.0;
        switch (probe) {
          case Probe::kLipschitz: {
            const double ha = eval_H(spec, a, p);
            const double hb = eval_H(spec, b, p);
            q = std::abs(above_rounding(ha - hb, std::abs(ha) + std::abs(hb))) / delta;
            evaluations += 2;
            break;
          }
          case Probe::kSemiconvexity: {
            const double ha = eval_H(spec, a, p);
            const double hb = eval_H(spec, b, p);
            const double hm = eval_H(spec, mid, p);
            // endpoint coordinates are rounded at eps |x|, which moves H by about |dH/dx| eps |x|
            const double slope_term = std::abs(ha - hb) / delta * (mid.lpNorm<Eigen::Infinity>() + delta);
            const double gap = above_rounding(0.5 * (ha + hb) - hm, std::abs(ha) + std::abs(hb) + std::abs(hm) + slope_term);
            q = std::max(0.0, -4.0 * gap / (delta * delta));
            evaluations += 3;
            break;
          }
          case Probe::kGradP: {
            const Vector ga = grad_p_H(spec, a, p);
            const Vector gb = grad_p_H(spec, b, p);
            q = above_rounding((ga - gb).norm(), ga.norm() + gb.norm()) / delta;
            evaluations += 2;
            break;
          }
        }
        if (!std::isfinite(q)) q = std::numeric_limits<double>::max();
        worst = std::max(worst, q);
      }
    }
    return worst;
  }

  ProbeResult run(Probe probe, const std::vector<double>& scales) {
    std::vector<double> worst_per_scale;
    Vector tracked = centers.front();
    bool have_tracked = false;
    for (double delta : scales) {
      double worst = -1.0;
      Vector worst_center = centers.front();
      auto consider = [&](const Vector& c) {
        const double q = quotient(probe, c, delta);
        if (q > worst) {
          worst = q;
          worst_center = c;
        }
      };
      for (const auto& c : centers) consider(c);
      if (have_tracked) {
        // Zoom stencil around the previous worst center.
        const int dim = box.dim();
        const int width = 9;
        int total = 1;
        for (int i = 0; i < dim; ++i) total *= width;
        for (int code = 0; code < total; ++code) {
          Vector c = tracked;
          int rest = code;
          for (int i = 0; i < dim; ++i) {
            const int j = rest % width - width / 2;
            rest /= width;
            c[i] += 0.5 * delta * j;
          }
          consider(c);
        }
      }
      tracked = worst_center;
      have_tracked = true;
      worst_per_scale.push_back(std::max(worst, 0.0));
    }
    ProbeResult r;
    for (double w : worst_per_scale) r.estimate = std::max(r.estimate, w);
    const std::size_t half = scales.size() / 2;
    const std::vector<double> fine_scales(scales.begin() + static_cast<std::ptrdiff_t>(half), scales.end());
    const std::vector<double> fine_values(worst_per_scale.begin() + static_cast<std::ptrdiff_t>(half),
                                          worst_per_scale.end());
    r.slope = loglog_slope(fine_scales, fine_values);
    return r;
  }
};

constexpr std::size_t kScaleCount = 14;

std::vector<double> dyadic_scales(const Box& box) {
  const double width = box.extent().minCoeff();
  std::vector<double> scales;
  for (std::size_t k = 0; k < kScaleCount; ++k) scales.push_back(0.25 * width * std::ldexp(1.0, -static_cast<int>(k)));
  return scales;
}

Sampler make_sampler(const Multifunction& spec, const Box& box, std::size_t sample_count, std::uint64_t seed) {
  if (!box.nondegenerate() || box.dim() != spec.dim())
    throw Error(ErrorCode::kInvalidArgument, "sampling box must be nondegenerate and match the dimension");
  if (sample_count < 100) throw Error(ErrorCode::kInvalidArgument, "sample count must be >= 100");
  std::mt19937_64 rng(seed);
  Sampler s{spec, box, {}, {}, 0};
  s.centers.reserve(sample_count);
  for (std::size_t i = 0; i < sample_count; ++i) s.centers.push_back(uniform_in_box(box, rng));
  for (int i = 0; i < spec.dim(); ++i) {
    Costate e = Costate::Zero(spec.dim());
    e[i] = 1.0;
    s.costates.push_back(e);
    s.costates.push_back(-e);
  }
  for (int k = 0; k < 8; ++k) s.costates.push_back(random_unit(spec.dim(), rng));
  return s;
}

}  // namespace

HypothesisReport check_hypotheses(const Multifunction& spec, const Box& box, std::size_t sample_count,
                                  std::uint64_t seed, double growth_slope_limit) {
  Sampler sampler = make_sampler(spec, box, sample_count, seed);
  const auto scales = dyadic_scales(box);

  HypothesisReport report;
  report.seed = seed;
  report.sample_count = sample_count;
  report.scale_count = scales.size();

  report.pass_F1 = true;
  for (const auto& x : sampler.centers) {
    const bool finite_values = std::visit(Overloaded{
                                              [&](const BallFamily& f) {
                                                const double r = f.radius.value(x);
                                                return std::isfinite(r) && r >= 0.0 && f.center.value(x).allFinite();
                                              },
                                              [&](const DriftBallFamily& f) { return f.drift.value(x).allFinite(); },
                                              [&](const SegmentFamily& f) {
                                                const double psi = f.scale.value(x);
                                                return std::isfinite(psi) && psi >= 0.0;
                                              },
                                              [&](const PolytopeFamily& f) {
                                                for (const auto& v : f.vertices)
                                                  if (!v.value(x).allFinite()) return false;
                                                return true;
                                              },
                                          },
                                          spec.family());
    if (!finite_values) {
      report.pass_F1 = false;
      break;
    }
  }

  const auto lip = sampler.run(Probe::kLipschitz, scales);
  report.lipschitz_F = lip.estimate;
  report.lipschitz_growth_slope = lip.slope;
  report.pass_F2 = std::isfinite(lip.estimate) && lip.slope < growth_slope_limit;

  const auto semi = sampler.run(Probe::kSemiconvexity, scales);
  report.semiconvexity_c0 = semi.estimate;
  report.semiconvexity_growth_slope = semi.slope;
  report.pass_H1 = std::isfinite(semi.estimate) && semi.slope < growth_slope_limit;

  const auto gp = sampler.run(Probe::kGradP, scales);
  report.grad_p_lipschitz_K1 = gp.estimate;
  report.grad_p_growth_slope = gp.slope;
  report.pass_H2 = std::isfinite(gp.estimate) && gp.slope < growth_slope_limit;

  // Growth bound max|F(x)| <= K2 (1 + |x|), checked against the bound implied by
  // Lipschitz continuity around the box center.
  const Vector x0 = 0.5 * (box.lower + box.upper);
  const double speed0 = max_speed(spec, x0);
  const double k_euclid = report.lipschitz_F * std::sqrt(static_cast<double>(spec.dim()));
  report.pass_growth = report.pass_F2;
  for (const auto& x : sampler.centers) {
    const double speed = max_speed(spec, x);
    report.growth_K2 = std::max(report.growth_K2, speed / (1.0 + x.norm()));
    if (speed > (speed0 + k_euclid * (x - x0).norm()) * (1.0 + 1e-9) + 1e-12) report.pass_growth = false;
  }
  report.evaluations = sampler.evaluations;
  return report;
}

double sampled_lipschitz_ratio(const Multifunction& spec, const Box& box, std::size_t sample_count,
                               std::uint64_t seed) {
  Sampler sampler = make_sampler(spec, box, sample_count, seed);
  return sampler.run(Probe::kLipschitz, dyadic_scales(box)).estimate;
}

}  // namespace mintime
