#pragma once

#include "mintime/dynamics.hpp"
#include "mintime/level_set.hpp"
#include "mintime/types.hpp"

#include <optional>
#include <vector>

namespace mintime {

inline constexpr double kBoundaryTolerance = 1e-8;
inline constexpr double kSigmaTolerance = 1e-6;
inline constexpr double kAngleTolerance = 1e-4;

/// Closed target {g <= 0} with a chart of its boundary.
///
/// Chart coordinates: n = 2 closed curves use one periodic angle, n = 3 closed
/// surfaces use (polar, azimuth) with the azimuth periodic, hyperplanes use
/// tangent-coordinate offsets from the point closest to the origin, clipped to
/// the chart box. n = 1 has an empty chart.
class TargetSet {
 public:
  explicit TargetSet(LevelSet g, std::optional<Box> chart_box = std::nullopt);

  [[nodiscard]] int dim() const { return g_.dim(); }
  [[nodiscard]] const LevelSet& level_set() const { return g_; }
  [[nodiscard]] const std::optional<Box>& chart_box() const { return chart_box_; }

  [[nodiscard]] double g(const State& x) const { return g_.value(x); }
  [[nodiscard]] Vector grad_g(const State& x) const { return g_.gradient(x); }
  [[nodiscard]] Matrix hessian_g(const State& x) const { return g_.hessian(x); }
  [[nodiscard]] bool contains(const State& x) const { return g_.value(x) <= 0.0; }

  [[nodiscard]] int chart_dim() const { return dim() - 1; }
  [[nodiscard]] bool chart_periodic(int k) const;
  [[nodiscard]] double chart_lower(int k) const;
  [[nodiscard]] double chart_upper(int k) const;
  [[nodiscard]] State chart_point(const Vector& u) const;
  [[nodiscard]] bool closed_boundary() const;

 private:
  LevelSet g_;
  std::optional<Box> chart_box_;
  Vector plane_base_;
  Matrix plane_tangents_;  // columns span the hyperplane
  Vector plane_lower_;
  Vector plane_upper_;
};

struct BoundaryPoint {
  State x_bar;
  Costate xi;        // unit inner normal
  double h_value = 0.0;
  Vector param;      // chart coordinates, empty when n = 1
};

/// -grad g / |grad g| at a boundary point.
Costate inner_normal(const TargetSet& target, const State& x_bar);

/// Newton iteration x <- x - g grad g / |grad g|^2 until |g| <= kBoundaryTolerance.
State project_to_boundary(const TargetSet& target, const State& x, int max_iterations = 100);

/// Boundary point, inner normal and H(x_bar, xi) at chart coordinates u.
BoundaryPoint boundary_point_at(const TargetSet& target, const Multifunction& spec, const Vector& u);

/// Quasi-uniform boundary samples: uniform angles 2 pi k / count on closed
/// curves, a Fibonacci lattice on closed surfaces, cell centers on hyperplanes.
std::vector<BoundaryPoint> sample_boundary(const TargetSet& target, const Multifunction& spec, int count);

enum class SigmaMode {
  kStrict,      // require H(x_bar, xi) >= 0 and locate zeros as minima
  kSignChange,  // also locate sign changes; for dynamics where 0 may leave F
};

/// Boundary points where H(x_bar, xi) vanishes relative to sigma_tol * max |H|.
///
/// The boundary is scanned at `resolution` chart points per row (n = 3 scans
/// resolution / 2 rows along each chart coordinate). Sampled local minima of |H| are refined by
/// golden-section search and sign changes by bisection.
std::vector<BoundaryPoint> find_sigma_set(const TargetSet& target, const Multifunction& spec, int resolution,
                                          SigmaMode mode = SigmaMode::kStrict,
                                          double sigma_tol = kSigmaTolerance);

/// Absolute Sigma threshold sigma_tol * max |H(x_bar, xi)| over `resolution` boundary samples.
double sigma_threshold(const TargetSet& target, const Multifunction& spec, int resolution,
                       double sigma_tol = kSigmaTolerance);

struct NondegeneracyEntry {
  State x_bar;
  Vector w;
  double angle = 0.0;  // radians between w and the line spanned by grad g
  bool in_sigma = false;
  bool violation = false;
};

struct NondegeneracyReport {
  std::vector<NondegeneracyEntry> entries;
  std::size_t violations = 0;
  std::size_t skipped = 0;
  double min_angle = 0.0;
  double angle_tolerance = kAngleTolerance;
};

/// For each point off Sigma, w = grad_x H(x, -grad g) - hess g * grad_p H(x, -grad g)
/// compared against grad g; parallel (or zero) w is a violation.
NondegeneracyReport check_nondegeneracy(const TargetSet& target, const Multifunction& spec,
                                        const std::vector<BoundaryPoint>& points, double sigma_threshold,
                                        double angle_tol = kAngleTolerance);

/// |hess g|_2 / (2 |grad g(x_bar)|), the proximal-normal constant of a C^{1,1} boundary.
double proximal_normal_sigma(const TargetSet& target, const State& x_bar);

}  // namespace mintime
