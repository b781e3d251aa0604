#pragma once

#include "mintime/dynamics.hpp"
#include "mintime/target.hpp"
#include "mintime/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace mintime {

/// Uniform tensor grid; node indices are lexicographic with the first axis slowest.
class Grid {
 public:
  Grid() = default;
  Grid(Box bounds, double h);

  [[nodiscard]] int dim() const { return bounds_.dim(); }
  [[nodiscard]] const Box& bounds() const { return bounds_; }
  [[nodiscard]] const Vector& spacing() const { return spacing_; }
  [[nodiscard]] double min_spacing() const { return spacing_.minCoeff(); }
  [[nodiscard]] int count(int axis) const { return counts_[static_cast<std::size_t>(axis)]; }
  [[nodiscard]] std::size_t size() const { return size_; }

  [[nodiscard]] std::size_t index(const std::array<int, kMaxDim>& multi) const;
  [[nodiscard]] std::array<int, kMaxDim> multi_index(std::size_t index) const;
  [[nodiscard]] State node(std::size_t index) const;
  [[nodiscard]] std::size_t stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }

  /// Cell containing x and the fractional offsets within it; false when x is outside the box.
  bool locate(const State& x, std::array<int, kMaxDim>& cell, std::array<double, kMaxDim>& frac) const;

 private:
  Box bounds_;
  Vector spacing_;
  std::array<int, kMaxDim> counts_{1, 1, 1};
  std::array<std::size_t, kMaxDim> strides_{1, 1, 1};
  std::size_t size_ = 0;
};

struct SolveOptions {
  double tau = 0.0;          // 0 selects 0.5 h / max-speed
  double tol = 1e-9;         // sup-norm update threshold
  int max_iterations = 20000;
  double T_max = 0.0;        // 0 selects 2 diam / min positive max-speed
  int directions = 0;        // Ball directions, 0 selects default_direction_count
  bool throw_on_nonconvergence = true;
};

class ValueField {
 public:
  Grid grid;
  std::vector<double> T;
  std::vector<std::uint8_t> reachable;
  std::vector<std::uint8_t> in_target;
  double T_max = 0.0;
  double tau = 0.0;
  double tol = 0.0;
  double max_speed = 0.0;
  int directions = 0;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  std::size_t node_updates = 0;

  /// Multilinear interpolation of T; T_max outside the box.
  [[nodiscard]] double interpolate(const State& x) const;
  /// Interpolated T when x is inside the box and every stencil node with nonzero weight is reachable.
  [[nodiscard]] std::optional<double> value_at(const State& x) const;
};

/// Jacobi semi-Lagrangian iteration for T(x) = min_v { tau + T(x + tau v) }.
/// Only nodes whose 3^n neighborhood changed in the previous sweep are revisited;
/// the others would reproduce their previous value exactly.
ValueField solve(const Multifunction& spec, const TargetSet& target, const Grid& grid, const SolveOptions& options = {});

/// Largest max_{w in F(x)} |w| over the grid nodes, and the smallest positive one.
std::pair<double, double> speed_range(const Multifunction& spec, const Grid& grid);

struct Backup {
  double value = 0.0;
  Vector velocity;
  bool valid = false;
};

/// One dynamic-programming backup at an arbitrary point using the field's tau and control set.
Backup bellman_backup(const ValueField& vf, const Multifunction& spec, const State& x);

struct GradientField {
  std::vector<Vector> gradient;
  std::vector<std::uint8_t> valid;
};

/// Central differences at reachable off-target nodes whose full stencil is reachable and inside the grid.
GradientField gradient_field(const ValueField& vf);

/// Nodes with T <= t.
std::vector<std::size_t> reachable_set_slice(const ValueField& vf, double t);

}  // namespace mintime
