#pragma once

#include "mintime/types.hpp"

#include <string>
#include <variant>

namespace mintime {

/// g(x) = |x - center|^2 - radius^2 (disk in 2D, ball in 3D, interval in 1D).
struct DiskLevelSet {
  Vector center;
  double radius = 1.0;
};

/// g(x) = sum_i ((x_i - c_i) / a_i)^2 - 1.
struct EllipseLevelSet {
  Vector center;
  Vector semi_axes;
};

/// g(x) = <normal, x> - offset.
struct HalfSpaceLevelSet {
  Vector normal;
  double offset = 0.0;
};

/// Smooth scalar g with analytic gradient and Hessian; the target is {g <= 0}.
class LevelSet {
 public:
  using Variant = std::variant<DiskLevelSet, EllipseLevelSet, HalfSpaceLevelSet>;

  LevelSet() = default;
  explicit LevelSet(Variant shape);

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] const Variant& shape() const { return shape_; }
  [[nodiscard]] std::string kind() const;

  [[nodiscard]] double value(const Vector& x) const;
  [[nodiscard]] Vector gradient(const Vector& x) const;
  [[nodiscard]] Matrix hessian(const Vector& x) const;

 private:
  Variant shape_{DiskLevelSet{}};
  int dim_ = 0;
};

}  // namespace mintime
