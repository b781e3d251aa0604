#pragma once

// Catalog of the state-dependent functions that parametrize a multifunction.
// Each entry is a closed-form function of x with an analytic derivative where
// one exists; entries without one return std::nullopt and callers fall back
// to finite differences.

#include "mintime/level_set.hpp"
#include "mintime/types.hpp"

#include <optional>
#include <type_traits>
#include <string>
#include <variant>
#include <vector>

namespace mintime {

namespace scalar_fn {
struct Constant {
  double value = 0.0;
};
/// scale * sqrt(|x_axis|); not Lipschitz at x_axis = 0.
struct SqrtAbsCoord {
  int axis = 0;
  double scale = 1.0;
};
/// offset + scale * |x - center|^2
struct SquaredNorm {
  Vector center;
  double scale = 1.0;
  double offset = 0.0;
};
/// x_axis^2
struct CoordSquared {
  int axis = 0;
};
/// min_k |x - s_k|^2, the squared distance to a finite point set.
struct Dist2Points {
  std::vector<Vector> points;
};
}  // namespace scalar_fn

class ScalarFunction {
 public:
  using Variant = std::variant<scalar_fn::Constant, scalar_fn::SqrtAbsCoord, scalar_fn::SquaredNorm,
                               scalar_fn::CoordSquared, scalar_fn::Dist2Points>;

  ScalarFunction() = default;
  template <class T>
    requires std::is_constructible_v<Variant, T>
  ScalarFunction(T fn) : fn_(std::move(fn)) {}  // NOLINT(google-explicit-constructor)

  [[nodiscard]] double value(const Vector& x) const;
  [[nodiscard]] std::optional<Vector> gradient(const Vector& x) const;
  [[nodiscard]] std::string id() const;
  [[nodiscard]] const Variant& variant() const { return fn_; }

 private:
  Variant fn_{scalar_fn::Constant{}};
};

namespace vector_fn {
struct Zero {};
struct Constant {
  Vector value;
};
/// matrix * x + offset
struct Affine {
  Matrix matrix;
  Vector offset;
};
/// grad g(x) / |grad g(x)|, the unit outer normal field of a level set.
struct LevelSetNormal {
  LevelSet level_set;
};
}  // namespace vector_fn

class VectorFunction {
 public:
  using Variant = std::variant<vector_fn::Zero, vector_fn::Constant, vector_fn::Affine, vector_fn::LevelSetNormal>;

  VectorFunction() = default;
  template <class T>
    requires std::is_constructible_v<Variant, T>
  VectorFunction(T fn) : fn_(std::move(fn)) {}  // NOLINT(google-explicit-constructor)

  [[nodiscard]] Vector value(const Vector& x) const;
  /// Jacobian d value_i / d x_j.
  [[nodiscard]] std::optional<Matrix> jacobian(const Vector& x) const;
  [[nodiscard]] std::string id() const;
  [[nodiscard]] const Variant& variant() const { return fn_; }
  /// True when the function has unit norm everywhere.
  [[nodiscard]] bool is_unit() const;

 private:
  Variant fn_{vector_fn::Zero{}};
};

}  // namespace mintime
