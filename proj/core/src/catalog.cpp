#include "mintime/catalog.hpp"

#include "mintime/error.hpp"
#include "overloaded.hpp"

#include <cmath>
#include <limits>

namespace mintime {

using detail::Overloaded;

double ScalarFunction::value(const Vector& x) const {
  return std::visit(Overloaded{
                        [](const scalar_fn::Constant& f) { return f.value; },
                        [&](const scalar_fn::SqrtAbsCoord& f) { return f.scale * std::sqrt(std::abs(x[f.axis])); },
                        [&](const scalar_fn::SquaredNorm& f) { return f.offset + f.scale * (x - f.center).squaredNorm(); },
                        [&](const scalar_fn::CoordSquared& f) { return x[f.axis] * x[f.axis]; },
                        [&](const scalar_fn::Dist2Points& f) {
                          double best = std::numeric_limits<double>::infinity();
                          for (const auto& s : f.points) best = std::min(best, (x - s).squaredNorm());
                          return best;
                        },
                    },
                    fn_);
}

std::optional<Vector> ScalarFunction::gradient(const Vector& x) const {
  const auto n = x.size();
  return std::visit(Overloaded{
                        [&](const scalar_fn::Constant&) -> std::optional<Vector> { return Vector::Zero(n); },
                        [](const scalar_fn::SqrtAbsCoord&) -> std::optional<Vector> { return std::nullopt; },
                        [&](const scalar_fn::SquaredNorm& f) -> std::optional<Vector> {
                          return Vector(2.0 * f.scale * (x - f.center));
                        },
                        [&](const scalar_fn::CoordSquared& f) -> std::optional<Vector> {
                          Vector g = Vector::Zero(n);
                          g[f.axis] = 2.0 * x[f.axis];
                          return g;
                        },
                        [&](const scalar_fn::Dist2Points& f) -> std::optional<Vector> {
                          // Gradient of the active (nearest) branch; the first point wins ties.
                          double best = std::numeric_limits<double>::infinity();
                          Vector g = Vector::Zero(n);
                          for (const auto& s : f.points) {
                            const double d2 = (x - s).squaredNorm();
                            if (d2 < best) {
                              best = d2;
                              g = 2.0 * (x - s);
                            }
                          }
                          return g;
                        },
                    },
                    fn_);
}

std::string ScalarFunction::id() const {
  return std::visit(Overloaded{
                        [](const scalar_fn::Constant&) { return std::string("constant"); },
                        [](const scalar_fn::SqrtAbsCoord&) { return std::string("sqrt_abs"); },
                        [](const scalar_fn::SquaredNorm&) { return std::string("squared_norm"); },
                        [](const scalar_fn::CoordSquared&) { return std::string("coord_squared"); },
                        [](const scalar_fn::Dist2Points&) { return std::string("dist2_points"); },
                    },
                    fn_);
}

Vector VectorFunction::value(const Vector& x) const {
  return std::visit(Overloaded{
                        [&](const vector_fn::Zero&) -> Vector { return Vector::Zero(x.size()); },
                        [](const vector_fn::Constant& f) -> Vector { return f.value; },
                        [&](const vector_fn::Affine& f) -> Vector { return f.matrix * x + f.offset; },
                        [&](const vector_fn::LevelSetNormal& f) -> Vector {
                          const Vector g = f.level_set.gradient(x);
                          const double norm = g.norm();
                          if (norm < 1e-14) throw Error(ErrorCode::kDegenerateGradient, "level-set normal at critical point");
                          return g / norm;
                        },
                    },
                    fn_);
}

std::optional<Matrix> VectorFunction::jacobian(const Vector& x) const {
  const auto n = x.size();
  return std::visit(Overloaded{
                        [&](const vector_fn::Zero&) -> std::optional<Matrix> { return Matrix::Zero(n, n); },
                        [&](const vector_fn::Constant&) -> std::optional<Matrix> { return Matrix::Zero(n, n); },
                        [](const vector_fn::Affine& f) -> std::optional<Matrix> { return f.matrix; },
                        [&](const vector_fn::LevelSetNormal& f) -> std::optional<Matrix> {
                          const Vector g = f.level_set.gradient(x);
                          const double norm = g.norm();
                          if (norm < 1e-14) throw Error(ErrorCode::kDegenerateGradient, "level-set normal at critical point");
                          const Vector u = g / norm;
                          const Matrix proj = Matrix::Identity(n, n) - u * u.transpose();
                          return Matrix(proj * f.level_set.hessian(x) / norm);
                        },
                    },
                    fn_);
}

std::string VectorFunction::id() const {
  return std::visit(Overloaded{
                        [](const vector_fn::Zero&) { return std::string("zero"); },
                        [](const vector_fn::Constant&) { return std::string("constant"); },
                        [](const vector_fn::Affine&) { return std::string("affine"); },
                        [](const vector_fn::LevelSetNormal&) { return std::string("target_normal"); },
                    },
                    fn_);
}

bool VectorFunction::is_unit() const {
  return std::visit(Overloaded{
                        [](const vector_fn::Zero&) { return false; },
                        [](const vector_fn::Constant& f) { return std::abs(f.value.norm() - 1.0) < 1e-12; },
                        [](const vector_fn::Affine&) { return false; },
                        [](const vector_fn::LevelSetNormal&) { return true; },
                    },
                    fn_);
}

}  // namespace mintime
