#include "mintime/level_set.hpp"

#include "mintime/error.hpp"
#include "overloaded.hpp"

namespace mintime {

using detail::Overloaded;

LevelSet::LevelSet(Variant shape) : shape_(std::move(shape)) {
  dim_ = std::visit(Overloaded{
                        [](const DiskLevelSet& s) {
                          if (!(s.radius > 0.0)) throw Error(ErrorCode::kInvalidArgument, "disk radius must be > 0");
                          return static_cast<int>(s.center.size());
                        },
                        [](const EllipseLevelSet& s) {
                          if (s.semi_axes.size() != s.center.size())
                            throw Error(ErrorCode::kInvalidArgument, "ellipse semi_axes dimension mismatch");
                          if ((s.semi_axes.array() <= 0.0).any())
                            throw Error(ErrorCode::kInvalidArgument, "ellipse semi_axes must be > 0");
                          return static_cast<int>(s.center.size());
                        },
                        [](const HalfSpaceLevelSet& s) {
                          if (s.normal.norm() == 0.0)
                            throw Error(ErrorCode::kInvalidArgument, "half-space normal must be nonzero");
                          return static_cast<int>(s.normal.size());
                        },
                    },
                    shape_);
  if (dim_ < 1 || dim_ > kMaxDim) throw Error(ErrorCode::kInvalidArgument, "level set dimension out of range");
}

std::string LevelSet::kind() const {
  return std::visit(Overloaded{
                        [](const DiskLevelSet&) { return std::string("disk"); },
                        [](const EllipseLevelSet&) { return std::string("ellipse"); },
                        [](const HalfSpaceLevelSet&) { return std::string("half_space"); },
                    },
                    shape_);
}

double LevelSet::value(const Vector& x) const {
  return std::visit(Overloaded{
                        [&](const DiskLevelSet& s) { return (x - s.center).squaredNorm() - s.radius * s.radius; },
                        [&](const EllipseLevelSet& s) {
                          return ((x - s.center).array() / s.semi_axes.array()).square().sum() - 1.0;
                        },
                        [&](const HalfSpaceLevelSet& s) { return s.normal.dot(x) - s.offset; },
                    },
                    shape_);
}

Vector LevelSet::gradient(const Vector& x) const {
  return std::visit(Overloaded{
                        [&](const DiskLevelSet& s) -> Vector { return 2.0 * (x - s.center); },
                        [&](const EllipseLevelSet& s) -> Vector {
                          return (2.0 * (x - s.center).array() / s.semi_axes.array().square()).matrix();
                        },
                        [&](const HalfSpaceLevelSet& s) -> Vector { return s.normal; },
                    },
                    shape_);
}

Matrix LevelSet::hessian(const Vector& /*x*/) const {
  const int n = dim_;
  return std::visit(Overloaded{
                        [&](const DiskLevelSet&) -> Matrix { return 2.0 * Matrix::Identity(n, n); },
                        [&](const EllipseLevelSet& s) -> Matrix {
                          Matrix h = Matrix::Zero(n, n);
                          for (int i = 0; i < n; ++i) h(i, i) = 2.0 / (s.semi_axes[i] * s.semi_axes[i]);
                          return h;
                        },
                        [&](const HalfSpaceLevelSet&) -> Matrix { return Matrix::Zero(n, n); },
                    },
                    shape_);
}

}  // namespace mintime
