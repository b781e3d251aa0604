#pragma once

#include "mintime/dynamics.hpp"
#include "mintime/target.hpp"

#include <random>

namespace mintime::testing {

inline Box square(double half) {
  return Box{make_vector({-half, -half}), make_vector({half, half})};
}

inline Multifunction eikonal(int dim = 2) {
  return Multifunction(dim, BallFamily{vector_fn::Zero{}, scalar_fn::Constant{1.0}});
}

inline Multifunction drift_ball(double cx, double cy, double r) {
  return Multifunction(2, DriftBallFamily{vector_fn::Constant{make_vector({cx, cy})}, r});
}

// c(x) = (x2, 0), the shear drift.
inline Multifunction shear_drift_ball(double r = 1.0) {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 1) = 1.0;
  return Multifunction(2, DriftBallFamily{vector_fn::Affine{a, Vector::Zero(2)}, r});
}

inline Multifunction segment(Vector n, ScalarFunction psi) {
  return Multifunction(static_cast<int>(n.size()), SegmentFamily{vector_fn::Constant{std::move(n)}, std::move(psi)});
}

inline LevelSet unit_disk() { return LevelSet(DiskLevelSet{make_vector({0.0, 0.0}), 1.0}); }

inline TargetSet disk_target(double radius = 1.0) {
  return TargetSet(LevelSet(DiskLevelSet{make_vector({0.0, 0.0}), radius}));
}

// Segment dynamics along the target normal with psi = squared distance to {(1,0), (0,1)}.
inline Multifunction segment_example() {
  return Multifunction(2, SegmentFamily{vector_fn::LevelSetNormal{unit_disk()},
                                        scalar_fn::Dist2Points{{make_vector({1.0, 0.0}), make_vector({0.0, 1.0})}}});
}

// H = |p1| on the disk: T = |x1| - sqrt(1 - x2^2) on the strip |x2| <= 1.
inline Multifunction segment_shadow() { return segment(make_vector({1.0, 0.0}), scalar_fn::Constant{1.0}); }

// Ball(0, r) with r = 0.15 + |x - (-1.8, 0)|^2, slow near (-1.8, 0).
inline Multifunction slow_ball() {
  return Multifunction(2, BallFamily{vector_fn::Zero{}, scalar_fn::SquaredNorm{make_vector({-1.8, 0.0}), 1.0, 0.15}});
}

inline Vector random_vector(std::mt19937_64& rng, int dim, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = u(rng);
  return v;
}

}  // namespace mintime::testing
