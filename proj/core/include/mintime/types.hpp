#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace mintime {

/// Largest supported state dimension. Vectors never allocate on the heap.
inline constexpr int kMaxDim = 3;

using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

/// Point of the state space.
using State = Vector;
/// Adjoint (costate) vector paired with a State.
using Costate = Vector;

/// Axis-aligned box used for sampling and for grids.
struct Box {
  Vector lower;
  Vector upper;

  [[nodiscard]] int dim() const { return static_cast<int>(lower.size()); }
  [[nodiscard]] Vector extent() const { return upper - lower; }
  [[nodiscard]] double diameter() const { return (upper - lower).norm(); }
  [[nodiscard]] bool contains(const Vector& x) const {
    for (int i = 0; i < dim(); ++i) {
      if (x[i] < lower[i] || x[i] > upper[i]) return false;
    }
    return true;
  }
  [[nodiscard]] bool nondegenerate() const {
    if (lower.size() != upper.size() || lower.size() == 0) return false;
    for (int i = 0; i < dim(); ++i) {
      if (!(upper[i] > lower[i])) return false;
    }
    return true;
  }
};

inline Vector make_vector(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double value : values) v[i++] = value;
  return v;
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace mintime
