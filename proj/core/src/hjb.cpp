#include "mintime/hjb.hpp"

#include "mintime/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mintime {

Grid::Grid(Box bounds, double h) : bounds_(std::move(bounds)) {
  if (!bounds_.nondegenerate()) throw Error(ErrorCode::kInvalidArgument, "grid bounds must be nondegenerate");
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorCode::kInvalidArgument, "grid spacing h must be > 0");
  const int n = bounds_.dim();
  spacing_ = Vector(n);
  size_ = 1;
  for (int i = 0; i < n; ++i) {
    const double extent = bounds_.upper[i] - bounds_.lower[i];
    const double counted = std::round(extent / h) + 1.0;
    if (counted > 1e7) throw Error(ErrorCode::kInvalidArgument, "grid too large");
    const int c = static_cast<int>(counted);
    if (c < 16) throw Error(ErrorCode::kInvalidArgument, "grid needs at least 16 nodes per axis");
    counts_[static_cast<std::size_t>(i)] = c;
    spacing_[i] = extent / (c - 1);
    size_ *= static_cast<std::size_t>(c);
  }
  std::size_t s = 1;
  for (int i = n - 1; i >= 0; --i) {
    strides_[static_cast<std::size_t>(i)] = s;
    s *= static_cast<std::size_t>(counts_[static_cast<std::size_t>(i)]);
  }
}

std::size_t Grid::index(const std::array<int, kMaxDim>& multi) const {
  std::size_t idx = 0;
  for (int i = 0; i < dim(); ++i) idx += static_cast<std::size_t>(multi[static_cast<std::size_t>(i)]) * stride(i);
  return idx;
}

std::array<int, kMaxDim> Grid::multi_index(std::size_t index) const {
  std::array<int, kMaxDim> m{0, 0, 0};
  for (int i = 0; i < dim(); ++i) {
    m[static_cast<std::size_t>(i)] = static_cast<int>(index / stride(i));
    index %= stride(i);
  }
  return m;
}

State Grid::node(std::size_t index) const {
  const auto m = multi_index(index);
  State x(dim());
  for (int i = 0; i < dim(); ++i) {
    const int k = m[static_cast<std::size_t>(i)];
    x[i] = k == count(i) - 1 ? bounds_.upper[i] : bounds_.lower[i] + k * spacing_[i];
  }
  return x;
}

bool Grid::locate(const State& x, std::array<int, kMaxDim>& cell, std::array<double, kMaxDim>& frac) const {
  for (int i = 0; i < dim(); ++i) {
    const double s = (x[i] - bounds_.lower[i]) / spacing_[i];
    const double last = count(i) - 1;
    if (!(s >= -1e-12) || !(s <= last + 1e-12)) return false;
    int k = static_cast<int>(std::floor(s));
    k = std::clamp(k, 0, count(i) - 2);
    cell[static_cast<std::size_t>(i)] = k;
    frac[static_cast<std::size_t>(i)] = std::clamp(s - k, 0.0, 1.0);
  }
  return true;
}

namespace {

// Multilinear interpolation; returns false outside the grid. `blocked` is set when
// a corner with nonzero weight fails `usable`.
template <class Usable>
bool interpolate_values(const Grid& grid, const std::vector<double>& values, const State& x, double& out,
                        Usable&& usable, bool& blocked) {
  std::array<int, kMaxDim> cell{};
  std::array<double, kMaxDim> frac{};
  if (!grid.locate(x, cell, frac)) return false;
  const int n = grid.dim();
  std::size_t base = grid.index(cell);
  double sum = 0.0;
  blocked = false;
  for (int corner = 0; corner < (1 << n); ++corner) {
    double w = 1.0;
    std::size_t idx = base;
    for (int i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      if ((corner >> i) & 1) {
        w *= frac[ui];
        idx += grid.stride(i);
      } else {
        w *= 1.0 - frac[ui];
      }
    }
    if (w == 0.0) continue;
    if (!usable(idx)) blocked = true;
    sum += w * values[idx];
  }
  out = sum;
  return true;
}

}  // namespace

double ValueField::interpolate(const State& x) const {
  double v = T_max;
  bool blocked = false;
  if (!interpolate_values(grid, T, x, v, [](std::size_t) { return true; }, blocked)) return T_max;
  return std::min(v, T_max);
}

std::optional<double> ValueField::value_at(const State& x) const {
  double v = T_max;
  bool blocked = false;
  if (!interpolate_values(grid, T, x, v, [&](std::size_t i) { return reachable[i] != 0; }, blocked)) return std::nullopt;
  if (blocked) return std::nullopt;
  return v;
}

std::pair<double, double> speed_range(const Multifunction& spec, const Grid& grid) {
  double hi = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double s = max_speed(spec, grid.node(i));
    hi = std::max(hi, s);
    if (s > 0.0) lo = std::min(lo, s);
  }
  return {hi, lo};
}

ValueField solve(const Multifunction& spec, const TargetSet& target, const Grid& grid, const SolveOptions& options) {
  const int n = grid.dim();
  if (spec.dim() != n || target.dim() != n) throw Error(ErrorCode::kInvalidArgument, "dimension mismatch in solve");
  const auto [speed_hi, speed_lo] = speed_range(spec, grid);
  if (!(speed_hi > 0.0)) throw Error(ErrorCode::kInvalidArgument, "F(x) = {0} on the whole grid");
  const double h = grid.min_spacing();

  ValueField vf;
  vf.grid = grid;
  vf.max_speed = speed_hi;
  vf.tol = options.tol;
  vf.directions = options.directions > 0 ? options.directions : default_direction_count(n);
  vf.tau = options.tau > 0.0 ? options.tau : 0.5 * h / speed_hi;
  if (vf.tau > h / speed_hi * (1.0 + 1e-12))
    throw Error(ErrorCode::kCflViolation, "tau = " + std::to_string(vf.tau) + " exceeds h / max-speed = " +
                                              std::to_string(h / speed_hi));
  vf.T_max = options.T_max > 0.0 ? options.T_max : 2.0 * grid.bounds().diameter() / speed_lo;

  const std::size_t size = grid.size();
  vf.T.assign(size, vf.T_max);
  vf.in_target.assign(size, 0);
  for (std::size_t i = 0; i < size; ++i) {
    if (target.g(grid.node(i)) <= 0.0) {
      vf.in_target[i] = 1;
      vf.T[i] = 0.0;
    }
  }

  // Foot points of every (node, control) pair, located once.
  struct Foot {
    std::size_t base;
    std::array<double, kMaxDim> frac;
  };
  std::vector<std::size_t> offsets(size + 1, 0);
  std::vector<Foot> feet;
  for (std::size_t i = 0; i < size; ++i) {
    offsets[i] = feet.size();
    if (vf.in_target[i]) continue;
    const State x = grid.node(i);
    for (const auto& v : discretize_velocities(spec, x, vf.directions)) {
      std::array<int, kMaxDim> cell{};
      Foot f{};
      if (!grid.locate(x + vf.tau * v, cell, f.frac)) continue;  // leaves the box: contributes T_max
      f.base = grid.index(cell);
      feet.push_back(f);
    }
  }
  offsets[size] = feet.size();

  std::vector<std::ptrdiff_t> corner_offsets;
  for (int corner = 0; corner < (1 << n); ++corner) {
    std::ptrdiff_t off = 0;
    for (int i = 0; i < n; ++i)
      if ((corner >> i) & 1) off += static_cast<std::ptrdiff_t>(grid.stride(i));
    corner_offsets.push_back(off);
  }
  auto interp = [&](const std::vector<double>& values, const Foot& f) {
    double sum = 0.0;
    for (int corner = 0; corner < (1 << n); ++corner) {
      double w = 1.0;
      for (int i = 0; i < n; ++i) {
        const double fr = f.frac[static_cast<std::size_t>(i)];
        w *= ((corner >> i) & 1) ? fr : 1.0 - fr;
      }
      if (w == 0.0) continue;
      const double v = values[f.base + static_cast<std::size_t>(corner_offsets[static_cast<std::size_t>(corner)])];
      sum += w * v;
    }
    return sum;
  };

  std::vector<std::uint8_t> changed(size, 0);
  std::vector<std::uint8_t> dirty(size, 0);
  for (std::size_t i = 0; i < size; ++i) dirty[i] = vf.in_target[i] ? 0 : 1;
  std::vector<double> next = vf.T;

  for (vf.iterations = 0; vf.iterations < options.max_iterations;) {
    ++vf.iterations;
    double residual = 0.0;
    std::fill(changed.begin(), changed.end(), 0);
    for (std::size_t i = 0; i < size; ++i) {
      if (!dirty[i]) continue;
      ++vf.node_updates;
      double best = vf.T_max;
      for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) best = std::min(best, vf.tau + interp(vf.T, feet[k]));
      next[i] = best;
      if (best != vf.T[i]) {
        changed[i] = 1;
        residual = std::max(residual, std::abs(best - vf.T[i]));
      }
    }
    vf.T.swap(next);
    next = vf.T;
    vf.residual = residual;
    if (residual <= options.tol) {
      vf.converged = true;
      break;
    }
    // Next sweep touches the 3^n neighborhoods of changed nodes only.
    std::fill(dirty.begin(), dirty.end(), 0);
    for (std::size_t i = 0; i < size; ++i) {
      if (!changed[i]) continue;
      const auto m = grid.multi_index(i);
      std::array<int, kMaxDim> lo{}, hi{};
      for (int a = 0; a < kMaxDim; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        lo[ua] = a < n ? std::max(m[ua] - 1, 0) : 0;
        hi[ua] = a < n ? std::min(m[ua] + 1, grid.count(a) - 1) : 0;
      }
      for (int a = lo[0]; a <= hi[0]; ++a)
        for (int b = lo[1]; b <= hi[1]; ++b)
          for (int c = lo[2]; c <= hi[2]; ++c) {
            const std::size_t j = grid.index({a, b, c});
            if (!vf.in_target[j]) dirty[j] = 1;
          }
    }
  }

  vf.reachable.assign(size, 0);
  for (std::size_t i = 0; i < size; ++i) vf.reachable[i] = vf.T[i] < vf.T_max - options.tol ? 1 : 0;
  if (!vf.converged && options.throw_on_nonconvergence)
    throw Error(ErrorCode::kNonConvergence, "HJB iteration stopped after " + std::to_string(vf.iterations) +
                                                " sweeps with residual " + std::to_string(vf.residual));
  return vf;
}

Backup bellman_backup(const ValueField& vf, const Multifunction& spec, const State& x) {
  Backup b;
  b.value = vf.T_max;
  for (const auto& v : discretize_velocities(spec, x, vf.directions)) {
    const State foot = x + vf.tau * v;
    if (!vf.grid.bounds().contains(foot)) continue;
    const double value = vf.tau + vf.interpolate(foot);
    if (value < b.value) {
      b.value = value;
      b.velocity = v;
      b.valid = true;
    }
  }
  return b;
}

GradientField gradient_field(const ValueField& vf) {
  const Grid& grid = vf.grid;
  const int n = grid.dim();
  GradientField gf;
  gf.gradient.assign(grid.size(), Vector::Zero(n));
  gf.valid.assign(grid.size(), 0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!vf.reachable[i] || vf.in_target[i]) continue;
    const auto m = grid.multi_index(i);
    bool ok = true;
    Vector g(n);
    for (int a = 0; a < n && ok; ++a) {
      const int k = m[static_cast<std::size_t>(a)];
      if (k == 0 || k == grid.count(a) - 1) {
        ok = false;
        break;
      }
      const std::size_t plus = i + grid.stride(a);
      const std::size_t minus = i - grid.stride(a);
      if (!vf.reachable[plus] || !vf.reachable[minus]) {
        ok = false;
        break;
      }
      g[a] = (vf.T[plus] - vf.T[minus]) / (2.0 * grid.spacing()[a]);
    }
    if (!ok) continue;
    gf.gradient[i] = g;
    gf.valid[i] = 1;
  }
  return gf;
}

std::vector<std::size_t> reachable_set_slice(const ValueField& vf, double t) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < vf.T.size(); ++i)
    if (vf.T[i] <= t && vf.reachable[i]) out.push_back(i);
  return out;
}

}  // namespace mintime
