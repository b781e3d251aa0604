#pragma once

#include "mintime/catalog.hpp"
#include "mintime/types.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace mintime {

/// F(x) = c(x) + r(x) B.
struct BallFamily {
  VectorFunction center;
  ScalarFunction radius;
};

/// F(x) = co{v_1(x), ..., v_m(x)}.
struct PolytopeFamily {
  std::vector<VectorFunction> vertices;
};

/// F(x) = psi(x) [-n(x), n(x)] with |n(x)| = 1.
struct SegmentFamily {
  VectorFunction direction;
  ScalarFunction scale;
};

/// F(x) = c(x) + r B with a fixed radius r > 0.
struct DriftBallFamily {
  VectorFunction drift;
  double radius = 1.0;
};

/// A differential inclusion x' in F(x), represented through its support function H.
class Multifunction {
 public:
  using Family = std::variant<BallFamily, PolytopeFamily, SegmentFamily, DriftBallFamily>;

  Multifunction(int dim, Family family);

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] const Family& family() const { return family_; }
  [[nodiscard]] std::string family_name() const;

 private:
  int dim_;
  Family family_;
};

/// Threshold below which a costate is treated as zero.
inline constexpr double kZeroCostateNorm = 1e-300;

/// H(x, p) = sup_{v in F(x)} <p, v>.  H(x, 0) = 0 for every family.
double eval_H(const Multifunction& spec, const State& x, const Costate& p);

/// The maximizer F_p(x) in F(x). Ties resolve to the lexicographically smallest
/// vertex (Polytope) or to +psi(x) n(x) when <p, n(x)> = 0 (Segment).
/// Throws ErrorCode::kZeroCostate when p = 0.
Vector grad_p_H(const Multifunction& spec, const State& x, const Costate& p);

/// Like grad_p_H, but among tied maximizers returns the one closest to `preferred`.
Vector grad_p_H_toward(const Multifunction& spec, const State& x, const Costate& p, const Vector& preferred);

/// Every extreme maximizer of <p, .> over F(x); a single element away from ties.
std::vector<Vector> maximizer_set(const Multifunction& spec, const State& x, const Costate& p);

/// Identifier of the selection branch used by grad_p_H; changes mark non-smooth crossings.
int selection_branch(const Multifunction& spec, const State& x, const Costate& p);

/// Analytic selection of the x-gradient of H, falling back to central differences
/// for catalog entries without a closed-form derivative.
Vector grad_x_H(const Multifunction& spec, const State& x, const Costate& p);

/// Central finite differences of x -> H(x, p) with step 1e-5 * (1 + |x|) unless given.
Vector grad_x_H_fd(const Multifunction& spec, const State& x, const Costate& p, double step = 0.0);

/// max_{w in F(x)} |w|.
double max_speed(const Multifunction& spec, const State& x);

/// True when w in F(x) up to `tol`.
bool contains_velocity(const Multifunction& spec, const State& x, const Vector& w, double tol = 1e-9);

/// Finite subset of the boundary of F(x) used by the grid solver: `directions`
/// points for Ball families (n = 2 uses a uniform angle set, n = 3 a Fibonacci
/// sphere), vertices plus edge midpoints for polytopes, {+psi n, -psi n, 0} for segments.
std::vector<Vector> discretize_velocities(const Multifunction& spec, const State& x, int directions);

/// Default number of Ball directions: 32 in 2D and 92 in 3D.
int default_direction_count(int dim);

struct HypothesisReport {
  double lipschitz_F = 0.0;         // K
  double semiconvexity_c0 = 0.0;    // c0
  double grad_p_lipschitz_K1 = 0.0; // K1
  double growth_K2 = 0.0;           // K2
  double lipschitz_growth_slope = 0.0;
  double semiconvexity_growth_slope = 0.0;
  double grad_p_growth_slope = 0.0;
  bool pass_F1 = false;  // values nonempty, convex, compact
  bool pass_F2 = false;  // F Lipschitz
  bool pass_H1 = false;  // semiconvexity in x
  bool pass_H2 = false;  // grad_p H Lipschitz in x
  bool pass_growth = false;
  std::size_t sample_count = 0;
  std::size_t evaluations = 0;
  std::size_t scale_count = 0;
  std::uint64_t seed = 0;

  [[nodiscard]] bool pass_F() const { return pass_F1 && pass_F2; }
  [[nodiscard]] bool pass_H() const { return pass_H1 && pass_H2; }
};

/// Sampled (not certified) check of hypotheses (F) and (H) on `box`.
///
/// Constants are difference quotients over coordinate-aligned pairs at dyadic
/// scales; the pair center with the worst quotient is tracked from one scale to
/// the next so concentrated singularities are followed. A constant is declared
/// unbounded when the log-log slope of the worst quotient against 1/scale
/// exceeds `growth_slope_limit` over the finest half of the scales.
HypothesisReport check_hypotheses(const Multifunction& spec, const Box& box, std::size_t sample_count,
                                  std::uint64_t seed = 20240611, double growth_slope_limit = 0.2);

/// The sampled ratio |H(x1,p) - H(x2,p)| / (|p| |x1 - x2|) over a fresh sample set
/// drawn with the same scheme; used to re-verify a reported K.
double sampled_lipschitz_ratio(const Multifunction& spec, const Box& box, std::size_t sample_count,
                               std::uint64_t seed);

}  // namespace mintime
