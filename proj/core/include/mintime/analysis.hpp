#pragma once

#include "mintime/characteristics.hpp"
#include "mintime/dynamics.hpp"
#include "mintime/hjb.hpp"
#include "mintime/target.hpp"
#include "mintime/types.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace mintime {

/// Point oracle for T. nullopt marks points where T is +inf or unknown.
struct TimeFunction {
  std::function<std::optional<double>(const State&)> value;
  std::function<std::optional<Vector>(const State&)> gradient;  // may be empty
  double resolution = 0.0;  // length scale below which the oracle is piecewise linear
};

/// value_at of the field; gradient interpolated from the central-difference field.
TimeFunction time_function(const ValueField& vf);

// ---------------------------------------------------------------- certificates

enum class CertificateKind { kProximal, kHorizontal };
enum class CertificateStatus { kCertified, kCapExceeded, kNoSamples };

std::string to_string(CertificateKind kind);
std::string to_string(CertificateStatus status);

struct CertificateOptions {
  double radius = 0.2;
  int count = 500;
  double cap = 1e6;
  double first_order_tol = 0.25;  // cosine between (p, alpha) and a hypograph chord
  double min_scale = 0.0;         // 0 selects resolution / 2
  double first_order_scale = 0.0; // chords up to this length enter the cosine test; 0 selects 4 min_scale
  double target_margin = -1.0;    // arc and trajectory checks skip nodes closer to the target; < 0 selects 5 resolution
  std::uint64_t seed = 20240611;
};

struct SupergradientCertificate {
  State x;
  Costate vector;
  CertificateKind kind = CertificateKind::kProximal;
  CertificateStatus status = CertificateStatus::kNoSamples;
  double C5 = std::numeric_limits<double>::infinity();
  double first_order = 0.0;  // largest cosine of a violating chord
  double sample_radius = 0.0;
  int sample_count = 0;
  int used = 0;               // samples with finite T(y)
  double beta_lo = 0.0;       // range of beta - T(x) over used samples
  double beta_hi = 0.0;

  [[nodiscard]] bool certified() const { return status == CertificateStatus::kCertified; }
};

/// Tests <p, y - x> + alpha (beta - T(x)) <= C5 (|y - x|^2 + |beta - T(x)|^2) on hypograph
/// samples y in B(x, radius), beta in [T(y) - radius, T(y)], with alpha = 1 (Proximal) or 0.
/// Samples with T(y) = +inf satisfy the inequality trivially and are skipped. Oracle error is
/// absorbed by first_order_tol * |(p, alpha)| * |z|; a short chord whose cosine with (p, alpha)
/// exceeds first_order_tol means no finite constant exists and yields kCapExceeded.
SupergradientCertificate certify_supergradient(const TimeFunction& T, const State& x, const Costate& p,
                                               CertificateKind kind, const CertificateOptions& options = {});

struct ArcCertification {
  std::vector<SupergradientCertificate> certificates;
  std::size_t certified = 0;
  [[nodiscard]] double fraction() const {
    return certificates.empty() ? 0.0 : static_cast<double>(certified) / static_cast<double>(certificates.size());
  }
};

/// Certificates at `samples` evenly spaced arc nodes at least target_margin (first-order
/// distance g / |grad g|) from the target, with candidate p(t) and the arc's kind.
ArcCertification certify_arc(const TimeFunction& T, const DualArc& arc, const TargetSet& target, int samples,
                             const CertificateOptions& options = {});

// ---------------------------------------------------------------- constancy

struct ConstancyReport {
  double level = 1.0;  // 1 for Normal, 0 for Horizontal
  double max_deviation = 0.0;
  double mean_deviation = 0.0;
};

ConstancyReport hamiltonian_constancy_report(const DualArc& arc);

struct RefinementReport {
  std::vector<double> steps;
  std::vector<double> max_deviation;
  std::vector<double> orders;  // log2 ratios between consecutive steps; +inf at rounding level
  [[nodiscard]] double min_order() const;
};

/// Deviations below `floor` count as exact and give order +inf.
inline constexpr double kConstancyFloor = 1e-13;

RefinementReport constancy_refinement(const Multifunction& spec, const TargetSet& target, const TerminalCondition& tc,
                                      double horizon, const std::vector<double>& steps, const ArcOptions& options = {});

// ---------------------------------------------------------------- sufficient condition

struct Trajectory {
  std::vector<double> t;
  std::vector<State> x;
  std::vector<Costate> p;
};

Trajectory trajectory_from_arc(const DualArc& arc);

enum class Condition { kNone, kDynamics, kSupergradient, kHamiltonian, kConclusion };

std::string to_string(Condition condition);

struct VerifyOptions {
  double dyn_tol = 0.0;    // 0 selects 10 * step
  double ham_tol = 1e-3;
  double concl_tol = 0.0;  // 0 selects 5 h
  int certificate_nodes = 25;
  CertificateOptions certificate;
};

struct Verdict {
  bool optimal = false;
  Condition first_failure = Condition::kNone;
  std::vector<Condition> failures;
  double dyn_tol = 0.0;
  double ham_tol = 0.0;
  double concl_tol = 0.0;
  double max_dynamics_residual = 0.0;
  double max_hamiltonian_residual = 0.0;
  std::size_t certificate_checks = 0;
  std::size_t certified = 0;
  double conclusion_residual = 0.0;  // max |T(x(t)) - (T(x(0)) - t)|
  double slope = 0.0;                // least-squares d/dt T(x(t))
  double slope_residual = 0.0;       // |slope + 1| * duration
};

/// Checks, in order, (a) |x' - grad_p H(x, p)| <= dyn_tol, (b) -p certified as a proximal
/// supergradient at nodes target_margin away from the target, (c) |H(x, p) - 1| <= ham_tol, then T(x(t)) = T(x(0)) - t
/// within concl_tol. Every failing condition is listed; first_failure follows that order.
Verdict verify_optimality(const Multifunction& spec, const ValueField& vf, const TargetSet& target,
                          const Trajectory& trajectory, const VerifyOptions& options = {});

// ---------------------------------------------------------------- singularities

struct NonLipschitzOptions {
  double L0 = 0.0;             // 0 selects twice the median coarse ratio
  double growth = 1.25;        // required ratio growth per halving of h
  double unbounded_fraction = 0.9;  // local sup of T above this fraction of T_max marks unbounded T
  bool ridge = true;           // keep only peaks of the finest ratio along its realizing axis
};

struct NonLipschitzReport {
  std::vector<State> points;          // persistent points at the finest level
  std::vector<double> ratios;         // finest symmetric difference ratio
  std::vector<int> severity;          // largest k with ratio >= 2^k L0
  std::vector<State> unbounded;       // persistent but next to T near T_max
  std::vector<double> spacings;       // h per level
  double L0 = 0.0;
  double growth = 0.0;
  std::size_t candidates = 0;
};

/// Max over axes of |T(x + h e) - T(x - h e)| / 2h at off-target nodes with a reachable
/// stencil; -1 elsewhere.
std::vector<double> difference_ratios(const ValueField& vf);

/// `levels` must cover the same box with h halving from one level to the next.
NonLipschitzReport detect_nonlipschitz(const std::vector<ValueField>& levels, const NonLipschitzOptions& options = {});

struct DescentTrace {
  std::vector<State> path;
  bool reached_target = false;
};

/// x <- x + tau v* with v* the minimizing control of the Bellman backup, until x enters the target.
DescentTrace trace_descent(const ValueField& vf, const Multifunction& spec, const TargetSet& target, const State& x,
                           int max_steps = 0);

struct DualityEntry {
  State start;
  State endpoint;
  bool reached_target = false;
  double sigma_distance = std::numeric_limits<double>::infinity();
  double sigma_h = 0.0;  // |H(x_bar, xi)| at the nearest Sigma point
};

struct DualityReport {
  std::vector<DualityEntry> entries;
  double distance_tol = 0.0;
  double h_tol = 0.0;
  std::size_t failures = 0;
};

/// Descent traces from each point must end within distance_tol of a Sigma point with |H| <= h_tol.
DualityReport check_sigma_duality(const ValueField& vf, const Multifunction& spec, const TargetSet& target,
                                  const std::vector<State>& points, const std::vector<BoundaryPoint>& sigma,
                                  double distance_tol, double h_tol);

struct FlowoutOptions {
  double horizon = 2.0;
  double step = 1e-2;
  double lattice_dt = 1e-2;
  std::optional<Box> clip;  // drop flow samples outside
};

struct FlowoutReport {
  std::vector<State> samples;
  std::vector<double> distances;  // per singular point
  double max_distance = 0.0;
  double lattice_spacing = 0.0;
  std::size_t branches = 0;
  bool alarm = false;  // singular points without any Sigma point
};

/// Samples Phi((0, horizon] x Sigma), following every tied maximizer with sticky branches,
/// and measures the one-sided distance from each singular point to the samples.
FlowoutReport flowout_check(const Multifunction& spec, const TargetSet& target, const std::vector<BoundaryPoint>& sigma,
                            const std::vector<State>& singular, const FlowoutOptions& options = {});

struct BoxCount {
  double dimension = 0.0;
  std::vector<double> scales;
  std::vector<std::size_t> counts;
};

/// Least-squares slope of log N(eps) against log(1/eps). Empty `scales` selects dyadic
/// fractions of the cloud extent while the occupied count stays below a third of the points.
BoxCount box_counting_dimension(const std::vector<State>& cloud, std::vector<double> scales = {});

struct ExteriorSphereReport {
  std::vector<State> points;
  std::vector<double> theta;  // +inf when no sample binds; NaN when no normal was found
  std::size_t no_normal = 0;
  double min_theta = std::numeric_limits<double>::infinity();
  double radius = 0.0;
};

/// Largest rho with the ball of radius rho above (x, T(x)) along some unit normal clear of
/// hypograph samples (y, T(y)), |y - x| in [inner, radius]. The normal starts at
/// (-grad T, 1)/|.| (vertical without a gradient) and is refined by pattern search. inner <= 0
/// selects max(radius / 2, sqrt(resolution)). no_normal counts points off R and gradient-free points with rho below
/// the resolution.
ExteriorSphereReport exterior_sphere_scan(const TimeFunction& T, const std::vector<State>& points, double radius = 0.3,
                                          int samples = 400, std::uint64_t seed = 20240611, double inner = 0.0);

/// Max |T(y) - T(x)| / |y - x| over sampled pairs with |y - x| <= radius.
double sampled_time_lipschitz(const TimeFunction& T, const std::vector<State>& points, double radius, int pairs_per_point,
                              std::uint64_t seed = 20240611);

/// Random admissible trajectory from x0; returns max of T(x(t)) - s - T(x(t + s)) over node pairs.
double dpp_violation(const Multifunction& spec, const ValueField& vf, const State& x0, double duration, double step,
                     std::uint64_t seed = 20240611);

}  // namespace mintime
