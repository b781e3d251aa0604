#pragma once

#include "mintime/dynamics.hpp"
#include "mintime/target.hpp"
#include "mintime/types.hpp"

#include <limits>
#include <optional>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mintime {

enum class ArcKind { kNormal, kHorizontal };

std::string to_string(ArcKind kind);

struct TerminalCondition {
  BoundaryPoint boundary_point;
  ArcKind kind = ArcKind::kNormal;
  Costate p_terminal;
};

/// Normal with p = xi / H(x_bar, xi) when |H| > sigma_threshold, Horizontal with p = xi otherwise.
TerminalCondition make_terminal_condition(const BoundaryPoint& bp, double sigma_threshold);

/// Extremal ending on the target. Times ascend on [0, T_arc]; the last node is the
/// boundary point, so the time-to-target of node k is T_arc - times[k].
struct DualArc {
  std::vector<double> times;
  std::vector<State> x_path;
  std::vector<Costate> p_path;
  std::vector<Vector> xdot_path;  // selection of grad_p H at each node
  std::vector<double> h_trace;
  ArcKind kind = ArcKind::kNormal;
  TerminalCondition terminal;
  double step = 0.0;
  bool branch_switch = false;
  bool left_box = false;
  std::vector<std::string> warnings;

  [[nodiscard]] std::size_t size() const { return times.size(); }
  [[nodiscard]] double duration() const { return times.empty() ? 0.0 : times.back(); }
  [[nodiscard]] double time_to_go(std::size_t k) const { return times.back() - times[k]; }
};

struct ArcOptions {
  std::optional<Box> stop_box;  // stop once x leaves this box
  double costate_min = 1e-8;
  double costate_max = 1e8;
};

/// RK4 on x' = grad_p H, p' = -grad_x H backward from (x_bar, p_terminal) over
/// [0, horizon], realized as the forward flow of the negated field in time-to-go.
/// Throws kCostateBlowup when |p| leaves [costate_min, costate_max].
DualArc integrate_dual_arc(const Multifunction& spec, const TargetSet& target, const TerminalCondition& tc,
                           double horizon, double step, const ArcOptions& options = {});

/// Forward integration of x' = grad_p H, p' = -grad_x H from (x0, p0); returns the final state.
std::pair<State, Costate> integrate_forward(const Multifunction& spec, const State& x0, const Costate& p0,
                                            double duration, double step);

/// Bucket grid over arc nodes used by value synthesis.
struct NodeIndex {
  double cell = 1.0;
  std::unordered_map<std::int64_t, std::vector<std::pair<std::uint32_t, std::uint32_t>>> buckets;
};

struct ExtremalField {
  std::vector<DualArc> arcs;                 // boundary samples in chart order, then Sigma points
  std::vector<std::uint8_t> crossing;        // per arc
  std::vector<double> crossing_time_to_go;   // +inf when no crossing
  std::vector<std::string> failures;         // per arc, empty on success
  std::vector<std::uint8_t> valid;           // arc integrated successfully
  std::size_t skipped_inward = 0;            // boundary samples with H(x_bar, xi) < 0
  std::size_t boundary_count = 0;
  double sigma_threshold = 0.0;
  double boundary_spacing = 0.0;
  double match_radius = 0.0;
  double horizon = 0.0;
  double step = 0.0;
  NodeIndex index;
};

struct FieldOptions {
  ArcOptions arc;
  bool include_sigma = true;
  int sigma_resolution = 512;
};

/// One arc per boundary sample (plus one Horizontal arc per Sigma point), with
/// crossings marked by a sign change of det[x_{k+1} - x_k, dx_k/ds] between
/// chart-neighbors or by the same-time distance to another arc dropping below
/// spacing / 4. Arc failures are recorded, not raised.
ExtremalField build_extremal_field(const Multifunction& spec, const TargetSet& target, int boundary_count,
                                   double horizon, double step, const FieldOptions& options = {});

enum class BranchRule {
  kTieBreak,  // deterministic selection of grad_p_H
  kSticky,    // among tied maximizers keep the one closest to the previous velocity
};

struct FlowSample {
  double t = 0.0;
  State x;
  Costate p;
};

/// Characteristic flow X' = -grad_p H(X, P), P' = grad_x H(X, P) with X(0) = x_bar,
/// P(0) = -grad g(x_bar); returns samples at every step up to t.
std::vector<FlowSample> flow_phi_path(const Multifunction& spec, const TargetSet& target, const State& x_bar,
                                      double t, double step, BranchRule rule = BranchRule::kTieBreak,
                                      const std::optional<Vector>& initial_velocity = std::nullopt);

/// Phi(t, x_bar); exactly x_bar at t = 0.
State flow_phi(const Multifunction& spec, const TargetSet& target, double t, const State& x_bar, double step);

/// The nodes of `arc` with time-to-go <= time_to_go, times shifted to start at 0.
DualArc arc_prefix(const DualArc& arc, double time_to_go);

/// Arc i of the field cut at its first crossing; the whole arc when it never crosses.
DualArc uncrossed_arc(const ExtremalField& field, std::size_t i);

struct Synthesis {
  double value = 0.0;
  int arc = -1;  // -1 inside the target
};

/// Minimal time-to-target over Normal-arc nodes within match_radius of the query
/// and before the arc's first crossing; 0 inside the target.
std::optional<Synthesis> synthesize_T(const ExtremalField& field, const TargetSet& target, const State& query);

}  // namespace mintime
