#pragma once

#include "mintime/analysis.hpp"
#include "mintime/dynamics.hpp"
#include "mintime/hjb.hpp"
#include "mintime/target.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mintime::cli {

/// One row of the defaults table. An empty `fallback` with `required` set has no default.
struct Setting {
  std::string key;  // "section.name", or "name" for top-level keys
  std::string fallback;
  bool required = false;
  std::string doc;
};

/// Every scenario key with its default. Unknown keys in a scenario file are parse errors.
const std::vector<Setting>& settings_table();

struct FieldSettings {
  int boundary_count = 64;
  double step = 1e-2;
  int sigma_resolution = 512;
};

struct AnalysisSettings {
  int refinement_levels = 3;
  int arc_samples = 20;
  CertificateOptions certificate;
  SigmaMode sigma_mode = SigmaMode::kStrict;
  NonLipschitzOptions nonlipschitz;
  FlowoutOptions flowout;
  double exterior_radius = 0.3;
  int exterior_points = 100;
  int exterior_samples = 400;
  std::size_t hypothesis_samples = 2000;
};

struct Tolerances {
  double sigma = kSigmaTolerance;
  double constancy = 1e-6;
  double certificate_fraction = 0.95;
  double ham = 1e-3;
  double dyn = 0.0;
  double concl = 0.0;
  double duality_h = 10.0;  // descent endpoints within this many h of Sigma
};

struct Scenario {
  std::string name;
  int dimension = 0;
  std::uint64_t seed = 20240611;
  double horizon = 0.0;
  std::optional<Multifunction> dynamics;
  std::optional<TargetSet> target;
  Box box;
  double h = 0.0;
  SolveOptions solve;
  FieldSettings field;
  AnalysisSettings analysis;
  Tolerances tolerances;
  std::map<std::string, std::string> resolved;  // every key after defaults and overrides

  [[nodiscard]] Grid grid() const { return Grid(box, h); }
  [[nodiscard]] Grid grid(double spacing) const { return Grid(box, spacing); }
};

struct Overrides {
  std::optional<double> h;
  std::optional<std::uint64_t> seed;
};

/// Throws Error(kParse) for syntax errors and unknown keys, Error(kValidation) for bad values
/// (the message names the key).
Scenario parse_scenario(const std::string& text, const Overrides& overrides = {});
Scenario load_scenario(const std::filesystem::path& path, const Overrides& overrides = {});

}  // namespace mintime::cli
