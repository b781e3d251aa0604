#include "mintime_cli/scenario.hpp"

#include "mintime/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace mintime::cli {

const std::vector<Setting>& settings_table() {
  static const std::vector<Setting> table = {
      {"name", "", true, "scenario identifier, echoed in every artifact"},
      {"dimension", "", true, "state dimension n (1 to 3)"},
      {"seed", "20240611", false, "seed for every sampled check"},
      {"horizon", "6", false, "integration horizon of the extremal field"},

      {"dynamics.family", "", true, "ball | drift_ball | segment | polytope"},
      {"dynamics.center", "zero", false, "ball: center vector function"},
      {"dynamics.radius", "constant(1)", false, "ball: radius scalar function; drift_ball: constant(r)"},
      {"dynamics.drift", "zero", false, "drift_ball: drift vector function"},
      {"dynamics.direction", "", false, "segment: unit direction vector function"},
      {"dynamics.half_length", "constant(1)", false, "segment: half-length scalar function psi"},
      {"dynamics.vertices", "", false, "polytope: vector functions separated by |"},

      {"target.type", "", true, "disk | ellipse | half_space"},
      {"target.center", "", false, "disk, ellipse: center (origin when empty)"},
      {"target.radius", "1", false, "disk: radius"},
      {"target.semi_axes", "", false, "ellipse: semi-axes"},
      {"target.normal", "", false, "half_space: normal of {<normal, x> <= offset}"},
      {"target.offset", "0", false, "half_space: offset"},

      {"grid.lower", "", true, "lower box corner"},
      {"grid.upper", "", true, "upper box corner"},
      {"grid.h", "", true, "grid spacing"},
      {"grid.T_max", "0", false, "finite sentinel; 0 selects 2 diam / min max-speed"},
      {"grid.tau", "0", false, "pseudo-time step; 0 selects 0.5 h / max-speed"},
      {"grid.tol", "1e-9", false, "sup-norm convergence threshold"},
      {"grid.max_iterations", "20000", false, "sweep limit"},
      {"grid.directions", "0", false, "Ball control directions; 0 selects the default"},

      {"field.boundary_count", "64", false, "boundary samples of the extremal field"},
      {"field.step", "1e-2", false, "RK4 step of the dual arcs"},
      {"field.sigma_resolution", "512", false, "boundary scan resolution for Sigma"},

      {"tolerances.sigma", "1e-6", false, "Sigma threshold relative to max |H| on the boundary"},
      {"tolerances.constancy", "1e-6", false, "max |H - level| along arcs"},
      {"tolerances.certificate_fraction", "0.95", false, "certified share of sampled nodes per arc"},
      {"tolerances.ham", "1e-3", false, "verify: |H(x, p) - 1|"},
      {"tolerances.dyn", "0", false, "verify: |x' - grad_p H|; 0 selects 10 step"},
      {"tolerances.concl", "0", false, "verify: |T(x(t)) - T(x(0)) + t|; 0 selects 5 h"},
      {"tolerances.duality_h", "10", false, "descent endpoints within this many h of Sigma"},

      {"analysis.refinement_levels", "3", false, "grids h, 2h, 4h, ... for singularity persistence"},
      {"analysis.arc_samples", "20", false, "certified nodes per arc"},
      {"analysis.certificate_radius", "0.2", false, "certificate sampling radius"},
      {"analysis.certificate_count", "500", false, "certificate samples"},
      {"analysis.certificate_cap", "1e6", false, "C5 cap"},
      {"analysis.first_order_tol", "0.25", false, "cosine allowance for oracle error"},
      {"analysis.sigma_mode", "strict", false, "strict | sign_change"},
      {"analysis.growth", "1.25", false, "ratio growth per halving of h for persistence"},
      {"analysis.flowout_horizon", "2", false, "time horizon of the sampled flow-out"},
      {"analysis.flowout_step", "1e-2", false, "flow integration step"},
      {"analysis.flowout_lattice", "1e-2", false, "time spacing of flow-out samples"},
      {"analysis.exterior_radius", "0.3", false, "exterior sphere sampling radius"},
      {"analysis.exterior_points", "100", false, "points scanned for the exterior sphere"},
      {"analysis.exterior_samples", "400", false, "hypograph samples per point"},
      {"analysis.hypothesis_samples", "2000", false, "samples of the hypothesis checker"},
  };
  return table;
}

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

[[noreturn]] void invalid(const std::string& key, const std::string& why) {
  throw Error(ErrorCode::kValidation, key + ": " + why);
}

double to_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw Error(ErrorCode::kParse, key + ": expected a number, got '" + t + "'");
  return v;
}

long long to_integer(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw Error(ErrorCode::kParse, key + ": expected an integer, got '" + t + "'");
  return v;
}

std::vector<double> to_numbers(const std::string& key, const std::string& text) {
  std::string t = text;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream in(t);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(to_double(key, tok));
  return out;
}

Vector to_vector(const std::string& key, const std::string& text, int dim) {
  const auto v = to_numbers(key, text);
  if (static_cast<int>(v.size()) != dim)
    invalid(key, "expected " + std::to_string(dim) + " components, got " + std::to_string(v.size()));
  Vector out(dim);
  for (int i = 0; i < dim; ++i) out[i] = v[static_cast<std::size_t>(i)];
  return out;
}

// name or name(group; group; ...) with comma or blank separated numbers in each group
struct Call {
  std::string name;
  std::vector<std::string> groups;
};

Call to_call(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  Call c;
  const auto open = t.find('(');
  if (open == std::string::npos) {
    c.name = t;
  } else {
    if (t.back() != ')') throw Error(ErrorCode::kParse, key + ": missing ')' in '" + t + "'");
    c.name = trim(std::string_view(t).substr(0, open));
    std::string inner = t.substr(open + 1, t.size() - open - 2);
    std::size_t start = 0;
    for (;;) {
      const auto semi = inner.find(';', start);
      c.groups.push_back(trim(std::string_view(inner).substr(start, semi == std::string::npos ? std::string::npos : semi - start)));
      if (semi == std::string::npos) break;
      start = semi + 1;
    }
  }
  if (c.name.empty() || !std::all_of(c.name.begin(), c.name.end(), [](char ch) { return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_'; }))
    throw Error(ErrorCode::kParse, key + ": malformed function '" + t + "'");
  return c;
}

void arity(const std::string& key, const Call& c, std::size_t lo, std::size_t hi) {
  if (c.groups.size() < lo || c.groups.size() > hi)
    invalid(key, c.name + " takes " + std::to_string(lo) + (hi > lo ? " to " + std::to_string(hi) : "") + " argument groups");
}

int to_axis(const std::string& key, const std::string& text, int dim) {
  const auto v = to_numbers(key, text);
  if (v.size() != 1 || v[0] != std::floor(v[0]) || v[0] < 0 || v[0] >= dim) invalid(key, "axis must be an integer in [0, n)");
  return static_cast<int>(v[0]);
}

double to_scalar(const std::string& key, const std::string& text) {
  const auto v = to_numbers(key, text);
  if (v.size() != 1) invalid(key, "expected one number");
  return v[0];
}

ScalarFunction scalar_function(const std::string& key, const std::string& text, int dim) {
  const Call c = to_call(key, text);
  if (c.name == "constant") {
    arity(key, c, 1, 1);
    return scalar_fn::Constant{to_scalar(key, c.groups[0])};
  }
  if (c.name == "sqrt_abs") {
    arity(key, c, 1, 2);
    return scalar_fn::SqrtAbsCoord{to_axis(key, c.groups[0], dim), c.groups.size() > 1 ? to_scalar(key, c.groups[1]) : 1.0};
  }
  if (c.name == "squared_norm") {
    arity(key, c, 1, 3);
    return scalar_fn::SquaredNorm{to_vector(key, c.groups[0], dim), c.groups.size() > 1 ? to_scalar(key, c.groups[1]) : 1.0,
                                  c.groups.size() > 2 ? to_scalar(key, c.groups[2]) : 0.0};
  }
  if (c.name == "coord_squared") {
    arity(key, c, 1, 1);
    return scalar_fn::CoordSquared{to_axis(key, c.groups[0], dim)};
  }
  if (c.name == "dist2_points") {
    arity(key, c, 1, 64);
    scalar_fn::Dist2Points f;
    for (const auto& g : c.groups) f.points.push_back(to_vector(key, g, dim));
    return f;
  }
  invalid(key, "unknown scalar function '" + c.name + "'");
}

VectorFunction vector_function(const std::string& key, const std::string& text, int dim, const TargetSet& target) {
  const Call c = to_call(key, text);
  if (c.name == "zero") {
    arity(key, c, 0, 0);
    return vector_fn::Zero{};
  }
  if (c.name == "constant") {
    arity(key, c, 1, 1);
    return vector_fn::Constant{to_vector(key, c.groups[0], dim)};
  }
  if (c.name == "affine") {
    arity(key, c, 1, 2);
    const auto m = to_numbers(key, c.groups[0]);
    if (static_cast<int>(m.size()) != dim * dim) invalid(key, "affine matrix needs n*n row-major entries");
    Matrix a(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) a(i, j) = m[static_cast<std::size_t>(i * dim + j)];
    return vector_fn::Affine{a, c.groups.size() > 1 ? to_vector(key, c.groups[1], dim) : Vector(Vector::Zero(dim))};
  }
  if (c.name == "target_normal") {
    arity(key, c, 0, 0);
    return vector_fn::LevelSetNormal{target.level_set()};
  }
  invalid(key, "unknown vector function '" + c.name + "'");
}

double positive(const std::string& key, double v) {
  if (!(v > 0.0)) invalid(key, "must be > 0");
  return v;
}

double nonnegative(const std::string& key, double v) {
  if (!(v >= 0.0)) invalid(key, "must be >= 0");
  return v;
}

int positive_int(const std::string& key, long long v) {
  if (v < 1 || v > 100000000) invalid(key, "must be a positive integer");
  return static_cast<int>(v);
}

}  // namespace

Scenario parse_scenario(const std::string& text, const Overrides& overrides) {
  std::map<std::string, std::string> given;
  std::set<std::string> known;
  for (const auto& s : settings_table()) known.insert(s.key);
  std::set<std::string> sections;
  for (const auto& k : known)
    if (const auto dot = k.find('.'); dot != std::string::npos) sections.insert(k.substr(0, dot));

  std::istringstream in(text);
  std::string line, section;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::string where = "line " + std::to_string(number);
    if (t.front() == '[') {
      if (t.back() != ']') throw Error(ErrorCode::kParse, where + ": malformed section header");
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      if (!sections.count(section)) throw Error(ErrorCode::kParse, where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::kParse, where + ": expected key = value");
    const std::string name = trim(std::string_view(t).substr(0, eq));
    const std::string key = section.empty() ? name : section + "." + name;
    if (!known.count(key)) throw Error(ErrorCode::kParse, where + ": unknown key '" + key + "'");
    if (given.count(key)) throw Error(ErrorCode::kParse, where + ": duplicate key '" + key + "'");
    given[key] = trim(std::string_view(t).substr(eq + 1));
  }

  Scenario sc;
  for (const auto& s : settings_table()) {
    const auto it = given.find(s.key);
    if (it != given.end()) sc.resolved[s.key] = it->second;
    else if (s.required) throw Error(ErrorCode::kValidation, s.key + ": required key is missing");
    else sc.resolved[s.key] = s.fallback;
  }
  if (overrides.h) {
    std::ostringstream o;
    o.precision(17);
    o << *overrides.h;
    sc.resolved["grid.h"] = o.str();
  }
  if (overrides.seed) sc.resolved["seed"] = std::to_string(*overrides.seed);
  const auto& r = sc.resolved;
  auto get = [&](const std::string& k) -> const std::string& { return r.at(k); };
  auto num = [&](const std::string& k) { return to_double(k, get(k)); };
  auto integer = [&](const std::string& k) { return to_integer(k, get(k)); };

  sc.name = get("name");
  if (sc.name.empty() || !std::all_of(sc.name.begin(), sc.name.end(), [](char ch) {
        return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-';
      }))
    invalid("name", "use letters, digits, '_' or '-'");
  const long long dim = integer("dimension");
  if (dim < 1 || dim > kMaxDim) invalid("dimension", "must be 1, 2 or 3");
  sc.dimension = static_cast<int>(dim);
  const int n = sc.dimension;
  const long long seed = integer("seed");
  if (seed < 0) invalid("seed", "must be >= 0");
  sc.seed = static_cast<std::uint64_t>(seed);
  sc.horizon = positive("horizon", num("horizon"));

  // target first: target_normal refers to it
  const std::string ttype = get("target.type");
  auto unused = [&](const std::string& k, const std::string& owner) {
    if (given.count(k)) invalid(k, "does not apply to " + owner);
  };
  const Vector center = get("target.center").empty() ? Vector(Vector::Zero(n)) : to_vector("target.center", get("target.center"), n);
  if (ttype == "disk") {
    unused("target.semi_axes", "disk");
    unused("target.normal", "disk");
    unused("target.offset", "disk");
    sc.target.emplace(LevelSet(DiskLevelSet{center, positive("target.radius", num("target.radius"))}));
  } else if (ttype == "ellipse") {
    unused("target.radius", "ellipse");
    unused("target.normal", "ellipse");
    unused("target.offset", "ellipse");
    const Vector axes = to_vector("target.semi_axes", get("target.semi_axes"), n);
    if (!(axes.minCoeff() > 0.0)) invalid("target.semi_axes", "must be > 0");
    sc.target.emplace(LevelSet(EllipseLevelSet{center, axes}));
  } else if (ttype == "half_space") {
    unused("target.radius", "half_space");
    unused("target.semi_axes", "half_space");
    unused("target.center", "half_space");
    const Vector normal = to_vector("target.normal", get("target.normal"), n);
    if (!(normal.norm() > 0.0)) invalid("target.normal", "must be nonzero");
    sc.target.emplace(LevelSet(HalfSpaceLevelSet{normal, num("target.offset")}));
  } else {
    invalid("target.type", "unknown target '" + ttype + "'");
  }

  const std::string family = get("dynamics.family");
  const std::vector<std::string> all = {"dynamics.center", "dynamics.radius", "dynamics.drift", "dynamics.direction",
                                        "dynamics.half_length", "dynamics.vertices"};
  auto only = [&](const std::vector<std::string>& keys) {
    for (const auto& k : all)
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) unused(k, family);
  };
  if (family == "ball") {
    only({"dynamics.center", "dynamics.radius"});
    sc.dynamics.emplace(n, BallFamily{vector_function("dynamics.center", get("dynamics.center"), n, *sc.target),
                                      scalar_function("dynamics.radius", get("dynamics.radius"), n)});
  } else if (family == "drift_ball") {
    only({"dynamics.drift", "dynamics.radius"});
    const auto rf = scalar_function("dynamics.radius", get("dynamics.radius"), n);
    const auto* c = std::get_if<scalar_fn::Constant>(&rf.variant());
    if (!c) invalid("dynamics.radius", "drift_ball needs constant(r)");
    sc.dynamics.emplace(n, DriftBallFamily{vector_function("dynamics.drift", get("dynamics.drift"), n, *sc.target),
                                           positive("dynamics.radius", c->value)});
  } else if (family == "segment") {
    only({"dynamics.direction", "dynamics.half_length"});
    if (get("dynamics.direction").empty()) invalid("dynamics.direction", "required for segment");
    auto dir = vector_function("dynamics.direction", get("dynamics.direction"), n, *sc.target);
    if (const auto* c = std::get_if<vector_fn::Constant>(&dir.variant()); c && std::abs(c->value.norm() - 1.0) > 1e-12)
      invalid("dynamics.direction", "must have unit norm");
    if (std::holds_alternative<vector_fn::Zero>(dir.variant()) || std::holds_alternative<vector_fn::Affine>(dir.variant()))
      invalid("dynamics.direction", "must have unit norm");
    sc.dynamics.emplace(n, SegmentFamily{std::move(dir), scalar_function("dynamics.half_length", get("dynamics.half_length"), n)});
  } else if (family == "polytope") {
    only({"dynamics.vertices"});
    PolytopeFamily f;
    std::string list = get("dynamics.vertices");
    std::size_t start = 0;
    for (;;) {
      const auto bar = list.find('|', start);
      const std::string item = trim(std::string_view(list).substr(start, bar == std::string::npos ? std::string::npos : bar - start));
      if (!item.empty()) f.vertices.push_back(vector_function("dynamics.vertices", item, n, *sc.target));
      if (bar == std::string::npos) break;
      start = bar + 1;
    }
    if (f.vertices.empty()) invalid("dynamics.vertices", "polytope needs at least one vertex");
    sc.dynamics.emplace(n, std::move(f));
  } else {
    invalid("dynamics.family", "unknown dynamics '" + family + "'");
  }

  sc.box = Box{to_vector("grid.lower", get("grid.lower"), n), to_vector("grid.upper", get("grid.upper"), n)};
  if (!sc.box.nondegenerate()) invalid("grid.upper", "must exceed grid.lower in every coordinate");
  sc.h = positive("grid.h", num("grid.h"));
  if (sc.h > sc.box.extent().minCoeff() / 2) invalid("grid.h", "needs at least two cells per axis");
  sc.solve.T_max = nonnegative("grid.T_max", num("grid.T_max"));
  sc.solve.tau = nonnegative("grid.tau", num("grid.tau"));
  sc.solve.tol = positive("grid.tol", num("grid.tol"));
  sc.solve.max_iterations = positive_int("grid.max_iterations", integer("grid.max_iterations"));
  const long long dirs = integer("grid.directions");
  if (dirs < 0) invalid("grid.directions", "must be >= 0");
  sc.solve.directions = static_cast<int>(dirs);

  sc.field.boundary_count = positive_int("field.boundary_count", integer("field.boundary_count"));
  sc.field.step = positive("field.step", num("field.step"));
  sc.field.sigma_resolution = positive_int("field.sigma_resolution", integer("field.sigma_resolution"));

  sc.tolerances.sigma = positive("tolerances.sigma", num("tolerances.sigma"));
  sc.tolerances.constancy = positive("tolerances.constancy", num("tolerances.constancy"));
  sc.tolerances.certificate_fraction = num("tolerances.certificate_fraction");
  if (!(sc.tolerances.certificate_fraction >= 0.0 && sc.tolerances.certificate_fraction <= 1.0))
    invalid("tolerances.certificate_fraction", "must lie in [0, 1]");
  sc.tolerances.ham = positive("tolerances.ham", num("tolerances.ham"));
  sc.tolerances.dyn = nonnegative("tolerances.dyn", num("tolerances.dyn"));
  sc.tolerances.concl = nonnegative("tolerances.concl", num("tolerances.concl"));
  sc.tolerances.duality_h = positive("tolerances.duality_h", num("tolerances.duality_h"));

  auto& a = sc.analysis;
  a.refinement_levels = positive_int("analysis.refinement_levels", integer("analysis.refinement_levels"));
  if (a.refinement_levels < 2) invalid("analysis.refinement_levels", "needs at least 2 levels");
  a.arc_samples = positive_int("analysis.arc_samples", integer("analysis.arc_samples"));
  a.certificate.radius = positive("analysis.certificate_radius", num("analysis.certificate_radius"));
  a.certificate.count = positive_int("analysis.certificate_count", integer("analysis.certificate_count"));
  a.certificate.cap = positive("analysis.certificate_cap", num("analysis.certificate_cap"));
  a.certificate.first_order_tol = positive("analysis.first_order_tol", num("analysis.first_order_tol"));
  a.certificate.seed = sc.seed;
  const std::string mode = get("analysis.sigma_mode");
  if (mode == "strict") a.sigma_mode = SigmaMode::kStrict;
  else if (mode == "sign_change") a.sigma_mode = SigmaMode::kSignChange;
  else invalid("analysis.sigma_mode", "must be strict or sign_change");
  a.nonlipschitz.growth = num("analysis.growth");
  if (!(a.nonlipschitz.growth > 1.0)) invalid("analysis.growth", "must be > 1");
  a.flowout.horizon = positive("analysis.flowout_horizon", num("analysis.flowout_horizon"));
  a.flowout.step = positive("analysis.flowout_step", num("analysis.flowout_step"));
  a.flowout.lattice_dt = positive("analysis.flowout_lattice", num("analysis.flowout_lattice"));
  a.flowout.clip = sc.box;
  a.exterior_radius = positive("analysis.exterior_radius", num("analysis.exterior_radius"));
  a.exterior_points = positive_int("analysis.exterior_points", integer("analysis.exterior_points"));
  a.exterior_samples = positive_int("analysis.exterior_samples", integer("analysis.exterior_samples"));
  a.hypothesis_samples = static_cast<std::size_t>(positive_int("analysis.hypothesis_samples", integer("analysis.hypothesis_samples")));
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path, const Overrides& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingInputs, "cannot read scenario " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str(), overrides);
}

}  // namespace mintime::cli
