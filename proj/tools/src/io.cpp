#include "mintime_cli/io.hpp"

#include "mintime/error.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mintime::cli {

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::kInvalidArgument, "sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingInputs, "missing " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double cell_value(const std::string& cell, int line) {
  if (cell == "inf") return std::numeric_limits<double>::infinity();
  if (cell == "-inf") return -std::numeric_limits<double>::infinity();
  if (cell == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
    throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": not a number '" + cell + "'");
  return v;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      for (const auto& h : t.header)
        if (h.empty()) throw Error(ErrorCode::kParse, "empty column name in header");
      continue;
    }
    if (cells.size() != t.header.size())
      throw Error(ErrorCode::kParse, "line " + std::to_string(number) + ": expected " + std::to_string(t.header.size()) + " cells");
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(cell_value(c, number));
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw Error(ErrorCode::kParse, "empty CSV");
  return t;
}

std::string value_csv(const ValueField& vf) {
  const int n = vf.grid.dim();
  std::string out;
  for (int a = 0; a < n; ++a) out += "x" + std::to_string(a + 1) + ",";
  out += "T,reachable\n";
  for (std::size_t i = 0; i < vf.grid.size(); ++i) {
    const State x = vf.grid.node(i);
    for (int a = 0; a < n; ++a) out += format_number(x[a]) + ",";
    out += (vf.reachable[i] ? format_number(vf.T[i]) : "inf") + "," + (vf.reachable[i] ? "1" : "0") + "\n";
  }
  return out;
}

ValueField value_field_from_csv(const std::string& text, const Grid& grid, const TargetSet& target, const Json& meta) {
  const CsvTable t = parse_csv(text);
  const int n = grid.dim();
  const int tcol = t.column("T"), rcol = t.column("reachable");
  if (tcol < 0 || rcol < 0 || static_cast<int>(t.header.size()) != n + 2)
    throw Error(ErrorCode::kParse, "value.csv header does not match the scenario dimension");
  if (t.rows.size() != grid.size())
    throw Error(ErrorCode::kValidation, "value.csv has " + std::to_string(t.rows.size()) + " nodes, grid has " +
                                            std::to_string(grid.size()) + "; rerun solve with the same grid");
  ValueField vf;
  vf.grid = grid;
  vf.T_max = meta.at("T_max").get<double>();
  vf.tau = meta.at("tau").get<double>();
  vf.tol = meta.at("tol").get<double>();
  vf.max_speed = meta.at("max_speed").get<double>();
  vf.directions = meta.at("directions").get<int>();
  vf.iterations = meta.at("iterations").get<int>();
  vf.residual = meta.at("residual").get<double>();
  vf.converged = meta.at("converged").get<bool>();
  vf.T.resize(grid.size());
  vf.reachable.resize(grid.size());
  vf.in_target.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& row = t.rows[i];
    const State x = grid.node(i);
    for (int a = 0; a < n; ++a)
      if (std::abs(row[static_cast<std::size_t>(a)] - x[a]) > 1e-9 * (1.0 + std::abs(x[a])))
        throw Error(ErrorCode::kValidation, "value.csv node " + std::to_string(i) + " does not match the scenario grid");
    vf.reachable[i] = row[static_cast<std::size_t>(rcol)] != 0.0;
    vf.T[i] = vf.reachable[i] ? row[static_cast<std::size_t>(tcol)] : vf.T_max;
    vf.in_target[i] = target.contains(x);
  }
  return vf;
}

Json solver_meta(const ValueField& vf) {
  Json j;
  j["T_max"] = vf.T_max;
  j["tau"] = vf.tau;
  j["tol"] = vf.tol;
  j["max_speed"] = vf.max_speed;
  j["directions"] = vf.directions;
  j["iterations"] = vf.iterations;
  j["residual"] = vf.residual;
  j["converged"] = vf.converged;
  j["node_updates"] = vf.node_updates;
  return j;
}

Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace mintime::cli
