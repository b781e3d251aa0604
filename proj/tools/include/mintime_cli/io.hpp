#pragma once

#include "mintime/hjb.hpp"
#include "mintime/target.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mintime::cli {

using Json = nlohmann::ordered_json;

std::string sha256_hex(const std::string& bytes);
std::string read_file(const std::filesystem::path& path);
/// Writes bytes as-is (LF line endings, no locale).
void write_file(const std::filesystem::path& path, const std::string& bytes);
std::string dump_json(const Json& j);

/// Shortest round-trip decimal for finite values, "inf" / "-inf" / "nan" otherwise.
std::string format_number(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  [[nodiscard]] int column(const std::string& name) const;  // -1 when absent
};

/// Comma-separated with a header row; throws Error(kParse) on malformed content.
CsvTable parse_csv(const std::string& text);

/// value.csv: x1..xn,T,reachable in grid index order; T is "inf" where unreachable.
std::string value_csv(const ValueField& vf);

/// Rebuilds a field written by value_csv on `grid`; solver metadata comes from `meta`.
ValueField value_field_from_csv(const std::string& text, const Grid& grid, const TargetSet& target, const Json& meta);

Json solver_meta(const ValueField& vf);
Json to_json(const Vector& v);

}  // namespace mintime::cli
