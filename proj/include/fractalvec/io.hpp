#pragma once

// Flat-file serialization: CSV with 17 significant digits and a config-hash
// comment header, JSON reports, and the validated run configuration.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "fractalvec/energy.hpp"
#include "fractalvec/fiber.hpp"
#include "fractalvec/spectrum.hpp"

namespace fv {

using Json = nlohmann::json;

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
/// Hash of the canonical (sorted-key, compact) dump, as 16 hex digits.
std::string config_hash(const Json& resolved);

std::string format_real(double x);

using CsvCell = std::variant<long long, double, std::string>;
using CsvRow = std::vector<CsvCell>;

struct CsvTable {
  /// Lines of the leading "# key=value" header, without the "# ".
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
};

void write_csv(const std::filesystem::path& path, const std::string& hash,
               const std::vector<std::string>& columns, const std::vector<CsvRow>& rows);
CsvTable read_csv(const std::filesystem::path& path);

/// Adds "config_hash" and writes with a stable layout.
void write_json(const std::filesystem::path& path, const std::string& hash, Json body);
Json read_json(const std::filesystem::path& path);

// Record layouts shared by the CLI and the round-trip tests.
Json level_graph_json(const LevelGraph& g);
std::vector<CsvRow> measure_rows(const LevelGraph& g, const CellMeasure& m);
std::vector<CsvRow> function_rows(const DiscreteFunction& f);
std::vector<CsvRow> fiber_metric_rows(const LevelGraph& g, const FiberMetric& metric);
Json spectrum_json(const SpectrumResult& s, const SpectrumOptions& options);

/// Fully expanded defaults; every accepted key appears here.
Json default_config();

/// Checks keys and types against the defaults and merges. Throws
/// ErrorKind::config with the JSON pointer of the offending key.
Json resolve_config(const Json& user);

/// Applies "a.b.c=value"; value parsed as JSON when possible, else taken as a string.
void apply_override(Json& config, std::string_view assignment);

}  // namespace fv
