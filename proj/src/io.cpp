#include "fractalvec/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "fractalvec/error.hpp"

namespace fv {

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const Json& resolved) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(resolved.dump())));
  return buf;
}

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw Error(ErrorKind::invalid_argument, "no column '" + std::string(name) + "'");
}

namespace {

std::string cell_text(const CsvCell& c) {
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&c)) return format_real(*d);
  return std::get<std::string>(c);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::invalid_argument,
          "cannot write " + path.string());
  return out;
}

}  // namespace

void write_csv(const std::filesystem::path& path, const std::string& hash,
               const std::vector<std::string>& columns, const std::vector<CsvRow>& rows) {
  auto out = open_out(path);
  out << "# config_hash=" << hash << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
  for (const auto& row : rows) {
    require(row.size() == columns.size(), ErrorKind::invalid_argument,
            "CSV row width does not match the header of " + path.string());
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << cell_text(row[i]);
    out << '\n';
  }
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::invalid_argument, "cannot read " + path.string());
  CsvTable t;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0 && !header) {
      t.comments.push_back(line.substr(2));
      continue;
    }
    if (!header) {
      t.columns = split(line, ',');
      header = true;
      continue;
    }
    t.rows.push_back(split(line, ','));
  }
  return t;
}

void write_json(const std::filesystem::path& path, const std::string& hash, Json body) {
  body["config_hash"] = hash;
  auto out = open_out(path);
  out << body.dump(2) << '\n';
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::invalid_argument, "cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::config, path.string() + ": " + e.what());
  }
}

Json level_graph_json(const LevelGraph& g) {
  Json j;
  j["fractal"] = g.spec().id;
  j["level"] = g.level();
  j["conductance"] = g.conductance();
  Json vertices = Json::array();
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    const auto xy = g.vertex_coords(v);
    vertices.push_back({{"index", v}, {"address", g.vertex_label(v)}, {"xy", {xy[0], xy[1]}}});
  }
  Json edges = Json::array();
  for (const auto& e : g.edges())
    edges.push_back({{"u", e.u}, {"v", e.v}, {"cell", g.cell_address(e.cell).to_string()}});
  Json cells = Json::array();
  for (const auto& c : cells_at_level(g))
    cells.push_back({{"address", c.address.to_string()}, {"vertices", c.vertices}});
  j["vertices"] = std::move(vertices);
  j["edges"] = std::move(edges);
  j["cells"] = std::move(cells);
  return j;
}

std::vector<CsvRow> measure_rows(const LevelGraph& g, const CellMeasure& m) {
  std::vector<CsvRow> rows;
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    rows.push_back({g.cell_address(c).to_string(), m.mass[static_cast<Eigen::Index>(c)]});
  return rows;
}

std::vector<CsvRow> function_rows(const DiscreteFunction& f) {
  std::vector<CsvRow> rows;
  for (Eigen::Index i = 0; i < f.size(); ++i) rows.push_back({static_cast<long long>(i), f[i]});
  return rows;
}

std::vector<CsvRow> fiber_metric_rows(const LevelGraph& g, const FiberMetric& metric) {
  std::vector<CsvRow> rows;
  for (std::size_t c = 0; c < metric.z.size(); ++c) {
    const auto& z = metric.z[c];
    CsvRow row{g.cell_address(c).to_string(), metric.mass[static_cast<Eigen::Index>(c)]};
    for (Eigen::Index i = 0; i < z.rows(); ++i)
      for (Eigen::Index j = i; j < z.cols(); ++j) row.emplace_back(z(i, j));
    for (Eigen::Index i = 0; i < metric.eigenvalues[c].size(); ++i)
      row.emplace_back(metric.eigenvalues[c][i]);
    rows.push_back(std::move(row));
  }
  return rows;
}

Json spectrum_json(const SpectrumResult& s, const SpectrumOptions& options) {
  Json j;
  j["measure"] = s.measure_id;
  j["eigenvalues"] = std::vector<double>(s.eigenvalues.data(), s.eigenvalues.data() + s.eigenvalues.size());
  j["tolerance"] = options.tol;
  j["max_residual"] = s.max_residual;
  j["solver"] = s.dense ? "dense" : "shift_invert_subspace";
  j["iterations"] = s.iterations;
  return j;
}

Json default_config() {
  return Json::parse(R"({
    "fractal": "sg",
    "level": 3,
    "seed": 0,
    "output": "fractalvec_out",
    "measure": {"kind": "kusuoka", "weights": [], "pool_random": 0},
    "tolerances": {"solver": 1e-9, "eigen": 1e-10, "max_iter": 200,
                   "dense_limit": 2000, "regularization": 1e-10},
    "spectrum": {"count": 10},
    "penergy": {"p": 4.0, "min_level": 2, "max_level": 6},
    "pde": {"problem": "divergence", "coefficient": "p_laplace", "p": 4.0,
            "constraint": "zero_mean", "damping": 1.0, "load": "random",
            "rho": 1.0, "eps": 0.1},
    "spde": {"p": 2.0, "T": 0.1, "dt": 0.001, "truncation": 20, "q_scale": 1.0,
             "paths": 8, "stride": 10, "u0": "eigenvector"},
    "diagnostics": {"probes": 200, "kusuoka_max_level": 7}
  })");
}

namespace {

const std::map<std::string, std::vector<std::string>>& enum_values() {
  static const std::map<std::string, std::vector<std::string>> values{
      {"/fractal", {"sg", "interval"}},
      {"/measure/kind", {"kusuoka", "self_similar", "dominant"}},
      {"/pde/problem", {"divergence", "nondivergence"}},
      {"/pde/coefficient", {"identity", "p_laplace", "strictly_monotone"}},
      {"/pde/constraint", {"zero_mean", "dirichlet"}},
      {"/pde/load", {"random", "step", "constant"}},
      {"/spde/u0", {"eigenvector", "zero", "random"}},
  };
  return values;
}

[[noreturn]] void config_error(const std::string& pointer, const std::string& what) {
  throw Error(ErrorKind::config, "config " + (pointer.empty() ? std::string("/") : pointer) + ": " + what);
}

void merge_checked(Json& target, const Json& user, const std::string& pointer) {
  if (!user.is_object()) config_error(pointer, "expected an object");
  for (const auto& [key, value] : user.items()) {
    const std::string here = pointer + "/" + key;
    if (!target.contains(key)) config_error(here, "unknown key");
    Json& slot = target[key];
    if (slot.is_object()) {
      merge_checked(slot, value, here);
      continue;
    }
    if (slot.is_number_integer() || slot.is_number_unsigned()) {
      if (!value.is_number_integer() && !value.is_number_unsigned())
        config_error(here, "expected an integer");
    } else if (slot.is_number_float()) {
      if (!value.is_number()) config_error(here, "expected a number");
    } else if (slot.is_string()) {
      if (!value.is_string()) config_error(here, "expected a string");
      const auto it = enum_values().find(here);
      if (it != enum_values().end()) {
        const auto& allowed = it->second;
        if (std::find(allowed.begin(), allowed.end(), value.get<std::string>()) == allowed.end())
          config_error(here, "value '" + value.get<std::string>() + "' not allowed");
      }
    } else if (slot.is_array()) {
      if (!value.is_array()) config_error(here, "expected an array");
      for (const auto& x : value)
        if (!x.is_number()) config_error(here, "expected an array of numbers");
    }
    slot = slot.is_number_float() ? Json(value.get<double>()) : value;
  }
}

void check_ranges(const Json& c) {
  if (c["level"].get<int>() < 0) config_error("/level", "must be >= 0");
  if (c["spectrum"]["count"].get<int>() < 1) config_error("/spectrum/count", "must be >= 1");
  for (const char* block : {"/penergy/p", "/pde/p", "/spde/p"})
    if (c[Json::json_pointer(block)].get<double>() < 2.0) config_error(block, "must be >= 2");
  if (c["spde"]["dt"].get<double>() <= 0.0) config_error("/spde/dt", "must be > 0");
  if (c["spde"]["T"].get<double>() < 0.0) config_error("/spde/T", "must be >= 0");
  if (c["spde"]["paths"].get<int>() < 2) config_error("/spde/paths", "must be >= 2");
  if (c["spde"]["truncation"].get<int>() < 1) config_error("/spde/truncation", "must be >= 1");
  if (c["spde"]["stride"].get<int>() < 1) config_error("/spde/stride", "must be >= 1");
  if (c["pde"]["rho"].get<double>() <= 0.0) config_error("/pde/rho", "must be > 0");
  const double damping = c["pde"]["damping"].get<double>();
  if (damping <= 0.0 || damping > 1.0) config_error("/pde/damping", "must lie in (0, 1]");
  if (c["penergy"]["min_level"].get<int>() > c["penergy"]["max_level"].get<int>())
    config_error("/penergy", "min_level exceeds max_level");
}

}  // namespace

Json resolve_config(const Json& user) {
  Json resolved = default_config();
  merge_checked(resolved, user, "");
  check_ranges(resolved);
  return resolved;
}

void apply_override(Json& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw Error(ErrorKind::config, "override '" + std::string(assignment) + "' is not key=value");
  std::string pointer;
  for (char ch : assignment.substr(0, eq)) pointer += ch == '.' ? '/' : ch;
  pointer = "/" + pointer;
  const std::string text(assignment.substr(eq + 1));
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  config[Json::json_pointer(pointer)] = value;
}

}  // namespace fv
