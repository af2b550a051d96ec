#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "fractalvec/error.hpp"
#include "fractalvec/io.hpp"
#include "helpers.hpp"

using namespace fv;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "fractalvec_unit_io";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("real formatting round-trips bit-exactly") {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(gen) * std::pow(10.0, static_cast<double>(i % 30) - 15.0);
    CHECK(std::stod(format_real(x)) == x);
  }
}

TEST_CASE("CSV round trip of measures and functions") {
  const EnergyForm form(build_level(sierpinski_gasket(), 3));
  const auto mu = kusuoka_measure(form);
  const auto path = scratch("measure.csv");
  write_csv(path, "00000000deadbeef", {"cell", "mass"}, measure_rows(form.graph(), mu));
  const auto t = read_csv(path);
  REQUIRE(t.comments.size() == 1);
  CHECK(t.comments[0] == "config_hash=00000000deadbeef");
  REQUIRE(t.rows.size() == form.graph().num_cells());
  for (std::size_t c = 0; c < t.rows.size(); ++c) {
    CHECK(t.rows[c][t.column("cell")] == form.graph().cell_address(c).to_string());
    CHECK(std::stod(t.rows[c][t.column("mass")]) == mu.mass[static_cast<Eigen::Index>(c)]);
  }

  std::mt19937_64 gen(2);
  const auto f = fvtest::random_function(gen, form.graph());
  write_csv(scratch("f.csv"), "h", {"vertex", "u"}, function_rows(f));
  const auto ft = read_csv(scratch("f.csv"));
  for (std::size_t i = 0; i < ft.rows.size(); ++i) {
    CHECK(std::stoll(ft.rows[i][0]) == static_cast<long long>(i));
    CHECK(std::stod(ft.rows[i][1]) == f[static_cast<Eigen::Index>(i)]);
  }
  CHECK_THROWS_AS(t.column("nope"), Error);
  CHECK_THROWS_AS(write_csv(scratch("bad.csv"), "h", {"a", "b"}, {{1.0}}), Error);
}

TEST_CASE("JSON round trip of graph and spectrum") {
  const auto g = build_level(sierpinski_gasket(), 2);
  write_json(scratch("graph.json"), "abc", level_graph_json(g));
  const auto j = read_json(scratch("graph.json"));
  CHECK(j["config_hash"] == "abc");
  CHECK(j["vertices"].size() == g.num_vertices());
  CHECK(j["edges"].size() == g.num_edges());
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    CHECK(j["edges"][e]["u"].get<std::size_t>() == g.edges()[e].u);
    CHECK(j["edges"][e]["v"].get<std::size_t>() == g.edges()[e].v);
  }
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    CHECK(j["vertices"][v]["address"] == g.vertex_label(v));
    CHECK(j["vertices"][v]["xy"][0].get<double>() == g.vertex_coords(v)[0]);
  }

  const EnergyForm form(build_level(sierpinski_gasket(), 2));
  const auto s = spectrum(form, kusuoka_measure(form), 5);
  write_json(scratch("spectrum.json"), "abc", spectrum_json(s, {}));
  const auto sj = read_json(scratch("spectrum.json"));
  for (Eigen::Index k = 0; k < 5; ++k) CHECK(sj["eigenvalues"][static_cast<std::size_t>(k)].get<double>() == s.eigenvalues[k]);
}

TEST_CASE("config validation") {
  const auto d = resolve_config(Json::object());
  CHECK(d == default_config());
  CHECK(d["pde"]["p"].get<double>() == 4.0);

  auto check_pointer = [](const Json& user, const std::string& pointer) {
    try {
      resolve_config(user);
      FAIL("accepted " << user.dump());
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::config);
      CHECK(std::string(e.what()).find(pointer) != std::string::npos);
    }
  };
  check_pointer(Json::parse(R"({"pde": {"bogus": 1}})"), "/pde/bogus");
  check_pointer(Json::parse(R"({"level": "three"})"), "/level");
  check_pointer(Json::parse(R"({"level": 2.5})"), "/level");
  check_pointer(Json::parse(R"({"measure": {"kind": "lebesgue"}})"), "/measure/kind");
  check_pointer(Json::parse(R"({"spde": {"dt": -1}})"), "/spde/dt");
  check_pointer(Json::parse(R"({"pde": 3})"), "/pde");

  const auto r = resolve_config(Json::parse(R"({"pde": {"p": 3}})"));
  CHECK(r["pde"]["p"].is_number_float());

  Json user = Json::object();
  apply_override(user, "spde.dt=0.01");
  apply_override(user, "pde.constraint=dirichlet");
  const auto o = resolve_config(user);
  CHECK(o["spde"]["dt"].get<double>() == 0.01);
  CHECK(o["pde"]["constraint"] == "dirichlet");
  CHECK_THROWS_AS(apply_override(user, "novalue"), Error);
}

TEST_CASE("config hash is stable and sensitive") {
  const auto a = resolve_config(Json::object());
  CHECK(config_hash(a) == config_hash(default_config()));
  CHECK(config_hash(a).size() == 16);
  const auto b = resolve_config(Json::parse(R"({"seed": 1})"));
  CHECK(config_hash(a) != config_hash(b));
  // Re-reading the written config reproduces the hash.
  const auto path = scratch("resolved.json");
  std::ofstream(path) << b.dump(2);
  CHECK(config_hash(read_json(path)) == config_hash(b));
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

}
