#include "doctest.h"

#include <random>

#include "fractalvec/energy.hpp"
#include "fractalvec/error.hpp"
#include "helpers.hpp"

using namespace fv;

TEST_SUITE("energy") {

TEST_CASE("energy examples") {
  const EnergyForm f0(build_level(sierpinski_gasket(), 0));
  CHECK(energy(f0, DiscreteFunction::constant(0, 3, 4.0)) == 0.0);
  const DiscreteFunction e1{0, Eigen::Vector3d(1.0, 0.0, 0.0)};
  CHECK(energy(f0, e1) == doctest::Approx(2.0).epsilon(1e-15));

  const auto g0 = build_level(sierpinski_gasket(), 0);
  const EnergyForm f1(build_level(sierpinski_gasket(), 1));
  const auto h = harmonic_extension(g0, f1.graph(), e1);
  CHECK(energy(f1, h) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("harmonic extension rule on SG: 2/5, 2/5, 1/5") {
  const auto g0 = build_level(sierpinski_gasket(), 0);
  const auto g1 = build_level(sierpinski_gasket(), 1);
  const auto h = harmonic_extension(g0, g1, {0, Eigen::Vector3d(1.0, 0.0, 0.0)});
  const auto map = embed_vertices(g0, g1);
  std::vector<double> mids;
  for (std::size_t v = 0; v < g1.num_vertices(); ++v)
    if (std::find(map.begin(), map.end(), v) == map.end()) mids.push_back(h[static_cast<Eigen::Index>(v)]);
  std::sort(mids.begin(), mids.end());
  CHECK(mids[0] == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(mids[1] == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(mids[2] == doctest::Approx(0.4).epsilon(1e-14));

  const auto rule = compute_extension_rule(sierpinski_gasket());
  CHECK(rule.weights.rows() == 3);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(rule.weights.row(i).sum() == doctest::Approx(1.0));
}

TEST_CASE("interval extension is linear interpolation") {
  const auto i0 = build_level(unit_interval(), 0);
  const auto h = harmonic_extension(i0, {0, Eigen::Vector2d(0.0, 1.0)});
  REQUIRE(h.size() == 3);
  double mid = -1;
  for (Eigen::Index v = 0; v < 3; ++v)
    if (h[v] != 0.0 && h[v] != 1.0) mid = h[v];
  CHECK(mid == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("constant extends to constant") {
  const auto g2 = build_level(sierpinski_gasket(), 2);
  const auto h = harmonic_extension(g2, DiscreteFunction::constant(2, 15, -1.5));
  CHECK((h.values.array() + 1.5).abs().maxCoeff() < 1e-15);
}

TEST_CASE("solve_dirichlet agrees with repeated extension") {
  const auto sg = sierpinski_gasket();
  DiscreteFunction f{0, Eigen::Vector3d(1.0, 0.0, 0.0)};
  for (int m = 1; m <= 4; ++m) f = harmonic_extension(build_level(sg, m - 1), build_level(sg, m), f);
  const EnergyForm form(build_level(sg, 4));
  const auto b = form.graph().boundary_vertices();
  const auto sol = solve_dirichlet(form, {{b[0], 1.0}, {b[1], 0.0}, {b[2], 0.0}});
  CHECK((sol.u.values - f.values).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(sol.residual < 1e-10);

  const auto c = solve_dirichlet(form, {{b[0], 3.0}, {b[1], 3.0}, {b[2], 3.0}});
  CHECK((c.u.values.array() - 3.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("interval Dirichlet ramp") {
  const EnergyForm form(build_level(unit_interval(), 3));
  const auto b = form.graph().boundary_vertices();
  const auto sol = solve_dirichlet(form, {{b[0], 0.0}, {b[1], 1.0}});
  for (std::size_t v = 0; v < form.graph().num_vertices(); ++v)
    CHECK(sol.u[static_cast<Eigen::Index>(v)] == doctest::Approx(form.graph().vertex_coords(v)[0]).epsilon(1e-13));
  CHECK_THROWS_AS(solve_dirichlet(form, {}), Error);
}

TEST_CASE("energy measure totals and constants") {
  const EnergyForm form(build_level(sierpinski_gasket(), 3));
  std::mt19937_64 gen(5);
  for (int t = 0; t < 25; ++t) {
    const auto f = fvtest::random_function(gen, form.graph());
    const double e = energy(form, f);
    CHECK(std::abs(energy_measure(form, f, f).total() - e) <= 1e-12 * std::max(1.0, e));
  }
  const auto c = DiscreteFunction::constant(3, 42, 1.0);
  const auto f = fvtest::random_function(gen, form.graph());
  CHECK(energy_measure(form, c, f).cells.mass.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("harmonic coordinates are energy orthonormal with zero boundary mean") {
  const EnergyForm form(build_level(sierpinski_gasket(), 3));
  const auto phi = harmonic_coordinates(form);
  REQUIRE(phi.size() == 2);
  CHECK(energy(form, phi[0]) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(energy(form, phi[1]) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(energy(form, phi[0], phi[1])) < 1e-12);
  const auto b = form.graph().boundary_vertices();
  for (const auto& p : phi) CHECK(std::abs(p[b[0]] + p[b[1]] + p[b[2]]) < 1e-12);

  // Boundary data: one antisymmetric (0, 1, -1) and one symmetric (2, -1, -1) direction.
  const Eigen::MatrixXd data = harmonic_coordinate_boundary_data(sierpinski_gasket());
  REQUIRE(data.rows() == 2);
  bool anti = false, sym = false;
  for (Eigen::Index i = 0; i < 2; ++i) {
    const Eigen::Vector3d d = data.row(i).transpose();
    anti = anti || (std::abs(d[0]) < 1e-12 && std::abs(d[1] + d[2]) < 1e-12);
    sym = sym || (std::abs(d[1] - d[2]) < 1e-12 && std::abs(d[0] + 2 * d[1]) < 1e-12);
  }
  CHECK((anti || sym));
  CHECK(coordinates_injective(phi));

  const EnergyForm interval(build_level(unit_interval(), 3));
  CHECK(harmonic_coordinates(interval).size() == 1);
}

TEST_CASE("coordinates are injective up to level 7") {
  for (int m = 0; m <= 7; ++m) {
    const EnergyForm form(build_level(sierpinski_gasket(), m));
    CHECK(coordinates_injective(harmonic_coordinates(form)));
  }
}

TEST_CASE("Kusuoka measure") {
  const EnergyForm f1(build_level(sierpinski_gasket(), 1));
  const auto k1 = kusuoka_measure(f1);
  CHECK(k1.total() == doctest::Approx(2.0).epsilon(1e-14));
  for (Eigen::Index c = 0; c < 3; ++c) CHECK(k1.mass[c] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

  const EnergyForm f3(build_level(sierpinski_gasket(), 3));
  const EnergyForm f4(build_level(sierpinski_gasket(), 4));
  const auto k3 = kusuoka_measure(f3), k4 = kusuoka_measure(f4);
  CHECK(k3.nonnegative);
  CHECK(k3.mass.minCoeff() > 0.0);
  for (Eigen::Index c = 0; c < k3.mass.size(); ++c)
    CHECK(std::abs(k4.mass.segment(3 * c, 3).sum() - k3.mass[c]) < 1e-12);
}

TEST_CASE("energy-dominant measure") {
  const EnergyForm form(build_level(sierpinski_gasket(), 3));
  const auto phi = harmonic_coordinates(form);
  const auto k = kusuoka_measure(form, phi);
  const auto d = general_energy_dominant_measure(form, phi);
  const Eigen::VectorXd expect =
      0.5 * energy_measure(form, phi[0], phi[0]).cells.mass + 0.25 * energy_measure(form, phi[1], phi[1]).cells.mass;
  CHECK((d.measure.mass - expect).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(d.measure.total() == doctest::Approx(0.75).epsilon(1e-13));
  CHECK(k.total() == doctest::Approx(2.0));

  std::mt19937_64 gen(3);
  const auto f = fvtest::random_function(gen, form.graph());
  const auto single = general_energy_dominant_measure(form, {f});
  CHECK(single.measure.total() == doctest::Approx(0.5).epsilon(1e-13));

  std::vector<DiscreteFunction> pool{DiscreteFunction::constant(3, 42, 1.0)};
  for (int i = 0; i < 4; ++i) pool.push_back(fvtest::random_function(gen, form.graph()));
  const auto mixed = general_energy_dominant_measure(form, pool);
  CHECK(mixed.skipped == std::vector<std::size_t>{0});
  REQUIRE(mixed.used.size() == 4);
  for (std::size_t n = 0; n < mixed.used.size(); ++n) {
    const auto& fn = pool[mixed.used[n]];
    const Eigen::VectorXd gamma = energy_measure(form, fn, fn).cells.mass / energy(form, fn);
    const double bound = std::pow(2.0, static_cast<double>(n + 1));
    for (Eigen::Index c = 0; c < gamma.size(); ++c)
      CHECK(gamma[c] <= bound * mixed.measure.mass[c] * (1 + 1e-12));
  }
}

TEST_CASE("self-similar measure") {
  const auto g = build_level(sierpinski_gasket(), 2);
  const auto eq = self_similar_measure(g);
  for (Eigen::Index c = 0; c < eq.mass.size(); ++c) CHECK(eq.mass[c] == doctest::Approx(1.0 / 9.0));
  CHECK(self_similar_measure(build_level(sierpinski_gasket(), 0)).total() == doctest::Approx(1.0));
  const auto w = self_similar_measure(g, {0.5, 0.25, 0.25});
  CHECK(w.mass[static_cast<Eigen::Index>(g.cell_index(CellAddress::parse("12")))] == doctest::Approx(0.125));
  CHECK_THROWS_AS(self_similar_measure(g, {0.5, 0.5}), Error);
  CHECK_THROWS_AS(self_similar_measure(g, {0.5, 0.6, -0.1}), Error);

  const auto vw = vertex_weights(g, eq);
  CHECK(vw.sum() == doctest::Approx(1.0));
}

TEST_CASE("level mismatch") {
  const EnergyForm form(build_level(sierpinski_gasket(), 2));
  CHECK_THROWS_AS(energy(form, DiscreteFunction::constant(1, 6, 1.0)), Error);
}

}
