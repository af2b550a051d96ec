#include "doctest.h"

#include <cmath>
#include <random>

#include "fractalvec/error.hpp"
#include "fractalvec/fields.hpp"
#include "helpers.hpp"

using namespace fv;

TEST_SUITE("fields") {

TEST_CASE("gradient norm equals energy") {
  const EnergyForm form(build_level(sierpinski_gasket(), 4));
  std::mt19937_64 gen(11);
  for (int t = 0; t < 20; ++t) {
    const auto f = fvtest::random_function(gen, form.graph());
    const double n = field_norm(form, gradient(form.graph(), f));
    CHECK(std::abs(n * n - energy(form, f)) <= 1e-12 * std::max(1.0, energy(form, f)));
  }
  const auto c = gradient(form.graph(), DiscreteFunction::constant(4, 123, 2.0));
  CHECK(c.edge_values(form.graph()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("disjoint supports give zero pairing") {
  const EnergyForm form(build_level(sierpinski_gasket(), 3));
  const auto& g = form.graph();
  std::mt19937_64 gen(2);
  const auto f = fvtest::random_function(gen, g);
  const auto n = static_cast<Eigen::Index>(g.num_cells());
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n), b = Eigen::VectorXd::Zero(n);
  a.head(n / 2).setOnes();
  b.tail(n - n / 2).setOnes();
  auto v = VectorField::zero(g), w = VectorField::zero(g);
  v.add_cell_term(g, a, f);
  w.add_cell_term(g, b, f);
  CHECK(field_inner(form, v, w) == 0.0);
}

TEST_CASE("field inner product is positive semidefinite, measure totals match") {
  const EnergyForm form(build_level(sierpinski_gasket(), 3));
  std::mt19937_64 gen(7);
  for (int t = 0; t < 50; ++t) {
    const auto v = fvtest::random_cell_field(gen, form.graph(), 3);
    const double vv = field_inner(form, v, v);
    CHECK(vv >= -1e-13);
    const auto gamma = weighted_energy_measure(form, v);
    CHECK(gamma.mass.minCoeff() >= -1e-13);
    CHECK(std::abs(gamma.total() - vv) <= 1e-12 * std::max(1.0, vv));

    const auto w = fvtest::random_cell_field(gen, form.graph(), 2);
    const auto vw = weighted_energy_measure(form, v, w).mass;
    const auto ww = weighted_energy_measure(form, w).mass;
    for (Eigen::Index c = 0; c < vw.size(); ++c)
      CHECK(vw[c] * vw[c] <= gamma.mass[c] * ww[c] * (1 + 1e-12) + 1e-24);
  }
}

TEST_CASE("weighted energy measure of a gradient is the energy measure") {
  const EnergyForm form(build_level(sierpinski_gasket(), 3));
  std::mt19937_64 gen(8);
  const auto f = fvtest::random_function(gen, form.graph());
  const auto a = weighted_energy_measure(form, gradient(form.graph(), f)).mass;
  const auto b = energy_measure(form, f, f).cells.mass;
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("derivation rule for the left action") {
  for (int m = 1; m <= 4; ++m) {
    const EnergyForm form(build_level(sierpinski_gasket(), m));
    const auto& g = form.graph();
    std::mt19937_64 gen(static_cast<std::uint64_t>(m));
    for (int t = 0; t < 10; ++t) {
      const auto f = fvtest::random_function(gen, g), h = fvtest::random_function(gen, g);
      const DiscreteFunction fh{m, f.values.cwiseProduct(h.values)};
      const auto diff = gradient(g, fh) + (-1.0) * (multiply(g, h, gradient(g, f)) + multiply(g, f, gradient(g, h)));
      const auto test = fvtest::random_cell_field(gen, g, 2);
      CHECK(std::abs(field_inner(form, diff, test)) <= 1e-10 * field_norm(form, test));
    }
  }
}

TEST_CASE("divergence: adjointness and Gauss-Green for harmonic functions") {
  const EnergyForm form(build_level(sierpinski_gasket(), 3));
  const auto& g = form.graph();
  std::mt19937_64 gen(4);
  const auto v = fvtest::random_cell_field(gen, g, 2);
  const auto u = fvtest::random_function(gen, g);
  CHECK(std::abs(divergence(form, v).dot(u.values) + field_inner(form, v, gradient(g, u))) < 1e-10);

  const Eigen::MatrixXd lhs = Eigen::MatrixXd(divergence_matrix(g));
  const Eigen::MatrixXd d = Eigen::MatrixXd(gradient_matrix(g));
  CHECK((lhs + form.conductance() * d.transpose()).cwiseAbs().maxCoeff() == 0.0);

  const auto phi = harmonic_coordinates(form);
  const auto div = divergence(form, gradient(g, phi[0]));
  Eigen::VectorXd interior = div;
  for (auto b : g.boundary_vertices()) interior[static_cast<Eigen::Index>(b)] = 0.0;
  CHECK(interior.cwiseAbs().maxCoeff() < 1e-12);

  // |div v (u)| <= |v|_H E(u)^{1/2}
  for (int t = 0; t < 20; ++t) {
    const auto w = fvtest::random_cell_field(gen, g, 2);
    const auto f = fvtest::random_function(gen, g);
    CHECK(std::abs(divergence(form, w).dot(f.values)) <= field_norm(form, w) * std::sqrt(energy(form, f)) * (1 + 1e-12));
  }
}

TEST_CASE("divergence density represents the functional") {
  const EnergyForm form(build_level(sierpinski_gasket(), 3));
  const auto mu = kusuoka_measure(form);
  std::mt19937_64 gen(12);
  const auto v = fvtest::random_cell_field(gen, form.graph(), 2);
  const auto rho = divergence_density(form, v, mu);
  const auto w = vertex_weights(form.graph(), mu);
  const auto u = fvtest::random_function(gen, form.graph());
  CHECK(std::abs(rho.density.values.cwiseProduct(w).dot(u.values) - divergence(form, v).dot(u.values)) < 1e-10);
}

TEST_CASE("Lp field norms") {
  const EnergyForm form(build_level(sierpinski_gasket(), 3));
  const auto mu = kusuoka_measure(form);
  std::mt19937_64 gen(13);
  for (int t = 0; t < 30; ++t) {
    const auto v = fvtest::random_cell_field(gen, form.graph(), 2);
    CHECK(lp_field_norm(form, v, mu, 2.0).value == doctest::Approx(field_norm(form, v)).epsilon(1e-12));
    const auto f = fvtest::random_function(gen, form.graph());
    const double p = 3.0;
    CHECK(lp_field_norm(form, multiply(form.graph(), f, v), mu, p).value <=
          f.values.cwiseAbs().maxCoeff() * lp_field_norm(form, v, mu, p).value * (1 + 1e-12));
    CHECK(lp_field_norm(form, v, mu, INFINITY).value >= 0.0);
  }
  CHECK_THROWS_AS(lp_field_norm(form, VectorField::zero(form.graph()), mu, 0.5), Error);

  CellMeasure holes = mu;
  holes.mass[0] = 0.0;
  auto v = VectorField::zero(form.graph());
  v.add_cell_term(form.graph(), Eigen::VectorXd::Ones(static_cast<Eigen::Index>(form.graph().num_cells())),
                  harmonic_coordinates(form)[0]);
  const auto n = lp_field_norm(form, v, holes, 4.0);
  CHECK(n.singular);
  CHECK(std::isinf(n.value));
}

TEST_CASE("p-energy") {
  const EnergyForm form(build_level(sierpinski_gasket(), 3));
  const auto mu = kusuoka_measure(form);
  std::mt19937_64 gen(14);
  for (int t = 0; t < 100; ++t) {
    const auto f = fvtest::random_function(gen, form.graph()), h = fvtest::random_function(gen, form.graph());
    if (t < 10) CHECK(p_energy(form, f, mu, 2.0) == doctest::Approx(energy(form, f)).epsilon(1e-12));
    const double p = 4.0;
    const double ef = p_energy(form, f, mu, p), eh = p_energy(form, h, mu, p);
    CHECK(p_energy(form, f, f, mu, p) == doctest::Approx(ef).epsilon(1e-12));
    CHECK(std::abs(p_energy(form, f, h, mu, p)) <= std::pow(ef, (p - 1) / p) * std::pow(eh, 1 / p) * (1 + 1e-12));
  }
  const auto f = fvtest::random_function(gen, form.graph()), h = fvtest::random_function(gen, form.graph());
  for (double p : {2.0, 3.0, 4.0, 6.0}) {
    const double t = 1e-5;
    const DiscreteFunction fp{3, f.values + t * h.values}, fm{3, f.values - t * h.values};
    const double fd = (p_energy(form, fp, mu, p) - p_energy(form, fm, mu, p)) / (2 * t * p);
    CHECK(std::abs(fd - p_energy(form, f, h, mu, p)) <= 1e-6 * std::abs(fd));
    CHECK(std::abs(p_energy_gradient(form, f, mu, p).dot(h.values) - p * p_energy(form, f, h, mu, p)) <
          1e-9 * std::abs(fd * p));
  }
  CHECK_THROWS_AS(p_energy(form, f, mu, 1.5), Error);
}

TEST_CASE("cache and algebra") {
  const EnergyForm form(build_level(sierpinski_gasket(), 2));
  std::mt19937_64 gen(15);
  auto v = fvtest::random_cell_field(gen, form.graph(), 2);
  const double before = field_norm(form, v);
  v.build_cache(form.graph());
  REQUIRE(v.cache().has_value());
  CHECK(field_norm(form, v) == doctest::Approx(before).epsilon(1e-14));
  CHECK(field_norm(form, 2.0 * v) == doctest::Approx(2 * before).epsilon(1e-14));
  CHECK(v.cell_granular(form.graph()));
  const auto m = multiply(form.graph(), fvtest::random_function(gen, form.graph()), v);
  CHECK_FALSE(m.cell_granular(form.graph()));
}

}
