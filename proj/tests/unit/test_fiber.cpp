#include "doctest.h"

#include <random>

#include "fractalvec/error.hpp"
#include "fractalvec/fiber.hpp"
#include "helpers.hpp"

using namespace fv;

TEST_SUITE("fiber") {

TEST_CASE("Kusuoka matrices: trace one and martingale consistency") {
  const auto sg = sierpinski_gasket();
  std::vector<KusuokaMatrices> k;
  for (int n = 1; n <= 6; ++n) k.push_back(kusuoka_matrices(sg, n));
  for (std::size_t i = 0; i < k.size(); ++i) {
    CHECK(k[i].max_trace_error < 1e-13);
    CHECK(k[i].min_gram_eigenvalue > -1e-13);
    if (i + 1 < k.size()) CHECK(martingale_error(k[i].metric, k[i + 1].metric, 3) < 1e-12);
  }
  for (std::size_t i = 2; i < k.size(); ++i)
    CHECK(k[i].smaller_eigenvalue.median < k[i - 1].smaller_eigenvalue.median);
}

TEST_CASE("fiber pairing of coordinate gradients is the identity") {
  const EnergyForm form(build_level(sierpinski_gasket(), 3));
  const auto phi = harmonic_coordinates(form);
  const auto& g = form.graph();
  const auto gram = cell_gram(g, phi);
  const auto frame = fiber_frame(g, phi);
  const auto ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(g.num_cells()));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      auto vi = VectorField::zero(g), vj = VectorField::zero(g);
      vi.add_cell_term(g, ones, phi[static_cast<std::size_t>(i)]);
      vj.add_cell_term(g, ones, phi[static_cast<std::size_t>(j)]);
      const double pair = fiber_inner(gram, to_fiber_section(g, frame, vi), to_fiber_section(g, frame, vj));
      CHECK(pair == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
    }
}

TEST_CASE("direct integral check") {
  const EnergyForm form(build_level(sierpinski_gasket(), 3));
  const auto phi = harmonic_coordinates(form);
  std::mt19937_64 gen(21);
  for (int t = 0; t < 20; ++t) {
    const auto v = fvtest::random_cell_field(gen, form.graph(), 2);
    const auto w = fvtest::random_cell_field(gen, form.graph(), 2);
    const auto r = direct_integral_check(form, phi, v, w);
    CHECK(r.discrepancy < 1e-10);
  }
  const auto v = fvtest::random_cell_field(gen, form.graph(), 1);
  const auto z = direct_integral_check(form, phi, VectorField::zero(form.graph()), v);
  CHECK(z.global == 0.0);
  CHECK(std::abs(z.fiberwise) < 1e-14);

  auto edge = VectorField::zero(form.graph());
  edge.add_term({fvtest::normal_vector(gen, static_cast<Eigen::Index>(form.graph().num_edges())), phi[0]});
  CHECK_THROWS_AS(direct_integral_check(form, phi, edge, v), Error);
}

TEST_CASE("fiber metric rejects zero-mass cells") {
  const auto g = build_level(sierpinski_gasket(), 2);
  const EnergyForm form(build_level(sierpinski_gasket(), 2));
  const auto gram = cell_gram(g, harmonic_coordinates(form));
  auto mu = self_similar_measure(g);
  mu.mass[3] = 0.0;
  CHECK_THROWS_AS(fiber_metric(gram, mu), Error);
}

}
