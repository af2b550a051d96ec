#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "fractalvec/error.hpp"
#include "fractalvec/spectrum.hpp"
#include "helpers.hpp"

using namespace fv;

TEST_SUITE("spectrum") {

TEST_CASE("Neumann kernel and Rayleigh quotients") {
  const EnergyForm form(build_level(sierpinski_gasket(), 3));
  const auto mu = kusuoka_measure(form);
  const auto s = spectrum(form, mu, 8);
  CHECK(std::abs(s.eigenvalues[0]) < 1e-10);
  const Eigen::VectorXd e0 = s.eigenvectors.col(0);
  CHECK((e0.array() - e0[0]).abs().maxCoeff() < 1e-10);
  for (Eigen::Index k = 1; k < s.eigenvalues.size(); ++k) {
    CHECK(s.eigenvalues[k] >= s.eigenvalues[k - 1]);
    CHECK(rayleigh_quotient(form, s.weights, s.eigenvectors.col(k)) ==
          doctest::Approx(s.eigenvalues[k]).epsilon(1e-9));
  }
  const Eigen::MatrixXd gram = s.eigenvectors.transpose() * s.weights.asDiagonal() * s.eigenvectors;
  CHECK((gram - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(s.max_residual < 1e-10);
}

TEST_CASE("interval spectrum matches the path-graph cosine formula") {
  const int m = 4;
  const EnergyForm form(build_level(unit_interval(), m));
  const auto mu = self_similar_measure(form.graph());
  const auto s = spectrum(form, mu, 17);
  // K = 2^m * path Laplacian, W = h * diag(1/2, 1, ..., 1, 1/2) with h = 2^-m.
  const double n = std::pow(2.0, m), h = 1.0 / n;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(17, 17);
  Eigen::VectorXd w = Eigen::VectorXd::Constant(17, h);
  w[0] = w[16] = h / 2;
  for (int i = 0; i < 16; ++i) {
    k(i, i) += n;
    k(i + 1, i + 1) += n;
    k(i, i + 1) -= n;
    k(i + 1, i) -= n;
  }
  // Mode cos(pi j x) is an exact eigenvector of the lumped path operator.
  for (int j = 0; j <= 16; ++j) {
    Eigen::VectorXd v(17);
    for (int i = 0; i <= 16; ++i) v[i] = std::cos(std::numbers::pi * j * i / 16.0);
    const double lambda = (4.0 * n / h) * std::pow(std::sin(std::numbers::pi * j / 32.0), 2);
    CHECK((k * v - lambda * w.cwiseProduct(v)).cwiseAbs().maxCoeff() < 1e-8 * std::max(1.0, lambda));
    CHECK(s.eigenvalues[j] == doctest::Approx(lambda).epsilon(1e-10));
  }
}

TEST_CASE("sparse subspace iteration agrees with the dense solver") {
  const EnergyForm form(build_level(sierpinski_gasket(), 4));
  const auto mu = self_similar_measure(form.graph());
  SpectrumOptions dense, sparse;
  sparse.dense_limit = 10;
  const auto a = spectrum(form, mu, 6, dense);
  const auto b = spectrum(form, mu, 6, sparse);
  CHECK(a.dense);
  CHECK_FALSE(b.dense);
  for (Eigen::Index k = 0; k < 6; ++k)
    CHECK(std::abs(a.eigenvalues[k] - b.eigenvalues[k]) < 1e-8 * std::max(1.0, a.eigenvalues[k]));
  CHECK(a.eigenvalues[1] == doctest::Approx(27.0752).epsilon(1e-5));
  CHECK(b.max_residual < 1e-9);
}

TEST_CASE("k larger than the dimension") {
  const EnergyForm form(build_level(sierpinski_gasket(), 1));
  CHECK_THROWS_AS(spectrum(form, kusuoka_measure(form), 7), Error);
}

TEST_CASE("Poincare constants") {
  const EnergyForm form(build_level(sierpinski_gasket(), 3));
  const auto mu = kusuoka_measure(form);
  const auto p2 = poincare_constant(form, mu, 2.0);
  CHECK(std::abs(p2.best_constant * p2.lambda1 - 1.0) < 1e-12);
  CHECK(p2.sampled_lower <= p2.certified_upper * (1 + 1e-12));

  std::mt19937_64 gen(31);
  const auto w = vertex_weights(form.graph(), mu);
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd f = fvtest::normal_vector(gen, static_cast<Eigen::Index>(form.graph().num_vertices()));
    f.array() -= f.dot(w) / w.sum();
    CHECK(f.cwiseAbs2().dot(w) <= p2.best_constant * energy(form, {3, f}) * (1 + 1e-12));
  }

  for (double p : {3.0, 4.0}) {
    const auto r = poincare_constant(form, mu, p);
    CHECK(r.sampled_lower <= r.certified_upper);
    CHECK(r.sampled_lower > 0.0);
  }
  CHECK_THROWS_AS(poincare_constant(form, mu, 1.0), Error);
}

}
