#include "doctest.h"

#include <cmath>

#include "fractalvec/error.hpp"
#include "fractalvec/spde.hpp"

using namespace fv;

namespace {

struct Setup {
  EnergyForm form{build_level(sierpinski_gasket(), 3)};
  CellMeasure mu = self_similar_measure(form.graph());
  SpectrumResult spec = spectrum(form, mu, 12);
};

}  // namespace

TEST_SUITE("spde") {

TEST_CASE("counter-based normals are deterministic and roughly standard") {
  CHECK(counter_normal(1, 2, 3, 4) == counter_normal(1, 2, 3, 4));
  CHECK(counter_normal(1, 2, 3, 4) != counter_normal(1, 2, 3, 5));
  double mean = 0, sq = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = counter_normal(7, 0, static_cast<std::uint64_t>(i), 0);
    mean += x;
    sq += x * x;
  }
  mean /= n;
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
}

TEST_CASE("noise model") {
  Setup s;
  const auto nz = inverse_square_noise(s.spec, 10, 2.0, 3);
  CHECK(nz.truncation() == 10);
  for (int k = 0; k < 10; ++k) CHECK(nz.q[k] == doctest::Approx(2.0 / std::pow(s.spec.eigenvalues[k + 1], 2)));
  CHECK(nz.tail_bound > 0.0);
  const Eigen::MatrixXd gram = nz.modes.transpose() * s.spec.weights.asDiagonal() * nz.modes;
  CHECK((gram - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(noise_increment(nz, 1e-3, 0, 5) == noise_increment(nz, 1e-3, 0, 5));
  // Truncation changes do not reshuffle the leading modes.
  const auto small = inverse_square_noise(s.spec, 4, 2.0, 3);
  const Eigen::VectorXd a = noise_increment(small, 1e-3, 1, 2);
  const Eigen::VectorXd b = noise_increment(nz, 1e-3, 1, 2);
  const Eigen::VectorXd proj = small.modes.transpose() * s.spec.weights.asDiagonal() * b;
  const Eigen::VectorXd proj_a = small.modes.transpose() * s.spec.weights.asDiagonal() * a;
  CHECK((proj - proj_a).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(inverse_square_noise(s.spec, 11, 1.0, 0), Error);
  CHECK(zero_noise(s.spec, 5).q.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero noise eigenmode decays at the implicit Euler rate") {
  Setup s;
  const auto nz = zero_noise(s.spec, 5);
  SpdeOptions o;
  o.T = 0.05;
  o.dt = 1e-3;
  const DiscreteFunction u0{3, s.spec.eigenvectors.col(1)};
  const auto r = simulate(s.form, MonotoneCoefficient::identity(), u0, nz, s.mu, o);
  const double lambda = s.spec.eigenvalues[1];
  for (std::size_t k = 0; k < r.times.size(); ++k)
    CHECK(r.l2_norm[k] == doctest::Approx(std::pow(1.0 + lambda * o.dt, -static_cast<double>(k))).epsilon(1e-9));
  for (std::size_t k = 1; k < r.l2_norm.size(); ++k) CHECK(r.l2_norm[k] <= r.l2_norm[k - 1]);
  CHECK(r.snapshot_steps.front() == 0);
  CHECK(r.snapshot_steps.back() == step_count(o.T, o.dt));
  CHECK(r.snapshots.size() == r.snapshot_steps.size());
}

TEST_CASE("dissipativity for p = 4 without noise") {
  Setup s;
  const auto nz = zero_noise(s.spec, 5);
  SpdeOptions o;
  o.T = 0.02;
  const DiscreteFunction u0{3, 3.0 * s.spec.eigenvectors.col(2) + s.spec.eigenvectors.col(4)};
  const auto r = simulate(s.form, MonotoneCoefficient::p_laplace(4.0), u0, nz, s.mu, o);
  for (std::size_t k = 1; k < r.l2_norm.size(); ++k) CHECK(r.l2_norm[k] <= r.l2_norm[k - 1] * (1 + 1e-12));
  for (const auto& st : r.steps) CHECK(st.residual < 1e-12);
}

TEST_CASE("uniqueness probe") {
  Setup s;
  const auto nz = inverse_square_noise(s.spec, 10, 1.0, 5);
  SpdeOptions o;
  o.T = 0.02;
  for (double p : {2.0, 4.0}) {
    const auto a = p == 2.0 ? MonotoneCoefficient::identity() : MonotoneCoefficient::p_laplace(p);
    const auto rep = uniqueness_probe(s.form, a, nz, s.mu, 2, 1, o);
    CHECK(rep.max_growth <= 1.0 + 1e-10);
    CHECK_FALSE(rep.flagged);
  }
}

TEST_CASE("moment statistics") {
  Setup s;
  SpdeOptions o;
  o.T = 0.01;
  const DiscreteFunction u0{3, s.spec.eigenvectors.col(1)};
  const auto zero = moment_stats(s.form, MonotoneCoefficient::identity(), u0, zero_noise(s.spec, 5), s.mu, o, 4, 2);
  for (double se : zero.se_l2sq) CHECK(se == 0.0);
  const auto nz = inverse_square_noise(s.spec, 10, 1.0, 8);
  const auto a = moment_stats(s.form, MonotoneCoefficient::identity(), u0, nz, s.mu, o, 4, 2);
  const auto b = moment_stats(s.form, MonotoneCoefficient::identity(), u0, nz, s.mu, o, 4, 2);
  CHECK(a.mean_l2sq == b.mean_l2sq);
  CHECK(a.times.size() == zero.times.size());
  CHECK_THROWS_AS(moment_stats(s.form, MonotoneCoefficient::identity(), u0, nz, s.mu, o, 1), Error);
}

}
