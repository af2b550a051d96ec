#include "fractalvec/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "fractalvec/error.hpp"
#include "fractalvec/fields.hpp"

namespace fv {

namespace {

void normalize_signs(Eigen::MatrixXd& v) {
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    Eigen::Index arg = 0;
    v.col(j).cwiseAbs().maxCoeff(&arg);
    if (v(arg, j) < 0.0) v.col(j) *= -1.0;
  }
}

double pair_residual(const SparseMatrix& k, const Eigen::VectorXd& w, double lambda,
                     const Eigen::VectorXd& v) {
  const Eigen::VectorXd r = k * v - lambda * w.cwiseProduct(v);
  return r.cwiseQuotient(w.cwiseSqrt()).norm() / std::max(1.0, std::abs(lambda));
}

void dense_solve(const SparseMatrix& k, const Eigen::VectorXd& w, std::size_t count,
                 SpectrumResult& out) {
  const Eigen::VectorXd s = w.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd a = s.asDiagonal() * Eigen::MatrixXd(k) * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  require(es.info() == Eigen::Success, ErrorKind::non_convergence, "dense eigensolver failed");
  const auto c = static_cast<Eigen::Index>(count);
  out.eigenvalues = es.eigenvalues().head(c);
  out.eigenvectors = s.asDiagonal() * es.eigenvectors().leftCols(c);
}

void subspace_iteration(const SparseMatrix& k, const Eigen::VectorXd& w, std::size_t count,
                        const SpectrumOptions& opt, SpectrumResult& out) {
  const Eigen::Index n = k.rows();
  const auto c = static_cast<Eigen::Index>(count);
  const Eigen::Index block = std::min<Eigen::Index>(n, c + std::max<Eigen::Index>(10, c));
  const double shift = 1e-6 * k.diagonal().sum() / w.sum();

  SparseMatrix shifted = k;
  for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) += shift * w[i];
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted);
  require(ldlt.info() == Eigen::Success, ErrorKind::singular_system,
          "shifted stiffness factorization failed");

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(n, block);
  for (Eigen::Index j = 0; j < block; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = normal(rng);

  for (int it = 1; it <= opt.max_iter; ++it) {
    Eigen::MatrixXd y = ldlt.solve(w.asDiagonal() * x);
    // W-orthonormalize, then Rayleigh-Ritz on the block.
    const Eigen::MatrixXd b = y.transpose() * w.asDiagonal() * y;
    Eigen::LLT<Eigen::MatrixXd> llt(b);
    require(llt.info() == Eigen::Success, ErrorKind::non_convergence,
            "subspace basis lost rank");
    y = llt.matrixU().solve<Eigen::OnTheRight>(y);
    const Eigen::MatrixXd a = y.transpose() * (k * y);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    x = y * es.eigenvectors();
    out.eigenvalues = es.eigenvalues().head(c);
    out.iterations = it;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < c; ++j)
      worst = std::max(worst, pair_residual(k, w, out.eigenvalues[j], x.col(j)));
    if (worst <= opt.tol) {
      out.eigenvectors = x.leftCols(c);
      return;
    }
  }
  throw Error(ErrorKind::non_convergence, "subspace iteration did not reach the residual tolerance");
}

}  // namespace

Laplacian laplacian(const EnergyForm& form, const CellMeasure& measure) {
  Laplacian l{form.matrix(), vertex_weights(form.graph(), measure)};
  require((l.weights.array() > 0.0).all(), ErrorKind::invalid_argument,
          "Laplacian needs positive vertex weights");
  return l;
}

SpectrumResult spectrum(const EnergyForm& form, const CellMeasure& measure, std::size_t k,
                        const SpectrumOptions& options) {
  const Laplacian lap = laplacian(form, measure);
  const std::size_t n = form.graph().num_vertices();
  require(k >= 1 && k <= n, ErrorKind::invalid_argument,
          "requested " + std::to_string(k) + " eigenpairs of a " + std::to_string(n) +
              "-dimensional problem");
  SpectrumResult out;
  out.weights = lap.weights;
  out.measure_id = measure.id;
  out.dense = n <= options.dense_limit;
  if (out.dense)
    dense_solve(lap.stiffness, lap.weights, k, out);
  else
    subspace_iteration(lap.stiffness, lap.weights, k, options, out);
  normalize_signs(out.eigenvectors);
  for (Eigen::Index j = 0; j < out.eigenvectors.cols(); ++j)
    out.max_residual = std::max(out.max_residual, pair_residual(lap.stiffness, lap.weights,
                                                                out.eigenvalues[j],
                                                                out.eigenvectors.col(j)));
  return out;
}

double rayleigh_quotient(const EnergyForm& form, const Eigen::VectorXd& weights,
                         const Eigen::VectorXd& v) {
  return v.dot(form.matrix() * v) / v.dot(weights.cwiseProduct(v));
}

double max_resistance_to_root(const EnergyForm& form) {
  const Eigen::Index n = form.matrix().rows();
  if (n <= 1) return 0.0;
  // Grounding vertex 0 leaves an SPD system whose inverse diagonal holds R_eff(x, 0).
  const SparseMatrix grounded = form.matrix().bottomRightCorner(n - 1, n - 1);
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(grounded);
  require(ldlt.info() == Eigen::Success, ErrorKind::singular_system,
          "grounded Laplacian is singular (disconnected graph?)");
  double best = 0.0;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n - 1);
  for (Eigen::Index i = 0; i < n - 1; ++i) {
    e[i] = 1.0;
    best = std::max(best, ldlt.solve(e)[i]);
    e[i] = 0.0;
  }
  return best;
}

double poincare_ratio(const EnergyForm& form, const CellMeasure& measure, double p,
                      const Eigen::VectorXd& f) {
  const Eigen::VectorXd w = vertex_weights(form.graph(), measure);
  const Eigen::VectorXd g = f.array() - w.dot(f) / w.sum();
  const double num = w.dot(g.cwiseAbs().array().pow(p).matrix());
  const double den = p_energy(form, DiscreteFunction(form.level(), g), measure, p);
  return num / den;
}

std::vector<double> sample_poincare_ratios(const EnergyForm& form, const CellMeasure& measure,
                                           double p, int trials, int steps, std::uint64_t seed) {
  const Eigen::VectorXd w = vertex_weights(form.graph(), measure);
  const Eigen::Index n = w.size();
  const int level = form.level();
  auto project = [&](Eigen::VectorXd& v) { v -= w * (w.dot(v) / w.squaredNorm()); };
  auto center = [&](Eigen::VectorXd& v) { v.array() -= w.dot(v) / w.sum(); };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> ratios;
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd f(n);
    for (Eigen::Index i = 0; i < n; ++i) f[i] = normal(rng);
    center(f);
    f /= f.norm();
    double ratio = poincare_ratio(form, measure, p, f);
    double step = 0.1;
    for (int s = 0; s < steps && step > 1e-12; ++s) {
      const double num = w.dot(f.cwiseAbs().array().pow(p).matrix());
      const double den = p_energy(form, DiscreteFunction(level, f), measure, p);
      Eigen::VectorXd grad =
          (p * w.array() * f.cwiseAbs().array().pow(p - 2.0) * f.array()).matrix() / num -
          p_energy_gradient(form, DiscreteFunction(level, f), measure, p) / den;
      project(grad);
      const double gn = grad.norm();
      if (gn == 0.0) break;
      grad /= gn;
      // Ascent on the scale-invariant log ratio; grow the step after success.
      bool accepted = false;
      while (step > 1e-12) {
        Eigen::VectorXd trial = f + step * grad;
        center(trial);
        trial /= trial.norm();
        const double r = poincare_ratio(form, measure, p, trial);
        if (r > ratio) {
          f = trial;
          ratio = r;
          step *= 2.0;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;
    }
    ratios.push_back(ratio);
  }
  return ratios;
}

PoincareResult poincare_constant(const EnergyForm& form, const CellMeasure& measure, double p,
                                 const PoincareOptions& options) {
  require(p >= 2.0, ErrorKind::invalid_argument, "Poincare constant needs p >= 2");
  PoincareResult out;
  out.p = p;
  const SpectrumResult sp = spectrum(form, measure, 2, options.spectrum);
  out.lambda1 = sp.eigenvalues[1];
  require(out.lambda1 > 0.0, ErrorKind::singular_system, "spectral gap vanished");
  out.resistance = max_resistance_to_root(form);
  const double mass = measure.total();
  if (p == 2.0) {
    out.best_constant = 1.0 / out.lambda1;
    out.certified_upper = out.best_constant;
  } else {
    // sup|f| <= (2 R0 E(f))^{1/2} for mean-zero f, and E(f)^{p/2} <= M^{p/2-1} E_p(f).
    out.certified_upper = std::pow(2.0 * out.resistance * mass, 0.5 * p);
    out.best_constant = out.certified_upper;
  }
  const auto ratios =
      sample_poincare_ratios(form, measure, p, options.trials, options.ascent_steps, options.seed);
  out.sampled_lower = ratios.empty() ? 0.0 : *std::max_element(ratios.begin(), ratios.end());
  return out;
}

}  // namespace fv
