#pragma once

// Neumann eigenpairs of E_m(u, v) = lambda <u, v>_{L2(measure)} and Poincare
// constants.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fractalvec/energy.hpp"

namespace fv {

struct SpectrumOptions {
  double tol = 1e-10;
  /// Dense solve up to this many vertices, shift-invert subspace iteration beyond.
  std::size_t dense_limit = 2000;
  std::uint64_t seed = 0;
  int max_iter = 1000;
};

struct SpectrumResult {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns, orthonormal in L2(measure)
  Eigen::VectorXd weights;       // vertex weights of the measure
  std::string measure_id;
  /// max_i |W^{-1/2}(K v_i - lambda_i W v_i)| / max(1, lambda_i)
  double max_residual = 0.0;
  bool dense = true;
  int iterations = 0;
};

/// L = W^{-1} K with W the vertex weights of the measure.
struct Laplacian {
  SparseMatrix stiffness;
  Eigen::VectorXd weights;

  /// Returns L f = -W^{-1} K f (nonpositive generator).
  Eigen::VectorXd apply(const Eigen::VectorXd& f) const {
    return -(stiffness * f).cwiseQuotient(weights);
  }
};

Laplacian laplacian(const EnergyForm& form, const CellMeasure& measure);

/// Lowest k eigenpairs. Eigenvectors are sign-normalized so that their entry
/// of largest magnitude (first such index) is positive.
SpectrumResult spectrum(const EnergyForm& form, const CellMeasure& measure, std::size_t k,
                        const SpectrumOptions& options = {});

double rayleigh_quotient(const EnergyForm& form, const Eigen::VectorXd& weights,
                         const Eigen::VectorXd& v);

struct PoincareOptions {
  int trials = 20;
  int ascent_steps = 200;
  std::uint64_t seed = 0;
  SpectrumOptions spectrum;
};

/// Constants c with ||f||_p^p <= c E_p(f) for W-mean-zero f.
struct PoincareResult {
  double p = 2.0;
  double lambda1 = 0.0;
  /// 1/lambda_1 for p = 2; the certified bound otherwise.
  double best_constant = 0.0;
  double certified_upper = 0.0;
  double sampled_lower = 0.0;
  /// Largest effective resistance from a vertex to vertex 0.
  double resistance = 0.0;
};

PoincareResult poincare_constant(const EnergyForm& form, const CellMeasure& measure, double p,
                                 const PoincareOptions& options = {});

/// Ratios reached by projected gradient ascent from seeded random starts, one per trial.
std::vector<double> sample_poincare_ratios(const EnergyForm& form, const CellMeasure& measure,
                                           double p, int trials, int steps, std::uint64_t seed);

/// ||f||_p^p / E_p(f) for f shifted to W-mean zero.
double poincare_ratio(const EnergyForm& form, const CellMeasure& measure, double p,
                      const Eigen::VectorXd& f);

/// max_x R_eff(x, 0)
double max_resistance_to_root(const EnergyForm& form);

}  // namespace fv
