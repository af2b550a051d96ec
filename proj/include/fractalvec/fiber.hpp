#pragma once

// Per-cell fibers in harmonic coordinates: cell Grams M_w(i, j) =
// Gamma(phi_i, phi_j)(w), Kusuoka matrices Z(w) = M_w / m(w), and sections
// of the fiber bundle.

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "fractalvec/energy.hpp"
#include "fractalvec/fields.hpp"

namespace fv {

struct CellGram {
  int level = 0;
  std::vector<Eigen::MatrixXd> matrices;
};

/// Computed straight from corner values of the coordinates.
CellGram cell_gram(const LevelGraph& g, const std::vector<DiscreteFunction>& coords);

struct FiberMetric {
  int level = 0;
  Eigen::VectorXd mass;
  std::vector<Eigen::MatrixXd> z;
  std::vector<Eigen::VectorXd> eigenvalues;  // ascending, per cell
};

FiberMetric fiber_metric(const CellGram& gram, const CellMeasure& measure);

struct EigenStats {
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
};

struct KusuokaMatrices {
  CellGram gram;
  FiberMetric metric;
  /// Statistics of the smallest eigenvalue of Z over cells.
  EigenStats smaller_eigenvalue;
  double max_trace_error = 0.0;
  double min_gram_eigenvalue = 0.0;
};

KusuokaMatrices kusuoka_matrices(const FractalSpec& spec, int m);

/// max over coarse cells and entries of |sum_c m(c) Z(c) - m(w) Z(w)|.
double martingale_error(const FiberMetric& coarse, const FiberMetric& fine, int n_maps);

/// Inverse corner-difference matrices of the coordinates on every cell.
struct FiberFrame {
  int level = 0;
  std::vector<Eigen::MatrixXd> inverse_differences;
};

FiberFrame fiber_frame(const LevelGraph& g, const std::vector<DiscreteFunction>& coords);

/// One coordinate vector per cell.
struct FiberSection {
  int level = 0;
  std::vector<Eigen::VectorXd> values;
};

/// Expands each term in coordinates cell by cell. Needs cell-granular weights.
FiberSection to_fiber_section(const LevelGraph& g, const FiberFrame& frame, const VectorField& v);

/// sum_w a(w)^T M_w b(w)
double fiber_inner(const CellGram& gram, const FiberSection& a, const FiberSection& b);

struct DirectIntegralReport {
  double global = 0.0;
  double fiberwise = 0.0;
  double discrepancy = 0.0;
};

DirectIntegralReport direct_integral_check(const EnergyForm& form,
                                           const std::vector<DiscreteFunction>& coords,
                                           const VectorField& v, const VectorField& w);

}  // namespace fv
