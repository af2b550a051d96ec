#pragma once

// Implicit Euler for du = div a(du) dt + sqrt(Q) dW with diagonal Q in the
// Neumann eigenbasis of the measure-weighted Laplacian.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fractalvec/quasilinear.hpp"
#include "fractalvec/spectrum.hpp"

namespace fv {

/// Counter-based N(0, 1) sample for (seed, path, step, mode).
double counter_normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step, std::uint64_t mode);

struct NoiseModel {
  /// Modes e_1..e_J (constant mode excluded), measure-orthonormal columns.
  Eigen::MatrixXd modes;
  Eigen::VectorXd eigenvalues;
  Eigen::VectorXd q;
  /// Bound on the covariance weight dropped by truncation.
  double tail_bound = 0.0;
  std::uint64_t seed = 0;
  std::string profile;

  int truncation() const { return static_cast<int>(q.size()); }
};

/// q_k = scale * lambda_k^{-2} on modes 1..J. The spectrum must hold at least
/// J + 1 nonconstant modes when J < N - 1 so the tail can be bounded.
NoiseModel inverse_square_noise(const SpectrumResult& spectrum, int truncation, double scale,
                                std::uint64_t seed);
/// Same modes, q = 0.
NoiseModel zero_noise(const SpectrumResult& spectrum, int truncation);

/// sum_j sqrt(q_j dt) xi_j e_j for the given (path, step).
Eigen::VectorXd noise_increment(const NoiseModel& noise, double dt, std::uint64_t path,
                                std::uint64_t step);

struct SpdeOptions {
  double T = 0.1;
  double dt = 1e-3;
  /// Keep every stride-th state (the initial and final states are always kept).
  int snapshot_stride = 10;
  SolverOptions inner = tight_inner();

  static SolverOptions tight_inner() {
    SolverOptions o;
    o.tol = 1e-12;
    o.max_iter = 100;
    return o;
  }
};

struct StepSummary {
  int iterations = 0;
  double residual = 0.0;
};

struct PathResult {
  std::vector<double> times;  // every step, starting at 0
  std::vector<double> l2_norm;
  std::vector<double> p_energy;
  std::vector<StepSummary> steps;
  std::vector<int> snapshot_steps;
  std::vector<DiscreteFunction> snapshots;
};

int step_count(double T, double dt);

PathResult simulate(const EnergyForm& form, const MonotoneCoefficient& a,
                    const DiscreteFunction& u0, const NoiseModel& noise, const CellMeasure& measure,
                    const SpdeOptions& options, std::uint64_t path = 0);

struct UniquenessReport {
  int trials = 0;
  double max_growth = 0.0;
  bool flagged = false;
  std::vector<double> trial_growth;
};

/// Pairs of paths from different initial states under shared noise.
UniquenessReport uniqueness_probe(const EnergyForm& form, const MonotoneCoefficient& a,
                                  const NoiseModel& noise, const CellMeasure& measure, int trials,
                                  std::uint64_t seed, const SpdeOptions& options);

struct MomentStats {
  int paths = 0;
  std::vector<double> times;
  std::vector<double> mean_l2sq;
  std::vector<double> se_l2sq;
  std::vector<double> mean_p_energy;
  std::vector<double> se_p_energy;
};

/// Monte Carlo over paths 0..paths-1; entries every `stride` steps.
MomentStats moment_stats(const EnergyForm& form, const MonotoneCoefficient& a,
                         const DiscreteFunction& u0, const NoiseModel& noise,
                         const CellMeasure& measure, const SpdeOptions& options, int paths,
                         int stride = 1);

}  // namespace fv
