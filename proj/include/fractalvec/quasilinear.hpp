#pragma once

// Galerkin solvers for div a(du) = f, the p-Laplacian and the non-divergence
// problem -Lu + b(du) + rho u = 0, plus randomized checks of the structural
// conditions on a.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fractalvec/energy.hpp"
#include "fractalvec/fields.hpp"

namespace fv {

/// Decomposable radial map a_x(v) = kappa(|v|^2) v acting on every cell fiber.
/// The potential satisfies Phi'(d) = kappa(d) / 2, so sum_w m(w) Phi(d_w) has
/// gradient u -> a(du).
struct MonotoneCoefficient {
  std::string name;
  double p = 2.0;
  std::function<double(double)> kappa;
  std::function<double(double)> kappa_prime;
  std::function<double(double)> potential;

  static MonotoneCoefficient identity();
  /// kappa(d) = d^{(p-2)/2}
  static MonotoneCoefficient p_laplace(double p);
  /// kappa(d) = 1 + d^{(p-2)/2}
  static MonotoneCoefficient strictly_monotone(double p);
  /// -kappa of the base; violates monotonicity.
  static MonotoneCoefficient sign_flipped(const MonotoneCoefficient& base);
};

/// a(v) as a field: every cell scaled by kappa of its density.
VectorField apply_coefficient(const EnergyForm& form, const MonotoneCoefficient& a,
                              const VectorField& v, const CellMeasure& measure);

enum class ConstraintKind { none, zero_mean, dirichlet };

struct Constraint {
  ConstraintKind kind = ConstraintKind::zero_mean;
  /// Dirichlet vertices and their values; empty values mean zero data.
  std::vector<std::size_t> vertices;
  std::vector<double> values;

  static Constraint zero_mean() { return {}; }
  static Constraint dirichlet(std::vector<std::size_t> vertices, std::vector<double> values = {});
  static Constraint none() { return {ConstraintKind::none, {}, {}}; }
};

struct SolverOptions {
  double tol = 1e-9;
  int max_iter = 200;
  /// Largest accepted step fraction; 1 is an undamped Newton step.
  double damping = 1.0;
  /// kappa is evaluated at d + eps^2 inside the Newton matrix.
  double regularization = 1e-10;
  std::uint64_t seed = 0;
  std::optional<DiscreteFunction> initial;
};

struct IterationRecord {
  int iteration = 0;
  double residual = 0.0;
  double energy = 0.0;
  double step = 0.0;
};

struct SolveReport {
  int iterations = 0;
  double residual = 0.0;
  double energy = 0.0;
  double wall_seconds = 0.0;
  bool converged = false;
  std::vector<IterationRecord> log;
};

struct SolveResult {
  DiscreteFunction u;
  SolveReport report;
};

/// Minimizes J(u) = alpha sum_w m(w) Phi(d_w) + sigma/2 u^T W u + load^T u,
/// whose stationarity is alpha <a(du), dv> + sigma <u, v> + load(v) = 0.
struct MonotoneProblem {
  MonotoneCoefficient coefficient;
  double alpha = 1.0;
  double sigma = 0.0;
  Eigen::VectorXd load;
  Constraint constraint;
};

SolveResult solve_monotone(const EnergyForm& form, const CellMeasure& measure,
                           const MonotoneProblem& problem, const SolverOptions& options = {});

/// <a(du), dv>_H = -<f, v>_{L2(measure)} for all admissible v.
SolveResult solve_divergence_form(const EnergyForm& form, const MonotoneCoefficient& a,
                                  const DiscreteFunction& f, const CellMeasure& measure,
                                  const Constraint& constraint, const SolverOptions& options = {});

SolveResult solve_p_laplace(const EnergyForm& form, const DiscreteFunction& f, double p,
                            const CellMeasure& measure, const Constraint& constraint,
                            const SolverOptions& options = {});

/// J(u) of a problem, for external monitoring.
double monotone_energy(const EnergyForm& form, const CellMeasure& measure,
                       const MonotoneProblem& problem, const Eigen::VectorXd& u);

/// Max-norm of the residual covector over the constrained test space.
double weak_residual(const EnergyForm& form, const CellMeasure& measure,
                     const MonotoneProblem& problem, const Eigen::VectorXd& u);

/// Scalar map of the per-cell gradient density d_w, averaged to vertices.
struct Drift {
  std::string name;
  std::function<double(double)> of_density;

  /// eps * sqrt(d) + offset
  static Drift sqrt_density(double eps, double offset = 0.0);
  static Drift zero();
};

/// Vertex function b(du).
Eigen::VectorXd evaluate_drift(const EnergyForm& form, const Drift& b, const DiscreteFunction& u,
                               const CellMeasure& measure);

struct NondivergenceOptions {
  double tol = 1e-9;
  int max_iter = 200;
  std::uint64_t seed = 0;
  int growth_probes = 50;
};

struct NondivergenceReport {
  SolveReport solve;
  /// Damping factor in force at the end; it halves whenever the residual grows.
  double damping = 1.0;
  /// First iteration run with damping below one, or -1.
  int damping_activated_at = -1;
  double c4 = 0.0;
  /// E_1(u)^{1/2} <= c4 / min(1/2, rho - c4^2/2) when rho > c4^2 / 2.
  double a_priori_bound = 0.0;
  double solution_norm = 0.0;
};

struct NondivergenceResult {
  DiscreteFunction u;
  NondivergenceReport report;
};

/// Damped Picard iteration of u -> w with E(w, v) + rho <w, v> = -<b(du), v>.
NondivergenceResult solve_nondivergence(const EnergyForm& form, const Drift& b, double rho,
                                        const CellMeasure& measure,
                                        const NondivergenceOptions& options = {});

struct ConditionReport {
  int probes = 0;
  bool monotone = false;
  double worst_monotone = 0.0;  // min <a(v)-a(w), v-w> / (|v|+|w|)^2
  bool growth = false;
  double c0 = 0.0;
  /// c0 fitted on the small and large halves of the probe scales.
  double c0_small = 0.0;
  double c0_large = 0.0;
  bool coercive = false;
  double c1 = 0.0;  // <a(df), df> >= c1 ||f||_{1,p}^p with c1 = 1/(1 + c_P)
  double c2 = 0.0;
  double poincare_constant = 0.0;
  double worst_coercive = 0.0;  // min <a(df), df> - c1 ||f||_{1,p}^p (relative)
  double c1_h = 0.0;  // <a(v), v> >= c1_h |v|^2 - c2_h
  double c2_h = 0.0;
  bool hemicontinuous = false;
  double hemicontinuity_gap = 0.0;

  bool all_pass() const { return monotone && growth && coercive && hemicontinuous; }
};

/// Randomized probes on zero-mean functions of the given level.
ConditionReport verify_conditions(const EnergyForm& form, const MonotoneCoefficient& a,
                                  const CellMeasure& measure, int probes, std::uint64_t seed);

/// 1-D reference for (|u'|^{p-2} u')' = f on [0, 1], u(0) = u(1) = 0, by discrete
/// shooting on the flux. Nodes x_i = i/N with lumped weights.
Eigen::VectorXd interval_p_laplace_reference(const Eigen::VectorXd& f, const Eigen::VectorXd& weights,
                                             double p);

}  // namespace fv
