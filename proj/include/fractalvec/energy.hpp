#pragma once

// Renormalized graph energies E_m(f, g) = r^{-m} sum_edges (f(u)-f(v))(g(u)-g(v)),
// their energy measures at edge and cell granularity, harmonic functions and
// the reference measures built from them.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "fractalvec/function.hpp"
#include "fractalvec/topology.hpp"

namespace fv {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Assembled graph Dirichlet form on one level graph. Owns its graph.
class EnergyForm {
 public:
  explicit EnergyForm(LevelGraph graph);

  const LevelGraph& graph() const { return graph_; }
  int level() const { return graph_.level(); }
  double conductance() const { return graph_.conductance(); }
  /// E(f, g) = f^T K g.
  const SparseMatrix& matrix() const { return stiffness_; }

 private:
  LevelGraph graph_;
  SparseMatrix stiffness_;
};

/// One real mass per level-m cell.
struct CellMeasure {
  int level = 0;
  Eigen::VectorXd mass;
  bool nonnegative = false;
  std::string id;

  /// Fixed-order sum of the cell masses.
  double total() const;
};

/// Energy measure primitive: mass c_m (f(u)-f(v))(g(u)-g(v)) on every edge.
struct EnergyMeasure {
  int level = 0;
  Eigen::VectorXd edge_mass;
  CellMeasure cells;

  double total() const { return cells.total(); }
};

double energy(const EnergyForm& form, const DiscreteFunction& f, const DiscreteFunction& g);
double energy(const EnergyForm& form, const DiscreteFunction& f);

EnergyMeasure energy_measure(const EnergyForm& form, const DiscreteFunction& f,
                             const DiscreteFunction& g);

/// sum_e fbar_e * edge_mass_e with fbar_e the average of f over the edge endpoints.
double integrate_edge_average(const LevelGraph& g, const DiscreteFunction& f,
                              const EnergyMeasure& gamma);

/// Local extension operator of one cell: rows are the new level-1 vertices,
/// columns the cell corners. Obtained by minimizing the level-1 energy.
struct ExtensionRule {
  std::vector<std::size_t> new_vertices;  // level-1 vertex ids
  Eigen::MatrixXd weights;                // new x corners
};

ExtensionRule compute_extension_rule(const FractalSpec& spec);

DiscreteFunction harmonic_extension(const LevelGraph& coarse, const LevelGraph& fine,
                                    const DiscreteFunction& f);
/// Builds the level-(m+1) graph internally.
DiscreteFunction harmonic_extension(const LevelGraph& coarse, const DiscreteFunction& f);

struct DirichletSolution {
  DiscreteFunction u;
  /// Max |(K u)_x| over interior vertices.
  double residual = 0.0;
};

/// Energy minimizer with prescribed values on `boundary` (vertex, value).
DirichletSolution solve_dirichlet(const EnergyForm& form,
                                  const std::vector<std::pair<std::size_t, double>>& boundary);

/// Energy-orthonormal harmonic coordinates, zero mean over V_0, solved from
/// Gram-Schmidt-orthonormalized boundary seeds.
std::vector<DiscreteFunction> harmonic_coordinates(const EnergyForm& form);

/// Boundary data of the coordinates after orthonormalization (one row per coordinate).
Eigen::MatrixXd harmonic_coordinate_boundary_data(const FractalSpec& spec);

/// Pairwise-distinct check of x -> (phi_1(x), ..., phi_k(x)) on the vertices.
bool coordinates_injective(const std::vector<DiscreteFunction>& coords, double min_separation = 0.0);

/// m = sum_j Gamma(phi_j).
CellMeasure kusuoka_measure(const EnergyForm& form, const std::vector<DiscreteFunction>& coords);
CellMeasure kusuoka_measure(const EnergyForm& form);

struct DominantMeasure {
  CellMeasure measure;
  /// Pool indices that entered the sum, in order; entry n carries weight 2^{-(n+1)}.
  std::vector<std::size_t> used;
  /// Pool indices rejected for (near) zero energy.
  std::vector<std::size_t> skipped;
};

inline constexpr double kZeroEnergyGuard = 1e-14;

/// sum_n 2^{-n} Gamma(f_n), n = 1, 2, ..., with f_n = psi_n / E(psi_n)^{1/2}.
DominantMeasure general_energy_dominant_measure(const EnergyForm& form,
                                                const std::vector<DiscreteFunction>& pool);

/// Cell F_w gets prod_i weights[w_i].
CellMeasure self_similar_measure(const LevelGraph& g, const std::vector<double>& weights);
CellMeasure self_similar_measure(const LevelGraph& g);  // equal weights

/// Each cell mass split equally among its corners.
Eigen::VectorXd vertex_weights(const LevelGraph& g, const CellMeasure& measure);

}  // namespace fv
