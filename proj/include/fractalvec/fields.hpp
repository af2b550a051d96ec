#pragma once

// Vector fields sum_k g_k (x) df_k at level m. A level-m field is determined
// by its edge vector omega_e = sum_k g_k(e) (f_k(u) - f_k(v)); the H inner
// product is then c_m sum_e omega_e eta_e.

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "fractalvec/energy.hpp"

namespace fv {

/// One term g (x) df. The weight has one entry per edge; a function that is
/// constant on cells gives the same weight to all edges of a cell.
struct FieldTerm {
  Eigen::VectorXd weight;
  DiscreteFunction base;
};

class VectorField {
 public:
  VectorField(int level, std::size_t num_edges) : level_(level), num_edges_(num_edges) {}
  static VectorField zero(const LevelGraph& g) { return {g.level(), g.num_edges()}; }

  int level() const { return level_; }
  std::size_t num_edges() const { return num_edges_; }
  const std::vector<FieldTerm>& terms() const { return terms_; }

  void add_term(FieldTerm term);
  /// g (x) df with g constant on every cell.
  void add_cell_term(const LevelGraph& g, const Eigen::VectorXd& cell_weight, DiscreteFunction base);

  /// True when every term weight is constant on the edges of each cell.
  bool cell_granular(const LevelGraph& g) const;

  /// Edge vector omega; assembled from the terms, or read from the cache.
  Eigen::VectorXd edge_values(const LevelGraph& g) const;

  /// Compacts the terms into the edge vector; later terms invalidate it.
  void build_cache(const LevelGraph& g);
  const std::optional<Eigen::VectorXd>& cache() const { return cache_; }

 private:
  int level_;
  std::size_t num_edges_;
  std::vector<FieldTerm> terms_;
  std::optional<Eigen::VectorXd> cache_;
};

VectorField operator+(const VectorField& a, const VectorField& b);
VectorField operator*(double s, const VectorField& v);

/// sum_{k,l} sum_e g_k(e) h_l(e) c_m df_k(e) du_l(e), term pair by term pair.
double field_inner(const EnergyForm& form, const VectorField& v, const VectorField& w);
double field_norm(const EnergyForm& form, const VectorField& v);

/// Gamma_H(v, w) per cell.
CellMeasure weighted_energy_measure(const EnergyForm& form, const VectorField& v,
                                    const VectorField& w);
CellMeasure weighted_energy_measure(const EnergyForm& form, const VectorField& v);

/// 1 (x) df
VectorField gradient(const LevelGraph& g, const DiscreteFunction& f);

/// Left action f v; every edge weight is multiplied by the edge-endpoint mean of f.
VectorField multiply(const LevelGraph& g, const DiscreteFunction& f, const VectorField& v);
/// Right action by a function constant on cells.
VectorField scale_cells(const LevelGraph& g, const Eigen::VectorXd& cell_values,
                        const VectorField& v);

/// Edge-by-vertex incidence: (D u)_e = u(e.u) - u(e.v).
SparseMatrix gradient_matrix(const LevelGraph& g);
/// -D^T C: maps edge vectors to covectors on vertices.
SparseMatrix divergence_matrix(const LevelGraph& g);

/// Covector of the functional u -> -<v, du>_H.
Eigen::VectorXd divergence(const EnergyForm& form, const VectorField& v);

struct DivergenceDensity {
  DiscreteFunction density;
  double residual = 0.0;
};

/// Density rho with <rho, u>_{L2(measure)} = divergence(v)(u).
DivergenceDensity divergence_density(const EnergyForm& form, const VectorField& v,
                                     const CellMeasure& measure);

/// Covector of u -> (g L f)(u) = -E(f, g u).
Eigen::VectorXd generator_functional(const EnergyForm& form, const DiscreteFunction& g,
                                     const DiscreteFunction& f);

struct LpNorm {
  double value = 0.0;
  /// Set when a zero-mass cell carries field mass.
  bool singular = false;
};

/// (sum_w (Gamma_H(v)(w)/m(w))^{p/2} m(w))^{1/p}; p = infinity gives the
/// largest cell density square root.
LpNorm lp_field_norm(const EnergyForm& form, const VectorField& v, const CellMeasure& measure,
                     double p);

/// sum_w (Gamma(f)(w)/m(w))^{p/2} m(w)
double p_energy(const EnergyForm& form, const DiscreteFunction& f, const CellMeasure& measure,
                double p);
/// sum_w (Gamma(f)(w)/m(w))^{p/2-1} Gamma(f, g)(w)
double p_energy(const EnergyForm& form, const DiscreteFunction& f, const DiscreteFunction& g,
                const CellMeasure& measure, double p);
/// Euclidean gradient of f -> p_energy(f), i.e. p times the covector of E_p(f, .).
Eigen::VectorXd p_energy_gradient(const EnergyForm& form, const DiscreteFunction& f,
                                  const CellMeasure& measure, double p);

/// Per-cell Gamma(f)(w).
Eigen::VectorXd cell_energies(const EnergyForm& form, const DiscreteFunction& f);

}  // namespace fv
