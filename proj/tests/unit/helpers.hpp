#pragma once

#include <random>

#include <Eigen/Core>

#include "fractalvec/energy.hpp"
#include "fractalvec/fields.hpp"

namespace fvtest {

inline Eigen::VectorXd normal_vector(std::mt19937_64& gen, Eigen::Index n) {
  std::normal_distribution<double> d;
  Eigen::VectorXd v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

inline fv::DiscreteFunction random_function(std::mt19937_64& gen, const fv::LevelGraph& g) {
  return {g.level(), normal_vector(gen, static_cast<Eigen::Index>(g.num_vertices()))};
}

inline fv::VectorField random_cell_field(std::mt19937_64& gen, const fv::LevelGraph& g, int terms) {
  auto v = fv::VectorField::zero(g);
  for (int k = 0; k < terms; ++k)
    v.add_cell_term(g, normal_vector(gen, static_cast<Eigen::Index>(g.num_cells())), random_function(gen, g));
  return v;
}

}  // namespace fvtest
