#pragma once

#include <Eigen/Core>

namespace fv {

/// Real values on the vertices of a level-m graph, in canonical vertex order.
struct DiscreteFunction {
  int level = 0;
  Eigen::VectorXd values;

  DiscreteFunction() = default;
  DiscreteFunction(int m, Eigen::VectorXd v) : level(m), values(std::move(v)) {}

  Eigen::Index size() const { return values.size(); }
  double operator[](Eigen::Index i) const { return values[i]; }

  static DiscreteFunction constant(int m, Eigen::Index n, double c) {
    return {m, Eigen::VectorXd::Constant(n, c)};
  }
};

}  // namespace fv
