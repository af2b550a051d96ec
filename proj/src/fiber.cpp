#include "fractalvec/fiber.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "fractalvec/error.hpp"

namespace fv {

CellGram cell_gram(const LevelGraph& g, const std::vector<DiscreteFunction>& coords) {
  const auto d = static_cast<Eigen::Index>(coords.size());
  for (const auto& phi : coords) require_level(phi.level, g.level());
  CellGram out;
  out.level = g.level();
  out.matrices.assign(g.num_cells(), Eigen::MatrixXd::Zero(d, d));
  const double c = g.conductance();
  Eigen::VectorXd diff(d);
  for (std::size_t w = 0; w < g.num_cells(); ++w) {
    const auto corners = g.cell_vertices(w);
    for (const auto& [a, b] : g.spec().cell_edges) {
      const auto x = static_cast<Eigen::Index>(corners[static_cast<std::size_t>(a)]);
      const auto y = static_cast<Eigen::Index>(corners[static_cast<std::size_t>(b)]);
      for (Eigen::Index i = 0; i < d; ++i) diff[i] = coords[static_cast<std::size_t>(i)][x] -
                                                     coords[static_cast<std::size_t>(i)][y];
      out.matrices[w] += c * diff * diff.transpose();
    }
  }
  return out;
}

FiberMetric fiber_metric(const CellGram& gram, const CellMeasure& measure) {
  require_level(measure.level, gram.level);
  require(measure.mass.size() == static_cast<Eigen::Index>(gram.matrices.size()),
          ErrorKind::invalid_argument, "measure and Gram disagree on the cell count");
  FiberMetric out;
  out.level = gram.level;
  out.mass = measure.mass;
  out.z.reserve(gram.matrices.size());
  out.eigenvalues.reserve(gram.matrices.size());
  for (std::size_t w = 0; w < gram.matrices.size(); ++w) {
    const double mw = measure.mass[static_cast<Eigen::Index>(w)];
    require(mw > 0.0, ErrorKind::singular_system,
            "zero-mass cell " + std::to_string(w) + " in fiber metric");
    out.z.push_back(gram.matrices[w] / mw);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.z.back(), Eigen::EigenvaluesOnly);
    out.eigenvalues.push_back(es.eigenvalues());
  }
  return out;
}

KusuokaMatrices kusuoka_matrices(const FractalSpec& spec, int m) {
  const EnergyForm form(build_level(spec, m));
  const auto coords = harmonic_coordinates(form);
  KusuokaMatrices out;
  out.gram = cell_gram(form.graph(), coords);
  out.metric = fiber_metric(out.gram, kusuoka_measure(form, coords));

  std::vector<double> smallest;
  smallest.reserve(out.metric.z.size());
  out.min_gram_eigenvalue = std::numeric_limits<double>::infinity();
  for (std::size_t w = 0; w < out.metric.z.size(); ++w) {
    smallest.push_back(out.metric.eigenvalues[w][0]);
    out.max_trace_error = std::max(out.max_trace_error, std::abs(out.metric.z[w].trace() - 1.0));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.gram.matrices[w], Eigen::EigenvaluesOnly);
    out.min_gram_eigenvalue = std::min(out.min_gram_eigenvalue, es.eigenvalues()[0]);
  }
  std::sort(smallest.begin(), smallest.end());
  const std::size_t n = smallest.size();
  out.smaller_eigenvalue.min = smallest.front();
  out.smaller_eigenvalue.max = smallest.back();
  out.smaller_eigenvalue.median =
      n % 2 == 1 ? smallest[n / 2] : 0.5 * (smallest[n / 2 - 1] + smallest[n / 2]);
  return out;
}

double martingale_error(const FiberMetric& coarse, const FiberMetric& fine, int n_maps) {
  require(fine.level == coarse.level + 1, ErrorKind::level_mismatch,
          "martingale check compares consecutive levels");
  const auto n = static_cast<std::size_t>(n_maps);
  require(fine.z.size() == coarse.z.size() * n, ErrorKind::invalid_argument,
          "fine metric does not refine the coarse one");
  double err = 0.0;
  for (std::size_t w = 0; w < coarse.z.size(); ++w) {
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(coarse.z[w].rows(), coarse.z[w].cols());
    for (std::size_t i = 0; i < n; ++i)
      sum += fine.mass[static_cast<Eigen::Index>(w * n + i)] * fine.z[w * n + i];
    const Eigen::MatrixXd diff = sum - coarse.mass[static_cast<Eigen::Index>(w)] * coarse.z[w];
    err = std::max(err, diff.cwiseAbs().maxCoeff());
  }
  return err;
}

FiberFrame fiber_frame(const LevelGraph& g, const std::vector<DiscreteFunction>& coords) {
  const auto d = static_cast<Eigen::Index>(coords.size());
  const auto k = static_cast<Eigen::Index>(g.corners_per_cell());
  require(d == k - 1, ErrorKind::invalid_argument,
          "fiber frame needs one coordinate per non-base corner");
  FiberFrame out;
  out.level = g.level();
  out.inverse_differences.reserve(g.num_cells());
  Eigen::MatrixXd diff(k - 1, d);
  for (std::size_t w = 0; w < g.num_cells(); ++w) {
    const auto corners = g.cell_vertices(w);
    const auto base = static_cast<Eigen::Index>(corners[0]);
    for (Eigen::Index j = 1; j < k; ++j)
      for (Eigen::Index i = 0; i < d; ++i) {
        const auto& phi = coords[static_cast<std::size_t>(i)];
        diff(j - 1, i) = phi[static_cast<Eigen::Index>(corners[static_cast<std::size_t>(j)])] - phi[base];
      }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(diff);
    require(lu.isInvertible(), ErrorKind::singular_system,
            "coordinates degenerate on cell " + g.cell_address(w).to_string());
    out.inverse_differences.push_back(lu.inverse());
  }
  return out;
}

FiberSection to_fiber_section(const LevelGraph& g, const FiberFrame& frame, const VectorField& v) {
  require_level(frame.level, g.level());
  require_level(v.level(), g.level());
  require(v.cell_granular(g), ErrorKind::invalid_argument,
          "fiber sections need weights that are constant on cells");
  const auto k = static_cast<Eigen::Index>(g.corners_per_cell());
  FiberSection out;
  out.level = g.level();
  out.values.assign(g.num_cells(), Eigen::VectorXd::Zero(k - 1));
  Eigen::VectorXd rhs(k - 1);
  for (const auto& term : v.terms())
    for (std::size_t w = 0; w < g.num_cells(); ++w) {
      const double weight = term.weight[static_cast<Eigen::Index>(g.first_edge_of_cell(w))];
      if (weight == 0.0) continue;
      const auto corners = g.cell_vertices(w);
      const double base = term.base[static_cast<Eigen::Index>(corners[0])];
      for (Eigen::Index j = 1; j < k; ++j)
        rhs[j - 1] = term.base[static_cast<Eigen::Index>(corners[static_cast<std::size_t>(j)])] - base;
      out.values[w] += weight * (frame.inverse_differences[w] * rhs);
    }
  return out;
}

double fiber_inner(const CellGram& gram, const FiberSection& a, const FiberSection& b) {
  require_level(a.level, gram.level);
  require_level(b.level, gram.level);
  double s = 0.0;
  for (std::size_t w = 0; w < gram.matrices.size(); ++w)
    s += a.values[w].dot(gram.matrices[w] * b.values[w]);
  return s;
}

DirectIntegralReport direct_integral_check(const EnergyForm& form,
                                           const std::vector<DiscreteFunction>& coords,
                                           const VectorField& v, const VectorField& w) {
  const auto& g = form.graph();
  DirectIntegralReport out;
  out.global = field_inner(form, v, w);
  const CellGram gram = cell_gram(g, coords);
  const FiberFrame frame = fiber_frame(g, coords);
  out.fiberwise = fiber_inner(gram, to_fiber_section(g, frame, v), to_fiber_section(g, frame, w));
  out.discrepancy = std::abs(out.global - out.fiberwise);
  return out;
}

}  // namespace fv
