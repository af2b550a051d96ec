#include "fractalvec/energy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "fractalvec/error.hpp"

namespace fv {

namespace {

void require_on(const LevelGraph& g, const DiscreteFunction& f) {
  require_level(f.level, g.level());
  require(f.size() == static_cast<Eigen::Index>(g.num_vertices()), ErrorKind::invalid_argument,
          "function length " + std::to_string(f.size()) + " does not match vertex count " +
              std::to_string(g.num_vertices()));
}

SparseMatrix assemble_stiffness(const LevelGraph& g) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(4 * g.num_edges());
  const double c = g.conductance();
  for (const auto& e : g.edges()) {
    const auto u = static_cast<Eigen::Index>(e.u);
    const auto v = static_cast<Eigen::Index>(e.v);
    t.emplace_back(u, u, c);
    t.emplace_back(v, v, c);
    t.emplace_back(u, v, -c);
    t.emplace_back(v, u, -c);
  }
  const auto n = static_cast<Eigen::Index>(g.num_vertices());
  SparseMatrix k(n, n);
  k.setFromTriplets(t.begin(), t.end());
  return k;
}

}  // namespace

EnergyForm::EnergyForm(LevelGraph graph)
    : graph_(std::move(graph)), stiffness_(assemble_stiffness(graph_)) {}

double CellMeasure::total() const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < mass.size(); ++i) s += mass[i];
  return s;
}

double energy(const EnergyForm& form, const DiscreteFunction& f, const DiscreteFunction& g) {
  const auto& graph = form.graph();
  require_on(graph, f);
  require_on(graph, g);
  double s = 0.0;
  for (const auto& e : graph.edges()) {
    const auto u = static_cast<Eigen::Index>(e.u);
    const auto v = static_cast<Eigen::Index>(e.v);
    s += (f[u] - f[v]) * (g[u] - g[v]);
  }
  return form.conductance() * s;
}

double energy(const EnergyForm& form, const DiscreteFunction& f) { return energy(form, f, f); }

EnergyMeasure energy_measure(const EnergyForm& form, const DiscreteFunction& f,
                             const DiscreteFunction& g) {
  const auto& graph = form.graph();
  require_on(graph, f);
  require_on(graph, g);
  EnergyMeasure out;
  out.level = graph.level();
  out.edge_mass.resize(static_cast<Eigen::Index>(graph.num_edges()));
  out.cells.level = graph.level();
  out.cells.mass = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(graph.num_cells()));
  out.cells.nonnegative = false;
  out.cells.id = "energy";
  const double c = form.conductance();
  const auto& edges = graph.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto u = static_cast<Eigen::Index>(edges[i].u);
    const auto v = static_cast<Eigen::Index>(edges[i].v);
    const double m = c * (f[u] - f[v]) * (g[u] - g[v]);
    out.edge_mass[static_cast<Eigen::Index>(i)] = m;
    out.cells.mass[static_cast<Eigen::Index>(edges[i].cell)] += m;
  }
  return out;
}

double integrate_edge_average(const LevelGraph& g, const DiscreteFunction& f,
                              const EnergyMeasure& gamma) {
  require_on(g, f);
  require_level(gamma.level, g.level());
  double s = 0.0;
  const auto& edges = g.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const double fbar =
        0.5 * (f[static_cast<Eigen::Index>(edges[i].u)] + f[static_cast<Eigen::Index>(edges[i].v)]);
    s += fbar * gamma.edge_mass[static_cast<Eigen::Index>(i)];
  }
  return s;
}

ExtensionRule compute_extension_rule(const FractalSpec& spec) {
  const LevelGraph g1 = build_level(spec, 1);
  const EnergyForm form(g1);
  const auto boundary = g1.boundary_vertices();
  std::vector<bool> is_boundary(g1.num_vertices(), false);
  for (auto b : boundary) is_boundary[b] = true;

  ExtensionRule rule;
  for (std::size_t v = 0; v < g1.num_vertices(); ++v)
    if (!is_boundary[v]) rule.new_vertices.push_back(v);

  const auto ni = static_cast<Eigen::Index>(rule.new_vertices.size());
  const auto nb = static_cast<Eigen::Index>(boundary.size());
  const Eigen::MatrixXd k = Eigen::MatrixXd(form.matrix());
  Eigen::MatrixXd kii(ni, ni), kib(ni, nb);
  for (Eigen::Index i = 0; i < ni; ++i) {
    const auto vi = static_cast<Eigen::Index>(rule.new_vertices[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < ni; ++j)
      kii(i, j) = k(vi, static_cast<Eigen::Index>(rule.new_vertices[static_cast<std::size_t>(j)]));
    for (Eigen::Index j = 0; j < nb; ++j)
      kib(i, j) = k(vi, static_cast<Eigen::Index>(boundary[static_cast<std::size_t>(j)]));
  }
  rule.weights = kii.ldlt().solve(-kib);
  return rule;
}

DiscreteFunction harmonic_extension(const LevelGraph& coarse, const LevelGraph& fine,
                                    const DiscreteFunction& f) {
  require_on(coarse, f);
  require(fine.level() == coarse.level() + 1, ErrorKind::level_mismatch,
          "harmonic extension goes exactly one level up");
  const ExtensionRule rule = compute_extension_rule(coarse.spec());
  const LevelGraph g1 = build_level(coarse.spec(), 1);
  const auto embed = embed_vertices(coarse, fine);
  const auto n = static_cast<std::size_t>(coarse.spec().n_maps);

  DiscreteFunction out(fine.level(),
                       Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fine.num_vertices())));
  for (std::size_t v = 0; v < embed.size(); ++v)
    out.values[static_cast<Eigen::Index>(embed[v])] = f[static_cast<Eigen::Index>(v)];

  const auto k = static_cast<Eigen::Index>(coarse.corners_per_cell());
  Eigen::VectorXd corner_values(k);
  for (std::size_t w = 0; w < coarse.num_cells(); ++w) {
    const auto corners = coarse.cell_vertices(w);
    for (Eigen::Index a = 0; a < k; ++a)
      corner_values[a] = f[static_cast<Eigen::Index>(corners[static_cast<std::size_t>(a)])];
    const Eigen::VectorXd fresh = rule.weights * corner_values;
    for (std::size_t row = 0; row < rule.new_vertices.size(); ++row) {
      const CornerRef& ref = g1.vertex_refs(rule.new_vertices[row]).front();
      const std::size_t fine_vertex = fine.vertex_at(w * n + ref.cell, ref.corner);
      out.values[static_cast<Eigen::Index>(fine_vertex)] = fresh[static_cast<Eigen::Index>(row)];
    }
  }
  return out;
}

DiscreteFunction harmonic_extension(const LevelGraph& coarse, const DiscreteFunction& f) {
  return harmonic_extension(coarse, build_level(coarse.spec(), coarse.level() + 1), f);
}

DirichletSolution solve_dirichlet(const EnergyForm& form,
                                  const std::vector<std::pair<std::size_t, double>>& boundary) {
  const auto& g = form.graph();
  require(!boundary.empty(), ErrorKind::singular_system,
          "Dirichlet problem without boundary data is singular");
  const auto n = static_cast<Eigen::Index>(g.num_vertices());
  std::vector<bool> fixed(g.num_vertices(), false);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  for (auto [v, value] : boundary) {
    require(v < g.num_vertices(), ErrorKind::invalid_argument, "boundary vertex out of range");
    fixed[v] = true;
    u[static_cast<Eigen::Index>(v)] = value;
  }
  std::vector<Eigen::Index> free_index(g.num_vertices(), -1);
  Eigen::Index nf = 0;
  for (std::size_t v = 0; v < g.num_vertices(); ++v)
    if (!fixed[v]) free_index[v] = nf++;

  const SparseMatrix& k = form.matrix();
  if (nf > 0) {
    std::vector<Eigen::Triplet<double>> t;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf);
    for (Eigen::Index col = 0; col < k.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(k, col); it; ++it) {
        const auto r = free_index[static_cast<std::size_t>(it.row())];
        if (r < 0) continue;
        const auto c = free_index[static_cast<std::size_t>(it.col())];
        if (c >= 0)
          t.emplace_back(r, c, it.value());
        else
          rhs[r] -= it.value() * u[it.col()];
      }
    SparseMatrix kii(nf, nf);
    kii.setFromTriplets(t.begin(), t.end());
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(kii);
    require(ldlt.info() == Eigen::Success, ErrorKind::singular_system,
            "interior Dirichlet system is singular");
    const Eigen::VectorXd x = ldlt.solve(rhs);
    for (std::size_t v = 0; v < g.num_vertices(); ++v)
      if (free_index[v] >= 0) u[static_cast<Eigen::Index>(v)] = x[free_index[v]];
  }

  DirichletSolution out;
  out.u = DiscreteFunction(g.level(), u);
  const Eigen::VectorXd ku = k * u;
  for (std::size_t v = 0; v < g.num_vertices(); ++v)
    if (!fixed[v]) out.residual = std::max(out.residual, std::abs(ku[static_cast<Eigen::Index>(v)]));
  return out;
}

Eigen::MatrixXd harmonic_coordinate_boundary_data(const FractalSpec& spec) {
  const EnergyForm form0(build_level(spec, 0));
  const auto boundary = form0.graph().boundary_vertices();
  const auto k = static_cast<Eigen::Index>(spec.n_corners);
  const Eigen::MatrixXd kk = Eigen::MatrixXd(form0.matrix());

  // Seeds are given in corner order; move them to vertex order of V_0.
  std::vector<Eigen::VectorXd> basis;
  for (const auto& seed : spec.coordinate_seeds) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(k);
    for (Eigen::Index a = 0; a < k; ++a)
      v[static_cast<Eigen::Index>(boundary[static_cast<std::size_t>(a)])] = seed[static_cast<std::size_t>(a)];
    v.array() -= v.mean();
    for (const auto& b : basis) v -= (b.dot(kk * v)) * b;
    const double e = v.dot(kk * v);
    require(e > kZeroEnergyGuard, ErrorKind::invalid_argument,
            "coordinate seeds are not independent modulo constants");
    v /= std::sqrt(e);
    basis.push_back(v);
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(basis.size()), k);
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (Eigen::Index a = 0; a < k; ++a)
      out(static_cast<Eigen::Index>(i), a) =
          basis[i][static_cast<Eigen::Index>(boundary[static_cast<std::size_t>(a)])];
  return out;
}

std::vector<DiscreteFunction> harmonic_coordinates(const EnergyForm& form) {
  const auto& g = form.graph();
  const Eigen::MatrixXd data = harmonic_coordinate_boundary_data(g.spec());
  const auto boundary = g.boundary_vertices();
  std::vector<DiscreteFunction> out;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    std::vector<std::pair<std::size_t, double>> bc;
    for (std::size_t a = 0; a < boundary.size(); ++a)
      bc.emplace_back(boundary[a], data(i, static_cast<Eigen::Index>(a)));
    out.push_back(solve_dirichlet(form, bc).u);
  }
  return out;
}

bool coordinates_injective(const std::vector<DiscreteFunction>& coords, double min_separation) {
  if (coords.empty()) return false;
  const Eigen::Index n = coords.front().size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  auto key_less = [&](Eigen::Index a, Eigen::Index b) {
    for (const auto& c : coords) {
      if (c[a] < c[b]) return true;
      if (c[a] > c[b]) return false;
    }
    return false;
  };
  std::sort(order.begin(), order.end(), key_less);
  // After lexicographic sorting, equal points are adjacent in the first
  // coordinate; a tolerance check needs a small window scan.
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const double d0 = coords.front()[order[j]] - coords.front()[order[i]];
      if (d0 > min_separation) break;
      double dist = 0.0;
      for (const auto& c : coords) dist = std::max(dist, std::abs(c[order[j]] - c[order[i]]));
      if (dist <= min_separation) return false;
    }
  }
  return true;
}

CellMeasure kusuoka_measure(const EnergyForm& form, const std::vector<DiscreteFunction>& coords) {
  CellMeasure m;
  m.level = form.level();
  m.mass = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(form.graph().num_cells()));
  for (const auto& phi : coords) m.mass += energy_measure(form, phi, phi).cells.mass;
  m.nonnegative = true;
  m.id = "kusuoka";
  return m;
}

CellMeasure kusuoka_measure(const EnergyForm& form) {
  return kusuoka_measure(form, harmonic_coordinates(form));
}

DominantMeasure general_energy_dominant_measure(const EnergyForm& form,
                                                const std::vector<DiscreteFunction>& pool) {
  DominantMeasure out;
  out.measure.level = form.level();
  out.measure.mass = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(form.graph().num_cells()));
  out.measure.nonnegative = true;
  out.measure.id = "dominant";
  double weight = 0.5;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const double e = energy(form, pool[i]);
    if (e < kZeroEnergyGuard) {
      out.skipped.push_back(i);
      continue;
    }
    // Gamma(psi / sqrt(E(psi))) = Gamma(psi) / E(psi) is a probability measure.
    out.measure.mass += (weight / e) * energy_measure(form, pool[i], pool[i]).cells.mass;
    out.used.push_back(i);
    weight *= 0.5;
  }
  return out;
}

CellMeasure self_similar_measure(const LevelGraph& g, const std::vector<double>& weights) {
  const auto n = static_cast<std::size_t>(g.spec().n_maps);
  require(weights.size() == n, ErrorKind::invalid_argument,
          "self-similar weights need one entry per map");
  double sum = 0.0;
  for (double w : weights) {
    require(w > 0.0, ErrorKind::invalid_argument, "self-similar weights must be positive");
    sum += w;
  }
  require(std::abs(sum - 1.0) <= 1e-12, ErrorKind::invalid_argument,
          "self-similar weights must sum to 1");
  CellMeasure m;
  m.level = g.level();
  m.mass.resize(static_cast<Eigen::Index>(g.num_cells()));
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    double p = 1.0;
    for (auto d : g.cell_address(c).word) p *= weights[d];
    m.mass[static_cast<Eigen::Index>(c)] = p;
  }
  m.nonnegative = true;
  m.id = "self_similar";
  return m;
}

CellMeasure self_similar_measure(const LevelGraph& g) {
  const auto n = static_cast<std::size_t>(g.spec().n_maps);
  return self_similar_measure(g, std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Eigen::VectorXd vertex_weights(const LevelGraph& g, const CellMeasure& measure) {
  require_level(measure.level, g.level());
  require(measure.mass.size() == static_cast<Eigen::Index>(g.num_cells()),
          ErrorKind::invalid_argument, "measure has wrong number of cells");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.num_vertices()));
  const double share = 1.0 / g.corners_per_cell();
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    for (auto v : g.cell_vertices(c))
      w[static_cast<Eigen::Index>(v)] += share * measure.mass[static_cast<Eigen::Index>(c)];
  return w;
}

}  // namespace fv
