#include "fractalvec/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fractalvec/error.hpp"

namespace fv {

namespace {

void require_field(const LevelGraph& g, const VectorField& v) {
  require_level(v.level(), g.level());
  require(v.num_edges() == g.num_edges(), ErrorKind::invalid_argument,
          "field edge count does not match graph");
}

void require_function(const LevelGraph& g, const DiscreteFunction& f) {
  require_level(f.level, g.level());
  require(f.size() == static_cast<Eigen::Index>(g.num_vertices()), ErrorKind::invalid_argument,
          "function length does not match vertex count");
}

void require_measure(const LevelGraph& g, const CellMeasure& m) {
  require_level(m.level, g.level());
  require(m.mass.size() == static_cast<Eigen::Index>(g.num_cells()), ErrorKind::invalid_argument,
          "measure has wrong number of cells");
}

Eigen::VectorXd edge_differences(const LevelGraph& g, const DiscreteFunction& f) {
  const auto& edges = g.edges();
  Eigen::VectorXd d(static_cast<Eigen::Index>(edges.size()));
  for (std::size_t i = 0; i < edges.size(); ++i)
    d[static_cast<Eigen::Index>(i)] =
        f[static_cast<Eigen::Index>(edges[i].u)] - f[static_cast<Eigen::Index>(edges[i].v)];
  return d;
}

Eigen::VectorXd cell_sums(const LevelGraph& g, const Eigen::VectorXd& edge_values) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.num_cells()));
  const auto& edges = g.edges();
  for (std::size_t i = 0; i < edges.size(); ++i)
    out[static_cast<Eigen::Index>(edges[i].cell)] += edge_values[static_cast<Eigen::Index>(i)];
  return out;
}

void check_p(double p, double lo) {
  require(p >= lo, ErrorKind::invalid_argument, "exponent p = " + std::to_string(p) + " below " +
                                                    std::to_string(lo));
}

}  // namespace

void VectorField::add_term(FieldTerm term) {
  require_level(term.base.level, level_);
  require(term.weight.size() == static_cast<Eigen::Index>(num_edges_), ErrorKind::invalid_argument,
          "term weight needs one entry per edge");
  terms_.push_back(std::move(term));
  cache_.reset();
}

void VectorField::add_cell_term(const LevelGraph& g, const Eigen::VectorXd& cell_weight,
                                DiscreteFunction base) {
  require(cell_weight.size() == static_cast<Eigen::Index>(g.num_cells()),
          ErrorKind::invalid_argument, "cell weight needs one entry per cell");
  Eigen::VectorXd w(static_cast<Eigen::Index>(g.num_edges()));
  const auto& edges = g.edges();
  for (std::size_t i = 0; i < edges.size(); ++i)
    w[static_cast<Eigen::Index>(i)] = cell_weight[static_cast<Eigen::Index>(edges[i].cell)];
  add_term({std::move(w), std::move(base)});
}

bool VectorField::cell_granular(const LevelGraph& g) const {
  const std::size_t per = g.edges_per_cell();
  for (const auto& t : terms_)
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
      const auto first = static_cast<Eigen::Index>(g.first_edge_of_cell(c));
      for (std::size_t j = 1; j < per; ++j)
        if (t.weight[first + static_cast<Eigen::Index>(j)] != t.weight[first]) return false;
    }
  return true;
}

Eigen::VectorXd VectorField::edge_values(const LevelGraph& g) const {
  require_field(g, *this);
  if (cache_) return *cache_;
  Eigen::VectorXd omega = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_edges_));
  for (const auto& t : terms_) omega += t.weight.cwiseProduct(edge_differences(g, t.base));
  return omega;
}

void VectorField::build_cache(const LevelGraph& g) {
  cache_.reset();
  cache_ = edge_values(g);
}

VectorField operator+(const VectorField& a, const VectorField& b) {
  require_level(a.level(), b.level());
  VectorField out = a;
  for (const auto& t : b.terms()) out.add_term(t);
  return out;
}

VectorField operator*(double s, const VectorField& v) {
  VectorField out(v.level(), v.num_edges());
  for (const auto& t : v.terms()) out.add_term({s * t.weight, t.base});
  return out;
}

double field_inner(const EnergyForm& form, const VectorField& v, const VectorField& w) {
  const auto& g = form.graph();
  require_field(g, v);
  require_field(g, w);
  const auto& edges = g.edges();
  double s = 0.0;
  for (const auto& a : v.terms())
    for (const auto& b : w.terms())
      for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto e = static_cast<Eigen::Index>(i);
        const auto x = static_cast<Eigen::Index>(edges[i].u);
        const auto y = static_cast<Eigen::Index>(edges[i].v);
        s += a.weight[e] * b.weight[e] * (a.base[x] - a.base[y]) * (b.base[x] - b.base[y]);
      }
  return form.conductance() * s;
}

double field_norm(const EnergyForm& form, const VectorField& v) {
  return std::sqrt(std::max(0.0, field_inner(form, v, v)));
}

CellMeasure weighted_energy_measure(const EnergyForm& form, const VectorField& v,
                                    const VectorField& w) {
  const auto& g = form.graph();
  const Eigen::VectorXd prod =
      form.conductance() * v.edge_values(g).cwiseProduct(w.edge_values(g));
  CellMeasure m;
  m.level = g.level();
  m.mass = cell_sums(g, prod);
  m.id = "weighted_energy";
  return m;
}

CellMeasure weighted_energy_measure(const EnergyForm& form, const VectorField& v) {
  CellMeasure m = weighted_energy_measure(form, v, v);
  m.mass = m.mass.cwiseMax(0.0);
  m.nonnegative = true;
  return m;
}

VectorField gradient(const LevelGraph& g, const DiscreteFunction& f) {
  require_function(g, f);
  VectorField v = VectorField::zero(g);
  v.add_term({Eigen::VectorXd::Ones(static_cast<Eigen::Index>(g.num_edges())), f});
  return v;
}

VectorField multiply(const LevelGraph& g, const DiscreteFunction& f, const VectorField& v) {
  require_function(g, f);
  require_field(g, v);
  const auto& edges = g.edges();
  Eigen::VectorXd mean(static_cast<Eigen::Index>(edges.size()));
  for (std::size_t i = 0; i < edges.size(); ++i)
    mean[static_cast<Eigen::Index>(i)] =
        0.5 * (f[static_cast<Eigen::Index>(edges[i].u)] + f[static_cast<Eigen::Index>(edges[i].v)]);
  VectorField out(v.level(), v.num_edges());
  for (const auto& t : v.terms()) out.add_term({t.weight.cwiseProduct(mean), t.base});
  return out;
}

VectorField scale_cells(const LevelGraph& g, const Eigen::VectorXd& cell_values,
                        const VectorField& v) {
  require_field(g, v);
  require(cell_values.size() == static_cast<Eigen::Index>(g.num_cells()),
          ErrorKind::invalid_argument, "cell values need one entry per cell");
  const auto& edges = g.edges();
  VectorField out(v.level(), v.num_edges());
  for (const auto& t : v.terms()) {
    Eigen::VectorXd w = t.weight;
    for (std::size_t i = 0; i < edges.size(); ++i)
      w[static_cast<Eigen::Index>(i)] *= cell_values[static_cast<Eigen::Index>(edges[i].cell)];
    out.add_term({std::move(w), t.base});
  }
  return out;
}

SparseMatrix gradient_matrix(const LevelGraph& g) {
  std::vector<Eigen::Triplet<double>> t;
  const auto& edges = g.edges();
  t.reserve(2 * edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    t.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(edges[i].u), 1.0);
    t.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(edges[i].v), -1.0);
  }
  SparseMatrix d(static_cast<Eigen::Index>(edges.size()),
                 static_cast<Eigen::Index>(g.num_vertices()));
  d.setFromTriplets(t.begin(), t.end());
  return d;
}

SparseMatrix divergence_matrix(const LevelGraph& g) {
  SparseMatrix dt = SparseMatrix(gradient_matrix(g).transpose());
  dt *= -g.conductance();
  return dt;
}

Eigen::VectorXd divergence(const EnergyForm& form, const VectorField& v) {
  const auto& g = form.graph();
  return divergence_matrix(g) * v.edge_values(g);
}

DivergenceDensity divergence_density(const EnergyForm& form, const VectorField& v,
                                     const CellMeasure& measure) {
  const auto& g = form.graph();
  require_measure(g, measure);
  const Eigen::VectorXd w = vertex_weights(g, measure);
  require((w.array() > 0.0).all(), ErrorKind::singular_system,
          "divergence density needs positive vertex weights");
  const Eigen::VectorXd d = divergence(form, v);
  DivergenceDensity out;
  out.density = DiscreteFunction(g.level(), d.cwiseQuotient(w));
  out.residual = (w.cwiseProduct(out.density.values) - d).lpNorm<Eigen::Infinity>();
  return out;
}

Eigen::VectorXd generator_functional(const EnergyForm& form, const DiscreteFunction& g,
                                     const DiscreteFunction& f) {
  require_function(form.graph(), g);
  require_function(form.graph(), f);
  return -g.values.cwiseProduct(form.matrix() * f.values);
}

LpNorm lp_field_norm(const EnergyForm& form, const VectorField& v, const CellMeasure& measure,
                     double p) {
  check_p(p, 1.0);
  const auto& g = form.graph();
  require_measure(g, measure);
  const Eigen::VectorXd gamma = weighted_energy_measure(form, v).mass;
  LpNorm out;
  const bool inf = std::isinf(p);
  double acc = 0.0;
  for (Eigen::Index w = 0; w < gamma.size(); ++w) {
    const double mw = measure.mass[w];
    if (mw <= 0.0) {
      if (gamma[w] > 0.0) out.singular = true;
      continue;
    }
    const double density = gamma[w] / mw;
    if (inf)
      acc = std::max(acc, std::sqrt(density));
    else if (p == 2.0)
      acc += gamma[w];
    else
      acc += std::pow(density, 0.5 * p) * mw;
  }
  if (out.singular && (inf || p > 2.0)) {
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  out.value = inf ? acc : std::pow(acc, 1.0 / p);
  return out;
}

Eigen::VectorXd cell_energies(const EnergyForm& form, const DiscreteFunction& f) {
  const auto& g = form.graph();
  require_function(g, f);
  const Eigen::VectorXd d = edge_differences(g, f);
  return form.conductance() * cell_sums(g, d.cwiseAbs2());
}

double p_energy(const EnergyForm& form, const DiscreteFunction& f, const CellMeasure& measure,
                double p) {
  check_p(p, 2.0);
  require_measure(form.graph(), measure);
  const Eigen::VectorXd gamma = cell_energies(form, f);
  double s = 0.0;
  for (Eigen::Index w = 0; w < gamma.size(); ++w) {
    const double mw = measure.mass[w];
    if (p == 2.0) {
      s += gamma[w];
      continue;
    }
    require(mw > 0.0 || gamma[w] == 0.0, ErrorKind::singular_system,
            "p-energy charges a zero-mass cell");
    if (mw > 0.0) s += std::pow(gamma[w] / mw, 0.5 * p) * mw;
  }
  return s;
}

double p_energy(const EnergyForm& form, const DiscreteFunction& f, const DiscreteFunction& g,
                const CellMeasure& measure, double p) {
  check_p(p, 2.0);
  const auto& graph = form.graph();
  require_measure(graph, measure);
  require_function(graph, g);
  const Eigen::VectorXd gamma = cell_energies(form, f);
  const Eigen::VectorXd cross = form.conductance() *
                                cell_sums(graph, edge_differences(graph, f).cwiseProduct(
                                                     edge_differences(graph, g)));
  double s = 0.0;
  for (Eigen::Index w = 0; w < gamma.size(); ++w) {
    const double mw = measure.mass[w];
    if (p == 2.0) {
      s += cross[w];
      continue;
    }
    if (mw <= 0.0) continue;
    s += std::pow(gamma[w] / mw, 0.5 * p - 1.0) * cross[w];
  }
  return s;
}

Eigen::VectorXd p_energy_gradient(const EnergyForm& form, const DiscreteFunction& f,
                                  const CellMeasure& measure, double p) {
  check_p(p, 2.0);
  const auto& g = form.graph();
  require_measure(g, measure);
  const Eigen::VectorXd gamma = cell_energies(form, f);
  const Eigen::VectorXd d = edge_differences(g, f);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.num_vertices()));
  const double c = form.conductance();
  const auto& edges = g.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto w = static_cast<Eigen::Index>(edges[i].cell);
    const double mw = measure.mass[w];
    double kappa = 1.0;
    if (p != 2.0) kappa = mw > 0.0 ? std::pow(gamma[w] / mw, 0.5 * p - 1.0) : 0.0;
    const double flux = p * kappa * c * d[static_cast<Eigen::Index>(i)];
    grad[static_cast<Eigen::Index>(edges[i].u)] += flux;
    grad[static_cast<Eigen::Index>(edges[i].v)] -= flux;
  }
  return grad;
}

}  // namespace fv
