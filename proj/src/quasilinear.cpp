#include "fractalvec/quasilinear.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/SparseCholesky>

#include "fractalvec/error.hpp"
#include "fractalvec/spectrum.hpp"

namespace fv {

MonotoneCoefficient MonotoneCoefficient::identity() {
  return {"identity", 2.0, [](double) { return 1.0; }, [](double) { return 0.0; },
          [](double d) { return 0.5 * d; }};
}

MonotoneCoefficient MonotoneCoefficient::p_laplace(double p) {
  require(p >= 2.0, ErrorKind::invalid_argument, "p-Laplace coefficient needs p >= 2");
  if (p == 2.0) {
    auto c = identity();
    c.name = "p_laplace";
    return c;
  }
  const double e = 0.5 * (p - 2.0);
  return {"p_laplace", p, [e](double d) { return std::pow(d, e); },
          [e](double d) { return d > 0.0 ? e * std::pow(d, e - 1.0) : 0.0; },
          [p](double d) { return std::pow(d, 0.5 * p) / p; }};
}

MonotoneCoefficient MonotoneCoefficient::strictly_monotone(double p) {
  const MonotoneCoefficient base = p_laplace(p);
  return {"strictly_monotone", p, [k = base.kappa](double d) { return 1.0 + k(d); },
          base.kappa_prime,
          [phi = base.potential](double d) { return 0.5 * d + phi(d); }};
}

MonotoneCoefficient MonotoneCoefficient::sign_flipped(const MonotoneCoefficient& base) {
  return {base.name + "_sign_flipped", base.p, [k = base.kappa](double d) { return -k(d); },
          [k = base.kappa_prime](double d) { return -k(d); },
          [phi = base.potential](double d) { return -phi(d); }};
}

Constraint Constraint::dirichlet(std::vector<std::size_t> vertices, std::vector<double> values) {
  require(values.empty() || values.size() == vertices.size(), ErrorKind::invalid_argument,
          "Dirichlet values must match the constrained vertices");
  return {ConstraintKind::dirichlet, std::move(vertices), std::move(values)};
}

Drift Drift::sqrt_density(double eps, double offset) {
  return {"sqrt_density", [eps, offset](double d) { return eps * std::sqrt(std::max(d, 0.0)) + offset; }};
}

Drift Drift::zero() {
  return {"zero", [](double) { return 0.0; }};
}

namespace {

Eigen::VectorXd cell_densities(const EnergyForm& form, const Eigen::VectorXd& u,
                               const Eigen::VectorXd& mass) {
  const Eigen::VectorXd gamma = cell_energies(form, DiscreteFunction(form.level(), u));
  return gamma.cwiseQuotient(mass);
}

void require_positive_masses(const CellMeasure& measure) {
  require((measure.mass.array() > 0.0).all(), ErrorKind::invalid_argument,
          "solver needs a measure with positive cell masses");
}

// Free-index bookkeeping shared by the Newton solve and the residual.
struct ConstraintMap {
  std::vector<Eigen::Index> free_index;
  Eigen::Index num_free = 0;
  bool project_mean = false;
};

ConstraintMap make_constraint_map(std::size_t n, const Constraint& c, double sigma) {
  ConstraintMap map;
  map.free_index.assign(n, -1);
  std::vector<bool> fixed(n, false);
  switch (c.kind) {
    case ConstraintKind::dirichlet:
      require(!c.vertices.empty(), ErrorKind::invalid_argument, "Dirichlet set is empty");
      for (auto v : c.vertices) {
        require(v < n, ErrorKind::invalid_argument, "Dirichlet vertex out of range");
        fixed[v] = true;
      }
      break;
    case ConstraintKind::zero_mean:
      // The energy is blind to constants; pin one vertex and restore the mean afterwards.
      if (sigma == 0.0) fixed[0] = true;
      map.project_mean = true;
      break;
    case ConstraintKind::none:
      require(sigma > 0.0, ErrorKind::singular_system,
              "unconstrained problem without mass term is singular; pick zero_mean or dirichlet");
      break;
  }
  for (std::size_t v = 0; v < n; ++v)
    if (!fixed[v]) map.free_index[v] = map.num_free++;
  return map;
}

void project_mean(Eigen::VectorXd& u, const Eigen::VectorXd& w) { u.array() -= w.dot(u) / w.sum(); }

Eigen::VectorXd full_gradient(const EnergyForm& form, const MonotoneProblem& pr,
                              const Eigen::VectorXd& mass, const Eigen::VectorXd& w,
                              const Eigen::VectorXd& u) {
  const auto& g = form.graph();
  const Eigen::VectorXd d = cell_densities(form, u, mass);
  Eigen::VectorXd grad = pr.sigma * w.cwiseProduct(u) + pr.load;
  const double c = form.conductance();
  for (const auto& e : g.edges()) {
    const auto x = static_cast<Eigen::Index>(e.u);
    const auto y = static_cast<Eigen::Index>(e.v);
    const double flux = pr.alpha * pr.coefficient.kappa(d[static_cast<Eigen::Index>(e.cell)]) * c *
                        (u[x] - u[y]);
    grad[x] += flux;
    grad[y] -= flux;
  }
  return grad;
}

double residual_norm(const Eigen::VectorXd& grad, const ConstraintMap& map, const Constraint& c,
                     const Eigen::VectorXd& w) {
  if (c.kind == ConstraintKind::zero_mean) {
    Eigen::VectorXd r = grad;
    if (!map.free_index.empty() && map.free_index[0] < 0) r -= w * (r.sum() / w.sum());
    return r.lpNorm<Eigen::Infinity>();
  }
  double best = 0.0;
  for (std::size_t v = 0; v < map.free_index.size(); ++v)
    if (map.free_index[v] >= 0) best = std::max(best, std::abs(grad[static_cast<Eigen::Index>(v)]));
  return best;
}

SparseMatrix newton_matrix(const EnergyForm& form, const MonotoneProblem& pr,
                           const Eigen::VectorXd& mass, const Eigen::VectorXd& w,
                           const Eigen::VectorXd& u, double eps2, const ConstraintMap& map) {
  const auto& g = form.graph();
  const auto& spec = g.spec();
  const Eigen::VectorXd d = cell_densities(form, u, mass);
  const double c = form.conductance();
  const auto k = static_cast<Eigen::Index>(g.corners_per_cell());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(k * k) * g.num_cells() + g.num_vertices());
  Eigen::MatrixXd block(k, k);
  Eigen::VectorXd ku(k);
  for (std::size_t cell = 0; cell < g.num_cells(); ++cell) {
    const auto corners = g.cell_vertices(cell);
    const double dc = d[static_cast<Eigen::Index>(cell)] + eps2;
    const double kap = pr.coefficient.kappa(dc);
    const double kp = pr.coefficient.kappa_prime(dc);
    block.setZero();
    ku.setZero();
    for (const auto& [a, b] : spec.cell_edges) {
      const double du = u[static_cast<Eigen::Index>(corners[static_cast<std::size_t>(a)])] -
                        u[static_cast<Eigen::Index>(corners[static_cast<std::size_t>(b)])];
      block(a, a) += c * kap;
      block(b, b) += c * kap;
      block(a, b) -= c * kap;
      block(b, a) -= c * kap;
      ku[a] += c * du;
      ku[b] -= c * du;
    }
    block += (2.0 * kp / mass[static_cast<Eigen::Index>(cell)]) * ku * ku.transpose();
    block *= pr.alpha;
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto ri = map.free_index[corners[static_cast<std::size_t>(i)]];
      if (ri < 0) continue;
      for (Eigen::Index j = 0; j < k; ++j) {
        const auto cj = map.free_index[corners[static_cast<std::size_t>(j)]];
        if (cj >= 0) t.emplace_back(ri, cj, block(i, j));
      }
    }
  }
  if (pr.sigma != 0.0)
    for (std::size_t v = 0; v < g.num_vertices(); ++v)
      if (map.free_index[v] >= 0)
        t.emplace_back(map.free_index[v], map.free_index[v], pr.sigma * w[static_cast<Eigen::Index>(v)]);
  SparseMatrix h(map.num_free, map.num_free);
  h.setFromTriplets(t.begin(), t.end());
  return h;
}

double monotone_energy_with(const EnergyForm& form, const CellMeasure& measure,
                            const MonotoneProblem& pr, const Eigen::VectorXd& w,
                            const Eigen::VectorXd& u);

// Degenerate coefficients make the first Newton matrix nearly singular at u = 0.
// Start instead from the best multiple of the linear solution along the ray.
Eigen::VectorXd warm_start(const EnergyForm& form, const CellMeasure& measure,
                           const MonotoneProblem& pr, const Eigen::VectorXd& w,
                           const ConstraintMap& map, const Eigen::VectorXd& u0) {
  MonotoneProblem linear = pr;
  linear.coefficient = MonotoneCoefficient::identity();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(u0.size());
  const SparseMatrix h = newton_matrix(form, linear, measure.mass, w, zero, 0.0, map);
  const Eigen::VectorXd g = full_gradient(form, linear, measure.mass, w, u0);
  Eigen::VectorXd rhs(map.num_free);
  for (std::size_t v = 0; v < map.free_index.size(); ++v)
    if (map.free_index[v] >= 0) rhs[map.free_index[v]] = -g[static_cast<Eigen::Index>(v)];
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(h);
  if (ldlt.info() != Eigen::Success) return u0;
  const Eigen::VectorXd x = ldlt.solve(rhs);
  Eigen::VectorXd dir = Eigen::VectorXd::Zero(u0.size());
  for (std::size_t v = 0; v < map.free_index.size(); ++v)
    if (map.free_index[v] >= 0) dir[static_cast<Eigen::Index>(v)] = x[map.free_index[v]];
  if (map.project_mean) project_mean(dir, w);
  if (!dir.allFinite() || dir.squaredNorm() == 0.0) return u0;

  // J(u0 + s dir) is convex in s; bracket the minimizer and bisect on the slope.
  auto slope = [&](double s) {
    return full_gradient(form, pr, measure.mass, w, u0 + s * dir).dot(dir);
  };
  if (slope(0.0) >= 0.0) return u0;
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200 && slope(hi) < 0.0; ++i) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (slope(mid) < 0.0 ? lo : hi) = mid;
  }
  const Eigen::VectorXd best = u0 + 0.5 * (lo + hi) * dir;
  return monotone_energy_with(form, measure, pr, w, best) <= monotone_energy_with(form, measure, pr, w, u0)
             ? best
             : u0;
}

double monotone_energy_with(const EnergyForm& form, const CellMeasure& measure,
                            const MonotoneProblem& pr, const Eigen::VectorXd& w,
                            const Eigen::VectorXd& u) {
  const Eigen::VectorXd d = cell_densities(form, u, measure.mass);
  double s = 0.0;
  for (Eigen::Index c = 0; c < d.size(); ++c) s += measure.mass[c] * pr.coefficient.potential(d[c]);
  return pr.alpha * s + 0.5 * pr.sigma * u.dot(w.cwiseProduct(u)) + pr.load.dot(u);
}

}  // namespace

double monotone_energy(const EnergyForm& form, const CellMeasure& measure,
                       const MonotoneProblem& problem, const Eigen::VectorXd& u) {
  return monotone_energy_with(form, measure, problem, vertex_weights(form.graph(), measure), u);
}

double weak_residual(const EnergyForm& form, const CellMeasure& measure,
                     const MonotoneProblem& problem, const Eigen::VectorXd& u) {
  const Eigen::VectorXd w = vertex_weights(form.graph(), measure);
  const ConstraintMap map = make_constraint_map(form.graph().num_vertices(), problem.constraint,
                                                problem.sigma);
  return residual_norm(full_gradient(form, problem, measure.mass, w, u), map, problem.constraint, w);
}

SolveResult solve_monotone(const EnergyForm& form, const CellMeasure& measure,
                           const MonotoneProblem& pr, const SolverOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  const auto& g = form.graph();
  require_level(measure.level, g.level());
  require_positive_masses(measure);
  const auto n = static_cast<Eigen::Index>(g.num_vertices());
  require(pr.load.size() == n, ErrorKind::invalid_argument, "load needs one entry per vertex");
  require(pr.alpha > 0.0 && pr.sigma >= 0.0, ErrorKind::invalid_argument,
          "solver needs alpha > 0 and sigma >= 0");
  const Eigen::VectorXd w = vertex_weights(g, measure);
  const Eigen::VectorXd& mass = measure.mass;
  const ConstraintMap map = make_constraint_map(g.num_vertices(), pr.constraint, pr.sigma);

  if (pr.constraint.kind == ConstraintKind::zero_mean && pr.sigma == 0.0) {
    const double total = pr.load.sum();
    require(std::abs(total) <= 1e-10 * std::max(1.0, pr.load.cwiseAbs().sum()),
            ErrorKind::invalid_argument,
            "zero-mean constraint needs a load with vanishing integral (got " +
                std::to_string(total) + ")");
  }

  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  if (opt.initial) {
    require_level(opt.initial->level, g.level());
    require(opt.initial->size() == n, ErrorKind::invalid_argument, "initial guess has wrong length");
    u = opt.initial->values;
  }
  if (pr.constraint.kind == ConstraintKind::dirichlet)
    for (std::size_t i = 0; i < pr.constraint.vertices.size(); ++i)
      u[static_cast<Eigen::Index>(pr.constraint.vertices[i])] =
          pr.constraint.values.empty() ? 0.0 : pr.constraint.values[i];
  if (map.project_mean) project_mean(u, w);
  if (!opt.initial && pr.coefficient.p != 2.0) u = warm_start(form, measure, pr, w, map, u);

  const double eps2 = opt.regularization * opt.regularization;
  SolveResult out;
  SolveReport& rep = out.report;
  double energy = monotone_energy_with(form, measure, pr, w, u);
  Eigen::VectorXd grad = full_gradient(form, pr, mass, w, u);
  double residual = residual_norm(grad, map, pr.constraint, w);
  rep.log.push_back({0, residual, energy, 0.0});

  double shift = 0.0;
  int it = 0;
  while (residual >= opt.tol && it < opt.max_iter) {
    ++it;
    SparseMatrix h = newton_matrix(form, pr, mass, w, u, eps2, map);
    Eigen::VectorXd rhs(map.num_free);
    for (std::size_t v = 0; v < map.free_index.size(); ++v)
      if (map.free_index[v] >= 0) rhs[map.free_index[v]] = -grad[static_cast<Eigen::Index>(v)];

    Eigen::VectorXd delta = Eigen::VectorXd::Zero(n);
    const double scale = h.diagonal().cwiseAbs().maxCoeff();
    for (int attempt = 0;; ++attempt) {
      SparseMatrix shifted = h;
      if (shift > 0.0)
        for (Eigen::Index i = 0; i < shifted.rows(); ++i) shifted.coeffRef(i, i) += shift * scale;
      Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted);
      bool ok = ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all();
      if (ok) {
        const Eigen::VectorXd x = ldlt.solve(rhs);
        for (std::size_t v = 0; v < map.free_index.size(); ++v)
          if (map.free_index[v] >= 0) delta[static_cast<Eigen::Index>(v)] = x[map.free_index[v]];
        ok = x.allFinite();
      }
      if (ok) break;
      require(attempt < 40, ErrorKind::non_convergence, "Newton matrix stays indefinite");
      shift = shift == 0.0 ? 1e-12 : 10.0 * shift;
    }
    if (map.project_mean) project_mean(delta, w);

    const double slope = grad.dot(delta);
    double step = opt.damping;
    bool accepted = false;
    Eigen::VectorXd trial;
    double trial_energy = energy;
    while (step > 1e-14) {
      trial = u + step * delta;
      trial_energy = monotone_energy_with(form, measure, pr, w, trial);
      if (trial_energy <= energy + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      // Near the minimizer J is flat to rounding; accept if the residual still drops.
      if (trial_energy <= energy + 1e-13 * std::max(1.0, std::abs(energy))) {
        const double r = residual_norm(full_gradient(form, pr, mass, w, trial), map, pr.constraint, w);
        if (r < residual) {
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (shift < 1e6) {
        shift = shift == 0.0 ? 1e-8 : 100.0 * shift;
        rep.log.push_back({it, residual, energy, 0.0});
        continue;
      }
      break;
    }
    shift *= 0.1;
    if (shift < 1e-14) shift = 0.0;
    u = trial;
    energy = trial_energy;
    grad = full_gradient(form, pr, mass, w, u);
    residual = residual_norm(grad, map, pr.constraint, w);
    rep.log.push_back({it, residual, energy, step});
  }

  rep.iterations = it;
  rep.residual = residual;
  rep.energy = energy;
  rep.converged = residual < opt.tol;
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.u = DiscreteFunction(g.level(), u);
  return out;
}

SolveResult solve_divergence_form(const EnergyForm& form, const MonotoneCoefficient& a,
                                  const DiscreteFunction& f, const CellMeasure& measure,
                                  const Constraint& constraint, const SolverOptions& options) {
  require_level(f.level, form.level());
  MonotoneProblem pr;
  pr.coefficient = a;
  pr.load = vertex_weights(form.graph(), measure).cwiseProduct(f.values);
  pr.constraint = constraint;
  return solve_monotone(form, measure, pr, options);
}

SolveResult solve_p_laplace(const EnergyForm& form, const DiscreteFunction& f, double p,
                            const CellMeasure& measure, const Constraint& constraint,
                            const SolverOptions& options) {
  return solve_divergence_form(form, MonotoneCoefficient::p_laplace(p), f, measure, constraint,
                               options);
}

VectorField apply_coefficient(const EnergyForm& form, const MonotoneCoefficient& a,
                              const VectorField& v, const CellMeasure& measure) {
  const Eigen::VectorXd gamma = weighted_energy_measure(form, v).mass;
  Eigen::VectorXd scale(gamma.size());
  for (Eigen::Index c = 0; c < gamma.size(); ++c) {
    require(measure.mass[c] > 0.0, ErrorKind::invalid_argument,
            "coefficient needs positive cell masses");
    scale[c] = a.kappa(gamma[c] / measure.mass[c]);
  }
  return scale_cells(form.graph(), scale, v);
}

Eigen::VectorXd evaluate_drift(const EnergyForm& form, const Drift& b, const DiscreteFunction& u,
                               const CellMeasure& measure) {
  const auto& g = form.graph();
  require_positive_masses(measure);
  const Eigen::VectorXd d = cell_densities(form, u.values, measure.mass);
  const Eigen::VectorXd w = vertex_weights(g, measure);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.num_vertices()));
  const double share = 1.0 / g.corners_per_cell();
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    const double bc = b.of_density(d[ci]);
    for (auto v : g.cell_vertices(c)) out[static_cast<Eigen::Index>(v)] += share * measure.mass[ci] * bc;
  }
  return out.cwiseQuotient(w);
}

NondivergenceResult solve_nondivergence(const EnergyForm& form, const Drift& b, double rho,
                                        const CellMeasure& measure,
                                        const NondivergenceOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  require(rho > 0.0, ErrorKind::invalid_argument, "non-divergence problem needs rho > 0");
  const auto& g = form.graph();
  require_positive_masses(measure);
  const int level = g.level();
  const Eigen::VectorXd w = vertex_weights(g, measure);
  const auto n = w.size();
  auto l2 = [&](const Eigen::VectorXd& x) { return std::sqrt(x.dot(w.cwiseProduct(x))); };

  SparseMatrix a = form.matrix();
  for (Eigen::Index i = 0; i < n; ++i) a.coeffRef(i, i) += rho * w[i];
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(a);
  require(ldlt.info() == Eigen::Success, ErrorKind::singular_system,
          "E + rho <.,.> is not positive definite");
  auto picard = [&](const Eigen::VectorXd& u) -> Eigen::VectorXd {
    const Eigen::VectorXd bu = evaluate_drift(form, b, DiscreteFunction(level, u), measure);
    return ldlt.solve(-w.cwiseProduct(bu));
  };

  NondivergenceResult out;
  NondivergenceReport& rep = out.report;
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;

  // Growth constant c4 from probes over several scales.
  for (int i = 0; i < opt.growth_probes; ++i) {
    Eigen::VectorXd v(n);
    for (Eigen::Index j = 0; j < n; ++j) v[j] = normal(rng);
    v *= std::pow(10.0, -2.0 + 4.0 * i / std::max(1, opt.growth_probes - 1)) / l2(v);
    const DiscreteFunction f(level, v);
    const double bv = l2(evaluate_drift(form, b, f, measure));
    rep.c4 = std::max(rep.c4, bv / (1.0 + std::sqrt(energy(form, f))));
  }
  const double kappa = std::min(0.5, rho - 0.5 * rep.c4 * rep.c4);
  rep.a_priori_bound = kappa > 0.0 ? rep.c4 / kappa : std::numeric_limits<double>::infinity();

  // u = 0 solves the homogeneous drift case, so start away from it.
  Eigen::VectorXd u(n);
  for (Eigen::Index j = 0; j < n; ++j) u[j] = normal(rng);
  u /= l2(u);

  double theta = 1.0;
  double previous = std::numeric_limits<double>::infinity();
  int it = 0;
  double residual = 0.0;
  for (;; ++it) {
    const Eigen::VectorXd next = picard(u);
    residual = l2(u - next);
    rep.solve.log.push_back({it, residual, std::sqrt(energy(form, DiscreteFunction(level, u)) +
                                                     u.dot(w.cwiseProduct(u))),
                             theta});
    if (residual < opt.tol || it >= opt.max_iter) break;
    if (residual > previous) {
      theta *= 0.5;
      if (rep.damping_activated_at < 0) rep.damping_activated_at = it;
    }
    previous = residual;
    u = (1.0 - theta) * u + theta * next;
  }
  rep.damping = theta;
  rep.solve.iterations = it;
  rep.solve.residual = residual;
  rep.solve.converged = residual < opt.tol;
  rep.solution_norm = rep.solve.log.back().energy;
  rep.solve.energy = rep.solution_norm;
  rep.solve.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.u = DiscreteFunction(level, u);
  return out;
}

ConditionReport verify_conditions(const EnergyForm& form, const MonotoneCoefficient& a,
                                  const CellMeasure& measure, int probes, std::uint64_t seed) {
  require(probes >= 2, ErrorKind::invalid_argument, "need at least two probes");
  const auto& g = form.graph();
  require_positive_masses(measure);
  const int level = g.level();
  const double p = a.p;
  const double q = p / (p - 1.0);
  const Eigen::VectorXd w = vertex_weights(g, measure);
  const auto n = w.size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(-2.0, 2.0);

  auto random_function = [&](double scale) {
    Eigen::VectorXd v(n);
    for (Eigen::Index j = 0; j < n; ++j) v[j] = normal(rng);
    project_mean(v, w);
    v *= scale / std::sqrt(v.dot(w.cwiseProduct(v)));
    return DiscreteFunction(level, v);
  };
  auto pair = [&](const VectorField& x, const VectorField& y) { return field_inner(form, x, y); };
  auto growth_ratio = [&](const VectorField& v) {
    const double av = lp_field_norm(form, apply_coefficient(form, a, v, measure), measure, q).value;
    return av / (1.0 + std::pow(lp_field_norm(form, v, measure, p).value, p - 1.0));
  };

  ConditionReport rep;
  rep.probes = probes;
  rep.worst_monotone = std::numeric_limits<double>::infinity();
  rep.worst_coercive = std::numeric_limits<double>::infinity();
  rep.c1_h = std::numeric_limits<double>::infinity();

  const PoincareResult pc = poincare_constant(form, measure, p);
  rep.poincare_constant = pc.best_constant;
  rep.c1 = 1.0 / (1.0 + rep.poincare_constant);
  rep.c2 = 0.0;

  std::vector<double> scales;
  std::vector<std::pair<double, double>> h_samples;  // (|v|^2, <a(v), v>)
  double largest = 0.0;
  DiscreteFunction largest_f;
  for (int i = 0; i < probes; ++i) {
    const double s1 = std::pow(10.0, uniform(rng));
    const double s2 = std::pow(10.0, uniform(rng));
    const DiscreteFunction f = random_function(s1);
    const DiscreteFunction h = random_function(s2);
    const VectorField v = gradient(g, f);
    const VectorField u = gradient(g, h);
    const VectorField av = apply_coefficient(form, a, v, measure);
    const VectorField au = apply_coefficient(form, a, u, measure);

    const double nv = field_norm(form, v);
    const double nu = field_norm(form, u);
    const double mono = pair(av, v) - pair(av, u) - pair(au, v) + pair(au, u);
    rep.worst_monotone = std::min(rep.worst_monotone, mono / std::pow(nv + nu, 2));

    const double ratio = growth_ratio(v);
    scales.push_back(s1);
    if (s1 < 1.0)
      rep.c0_small = std::max(rep.c0_small, ratio);
    else
      rep.c0_large = std::max(rep.c0_large, ratio);
    if (s1 > largest) {
      largest = s1;
      largest_f = f;
    }

    const double lhs = pair(av, v);
    const double lp = w.dot(f.values.cwiseAbs().array().pow(p).matrix());
    const double sobolev = lp + std::pow(lp_field_norm(form, v, measure, p).value, p);
    rep.worst_coercive =
        std::min(rep.worst_coercive, (lhs - rep.c1 * sobolev) / std::max(std::abs(lhs), 1e-300));
    h_samples.emplace_back(nv * nv, lhs);
  }
  rep.c0 = std::max(rep.c0_small, rep.c0_large);
  rep.monotone = rep.worst_monotone >= -1e-12;

  // Boundedness: push the largest probe two decades further out.
  double far = 0.0;
  for (double factor : {10.0, 100.0}) {
    const DiscreteFunction f(level, factor * largest_f.values);
    far = std::max(far, growth_ratio(gradient(g, f)));
  }
  rep.growth = std::isfinite(rep.c0) && far <= 1.5 * rep.c0;

  rep.coercive = rep.c1 > 0.0 && rep.worst_coercive >= -1e-12;

  for (const auto& [n2, lhs] : h_samples)
    if (n2 >= 1.0) rep.c1_h = std::min(rep.c1_h, lhs / n2);
  if (!std::isfinite(rep.c1_h)) rep.c1_h = 0.0;
  for (const auto& [n2, lhs] : h_samples) rep.c2_h = std::max(rep.c2_h, rep.c1_h * n2 - lhs);

  // Hemicontinuity: lambda -> <a(du + lambda dv), dw> near zero.
  const int sweeps = std::min(probes, 10);
  for (int i = 0; i < sweeps; ++i) {
    const DiscreteFunction f = random_function(std::pow(10.0, uniform(rng)));
    const DiscreteFunction h = random_function(1.0);
    const DiscreteFunction t = random_function(1.0);
    const VectorField test = gradient(g, t);
    auto value = [&](double lambda) {
      const DiscreteFunction x(level, f.values + lambda * h.values);
      return pair(apply_coefficient(form, a, gradient(g, x), measure), test);
    };
    const double f0 = value(0.0);
    const double gap = std::abs(value(1e-9) - f0) / (1.0 + std::abs(f0));
    rep.hemicontinuity_gap = std::max(rep.hemicontinuity_gap, gap);
  }
  rep.hemicontinuous = rep.hemicontinuity_gap < 1e-6;
  return rep;
}

Eigen::VectorXd interval_p_laplace_reference(const Eigen::VectorXd& f, const Eigen::VectorXd& weights,
                                             double p) {
  const Eigen::Index nodes = f.size();
  require(nodes >= 3 && weights.size() == nodes, ErrorKind::invalid_argument,
          "reference needs matching node data");
  const Eigen::Index cells = nodes - 1;
  const double h = 1.0 / static_cast<double>(cells);
  auto shoot = [&](double sigma0, Eigen::VectorXd* u) {
    double sigma = sigma0;
    double x = 0.0;
    if (u) (*u)[0] = 0.0;
    for (Eigen::Index c = 0; c < cells; ++c) {
      if (c > 0) sigma += weights[c] * f[c];
      const double slope = std::copysign(std::pow(std::abs(sigma), 1.0 / (p - 1.0)), sigma);
      x += slope * h;
      if (u) (*u)[c + 1] = x;
    }
    return x;
  };
  double lo = -1.0, hi = 1.0;
  while (shoot(lo, nullptr) > 0.0) lo *= 2.0;
  while (shoot(hi, nullptr) < 0.0) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (shoot(mid, nullptr) > 0.0 ? hi : lo) = mid;
  }
  Eigen::VectorXd u(nodes);
  shoot(0.5 * (lo + hi), &u);
  u[cells] = 0.0;
  return u;
}

}  // namespace fv
