#include "fractalvec/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include <Eigen/LU>

#include "fractalvec/energy.hpp"
#include "fractalvec/fiber.hpp"
#include "fractalvec/fields.hpp"
#include "fractalvec/quasilinear.hpp"
#include "fractalvec/spde.hpp"
#include "fractalvec/spectrum.hpp"

namespace fv {
namespace {

struct Rng {
  std::mt19937_64 gen;
  std::normal_distribution<double> normal{0.0, 1.0};

  explicit Rng(std::uint64_t seed) : gen(seed) {}
  DiscreteFunction function(const LevelGraph& g) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(g.num_vertices()));
    for (auto& x : v) x = normal(gen);
    return {g.level(), v};
  }
  Eigen::VectorXd vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (auto& x : v) x = normal(gen);
    return v;
  }
};

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

CheckResult make(int id, std::string name, double measured, double tol, bool extra_ok = true,
                 std::string detail = {}) {
  CheckResult r{id, std::move(name), extra_ok && measured <= tol, measured, tol, std::move(detail)};
  if (r.detail.empty()) r.detail = "max error " + sci(measured) + " (tol " + sci(tol) + ")";
  return r;
}

DiscreteFunction times(const DiscreteFunction& a, const DiscreteFunction& b) {
  return {a.level, a.values.cwiseProduct(b.values)};
}

CheckResult renormalization(const InvariantOptions& o) {
  const auto spec = sierpinski_gasket();
  std::vector<LevelGraph> graphs;
  for (int m = 0; m <= 6; ++m) graphs.push_back(build_level(spec, m));
  std::vector<EnergyForm> forms;
  for (const auto& g : graphs) forms.emplace_back(g);
  Rng rng(o.seed);
  double worst = 0.0;
  for (int t = 0; t < o.trials / 2; ++t) {
    DiscreteFunction f = rng.function(graphs[0]);
    const double e0 = energy(forms[0], f);
    for (int m = 1; m <= 6; ++m) {
      f = harmonic_extension(graphs[static_cast<std::size_t>(m - 1)],
                             graphs[static_cast<std::size_t>(m)], f);
      worst = std::max(worst, std::abs(energy(forms[static_cast<std::size_t>(m)], f) - e0) / e0);
    }
  }
  return make(1, "harmonic extension preserves energy", worst, 1e-12);
}

CheckResult carre_du_champ(const InvariantOptions& o) {
  const EnergyForm form(build_level(sierpinski_gasket(), 4));
  const auto& g = form.graph();
  Rng rng(o.seed + 1);
  double worst = 0.0;
  for (int t = 0; t < o.trials; ++t) {
    const auto f = rng.function(g), u = rng.function(g), h = rng.function(g);
    const double lhs = 2.0 * integrate_edge_average(g, f, energy_measure(form, u, h));
    const double rhs = energy(form, times(f, u), h) + energy(form, times(f, h), u) -
                       energy(form, times(u, h), f);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return make(2, "carre du champ identity", worst, 1e-10);
}

CheckResult total_mass(const InvariantOptions& o) {
  const EnergyForm form(build_level(sierpinski_gasket(), 4));
  Rng rng(o.seed + 2);
  double worst = 0.0;
  for (int t = 0; t < o.trials; ++t) {
    const auto a = rng.function(form.graph()), b = rng.function(form.graph());
    const double e = energy(form, a, b);
    worst = std::max(worst, std::abs(energy_measure(form, a, b).total() - e) / std::max(1.0, std::abs(e)));
  }
  return make(3, "energy measure total mass", worst, 1e-12);
}

CheckResult gradient_isometry(const InvariantOptions& o) {
  const EnergyForm form(build_level(sierpinski_gasket(), 4));
  Rng rng(o.seed + 3);
  double worst = 0.0;
  for (int t = 0; t < o.trials; ++t) {
    const auto f = rng.function(form.graph());
    const double n = field_norm(form, gradient(form.graph(), f));
    const double e = energy(form, f);
    worst = std::max(worst, std::abs(n * n - e) / std::max(1.0, e));
  }
  return make(4, "gradient isometry", worst, 1e-12);
}

VectorField random_cell_field(const LevelGraph& g, Rng& rng, int terms) {
  VectorField v = VectorField::zero(g);
  for (int k = 0; k < terms; ++k)
    v.add_cell_term(g, rng.vector(static_cast<Eigen::Index>(g.num_cells())), rng.function(g));
  return v;
}

CheckResult direct_integral(const InvariantOptions& o) {
  const EnergyForm form(build_level(sierpinski_gasket(), 4));
  const auto coords = harmonic_coordinates(form);
  Rng rng(o.seed + 4);
  double worst = 0.0;
  for (int t = 0; t < o.trials; ++t) {
    const auto v = random_cell_field(form.graph(), rng, 2);
    const auto w = random_cell_field(form.graph(), rng, 3);
    const auto rep = direct_integral_check(form, coords, v, w);
    worst = std::max(worst, rep.discrepancy / std::max(1.0, std::abs(rep.global)));
  }
  return make(5, "direct integral isometry", worst, 1e-10);
}

CheckResult kusuoka(const InvariantOptions& o) {
  const auto spec = sierpinski_gasket();
  std::vector<KusuokaMatrices> levels;
  for (int n = 1; n <= o.kusuoka_max_level; ++n) levels.push_back(kusuoka_matrices(spec, n));
  double trace = 0.0, mart = 0.0;
  bool decreasing = true;
  std::string medians;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    trace = std::max(trace, levels[i].max_trace_error);
    const int n = static_cast<int>(i) + 1;
    if (i + 1 < levels.size() && n <= 6)
      mart = std::max(mart, martingale_error(levels[i].metric, levels[i + 1].metric, spec.n_maps));
    if (n >= 2) {
      medians += (medians.empty() ? "" : " ") + sci(levels[i].smaller_eigenvalue.median);
      if (n >= 3 && !(levels[i].smaller_eigenvalue.median < levels[i - 1].smaller_eigenvalue.median))
        decreasing = false;
    }
  }
  const bool ok = trace <= 1e-13 && mart <= 1e-12 && decreasing;
  CheckResult r{6, "kusuoka matrix structure", ok, std::max(trace, mart), 1e-12, {}};
  r.detail = "trace " + sci(trace) + ", martingale " + sci(mart) + ", medians " + medians;
  return r;
}

CheckResult generator(const InvariantOptions& o) {
  const EnergyForm form(build_level(sierpinski_gasket(), 4));
  const auto& g = form.graph();
  Rng rng(o.seed + 6);
  double worst = 0.0;
  for (int t = 0; t < o.trials; ++t) {
    const auto f = rng.function(g), h = rng.function(g), u = rng.function(g);
    const double lhs = -generator_functional(form, h, f).dot(u.values);
    const double rhs = integrate_edge_average(g, h, energy_measure(form, u, f)) +
                       integrate_edge_average(g, u, energy_measure(form, f, h));
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return make(7, "product rule for the generator", worst, 1e-10);
}

CheckResult p_laplace(const InvariantOptions& o) {
  const EnergyForm form(build_level(sierpinski_gasket(), 3));
  const auto measure = kusuoka_measure(form);
  Rng rng(o.seed + 7);
  const auto w = vertex_weights(form.graph(), measure);
  DiscreteFunction f = rng.function(form.graph());
  f.values.array() -= f.values.dot(w) / w.sum();

  SolverOptions opt;
  opt.tol = 1e-12;
  const auto lin = solve_p_laplace(form, f, 2.0, measure, Constraint::zero_mean(), opt);
  // Linear reference: K u = -W f, mean zero.
  Eigen::MatrixXd k = Eigen::MatrixXd(form.matrix());
  k.row(0) = w.transpose();
  Eigen::VectorXd rhs = -w.cwiseProduct(f.values);
  rhs[0] = 0.0;
  const Eigen::VectorXd ref = k.fullPivLu().solve(rhs);
  const double linear_err = (lin.u.values - ref).lpNorm<Eigen::Infinity>();

  const double p = 4.0, lambda = 3.0;
  const auto u1 = solve_p_laplace(form, f, p, measure, Constraint::zero_mean(), opt);
  const DiscreteFunction lf{f.level, lambda * f.values};
  const auto u2 = solve_p_laplace(form, lf, p, measure, Constraint::zero_mean(), opt);
  const double homog = (u2.u.values - std::pow(lambda, 1.0 / (p - 1.0)) * u1.u.values)
                           .lpNorm<Eigen::Infinity>() /
                       std::max(1.0, u2.u.values.lpNorm<Eigen::Infinity>());

  double spread = 0.0;
  const auto a = MonotoneCoefficient::strictly_monotone(p);
  for (int t = 0; t < 5; ++t) {
    SolverOptions s = opt;
    s.initial = rng.function(form.graph());
    const auto r = solve_divergence_form(form, a, f, measure, Constraint::zero_mean(), s);
    const auto base = solve_divergence_form(form, a, f, measure, Constraint::zero_mean(), opt);
    spread = std::max(spread, (r.u.values - base.u.values).lpNorm<Eigen::Infinity>());
  }
  const bool ok = linear_err <= 1e-10 && homog <= 1e-7 && spread <= 1e-7;
  CheckResult r{8, "p-Laplace solver", ok, std::max({linear_err, homog, spread}), 1e-7, {}};
  r.detail = "linear " + sci(linear_err) + ", homogeneity " + sci(homog) + ", restarts " + sci(spread);
  return r;
}

CheckResult conditions(const InvariantOptions& o) {
  const EnergyForm form(build_level(sierpinski_gasket(), 3));
  const auto measure = kusuoka_measure(form);
  const auto good = verify_conditions(form, MonotoneCoefficient::p_laplace(4.0), measure, o.probes, o.seed);
  const auto bad = verify_conditions(form, MonotoneCoefficient::sign_flipped(MonotoneCoefficient::p_laplace(4.0)),
                                     measure, o.probes, o.seed);
  CheckResult r{9, "structural conditions on a", good.all_pass() && !bad.monotone, 0.0, 0.0, {}};
  r.detail = std::string("p-Laplace ") + (good.all_pass() ? "passes" : "fails") +
             ", sign-flipped " + (bad.monotone ? "accepted" : "rejected");
  return r;
}

CheckResult spde(const InvariantOptions& o) {
  const EnergyForm form(build_level(sierpinski_gasket(), 3));
  const auto measure = kusuoka_measure(form);
  const auto spec = spectrum(form, measure, 12);
  const auto noise = inverse_square_noise(spec, 10, 1.0, o.seed);
  SpdeOptions opt;
  opt.T = 0.02;
  opt.dt = 1e-3;
  double growth = 0.0;
  for (double p : {2.0, 4.0}) {
    const auto rep = uniqueness_probe(form, MonotoneCoefficient::p_laplace(p), noise, measure, 2, o.seed, opt);
    growth = std::max(growth, rep.max_growth);
  }
  const DiscreteFunction u0{form.level(), spec.eigenvectors.col(1)};
  const auto a = simulate(form, MonotoneCoefficient::identity(), u0, noise, measure, opt, 3);
  const auto b = simulate(form, MonotoneCoefficient::identity(), u0, noise, measure, opt, 3);
  const bool same = a.l2_norm == b.l2_norm && a.p_energy == b.p_energy;
  CheckResult r{10, "SPDE contraction and reproducibility", growth <= 1.0 + 1e-10 && same,
                growth - 1.0, 1e-10, {}};
  r.detail = "max growth factor " + sci(growth) + (same ? ", reproducible" : ", NOT reproducible");
  return r;
}

CheckResult poincare(const InvariantOptions& o) {
  const EnergyForm form(build_level(sierpinski_gasket(), 3));
  const auto measure = kusuoka_measure(form);
  const auto p2 = poincare_constant(form, measure, 2.0);
  const double err = std::abs(p2.best_constant * p2.lambda1 - 1.0);
  const auto p4 = poincare_constant(form, measure, 4.0);
  const auto ratios = sample_poincare_ratios(form, measure, 4.0, o.trials / 5, 50, o.seed);
  const double worst = *std::max_element(ratios.begin(), ratios.end());
  CheckResult r{11, "Poincare constants", err <= 1e-12 && worst <= p4.certified_upper, err, 1e-12, {}};
  r.detail = "c_P*lambda1-1 " + sci(err) + ", p=4 sampled " + sci(worst) + " <= certified " +
             sci(p4.certified_upper);
  return r;
}

CheckResult holder(const InvariantOptions& o) {
  const EnergyForm form(build_level(sierpinski_gasket(), 3));
  const auto measure = kusuoka_measure(form);
  Rng rng(o.seed + 12);
  std::uniform_real_distribution<double> pick(1.05, 8.0);
  double worst = -1e300;
  for (int t = 0; t < o.trials; ++t) {
    const auto v = random_cell_field(form.graph(), rng, 2);
    const auto w = random_cell_field(form.graph(), rng, 2);
    const double p = pick(rng.gen), q = p / (p - 1.0);
    const double lhs = weighted_energy_measure(form, v, w).mass.cwiseAbs().sum();
    const double rhs = lp_field_norm(form, v, measure, p).value * lp_field_norm(form, w, measure, q).value;
    worst = std::max(worst, (lhs - rhs) / std::max(1.0, rhs));
  }
  return make(12, "Hoelder inequality for fields", std::max(worst, 0.0), 1e-12, worst <= 1e-12,
              "max excess " + sci(worst));
}

}  // namespace

std::vector<CheckResult> run_invariants(const InvariantOptions& options) {
  using Fn = CheckResult (*)(const InvariantOptions&);
  const Fn checks[] = {renormalization, carre_du_champ, total_mass, gradient_isometry,
                       direct_integral, kusuoka,        generator,  p_laplace,
                       conditions,      spde,           poincare,   holder};
  std::vector<CheckResult> out;
  for (std::size_t i = 0; i < std::size(checks); ++i) {
    try {
      out.push_back(checks[i](options));
    } catch (const std::exception& e) {
      out.push_back({static_cast<int>(i) + 1, "check " + std::to_string(i + 1), false, 0.0, 0.0,
                     std::string("threw: ") + e.what()});
    }
  }
  return out;
}

}  // namespace fv
