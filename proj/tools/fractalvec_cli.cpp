// fractalvec: command-line driver. Every run writes resolved_config.json next
// to its outputs; every output carries the hash of that file's contents.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fractalvec/energy.hpp"
#include "fractalvec/error.hpp"
#include "fractalvec/fiber.hpp"
#include "fractalvec/fields.hpp"
#include "fractalvec/invariants.hpp"
#include "fractalvec/io.hpp"
#include "fractalvec/quasilinear.hpp"
#include "fractalvec/spde.hpp"
#include "fractalvec/spectrum.hpp"

namespace fs = std::filesystem;
using fv::Json;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNonConvergence = 3;
constexpr int kExitInvariant = 4;

struct Run {
  Json config;
  std::string hash;
  fs::path out;

  const Json& operator[](const char* pointer) const { return config[Json::json_pointer(pointer)]; }
  fs::path file(const std::string& name) const { return out / name; }
};

Run prepare(const std::string& config_path, const Json& flags, const std::vector<std::string>& overrides) {
  Json user = config_path.empty() ? Json::object() : fv::read_json(config_path);
  if (!user.is_object()) throw fv::Error(fv::ErrorKind::config, "config file must hold a JSON object");
  for (const auto& [pointer, value] : flags.items()) user[Json::json_pointer(pointer)] = value;
  for (const auto& o : overrides) fv::apply_override(user, o);

  Run run;
  run.config = fv::resolve_config(user);
  run.hash = fv::config_hash(run.config);
  fs::path out = run.config["output"].get<std::string>();
  if (const char* root = std::getenv("FRACTALVEC_OUT_ROOT"); root && *root && out.is_relative())
    out = fs::path(root) / out;
  fs::create_directories(out);
  run.out = out;
  std::ofstream(out / "resolved_config.json") << run.config.dump(2) << '\n';
  return run;
}

std::uint64_t seed_of(const Run& run) { return run["/seed"].get<std::uint64_t>(); }

fv::EnergyForm form_at(const Run& run, int level) {
  return fv::EnergyForm(fv::build_level(fv::fractal_by_id(run["/fractal"].get<std::string>()), level));
}

fv::DiscreteFunction random_function(const fv::LevelGraph& g, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(static_cast<Eigen::Index>(g.num_vertices()));
  for (auto& x : v) x = normal(gen);
  return {g.level(), v};
}

fv::CellMeasure measure_for(const Run& run, const fv::EnergyForm& form) {
  const auto kind = run["/measure/kind"].get<std::string>();
  if (kind == "self_similar") {
    const auto weights = run["/measure/weights"].get<std::vector<double>>();
    return weights.empty() ? fv::self_similar_measure(form.graph())
                           : fv::self_similar_measure(form.graph(), weights);
  }
  if (kind == "dominant") {
    auto pool = fv::harmonic_coordinates(form);
    std::mt19937_64 gen(seed_of(run));
    for (int i = 0; i < run["/measure/pool_random"].get<int>(); ++i)
      pool.push_back(random_function(form.graph(), gen));
    return fv::general_energy_dominant_measure(form, pool).measure;
  }
  return fv::kusuoka_measure(form);
}

fv::SpectrumOptions spectrum_options(const Run& run) {
  fv::SpectrumOptions o;
  o.tol = run["/tolerances/eigen"].get<double>();
  o.dense_limit = run["/tolerances/dense_limit"].get<std::size_t>();
  o.seed = seed_of(run);
  return o;
}

fv::SolverOptions solver_options(const Run& run) {
  fv::SolverOptions o;
  o.tol = run["/tolerances/solver"].get<double>();
  o.max_iter = run["/tolerances/max_iter"].get<int>();
  o.regularization = run["/tolerances/regularization"].get<double>();
  o.damping = run["/pde/damping"].get<double>();
  o.seed = seed_of(run);
  return o;
}

fv::MonotoneCoefficient coefficient(const std::string& name, double p) {
  if (name == "identity") return fv::MonotoneCoefficient::identity();
  if (name == "strictly_monotone") return fv::MonotoneCoefficient::strictly_monotone(p);
  return p == 2.0 ? fv::MonotoneCoefficient::identity() : fv::MonotoneCoefficient::p_laplace(p);
}

fv::CsvRow number_row(std::initializer_list<double> xs) {
  fv::CsvRow row;
  for (double x : xs) row.emplace_back(x);
  return row;
}

int cmd_build(const Run& run) {
  const auto g = fv::build_level(fv::fractal_by_id(run["/fractal"].get<std::string>()), run["/level"].get<int>());
  fv::write_json(run.file("graph.json"), run.hash, fv::level_graph_json(g));
  std::cout << g.num_vertices() << " vertices, " << g.num_edges() << " edges, " << g.num_cells()
            << " cells\n";
  return 0;
}

int cmd_measure(const Run& run) {
  const auto form = form_at(run, run["/level"].get<int>());
  const auto m = measure_for(run, form);
  fv::write_csv(run.file("measure.csv"), run.hash, {"cell", "mass"}, fv::measure_rows(form.graph(), m));
  std::cout << m.id << ": total mass " << fv::format_real(m.total()) << '\n';
  return 0;
}

int cmd_spectrum(const Run& run) {
  const auto form = form_at(run, run["/level"].get<int>());
  const auto measure = measure_for(run, form);
  const auto count = std::min<std::size_t>(run["/spectrum/count"].get<std::size_t>(), form.graph().num_vertices());
  const auto opt = spectrum_options(run);
  const auto s = fv::spectrum(form, measure, count, opt);
  fv::write_json(run.file("spectrum.json"), run.hash, fv::spectrum_json(s, opt));

  std::vector<std::string> cols{"vertex"};
  for (Eigen::Index k = 0; k < s.eigenvectors.cols(); ++k) cols.push_back("e" + std::to_string(k));
  std::vector<fv::CsvRow> rows;
  for (Eigen::Index i = 0; i < s.eigenvectors.rows(); ++i) {
    fv::CsvRow row{static_cast<long long>(i)};
    for (Eigen::Index k = 0; k < s.eigenvectors.cols(); ++k) row.emplace_back(s.eigenvectors(i, k));
    rows.push_back(std::move(row));
  }
  fv::write_csv(run.file("eigenvectors.csv"), run.hash, cols, rows);
  for (Eigen::Index k = 0; k < s.eigenvalues.size(); ++k)
    std::cout << "lambda_" << k << " = " << fv::format_real(s.eigenvalues[k]) << '\n';
  return 0;
}

int cmd_kusuoka(const Run& run) {
  const auto spec = fv::fractal_by_id(run["/fractal"].get<std::string>());
  const int top = std::max(1, run["/level"].get<int>());
  std::vector<fv::KusuokaMatrices> levels;
  for (int n = 1; n <= top; ++n) levels.push_back(fv::kusuoka_matrices(spec, n));

  const auto g = fv::build_level(spec, top);
  const int d = static_cast<int>(levels.back().metric.z.front().rows());
  std::vector<std::string> cols{"cell", "mass"};
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) cols.push_back("z" + std::to_string(i) + std::to_string(j));
  for (int i = 0; i < d; ++i) cols.push_back("eig" + std::to_string(i));
  fv::write_csv(run.file("fiber_metric.csv"), run.hash, cols, fv::fiber_metric_rows(g, levels.back().metric));

  std::vector<fv::CsvRow> rows;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const double mart = i + 1 < levels.size()
                            ? fv::martingale_error(levels[i].metric, levels[i + 1].metric, spec.n_maps)
                            : std::nan("");
    const auto& e = levels[i].smaller_eigenvalue;
    fv::CsvRow row{static_cast<long long>(i + 1)};
    for (double x : {e.min, e.median, e.max, levels[i].max_trace_error, mart}) row.emplace_back(x);
    rows.push_back(std::move(row));
    std::cout << "n=" << i + 1 << " median smaller eigenvalue " << fv::format_real(e.median)
              << " trace error " << levels[i].max_trace_error << '\n';
  }
  fv::write_csv(run.file("kusuoka_stats.csv"), run.hash,
                {"level", "eig_min", "eig_median", "eig_max", "trace_error", "martingale_error"}, rows);
  return 0;
}

int cmd_penergy(const Run& run) {
  const double p = run["/penergy/p"].get<double>();
  const int lo = run["/penergy/min_level"].get<int>(), hi = run["/penergy/max_level"].get<int>();
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  // per function, per level
  for (int m = lo; m <= hi; ++m) {
    const auto form = form_at(run, m);
    const auto measure = measure_for(run, form);
    auto fns = fv::harmonic_coordinates(form);
    const auto boundary = form.graph().boundary_vertices();
    std::vector<std::pair<std::size_t, double>> data;
    for (std::size_t i = 0; i < boundary.size(); ++i) data.emplace_back(boundary[i], i == 0 ? 1.0 : 0.0);
    fns.push_back(fv::solve_dirichlet(form, data).u);
    if (names.empty()) {
      for (std::size_t k = 0; k + 1 < fns.size(); ++k) names.push_back("phi" + std::to_string(k + 1));
      names.push_back("h100");
      values.resize(fns.size());
    }
    for (std::size_t k = 0; k < fns.size(); ++k) values[k].push_back(fv::p_energy(form, fns[k], measure, p));
  }
  std::vector<std::string> cols{"level"};
  for (const auto& n : names) {
    cols.push_back("Ep_" + n);
    cols.push_back("ratio_" + n);
  }
  std::vector<fv::CsvRow> rows;
  for (int m = lo; m <= hi; ++m) {
    const auto i = static_cast<std::size_t>(m - lo);
    fv::CsvRow row{static_cast<long long>(m)};
    std::cout << "m=" << m;
    for (std::size_t k = 0; k < names.size(); ++k) {
      const double ratio = i == 0 ? std::nan("") : values[k][i] / values[k][i - 1];
      row.emplace_back(values[k][i]);
      row.emplace_back(ratio);
      std::cout << "  " << names[k] << "=" << fv::format_real(values[k][i]);
    }
    std::cout << '\n';
    rows.push_back(std::move(row));
  }
  fv::write_csv(run.file("penergy.csv"), run.hash, cols, rows);
  return 0;
}

Eigen::VectorXd load_vector(const Run& run, const fv::LevelGraph& g) {
  const auto kind = run["/pde/load"].get<std::string>();
  const auto n = static_cast<Eigen::Index>(g.num_vertices());
  if (kind == "constant") return Eigen::VectorXd::Ones(n);
  if (kind == "step") {
    Eigen::VectorXd f(n);
    for (Eigen::Index i = 0; i < n; ++i)
      f[i] = g.vertex_coords(static_cast<std::size_t>(i))[0] < 0.5 ? 1.0 : -2.0;
    return f;
  }
  std::mt19937_64 gen(seed_of(run));
  return random_function(g, gen).values;
}

void write_report(const Run& run, const fv::SolveReport& rep, Json extra) {
  extra["iterations"] = rep.iterations;
  extra["residual"] = rep.residual;
  extra["energy"] = rep.energy;
  extra["converged"] = rep.converged;
  extra["wall_seconds"] = rep.wall_seconds;
  fv::write_json(run.file("solve_report.json"), run.hash, std::move(extra));
  std::vector<fv::CsvRow> rows;
  for (const auto& r : rep.log)
    rows.push_back({static_cast<long long>(r.iteration), r.residual, r.energy, r.step});
  fv::write_csv(run.file("residual_log.csv"), run.hash, {"iteration", "residual", "energy", "step"}, rows);
}

// Interval instance: the 1-D shooting reference in node order.
double interval_oracle_error(const fv::LevelGraph& g, const Eigen::VectorXd& f, const Eigen::VectorXd& w,
                             const Eigen::VectorXd& u, double p) {
  const auto n = static_cast<Eigen::Index>(g.num_vertices());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    order[static_cast<std::size_t>(std::lround(g.vertex_coords(static_cast<std::size_t>(i))[0] *
                                               static_cast<double>(n - 1)))] = i;
  Eigen::VectorXd fo(n), wo(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    fo[k] = f[order[static_cast<std::size_t>(k)]];
    wo[k] = w[order[static_cast<std::size_t>(k)]];
  }
  const auto ref = fv::interval_p_laplace_reference(fo, wo, p);
  double err = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) err = std::max(err, std::abs(ref[k] - u[order[static_cast<std::size_t>(k)]]));
  return err;
}

int cmd_solve(const Run& run) {
  const auto form = form_at(run, run["/level"].get<int>());
  const auto& g = form.graph();
  const auto measure = measure_for(run, form);

  if (run["/pde/problem"].get<std::string>() == "nondivergence") {
    fv::NondivergenceOptions o;
    o.tol = run["/tolerances/solver"].get<double>();
    o.max_iter = run["/tolerances/max_iter"].get<int>();
    o.seed = seed_of(run);
    const auto r = fv::solve_nondivergence(form, fv::Drift::sqrt_density(run["/pde/eps"].get<double>()),
                                           run["/pde/rho"].get<double>(), measure, o);
    fv::write_csv(run.file("solution.csv"), run.hash, {"vertex", "u"}, fv::function_rows(r.u));
    write_report(run, r.report.solve,
                 {{"problem", "nondivergence"}, {"damping", r.report.damping},
                  {"damping_activated_at", r.report.damping_activated_at}, {"c4", r.report.c4},
                  {"a_priori_bound", r.report.a_priori_bound}, {"solution_norm", r.report.solution_norm}});
    std::cout << "iterations " << r.report.solve.iterations << " residual " << r.report.solve.residual
              << " |u| " << r.report.solution_norm << " bound " << r.report.a_priori_bound << '\n';
    return r.report.solve.converged ? 0 : kExitNonConvergence;
  }

  const double p = run["/pde/p"].get<double>();
  const auto a = coefficient(run["/pde/coefficient"].get<std::string>(), p);
  const bool dirichlet = run["/pde/constraint"].get<std::string>() == "dirichlet";
  const auto constraint = dirichlet ? fv::Constraint::dirichlet(g.boundary_vertices()) : fv::Constraint::zero_mean();
  const auto w = fv::vertex_weights(g, measure);
  Eigen::VectorXd f = load_vector(run, g);
  if (!dirichlet) f.array() -= f.dot(w) / w.sum();

  const auto r = fv::solve_divergence_form(form, a, {g.level(), f}, measure, constraint, solver_options(run));
  fv::write_csv(run.file("solution.csv"), run.hash, {"vertex", "u"}, fv::function_rows(r.u));
  Json extra{{"problem", "divergence"}, {"coefficient", a.name}, {"p", p}};
  std::cout << "iterations " << r.report.iterations << " residual " << r.report.residual << '\n';
  if (g.spec().id == "interval" && dirichlet && (a.name == "p_laplace" || a.name == "identity")) {
    const double err = interval_oracle_error(g, f, w, r.u.values, a.p);
    extra["oracle_sup_error"] = err;
    std::cout << "1-D reference sup error " << err << '\n';
  }
  write_report(run, r.report, std::move(extra));
  return r.report.converged ? 0 : kExitNonConvergence;
}

int cmd_spde(const Run& run) {
  const auto form = form_at(run, run["/level"].get<int>());
  const auto& g = form.graph();
  const auto measure = measure_for(run, form);
  const double p = run["/spde/p"].get<double>();
  const auto a = coefficient("p_laplace", p);
  const auto n = g.num_vertices();
  const int trunc = std::min<int>(run["/spde/truncation"].get<int>(), static_cast<int>(n) - 1);
  const auto spec = fv::spectrum(form, measure, std::min<std::size_t>(n, static_cast<std::size_t>(trunc) + 2),
                                 spectrum_options(run));
  const auto noise = fv::inverse_square_noise(spec, trunc, run["/spde/q_scale"].get<double>(), seed_of(run));

  fv::SpdeOptions opt;
  opt.T = run["/spde/T"].get<double>();
  opt.dt = run["/spde/dt"].get<double>();
  opt.snapshot_stride = run["/spde/stride"].get<int>();
  opt.inner.seed = seed_of(run);

  const auto u0_kind = run["/spde/u0"].get<std::string>();
  fv::DiscreteFunction u0 = fv::DiscreteFunction::constant(g.level(), static_cast<Eigen::Index>(n), 0.0);
  if (u0_kind == "eigenvector") u0.values = spec.eigenvectors.col(1);
  if (u0_kind == "random") {
    std::mt19937_64 gen(seed_of(run) ^ 0x5eedULL);
    u0 = random_function(g, gen);
  }

  const auto path = fv::simulate(form, a, u0, noise, measure, opt, 0);
  std::vector<fv::CsvRow> rows;
  for (std::size_t k = 0; k < path.times.size(); ++k) {
    const auto& s = k == 0 ? fv::StepSummary{} : path.steps[k - 1];
    rows.push_back({static_cast<long long>(k), path.times[k], path.l2_norm[k], path.p_energy[k],
                    static_cast<long long>(s.iterations), s.residual});
  }
  fv::write_csv(run.file("path_functionals.csv"), run.hash,
                {"step", "time", "l2_norm", "p_energy", "inner_iterations", "inner_residual"}, rows);
  rows.clear();
  for (std::size_t s = 0; s < path.snapshots.size(); ++s)
    for (Eigen::Index i = 0; i < path.snapshots[s].size(); ++i)
      rows.push_back({static_cast<long long>(path.snapshot_steps[s]),
                      path.times[static_cast<std::size_t>(path.snapshot_steps[s])], static_cast<long long>(i),
                      path.snapshots[s][i]});
  fv::write_csv(run.file("snapshots.csv"), run.hash, {"step", "time", "vertex", "u"}, rows);

  const auto st = fv::moment_stats(form, a, u0, noise, measure, opt, run["/spde/paths"].get<int>(),
                                   run["/spde/stride"].get<int>());
  rows.clear();
  for (std::size_t k = 0; k < st.times.size(); ++k)
    rows.push_back(number_row({st.times[k], st.mean_l2sq[k], st.se_l2sq[k], st.mean_p_energy[k], st.se_p_energy[k]}));
  fv::write_csv(run.file("stats.csv"), run.hash,
                {"time", "mean_l2sq", "se_l2sq", "mean_p_energy", "se_p_energy"}, rows);

  Json nj{{"seed", noise.seed}, {"truncation", noise.truncation()}, {"profile", noise.profile},
          {"tail_bound", noise.tail_bound}, {"dt", opt.dt}, {"T", opt.T}, {"stride", opt.snapshot_stride},
          {"q", std::vector<double>(noise.q.data(), noise.q.data() + noise.q.size())},
          {"eigenvalues", std::vector<double>(noise.eigenvalues.data(), noise.eigenvalues.data() + noise.eigenvalues.size())}};
  fv::write_json(run.file("noise.json"), run.hash, std::move(nj));
  std::cout << path.times.size() - 1 << " steps, final E|u|^2 " << fv::format_real(st.mean_l2sq.back())
            << " +- " << fv::format_real(st.se_l2sq.back()) << '\n';
  return 0;
}

int cmd_verify(const Run& run) {
  fv::InvariantOptions o;
  o.seed = seed_of(run);
  o.probes = run["/diagnostics/probes"].get<int>();
  o.kusuoka_max_level = run["/diagnostics/kusuoka_max_level"].get<int>();
  const auto results = fv::run_invariants(o);
  Json list = Json::array();
  bool ok = true;
  for (const auto& r : results) {
    ok = ok && r.passed;
    list.push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"measured", r.measured},
                    {"tolerance", r.tolerance}, {"detail", r.detail}});
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.id << ' ' << r.name << ": " << r.detail << '\n';
  }
  fv::write_json(run.file("verify.json"), run.hash, {{"checks", list}, {"all_passed", ok}});
  return ok ? 0 : kExitInvariant;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vector analysis on post-critically finite fractals"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> overrides;
  std::string fractal, measure, out;
  int level = 0;
  double p = 0.0;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  auto* o_fractal = app.add_option("--fractal", fractal, "sg | interval");
  auto* o_level = app.add_option("--level", level, "graph level m");
  auto* o_measure = app.add_option("--measure", measure, "kusuoka | self_similar | dominant");
  auto* o_p = app.add_option("--p", p, "exponent for the active problem block");
  auto* o_seed = app.add_option("--seed", seed, "RNG seed");
  auto* o_out = app.add_option("--out", out, "output directory (relative to $FRACTALVEC_OUT_ROOT)");
  app.add_option("--set", overrides, "override a config key, e.g. --set spde.dt=0.01");

  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(const Run&);
    const char* p_key;
  };
  const Sub subs[] = {
      {"build", "write the level graph", cmd_build, nullptr},
      {"spectrum", "Neumann eigenpairs", cmd_spectrum, nullptr},
      {"measure", "reference measure per cell", cmd_measure, nullptr},
      {"kusuoka", "Kusuoka matrices and eigenvalue statistics", cmd_kusuoka, nullptr},
      {"penergy", "p-energies across levels", cmd_penergy, "/penergy/p"},
      {"solve", "quasilinear PDE", cmd_solve, "/pde/p"},
      {"spde", "stochastic evolution paths and moments", cmd_spde, "/spde/p"},
      {"verify", "structural invariant suite", cmd_verify, nullptr},
  };
  std::vector<CLI::App*> handles;
  for (const auto& s : subs) handles.push_back(app.add_subcommand(s.name, s.help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    for (std::size_t i = 0; i < handles.size(); ++i) {
      if (!handles[i]->parsed()) continue;
      const Sub& s = subs[i];
      Json flags = Json::object();
      if (o_fractal->count()) flags["/fractal"] = fractal;
      if (o_level->count()) flags["/level"] = level;
      if (o_measure->count()) flags["/measure/kind"] = measure;
      if (o_seed->count()) flags["/seed"] = seed;
      if (o_out->count()) flags["/output"] = out;
      if (o_p->count()) {
        if (!s.p_key) throw fv::Error(fv::ErrorKind::config, std::string("--p has no meaning for ") + s.name);
        flags[s.p_key] = p;
      }
      if (std::string(s.name) == "spde" && !o_seed->count()) {
        const Json user = config_path.empty() ? Json::object() : fv::read_json(config_path);
        if (!user.contains("seed"))
          throw fv::Error(fv::ErrorKind::config, "spde needs an explicit seed (--seed or \"seed\" in the config)");
      }
      const Run run = prepare(config_path, flags, overrides);
      return s.fn(run);
    }
  } catch (const fv::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case fv::ErrorKind::config:
      case fv::ErrorKind::resource_limit:
        return kExitConfig;
      case fv::ErrorKind::non_convergence:
        return kExitNonConvergence;
      default:
        return kExitFailure;
    }
  } catch (const Json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
