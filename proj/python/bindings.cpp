#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "fractalvec/energy.hpp"
#include "fractalvec/error.hpp"
#include "fractalvec/fiber.hpp"
#include "fractalvec/fields.hpp"
#include "fractalvec/invariants.hpp"
#include "fractalvec/io.hpp"
#include "fractalvec/quasilinear.hpp"
#include "fractalvec/spde.hpp"
#include "fractalvec/spectrum.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

fv::DiscreteFunction on(const fv::LevelGraph& g, const Eigen::VectorXd& values) {
  fv::require(values.size() == static_cast<Eigen::Index>(g.num_vertices()), fv::ErrorKind::invalid_argument,
              "expected " + std::to_string(g.num_vertices()) + " vertex values");
  return {g.level(), values};
}

fv::Constraint constraint_of(const fv::LevelGraph& g, const std::string& name) {
  if (name == "zero_mean") return fv::Constraint::zero_mean();
  if (name == "dirichlet") return fv::Constraint::dirichlet(g.boundary_vertices());
  throw fv::Error(fv::ErrorKind::invalid_argument, "constraint must be 'zero_mean' or 'dirichlet'");
}

py::dict report_dict(const fv::SolveReport& r) {
  return py::dict("iterations"_a = r.iterations, "residual"_a = r.residual, "energy"_a = r.energy,
                  "converged"_a = r.converged, "wall_seconds"_a = r.wall_seconds);
}

}  // namespace

PYBIND11_MODULE(_fractalvec, m) {
  m.doc() = "Energy measures, fields and quasilinear solvers on fractal graph approximations";

  py::register_exception<fv::Error>(m, "FractalvecError", PyExc_RuntimeError);

  py::class_<fv::LevelGraph>(m, "LevelGraph")
      .def_property_readonly("level", &fv::LevelGraph::level)
      .def_property_readonly("num_vertices", &fv::LevelGraph::num_vertices)
      .def_property_readonly("num_edges", &fv::LevelGraph::num_edges)
      .def_property_readonly("num_cells", &fv::LevelGraph::num_cells)
      .def_property_readonly("conductance", &fv::LevelGraph::conductance)
      .def_property_readonly("fractal", [](const fv::LevelGraph& g) { return g.spec().id; })
      .def("boundary_vertices", &fv::LevelGraph::boundary_vertices)
      .def("edges", [](const fv::LevelGraph& g) {
        Eigen::Matrix<long long, Eigen::Dynamic, 2> out(static_cast<Eigen::Index>(g.num_edges()), 2);
        for (std::size_t i = 0; i < g.num_edges(); ++i) {
          out(static_cast<Eigen::Index>(i), 0) = static_cast<long long>(g.edges()[i].u);
          out(static_cast<Eigen::Index>(i), 1) = static_cast<long long>(g.edges()[i].v);
        }
        return out;
      })
      .def("cell_vertices", [](const fv::LevelGraph& g, std::size_t c) {
        fv::require(c < g.num_cells(), fv::ErrorKind::invalid_argument, "cell index out of range");
        const auto s = g.cell_vertices(c);
        return std::vector<std::size_t>(s.begin(), s.end());
      })
      .def("cell_address", [](const fv::LevelGraph& g, std::size_t c) { return g.cell_address(c).to_string(); })
      .def("vertex_label", &fv::LevelGraph::vertex_label);

  m.def("build_level", [](const std::string& fractal, int level) { return fv::build_level(fv::fractal_by_id(fractal), level); },
        "fractal"_a, "level"_a);

  py::class_<fv::EnergyForm>(m, "EnergyForm")
      .def(py::init<fv::LevelGraph>(), "graph"_a)
      .def_property_readonly("graph", &fv::EnergyForm::graph, py::return_value_policy::reference_internal)
      .def_property_readonly("level", &fv::EnergyForm::level)
      .def("matrix", [](const fv::EnergyForm& f) { return fv::SparseMatrix(f.matrix()); });

  py::class_<fv::CellMeasure>(m, "CellMeasure")
      .def_readonly("level", &fv::CellMeasure::level)
      .def_readonly("mass", &fv::CellMeasure::mass)
      .def_readonly("id", &fv::CellMeasure::id)
      .def("total", &fv::CellMeasure::total);

  m.def("energy", [](const fv::EnergyForm& form, const Eigen::VectorXd& f, std::optional<Eigen::VectorXd> g) {
        const auto& gr = form.graph();
        return g ? fv::energy(form, on(gr, f), on(gr, *g)) : fv::energy(form, on(gr, f));
      }, "form"_a, "f"_a, "g"_a = py::none());
  m.def("energy_measure", [](const fv::EnergyForm& form, const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
        return fv::energy_measure(form, on(form.graph(), f), on(form.graph(), g)).cells;
      }, "form"_a, "f"_a, "g"_a);
  m.def("harmonic_extension", [](const fv::LevelGraph& coarse, const Eigen::VectorXd& f) {
        return fv::harmonic_extension(coarse, on(coarse, f)).values;
      }, "coarse"_a, "f"_a);
  m.def("harmonic_coordinates", [](const fv::EnergyForm& form) {
        std::vector<Eigen::VectorXd> out;
        for (const auto& c : fv::harmonic_coordinates(form)) out.push_back(c.values);
        return out;
      }, "form"_a);
  m.def("kusuoka_measure", py::overload_cast<const fv::EnergyForm&>(&fv::kusuoka_measure), "form"_a);
  m.def("self_similar_measure", [](const fv::LevelGraph& g, std::optional<std::vector<double>> w) {
        return w ? fv::self_similar_measure(g, *w) : fv::self_similar_measure(g);
      }, "graph"_a, "weights"_a = py::none());
  m.def("vertex_weights", &fv::vertex_weights, "graph"_a, "measure"_a);
  m.def("gradient_norm_squared", [](const fv::EnergyForm& form, const Eigen::VectorXd& f) {
        const double n = fv::field_norm(form, fv::gradient(form.graph(), on(form.graph(), f)));
        return n * n;
      }, "form"_a, "f"_a);
  m.def("p_energy", [](const fv::EnergyForm& form, const Eigen::VectorXd& f, const fv::CellMeasure& mu, double p) {
        return fv::p_energy(form, on(form.graph(), f), mu, p);
      }, "form"_a, "f"_a, "measure"_a, "p"_a);

  py::class_<fv::SpectrumResult>(m, "SpectrumResult")
      .def_readonly("eigenvalues", &fv::SpectrumResult::eigenvalues)
      .def_readonly("eigenvectors", &fv::SpectrumResult::eigenvectors)
      .def_readonly("weights", &fv::SpectrumResult::weights)
      .def_readonly("max_residual", &fv::SpectrumResult::max_residual)
      .def_readonly("dense", &fv::SpectrumResult::dense);
  m.def("spectrum", [](const fv::EnergyForm& form, const fv::CellMeasure& mu, std::size_t k, double tol,
                       std::size_t dense_limit) {
        fv::SpectrumOptions o;
        o.tol = tol;
        o.dense_limit = dense_limit;
        return fv::spectrum(form, mu, k, o);
      }, "form"_a, "measure"_a, "k"_a, "tol"_a = 1e-10, "dense_limit"_a = 2000);
  m.def("poincare_constant", [](const fv::EnergyForm& form, const fv::CellMeasure& mu, double p) {
        const auto r = fv::poincare_constant(form, mu, p);
        return py::dict("p"_a = r.p, "lambda1"_a = r.lambda1, "best_constant"_a = r.best_constant,
                        "certified_upper"_a = r.certified_upper, "sampled_lower"_a = r.sampled_lower);
      }, "form"_a, "measure"_a, "p"_a);

  m.def("solve_p_laplace", [](const fv::EnergyForm& form, const Eigen::VectorXd& f, double p,
                              const fv::CellMeasure& mu, const std::string& constraint, double tol) {
        fv::SolverOptions o;
        o.tol = tol;
        const auto r = fv::solve_p_laplace(form, on(form.graph(), f), p, mu, constraint_of(form.graph(), constraint), o);
        return py::make_tuple(r.u.values, report_dict(r.report));
      }, "form"_a, "f"_a, "p"_a, "measure"_a, "constraint"_a = "zero_mean", "tol"_a = 1e-9);

  m.def("kusuoka_statistics", [](const std::string& fractal, int n) {
        const auto k = fv::kusuoka_matrices(fv::fractal_by_id(fractal), n);
        return py::dict("min"_a = k.smaller_eigenvalue.min, "median"_a = k.smaller_eigenvalue.median,
                        "max"_a = k.smaller_eigenvalue.max, "max_trace_error"_a = k.max_trace_error);
      }, "fractal"_a, "n"_a);

  m.def("simulate", [](const fv::EnergyForm& form, const fv::CellMeasure& mu, double p, const Eigen::VectorXd& u0,
                       double T, double dt, int truncation, double q_scale, std::uint64_t seed, std::uint64_t path) {
        const auto& g = form.graph();
        const auto s = fv::spectrum(form, mu, std::min<std::size_t>(g.num_vertices(), static_cast<std::size_t>(truncation) + 2));
        const auto noise = q_scale == 0.0 ? fv::zero_noise(s, truncation)
                                          : fv::inverse_square_noise(s, truncation, q_scale, seed);
        fv::SpdeOptions o;
        o.T = T;
        o.dt = dt;
        const auto a = p == 2.0 ? fv::MonotoneCoefficient::identity() : fv::MonotoneCoefficient::p_laplace(p);
        const auto r = fv::simulate(form, a, on(g, u0), noise, mu, o, path);
        return py::dict("times"_a = r.times, "l2_norm"_a = r.l2_norm, "p_energy"_a = r.p_energy);
      }, "form"_a, "measure"_a, "p"_a, "u0"_a, "T"_a = 0.1, "dt"_a = 1e-3, "truncation"_a = 20,
        "q_scale"_a = 1.0, "seed"_a = 0, "path"_a = 0);

  m.def("run_invariants", [](std::uint64_t seed) {
        fv::InvariantOptions o;
        o.seed = seed;
        py::list out;
        for (const auto& r : fv::run_invariants(o))
          out.append(py::dict("id"_a = r.id, "name"_a = r.name, "passed"_a = r.passed, "detail"_a = r.detail));
        return out;
      }, "seed"_a = 0);

  m.def("resolve_config", [](const std::string& text) { return fv::resolve_config(fv::Json::parse(text)).dump(); },
        "config_json"_a);
  m.def("config_hash", [](const std::string& text) { return fv::config_hash(fv::Json::parse(text)); },
        "resolved_json"_a);
}
