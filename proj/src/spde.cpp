#include "fractalvec/spde.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

#include "fractalvec/error.hpp"

namespace fv {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double l2_norm(const Eigen::VectorXd& w, const Eigen::VectorXd& u) {
  return std::sqrt(u.dot(w.cwiseProduct(u)));
}

NoiseModel base_noise(const SpectrumResult& sp, int truncation) {
  const auto available = sp.eigenvectors.cols() - 1;
  require(truncation >= 1 && truncation <= available, ErrorKind::invalid_argument,
          "noise truncation " + std::to_string(truncation) + " exceeds the " +
              std::to_string(available) + " nonconstant modes supplied");
  NoiseModel nm;
  nm.modes = sp.eigenvectors.middleCols(1, truncation);
  nm.eigenvalues = sp.eigenvalues.segment(1, truncation);
  return nm;
}

// Runs body(i) for i in [0, count) on a few threads; results go to caller-owned slots.
template <typename Body>
void parallel_for(int count, Body body) {
  const int workers =
      std::max(1, std::min<int>(count, static_cast<int>(std::thread::hardware_concurrency())));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

double counter_normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                      std::uint64_t mode) {
  const std::uint64_t key =
      splitmix64(seed ^ splitmix64(path ^ splitmix64(step ^ splitmix64(mode))));
  constexpr double unit = 0x1.0p-53;
  const double u1 = static_cast<double>((splitmix64(key) >> 11) + 1) * unit;  // (0, 1]
  const double u2 = static_cast<double>(splitmix64(key + 1) >> 11) * unit;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

NoiseModel inverse_square_noise(const SpectrumResult& spectrum, int truncation, double scale,
                                std::uint64_t seed) {
  require(scale >= 0.0, ErrorKind::invalid_argument, "noise scale must be nonnegative");
  NoiseModel nm = base_noise(spectrum, truncation);
  nm.seed = seed;
  nm.profile = "inverse_square";
  nm.q = scale * nm.eigenvalues.array().pow(-2.0).matrix();
  const auto n = spectrum.eigenvectors.rows();
  const auto dropped = n - 1 - truncation;
  if (dropped > 0) {
    require(spectrum.eigenvalues.size() > truncation + 1, ErrorKind::invalid_argument,
            "tail bound needs eigenvalue " + std::to_string(truncation + 1));
    const double next = spectrum.eigenvalues[truncation + 1];
    nm.tail_bound = scale * static_cast<double>(dropped) / (next * next);
  }
  return nm;
}

NoiseModel zero_noise(const SpectrumResult& spectrum, int truncation) {
  NoiseModel nm = base_noise(spectrum, truncation);
  nm.profile = "zero";
  nm.q = Eigen::VectorXd::Zero(truncation);
  return nm;
}

Eigen::VectorXd noise_increment(const NoiseModel& noise, double dt, std::uint64_t path,
                                std::uint64_t step) {
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(noise.modes.rows());
  for (Eigen::Index j = 0; j < noise.q.size(); ++j) {
    if (noise.q[j] == 0.0) continue;
    const double z = counter_normal(noise.seed, path, step, static_cast<std::uint64_t>(j + 1));
    xi += std::sqrt(noise.q[j] * dt) * z * noise.modes.col(j);
  }
  return xi;
}

int step_count(double T, double dt) {
  require(dt > 0.0 && T >= 0.0, ErrorKind::invalid_argument, "need dt > 0 and T >= 0");
  return static_cast<int>(std::llround(T / dt));
}

PathResult simulate(const EnergyForm& form, const MonotoneCoefficient& a,
                    const DiscreteFunction& u0, const NoiseModel& noise, const CellMeasure& measure,
                    const SpdeOptions& options, std::uint64_t path) {
  const auto& g = form.graph();
  require_level(u0.level, g.level());
  require(noise.modes.rows() == u0.size(), ErrorKind::invalid_argument,
          "noise modes live on a different level");
  require(options.snapshot_stride >= 1, ErrorKind::invalid_argument, "snapshot stride must be >= 1");
  const int steps = step_count(options.T, options.dt);
  const Eigen::VectorXd w = vertex_weights(g, measure);

  PathResult out;
  auto record = [&](int k, const DiscreteFunction& u) {
    out.times.push_back(k * options.dt);
    out.l2_norm.push_back(l2_norm(w, u.values));
    out.p_energy.push_back(p_energy(form, u, measure, a.p));
    if (k % options.snapshot_stride == 0 || k == steps) {
      out.snapshot_steps.push_back(k);
      out.snapshots.push_back(u);
    }
  };
  DiscreteFunction u = u0;
  record(0, u);

  MonotoneProblem pr;
  pr.coefficient = a;
  pr.alpha = options.dt;
  pr.sigma = 1.0;
  pr.constraint = Constraint::none();
  SolverOptions inner = options.inner;
  for (int k = 0; k < steps; ++k) {
    pr.load = -w.cwiseProduct(u.values + noise_increment(noise, options.dt, path,
                                                         static_cast<std::uint64_t>(k)));
    inner.initial = u;
    SolveResult r = solve_monotone(form, measure, pr, inner);
    if (!r.report.converged)
      throw Error(ErrorKind::non_convergence,
                  "implicit step " + std::to_string(k) + " did not converge (residual " +
                      std::to_string(r.report.residual) + ")");
    out.steps.push_back({r.report.iterations, r.report.residual});
    u = std::move(r.u);
    record(k + 1, u);
  }
  return out;
}

UniquenessReport uniqueness_probe(const EnergyForm& form, const MonotoneCoefficient& a,
                                  const NoiseModel& noise, const CellMeasure& measure, int trials,
                                  std::uint64_t seed, const SpdeOptions& options) {
  const auto& g = form.graph();
  const Eigen::VectorXd w = vertex_weights(g, measure);
  const auto n = w.size();
  SpdeOptions opt = options;
  opt.snapshot_stride = 1;
  UniquenessReport rep;
  rep.trials = trials;
  rep.trial_growth.assign(static_cast<std::size_t>(trials), 0.0);
  parallel_for(trials, [&](int t) {
    Eigen::VectorXd a0(n), b0(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      a0[i] = counter_normal(seed, static_cast<std::uint64_t>(t), 0, static_cast<std::uint64_t>(i));
      b0[i] = counter_normal(seed, static_cast<std::uint64_t>(t), 1, static_cast<std::uint64_t>(i));
    }
    const auto path = static_cast<std::uint64_t>(t);
    const PathResult pa = simulate(form, a, DiscreteFunction(g.level(), a0), noise, measure, opt, path);
    const PathResult pb = simulate(form, a, DiscreteFunction(g.level(), b0), noise, measure, opt, path);
    double worst = 0.0;
    for (std::size_t k = 1; k < pa.snapshots.size(); ++k) {
      const double before = l2_norm(w, pa.snapshots[k - 1].values - pb.snapshots[k - 1].values);
      const double after = l2_norm(w, pa.snapshots[k].values - pb.snapshots[k].values);
      if (before > 0.0) worst = std::max(worst, after / before);
    }
    rep.trial_growth[static_cast<std::size_t>(t)] = worst;
  });
  for (double gfac : rep.trial_growth) rep.max_growth = std::max(rep.max_growth, gfac);
  rep.flagged = rep.max_growth > 1.0 + 1e-10;
  return rep;
}

MomentStats moment_stats(const EnergyForm& form, const MonotoneCoefficient& a,
                         const DiscreteFunction& u0, const NoiseModel& noise,
                         const CellMeasure& measure, const SpdeOptions& options, int paths,
                         int stride) {
  require(paths >= 2, ErrorKind::invalid_argument, "moment statistics need at least two paths");
  require(stride >= 1, ErrorKind::invalid_argument, "stride must be >= 1");
  std::vector<PathResult> results(static_cast<std::size_t>(paths));
  parallel_for(paths, [&](int i) {
    results[static_cast<std::size_t>(i)] =
        simulate(form, a, u0, noise, measure, options, static_cast<std::uint64_t>(i));
  });

  MomentStats st;
  st.paths = paths;
  const std::size_t count = results.front().times.size();
  const double np = static_cast<double>(paths);
  for (std::size_t k = 0; k < count; k += static_cast<std::size_t>(stride)) {
    double mx = 0.0, me = 0.0;
    for (const auto& r : results) {
      mx += r.l2_norm[k] * r.l2_norm[k];
      me += r.p_energy[k];
    }
    mx /= np;
    me /= np;
    double vx = 0.0, ve = 0.0;
    for (const auto& r : results) {
      vx += std::pow(r.l2_norm[k] * r.l2_norm[k] - mx, 2);
      ve += std::pow(r.p_energy[k] - me, 2);
    }
    vx /= np - 1.0;
    ve /= np - 1.0;
    st.times.push_back(results.front().times[k]);
    st.mean_l2sq.push_back(mx);
    st.se_l2sq.push_back(std::sqrt(vx / np));
    st.mean_p_energy.push_back(me);
    st.se_p_energy.push_back(std::sqrt(ve / np));
  }
  return st;
}

}  // namespace fv
