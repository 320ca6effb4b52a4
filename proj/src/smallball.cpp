#include "fracshe/smallball.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fracshe/errors.hpp"
#include "fracshe/parallel.hpp"

namespace fracshe {

WilsonInterval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
  if (successes > trials) throw std::invalid_argument("wilson_interval: successes > trials");
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  WilsonInterval w{std::max(0.0, centre - half), std::min(1.0, centre + half)};
  // guard the endpoints against rounding at p = 0 or 1
  w.lo = std::min(w.lo, p);
  w.hi = std::max(w.hi, p);
  return w;
}

std::vector<TrialOutcome> trial_outcomes(const ModelParams& params, std::uint64_t trials,
                                         double stop_above, const SolverOptions& solver) {
  std::vector<TrialOutcome> out(trials);
  RunOptions options;
  options.solver = solver;
  options.stop_above = stop_above;
  options.record_path = false;
  parallel_for(trials, [&](std::size_t i) {
    try {
      const Trajectory traj = run(params, nullptr, i, options);
      out[i] = {traj.final_sup(), false, traj.stopped_early};
    } catch (const Diverged& e) {
      out[i] = {e.sup(), true, true};
    }
  });
  return out;
}

SmallBallEstimate summarize(std::span<const TrialOutcome> outcomes, double epsilon, double horizon) {
  SmallBallEstimate est;
  est.epsilon = epsilon;
  est.horizon = horizon;
  est.trials = outcomes.size();
  for (const auto& o : outcomes) {
    if (o.diverged) {
      if (!(o.running_sup > epsilon)) throw Diverged(horizon, o.running_sup);
      ++est.diverged;
      continue;
    }
    if (o.running_sup <= epsilon) ++est.successes;
  }
  est.estimate = est.trials == 0 ? 0.0
                                 : static_cast<double>(est.successes) /
                                       static_cast<double>(est.trials);
  est.interval = wilson_interval(est.successes, est.trials);
  return est;
}

SmallBallEstimate estimate(const ModelParams& params, double epsilon, std::uint64_t trials) {
  const auto outcomes = trial_outcomes(params, trials, epsilon);
  return summarize(outcomes, epsilon, params.horizon);
}

ExponentBracket exponent_bracket(double alpha, double beta, int dim) {
  if (!(alpha > beta) || !(beta > 0.0) || dim < 1)
    throw std::invalid_argument("exponent_bracket: need 0 < beta < alpha and dim >= 1");
  ExponentBracket b;
  b.lower_bound_exponent = 2.0 * (2.0 * alpha - beta) / beta;
  b.upper_bound_exponent =
      2.0 * alpha / (alpha - beta) *
      std::min(1.0 + beta / (alpha * dim), (2.0 * alpha - beta) / alpha);
  b.regime_a = dim == 1 && alpha >= 2.0 * beta;
  return b;
}

SweepResult fit_sweep(std::vector<SmallBallEstimate> estimates, const ModelParams& params) {
  if (estimates.size() < 4)
    throw InsufficientSamples("fit_sweep: need at least 4 epsilon values");
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& e : estimates) {
    if (!(e.estimate > 0.0 && e.estimate < 1.0))
      throw DegenerateEstimate("fit_sweep: estimate " + std::to_string(e.estimate) +
                               " at epsilon " + std::to_string(e.epsilon));
    x.push_back(std::log(1.0 / e.epsilon));
    y.push_back(std::log(-std::log(e.estimate)));
  }
  SweepResult r;
  r.estimates = std::move(estimates);
  r.fit = fit_line(x, y, 4);
  r.bracket = exponent_bracket(params.alpha, params.beta, params.dim);
  return r;
}

SweepResult sweep_and_fit(const ModelParams& params, std::span<const double> epsilons,
                          std::uint64_t trials) {
  if (epsilons.empty()) throw std::invalid_argument("sweep_and_fit: no epsilon values");
  const double top = *std::max_element(epsilons.begin(), epsilons.end());
  const auto outcomes = trial_outcomes(params, trials, top);
  std::vector<SmallBallEstimate> estimates;
  estimates.reserve(epsilons.size());
  for (double eps : epsilons) estimates.push_back(summarize(outcomes, eps, params.horizon));
  return fit_sweep(std::move(estimates), params);
}

GridSchedule schedule(double epsilon, double horizon, double alpha, double beta, int dim,
                      const C0Settings& settings) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("schedule: epsilon must be positive");
  GridSchedule g;
  g.epsilon = epsilon;
  g.pitch = epsilon * epsilon;

  if (settings.policy == C0Policy::Diagnostic) {
    g.c0 = settings.c0;
  } else {
    if (!(settings.c5 > 1.0)) throw std::invalid_argument("schedule: c5 must exceed 1");
    const double first = std::pow(
        settings.c6 / (36.0 * settings.sigma_upper * settings.sigma_upper * std::log(settings.c5)),
        alpha / (alpha - beta));
    const double second = settings.scale * std::pow(epsilon, (2.0 * alpha * dim - 4.0 * beta) / beta);
    g.c0 = settings.safety * std::min({1.0, first, second});
  }
  if (!(g.c0 > 0.0)) throw std::invalid_argument("schedule: c0 must be positive");
  g.t1 = g.c0 * std::pow(epsilon, 4);

  // n1 = min{n : n eps^2 > 1}; the floor is only a starting guess
  auto n = static_cast<std::int64_t>(std::floor(1.0 / g.pitch));
  while (static_cast<double>(n) * g.pitch > 1.0) --n;
  while (!(static_cast<double>(n) * g.pitch > 1.0)) ++n;
  g.n1 = n;

  const double ratio = horizon / g.t1;
  auto count = static_cast<std::uint64_t>(std::floor(ratio));
  if (std::abs(ratio - std::round(ratio)) < 1e-9 * std::max(1.0, ratio))
    count = static_cast<std::uint64_t>(std::llround(ratio));
  g.time_count = count;
  return g;
}

namespace {

/// Values of a spectral field on the points (j_1 eps^2, ..., j_d eps^2),
/// |j_k| <= n1 - 1, through a per-axis phase table.
class LatticeProbe {
 public:
  LatticeProbe(const ModeLattice& lattice, double pitch, std::int64_t n1)
      : dim_(lattice.dim()), cutoff_(lattice.cutoff()), width_(2 * n1 - 1) {
    const int modes = 2 * cutoff_ + 1;
    phase_.resize(static_cast<std::size_t>(width_) * modes);
    for (std::int64_t j = 0; j < width_; ++j) {
      const double x = static_cast<double>(j - (n1 - 1)) * pitch;
      for (int m = -cutoff_; m <= cutoff_; ++m)
        phase_[j * modes + (m + cutoff_)] = std::polar(1.0, M_PI * m * x);
    }
    points_ = 1;
    for (int k = 0; k < dim_; ++k) points_ *= static_cast<std::size_t>(width_);
  }

  double sup_abs(const SpectralField& f) const {
    const int modes = 2 * cutoff_ + 1;
    const ModeLattice& lat = *f.lattice;
    std::vector<std::int64_t> j(dim_);
    double sup = 0.0;
    for (std::size_t p = 0; p < points_; ++p) {
      std::size_t rest = p;
      for (int k = dim_ - 1; k >= 0; --k) {
        j[k] = static_cast<std::int64_t>(rest % width_);
        rest /= width_;
      }
      double v = 0.0;
      for (std::size_t pos = 0; pos < lat.size(); ++pos) {
        const auto n = lat.mode(pos);
        Complex e = f.coeffs[pos];
        for (int k = 0; k < dim_; ++k) e *= phase_[j[k] * modes + (n[k] + cutoff_)];
        v += e.real();
      }
      sup = std::max(sup, std::abs(v));
    }
    return sup;
  }

 private:
  int dim_;
  int cutoff_;
  std::int64_t width_;
  std::size_t points_ = 1;
  std::vector<Complex> phase_;
};

double coefficient_of_variation(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  return mean > 0.0 ? sd / mean : std::numeric_limits<double>::infinity();
}

}  // namespace

EventDiagnostics event_diagnostics(const ModelParams& params, double epsilon, std::uint64_t trials,
                                   int n_max, const C0Settings& settings) {
  if (n_max < 0) throw std::invalid_argument("event_diagnostics: n_max must be >= 0");
  EventDiagnostics diag;
  diag.grid = schedule(epsilon, params.horizon, params.alpha, params.beta, params.dim, settings);
  const GridSchedule& g = diag.grid;
  if (static_cast<std::uint64_t>(n_max) + 1 > g.time_count)
    throw std::invalid_argument("event_diagnostics: n_max + 1 exceeds floor(T / t1) = " +
                                std::to_string(g.time_count));
  diag.f_level = std::pow(g.t1, (params.alpha - params.beta) / (2.0 * params.alpha));
  diag.e_level = std::pow(epsilon, 2.0 * (params.alpha - params.beta) / params.alpha);

  // every t_i becomes a step time
  const auto per_cell = static_cast<std::uint64_t>(std::ceil(g.t1 / params.dt - 1e-9));
  ModelParams p = params;
  p.dt = g.t1 / static_cast<double>(per_cell);
  p.horizon = static_cast<double>(n_max + 1) * g.t1;
  const std::uint64_t total_steps = per_cell * static_cast<std::uint64_t>(n_max + 1);

  const auto lattice = make_spectrum(p).lattice;
  const LatticeProbe probe(*lattice, g.pitch, g.n1);
  const std::size_t rows = static_cast<std::size_t>(n_max) + 1;

  // per trial: bit n of f / e marks F_n / E_n
  std::vector<std::vector<char>> f_hit(trials, std::vector<char>(rows, 0));
  std::vector<std::vector<char>> e_hit(trials, std::vector<char>(rows, 0));

  parallel_for(trials, [&](std::size_t trial) {
    Solver solver(p, trial);
    auto& f = f_hit[trial];
    auto& e = e_hit[trial];
    f[0] = probe.sup_abs(solver.state()) <= diag.f_level ? 1 : 0;
    bool inside = solver.sup_abs() <= diag.e_level;  // E_0 so far
    for (std::uint64_t k = 1; k <= total_steps; ++k) {
      solver.step();
      const double sup = solver.sup_abs();
      inside = inside && sup <= diag.e_level;
      if (k % per_cell != 0) continue;
      const std::size_t i = k / per_cell;  // now at t_i
      e[i - 1] = inside && sup <= diag.e_level / 3.0 ? 1 : 0;
      if (i < rows) f[i] = probe.sup_abs(solver.state()) <= diag.f_level ? 1 : 0;
      inside = sup <= diag.e_level;  // E_i starts at t_i
    }
  });

  // E_{-1} is the whole space
  EventRow whole;
  whole.n = -1;
  whole.f_frequency = std::numeric_limits<double>::quiet_NaN();
  whole.f_conditional = std::numeric_limits<double>::quiet_NaN();
  whole.e_frequency = 1.0;
  whole.e_conditional = 1.0;
  whole.f_conditioning_hits = trials;
  whole.e_conditioning_hits = trials;
  diag.rows.push_back(whole);

  std::vector<char> f_chain(trials, 1);
  std::vector<char> e_chain(trials, 1);
  const double n_trials = static_cast<double>(trials);
  for (std::size_t n = 0; n < rows; ++n) {
    EventRow row;
    row.n = static_cast<int>(n);
    std::uint64_t f_count = 0;
    std::uint64_t e_count = 0;
    std::uint64_t f_joint = 0;
    std::uint64_t e_joint = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      f_count += f_hit[t][n];
      e_count += e_hit[t][n];
      row.f_conditioning_hits += f_chain[t];
      row.e_conditioning_hits += e_chain[t];
      f_chain[t] = f_chain[t] && f_hit[t][n];
      e_chain[t] = e_chain[t] && e_hit[t][n];
      f_joint += f_chain[t];
      e_joint += e_chain[t];
    }
    if (row.f_conditioning_hits < kMinConditioningHits)
      throw InsufficientSamples("event_diagnostics: conditioning event for n=" + std::to_string(n) +
                                " has " + std::to_string(row.f_conditioning_hits) + " hits (< 100)");
    row.f_frequency = static_cast<double>(f_count) / n_trials;
    row.e_frequency = static_cast<double>(e_count) / n_trials;
    row.f_conditional =
        static_cast<double>(f_joint) / static_cast<double>(row.f_conditioning_hits);
    row.e_conditional =
        row.e_conditioning_hits < kMinConditioningHits
            ? std::numeric_limits<double>::quiet_NaN()
            : static_cast<double>(e_joint) / static_cast<double>(row.e_conditioning_hits);
    diag.rows.push_back(row);
  }

  std::vector<double> conditionals;
  for (const auto& row : diag.rows)
    if (row.n >= 1 && row.n <= 5) conditionals.push_back(row.f_conditional);
  diag.f_conditional_cv = coefficient_of_variation(conditionals);
  diag.homogeneous = diag.f_conditional_cv < 0.2;
  return diag;
}

RefinementReport refinement_check(const ModelParams& params, double epsilon, std::uint64_t trials) {
  const double inf = std::numeric_limits<double>::infinity();
  SolverOptions coarse_opts;
  coarse_opts.noise_substeps = 2;
  const auto coarse = trial_outcomes(params, trials, inf, coarse_opts);

  ModelParams fine_params = params;
  fine_params.grid_points = 2 * params.grid_points;
  fine_params.dt = params.dt / 2.0;
  const auto fine = trial_outcomes(fine_params, trials, inf);

  RefinementReport r;
  r.coarse = summarize(coarse, epsilon, params.horizon);
  r.fine = summarize(fine, epsilon, params.horizon);
  r.gap = r.fine.estimate - r.coarse.estimate;
  std::uint64_t below = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    const double drop = coarse[i].running_sup - fine[i].running_sup;
    if (drop > 0.0) {
      ++below;
      r.max_sup_drop = std::max(r.max_sup_drop, drop);
    }
  }
  r.fine_below_fraction =
      trials == 0 ? 0.0 : static_cast<double>(below) / static_cast<double>(trials);
  return r;
}

}  // namespace fracshe
