#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fracshe/analysis.hpp"
#include "fracshe/params.hpp"
#include "fracshe/solver.hpp"

namespace fracshe {

struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
};

/// 95% Wilson score interval by default.
WilsonInterval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                               double z = 1.959963984540054);

/// Monte Carlo estimate of P(sup over [0, T] x grid of |u| <= epsilon).
struct SmallBallEstimate {
  double epsilon = 0.0;
  double horizon = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;
  /// Trials that hit the divergence guard; counted as failures.
  std::uint64_t diverged = 0;
  double estimate = 0.0;
  WilsonInterval interval;
};

struct TrialOutcome {
  double running_sup = 0.0;
  bool diverged = false;
  /// The path was cut short once it exceeded the stop level.
  bool stopped = false;
};

/// Simulates trials 0..trials-1 from u0 = 0 and returns their running sups.
/// Paths stop once the running sup exceeds `stop_above`; a diverged path
/// records the sup at which the guard fired.
std::vector<TrialOutcome> trial_outcomes(const ModelParams& params, std::uint64_t trials,
                                         double stop_above, const SolverOptions& solver = {});

/// Counts successes (running sup <= epsilon). A diverged trial whose sup is
/// still <= epsilon cannot be classified and raises Diverged.
SmallBallEstimate summarize(std::span<const TrialOutcome> outcomes, double epsilon, double horizon);

SmallBallEstimate estimate(const ModelParams& params, double epsilon, std::uint64_t trials);

/// Exponents of the small-ball bounds, P ~ exp(-C T / eps^theta).
struct ExponentBracket {
  /// Exponent in the lower bound on P (regime a only), 2(2 alpha - beta)/beta.
  double lower_bound_exponent = 0.0;
  /// Exponent in the upper bound on P,
  /// 2 alpha / (alpha - beta) * min(1 + beta/(alpha d), (2 alpha - beta)/alpha).
  double upper_bound_exponent = 0.0;
  /// d = 1 and alpha >= 2 beta: both bounds hold.
  bool regime_a = false;
};

ExponentBracket exponent_bracket(double alpha, double beta, int dim);

struct SweepResult {
  std::vector<SmallBallEstimate> estimates;
  /// log(-log P) against log(1/eps); the slope is the empirical exponent.
  RegressionFit fit;
  ExponentBracket bracket;
};

/// Fits the exponent from at least 4 estimates strictly inside (0, 1).
/// Throws DegenerateEstimate otherwise. The fit uses the supplied estimates
/// directly, so callers may pass estimates computed from shared trials.
SweepResult fit_sweep(std::vector<SmallBallEstimate> estimates, const ModelParams& params);

/// Runs one set of trials and evaluates every epsilon on the same paths, so
/// the ball events are nested pathwise.
SweepResult sweep_and_fit(const ModelParams& params, std::span<const double> epsilons,
                          std::uint64_t trials);

enum class C0Policy {
  Diagnostic,     ///< c0 as given
  Admissible,  ///< c0 below both admissibility bounds, with stand-in constants
};

struct C0Settings {
  C0Policy policy = C0Policy::Diagnostic;
  double c0 = 0.5;
  // stand-ins for the unknown constants of the admissibility bounds;
  // c5 must exceed 1
  double c5 = 2.0;
  double c6 = 1.0;
  double sigma_upper = 1.0;
  double scale = 1.0;
  /// fraction of the bound used under Admissible
  double safety = 0.5;
};

/// Space-time grid t_i = i c0 eps^4, x_j = j eps^2.
struct GridSchedule {
  double epsilon = 0.0;
  double c0 = 0.0;
  double t1 = 0.0;
  double pitch = 0.0;
  /// min{n : n eps^2 > 1}
  std::int64_t n1 = 0;
  /// floor(T / t1)
  std::uint64_t time_count = 0;
};

/// Under Admissible, c0 = safety * min(1, (c6 / (36 sigma_upper^2 ln c5))^(alpha/(alpha-beta)),
/// scale * eps^((2 alpha d - 4 beta)/beta)).
GridSchedule schedule(double epsilon, double horizon, double alpha, double beta, int dim,
                      const C0Settings& settings = {});

struct EventRow {
  int n = 0;
  /// Frequency of F_n (sup over the spatial grid at t_n below t1^((alpha-beta)/(2 alpha))).
  double f_frequency = 0.0;
  /// Frequency of E_n; E_{-1} is the whole space.
  double e_frequency = 0.0;
  /// Hits of the conditioning intersections of F_0..F_{n-1} and E_{-1}..E_{n-1}.
  std::uint64_t f_conditioning_hits = 0;
  std::uint64_t e_conditioning_hits = 0;
  /// P(F_n | F_0 ... F_{n-1}) and P(E_n | E_{-1} ... E_{n-1}). The E ratio is
  /// NaN when its conditioning event has fewer than kMinConditioningHits hits.
  double f_conditional = 0.0;
  double e_conditional = 0.0;
};

struct EventDiagnostics {
  GridSchedule grid;
  double f_level = 0.0;        ///< t1^((alpha-beta)/(2 alpha))
  double e_level = 0.0;        ///< eps^(2(alpha-beta)/alpha)
  std::vector<EventRow> rows;  ///< E_{-1} first, then n = 0..n_max
  /// Coefficient of variation of the F conditionals over n = 1..min(5, n_max).
  double f_conditional_cv = 0.0;
  bool homogeneous = false;
};

/// Minimum hits of a conditioning event.
inline constexpr std::uint64_t kMinConditioningHits = 100;

/// Monte Carlo frequencies of the events F_n and E_n for n = 0..n_max. The
/// solver step is shrunk so that every t_i is a step time. Throws
/// InsufficientSamples when an intersection of F_0..F_{n-1} has fewer than
/// 100 hits.
EventDiagnostics event_diagnostics(const ModelParams& params, double epsilon, std::uint64_t trials,
                                   int n_max, const C0Settings& settings = {});

/// The same trials at (M, dt) and at (2M, dt/2) on matched noise.
struct RefinementReport {
  SmallBallEstimate coarse;
  SmallBallEstimate fine;
  /// fine.estimate - coarse.estimate
  double gap = 0.0;
  /// Fraction of trials whose fine running sup is below the coarse one.
  double fine_below_fraction = 0.0;
  /// Largest coarse sup minus fine sup over trials (0 when none is below).
  double max_sup_drop = 0.0;
};

RefinementReport refinement_check(const ModelParams& params, double epsilon, std::uint64_t trials);

}  // namespace fracshe
