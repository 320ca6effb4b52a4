#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fracshe/lattice.hpp"
#include "fracshe/solver.hpp"

namespace fracshe {

struct RegressionFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double residual_max = 0.0;
  double x_min = 0.0;
  double x_max = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares of y on x.
RegressionFit fit_line(std::span<const double> x, std::span<const double> y,
                       std::size_t min_points = 5);

/// Least squares of log y on log x; every value must be positive.
RegressionFit fit_loglog(std::span<const double> x, std::span<const double> y);

/// `count` points log-spaced on [lo, hi].
std::vector<double> log_spaced(double lo, double hi, std::size_t count);

/// Monte Carlo row compared against an exact value.
struct EstimateRow {
  double abscissa = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  double oracle = 0.0;

  double z_score() const;
};

struct StructureTable {
  std::vector<EstimateRow> rows;
  /// Log-log fit over the rows with positive abscissa.
  RegressionFit fit;
};

/// Smallest trial count accepted by the structure-function estimators.
inline constexpr std::size_t kMinStructureTrials = 1000;

/// Spatial structure function from one field per trial, all at time t.
/// Lags are integer shifts along axis 0 in grid units; the per-trial
/// statistic averages (u(x + lag) - u(x))^2 over the periodic grid, and the
/// standard error is taken across trials. The oracle column is filled when a
/// spectrum is supplied.
StructureTable structure_function_space(std::span<const PhysicalField> samples, double t,
                                        std::span<const int> lag_steps,
                                        const Spectrum* oracle = nullptr);

/// Temporal structure function at a reference step. Each trajectory must
/// carry snapshots at reference_step and reference_step - lag for every lag.
/// With `grid_index` the increment is taken at that point only, otherwise it
/// is averaged over the grid.
StructureTable structure_function_time(std::span<const Trajectory> samples, double dt,
                                       std::uint64_t reference_step,
                                       std::span<const std::uint64_t> lag_steps,
                                       const Spectrum* oracle = nullptr,
                                       std::optional<std::size_t> grid_index = std::nullopt);

/// Empirical P(|X| > kappa) against the Gaussian value 2 (1 - Phi(kappa/sd)).
/// `std_error` is the binomial standard error under the Gaussian law.
std::vector<EstimateRow> tail_check(std::span<const double> increments, double sd,
                                    std::span<const double> thresholds);

/// 2 (1 - Phi(z)).
double two_sided_gaussian_tail(double z);

/// Dyadic space-time grid G_n = {(j / 4^n, k_1 / 2^n, ..., k_d / 2^n)} over
/// the window [0, time_window] x [0, space_window]^d.
struct DyadicGrid {
  int level = 0;
  int dim = 1;
  double time_window = 1.0;
  double space_window = 1.0;

  std::uint64_t time_count() const;
  std::uint64_t space_count() const;
  std::uint64_t point_count() const;

  /// Number of unordered nearest-neighbour pairs (closed form).
  std::uint64_t neighbour_pair_count() const;

  /// Point as integer coordinates (j, k_1, ..., k_d).
  using Index = std::vector<std::int64_t>;

  static bool nearest_neighbours(const Index& p, const Index& q);

  /// Calls visit(p, q) once per unordered nearest-neighbour pair.
  template <typename Visit>
  void for_each_neighbour_pair(Visit&& visit) const;
};

struct ChainRow {
  int level = 0;
  std::uint64_t pairs = 0;
  /// Largest |N(p) - N(q)| over nearest neighbours, maximised over samples.
  double max_increment = 0.0;
  /// Same, averaged over samples.
  double mean_max_increment = 0.0;
  /// Largest |N| over the window, maximised over samples.
  double sup_norm = 0.0;
};

struct ChainDiagnostic {
  std::vector<ChainRow> rows;
  /// Fit of log mean_max_increment against level, over levels >= fit_from_level.
  RegressionFit fit;
  /// Per-level ratio implied by the fit, exp(slope).
  double decay_rate = 0.0;
};

/// Nearest-neighbour increments of one or more space-time samples on the
/// dyadic grids of levels 0..max_level over the unit window. Every sample
/// needs snapshots at the times j 4^-max_level up to 1. Throws
/// ResolutionTooLow when a level is finer than the simulation grid in time or
/// space, or a snapshot is missing.
ChainDiagnostic chain_diagnostic(std::span<const Trajectory> samples, const ModelParams& params,
                                 int max_level, int fit_from_level = 2);

// ---------------------------------------------------------------------------

template <typename Visit>
void DyadicGrid::for_each_neighbour_pair(Visit&& visit) const {
  const std::int64_t nt = static_cast<std::int64_t>(time_count());
  const std::int64_t ns = static_cast<std::int64_t>(space_count());
  Index p(dim + 1, 0);
  Index q(dim + 1, 0);
  std::uint64_t spatial_total = 1;
  for (int i = 0; i < dim; ++i) spatial_total *= static_cast<std::uint64_t>(ns);

  for (std::int64_t j = 0; j < nt; ++j) {
    for (std::uint64_t s = 0; s < spatial_total; ++s) {
      std::uint64_t rest = s;
      p[0] = j;
      for (int axis = dim - 1; axis >= 0; --axis) {
        p[axis + 1] = static_cast<std::int64_t>(rest % ns);
        rest /= ns;
      }
      // forward neighbour in each spatial axis
      for (int axis = 1; axis <= dim; ++axis) {
        if (p[axis] + 1 >= ns) continue;
        q = p;
        ++q[axis];
        visit(p, q);
      }
      // forward neighbour in time
      if (j + 1 < nt) {
        q = p;
        ++q[0];
        visit(p, q);
      }
    }
  }
}

}  // namespace fracshe
