#include "fracshe/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "fracshe/errors.hpp"
#include "fracshe/noise.hpp"

namespace fracshe {

RegressionFit fit_line(std::span<const double> x, std::span<const double> y,
                       std::size_t min_points) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_line: size mismatch");
  const std::size_t n = x.size();
  if (n < std::max<std::size_t>(min_points, 2))
    throw InsufficientSamples("fit_line: need at least " + std::to_string(min_points) +
                              " points, got " + std::to_string(n));

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: abscissae are all equal");

  RegressionFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
    fit.residual_max = std::max(fit.residual_max, std::abs(r));
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  fit.x_min = *std::min_element(x.begin(), x.end());
  fit.x_max = *std::max_element(x.begin(), x.end());
  fit.points = n;
  return fit;
}

RegressionFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_loglog: size mismatch");
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw std::invalid_argument(fmt::format("fit_loglog: non-positive value at point {}", i));
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  RegressionFit fit = fit_line(lx, ly);
  fit.x_min = *std::min_element(x.begin(), x.end());
  fit.x_max = *std::max_element(x.begin(), x.end());
  return fit;
}

std::vector<double> log_spaced(double lo, double hi, std::size_t count) {
  if (count < 2) return {lo};
  std::vector<double> out(count);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

double EstimateRow::z_score() const {
  if (std_error > 0.0) return (estimate - oracle) / std_error;
  return estimate == oracle ? 0.0 : INFINITY;
}

namespace {

struct MeanSe {
  double mean;
  double se;
};

MeanSe mean_and_se(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double var = v.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

void fit_table(StructureTable& table) {
  std::vector<double> x, y;
  for (const auto& row : table.rows) {
    if (row.abscissa > 0.0 && row.estimate > 0.0) {
      x.push_back(row.abscissa);
      y.push_back(row.estimate);
    }
  }
  if (x.size() >= 5) table.fit = fit_loglog(x, y);
}

const Snapshot& find_snapshot(const Trajectory& traj, std::uint64_t step) {
  auto it = std::lower_bound(traj.snapshots.begin(), traj.snapshots.end(), step,
                             [](const Snapshot& s, std::uint64_t k) { return s.step < k; });
  if (it == traj.snapshots.end() || it->step != step)
    throw std::invalid_argument(fmt::format("trajectory {} has no snapshot at step {}", traj.trial, step));
  return *it;
}

}  // namespace

StructureTable structure_function_space(std::span<const PhysicalField> samples, double t,
                                        std::span<const int> lag_steps, const Spectrum* oracle) {
  if (samples.size() < kMinStructureTrials) {
    throw InsufficientSamples(fmt::format("structure_function_space: {} trials, need {}",
                                          samples.size(), kMinStructureTrials));
  }
  const int m = samples.front().points;
  const int d = samples.front().dim;
  const std::size_t total = samples.front().values.size();
  // stride of axis 0 in the flattened layout
  const std::size_t stride = total / static_cast<std::size_t>(m);

  StructureTable table;
  std::vector<double> per_trial(samples.size());
  for (int lag : lag_steps) {
    for (std::size_t s = 0; s < samples.size(); ++s) {
      const auto& v = samples[s].values;
      double acc = 0.0;
      for (std::size_t k = 0; k < total; ++k) {
        const std::size_t i0 = k / stride;
        const std::size_t shifted = ((i0 + static_cast<std::size_t>(((lag % m) + m) % m)) % m) * stride + k % stride;
        const double diff = v[shifted] - v[k];
        acc += diff * diff;
      }
      per_trial[s] = acc / static_cast<double>(total);
    }
    const auto [mean, se] = mean_and_se(per_trial);
    EstimateRow row;
    row.abscissa = std::abs(lag) * 2.0 / m;
    row.estimate = mean;
    row.std_error = se;
    if (oracle != nullptr) {
      std::vector<double> x(d, 0.0), y(d, 0.0);
      y[0] = row.abscissa;
      row.oracle = structure_oracle_space(t, x, y, *oracle);
    }
    table.rows.push_back(row);
  }
  fit_table(table);
  return table;
}

StructureTable structure_function_time(std::span<const Trajectory> samples, double dt,
                                       std::uint64_t reference_step,
                                       std::span<const std::uint64_t> lag_steps,
                                       const Spectrum* oracle, std::optional<std::size_t> grid_index) {
  if (samples.size() < kMinStructureTrials) {
    throw InsufficientSamples(fmt::format("structure_function_time: {} trials, need {}",
                                          samples.size(), kMinStructureTrials));
  }
  StructureTable table;
  std::vector<double> per_trial(samples.size());
  const double t_ref = static_cast<double>(reference_step) * dt;
  for (std::uint64_t lag : lag_steps) {
    if (lag > reference_step) throw std::invalid_argument("structure_function_time: lag beyond reference");
    for (std::size_t s = 0; s < samples.size(); ++s) {
      const auto& a = find_snapshot(samples[s], reference_step).field.values;
      const auto& b = find_snapshot(samples[s], reference_step - lag).field.values;
      if (grid_index) {
        const double diff = a[*grid_index] - b[*grid_index];
        per_trial[s] = diff * diff;
      } else {
        double acc = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) acc += (a[k] - b[k]) * (a[k] - b[k]);
        per_trial[s] = acc / static_cast<double>(a.size());
      }
    }
    const auto [mean, se] = mean_and_se(per_trial);
    EstimateRow row;
    row.abscissa = static_cast<double>(lag) * dt;
    row.estimate = mean;
    row.std_error = se;
    if (oracle != nullptr) row.oracle = structure_oracle_time(t_ref, t_ref - row.abscissa, *oracle);
    table.rows.push_back(row);
  }
  fit_table(table);
  return table;
}

double two_sided_gaussian_tail(double z) { return std::erfc(z / std::numbers::sqrt2); }

std::vector<EstimateRow> tail_check(std::span<const double> increments, double sd,
                                    std::span<const double> thresholds) {
  if (increments.size() < 100)
    throw InsufficientSamples(fmt::format("tail_check: {} samples, need 100", increments.size()));
  if (!(sd > 0.0)) throw std::invalid_argument("tail_check: sd must be positive");
  std::vector<double> abs_values(increments.size());
  std::transform(increments.begin(), increments.end(), abs_values.begin(),
                 [](double v) { return std::abs(v); });
  std::sort(abs_values.begin(), abs_values.end());
  const double n = static_cast<double>(abs_values.size());

  std::vector<EstimateRow> rows;
  for (double kappa : thresholds) {
    const auto above = abs_values.end() - std::upper_bound(abs_values.begin(), abs_values.end(), kappa);
    EstimateRow row;
    row.abscissa = kappa;
    row.estimate = static_cast<double>(above) / n;
    row.oracle = two_sided_gaussian_tail(kappa / sd);
    row.std_error = std::sqrt(row.oracle * (1.0 - row.oracle) / n);
    rows.push_back(row);
  }
  return rows;
}

std::uint64_t DyadicGrid::time_count() const {
  return static_cast<std::uint64_t>(std::floor(time_window * std::ldexp(1.0, 2 * level) + 1e-9)) + 1;
}

std::uint64_t DyadicGrid::space_count() const {
  return static_cast<std::uint64_t>(std::floor(space_window * std::ldexp(1.0, level) + 1e-9)) + 1;
}

std::uint64_t DyadicGrid::point_count() const {
  std::uint64_t total = time_count();
  for (int i = 0; i < dim; ++i) total *= space_count();
  return total;
}

std::uint64_t DyadicGrid::neighbour_pair_count() const {
  const std::uint64_t nt = time_count();
  const std::uint64_t ns = space_count();
  std::uint64_t spatial = 1;
  for (int i = 0; i < dim; ++i) spatial *= ns;
  // same time, one spatial index differs by one
  std::uint64_t same_time = nt * static_cast<std::uint64_t>(dim) * (ns - 1);
  for (int i = 1; i < dim; ++i) same_time *= ns;
  // same place, adjacent times
  const std::uint64_t same_place = (nt - 1) * spatial;
  return same_time + same_place;
}

bool DyadicGrid::nearest_neighbours(const Index& p, const Index& q) {
  if (p.size() != q.size()) return false;
  int space_unit_steps = 0;
  int space_other = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    const auto diff = std::abs(p[i] - q[i]);
    if (diff == 1) ++space_unit_steps;
    else if (diff != 0) ++space_other;
  }
  const auto dt = std::abs(p[0] - q[0]);
  if (dt == 0) return space_unit_steps == 1 && space_other == 0;
  return dt == 1 && space_unit_steps == 0 && space_other == 0;
}

ChainDiagnostic chain_diagnostic(std::span<const Trajectory> samples, const ModelParams& params,
                                 int max_level, int fit_from_level) {
  if (samples.empty()) throw InsufficientSamples("chain_diagnostic: no samples");
  const int m = params.grid_points;
  const int d = params.dim;

  ChainDiagnostic out;
  for (int level = 0; level <= max_level; ++level) {
    DyadicGrid grid{level, d, 1.0, 1.0};
    const double time_pitch = std::ldexp(1.0, -2 * level);
    const double steps_per = time_pitch / params.dt;
    const auto time_stride = static_cast<std::uint64_t>(std::llround(steps_per));
    if (time_stride < 1 || std::abs(steps_per - static_cast<double>(time_stride)) > 1e-6 * steps_per) {
      throw ResolutionTooLow(fmt::format("dyadic level {} needs time pitch {} to be a multiple of dt={}",
                                         level, time_pitch, params.dt));
    }
    if (m % 2 != 0 || (m / 2) % (1 << level) != 0) {
      throw ResolutionTooLow(fmt::format("dyadic level {} needs grid_points/2 divisible by {} (have {})",
                                         level, 1 << level, m));
    }
    const std::int64_t space_stride = (m / 2) >> level;

    auto value = [&](const Trajectory& traj, const DyadicGrid::Index& p) {
      const std::uint64_t step = static_cast<std::uint64_t>(p[0]) * time_stride;
      auto it = std::lower_bound(traj.snapshots.begin(), traj.snapshots.end(), step,
                                 [](const Snapshot& s, std::uint64_t k) { return s.step < k; });
      if (it == traj.snapshots.end() || it->step != step)
        throw ResolutionTooLow(fmt::format("chain_diagnostic: missing snapshot at step {}", step));
      const auto& field = it->field;
      std::size_t flat = 0;
      for (int axis = 0; axis < d; ++axis) {
        const std::int64_t idx = (m / 2 + p[axis + 1] * space_stride) % m;
        flat = flat * static_cast<std::size_t>(m) + static_cast<std::size_t>(idx);
      }
      return field.values[flat];
    };

    ChainRow row;
    row.level = level;
    row.pairs = grid.neighbour_pair_count();
    double sum_max = 0.0;
    for (const Trajectory& traj : samples) {
      double worst = 0.0;
      double sup = 0.0;
      grid.for_each_neighbour_pair([&](const DyadicGrid::Index& p, const DyadicGrid::Index& q) {
        const double a = value(traj, p);
        const double b = value(traj, q);
        worst = std::max(worst, std::abs(a - b));
        sup = std::max({sup, std::abs(a), std::abs(b)});
      });
      row.max_increment = std::max(row.max_increment, worst);
      row.sup_norm = std::max(row.sup_norm, sup);
      sum_max += worst;
    }
    row.mean_max_increment = sum_max / static_cast<double>(samples.size());
    out.rows.push_back(row);
  }

  std::vector<double> levels, logs;
  for (const auto& row : out.rows) {
    if (row.level >= fit_from_level && row.mean_max_increment > 0.0) {
      levels.push_back(row.level);
      logs.push_back(std::log(row.mean_max_increment));
    }
  }
  out.fit = fit_line(levels, logs);
  out.decay_rate = std::exp(out.fit.slope);
  return out;
}

}  // namespace fracshe
