#include "fracshe/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fracshe/errors.hpp"

namespace fracshe {

namespace {

std::vector<double> grid_coordinates(int dim, int points) {
  std::size_t total = 1;
  for (int i = 0; i < dim; ++i) total *= static_cast<std::size_t>(points);
  std::vector<double> coords(total * dim);
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t rest = k;
    for (int axis = dim - 1; axis >= 0; --axis) {
      coords[k * dim + axis] = -1.0 + 2.0 * static_cast<double>(rest % points) / points;
      rest /= points;
    }
  }
  return coords;
}

}  // namespace

Solver::Solver(const ModelParams& params, std::uint64_t trial, SolverOptions options)
    : params_(params),
      options_(options),
      trial_(trial),
      spectrum_(make_spectrum(params)),
      sampler_(spectrum_, params.dt / std::max(1, options.noise_substeps)),
      state_(spectrum_.lattice),
      increment_(spectrum_.lattice->size()),
      forcing_(spectrum_.lattice->size()),
      physical_(params.dim, params.grid_points) {
  if (options_.noise_substeps < 1) throw std::invalid_argument("Solver: noise_substeps < 1");
  decay_.resize(spectrum_.symbols.size());
  for (std::size_t pos = 0; pos < decay_.size(); ++pos)
    decay_[pos] = std::exp(-spectrum_.symbols[pos] * params.dt);

  grid_ = std::make_unique<FourierGrid>(spectrum_.lattice, params.grid_points);
  if (!params.sigma.is_constant()) {
    int product_points = params.grid_points;
    if (params.dealias) {
      // 3/2 padding: products of two degree-N polynomials do not alias onto
      // the retained modes.
      product_points = std::max(product_points, 3 * params.mode_cutoff + 1);
      product_grid_ = std::make_unique<FourierGrid>(spectrum_.lattice, product_points);
    }
    coords_ = grid_coordinates(params.dim, product_points);
    const std::size_t total = coords_.size() / params.dim;
    u_product_.resize(total);
    w_product_.resize(total);
  }
}

Solver::~Solver() = default;

void Solver::set_initial(const PhysicalField& u0) {
  if (u0.dim != params_.dim) throw std::invalid_argument("set_initial: dimension mismatch");
  FourierGrid grid(spectrum_.lattice, u0.points);
  grid.to_spectral(u0.values, state_.coeffs);
  physical_valid_ = false;
}

void Solver::set_initial(const SpectralField& u0) {
  if (u0.lattice->dim() != params_.dim || u0.lattice->cutoff() != params_.mode_cutoff)
    throw std::invalid_argument("set_initial: lattice mismatch");
  state_.coeffs = u0.coeffs;
  physical_valid_ = false;
}

const PhysicalField& Solver::physical() {
  if (!physical_valid_) {
    grid_->to_physical(state_.coeffs, physical_.values);
    physical_valid_ = true;
  }
  return physical_;
}

double Solver::sup_abs() { return physical().sup_abs(); }

void Solver::form_forcing() {
  const int substeps = options_.noise_substeps;
  const RngStream base{params_.seed, trial_, 0};
  sampler_.draw(base.at_step(step_ * substeps), increment_);
  for (int j = 1; j < substeps; ++j) sampler_.accumulate(base.at_step(step_ * substeps + j), increment_);

  const SigmaSpec& sigma = params_.sigma;
  if (sigma.is_constant()) {
    for (std::size_t pos = 0; pos < forcing_.size(); ++pos) forcing_[pos] = sigma.c1 * increment_[pos];
    return;
  }

  FourierGrid& grid = product_grid_ ? *product_grid_ : *grid_;
  if (!product_grid_ && physical_valid_) {
    std::copy(physical_.values.begin(), physical_.values.end(), u_product_.begin());
  } else {
    grid.to_physical(state_.coeffs, u_product_);
  }
  grid.to_physical(increment_, w_product_);
  const int d = params_.dim;
  for (std::size_t k = 0; k < w_product_.size(); ++k) {
    const std::span<const double> x(coords_.data() + k * d, static_cast<std::size_t>(d));
    w_product_[k] *= sigma_eval(sigma, time_, x, u_product_[k]);
  }
  grid.to_spectral(w_product_, forcing_);
}

void Solver::check_divergence() {
  const double guard = params_.divergence_guard;
  if (options_.track_sup) {
    const double sup = sup_abs();
    if (!(sup <= guard)) throw Diverged(time_, sup);
    return;
  }
  double bound = 0.0;
  for (const Complex& c : state_.coeffs) bound += std::abs(c.real()) + std::abs(c.imag());
  if (bound <= guard) return;
  const double sup = sup_abs();
  if (!(sup <= guard)) throw Diverged(time_, sup);
}

void Solver::step() {
  form_forcing();
  auto& u = state_.coeffs;
  if (params_.propagate_noise) {
    for (std::size_t pos = 0; pos < u.size(); ++pos) u[pos] = decay_[pos] * (u[pos] + forcing_[pos]);
  } else {
    for (std::size_t pos = 0; pos < u.size(); ++pos) u[pos] = decay_[pos] * u[pos] + forcing_[pos];
  }
  physical_valid_ = false;
  ++step_;
  time_ = static_cast<double>(step_) * params_.dt;
  check_divergence();
}

std::uint64_t step_count(const ModelParams& params) {
  if (!(params.horizon > 0.0)) return 0;
  const double ratio = params.horizon / params.dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, ratio)) return static_cast<std::uint64_t>(rounded);
  return static_cast<std::uint64_t>(std::ceil(ratio));
}

Trajectory run(const ModelParams& params, const PhysicalField* u0, std::uint64_t trial,
               const RunOptions& options) {
  Solver solver(params, trial, options.solver);
  if (u0 != nullptr) solver.set_initial(*u0);

  Trajectory traj;
  traj.trial = trial;
  const std::uint64_t steps = step_count(params);
  auto wants_snapshot = [&](std::uint64_t k) {
    if (options.snapshot_every > 0 && k % options.snapshot_every == 0) return true;
    return std::find(options.snapshot_steps.begin(), options.snapshot_steps.end(), k) !=
           options.snapshot_steps.end();
  };

  const bool need_sup = options.record_path || options.solver.track_sup ||
                        std::isfinite(options.stop_above);
  double running = need_sup ? solver.sup_abs() : 0.0;
  if (options.record_path) {
    traj.times.reserve(steps + 1);
    traj.running_sup.reserve(steps + 1);
    traj.times.push_back(0.0);
    traj.running_sup.push_back(running);
  }
  if (wants_snapshot(0)) traj.snapshots.push_back({0, 0.0, solver.physical()});

  for (std::uint64_t k = 1; k <= steps; ++k) {
    solver.step();
    if (need_sup) running = std::max(running, solver.sup_abs());
    if (options.record_path) {
      traj.times.push_back(solver.time());
      traj.running_sup.push_back(running);
    }
    if (wants_snapshot(k)) traj.snapshots.push_back({k, solver.time(), solver.physical()});
    if (running > options.stop_above) {
      traj.stopped_early = true;
      break;
    }
  }
  if (!options.record_path && need_sup) {
    traj.times.push_back(solver.time());
    traj.running_sup.push_back(running);
  }
  traj.final_state = solver.state();
  return traj;
}

}  // namespace fracshe
