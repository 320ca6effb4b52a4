#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "fracshe/field.hpp"
#include "fracshe/lattice.hpp"
#include "fracshe/noise.hpp"
#include "fracshe/params.hpp"

namespace fracshe {

struct SolverOptions {
  /// Each step's increment is the sum of this many sub-increments drawn at
  /// stream steps k*s .. k*s+s-1. A run with (dt, s=2) sees the same noise
  /// path as a run with (dt/2, s=1).
  int noise_substeps = 1;
  /// Evaluate the physical sup after every step. When off, divergence is
  /// still detected through the bound sup|u| <= sum |Re c| + |Im c|.
  bool track_sup = true;
};

/// Pseudo-spectral exponential-Euler integrator for
///   du = -(-Delta)^{alpha/2} u dt + sigma(t, x, u) F(dt, dx)
/// on the torus [-1, 1]^d. One instance per trial.
///
/// A step draws W_k, forms g = sigma(t_k, x, u_k(x)) W_k(x) on the grid,
/// transforms back and sets u_{k+1}(n) = exp(-mu_n dt) (u_k(n) + g(n)).
class Solver {
 public:
  Solver(const ModelParams& params, std::uint64_t trial, SolverOptions options = {});
  ~Solver();
  Solver(const Solver&) = delete;
  Solver& operator=(const Solver&) = delete;

  void set_initial(const PhysicalField& u0);
  void set_initial(const SpectralField& u0);

  /// Throws Diverged when sup|u| exceeds params.divergence_guard.
  void step();

  double time() const { return time_; }
  std::uint64_t step_index() const { return step_; }
  const SpectralField& state() const { return state_; }
  const Spectrum& spectrum() const { return spectrum_; }
  const ModelParams& params() const { return params_; }

  /// Physical values on the params.grid_points grid.
  const PhysicalField& physical();
  double sup_abs();

 private:
  void form_forcing();
  void check_divergence();

  ModelParams params_;
  SolverOptions options_;
  std::uint64_t trial_;
  Spectrum spectrum_;
  NoiseSampler sampler_;
  std::vector<double> decay_;
  SpectralField state_;
  std::vector<Complex> increment_;
  std::vector<Complex> forcing_;
  std::unique_ptr<FourierGrid> grid_;
  std::unique_ptr<FourierGrid> product_grid_;  // padded grid when dealiasing
  std::vector<double> coords_;                 // product-grid coordinates
  std::vector<double> u_product_;
  std::vector<double> w_product_;
  PhysicalField physical_;
  bool physical_valid_ = false;
  double time_ = 0.0;
  std::uint64_t step_ = 0;
};

struct RunOptions {
  SolverOptions solver;
  /// Record physical snapshots every k steps (0 = never), step 0 included.
  std::uint64_t snapshot_every = 0;
  /// Additional explicit snapshot steps.
  std::vector<std::uint64_t> snapshot_steps;
  /// Stop as soon as the running sup exceeds this level.
  double stop_above = std::numeric_limits<double>::infinity();
  /// Skip the per-step record; only the final state is kept.
  bool record_path = true;
};

struct Snapshot {
  std::uint64_t step;
  double time;
  PhysicalField field;
};

struct Trajectory {
  std::uint64_t trial = 0;
  std::vector<double> times;
  std::vector<double> running_sup;
  std::vector<Snapshot> snapshots;
  bool stopped_early = false;
  std::optional<SpectralField> final_state;

  double final_sup() const { return running_sup.empty() ? 0.0 : running_sup.back(); }
};

/// Number of steps that reach the horizon.
std::uint64_t step_count(const ModelParams& params);

/// Iterates the solver to params.horizon from u0 (zero when null). Diverged
/// propagates.
Trajectory run(const ModelParams& params, const PhysicalField* u0, std::uint64_t trial,
               const RunOptions& options = {});

}  // namespace fracshe
