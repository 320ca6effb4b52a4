#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "fracshe/errors.hpp"
#include "fracshe/noise.hpp"
#include "fracshe/parallel.hpp"
#include "fracshe/solver.hpp"

using namespace fracshe;

namespace {

ModelParams base() {
  ModelParams p;
  p.mode_cutoff = 8;
  p.grid_points = 32;
  p.dt = 1e-3;
  p.horizon = 0.05;
  p.seed = 5;
  return p;
}

PhysicalField bump(int points) {
  PhysicalField f(1, points);
  for (int k = 0; k < points; ++k) {
    const double x = f.coordinate(k);
    f.values[k] = std::cos(M_PI * x) + 0.3 * std::sin(3 * M_PI * x) + 0.5;
  }
  return f;
}

}  // namespace

TEST_CASE("zero sigma gives exact spectral decay") {
  ModelParams p = base();
  p.sigma = SigmaSpec::constant(0.0);
  Solver s(p, 0);
  const PhysicalField u0 = bump(p.grid_points);
  s.set_initial(u0);
  const SpectralField start = s.state();
  for (int k = 0; k < 40; ++k) s.step();
  for (std::size_t pos = 0; pos < start.coeffs.size(); ++pos) {
    const Complex expect = std::exp(-s.spectrum().symbols[pos] * 40 * p.dt) * start[pos];
    CHECK(std::abs(s.state()[pos] - expect) <= 1e-13 * (1.0 + std::abs(start[pos])));
  }
}

TEST_CASE("zero sigma from zero stays zero") {
  ModelParams p = base();
  p.sigma = SigmaSpec::constant(0.0);
  const Trajectory t = run(p, nullptr, 0);
  for (double v : t.running_sup) CHECK(v == 0.0);
}

TEST_CASE("zero horizon keeps only the initial record") {
  ModelParams p = base();
  p.horizon = 0.0;
  const Trajectory t = run(p, nullptr, 0);
  REQUIRE(t.times.size() == 1);
  CHECK(t.times[0] == 0.0);
  CHECK(step_count(p) == 0);
}

TEST_CASE("one step from rest") {
  const ModelParams p = base();
  Solver s(p, 4);
  s.step();
  std::vector<Complex> w(s.state().coeffs.size());
  NoiseSampler(s.spectrum(), p.dt).draw({p.seed, 4, 0}, w);
  for (std::size_t pos = 0; pos < w.size(); ++pos)
    CHECK(std::abs(s.state()[pos] - std::exp(-s.spectrum().symbols[pos] * p.dt) * w[pos]) < 1e-15);
}

TEST_CASE("constant sigma is affine in the initial condition") {
  const ModelParams p = base();
  Solver a(p, 1);
  Solver b(p, 1);
  b.set_initial(bump(p.grid_points));
  const SpectralField start = b.state();
  for (int k = 0; k < 30; ++k) {
    a.step();
    b.step();
  }
  for (std::size_t pos = 0; pos < start.coeffs.size(); ++pos) {
    const Complex drift = std::exp(-a.spectrum().symbols[pos] * 30 * p.dt) * start[pos];
    CHECK(std::abs(b.state()[pos] - a.state()[pos] - drift) < 1e-12);
  }
}

TEST_CASE("variance matches the discrete oracle") {
  ModelParams p = base();
  p.horizon = 0.2;
  const std::uint64_t steps = step_count(p);
  const int trials = 20000;
  RunOptions opts;
  opts.record_path = false;
  opts.solver.track_sup = false;
  std::vector<double> values(trials);
  const double x[] = {0.25};
  parallel_for(trials, [&](std::size_t i) {
    const Trajectory t = run(p, nullptr, i, opts);
    values[i] = evaluate(*t.final_state, x);
  });
  double m2 = 0.0, m4 = 0.0;
  for (double v : values) {
    m2 += v * v;
    m4 += v * v * v * v;
  }
  m2 /= trials;
  m4 /= trials;
  const double se = std::sqrt((m4 - m2 * m2) / trials);

  const Spectrum s = make_spectrum(p);
  double oracle = 0.0;
  for (std::size_t pos = 0; pos < s.weights.size(); ++pos)
    for (std::uint64_t j = 1; j <= steps; ++j)
      oracle += s.weights[pos] * p.dt * std::exp(-2.0 * s.symbols[pos] * j * p.dt);
  CHECK(std::abs(m2 - oracle) < 3.0 * se);
}

TEST_CASE("Hermitian symmetry survives state-dependent sigma") {
  for (bool dealias : {false, true}) {
    ModelParams p = base();
    p.sigma = SigmaSpec::sine_bounded(0.5, 1.5);
    p.dealias = dealias;
    Solver s(p, 2);
    for (int k = 0; k < 25; ++k) s.step();
    CHECK(s.state().hermitian_defect() < 1e-14);
  }
}

TEST_CASE("affine clamped sigma stays finite") {
  ModelParams p = base();
  p.sigma = SigmaSpec::affine_clamped(0.5, 2.0, 3.0);
  p.horizon = 0.02;
  RunOptions opts;
  opts.record_path = false;
  std::vector<double> sups(1000);
  parallel_for(sups.size(), [&](std::size_t i) { sups[i] = run(p, nullptr, i, opts).final_sup(); });
  for (double v : sups) REQUIRE(std::isfinite(v));
}

TEST_CASE("divergence guard") {
  ModelParams p = base();
  p.divergence_guard = 1e-3;
  CHECK_THROWS_AS(run(p, nullptr, 0), Diverged);
  RunOptions quiet;
  quiet.solver.track_sup = false;
  CHECK_THROWS_AS(run(p, nullptr, 0, quiet), Diverged);
}

TEST_CASE("substeps reproduce the half-step noise path") {
  ModelParams coarse = base();
  ModelParams fine = coarse;
  fine.dt = coarse.dt / 2.0;
  SolverOptions two;
  two.noise_substeps = 2;
  Solver a(coarse, 3, two);
  Solver b(fine, 3);
  for (int k = 0; k < 10; ++k) {
    a.step();
    b.step();
    b.step();
  }
  // the zero mode does not decay, so it is the running sum of the increments
  const std::size_t centre = a.spectrum().lattice->zero_index();
  CHECK(std::abs(a.state()[centre] - b.state()[centre]) < 1e-14);
}

TEST_CASE("runs are deterministic across worker counts") {
  ModelParams p = base();
  p.sigma = SigmaSpec::sine_bounded(0.5, 1.0);
  auto collect = [&] {
    std::vector<double> sups(12);
    parallel_for(sups.size(), [&](std::size_t i) { sups[i] = run(p, nullptr, i).final_sup(); });
    return sups;
  };
  setenv(kWorkersEnv, "1", 1);
  const auto one = collect();
  setenv(kWorkersEnv, "3", 1);
  const auto three = collect();
  unsetenv(kWorkersEnv);
  CHECK(one == three);
}

TEST_CASE("snapshots and early stop") {
  ModelParams p = base();
  RunOptions opts;
  opts.snapshot_every = 10;
  const Trajectory t = run(p, nullptr, 0, opts);
  CHECK(t.snapshots.size() == step_count(p) / 10 + 1);
  CHECK(t.snapshots.front().step == 0);
  for (std::size_t i = 1; i < t.running_sup.size(); ++i) CHECK(t.running_sup[i] >= t.running_sup[i - 1]);

  opts.stop_above = 0.5 * t.final_sup();
  const Trajectory cut = run(p, nullptr, 0, opts);
  CHECK(cut.stopped_early);
  CHECK(cut.final_sup() > opts.stop_above);
}
