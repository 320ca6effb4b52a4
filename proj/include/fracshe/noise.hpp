#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "fracshe/field.hpp"
#include "fracshe/lattice.hpp"

namespace fracshe {

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: the i-th output is mix64(key + i * gamma).
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + (++counter_) * kGamma); }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Address of one block of random draws. Distinct (seed, trial, step)
/// triples give independent streams; equal triples give identical draws.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t trial = 0;
  std::uint64_t step = 0;

  CounterRng engine() const;
  RngStream at_step(std::uint64_t k) const { return {seed, trial, k}; }
};

struct NoiseIncrement {
  SpectralField coeffs;
  double dt;
  std::uint64_t step;
  std::uint64_t trial;
};

/// Draws spectral increments of colored noise over one time step.
///
/// For each pair {n, -n}, n != 0: c(n) = sqrt(lambda(n) dt / 2) (g1 + i g2)
/// and c(-n) = conj(c(n)); c(0) = sqrt(lambda(0) dt) g0. Draw order is the
/// zero mode, then pairs in lattice order.
class NoiseSampler {
 public:
  NoiseSampler(const Spectrum& spectrum, double dt);

  void draw(const RngStream& rng, std::span<Complex> out) const;
  /// Adds a fresh draw to `out`.
  void accumulate(const RngStream& rng, std::span<Complex> out) const;

  double dt() const { return dt_; }

 private:
  std::shared_ptr<const ModeLattice> lattice_;
  double dt_;
  std::vector<double> amplitude_;
};

NoiseIncrement sample_increment(const Spectrum& spectrum, double dt, const RngStream& rng);

// Exact second moments of the noise term N(t, x) for sigma = 1, summed over
// the retained lattice.

/// lambda(0) t1 + sum_{n != 0} lambda(n) (1 - exp(-2 mu_n t1)) / (2 mu_n)
double noise_var_oracle(double t1, const Spectrum& spectrum);

/// Same sum with cos(pi n . (x - y)) inserted.
double noise_cov_oracle(double t1, std::span<const double> x, std::span<const double> y,
                        const Spectrum& spectrum);

/// E[(N(t, x) - N(t, y))^2].
double structure_oracle_space(double t, std::span<const double> x, std::span<const double> y,
                              const Spectrum& spectrum);

/// E[(N(t, x) - N(s, x))^2] for t >= s.
double structure_oracle_time(double t, double s, const Spectrum& spectrum);

}  // namespace fracshe
