#pragma once

#include <span>

#include "fracshe/lattice.hpp"
#include "fracshe/params.hpp"

namespace fracshe {

/// Upper bound on sum_{n outside the cutoff cube} exp(-pi^alpha |n|^alpha t),
/// obtained by grouping modes into shells of constant max-norm.
double kernel_tail_bound(double alpha, int dim, int cutoff, double t);

/// Truncated Fourier series of the periodic fractional heat kernel
///   pbar(t, x) = 2^-d sum_n exp(-pi^alpha |n|^alpha t) exp(i pi n . x)
/// together with its L1 moduli and the colored trace sum.
///
/// The smallest admissible time t_min is derived from the cutoff so that the
/// dropped tail stays below `tail_tolerance`; queries below it throw
/// TimeTooSmall.
class KernelEval {
 public:
  static constexpr double tail_tolerance = 1e-12;

  explicit KernelEval(const ModelParams& params);

  double t_min() const { return t_min_; }
  const Spectrum& spectrum() const { return spectrum_; }

  double pbar(double t, std::span<const double> x) const;

  /// Integral of |pbar(t, y - x) - pbar(t, y)| over the torus, using `points`
  /// per axis (0 selects 4N). In d = 1 the grid only brackets sign changes and
  /// the integral is exact up to root finding; otherwise the midpoint rule.
  double l1_space_modulus(double t, std::span<const double> x, int points = 0) const;

  /// Integral of |pbar(t, x) - pbar(s, x)|, same quadrature.
  double l1_time_modulus(double t, double s, int points = 0) const;

  /// S(tau) = sum_n lambda(n) exp(-mu_n tau).
  double colored_trace(double tau) const;

  /// Spectral coefficient of pbar(t, .) at lattice position `pos`.
  double coefficient(std::size_t pos, double t) const;

 private:
  void require(double t) const;
  int default_points() const;

  ModelParams params_;
  Spectrum spectrum_;
  double t_min_;
};

}  // namespace fracshe
