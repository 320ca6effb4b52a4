#include "fracshe/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include "fracshe/errors.hpp"
#include "fracshe/field.hpp"

namespace fracshe {

double kernel_tail_bound(double alpha, int dim, int cutoff, double t) {
  // Modes whose largest |n_i| equals m number (2m+1)^d - (2m-1)^d and all
  // satisfy |n| >= m.
  double total = 0.0;
  for (long m = cutoff + 1;; ++m) {
    const double shell = std::pow(2.0 * m + 1, dim) - std::pow(2.0 * m - 1, dim);
    const double term = shell * std::exp(-std::pow(std::numbers::pi * m, alpha) * t);
    total += term;
    if (term <= 1e-18 * total || term < 1e-300) break;
    if (m > cutoff + 10'000'000) return INFINITY;
  }
  return total;
}

KernelEval::KernelEval(const ModelParams& params) : params_(params), spectrum_(make_spectrum(params)) {
  const double alpha = params.alpha;
  const int dim = params.dim;
  const int cutoff = params.mode_cutoff;
  double lo = 1e-14;
  double hi = 1.0;
  while (kernel_tail_bound(alpha, dim, cutoff, hi) >= tail_tolerance) hi *= 2.0;
  for (int iter = 0; iter < 200 && hi / lo > 1.0 + 1e-12; ++iter) {
    const double mid = std::sqrt(lo * hi);
    if (kernel_tail_bound(alpha, dim, cutoff, mid) < tail_tolerance) hi = mid;
    else lo = mid;
  }
  t_min_ = hi;
}

void KernelEval::require(double t) const {
  if (!(t >= t_min_)) {
    throw TimeTooSmall(fmt::format("kernel queried at t={:.6g} below t_min={:.6g} for cutoff {}",
                                   t, t_min_, params_.mode_cutoff));
  }
}

int KernelEval::default_points() const { return 4 * params_.mode_cutoff; }

double KernelEval::coefficient(std::size_t pos, double t) const {
  return std::ldexp(std::exp(-spectrum_.symbols[pos] * t), -params_.dim);
}

double KernelEval::pbar(double t, std::span<const double> x) const {
  require(t);
  const ModeLattice& lattice = *spectrum_.lattice;
  double acc = 0.0;
  for (std::size_t pos = 0; pos < lattice.size(); ++pos) {
    const auto n = lattice.mode(pos);
    double phase = 0.0;
    for (int i = 0; i < lattice.dim(); ++i) phase += n[i] * x[i];
    acc += std::exp(-spectrum_.symbols[pos] * t) * std::cos(std::numbers::pi * phase);
  }
  return std::ldexp(acc, -params_.dim);
}

namespace {

// Integrates |f| over the torus with the midpoint rule, given the series
// coefficients of f.
double midpoint_l1(const ModeLattice& lattice, std::shared_ptr<const ModeLattice> owner,
                   std::vector<Complex> coeffs, int points) {
  const double h = 2.0 / points;
  for (std::size_t pos = 0; pos < lattice.size(); ++pos) {
    double shift = 0.0;
    for (int v : lattice.mode(pos)) shift += v;
    coeffs[pos] *= std::polar(1.0, std::numbers::pi * shift * 0.5 * h);
  }
  FourierGrid grid(std::move(owner), points);
  std::vector<double> values(grid.grid_size());
  grid.to_physical(coeffs, values);
  double sum = 0.0;
  for (double v : values) sum += std::abs(v);
  return sum * std::pow(h, lattice.dim());
}

// Exact L1 norm of a real trigonometric polynomial on [-1, 1]: sign changes
// are bracketed on the grid, refined, and the antiderivative is differenced
// between consecutive roots.
double line_l1(const ModeLattice& lattice, const std::vector<Complex>& coeffs, int points) {
  const int n = lattice.cutoff();
  const Complex* c = coeffs.data() + n;  // c[m] for m = -n..n
  auto g = [&](double y) {
    double acc = c[0].real();
    for (int m = 1; m <= n; ++m) acc += 2.0 * (c[m] * std::polar(1.0, std::numbers::pi * m * y)).real();
    return acc;
  };
  auto antiderivative = [&](double y) {
    double acc = c[0].real() * y;
    for (int m = 1; m <= n; ++m) {
      const Complex e = c[m] * std::polar(1.0, std::numbers::pi * m * y) / Complex(0.0, std::numbers::pi * m);
      acc += 2.0 * e.real();
    }
    return acc;
  };

  const double h = 2.0 / points;
  std::vector<double> roots;
  double left = g(-1.0);
  for (int k = 0; k < points; ++k) {
    const double a = -1.0 + k * h;
    const double b = k + 1 == points ? 1.0 : a + h;
    const double right = g(b);
    if (left == 0.0) {
      roots.push_back(a);
    } else if (left * right < 0.0) {
      boost::uintmax_t iters = 100;
      const auto bracket = boost::math::tools::toms748_solve(
          g, a, b, left, right, boost::math::tools::eps_tolerance<double>(52), iters);
      roots.push_back(0.5 * (bracket.first + bracket.second));
    }
    left = right;
  }
  if (roots.empty()) return std::abs(antiderivative(1.0) - antiderivative(-1.0));
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < roots.size(); ++i)
    total += std::abs(antiderivative(roots[i + 1]) - antiderivative(roots[i]));
  // the piece that wraps through y = 1
  total += std::abs(antiderivative(1.0) - antiderivative(roots.back()) + antiderivative(roots.front()) -
                    antiderivative(-1.0));
  return total;
}

double l1_norm(const ModeLattice& lattice, std::shared_ptr<const ModeLattice> owner,
               std::vector<Complex> coeffs, int points) {
  if (lattice.dim() == 1) return line_l1(lattice, coeffs, points);
  return midpoint_l1(lattice, std::move(owner), std::move(coeffs), points);
}

}  // namespace

double KernelEval::l1_space_modulus(double t, std::span<const double> x, int points) const {
  require(t);
  if (points == 0) points = default_points();
  const ModeLattice& lattice = *spectrum_.lattice;
  std::vector<Complex> coeffs(lattice.size());
  for (std::size_t pos = 0; pos < lattice.size(); ++pos) {
    const auto n = lattice.mode(pos);
    double phase = 0.0;
    for (int i = 0; i < lattice.dim(); ++i) phase += n[i] * x[i];
    coeffs[pos] = coefficient(pos, t) * (std::polar(1.0, -std::numbers::pi * phase) - 1.0);
  }
  return l1_norm(lattice, spectrum_.lattice, std::move(coeffs), points);
}

double KernelEval::l1_time_modulus(double t, double s, int points) const {
  if (t < s) throw std::invalid_argument("l1_time_modulus: requires t >= s");
  require(s);
  if (t == s) return 0.0;
  if (points == 0) points = default_points();
  const ModeLattice& lattice = *spectrum_.lattice;
  std::vector<Complex> coeffs(lattice.size());
  for (std::size_t pos = 0; pos < lattice.size(); ++pos)
    coeffs[pos] = coefficient(pos, t) - coefficient(pos, s);
  return l1_norm(lattice, spectrum_.lattice, std::move(coeffs), points);
}

double KernelEval::colored_trace(double tau) const {
  require(tau);
  double acc = 0.0;
  for (std::size_t pos = 0; pos < spectrum_.symbols.size(); ++pos)
    acc += spectrum_.weights[pos] * std::exp(-spectrum_.symbols[pos] * tau);
  return acc;
}

}  // namespace fracshe
