#include <doctest.h>

#include <cmath>
#include <vector>

#include "fracshe/analysis.hpp"
#include "fracshe/field.hpp"
#include "fracshe/noise.hpp"
#include "fracshe/params.hpp"

using namespace fracshe;

namespace {

ModelParams small(int cutoff) {
  ModelParams p;
  p.mode_cutoff = cutoff;
  p.grid_points = 2 * cutoff + 2;
  return p;
}

}  // namespace

TEST_CASE("counter streams are reproducible and distinct") {
  const RngStream a{7, 3, 11};
  auto e1 = a.engine();
  auto e2 = a.engine();
  for (int i = 0; i < 16; ++i) CHECK(e1() == e2());
  CHECK(a.engine()() != a.at_step(12).engine()());
  CHECK(a.engine()() != RngStream{7, 4, 11}.engine()());
  CHECK(a.engine()() != RngStream{8, 3, 11}.engine()());
}

TEST_CASE("increments are Hermitian and reproducible") {
  const Spectrum s = make_spectrum(small(6));
  const NoiseIncrement a = sample_increment(s, 1e-3, {1, 2, 3});
  const NoiseIncrement b = sample_increment(s, 1e-3, {1, 2, 3});
  CHECK(a.coeffs.hermitian_defect() == 0.0);
  CHECK(a.coeffs.coeffs == b.coeffs.coeffs);
  CHECK(a.coeffs[s.lattice->zero_index()].imag() == 0.0);

  FourierGrid grid(s.lattice, 14);
  std::vector<double> out(14);
  CHECK(grid.to_physical(a.coeffs.coeffs, out) < 1e-10);
}

TEST_CASE("zero weights give a zero increment") {
  Spectrum s = make_spectrum(small(4));
  std::fill(s.weights.begin(), s.weights.end(), 0.0);
  const NoiseIncrement inc = sample_increment(s, 0.1, {1, 0, 0});
  for (const auto& c : inc.coeffs.coeffs) CHECK(c == Complex(0.0, 0.0));
}

TEST_CASE("accumulate adds a fresh draw") {
  const Spectrum s = make_spectrum(small(5));
  const NoiseSampler sampler(s, 1e-2);
  std::vector<Complex> a(s.lattice->size()), b(s.lattice->size()), sum(s.lattice->size());
  sampler.draw({1, 0, 0}, a);
  sampler.draw({1, 0, 1}, b);
  sampler.draw({1, 0, 0}, sum);
  sampler.accumulate({1, 0, 1}, sum);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(sum[i] - (a[i] + b[i])) < 1e-15);
}

TEST_CASE("physical variance and covariance of one increment") {
  const ModelParams p = small(8);
  const Spectrum s = make_spectrum(p);
  const double dt = 0.01;
  const NoiseSampler sampler(s, dt);
  FourierGrid grid(s.lattice, 18);
  std::vector<Complex> c(s.lattice->size());
  std::vector<double> v(18);
  const int lag = 5;
  const int draws = 100000;
  double sxx = 0.0, sxy = 0.0, sxx2 = 0.0, sxy2 = 0.0;
  for (int k = 0; k < draws; ++k) {
    sampler.draw({99, 0, static_cast<std::uint64_t>(k)}, c);
    grid.to_physical(c, v);
    const double xx = v[3] * v[3];
    const double xy = v[3] * v[3 + lag];
    sxx += xx;
    sxx2 += xx * xx;
    sxy += xy;
    sxy2 += xy * xy;
  }
  const double n = draws;
  const double var = sxx / n;
  const double cov = sxy / n;
  const double se_var = std::sqrt((sxx2 / n - var * var) / n);
  const double se_cov = std::sqrt((sxy2 / n - cov * cov) / n);

  double var_oracle = 0.0;
  double cov_oracle = 0.0;
  const double h = 2.0 * lag / 18.0;
  for (std::size_t pos = 0; pos < s.lattice->size(); ++pos) {
    var_oracle += dt * s.weights[pos];
    cov_oracle += dt * s.weights[pos] * std::cos(M_PI * s.lattice->mode(pos)[0] * h);
  }
  CHECK(std::abs(var - var_oracle) < 3.0 * se_var);
  CHECK(std::abs(cov - cov_oracle) < 3.0 * se_cov);
}

TEST_CASE("variance oracle") {
  const Spectrum s = make_spectrum(small(16));
  CHECK(noise_var_oracle(0.0, s) == 0.0);

  ModelParams p0 = small(1);
  p0.lambda_zero = 0.7;
  const Spectrum zero_only = make_spectrum(p0, 0);
  CHECK(noise_var_oracle(0.3, zero_only) == doctest::Approx(0.21));

  // the dropped shells contribute at most sum_{n > N} 2 n^-(1-beta) / (2 pi^2 n^2)
  ModelParams p = small(512);
  const double a = noise_var_oracle(0.01, make_spectrum(p));
  const double b = noise_var_oracle(0.01, make_spectrum(p, 1024));
  const double tail = std::pow(512.0, -1.5) / (1.5 * M_PI * M_PI);
  CHECK(b > a);
  CHECK(b - a < tail);
}

TEST_CASE("covariance and structure oracles") {
  ModelParams p = small(64);
  const Spectrum s = make_spectrum(p);
  const double t = 0.005;
  const double x[] = {0.1};
  const double var = noise_var_oracle(t, s);
  CHECK(noise_cov_oracle(t, x, x, s) == doctest::Approx(var).epsilon(1e-14));
  for (double y0 : {-0.9, -0.2, 0.15, 0.6, 1.0}) {
    const double y[] = {y0};
    const double cov = noise_cov_oracle(t, x, y, s);
    CHECK(cov <= var);
    const double sf = structure_oracle_space(t, x, y, s);
    CHECK(std::abs(sf - 2.0 * (var - cov)) < 1e-12);
  }
  CHECK(structure_oracle_space(t, x, x, s) == 0.0);
  CHECK(structure_oracle_time(0.3, 0.3, s) == 0.0);
  CHECK(structure_oracle_time(0.3, 0.1, s) > 0.0);
}

TEST_CASE("space structure oracle exponent") {
  // lambda(n) / mu_n ~ n^-(1 + alpha - beta), so the sum against 1 - cos(pi n h)
  // scales as h^(alpha - beta) once the modes resolve h
  const ModelParams p = small(4096);
  const Spectrum s = make_spectrum(p);
  const double x[] = {0.0};
  const auto hs = log_spaced(1e-3, 1e-1, 12);
  std::vector<double> sf;
  for (double h : hs) {
    const double y[] = {h};
    sf.push_back(structure_oracle_space(0.01, x, y, s));
  }
  CHECK(std::abs(fit_loglog(hs, sf).slope - (p.alpha - p.beta)) <= 0.15);
}
