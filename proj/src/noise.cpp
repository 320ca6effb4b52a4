#include "fracshe/noise.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/random/normal_distribution.hpp>

namespace fracshe {

CounterRng RngStream::engine() const {
  std::uint64_t key = mix64(seed ^ 0x6a09e667f3bcc908ULL);
  key = mix64(key ^ mix64(trial + 0xbb67ae8584caa73bULL));
  key = mix64(key ^ mix64(step + 0x3c6ef372fe94f82bULL));
  return CounterRng(key);
}

NoiseSampler::NoiseSampler(const Spectrum& spectrum, double dt)
    : lattice_(spectrum.lattice), dt_(dt), amplitude_(spectrum.weights.size()) {
  if (!(dt > 0.0)) throw std::invalid_argument("NoiseSampler: dt must be positive");
  const std::size_t centre = lattice_->zero_index();
  for (std::size_t pos = 0; pos < amplitude_.size(); ++pos) {
    const double w = spectrum.weights[pos];
    amplitude_[pos] = pos == centre ? std::sqrt(w * dt) : std::sqrt(0.5 * w * dt);
  }
}

void NoiseSampler::draw(const RngStream& rng, std::span<Complex> out) const {
  auto engine = rng.engine();
  boost::random::normal_distribution<double> normal;
  const std::size_t centre = lattice_->zero_index();
  const std::size_t last = lattice_->size() - 1;
  out[centre] = Complex(amplitude_[centre] * normal(engine), 0.0);
  for (std::size_t pos = 0; pos < centre; ++pos) {
    const double re = normal(engine);
    const double im = normal(engine);
    const Complex c = amplitude_[pos] * Complex(re, im);
    out[pos] = c;
    out[last - pos] = std::conj(c);
  }
}

void NoiseSampler::accumulate(const RngStream& rng, std::span<Complex> out) const {
  auto engine = rng.engine();
  boost::random::normal_distribution<double> normal;
  const std::size_t centre = lattice_->zero_index();
  const std::size_t last = lattice_->size() - 1;
  out[centre] += Complex(amplitude_[centre] * normal(engine), 0.0);
  for (std::size_t pos = 0; pos < centre; ++pos) {
    const double re = normal(engine);
    const double im = normal(engine);
    const Complex c = amplitude_[pos] * Complex(re, im);
    out[pos] += c;
    out[last - pos] += std::conj(c);
  }
}

NoiseIncrement sample_increment(const Spectrum& spectrum, double dt, const RngStream& rng) {
  NoiseIncrement inc{SpectralField(spectrum.lattice), dt, rng.step, rng.trial};
  NoiseSampler(spectrum, dt).draw(rng, inc.coeffs.coeffs);
  return inc;
}

namespace {

// int_0^t exp(-2 mu (t - s)) ds
double damped_integral(double mu, double t) {
  if (mu == 0.0) return t;
  return -std::expm1(-2.0 * mu * t) / (2.0 * mu);
}

double phase(std::span<const int> n, std::span<const double> x, std::span<const double> y) {
  double p = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) p += n[i] * (x[i] - y[i]);
  return std::numbers::pi * p;
}

}  // namespace

double noise_var_oracle(double t1, const Spectrum& spectrum) {
  double acc = 0.0;
  for (std::size_t pos = 0; pos < spectrum.weights.size(); ++pos)
    acc += spectrum.weights[pos] * damped_integral(spectrum.symbols[pos], t1);
  return acc;
}

double noise_cov_oracle(double t1, std::span<const double> x, std::span<const double> y,
                        const Spectrum& spectrum) {
  const ModeLattice& lattice = *spectrum.lattice;
  double acc = 0.0;
  for (std::size_t pos = 0; pos < lattice.size(); ++pos) {
    acc += spectrum.weights[pos] * std::cos(phase(lattice.mode(pos), x, y)) *
           damped_integral(spectrum.symbols[pos], t1);
  }
  return acc;
}

double structure_oracle_space(double t, std::span<const double> x, std::span<const double> y,
                              const Spectrum& spectrum) {
  const ModeLattice& lattice = *spectrum.lattice;
  double acc = 0.0;
  for (std::size_t pos = 0; pos < lattice.size(); ++pos) {
    if (pos == lattice.zero_index()) continue;
    acc += 2.0 * spectrum.weights[pos] * (1.0 - std::cos(phase(lattice.mode(pos), x, y))) *
           damped_integral(spectrum.symbols[pos], t);
  }
  return acc;
}

double structure_oracle_time(double t, double s, const Spectrum& spectrum) {
  if (t < s) throw std::invalid_argument("structure_oracle_time: requires t >= s");
  const double lag = t - s;
  double acc = 0.0;
  for (std::size_t pos = 0; pos < spectrum.weights.size(); ++pos) {
    const double mu = spectrum.symbols[pos];
    // N(t) - N(s) = (e^{-mu lag} - 1) N(s) + fresh noise on (s, t]
    const double decay = -std::expm1(-mu * lag);
    acc += spectrum.weights[pos] * (decay * decay * damped_integral(mu, s) + damped_integral(mu, lag));
  }
  return acc;
}

}  // namespace fracshe
