#include "fracshe/field.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

#include <fftw3.h>
#include <fmt/format.h>

#include "fracshe/errors.hpp"

namespace fracshe {

namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

void check_resolution(int cutoff, int points) {
  if (points < 2 * cutoff + 1) {
    throw ResolutionTooLow("grid of " + std::to_string(points) +
                           " points cannot resolve mode cutoff " + std::to_string(cutoff) +
                           " (need at least " + std::to_string(2 * cutoff + 1) + ")");
  }
}

}  // namespace

double SpectralField::hermitian_defect() const {
  double worst = 0.0;
  for (std::size_t pos = 0; pos < coeffs.size(); ++pos) {
    const auto neg = lattice->negated(pos);
    worst = std::max(worst, std::abs(coeffs[neg] - std::conj(coeffs[pos])));
  }
  return worst;
}

PhysicalField::PhysicalField(int d, int m) : dim(d), points(m) {
  std::size_t n = 1;
  for (int i = 0; i < d; ++i) n *= static_cast<std::size_t>(m);
  values.assign(n, 0.0);
}

double PhysicalField::sup_abs() const {
  double s = 0.0;
  for (double v : values) s = std::max(s, std::abs(v));
  return s;
}

double evaluate(const SpectralField& f, std::span<const double> x) {
  const ModeLattice& lattice = *f.lattice;
  const int d = lattice.dim();
  double acc = 0.0;
  for (std::size_t pos = 0; pos < lattice.size(); ++pos) {
    const auto n = lattice.mode(pos);
    double phase = 0.0;
    for (int i = 0; i < d; ++i) phase += n[i] * x[i];
    phase *= std::numbers::pi;
    acc += f.coeffs[pos].real() * std::cos(phase) - f.coeffs[pos].imag() * std::sin(phase);
  }
  return acc;
}

FourierGrid::FourierGrid(std::shared_ptr<const ModeLattice> lattice, int points)
    : lattice_(std::move(lattice)), points_(points) {
  check_resolution(lattice_->cutoff(), points);
  const int d = lattice_->dim();
  grid_size_ = 1;
  for (int i = 0; i < d; ++i) grid_size_ *= static_cast<std::size_t>(points);

  slot_.resize(lattice_->size());
  parity_.resize(lattice_->size());
  for (std::size_t pos = 0; pos < lattice_->size(); ++pos) {
    slot_[pos] = buffer_index(pos);
    int total = 0;
    for (int v : lattice_->mode(pos)) total += v;
    parity_[pos] = (total % 2 == 0) ? 1.0 : -1.0;
  }

  buffer_ = reinterpret_cast<Complex*>(fftw_malloc(sizeof(fftw_complex) * grid_size_));
  if (buffer_ == nullptr) throw std::bad_alloc();
  std::vector<int> dims(d, points);
  auto* raw = reinterpret_cast<fftw_complex*>(buffer_);
  std::lock_guard lock(planner_mutex());
  // FFTW_ESTIMATE keeps the chosen algorithm, and hence the bits, reproducible.
  forward_ = fftw_plan_dft(d, dims.data(), raw, raw, FFTW_FORWARD, FFTW_ESTIMATE);
  backward_ = fftw_plan_dft(d, dims.data(), raw, raw, FFTW_BACKWARD, FFTW_ESTIMATE);
}

FourierGrid::~FourierGrid() {
  std::lock_guard lock(planner_mutex());
  if (forward_) fftw_destroy_plan(static_cast<fftw_plan>(forward_));
  if (backward_) fftw_destroy_plan(static_cast<fftw_plan>(backward_));
  fftw_free(buffer_);
}

std::size_t FourierGrid::buffer_index(std::size_t pos) const {
  std::size_t idx = 0;
  for (int v : lattice_->mode(pos)) {
    const int wrapped = ((v % points_) + points_) % points_;
    idx = idx * static_cast<std::size_t>(points_) + static_cast<std::size_t>(wrapped);
  }
  return idx;
}

double FourierGrid::to_physical(std::span<const Complex> coeffs, std::span<double> out) {
  std::fill(buffer_, buffer_ + grid_size_, Complex{});
  // exp(i pi n . x_k) = (-1)^(sum n) exp(2 pi i n . k / M)
  for (std::size_t pos = 0; pos < slot_.size(); ++pos) buffer_[slot_[pos]] = parity_[pos] * coeffs[pos];
  fftw_execute(static_cast<fftw_plan>(backward_));

  double residue = 0.0;
  double scale = 1.0;
  for (std::size_t k = 0; k < grid_size_; ++k) {
    out[k] = buffer_[k].real();
    residue = std::max(residue, std::abs(buffer_[k].imag()));
    scale = std::max(scale, std::abs(out[k]));
  }
  if (residue > 1e-10 * scale) {
    throw std::logic_error(fmt::format("to_physical: imaginary residue {:.3e} on a field of scale "
                                       "{:.3e}; coefficients are not Hermitian",
                                       residue, scale));
  }
  return residue;
}

void FourierGrid::to_spectral(std::span<const double> values, std::span<Complex> coeffs) {
  for (std::size_t k = 0; k < grid_size_; ++k) buffer_[k] = Complex(values[k], 0.0);
  fftw_execute(static_cast<fftw_plan>(forward_));
  const double norm = 1.0 / static_cast<double>(grid_size_);
  for (std::size_t pos = 0; pos < slot_.size(); ++pos)
    coeffs[pos] = parity_[pos] * norm * buffer_[slot_[pos]];

  const std::size_t centre = lattice_->zero_index();
  for (std::size_t pos = 0; pos < centre; ++pos) {
    const std::size_t neg = lattice_->negated(pos);
    const Complex avg = 0.5 * (coeffs[pos] + std::conj(coeffs[neg]));
    coeffs[pos] = avg;
    coeffs[neg] = std::conj(avg);
  }
  coeffs[centre] = Complex(coeffs[centre].real(), 0.0);
}

PhysicalField to_physical(const SpectralField& f, int points) {
  check_resolution(f.lattice->cutoff(), points);
  FourierGrid grid(f.lattice, points);
  PhysicalField out(f.lattice->dim(), points);
  grid.to_physical(f.coeffs, out.values);
  return out;
}

SpectralField to_spectral(const PhysicalField& g, std::shared_ptr<const ModeLattice> lattice) {
  check_resolution(lattice->cutoff(), g.points);
  if (g.dim != lattice->dim()) throw std::invalid_argument("to_spectral: dimension mismatch");
  FourierGrid grid(lattice, g.points);
  SpectralField out(std::move(lattice));
  grid.to_spectral(g.values, out.coeffs);
  return out;
}

void write_csv(std::ostream& os, const PhysicalField& g) {
  static const char* axis_names[] = {"x1", "x2", "x3"};
  os << "# one row per grid point: coordinates then value\n";
  for (int i = 0; i < g.dim; ++i) os << axis_names[i] << ',';
  os << "value\n";
  std::vector<int> idx(g.dim, 0);
  for (std::size_t k = 0; k < g.values.size(); ++k) {
    std::size_t rest = k;
    for (int axis = g.dim - 1; axis >= 0; --axis) {
      idx[axis] = static_cast<int>(rest % g.points);
      rest /= g.points;
    }
    for (int i = 0; i < g.dim; ++i) os << fmt::format("{:.17g},", g.coordinate(idx[i]));
    os << fmt::format("{:.17g}\n", g.values[k]);
  }
}

}  // namespace fracshe
