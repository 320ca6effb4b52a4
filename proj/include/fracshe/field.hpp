#pragma once

#include <complex>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "fracshe/lattice.hpp"

namespace fracshe {

using Complex = std::complex<double>;

/// Coefficients of a real field in the basis exp(i pi n . x), one per
/// lattice mode (lattice order).
struct SpectralField {
  std::shared_ptr<const ModeLattice> lattice;
  std::vector<Complex> coeffs;

  explicit SpectralField(std::shared_ptr<const ModeLattice> l)
      : lattice(std::move(l)), coeffs(lattice->size()) {}

  Complex& operator[](std::size_t pos) { return coeffs[pos]; }
  const Complex& operator[](std::size_t pos) const { return coeffs[pos]; }

  /// max |c(-n) - conj(c(n))| over the lattice.
  double hermitian_defect() const;
};

/// Real values on the grid x_k = -1 + 2k/M per axis; flattened with axis 0
/// most significant.
struct PhysicalField {
  int dim = 1;
  int points = 0;
  std::vector<double> values;

  PhysicalField() = default;
  PhysicalField(int d, int m);

  double spacing() const { return 2.0 / points; }
  double coordinate(int k) const { return -1.0 + 2.0 * k / points; }
  std::size_t size() const { return values.size(); }
  double sup_abs() const;
};

/// Series value sum_n c(n) exp(i pi n . x) at an arbitrary point (direct sum).
double evaluate(const SpectralField& f, std::span<const double> x);

/// FFT-backed transforms between a fixed lattice and an M-point grid.
/// Not thread-safe; give each worker its own instance.
class FourierGrid {
 public:
  FourierGrid(std::shared_ptr<const ModeLattice> lattice, int points);
  ~FourierGrid();
  FourierGrid(const FourierGrid&) = delete;
  FourierGrid& operator=(const FourierGrid&) = delete;

  int points() const { return points_; }
  int dim() const { return lattice_->dim(); }
  std::size_t grid_size() const { return grid_size_; }
  const ModeLattice& lattice() const { return *lattice_; }

  /// Writes the series on the grid. Returns the largest discarded imaginary
  /// residue; throws std::logic_error if it exceeds 1e-10 (scaled by the
  /// field magnitude when that exceeds one).
  double to_physical(std::span<const Complex> coeffs, std::span<double> out);

  /// c(n) = M^-d sum_k g(x_k) exp(-i pi n . x_k), Hermitian-averaged.
  void to_spectral(std::span<const double> values, std::span<Complex> coeffs);

 private:
  std::size_t buffer_index(std::size_t pos) const;

  std::shared_ptr<const ModeLattice> lattice_;
  int points_;
  std::size_t grid_size_;
  std::vector<std::size_t> slot_;   // lattice pos -> FFT buffer index
  std::vector<double> parity_;      // (-1)^(n_1 + ... + n_d)
  Complex* buffer_ = nullptr;
  void* forward_ = nullptr;
  void* backward_ = nullptr;
};

/// Throws ResolutionTooLow when M < 2N+1.
PhysicalField to_physical(const SpectralField& f, int points);
SpectralField to_spectral(const PhysicalField& g, std::shared_ptr<const ModeLattice> lattice);

/// One row per grid point: coordinates then value, 17 significant digits.
void write_csv(std::ostream& os, const PhysicalField& g);

}  // namespace fracshe
