#include "fracshe/lattice.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fracshe/params.hpp"

namespace fracshe {

ModeLattice::ModeLattice(int dim, int cutoff) : dim_(dim), cutoff_(cutoff) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("ModeLattice: dim must be 1, 2 or 3");
  if (cutoff < 0) throw std::invalid_argument("ModeLattice: negative cutoff");
  const std::size_t side = 2 * static_cast<std::size_t>(cutoff) + 1;
  count_ = 1;
  for (int i = 0; i < dim; ++i) count_ *= side;

  modes_.resize(count_ * dim);
  norms_.resize(count_);
  for (std::size_t pos = 0; pos < count_; ++pos) {
    std::size_t rest = pos;
    double sq = 0.0;
    for (int axis = dim - 1; axis >= 0; --axis) {
      const int n = static_cast<int>(rest % side) - cutoff;
      rest /= side;
      modes_[pos * dim + axis] = n;
      sq += static_cast<double>(n) * n;
    }
    norms_[pos] = std::sqrt(sq);
  }
}

bool ModeLattice::contains(std::span<const int> n) const {
  if (static_cast<int>(n.size()) != dim_) return false;
  for (int v : n)
    if (v < -cutoff_ || v > cutoff_) return false;
  return true;
}

std::size_t ModeLattice::index_of(std::span<const int> n) const {
  if (!contains(n)) throw std::out_of_range("ModeLattice: mode outside lattice");
  const std::size_t side = 2 * static_cast<std::size_t>(cutoff_) + 1;
  std::size_t pos = 0;
  for (int v : n) pos = pos * side + static_cast<std::size_t>(v + cutoff_);
  return pos;
}

namespace {

double euclidean(std::span<const int> n) {
  double sq = 0.0;
  for (int v : n) sq += static_cast<double>(v) * v;
  return std::sqrt(sq);
}

}  // namespace

double symbol(std::span<const int> n, double alpha) {
  const double r = euclidean(n);
  if (r == 0.0) return 0.0;
  return std::pow(std::numbers::pi * r, alpha);
}

double riesz_weight(std::span<const int> n, double beta, int dim, double lambda_zero) {
  const double r = euclidean(n);
  if (r == 0.0) return lambda_zero;
  return std::pow(r, -(dim - beta));
}

double white_weight(std::span<const int> /*n*/) { return 1.0; }

Spectrum make_spectrum(const ModelParams& p) { return make_spectrum(p, p.mode_cutoff); }

Spectrum make_spectrum(const ModelParams& p, int cutoff) {
  Spectrum s{std::make_shared<const ModeLattice>(p.dim, cutoff), {}, {}};
  const std::size_t count = s.lattice->size();
  s.symbols.resize(count);
  s.weights.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto n = s.lattice->mode(i);
    s.symbols[i] = symbol(n, p.alpha);
    s.weights[i] = p.noise == NoiseKind::Riesz ? riesz_weight(n, p.beta, p.dim, p.lambda_zero)
                                               : white_weight(n);
  }
  return s;
}

}  // namespace fracshe
