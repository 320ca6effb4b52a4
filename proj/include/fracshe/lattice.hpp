#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace fracshe {

struct ModelParams;

/// Integer Fourier modes n in Z^d with |n_i| <= N, in lexicographic order
/// on (n_1, ..., n_d). Negation maps position p to size() - 1 - p, so the
/// zero mode sits at the centre.
class ModeLattice {
 public:
  ModeLattice(int dim, int cutoff);

  int dim() const { return dim_; }
  int cutoff() const { return cutoff_; }
  std::size_t size() const { return count_; }

  std::span<const int> mode(std::size_t pos) const {
    return {modes_.data() + pos * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  /// Euclidean norm |n|.
  double norm(std::size_t pos) const { return norms_[pos]; }

  std::size_t index_of(std::span<const int> n) const;
  std::size_t negated(std::size_t pos) const { return count_ - 1 - pos; }
  std::size_t zero_index() const { return (count_ - 1) / 2; }
  bool contains(std::span<const int> n) const;

 private:
  int dim_;
  int cutoff_;
  std::size_t count_;
  std::vector<int> modes_;
  std::vector<double> norms_;
};

/// Fractional Laplacian eigenvalue pi^alpha |n|^alpha.
double symbol(std::span<const int> n, double alpha);

/// Riesz spectral weight |n|^-(d - beta), with lambda(0) = lambda_zero.
double riesz_weight(std::span<const int> n, double beta, int dim, double lambda_zero);

/// Space-time white noise: lambda(n) = 1.
double white_weight(std::span<const int> n);

/// Per-mode symbols and noise weights for one parameter set.
struct Spectrum {
  std::shared_ptr<const ModeLattice> lattice;
  std::vector<double> symbols;
  std::vector<double> weights;
};

Spectrum make_spectrum(const ModelParams& p);
Spectrum make_spectrum(const ModelParams& p, int cutoff);

}  // namespace fracshe
