#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fracshe/errors.hpp"
#include "fracshe/field.hpp"

using namespace fracshe;

namespace {

SpectralField random_hermitian(std::shared_ptr<const ModeLattice> lat, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g;
  SpectralField f(lat);
  const std::size_t centre = lat->zero_index();
  f[centre] = Complex(g(gen), 0.0);
  for (std::size_t pos = 0; pos < centre; ++pos) {
    f[pos] = Complex(g(gen), g(gen));
    f[lat->negated(pos)] = std::conj(f[pos]);
  }
  return f;
}

}  // namespace

TEST_CASE("trivial fields") {
  auto lat = std::make_shared<const ModeLattice>(1, 4);
  SpectralField f(lat);
  CHECK(to_physical(f, 16).sup_abs() == 0.0);

  f[lat->zero_index()] = 2.5;
  for (double v : to_physical(f, 16).values) CHECK(v == doctest::Approx(2.5));

  SpectralField c(lat);
  const int plus[] = {1};
  const int minus[] = {-1};
  c[lat->index_of(plus)] = 0.5;
  c[lat->index_of(minus)] = 0.5;
  const PhysicalField g = to_physical(c, 16);
  for (int k = 0; k < g.points; ++k)
    CHECK(g.values[k] == doctest::Approx(std::cos(std::numbers::pi * g.coordinate(k))));

  const SpectralField back = to_spectral(g, lat);
  CHECK(std::abs(back[lat->index_of(plus)] - 0.5) < 1e-12);
  CHECK(std::abs(back[lat->index_of(minus)] - 0.5) < 1e-12);
}

TEST_CASE("round trip and Parseval") {
  for (int d = 1; d <= 3; ++d) {
    const int n = d == 3 ? 3 : 7;
    auto lat = std::make_shared<const ModeLattice>(d, n);
    for (int m : {2 * n + 1, 2 * n + 2, 4 * n}) {
      const SpectralField f = random_hermitian(lat, 100 * d + m);
      const PhysicalField g = to_physical(f, m);
      const SpectralField back = to_spectral(g, lat);
      double err = 0.0;
      for (std::size_t pos = 0; pos < lat->size(); ++pos) err = std::max(err, std::abs(back[pos] - f[pos]));
      CHECK(err < 1e-10);

      double energy = 0.0;
      for (double v : g.values) energy += v * v;
      energy /= static_cast<double>(g.size());
      double spectral = 0.0;
      for (const auto& c : f.coeffs) spectral += std::norm(c);
      CHECK(std::abs(energy - spectral) <= 1e-9 * spectral);
    }
  }
}

TEST_CASE("imaginary residue is negligible") {
  auto lat = std::make_shared<const ModeLattice>(2, 5);
  FourierGrid grid(lat, 12);
  const SpectralField f = random_hermitian(lat, 9);
  std::vector<double> out(grid.grid_size());
  CHECK(grid.to_physical(f.coeffs, out) < 1e-10);
  CHECK(f.hermitian_defect() == 0.0);
}

TEST_CASE("non-Hermitian input is rejected") {
  auto lat = std::make_shared<const ModeLattice>(1, 2);
  SpectralField f(lat);
  f[0] = Complex(0.0, 1.0);
  FourierGrid grid(lat, 8);
  std::vector<double> out(8);
  CHECK_THROWS_AS(grid.to_physical(f.coeffs, out), std::logic_error);
}

TEST_CASE("resolution guard") {
  auto lat = std::make_shared<const ModeLattice>(1, 8);
  SpectralField f(lat);
  CHECK_THROWS_AS(to_physical(f, 16), ResolutionTooLow);
  CHECK_NOTHROW(to_physical(f, 17));
}

TEST_CASE("direct evaluation agrees with the grid") {
  auto lat = std::make_shared<const ModeLattice>(2, 4);
  const SpectralField f = random_hermitian(lat, 3);
  const PhysicalField g = to_physical(f, 10);
  for (int i = 0; i < g.points; i += 3) {
    for (int j = 0; j < g.points; j += 2) {
      const double x[] = {g.coordinate(i), g.coordinate(j)};
      CHECK(evaluate(f, x) == doctest::Approx(g.values[i * g.points + j]).epsilon(1e-12));
    }
  }
}
