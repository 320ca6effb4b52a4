#include <doctest.h>

#include <cmath>
#include <random>

#include "fracshe/analysis.hpp"
#include "fracshe/errors.hpp"
#include "fracshe/parallel.hpp"

using namespace fracshe;

TEST_CASE("line fits") {
  const std::vector<double> x{1, 2, 3, 4, 5, 6};
  std::vector<double> y;
  for (double v : x) y.push_back(2.5 * v - 1.0);
  const RegressionFit f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(2.5));
  CHECK(f.intercept == doctest::Approx(-1.0));
  CHECK(f.r_squared == doctest::Approx(1.0));
  CHECK(f.residual_max < 1e-12);
  CHECK(f.points == 6);

  std::vector<double> py;
  for (double v : x) py.push_back(3.0 * std::pow(v, -0.75));
  CHECK(fit_loglog(x, py).slope == doctest::Approx(-0.75));

  const std::vector<double> four{1, 2, 3, 4};
  CHECK_THROWS_AS(fit_line(four, four), InsufficientSamples);
  CHECK(fit_line(four, four, 4).slope == doctest::Approx(1.0));
}

TEST_CASE("log spacing") {
  const auto v = log_spaced(1e-3, 1.0, 4);
  REQUIRE(v.size() == 4);
  CHECK(v.front() == 1e-3);
  CHECK(v.back() == 1.0);
  CHECK(v[1] == doctest::Approx(1e-2));
}

TEST_CASE("tail check on exact Gaussian samples") {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> g(0.0, 2.0);
  std::vector<double> samples(100000);
  for (auto& v : samples) v = g(gen);
  const std::vector<double> kappas{0.0, 2.0, 4.0, 6.0};
  const auto rows = tail_check(samples, 2.0, kappas);
  CHECK(rows[0].estimate == 1.0);
  CHECK(rows[3].oracle == doctest::Approx(0.0027).epsilon(0.01));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(std::abs(rows[i].z_score()) <= 3.0);
    if (i > 0) CHECK(rows[i].estimate <= rows[i - 1].estimate);
  }
  const std::vector<double> few(10, 1.0);
  CHECK_THROWS_AS(tail_check(few, 1.0, kappas), InsufficientSamples);
}

TEST_CASE("dyadic pair counts match enumeration") {
  for (int d = 1; d <= 2; ++d) {
    for (int n = 0; n <= (d == 1 ? 3 : 2); ++n) {
      const DyadicGrid g{n, d, 1.0, 1.0};
      const auto nt = static_cast<std::int64_t>(g.time_count());
      const auto ns = static_cast<std::int64_t>(g.space_count());
      std::vector<DyadicGrid::Index> points;
      for (std::int64_t j = 0; j < nt; ++j)
        for (std::int64_t a = 0; a < ns; ++a)
          for (std::int64_t b = 0; b < (d == 2 ? ns : 1); ++b)
            points.push_back(d == 1 ? DyadicGrid::Index{j, a} : DyadicGrid::Index{j, a, b});
      std::uint64_t brute = 0;
      for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t k = i + 1; k < points.size(); ++k)
          brute += DyadicGrid::nearest_neighbours(points[i], points[k]);
      std::uint64_t visited = 0;
      g.for_each_neighbour_pair([&](const auto& p, const auto& q) {
        CHECK(DyadicGrid::nearest_neighbours(p, q));
        CHECK(DyadicGrid::nearest_neighbours(q, p));
        ++visited;
      });
      CHECK(brute == g.neighbour_pair_count());
      CHECK(visited == brute);
      if (d == 1) {
        const std::uint64_t four = std::uint64_t{1} << (2 * n);
        const std::uint64_t two = std::uint64_t{1} << n;
        CHECK(g.neighbour_pair_count() == four * (two + 1) + (four + 1) * two);
      }
    }
  }
}

TEST_CASE("nested dyadic grids") {
  const DyadicGrid coarse{1, 1, 1.0, 1.0};
  const DyadicGrid fine{2, 1, 1.0, 1.0};
  CHECK(fine.time_count() - 1 == 4 * (coarse.time_count() - 1));
  CHECK(fine.space_count() - 1 == 2 * (coarse.space_count() - 1));
  CHECK_FALSE(DyadicGrid::nearest_neighbours({0, 0}, {1, 1}));
  CHECK_FALSE(DyadicGrid::nearest_neighbours({0, 0}, {0, 0}));
  CHECK(DyadicGrid::nearest_neighbours({3, 2}, {3, 1}));
}

namespace {

ModelParams structure_params() {
  ModelParams p;
  p.mode_cutoff = 16;
  p.grid_points = 64;
  p.dt = 1e-5;
  p.horizon = 0.01;
  return p;
}

}  // namespace

TEST_CASE("structure functions agree with the oracles") {
  const ModelParams p = structure_params();
  const std::uint64_t steps = step_count(p);
  const std::vector<std::uint64_t> tlags{0, 10, 40, 160, 640};
  RunOptions opts;
  opts.record_path = false;
  opts.solver.track_sup = false;
  for (auto lag : tlags) opts.snapshot_steps.push_back(steps - lag);
  std::vector<Trajectory> runs(kMinStructureTrials);
  parallel_for(runs.size(), [&](std::size_t i) { runs[i] = run(p, nullptr, i, opts); });
  std::vector<PhysicalField> finals;
  for (const auto& r : runs) finals.push_back(r.snapshots.back().field);

  const Spectrum s = make_spectrum(p);
  const std::vector<int> slags{0, 1, 2, 4, 8, 16};
  const auto space = structure_function_space(finals, p.horizon, slags, &s);
  CHECK(space.rows[0].estimate == 0.0);
  for (const auto& row : space.rows) CHECK(std::abs(row.z_score()) <= 3.0);

  const auto time = structure_function_time(runs, p.dt, steps, tlags, &s);
  CHECK(time.rows[0].estimate == 0.0);
  for (const auto& row : time.rows) CHECK(std::abs(row.z_score()) <= 3.0);

  const auto single = structure_function_time(runs, p.dt, steps, tlags, &s, std::size_t{5});
  for (const auto& row : single.rows) CHECK(std::abs(row.z_score()) <= 3.0);

  const std::span<const PhysicalField> few(finals.data(), 10);
  CHECK_THROWS_AS(structure_function_space(few, p.horizon, slags), InsufficientSamples);
}

TEST_CASE("chain diagnostic") {
  ModelParams p;
  p.mode_cutoff = 15;
  p.grid_points = 32;
  p.dt = 1.0 / 256.0 / 4.0;
  p.horizon = 1.0;
  RunOptions opts;
  opts.record_path = false;
  opts.snapshot_every = 4;
  std::vector<Trajectory> runs(2);
  for (std::size_t i = 0; i < runs.size(); ++i) runs[i] = run(p, nullptr, i, opts);

  const ChainDiagnostic d = chain_diagnostic(runs, p, 4, 0);
  REQUIRE(d.rows.size() == 5);
  for (const auto& row : d.rows) {
    CHECK(row.pairs == DyadicGrid{row.level, 1, 1.0, 1.0}.neighbour_pair_count());
    CHECK(row.max_increment <= 2.0 * row.sup_norm);
    CHECK(row.mean_max_increment <= row.max_increment);
  }
  CHECK(d.decay_rate > 0.0);
  CHECK_THROWS_AS(chain_diagnostic(runs, p, 5, 0), ResolutionTooLow);
}
