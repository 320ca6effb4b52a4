#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "fracshe/errors.hpp"
#include "fracshe/params.hpp"

using namespace fracshe;

namespace {

bool has_reason(const ValidationReport& r, const std::string& needle) {
  return std::any_of(r.failures.begin(), r.failures.end(),
                     [&](const std::string& f) { return f.find(needle) != std::string::npos; });
}

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST_CASE("defaults validate") {
  const auto r = validate(ModelParams{});
  CHECK(r.ok());
  CHECK(r.dalang_probe > 0.0);
}

TEST_CASE("beta >= alpha is rejected") {
  ModelParams p;
  p.alpha = 1.5;
  p.beta = 1.7;
  p.dim = 2;
  p.mode_cutoff = 8;
  p.grid_points = 32;
  const auto r = validate(p);
  CHECK_FALSE(r.ok());
  CHECK(has_reason(r, "beta >= alpha"));
}

TEST_CASE("nonpositive sigma lower bound is rejected") {
  ModelParams p;
  p.sigma = SigmaSpec::affine_clamped(0.0, 2.0, 0.5);
  const auto r = validate(p);
  CHECK(has_reason(r, "sigma lower bound not positive"));
}

TEST_CASE("resolution and stability rules") {
  ModelParams p;
  p.grid_points = 2 * p.mode_cutoff;
  CHECK_FALSE(validate(p).ok());

  p = ModelParams{};
  p.mode_cutoff = 256;
  p.grid_points = 1024;
  p.dt = 1e-2;
  CHECK_FALSE(validate(p).ok());

  p = ModelParams{};
  p.alpha = 2.5;
  CHECK_FALSE(validate(p).ok());
}

TEST_CASE("validate is pure") {
  ModelParams p;
  p.beta = 3.0;
  const auto a = validate(p);
  const auto b = validate(p);
  CHECK(a.failures == b.failures);
  CHECK(a.dalang_probe == b.dalang_probe);
}

TEST_CASE("sigma examples") {
  const double x[] = {0.3};
  CHECK(sigma_eval(SigmaSpec::constant(1.0), 0.7, x, -4.0) == 1.0);
  CHECK(sigma_eval(SigmaSpec::affine_clamped(1.0, 2.0, 0.5), 0.0, x, 10.0) == 2.0);
  CHECK(sigma_eval(SigmaSpec::sine_bounded(1.0, 2.0), 0.0, x, 0.0) == doctest::Approx(1.5));
}

TEST_CASE("sigma stays in bounds and is Lipschitz") {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  const SigmaSpec specs[] = {SigmaSpec::constant(0.7), SigmaSpec::affine_clamped(0.5, 1.5, 0.8),
                             SigmaSpec::sine_bounded(1.0, 3.0)};
  for (const auto& s : specs) {
    for (int i = 0; i < 10000; ++i) {
      const double x[] = {u(gen) / 50.0};
      const double t = std::abs(u(gen));
      const double a = u(gen);
      const double b = u(gen);
      const double sa = sigma_eval(s, t, x, a);
      const double sb = sigma_eval(s, t, x, b);
      REQUIRE(sa >= s.c1);
      REQUIRE(sa <= s.c2);
      REQUIRE(std::abs(sa - sb) <= s.lipschitz * std::abs(a - b) + 1e-15);
    }
  }
}

TEST_CASE("config file round trip") {
  ModelParams p;
  p.alpha = 1.7;
  p.beta = 0.3;
  p.sigma = SigmaSpec::sine_bounded(0.5, 1.25);
  p.noise = NoiseKind::White;
  p.dt = 1.0 / 3.0 * 1e-4;
  p.seed = 123456789012345ULL;
  p.dealias = true;

  std::string text;
  std::string section;
  for (const auto& [key, value] : to_config(p)) {
    const auto dot = key.find('.');
    if (key.substr(0, dot) != section) {
      section = key.substr(0, dot);
      text += "[" + section + "]\n";
    }
    text += key.substr(dot + 1) + " = " + value + "\n";
  }
  const ModelParams q = load_params(write_temp("fracshe_roundtrip.cfg", text));
  CHECK(q.alpha == p.alpha);
  CHECK(q.beta == p.beta);
  CHECK(q.sigma.kind == SigmaKind::SineBounded);
  CHECK(q.sigma.c1 == 0.5);
  CHECK(q.sigma.c2 == 1.25);
  CHECK(q.sigma.lipschitz == p.sigma.lipschitz);
  CHECK(q.noise == NoiseKind::White);
  CHECK(q.dt == p.dt);
  CHECK(q.seed == p.seed);
  CHECK(q.dealias);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(load_params(write_temp("fracshe_unknown.cfg", "[model]\ngamma = 2\n")), ConfigError);
  CHECK_THROWS_AS(load_params(write_temp("fracshe_badnum.cfg", "[model]\nalpha = two\n")), ConfigError);
  CHECK_THROWS_AS(load_params("/nonexistent/fracshe.cfg"), ConfigError);
  CHECK_THROWS_AS(apply_config(ModelParams{}, {{"sigma.kind", "cubic"}}), ConfigError);
}

TEST_CASE("config overlays defaults") {
  const ModelParams p = apply_config(ModelParams{}, {{"sigma.kind", "constant"}, {"sigma.value", "2.5"}});
  CHECK(p.sigma.c1 == 2.5);
  CHECK(p.sigma.c2 == 2.5);
  CHECK(p.alpha == ModelParams{}.alpha);
}
