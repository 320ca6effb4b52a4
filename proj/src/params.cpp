#include "fracshe/params.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fracshe/errors.hpp"
#include "fracshe/lattice.hpp"

namespace fracshe {

SigmaSpec SigmaSpec::constant(double c) {
  return SigmaSpec{SigmaKind::Constant, c, c, 0.0, 0.0};
}

SigmaSpec SigmaSpec::affine_clamped(double c1, double c2, double slope) {
  return SigmaSpec{SigmaKind::AffineClamped, c1, c2, slope, std::abs(slope)};
}

SigmaSpec SigmaSpec::sine_bounded(double c1, double c2) {
  return SigmaSpec{SigmaKind::SineBounded, c1, c2, 0.0, 0.5 * std::abs(c2 - c1)};
}

double sigma_eval(const SigmaSpec& s, double /*t*/, std::span<const double> /*x*/, double u) {
  switch (s.kind) {
    case SigmaKind::Constant:
      return s.c1;
    case SigmaKind::AffineClamped:
      return std::clamp(0.5 * (s.c1 + s.c2) + s.slope * u, s.c1, s.c2);
    case SigmaKind::SineBounded:
      return 0.5 * (s.c1 + s.c2) + 0.5 * (s.c2 - s.c1) * std::sin(u);
  }
  return s.c1;
}

std::string to_string(SigmaKind kind) {
  switch (kind) {
    case SigmaKind::Constant:
      return "constant";
    case SigmaKind::AffineClamped:
      return "affine_clamped";
    case SigmaKind::SineBounded:
      return "sine_bounded";
  }
  return "constant";
}

SigmaKind sigma_kind_from_string(const std::string& name) {
  if (name == "constant") return SigmaKind::Constant;
  if (name == "affine_clamped") return SigmaKind::AffineClamped;
  if (name == "sine_bounded") return SigmaKind::SineBounded;
  throw ConfigError("unknown sigma kind '" + name + "'");
}

std::string to_string(NoiseKind kind) {
  return kind == NoiseKind::Riesz ? "riesz" : "white";
}

NoiseKind noise_kind_from_string(const std::string& name) {
  if (name == "riesz") return NoiseKind::Riesz;
  if (name == "white") return NoiseKind::White;
  throw ConfigError("unknown noise kind '" + name + "'");
}

ValidationReport validate(const ModelParams& p) {
  ValidationReport report;
  auto fail = [&](std::string reason) { report.failures.push_back(std::move(reason)); };

  if (!(p.alpha > 1.0 && p.alpha <= 2.0)) fail("alpha outside (1, 2]");
  if (p.dim < 1 || p.dim > 3) fail("dim outside {1, 2, 3}");

  if (p.noise == NoiseKind::Riesz) {
    if (!(p.beta > 0.0)) fail("beta not positive");
    if (p.beta >= p.alpha) fail("beta >= alpha (Dalang condition fails)");
    if (p.beta >= p.dim) fail("beta >= dim (Riesz kernel undefined)");
  } else if (!(p.alpha > p.dim)) {
    fail("white noise requires alpha > dim (Dalang condition fails)");
  }

  if (!(p.lambda_zero >= 0.0)) fail("lambda_zero negative");
  if (p.mode_cutoff < 1) fail("mode_cutoff < 1");
  if (p.grid_points < 2 * p.mode_cutoff + 1) fail("grid_points < 2*mode_cutoff+1");
  if (!(p.dt > 0.0)) fail("dt not positive");
  if (!(p.horizon > 0.0)) fail("horizon not positive");
  if (!(p.divergence_guard > 0.0)) fail("divergence_guard not positive");

  if (p.dt > 0.0 && p.mode_cutoff >= 1 && p.dim >= 1) {
    const double top = std::sqrt(static_cast<double>(p.dim)) * p.mode_cutoff;
    if (p.dt * std::pow(std::numbers::pi, p.alpha) * std::pow(top, p.alpha) > 50.0)
      fail("dt too large: exp(-mu dt) underflows across the spectrum");
  }

  const SigmaSpec& s = p.sigma;
  if (!(s.c1 > 0.0)) fail("sigma lower bound not positive");
  if (!(s.c1 <= s.c2)) fail("sigma bounds inverted (c1 > c2)");
  if (!(s.lipschitz >= 0.0) || !std::isfinite(s.lipschitz)) fail("sigma Lipschitz constant invalid");

  // Finite Dalang probe on a capped lattice.
  const bool riesz_ok = p.noise == NoiseKind::White || (p.beta > 0.0 && p.beta < p.dim);
  if (p.dim >= 1 && p.dim <= 3 && p.mode_cutoff >= 1 && riesz_ok) {
    const int cap = p.dim == 1 ? 4096 : (p.dim == 2 ? 128 : 32);
    const ModeLattice lattice(p.dim, std::min(p.mode_cutoff, cap));
    double sum = 0.0;
    for (std::size_t i = 0; i < lattice.size(); ++i) {
      const double w = p.noise == NoiseKind::Riesz
                           ? riesz_weight(lattice.mode(i), p.beta, p.dim, p.lambda_zero)
                           : white_weight(lattice.mode(i));
      sum += w / (1.0 + std::pow(lattice.norm(i), p.alpha));
    }
    report.dalang_probe = sum;
    if (!std::isfinite(sum)) fail("Dalang probe not finite");
  }
  return report;
}

namespace {

double parse_double(const std::string& key, const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw ConfigError("key '" + key + "': expected a number, got '" + text + "'");
  return value;
}

long long parse_int(const std::string& key, const std::string& text) {
  long long value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw ConfigError("key '" + key + "': expected an integer, got '" + text + "'");
  return value;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  std::uint64_t value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw ConfigError("key '" + key + "': expected an unsigned integer, got '" + text + "'");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + text + "'");
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

ConfigMap read_config_file(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("cannot read config " + path.string() + ": " + e.message() +
                      " (line " + std::to_string(e.line()) + ")");
  }
  ConfigMap out;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError("config " + path.string() + ": key '" + section +
                        "' outside of any [section]");
    }
    for (const auto& [key, value] : body) out[section + "." + key] = value.data();
  }
  return out;
}

ModelParams apply_config(ModelParams p, const ConfigMap& cfg) {
  // sigma is assembled last because its fields interact
  std::string sigma_kind = to_string(p.sigma.kind);
  double c1 = p.sigma.c1;
  double c2 = p.sigma.c2;
  double slope = p.sigma.slope;
  std::optional<double> constant_value;

  for (const auto& [key, value] : cfg) {
    if (key == "model.alpha") p.alpha = parse_double(key, value);
    else if (key == "model.beta") p.beta = parse_double(key, value);
    else if (key == "model.dim") p.dim = static_cast<int>(parse_int(key, value));
    else if (key == "model.lambda_zero") p.lambda_zero = parse_double(key, value);
    else if (key == "model.noise") p.noise = noise_kind_from_string(value);
    else if (key == "sigma.kind") sigma_kind = value;
    else if (key == "sigma.value") constant_value = parse_double(key, value);
    else if (key == "sigma.c1") c1 = parse_double(key, value);
    else if (key == "sigma.c2") c2 = parse_double(key, value);
    else if (key == "sigma.slope") slope = parse_double(key, value);
    else if (key == "numerics.mode_cutoff") p.mode_cutoff = static_cast<int>(parse_int(key, value));
    else if (key == "numerics.grid_points") p.grid_points = static_cast<int>(parse_int(key, value));
    else if (key == "numerics.dt") p.dt = parse_double(key, value);
    else if (key == "numerics.horizon") p.horizon = parse_double(key, value);
    else if (key == "numerics.divergence_guard") p.divergence_guard = parse_double(key, value);
    else if (key == "numerics.dealias") p.dealias = parse_bool(key, value);
    else if (key == "numerics.propagate_noise") p.propagate_noise = parse_bool(key, value);
    else if (key == "run.seed") p.seed = parse_u64(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
  }

  switch (sigma_kind_from_string(sigma_kind)) {
    case SigmaKind::Constant:
      p.sigma = SigmaSpec::constant(constant_value.value_or(c1));
      break;
    case SigmaKind::AffineClamped:
      p.sigma = SigmaSpec::affine_clamped(c1, c2, slope);
      break;
    case SigmaKind::SineBounded:
      p.sigma = SigmaSpec::sine_bounded(c1, c2);
      break;
  }
  return p;
}

ModelParams load_params(const std::filesystem::path& path) {
  return apply_config(ModelParams{}, read_config_file(path));
}

ConfigMap to_config(const ModelParams& p) {
  ConfigMap cfg;
  cfg["model.alpha"] = format_double(p.alpha);
  cfg["model.beta"] = format_double(p.beta);
  cfg["model.dim"] = std::to_string(p.dim);
  cfg["model.lambda_zero"] = format_double(p.lambda_zero);
  cfg["model.noise"] = to_string(p.noise);
  cfg["sigma.kind"] = to_string(p.sigma.kind);
  cfg["sigma.c1"] = format_double(p.sigma.c1);
  cfg["sigma.c2"] = format_double(p.sigma.c2);
  cfg["sigma.slope"] = format_double(p.sigma.slope);
  cfg["numerics.mode_cutoff"] = std::to_string(p.mode_cutoff);
  cfg["numerics.grid_points"] = std::to_string(p.grid_points);
  cfg["numerics.dt"] = format_double(p.dt);
  cfg["numerics.horizon"] = format_double(p.horizon);
  cfg["numerics.divergence_guard"] = format_double(p.divergence_guard);
  cfg["numerics.dealias"] = p.dealias ? "true" : "false";
  cfg["numerics.propagate_noise"] = p.propagate_noise ? "true" : "false";
  cfg["run.seed"] = std::to_string(p.seed);
  return cfg;
}

}  // namespace fracshe
