#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace fracshe {

enum class SigmaKind { Constant, AffineClamped, SineBounded };

/// Diffusion coefficient sigma(t, x, u).
///
/// Every kind maps into [c1, c2] and is globally Lipschitz in u with
/// constant `lipschitz`:
///   Constant(c)                sigma = c
///   AffineClamped(c1, c2, k)   sigma = clamp((c1 + c2) / 2 + k u, c1, c2)
///   SineBounded(c1, c2)        sigma = (c1 + c2) / 2 + (c2 - c1) / 2 sin(u)
struct SigmaSpec {
  SigmaKind kind = SigmaKind::Constant;
  double c1 = 1.0;
  double c2 = 1.0;
  double slope = 0.0;
  double lipschitz = 0.0;

  static SigmaSpec constant(double c);
  static SigmaSpec affine_clamped(double c1, double c2, double slope);
  static SigmaSpec sine_bounded(double c1, double c2);

  bool is_constant() const { return kind == SigmaKind::Constant; }
};

double sigma_eval(const SigmaSpec& s, double t, std::span<const double> x, double u);

std::string to_string(SigmaKind kind);
SigmaKind sigma_kind_from_string(const std::string& name);

/// Spatial correlation of the driving noise.
enum class NoiseKind {
  Riesz,  ///< lambda(n) = |n|^-(d - beta), lambda(0) = lambda_zero
  White,  ///< lambda(n) = 1 for every n
};

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& name);

struct ModelParams {
  double alpha = 2.0;
  double beta = 0.5;
  int dim = 1;
  SigmaSpec sigma = SigmaSpec::constant(1.0);
  NoiseKind noise = NoiseKind::Riesz;
  double lambda_zero = 1.0;
  int mode_cutoff = 31;
  int grid_points = 64;
  double dt = 1e-4;
  double horizon = 0.25;
  std::uint64_t seed = 1;

  // solver knobs
  double divergence_guard = 1e6;
  bool dealias = false;
  /// true: u <- exp(-mu dt) (u + g); false: u <- exp(-mu dt) u + g
  bool propagate_noise = true;
};

struct ValidationReport {
  std::vector<std::string> failures;
  /// Truncated Dalang sum over the retained lattice.
  double dalang_probe = 0.0;

  bool ok() const { return failures.empty(); }
};

/// Checks the standing assumptions of the model. Never throws.
ValidationReport validate(const ModelParams& p);

/// Flat key/value view of a config file: "section.key" -> value.
using ConfigMap = std::map<std::string, std::string>;

/// Parses an INI-style file ([section] headers, key = value lines, ';' or
/// '#' comments). Throws ConfigError on IO or syntax errors.
ConfigMap read_config_file(const std::filesystem::path& path);

/// Overlays `cfg` on `base`. Unknown keys raise ConfigError.
ModelParams apply_config(ModelParams base, const ConfigMap& cfg);

ModelParams load_params(const std::filesystem::path& path);

/// Inverse of apply_config; every field has a key.
ConfigMap to_config(const ModelParams& p);

}  // namespace fracshe
