#include "fracshe/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>

#include "fracshe/analysis.hpp"
#include "fracshe/errors.hpp"
#include "fracshe/kernel.hpp"
#include "fracshe/noise.hpp"
#include "fracshe/parallel.hpp"
#include "fracshe/smallball.hpp"
#include "fracshe/solver.hpp"
#include "fracshe/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fracshe {

// ---------------------------------------------------------------------------
// manifest and emitters

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

json params_json(const ModelParams& p) {
  json j = json::object();
  for (const auto& [key, value] : to_config(p)) j[key] = value;
  return j;
}

std::string fmt17(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

json RunManifest::to_json() const {
  return json{{"schema_version", kJsonSchemaVersion},
              {"subcommand", subcommand},
              {"seed", seed},
              {"version", version},
              {"timestamp", timestamp},
              {"params", params_json(params)},
              {"outputs", outputs}};
}

std::string RunManifest::hash() const {
  json j = to_json();
  j.erase("timestamp");
  return fmt::format("{:016x}", fnv1a(j.dump()));
}

std::string current_timestamp() {
  std::time_t t = 0;
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
    try {
      t = static_cast<std::time_t>(std::stoll(env));
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("SOURCE_DATE_EPOCH is not an integer: '{}'", env));
    }
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_csv(const fs::path& path, const CsvTable& table) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << "# " << table.comment << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i)
    os << (i ? "," : "") << table.columns[i];
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << fmt17(row[i]);
    os << '\n';
  }
  if (!os) throw Error("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << doc.dump(2) << '\n';
  if (!os) throw Error("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// subcommands

namespace {

struct Common {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::optional<int> resolution;
  std::optional<int> cutoff;
  std::optional<double> dt;
  std::optional<double> horizon;
};

struct Extra {
  std::uint64_t trial = 0;
  std::uint64_t snapshot_every = 0;
  int points = 0;
  int lag = 0;
  double epsilon = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> epsilons;
  bool refine = false;
  int n_max = 5;
  double c0 = 0.5;
  std::string policy = "diagnostic";
  int levels = 6;
  int fit_from = 2;
};

/// Everything a subcommand needs once parsing is done.
struct Context {
  std::string name;
  ModelParams params;
  Common common;
  Extra extra;
  fs::path out_dir;
  std::ostream& out;
  std::ostream& err;
  std::string manifest_hash;

  std::uint64_t trials(std::uint64_t fallback) const { return common.trials.value_or(fallback); }
  fs::path path(const std::string& file) const { return out_dir / file; }
  std::string comment(const std::string& columns) const {
    return fmt::format("fracshe {} manifest={} columns: {}", name, manifest_hash, columns);
  }
  json header() const {
    return json{{"schema_version", kJsonSchemaVersion},
                {"subcommand", name},
                {"manifest", manifest_hash}};
  }
};

void begin(Context& ctx, std::vector<std::string> outputs) {
  fs::create_directories(ctx.out_dir);
  RunManifest m;
  m.params = ctx.params;
  m.subcommand = ctx.name;
  m.seed = ctx.params.seed;
  m.version = kVersion;
  m.timestamp = current_timestamp();
  m.outputs = std::move(outputs);
  ctx.manifest_hash = m.hash();
  write_json(ctx.path(ctx.name + ".manifest.json"), m.to_json());
}

json fit_json(const RegressionFit& f) {
  return json{{"slope", f.slope},         {"intercept", f.intercept},
              {"r_squared", f.r_squared}, {"residual_max", f.residual_max},
              {"x_min", f.x_min},         {"x_max", f.x_max},
              {"points", f.points}};
}

json estimate_json(const SmallBallEstimate& e) {
  return json{{"epsilon", e.epsilon},   {"horizon", e.horizon},
              {"trials", e.trials},     {"successes", e.successes},
              {"diverged", e.diverged}, {"estimate", e.estimate},
              {"ci_lo", e.interval.lo}, {"ci_hi", e.interval.hi}};
}

std::vector<double> estimate_row(const SmallBallEstimate& e) {
  return {e.epsilon,
          e.horizon,
          static_cast<double>(e.trials),
          static_cast<double>(e.successes),
          static_cast<double>(e.diverged),
          e.estimate,
          e.interval.lo,
          e.interval.hi};
}

const char* kEstimateColumns = "epsilon,horizon,trials,successes,diverged,estimate,ci_lo,ci_hi";

CsvTable estimate_table(const Context& ctx, std::span<const SmallBallEstimate> estimates) {
  CsvTable t;
  t.comment = ctx.comment(kEstimateColumns);
  t.columns = {"epsilon", "horizon", "trials", "successes", "diverged", "estimate", "ci_lo", "ci_hi"};
  for (const auto& e : estimates) t.rows.push_back(estimate_row(e));
  return t;
}

CsvTable estimate_rows_table(const Context& ctx, std::span<const EstimateRow> rows,
                             const std::string& abscissa) {
  CsvTable t;
  t.columns = {abscissa, "estimate", "std_error", "oracle"};
  t.comment = ctx.comment(fmt::format("{},estimate,std_error,oracle", abscissa));
  for (const auto& r : rows) t.rows.push_back({r.abscissa, r.estimate, r.std_error, r.oracle});
  return t;
}

int cmd_validate(Context& ctx) {
  const ValidationReport report = validate(ctx.params);
  ctx.out << fmt::format("dalang_probe={}\n", fmt17(report.dalang_probe));
  if (report.ok()) {
    ctx.out << "ok\n";
    return kExitOk;
  }
  for (const auto& f : report.failures) ctx.out << "invalid: " << f << '\n';
  return kExitInvalid;
}

int cmd_simulate(Context& ctx) {
  const std::uint64_t steps = step_count(ctx.params);
  RunOptions opts;
  opts.snapshot_every = ctx.extra.snapshot_every;
  std::vector<std::string> outputs{"simulate.csv"};
  if (opts.snapshot_every > 0)
    for (std::uint64_t k = 0; k <= steps; k += opts.snapshot_every)
      outputs.push_back(fmt::format("snapshot_{:08d}.csv", k));
  begin(ctx, outputs);

  const Trajectory traj = run(ctx.params, nullptr, ctx.extra.trial, opts);
  CsvTable t;
  t.comment = ctx.comment("t,running_sup");
  t.columns = {"t", "running_sup"};
  for (std::size_t i = 0; i < traj.times.size(); ++i) t.rows.push_back({traj.times[i], traj.running_sup[i]});
  write_csv(ctx.path("simulate.csv"), t);
  for (const auto& snap : traj.snapshots) {
    const fs::path path = ctx.path(fmt::format("snapshot_{:08d}.csv", snap.step));
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    os << "# " << ctx.comment(fmt::format("snapshot at t={}", fmt17(snap.time))) << '\n';
    write_csv(os, snap.field);
    if (!os) throw Error("write failed for " + path.string());
  }
  ctx.out << fmt::format("steps={} final_sup={}\n", traj.times.size() - 1, fmt17(traj.final_sup()));
  return kExitOk;
}

int cmd_kernel_check(Context& ctx) {
  begin(ctx, {"kernel_space.csv", "kernel_time.csv"});
  const KernelEval kernel(ctx.params);
  const double t_lo = std::max(1e-3, 2.0 * kernel.t_min());
  const auto ts = log_spaced(t_lo, 1.0, 20);
  const auto xs = log_spaced(1e-3, 1.0, 20);
  const int points = ctx.extra.points;

  CsvTable space;
  space.columns = {"t", "x", "modulus", "bound", "ratio"};
  space.comment = ctx.comment("t,x,modulus,bound,ratio (bound = min(|x|/t^(1/alpha), 1))");
  double sup_space = 0.0;
  std::vector<double> x(ctx.params.dim, 0.0);
  for (double t : ts) {
    for (double h : xs) {
      x[0] = h;
      const double m = kernel.l1_space_modulus(t, x, points);
      const double bound = std::min(h / std::pow(t, 1.0 / ctx.params.alpha), 1.0);
      space.rows.push_back({t, h, m, bound, m / bound});
      sup_space = std::max(sup_space, m / bound);
    }
  }
  write_csv(ctx.path("kernel_space.csv"), space);

  CsvTable time;
  time.columns = {"t", "s", "modulus", "bound", "ratio"};
  time.comment = ctx.comment("t,s,modulus,bound,ratio (bound = min(|log(t/s)|, 1))");
  double sup_time = 0.0;
  for (double t : ts) {
    for (double s : ts) {
      if (s == t) continue;
      const double m = kernel.l1_time_modulus(std::max(t, s), std::min(t, s), points);
      const double bound = std::min(std::abs(std::log(t / s)), 1.0);
      time.rows.push_back({t, s, m, bound, m / bound});
      sup_time = std::max(sup_time, m / bound);
    }
  }
  write_csv(ctx.path("kernel_time.csv"), time);
  ctx.out << fmt::format("sup_ratio_space={} sup_ratio_time={}\n", fmt17(sup_space), fmt17(sup_time));
  return kExitOk;
}

std::vector<int> space_lags(int points) {
  std::vector<int> lags;
  for (int lag = 1; lag <= points / 4; lag *= 2) lags.push_back(lag);
  return lags;
}

std::vector<std::uint64_t> time_lags(std::uint64_t steps) {
  std::vector<std::uint64_t> lags;
  for (double v : log_spaced(1.0, std::max(2.0, steps / 2.0), 16)) {
    const auto lag = static_cast<std::uint64_t>(std::llround(v));
    if (lag >= 1 && lag <= steps && (lags.empty() || lags.back() != lag)) lags.push_back(lag);
  }
  return lags;
}

int cmd_regularity(Context& ctx) {
  begin(ctx, {"regularity_space.csv", "regularity_time.csv", "regularity.json"});
  const ModelParams& p = ctx.params;
  const std::uint64_t trials = ctx.trials(kMinStructureTrials);
  const std::uint64_t steps = step_count(p);
  const auto tlags = time_lags(steps);

  RunOptions opts;
  opts.record_path = false;
  opts.solver.track_sup = false;
  opts.snapshot_steps.push_back(steps);
  for (auto lag : tlags) opts.snapshot_steps.push_back(steps - lag);

  std::vector<Trajectory> runs(trials);
  parallel_for(trials, [&](std::size_t i) { runs[i] = run(p, nullptr, i, opts); });

  std::vector<PhysicalField> finals;
  finals.reserve(trials);
  for (const auto& r : runs)
    for (const auto& s : r.snapshots)
      if (s.step == steps) finals.push_back(s.field);

  const Spectrum spectrum = make_spectrum(p);
  const auto slags = space_lags(p.grid_points);
  const StructureTable space = structure_function_space(finals, p.horizon, slags, &spectrum);
  const StructureTable time = structure_function_time(runs, p.dt, steps, tlags, &spectrum);

  write_csv(ctx.path("regularity_space.csv"), estimate_rows_table(ctx, space.rows, "lag"));
  write_csv(ctx.path("regularity_time.csv"), estimate_rows_table(ctx, time.rows, "time_lag"));
  json doc = ctx.header();
  doc["trials"] = trials;
  doc["space_fit"] = fit_json(space.fit);
  doc["time_fit"] = fit_json(time.fit);
  doc["space_target"] = std::min(1.0, p.alpha - p.beta);
  doc["time_target"] = (p.alpha - p.beta) / p.alpha;
  write_json(ctx.path("regularity.json"), doc);
  ctx.out << fmt::format("space_slope={} time_slope={}\n", fmt17(space.fit.slope), fmt17(time.fit.slope));
  return kExitOk;
}

int cmd_tails(Context& ctx) {
  begin(ctx, {"tails.csv"});
  const ModelParams& p = ctx.params;
  if (p.sigma.kind != SigmaKind::Constant)
    ctx.err << "warning: sigma is not constant; the Gaussian reference is only indicative\n";
  const std::uint64_t trials = ctx.trials(10000);
  const int lag = ctx.extra.lag > 0 ? ctx.extra.lag : std::max(1, p.grid_points / 8);

  RunOptions opts;
  opts.record_path = false;
  opts.solver.track_sup = false;
  const std::uint64_t steps = step_count(p);
  opts.snapshot_steps.push_back(steps);
  std::vector<double> increments(trials);
  const std::size_t stride = static_cast<std::size_t>(std::pow(p.grid_points, p.dim - 1));
  parallel_for(trials, [&](std::size_t i) {
    const Trajectory traj = run(p, nullptr, i, opts);
    const auto& v = traj.snapshots.back().field.values;
    increments[i] = v[static_cast<std::size_t>(lag) * stride] - v[0];
  });

  const Spectrum spectrum = make_spectrum(p);
  std::vector<double> x(p.dim, 0.0);
  std::vector<double> y(p.dim, 0.0);
  y[0] = 2.0 * lag / p.grid_points;
  const double sd = std::sqrt(structure_oracle_space(p.horizon, x, y, spectrum));
  const std::vector<double> kappas{0.0, sd, 2.0 * sd, 3.0 * sd};
  const auto rows = tail_check(increments, sd, kappas);
  write_csv(ctx.path("tails.csv"), estimate_rows_table(ctx, rows, "kappa"));
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, std::abs(r.z_score()));
  ctx.out << fmt::format("sd={} max_abs_z={}\n", fmt17(sd), fmt17(worst));
  return kExitOk;
}

/// Mean over trials of the grid average of u(T, x)^2, with its standard error.
std::pair<double, double> second_moment(const ModelParams& p, std::uint64_t trials,
                                        const SolverOptions& solver) {
  RunOptions opts;
  opts.solver = solver;
  opts.record_path = false;
  std::vector<double> per_trial(trials);
  parallel_for(trials, [&](std::size_t i) {
    const Trajectory traj = run(p, nullptr, i, opts);
    // Parseval: grid mean of u^2 equals sum |c_n|^2 for M >= 2N+1
    double acc = 0.0;
    for (const auto& c : traj.final_state->coeffs) acc += std::norm(c);
    per_trial[i] = acc;
  });
  const double n = static_cast<double>(trials);
  double mean = 0.0;
  for (double v : per_trial) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : per_trial) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

int cmd_variance_check(Context& ctx) {
  begin(ctx, {"variance.json"});
  const ModelParams& p = ctx.params;
  const std::uint64_t trials = ctx.trials(20000);
  if (trials < 2) throw InsufficientSamples("variance-check needs at least 2 trials");
  const Spectrum spectrum = make_spectrum(p);
  const double oracle = noise_var_oracle(p.horizon, spectrum);

  SolverOptions coarse;
  coarse.track_sup = false;
  coarse.noise_substeps = 2;
  const auto [est, se] = second_moment(p, trials, coarse);
  ModelParams half = p;
  half.dt = p.dt / 2.0;
  SolverOptions fine;
  fine.track_sup = false;
  const auto [est_half, se_half] = second_moment(half, trials, fine);

  const double z = 1.959963984540054;
  json doc = ctx.header();
  doc["trials"] = trials;
  doc["oracle"] = oracle;
  doc["estimate"] = est;
  doc["std_error"] = se;
  doc["z_score"] = (est - oracle) / se;
  doc["estimate_half_dt"] = est_half;
  doc["std_error_half_dt"] = se_half;
  doc["shift"] = est_half - est;
  doc["combined_ci_halfwidth"] = z * std::sqrt(se * se + se_half * se_half);
  write_json(ctx.path("variance.json"), doc);
  ctx.out << fmt::format("oracle={} estimate={} se={} half_dt={}\n", fmt17(oracle), fmt17(est),
                         fmt17(se), fmt17(est_half));
  return kExitOk;
}

json bracket_json(const ExponentBracket& b) {
  json j{{"regime_a", b.regime_a}, {"upper_bound_exponent", b.upper_bound_exponent}};
  if (b.regime_a) {
    j["lower_bound_exponent"] = b.lower_bound_exponent;
    j["bracket"] = {b.upper_bound_exponent, b.lower_bound_exponent};
    j["widened_bracket"] = {b.upper_bound_exponent - 1.0, b.lower_bound_exponent + 2.0};
  }
  return j;
}

int cmd_smallball(Context& ctx) {
  if (!std::isfinite(ctx.extra.epsilon) || ctx.extra.epsilon < 0.0)
    throw ConfigError("smallball needs --epsilon >= 0");
  begin(ctx, {"smallball.json", "smallball.csv"});
  const std::uint64_t trials = ctx.trials(1000);
  json doc = ctx.header();
  std::vector<SmallBallEstimate> rows;
  if (ctx.extra.refine) {
    const RefinementReport r = refinement_check(ctx.params, ctx.extra.epsilon, trials);
    rows = {r.coarse, r.fine};
    doc["estimates"] = {estimate_json(r.coarse), estimate_json(r.fine)};
    doc["refinement"] = {{"grid_points", {ctx.params.grid_points, 2 * ctx.params.grid_points}},
                         {"dt", {ctx.params.dt, ctx.params.dt / 2.0}},
                         {"gap", r.gap},
                         {"fine_below_fraction", r.fine_below_fraction},
                         {"max_sup_drop", r.max_sup_drop}};
  } else {
    rows = {estimate(ctx.params, ctx.extra.epsilon, trials)};
    doc["estimates"] = {estimate_json(rows[0])};
  }
  write_json(ctx.path("smallball.json"), doc);
  write_csv(ctx.path("smallball.csv"), estimate_table(ctx, rows));
  for (const auto& e : rows)
    ctx.out << fmt::format("epsilon={} estimate={} ci=[{}, {}]\n", fmt17(e.epsilon),
                           fmt17(e.estimate), fmt17(e.interval.lo), fmt17(e.interval.hi));
  return kExitOk;
}

int cmd_smallball_sweep(Context& ctx) {
  if (ctx.extra.epsilons.empty()) throw ConfigError("smallball-sweep needs --epsilons");
  begin(ctx, {"smallball-sweep.json", "smallball-sweep.csv"});
  const std::uint64_t trials = ctx.trials(1000);
  const double top = *std::max_element(ctx.extra.epsilons.begin(), ctx.extra.epsilons.end());
  const auto outcomes = trial_outcomes(ctx.params, trials, top);
  std::vector<SmallBallEstimate> estimates;
  for (double eps : ctx.extra.epsilons)
    estimates.push_back(summarize(outcomes, eps, ctx.params.horizon));
  write_csv(ctx.path("smallball-sweep.csv"), estimate_table(ctx, estimates));

  json doc = ctx.header();
  doc["estimates"] = json::array();
  for (const auto& e : estimates) doc["estimates"].push_back(estimate_json(e));
  doc["bracket"] = bracket_json(exponent_bracket(ctx.params.alpha, ctx.params.beta, ctx.params.dim));
  int status = kExitOk;
  try {
    const SweepResult r = fit_sweep(estimates, ctx.params);
    doc["fit"] = fit_json(r.fit);
    ctx.out << fmt::format("theta={}\n", fmt17(r.fit.slope));
  } catch (const Error& e) {
    // the table is still useful without a fit
    doc["fit"] = nullptr;
    doc["fit_error"] = e.what();
    ctx.err << "error: " << e.what() << '\n';
    status = kExitRuntime;
  }
  write_json(ctx.path("smallball-sweep.json"), doc);
  return status;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

int cmd_events(Context& ctx) {
  if (!(ctx.extra.epsilon > 0.0)) throw ConfigError("events needs --epsilon > 0");
  begin(ctx, {"events.json", "events.csv"});
  C0Settings settings;
  settings.c0 = ctx.extra.c0;
  if (ctx.extra.policy == "admissible") settings.policy = C0Policy::Admissible;
  else if (ctx.extra.policy != "diagnostic") throw ConfigError("unknown c0 policy: " + ctx.extra.policy);
  const EventDiagnostics d =
      event_diagnostics(ctx.params, ctx.extra.epsilon, ctx.trials(1000), ctx.extra.n_max, settings);

  CsvTable t;
  t.columns = {"n", "f_frequency", "e_frequency", "f_conditioning_hits", "e_conditioning_hits",
               "f_conditional", "e_conditional"};
  t.comment = ctx.comment(
      "n,f_frequency,e_frequency,f_conditioning_hits,e_conditioning_hits,f_conditional,e_conditional "
      "(F columns are nan for n=-1)");
  json rows = json::array();
  for (const auto& r : d.rows) {
    t.rows.push_back({static_cast<double>(r.n), r.f_frequency, r.e_frequency,
                      static_cast<double>(r.f_conditioning_hits),
                      static_cast<double>(r.e_conditioning_hits), r.f_conditional, r.e_conditional});
    rows.push_back({{"n", r.n},
                    {"f_frequency", number_or_null(r.f_frequency)},
                    {"e_frequency", r.e_frequency},
                    {"f_conditioning_hits", r.f_conditioning_hits},
                    {"e_conditioning_hits", r.e_conditioning_hits},
                    {"f_conditional", number_or_null(r.f_conditional)},
                    {"e_conditional", r.e_conditional}});
  }
  write_csv(ctx.path("events.csv"), t);
  json doc = ctx.header();
  doc["grid"] = {{"epsilon", d.grid.epsilon}, {"c0", d.grid.c0},     {"t1", d.grid.t1},
                 {"pitch", d.grid.pitch},     {"n1", d.grid.n1},     {"time_count", d.grid.time_count}};
  doc["f_level"] = d.f_level;
  doc["e_level"] = d.e_level;
  doc["rows"] = rows;
  doc["f_conditional_cv"] = d.f_conditional_cv;
  doc["homogeneous"] = d.homogeneous;
  doc["lipschitz"] = ctx.params.sigma.lipschitz;
  write_json(ctx.path("events.json"), doc);
  ctx.out << fmt::format("cv={} homogeneous={}\n", fmt17(d.f_conditional_cv), d.homogeneous);
  return kExitOk;
}

int cmd_chain_diag(Context& ctx) {
  ModelParams& p = ctx.params;
  const int levels = ctx.extra.levels;
  if (levels < 0 || levels > 12) throw ConfigError("chain-diag needs 0 <= --levels <= 12");
  // time strides 4^-n / dt must be integers for every level
  const double finest = std::pow(4.0, -levels);
  p.dt = finest / std::ceil(finest / p.dt - 1e-9);
  p.horizon = std::max(p.horizon, 1.0);
  const int block = 2 << levels;  // grid_points / 2 must be a multiple of 2^levels
  if (p.grid_points % block != 0) p.grid_points = block * (p.grid_points / block + 1);
  const ValidationReport report = validate(p);
  if (!report.ok()) {
    for (const auto& f : report.failures) ctx.out << "invalid: " << f << '\n';
    return kExitInvalid;
  }
  begin(ctx, {"chain-diag.json", "chain-diag.csv"});
  const std::uint64_t trials = ctx.trials(4);
  RunOptions opts;
  opts.record_path = false;
  opts.solver.track_sup = false;
  const auto stride = static_cast<std::uint64_t>(std::llround(finest / p.dt));
  opts.snapshot_every = stride;
  std::vector<Trajectory> runs(trials);
  parallel_for(trials, [&](std::size_t i) { runs[i] = run(p, nullptr, i, opts); });
  const ChainDiagnostic d = chain_diagnostic(runs, p, levels, ctx.extra.fit_from);

  CsvTable t;
  t.columns = {"level", "pairs", "max_increment", "mean_max_increment", "sup_norm"};
  t.comment = ctx.comment("level,pairs,max_increment,mean_max_increment,sup_norm");
  for (const auto& r : d.rows)
    t.rows.push_back({static_cast<double>(r.level), static_cast<double>(r.pairs), r.max_increment,
                      r.mean_max_increment, r.sup_norm});
  write_csv(ctx.path("chain-diag.csv"), t);
  json doc = ctx.header();
  doc["trials"] = trials;
  doc["fit"] = fit_json(d.fit);
  doc["decay_rate"] = d.decay_rate;
  write_json(ctx.path("chain-diag.json"), doc);
  ctx.out << fmt::format("decay_rate={}\n", fmt17(d.decay_rate));
  return kExitOk;
}

using Handler = std::function<int(Context&)>;

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> table{
      {"validate", cmd_validate},
      {"simulate", cmd_simulate},
      {"kernel-check", cmd_kernel_check},
      {"regularity", cmd_regularity},
      {"tails", cmd_tails},
      {"variance-check", cmd_variance_check},
      {"smallball", cmd_smallball},
      {"smallball-sweep", cmd_smallball_sweep},
      {"events", cmd_events},
      {"chain-diag", cmd_chain_diag},
  };
  return table;
}

void add_options(CLI::App& app, const std::string& name, Common& c, Extra& e) {
  app.add_option("--config", c.config, "INI config file")->check(CLI::ExistingFile);
  app.add_option("--out", c.out, "output directory");
  app.add_option("--seed", c.seed, "master seed");
  app.add_option("--trials", c.trials, "Monte Carlo trials");
  app.add_option("--resolution", c.resolution,
                 "grid points per axis; the mode cutoff becomes (M-1)/2");
  app.add_option("--cutoff", c.cutoff, "mode cutoff N");
  app.add_option("--dt", c.dt, "time step");
  app.add_option("--horizon", c.horizon, "final time T");

  if (name == "simulate") {
    app.add_option("--trial", e.trial, "trial id");
    app.add_option("--snapshot-every", e.snapshot_every, "snapshot stride in steps");
  } else if (name == "kernel-check") {
    app.add_option("--points", e.points, "quadrature points per axis (0 = 4N)");
  } else if (name == "tails") {
    app.add_option("--lag", e.lag, "spatial lag in grid units");
  } else if (name == "smallball") {
    app.add_option("--epsilon", e.epsilon, "ball radius")->required();
    app.add_flag("--refine", e.refine, "also run at (2M, dt/2) on matched noise");
  } else if (name == "smallball-sweep") {
    app.add_option("--epsilons", e.epsilons, "ball radii")->required()->delimiter(',');
  } else if (name == "events") {
    app.add_option("--epsilon", e.epsilon, "ball radius")->required();
    app.add_option("--n-max", e.n_max, "last event index");
    app.add_option("--c0", e.c0, "time pitch factor");
    app.add_option("--policy", e.policy, "diagnostic or admissible");
  } else if (name == "chain-diag") {
    app.add_option("--levels", e.levels, "finest dyadic level");
    app.add_option("--fit-from", e.fit_from, "first level in the decay fit");
  }
}

ModelParams resolve(const Common& c) {
  ModelParams p = c.config.empty() ? ModelParams{} : load_params(c.config);
  if (c.resolution) {
    p.grid_points = *c.resolution;
    p.mode_cutoff = std::max(1, (*c.resolution - 1) / 2);
  }
  if (c.cutoff) p.mode_cutoff = *c.cutoff;
  if (c.dt) p.dt = *c.dt;
  if (c.horizon) p.horizon = *c.horizon;
  if (c.seed) p.seed = *c.seed;
  return p;
}

}  // namespace

std::string usage() {
  std::string s = "usage: fracshe <subcommand> [options]\nsubcommands:";
  for (const auto& [name, handler] : handlers()) s += " " + name;
  s += "\nrun 'fracshe <subcommand> --help' for options\n";
  return s;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty() || !handlers().contains(args[0])) {
    if (!args.empty() && args[0] != "--help" && args[0] != "-h")
      err << "unknown subcommand: " << args[0] << '\n';
    err << usage();
    return kExitUsage;
  }
  const std::string name = args[0];
  Common common;
  Extra extra;
  CLI::App app("fracshe " + name, "fracshe " + name);
  add_options(app, name, common, extra);
  try {
    std::vector<std::string> rest(args.rbegin(), args.rend() - 1);  // CLI11 wants reverse order
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << app.help();
    return kExitUsage;
  }

  try {
    Context ctx{name, resolve(common), common, extra, fs::path(common.out), out, err, {}};
    if (name != "validate" && name != "chain-diag") {
      const ValidationReport report = validate(ctx.params);
      if (!report.ok()) {
        for (const auto& f : report.failures) out << "invalid: " << f << '\n';
        return kExitInvalid;
      }
    }
    return handlers().at(name)(ctx);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace fracshe
