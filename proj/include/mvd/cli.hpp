#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mvd/closed_form.hpp"
#include "mvd/csv.hpp"
#include "mvd/discrepancy.hpp"
#include "mvd/null_approx.hpp"
#include "mvd/simulation.hpp"
#include "mvd/version.hpp"

namespace mvd::cli {

using json = nlohmann::ordered_json;

inline constexpr std::uint64_t kFallbackSeed = 20240601;
inline constexpr const char* kSeedEnv = "MVD_SEED";

inline std::uint64_t default_seed() {
  if (const char* s = std::getenv(kSeedEnv); s && *s) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string(kSeedEnv) + " is not an unsigned integer");
    }
  }
  return kFallbackSeed;
}

/// Effective configuration of one invocation, after defaulting.
struct RunConfig {
  std::string command;

  // data
  std::string x_path, y_path;
  bool header = false;

  // kernel
  std::string kernel = "gaussian";
  std::string sigma = "auto";
  double log_scale = 0.0;

  // test
  std::string kind = "mvd";
  double alpha = 0.05;
  std::size_t draws = 10000;
  std::optional<Index> n1, k, l;
  std::size_t subsample_iters = 1000;
  std::optional<double> tau;
  std::uint64_t seed = kFallbackSeed;

  // closed-form / curves
  double t = 0.0, s = 1.0;
  Index d = 10;
  std::string t_grid = "0:2:0.1", s_grid = "1";

  // simulate
  std::string experiment = "power";
  std::vector<std::string> sigma_rules{"d^-3/4"};
  std::vector<Index> dims{5};
  std::vector<Index> ns{200};
  std::vector<Index> ms;
  std::size_t reps = 500;
  std::vector<int> divisors{4, 6, 8};
  int divisor = 8;
  std::size_t subsample_reps = 1;
  std::optional<double> tau_mvd, tau_mmd;
  std::vector<std::string> scenarios{"null", "Q1", "Q2"};

  // output
  std::string out;
  std::string format;  // empty: command default
};

// ---------------------------------------------------------------------------
// Value parsing helpers
// ---------------------------------------------------------------------------

/// "auto", a preset rule name ("d^-3/4", ...), or a positive number.
inline double resolve_sigma(const std::string& text, Index d) {
  if (auto rule = parse_sigma_rule(text)) return sigma_for(*rule, d);
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != text.size() || !(v > 0.0) || !std::isfinite(v))
    throw std::invalid_argument("invalid sigma '" + text +
                                "': expected auto, d^-3/4, d^-7/8, d^-1, d^-2 or a positive number");
  return v;
}

/// "a:b:step" (inclusive) or a comma-separated list.
inline std::vector<double> parse_grid(const std::string& text) {
  auto num = [&](const std::string& s) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != s.size() || !std::isfinite(v))
      throw std::invalid_argument("invalid grid value '" + s + "' in '" + text + "'");
    return v;
  };
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw std::invalid_argument("grid range must be start:stop:step");
    const double a = num(parts[0]), b = num(parts[1]), step = num(parts[2]);
    if (!(step > 0.0) || b < a) throw std::invalid_argument("invalid grid range '" + text + "'");
    const auto count = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
    if (count > 1000000) throw std::invalid_argument("grid too large");
    for (std::size_t i = 0; i < count; ++i) out.push_back(a + static_cast<double>(i) * step);
  } else {
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(num(p));
  }
  if (out.empty()) throw std::invalid_argument("empty grid");
  return out;
}

inline std::vector<StatisticKind> parse_kinds(const std::string& s) {
  if (s == "both") return {StatisticKind::mvd, StatisticKind::mmd};
  return {parse_statistic_kind(s)};
}

inline Scenario parse_scenario(const std::string& s) {
  if (s == "null" || s == "H0") return Scenario::null;
  if (s == "Q1" || s == "uniform") return Scenario::uniform;
  if (s == "Q2" || s == "exponential") return Scenario::exponential;
  throw std::invalid_argument("unknown scenario '" + s + "' (null, Q1, Q2)");
}

inline KernelSpec make_kernel(const RunConfig& cfg, Index d) {
  if (cfg.kernel != "gaussian")
    throw std::invalid_argument("unsupported kernel '" + cfg.kernel + "'");
  KernelSpec spec{KernelFamily::gaussian, resolve_sigma(cfg.sigma, d), cfg.log_scale};
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

inline json meta() {
  return json{{"schema_version", kSchemaVersion}, {"version", kVersion}};
}

inline json to_json(const TestReport& r) {
  json j = meta();
  j["kind"] = std::string(to_string(r.kind));
  j["n"] = r.n;
  j["m"] = r.m;
  j["d"] = r.d;
  j["kernel"] = "gaussian";
  j["sigma"] = r.kernel.sigma;
  j["C"] = r.kernel.log_scale;
  j["statistic"] = r.statistic;
  j["critical_value_wprime"] = r.critical_value;
  j["critical_value_uncorrected"] = r.critical_value_uncorrected;
  j["p_value"] = r.p_value;
  j["reject"] = r.reject;
  j["alpha"] = r.alpha;
  j["tau"] = r.tau;
  j["v_sub"] = r.v_sub;
  j["xi"] = r.xi;
  j["c"] = r.c;
  j["rho"] = r.rho;
  j["draws"] = r.draws;
  j["n1"] = r.plan.n1;
  j["k"] = r.plan.k;
  j["l"] = r.plan.l;
  j["subsample_iters"] = r.plan.iterations;
  j["seed"] = r.seed;
  j["diagnostics"] = json{
      {"weights_trace", r.diagnostics.weights_trace},
      {"weights_source_trace", r.diagnostics.weights_source_trace},
      {"weight_count", r.diagnostics.weight_count},
      {"clamped_negative_count", r.diagnostics.clamped_negative_count},
      {"clamped_mass", r.diagnostics.clamped_mass},
      {"statistic_clamped", r.diagnostics.statistic_clamped},
      {"statistic_raw", r.diagnostics.statistic_raw},
      {"subsample_seed", r.diagnostics.subsample_seed},
      {"draw_seed", r.diagnostics.draw_seed},
  };
  return j;
}

/// Minimal CSV writer for result tables; every cell is a number or a bare token.
class TableWriter {
 public:
  explicit TableWriter(std::ostream& out) : out_(out) {}
  void header(const std::vector<std::string>& cols) { row_strings(cols); }
  template <typename... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }

 private:
  void row_strings(const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
    out_ << '\n';
  }
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(bool v) { return v ? "true" : "false"; }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(std::string_view v) { return std::string(v); }
  static std::string cell(const char* v) { return v; }
  template <typename T>
  static std::string cell(const T& v) requires std::is_integral_v<T> {
    return std::to_string(v);
  }
  std::ostream& out_;
};

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline void cmd_test(const RunConfig& cfg, std::ostream& out) {
  if (cfg.x_path.empty() || cfg.y_path.empty())
    throw std::invalid_argument("test: --x and --y are required");
  const DataMatrix x = load_csv(cfg.x_path, cfg.header);
  const DataMatrix y = load_csv(cfg.y_path, cfg.header);
  if (x.cols() != y.cols())
    throw std::invalid_argument("test: X has " + std::to_string(x.cols()) + " columns, Y has " +
                                std::to_string(y.cols()));
  const KernelSpec spec = make_kernel(cfg, x.cols());

  TestOptions opts;
  opts.alpha = cfg.alpha;
  opts.draws = cfg.draws;
  opts.tau = cfg.tau;
  opts.n1 = cfg.n1;
  opts.k = cfg.k;
  opts.l = cfg.l;
  opts.subsample_iterations = cfg.subsample_iters;
  opts.seed = cfg.seed;

  const GramSet g = build_gram_set(x, y, spec);
  std::vector<TestReport> reports;
  for (StatisticKind kind : parse_kinds(cfg.kind))
    reports.push_back(run_test_on_gram(g, x.cols(), spec, kind, opts));

  const std::string format = cfg.format.empty() ? "json" : cfg.format;
  if (format == "json") {
    json config{{"command", "test"},     {"x", cfg.x_path},
                {"y", cfg.y_path},       {"header", cfg.header},
                {"kernel", cfg.kernel},  {"sigma", cfg.sigma},
                {"log_scale", cfg.log_scale}, {"kind", cfg.kind},
                {"alpha", cfg.alpha},    {"draws", cfg.draws},
                {"n1", reports.front().plan.n1}, {"k", reports.front().plan.k},
                {"l", reports.front().plan.l},   {"subsample_iters", cfg.subsample_iters},
                {"tau", cfg.tau ? json(*cfg.tau) : json(nullptr)},
                {"seed", cfg.seed}};
    if (reports.size() == 1) {
      json j = to_json(reports.front());
      j["config"] = config;
      out << j.dump(2) << '\n';
    } else {
      json j = meta();
      j["config"] = config;
      j["reports"] = json::array();
      for (const auto& r : reports) j["reports"].push_back(to_json(r));
      out << j.dump(2) << '\n';
    }
  } else if (format == "csv") {
    TableWriter w(out);
    w.header({"schema_version", "version", "kind", "n", "m", "d", "sigma", "C", "statistic",
              "critical_value_wprime", "critical_value_uncorrected", "p_value", "reject",
              "alpha", "tau", "v_sub", "xi", "c", "draws", "n1", "k", "l", "subsample_iters",
              "seed"});
    for (const auto& r : reports)
      w.row(kSchemaVersion, std::string(kVersion), to_string(r.kind), r.n, r.m, r.d,
            r.kernel.sigma, r.kernel.log_scale, r.statistic, r.critical_value,
            r.critical_value_uncorrected, r.p_value, r.reject, r.alpha, r.tau, r.v_sub, r.xi,
            r.c, r.draws, r.plan.n1, r.plan.k, r.plan.l, r.plan.iterations, r.seed);
  } else {
    throw std::invalid_argument("unknown format '" + format + "'");
  }
}

inline void cmd_closed_form(const RunConfig& cfg, std::ostream& out) {
  if (cfg.d < 1) throw std::invalid_argument("closed-form: --d must be positive");
  if (!(cfg.s > 0.0)) throw std::invalid_argument("closed-form: --s must be positive");
  const double sigma = resolve_sigma(cfg.sigma, cfg.d);
  json j = meta();
  j["t"] = cfg.t;
  j["s"] = cfg.s;
  j["d"] = cfg.d;
  j["sigma"] = sigma;
  j["C"] = cfg.log_scale;
  const GaussianSpec q = GaussianSpec::isotropic(cfg.d, cfg.t, cfg.s);
  j["mmd_sq"] = mmd_sq_gaussian(q, sigma, cfg.log_scale);
  j["mvd_sq"] = mvd_sq_gaussian(q, sigma, cfg.log_scale);
  out << j.dump(2) << '\n';
}

inline void cmd_curves(const RunConfig& cfg, std::ostream& out) {
  const double sigma = resolve_sigma(cfg.sigma, cfg.d);
  const auto rows =
      mvd_mmd_curves(parse_grid(cfg.t_grid), parse_grid(cfg.s_grid), cfg.d, sigma, cfg.log_scale);
  const std::string format = cfg.format.empty() ? "csv" : cfg.format;
  if (format == "csv") {
    TableWriter w(out);
    w.header({"t", "s", "d", "sigma", "C", "mmd_sq", "mvd_sq", "schema_version"});
    for (const auto& p : rows)
      w.row(p.t, p.s, p.d, p.sigma, p.log_scale, p.mmd_sq, p.mvd_sq, kSchemaVersion);
  } else if (format == "json") {
    json j = meta();
    j["rows"] = json::array();
    for (const auto& p : rows)
      j["rows"].push_back(json{{"t", p.t}, {"s", p.s}, {"d", p.d}, {"sigma", p.sigma},
                               {"C", p.log_scale}, {"mmd_sq", p.mmd_sq}, {"mvd_sq", p.mvd_sq}});
    out << j.dump(2) << '\n';
  } else {
    throw std::invalid_argument("unknown format '" + format + "'");
  }
}

inline std::vector<Cell> simulation_cells(const RunConfig& cfg) {
  if (!cfg.ms.empty() && cfg.ms.size() != cfg.ns.size())
    throw std::invalid_argument("simulate: --m must list one value per --n");
  std::vector<Cell> cells;
  for (const auto& rule_text : cfg.sigma_rules) {
    const auto rule = parse_sigma_rule(rule_text);
    if (!rule)
      throw std::invalid_argument("simulate: --sigma must be a preset rule, got '" + rule_text +
                                  "'");
    for (Index d : cfg.dims)
      for (std::size_t i = 0; i < cfg.ns.size(); ++i) {
        const Index n = cfg.ns[i];
        const Index m = cfg.ms.empty() ? n : cfg.ms[i];
        if (d < 1 || n < 2 || m < 2)
          throw std::invalid_argument("simulate: need d >= 1 and n, m >= 2");
        cells.push_back(Cell{*rule, d, n, m});
      }
  }
  if (cells.empty()) throw std::invalid_argument("simulate: no cells");
  return cells;
}

inline void write_variance_table(const VarianceTable& t, const std::string& experiment,
                                 const std::string& format, std::ostream& out) {
  std::vector<std::tuple<StatisticKind, int, double>> slopes;
  if (experiment == "slope")
    for (StatisticKind kind : t.kinds)
      for (int div : t.options.subsample_divisors)
        slopes.emplace_back(kind, div, table_slope(t, kind, div));

  if (format == "csv") {
    TableWriter w(out);
    w.header({"schema_version", "experiment", "kind", "estimator", "sigma_rule", "sigma", "d",
              "n", "m", "k", "l", "subsample_iters", "reps", "seed", "value", "se"});
    for (const auto& row : t.rows) {
      const Cell& c = row.cell;
      w.row(kSchemaVersion, experiment, to_string(row.kind), "exact", to_string(c.sigma_rule),
            c.sigma(), c.d, c.n, c.m, 0, 0, 0, row.exact.count, t.options.seed,
            row.exact.variance, row.exact.variance_se);
      for (const auto& s : row.subsampling) {
        const double se = s.estimate.count > 1
                              ? std::sqrt(s.estimate.variance / static_cast<double>(s.estimate.count))
                              : 0.0;
        w.row(kSchemaVersion, experiment, to_string(row.kind), "subsampling",
              to_string(c.sigma_rule), c.sigma(), c.d, c.n, c.m, s.k, s.l,
              t.options.subsample_iterations, s.estimate.count, t.options.seed, s.estimate.mean,
              se);
      }
    }
    for (const auto& [kind, div, slope] : slopes)
      w.row(kSchemaVersion, experiment, to_string(kind), "slope_n/" + std::to_string(div), "", 0.0,
            0, 0, 0, 0, 0, t.options.subsample_iterations, t.options.reps, t.options.seed, slope,
            0.0);
  } else if (format == "json") {
    json j = meta();
    j["experiment"] = experiment;
    j["config"] = json{{"reps", t.options.reps},
                       {"subsample_divisors", t.options.subsample_divisors},
                       {"subsample_iters", t.options.subsample_iterations},
                       {"subsample_reps", t.options.subsample_reps},
                       {"seed", t.options.seed}};
    j["rows"] = json::array();
    for (const auto& row : t.rows) {
      json r{{"kind", std::string(to_string(row.kind))},
             {"sigma_rule", std::string(to_string(row.cell.sigma_rule))},
             {"sigma", row.cell.sigma()},
             {"d", row.cell.d},
             {"n", row.cell.n},
             {"m", row.cell.m},
             {"exact_variance", row.exact.variance},
             {"exact_variance_se", row.exact.variance_se},
             {"subsampling", json::array()}};
      for (const auto& s : row.subsampling)
        r["subsampling"].push_back(json{{"k", s.k},
                                        {"l", s.l},
                                        {"variance", s.estimate.mean},
                                        {"spread", s.estimate.variance},
                                        {"count", s.estimate.count}});
      j["rows"].push_back(r);
    }
    if (!slopes.empty()) {
      j["slopes"] = json::array();
      for (const auto& [kind, div, slope] : slopes)
        j["slopes"].push_back(json{{"kind", std::string(to_string(kind))},
                                   {"divisor", div},
                                   {"slope", slope},
                                   {"tau", slope - 1.0}});
    }
    out << j.dump(2) << '\n';
  } else {
    throw std::invalid_argument("unknown format '" + format + "'");
  }
}

inline void write_power_table(const PowerTable& t, const std::string& format, std::ostream& out) {
  if (format == "csv") {
    TableWriter w(out);
    w.header({"schema_version", "experiment", "kind", "scenario", "sigma_rule", "sigma", "d", "n",
              "m", "alpha", "tau", "k", "l", "subsample_iters", "draws", "reps", "seed",
              "rejections", "rate", "se"});
    for (const auto& r : t.rows) {
      const Cell& c = r.cell;
      const Index k = c.n / t.options.subsample_divisor;
      w.row(kSchemaVersion, "power", to_string(r.kind), to_string(r.scenario),
            to_string(c.sigma_rule), c.sigma(), c.d, c.n, c.m, t.options.alpha, r.tau, k, k,
            t.options.subsample_iterations, t.options.draws, r.rate.reps, t.options.seed,
            r.rate.rejections, r.rate.rate(), r.rate.se());
    }
  } else if (format == "json") {
    json j = meta();
    j["experiment"] = "power";
    j["config"] = json{{"alpha", t.options.alpha},
                       {"reps", t.options.reps},
                       {"subsample_divisor", t.options.subsample_divisor},
                       {"subsample_iters", t.options.subsample_iterations},
                       {"draws", t.options.draws},
                       {"seed", t.options.seed}};
    j["rows"] = json::array();
    for (const auto& r : t.rows)
      j["rows"].push_back(json{{"kind", std::string(to_string(r.kind))},
                               {"scenario", std::string(to_string(r.scenario))},
                               {"sigma_rule", std::string(to_string(r.cell.sigma_rule))},
                               {"sigma", r.cell.sigma()},
                               {"d", r.cell.d},
                               {"n", r.cell.n},
                               {"m", r.cell.m},
                               {"tau", r.tau},
                               {"rejections", r.rate.rejections},
                               {"reps", r.rate.reps},
                               {"rate", r.rate.rate()},
                               {"se", r.rate.se()}});
    out << j.dump(2) << '\n';
  } else {
    throw std::invalid_argument("unknown format '" + format + "'");
  }
}

inline void cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  if (cfg.reps == 0) throw std::invalid_argument("simulate: --reps must be positive");
  const auto cells = simulation_cells(cfg);
  const auto kinds = parse_kinds(cfg.kind);
  const std::string format = cfg.format.empty() ? "csv" : cfg.format;
  if (format != "csv" && format != "json")
    throw std::invalid_argument("unknown format '" + format + "'");

  if (cfg.experiment == "variance" || cfg.experiment == "slope") {
    if (cfg.reps < 2) throw std::invalid_argument("simulate: variance needs --reps >= 2");
    VarianceTableOptions o;
    o.reps = cfg.reps;
    o.subsample_divisors = cfg.divisors;
    o.subsample_iterations = cfg.subsample_iters;
    o.subsample_reps = cfg.subsample_reps;
    o.seed = cfg.seed;
    for (int div : o.subsample_divisors)
      for (const auto& c : cells) {
        SubsamplingPlan p = SubsamplingPlan::defaults(c.n, c.m, 0);
        if (div < 1) throw std::invalid_argument("simulate: divisors must be positive");
        p.k = p.l = c.n / div;
        p.iterations = o.subsample_iterations;
        p.validate(c.n);
      }
    write_variance_table(variance_table(cells, kinds, o), cfg.experiment, format, out);
  } else if (cfg.experiment == "power") {
    PowerTableOptions o;
    o.alpha = cfg.alpha;
    o.reps = cfg.reps;
    o.subsample_divisor = cfg.divisor;
    o.subsample_iterations = cfg.subsample_iters;
    o.draws = cfg.draws;
    o.tau_mvd = cfg.tau_mvd ? cfg.tau_mvd : cfg.tau;
    o.tau_mmd = cfg.tau_mmd ? cfg.tau_mmd : cfg.tau;
    o.scenarios.clear();
    for (const auto& s : cfg.scenarios) o.scenarios.push_back(parse_scenario(s));
    o.seed = cfg.seed;
    upper_quantile_rank(o.draws, o.alpha);
    for (const auto& c : cells) {
      if (cfg.divisor < 1) throw std::invalid_argument("simulate: divisor must be positive");
      SubsamplingPlan p = SubsamplingPlan::defaults(c.n, c.m, 0);
      p.k = p.l = c.n / cfg.divisor;
      p.iterations = o.subsample_iterations;
      p.validate(c.n);
    }
    write_power_table(type1_power_table(cells, kinds, o), format, out);
  } else {
    throw std::invalid_argument("unknown experiment '" + cfg.experiment +
                                "' (variance, slope, power)");
  }
}

// ---------------------------------------------------------------------------
// Argument parsing and dispatch
// ---------------------------------------------------------------------------

inline void add_kernel_options(CLI::App* app, RunConfig& cfg) {
  app->add_option("--kernel", cfg.kernel, "Kernel family")->check(CLI::IsMember({"gaussian"}));
  app->add_option("--sigma", cfg.sigma, "Bandwidth: auto, d^-3/4, d^-7/8, d^-1, d^-2 or a number");
  app->add_option("--log-scale", cfg.log_scale, "Kernel log-scale C (k' = exp(C) k)");
}

inline void add_output_options(CLI::App* app, RunConfig& cfg) {
  app->add_option("--out", cfg.out, "Output file (default stdout)");
  app->add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
}

inline void add_test_options(CLI::App* app, RunConfig& cfg) {
  app->add_option("--alpha", cfg.alpha, "Significance level");
  app->add_option("--draws", cfg.draws, "Monte Carlo draws J");
  app->add_option("--subsample-iters", cfg.subsample_iters, "Subsampling iterations I");
  app->add_option("--tau", cfg.tau, "Variance inflation tau (default from slope table)");
  app->add_option("--seed", cfg.seed, "RNG seed (default $MVD_SEED)");
  app->add_option("--kind", cfg.kind, "mvd, mmd or both")
      ->check(CLI::IsMember({"mvd", "mmd", "both"}));
}

/// Builds the parser; `cfg` receives the parsed values.
inline std::unique_ptr<CLI::App> make_app(RunConfig& cfg) {
  auto app = std::make_unique<CLI::App>(
      "Kernel two-sample tests based on the maximum variance discrepancy (MVD) and MMD",
      "mvd");
  app->set_version_flag("--version", std::string(kVersion));
  app->require_subcommand(1);

  auto* test = app->add_subcommand("test", "Run a two-sample test on two CSV files");
  test->add_option("--x", cfg.x_path, "CSV file with the X sample")->required();
  test->add_option("--y", cfg.y_path, "CSV file with the Y sample")->required();
  test->add_flag("--header", cfg.header, "Skip a header line in both files");
  add_kernel_options(test, cfg);
  add_test_options(test, cfg);
  test->add_option("--n1", cfg.n1, "Split point of X for subsampling (default n/2)");
  test->add_option("--k", cfg.k, "Subsample size from X[0:n1] (default n/8)");
  test->add_option("--l", cfg.l, "Subsample size from X[n1:n] (default n/8)");
  add_output_options(test, cfg);

  auto* cf = app->add_subcommand("closed-form",
                                 "Population MMD^2 and MVD^2 between N(0,I) and N(t1, sI)");
  cf->add_option("--t", cfg.t, "Mean shift t");
  cf->add_option("--s", cfg.s, "Variance scale s");
  cf->add_option("--d", cfg.d, "Dimension");
  add_kernel_options(cf, cfg);
  add_output_options(cf, cfg);

  auto* curves = app->add_subcommand("curves", "Tabulate MMD^2 and MVD^2 over (t, s) grids");
  curves->add_option("--t-grid", cfg.t_grid, "start:stop:step or comma list");
  curves->add_option("--s-grid", cfg.s_grid, "start:stop:step or comma list");
  curves->add_option("--d", cfg.d, "Dimension");
  add_kernel_options(curves, cfg);
  add_output_options(curves, cfg);

  auto* sim = app->add_subcommand("simulate", "Monte Carlo variance / slope / power tables");
  sim->add_option("--experiment", cfg.experiment, "variance, slope or power")
      ->check(CLI::IsMember({"variance", "slope", "power"}));
  sim->add_option("--sigma", cfg.sigma_rules, "Bandwidth rules")->delimiter(',');
  sim->add_option("--d", cfg.dims, "Dimensions")->delimiter(',');
  sim->add_option("--n", cfg.ns, "X sample sizes")->delimiter(',');
  sim->add_option("--m", cfg.ms, "Y sample sizes (default = n)")->delimiter(',');
  sim->add_option("--reps", cfg.reps, "Replications per cell");
  sim->add_option("--divisors", cfg.divisors, "k = l = n/divisor columns (variance)")
      ->delimiter(',');
  sim->add_option("--divisor", cfg.divisor, "k = l = n/divisor (power)");
  sim->add_option("--subsample-reps", cfg.subsample_reps, "Independent X samples per estimate");
  sim->add_option("--tau-mvd", cfg.tau_mvd, "tau for MVD (power)");
  sim->add_option("--tau-mmd", cfg.tau_mmd, "tau for MMD (power)");
  sim->add_option("--scenarios", cfg.scenarios, "null, Q1, Q2")->delimiter(',');
  add_test_options(sim, cfg);
  cfg.kind = "both";
  add_output_options(sim, cfg);

  return app;
}

inline json error_json(const std::string& type, const std::string& message) {
  json j = meta();
  j["error"] = json{{"type", type}, {"message", message}};
  return j;
}

/// Entry point shared by the executable and the tests. Returns the exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg.seed = default_seed();
  } catch (const std::exception& e) {
    err << error_json("invalid_argument", e.what()).dump() << '\n';
    return 2;
  }
  auto app = make_app(cfg);
  try {
    app->parse(argc, argv);
  } catch (const CLI::Success& e) {  // --help, --version
    return app->exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << error_json("usage", e.what()).dump() << '\n';
    return 2;
  }

  const auto* sub = app->get_subcommands().front();
  cfg.command = sub->get_name();
  if (cfg.command == "test" && sub->count("--kind") == 0) cfg.kind = "mvd";

  try {
    std::ostringstream buffer;
    if (cfg.command == "test")
      cmd_test(cfg, buffer);
    else if (cfg.command == "closed-form")
      cmd_closed_form(cfg, buffer);
    else if (cfg.command == "curves")
      cmd_curves(cfg, buffer);
    else if (cfg.command == "simulate")
      cmd_simulate(cfg, buffer);

    if (cfg.out.empty()) {
      out << buffer.str();
    } else {
      std::ofstream f(cfg.out, std::ios::binary);
      if (!f) throw std::runtime_error("cannot write '" + cfg.out + "'");
      f << buffer.str();
    }
    return 0;
  } catch (const CsvError& e) {
    json j = error_json("csv", e.what());
    j["error"]["line"] = e.line();
    if (e.column()) j["error"]["column"] = e.column();
    err << j.dump() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    err << error_json("invalid_argument", e.what()).dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << error_json("runtime", e.what()).dump() << '\n';
    return 1;
  }
}

}  // namespace mvd::cli
