#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mvd/discrepancy.hpp"
#include "mvd/kernel.hpp"
#include "mvd/null_approx.hpp"
#include "mvd/rng.hpp"

namespace mvd {

// ---------------------------------------------------------------------------
// Distributions
// ---------------------------------------------------------------------------

enum class DistributionFamily {
  std_normal,
  uniform_unit,          // U(-sqrt 3, sqrt 3) per coordinate
  centered_exponential,  // Exp(1) - 1 per coordinate
  gaussian,              // N(mean, cov)
  local_mixture,         // (1 - 1/sqrt(N)) P + (1/sqrt(N)) Q
};

struct DistributionSpec {
  DistributionFamily family = DistributionFamily::std_normal;
  Index dim = 1;
  Vector mean;
  Matrix cov;
  std::shared_ptr<const DistributionSpec> base;
  std::shared_ptr<const DistributionSpec> alternative;
  double n_plus_m = 0.0;

  static DistributionSpec std_normal(Index d) { return scalar(DistributionFamily::std_normal, d); }
  static DistributionSpec uniform_unit(Index d) { return scalar(DistributionFamily::uniform_unit, d); }
  static DistributionSpec centered_exponential(Index d) {
    return scalar(DistributionFamily::centered_exponential, d);
  }
  static DistributionSpec gaussian(Vector mean, Matrix cov) {
    DistributionSpec s;
    s.family = DistributionFamily::gaussian;
    s.dim = mean.size();
    s.mean = std::move(mean);
    s.cov = std::move(cov);
    s.validate();
    return s;
  }
  static DistributionSpec local_mixture(DistributionSpec p, DistributionSpec q, double n_plus_m) {
    DistributionSpec s;
    s.family = DistributionFamily::local_mixture;
    s.dim = p.dim;
    s.base = std::make_shared<const DistributionSpec>(std::move(p));
    s.alternative = std::make_shared<const DistributionSpec>(std::move(q));
    s.n_plus_m = n_plus_m;
    s.validate();
    return s;
  }

  /// Probability that a local-mixture row comes from the alternative.
  double alternative_weight() const { return 1.0 / std::sqrt(n_plus_m); }

  void validate() const {
    if (dim < 1) throw std::invalid_argument("DistributionSpec: dimension must be positive");
    switch (family) {
      case DistributionFamily::gaussian: {
        if (mean.size() != dim || cov.rows() != dim || cov.cols() != dim)
          throw std::invalid_argument("DistributionSpec: gaussian parameter shapes");
        Eigen::LLT<Matrix> llt(cov);
        if (llt.info() != Eigen::Success)
          throw std::invalid_argument("DistributionSpec: covariance is not positive definite");
        break;
      }
      case DistributionFamily::local_mixture:
        if (!base || !alternative)
          throw std::invalid_argument("DistributionSpec: mixture components missing");
        base->validate();
        alternative->validate();
        if (base->dim != dim || alternative->dim != dim)
          throw std::invalid_argument("DistributionSpec: mixture component dimensions differ");
        if (!(n_plus_m >= 1.0))
          throw std::invalid_argument("DistributionSpec: n_plus_m must be at least 1");
        break;
      default:
        break;
    }
  }

 private:
  static DistributionSpec scalar(DistributionFamily f, Index d) {
    DistributionSpec s;
    s.family = f;
    s.dim = d;
    s.validate();
    return s;
  }
};

namespace detail {

class RowSampler {
 public:
  explicit RowSampler(const DistributionSpec& dist) : dist_(dist) {
    if (dist.family == DistributionFamily::gaussian) chol_ = Eigen::LLT<Matrix>(dist.cov).matrixL();
    if (dist.family == DistributionFamily::local_mixture) {
      base_ = std::make_unique<RowSampler>(*dist.base);
      alt_ = std::make_unique<RowSampler>(*dist.alternative);
    }
  }

  template <typename Row>
  void draw(Engine& eng, Row&& row) {
    switch (dist_.family) {
      case DistributionFamily::std_normal:
        for (Index j = 0; j < dist_.dim; ++j) row[j] = normal_(eng);
        return;
      case DistributionFamily::uniform_unit: {
        const double a = std::sqrt(3.0);
        std::uniform_real_distribution<double> u(-a, a);
        for (Index j = 0; j < dist_.dim; ++j) row[j] = u(eng);
        return;
      }
      case DistributionFamily::centered_exponential: {
        std::exponential_distribution<double> e(1.0);
        for (Index j = 0; j < dist_.dim; ++j) row[j] = e(eng) - 1.0;
        return;
      }
      case DistributionFamily::gaussian: {
        Vector z(dist_.dim);
        for (Index j = 0; j < dist_.dim; ++j) z[j] = normal_(eng);
        const Vector v = dist_.mean + chol_ * z;
        for (Index j = 0; j < dist_.dim; ++j) row[j] = v[j];
        return;
      }
      case DistributionFamily::local_mixture: {
        std::bernoulli_distribution pick_alt(dist_.alternative_weight());
        if (pick_alt(eng))
          alt_->draw(eng, row);
        else
          base_->draw(eng, row);
        return;
      }
    }
  }

 private:
  const DistributionSpec& dist_;
  Matrix chol_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::unique_ptr<RowSampler> base_, alt_;
};

}  // namespace detail

/// n i.i.d. rows from `dist`, deterministic given the seed.
inline DataMatrix sample(const DistributionSpec& dist, Index n, std::uint64_t seed) {
  dist.validate();
  if (n < 2) throw std::invalid_argument("sample: need at least 2 rows");
  Matrix out(n, dist.dim);
  Engine eng = make_engine(seed);
  detail::RowSampler sampler(dist);
  for (Index i = 0; i < n; ++i) sampler.draw(eng, out.row(i));
  return DataMatrix(std::move(out));
}

// ---------------------------------------------------------------------------
// Bandwidth presets and experiment cells
// ---------------------------------------------------------------------------

enum class SigmaRule { d_pow_neg_3_4, d_pow_neg_7_8, d_inv, d_inv_sq };

inline double sigma_for(SigmaRule rule, Index d) {
  const double dd = static_cast<double>(d);
  switch (rule) {
    case SigmaRule::d_pow_neg_3_4: return std::pow(dd, -0.75);
    case SigmaRule::d_pow_neg_7_8: return std::pow(dd, -0.875);
    case SigmaRule::d_inv: return 1.0 / dd;
    case SigmaRule::d_inv_sq: return 1.0 / (dd * dd);
  }
  throw std::invalid_argument("sigma_for: unknown rule");
}

inline std::string_view to_string(SigmaRule rule) {
  switch (rule) {
    case SigmaRule::d_pow_neg_3_4: return "d^-3/4";
    case SigmaRule::d_pow_neg_7_8: return "d^-7/8";
    case SigmaRule::d_inv: return "d^-1";
    case SigmaRule::d_inv_sq: return "d^-2";
  }
  return "?";
}

/// Accepts the preset names and "auto" (= d^-3/4). Returns nullopt for
/// anything else so callers can try a numeric value.
inline std::optional<SigmaRule> parse_sigma_rule(std::string_view s) {
  if (s == "auto" || s == "d^-3/4") return SigmaRule::d_pow_neg_3_4;
  if (s == "d^-7/8") return SigmaRule::d_pow_neg_7_8;
  if (s == "d^-1") return SigmaRule::d_inv;
  if (s == "d^-2") return SigmaRule::d_inv_sq;
  return std::nullopt;
}

struct Cell {
  SigmaRule sigma_rule = SigmaRule::d_pow_neg_3_4;
  Index d = 5;
  Index n = 200;
  Index m = 200;

  double sigma() const { return sigma_for(sigma_rule, d); }
};

// ---------------------------------------------------------------------------
// Variance experiments
// ---------------------------------------------------------------------------

/// Draws an n x d sample from a seed.
using Sampler = std::function<DataMatrix(Index rows, std::uint64_t seed)>;

inline Sampler sampler_for(DistributionSpec dist) {
  return [dist = std::move(dist)](Index rows, std::uint64_t seed) {
    return sample(dist, rows, seed);
  };
}

struct MomentEstimate {
  double mean = 0.0;
  double variance = 0.0;     // unbiased
  double variance_se = 0.0;  // large-sample standard error of `variance`
  std::size_t count = 0;
};

inline MomentEstimate moment_estimate(const std::vector<double>& v) {
  MomentEstimate e;
  e.count = v.size();
  if (v.empty()) return e;
  double s = 0.0;
  for (double x : v) s += x;
  e.mean = s / static_cast<double>(v.size());
  if (v.size() < 2) return e;
  double m2 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double dev = x - e.mean;
    m2 += dev * dev;
    m4 += dev * dev * dev * dev;
  }
  const double r = static_cast<double>(v.size());
  e.variance = m2 / (r - 1.0);
  m4 /= r;
  const double var_of_var = (m4 - e.variance * e.variance * (r - 3.0) / (r - 1.0)) / r;
  e.variance_se = std::sqrt(std::max(var_of_var, 0.0));
  return e;
}

/// Replicates (n+m) * statistic over `reps` independent sample pairs, one
/// vector per requested kind (in the order given).
inline std::vector<std::vector<double>> simulate_statistics(
    const Sampler& sampler_x, const Sampler& sampler_y, Index n, Index m,
    const KernelSpec& spec, const std::vector<StatisticKind>& kinds, std::size_t reps,
    std::uint64_t seed) {
  std::vector<std::vector<double>> out(kinds.size(), std::vector<double>(reps));
  const double size = static_cast<double>(n + m);
  for (std::size_t r = 0; r < reps; ++r) {
    const DataMatrix x = sampler_x(n, derive_seed(seed, {r, 0}));
    const DataMatrix y = sampler_y(m, derive_seed(seed, {r, 1}));
    const GramSet g = build_gram_set(x, y, spec);
    for (std::size_t k = 0; k < kinds.size(); ++k)
      out[k][r] = size * statistic_value(g, kinds[k]).value;
  }
  return out;
}

struct SubsampleEstimate {
  int divisor = 8;  // k = l = n / divisor
  Index k = 0, l = 0;
  MomentEstimate estimate;  // over subsample_reps independent X samples
};

struct VarianceRow {
  Cell cell;
  StatisticKind kind = StatisticKind::mvd;
  MomentEstimate exact;  // Var[(n+m) * statistic] over reps replications
  std::vector<SubsampleEstimate> subsampling;
};

struct VarianceTableOptions {
  std::size_t reps = 2000;
  std::vector<int> subsample_divisors{4, 6, 8};
  std::size_t subsample_iterations = 1000;
  std::size_t subsample_reps = 1;
  std::uint64_t seed = 0;
};

struct VarianceTable {
  VarianceTableOptions options;
  std::vector<Cell> cells;
  std::vector<StatisticKind> kinds;
  std::vector<VarianceRow> rows;
};

/// Simulated exact variance of (n+m) * statistic under P = Q = N(0, I_d) and
/// the subsampling estimate for each k = l = n / divisor.
inline VarianceTable variance_table(const std::vector<Cell>& cells,
                                    const std::vector<StatisticKind>& kinds,
                                    const VarianceTableOptions& opts) {
  if (opts.reps < 2) throw std::invalid_argument("variance_table: reps must be at least 2");
  if (kinds.empty()) throw std::invalid_argument("variance_table: no statistic kinds");
  VarianceTable table{opts, cells, kinds, {}};
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const Cell& cell = cells[ci];
    const KernelSpec spec{KernelFamily::gaussian, cell.sigma(), 0.0};
    const Sampler normal = sampler_for(DistributionSpec::std_normal(cell.d));
    const auto exact = simulate_statistics(normal, normal, cell.n, cell.m, spec, kinds,
                                           opts.reps, derive_seed(opts.seed, {ci, 0}));

    // subsamples[kind][divisor] -> values over subsample_reps
    std::vector<std::vector<std::vector<double>>> subs(
        kinds.size(), std::vector<std::vector<double>>(opts.subsample_divisors.size()));
    for (std::size_t sr = 0; sr < opts.subsample_reps; ++sr) {
      const DataMatrix x = normal(cell.n, derive_seed(opts.seed, {ci, 1, sr}));
      const Matrix kx = gram_matrix(x, spec);
      for (std::size_t di = 0; di < opts.subsample_divisors.size(); ++di) {
        SubsamplingPlan plan = SubsamplingPlan::defaults(
            cell.n, cell.m, derive_seed(opts.seed, {ci, 2, sr, di}));
        plan.k = plan.l = cell.n / opts.subsample_divisors[di];
        plan.iterations = opts.subsample_iterations;
        for (std::size_t k = 0; k < kinds.size(); ++k)
          subs[k][di].push_back(subsample_variance_from_gram(kx, kinds[k], plan));
      }
    }

    for (std::size_t k = 0; k < kinds.size(); ++k) {
      VarianceRow row;
      row.cell = cell;
      row.kind = kinds[k];
      row.exact = moment_estimate(exact[k]);
      for (std::size_t di = 0; di < opts.subsample_divisors.size(); ++di) {
        SubsampleEstimate se;
        se.divisor = opts.subsample_divisors[di];
        se.k = se.l = cell.n / se.divisor;
        se.estimate = moment_estimate(subs[k][di]);
        row.subsampling.push_back(se);
      }
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

/// Least-squares slope of y = a x through the origin: sum(xy) / sum(x^2).
inline double slope_regression(const std::vector<std::pair<double, double>>& pairs) {
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [x, y] : pairs) {
    sxy += x * y;
    sxx += x * x;
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("slope_regression: all x values are zero");
  return sxy / sxx;
}

/// Slope of exact on subsampled variance for one kind and one k = n/divisor
/// column of a variance table.
inline double table_slope(const VarianceTable& table, StatisticKind kind, int divisor) {
  std::vector<std::pair<double, double>> pairs;
  for (const auto& row : table.rows) {
    if (row.kind != kind) continue;
    for (const auto& s : row.subsampling)
      if (s.divisor == divisor) pairs.emplace_back(s.estimate.mean, row.exact.variance);
  }
  return slope_regression(pairs);
}

// ---------------------------------------------------------------------------
// Type-I error and power
// ---------------------------------------------------------------------------

enum class Scenario { null, uniform, exponential };

inline std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::null: return "null";
    case Scenario::uniform: return "Q1_uniform";
    case Scenario::exponential: return "Q2_exponential";
  }
  return "?";
}

inline DistributionSpec scenario_distribution(Scenario s, Index d) {
  switch (s) {
    case Scenario::null: return DistributionSpec::std_normal(d);
    case Scenario::uniform: return DistributionSpec::uniform_unit(d);
    case Scenario::exponential: return DistributionSpec::centered_exponential(d);
  }
  throw std::invalid_argument("scenario_distribution: unknown scenario");
}

struct RateEstimate {
  std::size_t rejections = 0;
  std::size_t reps = 0;
  double rate() const { return reps ? static_cast<double>(rejections) / static_cast<double>(reps) : 0.0; }
  double se() const {
    if (!reps) return 0.0;
    const double p = rate();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(reps));
  }
};

struct PowerRow {
  Cell cell;
  Scenario scenario = Scenario::null;
  StatisticKind kind = StatisticKind::mvd;
  double tau = 0.0;
  RateEstimate rate;
};

struct PowerTableOptions {
  double alpha = 0.05;
  std::size_t reps = 500;
  int subsample_divisor = 8;
  std::size_t subsample_iterations = 1000;
  std::size_t draws = 10000;
  std::optional<double> tau_mvd;  // defaults from the slope table
  std::optional<double> tau_mmd;
  std::vector<Scenario> scenarios{Scenario::null, Scenario::uniform, Scenario::exponential};
  std::uint64_t seed = 0;
};

struct PowerTable {
  PowerTableOptions options;
  std::vector<Cell> cells;
  std::vector<StatisticKind> kinds;
  std::vector<PowerRow> rows;
};

/// Rejection rates of the corrected test with X ~ N(0, I_d) and Y drawn from
/// each scenario. MVD and MMD share the data of every replication.
inline PowerTable type1_power_table(const std::vector<Cell>& cells,
                                    const std::vector<StatisticKind>& kinds,
                                    const PowerTableOptions& opts) {
  if (opts.reps < 1) throw std::invalid_argument("type1_power_table: reps must be positive");
  if (kinds.empty()) throw std::invalid_argument("type1_power_table: no statistic kinds");
  PowerTable table{opts, cells, kinds, {}};
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const Cell& cell = cells[ci];
    const KernelSpec spec{KernelFamily::gaussian, cell.sigma(), 0.0};
    const DistributionSpec p = DistributionSpec::std_normal(cell.d);
    for (Scenario sc : opts.scenarios) {
      const DistributionSpec q = scenario_distribution(sc, cell.d);
      std::vector<PowerRow> rows(kinds.size());
      for (std::size_t k = 0; k < kinds.size(); ++k) {
        rows[k].cell = cell;
        rows[k].scenario = sc;
        rows[k].kind = kinds[k];
        const auto& tau_opt = kinds[k] == StatisticKind::mvd ? opts.tau_mvd : opts.tau_mmd;
        rows[k].tau = tau_opt ? *tau_opt
                              : default_tau(kinds[k], cell.n / opts.subsample_divisor, cell.n);
        rows[k].rate.reps = opts.reps;
      }
      const auto sc_index = static_cast<std::uint64_t>(sc);
      for (std::size_t r = 0; r < opts.reps; ++r) {
        const DataMatrix x = sample(p, cell.n, derive_seed(opts.seed, {ci, sc_index, r, 0}));
        const DataMatrix y = sample(q, cell.m, derive_seed(opts.seed, {ci, sc_index, r, 1}));
        const GramSet g = build_gram_set(x, y, spec);
        for (std::size_t k = 0; k < kinds.size(); ++k) {
          TestOptions to;
          to.alpha = opts.alpha;
          to.draws = opts.draws;
          to.tau = rows[k].tau;
          to.k = to.l = cell.n / opts.subsample_divisor;
          to.subsample_iterations = opts.subsample_iterations;
          to.seed = derive_seed(opts.seed, {ci, sc_index, r, 2});
          if (run_test_on_gram(g, cell.d, spec, kinds[k], to).reject) ++rows[k].rate.rejections;
        }
      }
      for (auto& row : rows) table.rows.push_back(std::move(row));
    }
  }
  return table;
}

}  // namespace mvd
