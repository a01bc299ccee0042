#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvd/discrepancy.hpp"
#include "mvd/kernel.hpp"
#include "mvd/rng.hpp"

namespace mvd {

/// Thrown when the spectrum-based law has zero variance but the subsampling
/// variance does not, so no affine correction can match both moments.
class DegenerateSpectrumError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// ---------------------------------------------------------------------------
// Spectral weights
// ---------------------------------------------------------------------------

/// Non-negative eigenvalue estimates of M/n, sorted descending, with the one
/// structurally zero eigenvalue (M 1 = 0) removed.
struct SpectralWeights {
  std::vector<double> lambdas;
  double trace = 0.0;             // sum of lambdas
  double source_trace = 0.0;      // tr(M) / n
  double dropped = 0.0;           // eigenvalue removed as the structural zero
  std::size_t clamped_count = 0;  // retained negatives set to zero
  double clamped_mass = 0.0;      // sum of |negative| values set to zero
  std::size_t large_negative_count = 0;  // negatives below -1e-8 * tr(M)/n

  double sum_of_squares() const {
    double s = 0.0;
    for (double l : lambdas) s += l * l;
    return s;
  }
};

inline constexpr double kSymmetryTolerance = 1e-10;
inline constexpr double kNegativeEigenTolerance = 1e-8;

inline SpectralWeights spectral_weights(const Matrix& source, Index n) {
  if (source.rows() != source.cols())
    throw std::invalid_argument("spectral_weights: source is not square");
  if (source.rows() != n || n < 2)
    throw std::invalid_argument("spectral_weights: source size does not match n");
  const double max_abs = source.cwiseAbs().maxCoeff();
  const double asym = (source - source.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance * std::max(max_abs, 1e-300))
    throw std::invalid_argument("spectral_weights: source is not symmetric");

  const Matrix scaled = source / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(scaled, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("spectral_weights: eigensolver failed");

  SpectralWeights w;
  w.source_trace = scaled.trace();
  const Vector& ev = solver.eigenvalues();  // ascending
  w.dropped = ev[0];
  const double threshold = -kNegativeEigenTolerance * std::max(w.source_trace, 0.0);
  w.lambdas.reserve(static_cast<std::size_t>(n - 1));
  for (Index i = n - 1; i >= 1; --i) {
    double l = ev[i];
    if (l < 0.0) {
      ++w.clamped_count;
      w.clamped_mass += -l;
      if (l < threshold) ++w.large_negative_count;
      l = 0.0;
    }
    w.lambdas.push_back(l);
  }
  for (double l : w.lambdas) w.trace += l;
  return w;
}

inline SpectralWeights spectral_weights(const HMatrix& h) {
  return spectral_weights(h.h, h.n());
}

// ---------------------------------------------------------------------------
// Weighted chi-square sampling
// ---------------------------------------------------------------------------

inline constexpr std::size_t kDrawBlock = 1024;

/// Draws of (1/(rho(1-rho))) * sum_l lambda_l Z_l^2. Draw blocks of
/// kDrawBlock use independent streams derived from (seed, block index).
inline std::vector<double> sample_weighted_chisq(const SpectralWeights& w, double rho,
                                                 std::size_t j, std::uint64_t seed) {
  if (!(rho > 0.0 && rho < 1.0))
    throw std::invalid_argument("sample_weighted_chisq: rho must lie in (0, 1)");
  if (j < 1) throw std::invalid_argument("sample_weighted_chisq: need at least one draw");
  const double factor = 1.0 / (rho * (1.0 - rho));
  std::vector<double> draws(j);
  const std::size_t blocks = (j + kDrawBlock - 1) / kDrawBlock;
  for (std::size_t b = 0; b < blocks; ++b) {
    Engine eng = make_engine(seed, {b});
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t end = std::min(j, (b + 1) * kDrawBlock);
    for (std::size_t i = b * kDrawBlock; i < end; ++i) {
      double s = 0.0;
      for (double l : w.lambdas) {
        const double z = normal(eng);
        s += l * z * z;
      }
      draws[i] = factor * s;
    }
  }
  return draws;
}

// ---------------------------------------------------------------------------
// Subsampling variance
// ---------------------------------------------------------------------------

/// Split X at n1, draw k rows from the first part and l from the second
/// (without replacement) for each of `iterations` rounds. `n_total` and
/// `m_total` are the full test sample sizes used to rescale the variance.
struct SubsamplingPlan {
  Index n1 = 0;
  Index k = 0;
  Index l = 0;
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
  Index n_total = 0;
  Index m_total = 0;

  static SubsamplingPlan defaults(Index n, Index m, std::uint64_t seed) {
    SubsamplingPlan p;
    p.n1 = n / 2;
    p.k = n / 8;
    p.l = n / 8;
    p.seed = seed;
    p.n_total = n;
    p.m_total = m;
    return p;
  }

  void validate(Index x_rows) const {
    if (k < 2 || l < 2)
      throw std::invalid_argument("SubsamplingPlan: k and l must be at least 2 (k=" +
                                  std::to_string(k) + ", l=" + std::to_string(l) + ")");
    if (n1 < 0 || n1 > x_rows)
      throw std::invalid_argument("SubsamplingPlan: n1 out of range");
    if (k > n1)
      throw std::invalid_argument("SubsamplingPlan: k=" + std::to_string(k) +
                                  " exceeds n1=" + std::to_string(n1));
    if (l > x_rows - n1)
      throw std::invalid_argument("SubsamplingPlan: l=" + std::to_string(l) +
                                  " exceeds n-n1=" + std::to_string(x_rows - n1));
    if (iterations < 2)
      throw std::invalid_argument("SubsamplingPlan: need at least 2 iterations");
    if (n_total < 1 || m_total < 1)
      throw std::invalid_argument("SubsamplingPlan: full sample sizes must be positive");
  }

  /// (n+m)^4 / (n^2 m^2) * k^2 l^2 / (k+l)^4
  double variance_scale() const {
    const double n = static_cast<double>(n_total), m = static_cast<double>(m_total);
    const double kk = static_cast<double>(k), ll = static_cast<double>(l);
    const double nm = n + m, kl = kk + ll;
    return (nm * nm * nm * nm) / (n * n * m * m) * (kk * kk * ll * ll) /
           (kl * kl * kl * kl);
  }
};

inline double unbiased_variance(const std::vector<double>& v) {
  if (v.size() < 2) throw std::invalid_argument("unbiased_variance: need 2 values");
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

/// Replicates (k+l) * statistic on the subsample pairs, before rescaling.
inline std::vector<double> subsample_replicates(const Matrix& kx, StatisticKind kind,
                                                const SubsamplingPlan& plan) {
  const Index n = kx.rows();
  plan.validate(n);
  std::vector<Index> first(static_cast<std::size_t>(plan.n1));
  std::vector<Index> second(static_cast<std::size_t>(n - plan.n1));
  std::iota(first.begin(), first.end(), Index{0});
  std::iota(second.begin(), second.end(), plan.n1);

  std::vector<double> reps(plan.iterations);
  std::vector<Index> a(static_cast<std::size_t>(plan.k)), b(static_cast<std::size_t>(plan.l));
  const double size = static_cast<double>(plan.k + plan.l);
  for (std::size_t it = 0; it < plan.iterations; ++it) {
    Engine eng = make_engine(plan.seed, {it});
    std::sample(first.begin(), first.end(), a.begin(), plan.k, eng);
    std::sample(second.begin(), second.end(), b.begin(), plan.l, eng);
    const GramSet g = GramSet::from_blocks(kx(a, a), kx(b, b), kx(a, b));
    reps[it] = size * statistic_value(g, kind).value;
  }
  return reps;
}

/// Subsampling estimate of Var[(n+m) * statistic] from the X-sample Gram matrix.
inline double subsample_variance_from_gram(const Matrix& kx, StatisticKind kind,
                                           const SubsamplingPlan& plan) {
  return plan.variance_scale() * unbiased_variance(subsample_replicates(kx, kind, plan));
}

inline double subsample_variance(const DataMatrix& x, const KernelSpec& spec,
                                 StatisticKind kind, const SubsamplingPlan& plan) {
  plan.validate(x.rows());
  return subsample_variance_from_gram(gram_matrix(x, spec), kind, plan);
}

// ---------------------------------------------------------------------------
// Corrected null law W' = xi * S + c
// ---------------------------------------------------------------------------

struct NullApprox {
  SpectralWeights weights;
  double rho = 0.5;
  double tau = 0.0;
  double v_sub = 0.0;
  double xi = 1.0;
  double c = 0.0;
  double mean_s = 0.0;      // mean of the uncorrected law S
  double variance_s = 0.0;  // variance of S
  std::size_t draws_j = 10000;

  double mean() const { return xi * mean_s + c; }
  double variance() const { return xi * xi * variance_s; }
};

inline NullApprox fit_wprime(const SpectralWeights& w, double rho, double v_sub, double tau,
                             std::size_t draws_j = 10000) {
  if (!(rho > 0.0 && rho < 1.0))
    throw std::invalid_argument("fit_wprime: rho must lie in (0, 1)");
  if (!(v_sub >= 0.0) || !std::isfinite(v_sub))
    throw std::invalid_argument("fit_wprime: v_sub must be finite and non-negative");
  if (!(tau >= 0.0) || !std::isfinite(tau))
    throw std::invalid_argument("fit_wprime: tau must be finite and non-negative");

  NullApprox na;
  na.weights = w;
  na.rho = rho;
  na.tau = tau;
  na.v_sub = v_sub;
  na.draws_j = draws_j;
  const double f = 1.0 / (rho * (1.0 - rho));
  na.mean_s = f * w.trace;
  na.variance_s = 2.0 * f * f * w.sum_of_squares();

  const double target = (1.0 + tau) * v_sub;
  if (na.variance_s == 0.0) {
    if (target > 0.0)
      throw DegenerateSpectrumError(
          "fit_wprime: all weights are zero but the subsampling variance is positive");
    na.xi = 1.0;
    na.c = 0.0;
    return na;
  }
  na.xi = std::sqrt(target / na.variance_s);
  na.c = (1.0 - na.xi) * na.mean_s;
  return na;
}

/// 1-based rank ceil(J (1 - alpha)) of the empirical upper quantile.
inline std::size_t upper_quantile_rank(std::size_t j, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("alpha must lie in (0, 1)");
  const double jd = static_cast<double>(j);
  if (jd * alpha < 1.0 - 1e-9)
    throw std::invalid_argument("need at least ceil(1/alpha) draws, got " + std::to_string(j));
  const double r = jd * (1.0 - alpha);
  // Absorb rounding in J * (1 - alpha) so that e.g. 10000 * 0.95 gives 9500.
  auto rank = static_cast<std::size_t>(std::ceil(r - 1e-9 * std::max(1.0, r)));
  return std::clamp<std::size_t>(rank, 1, j);
}

inline double sorted_upper_quantile(const std::vector<double>& sorted, double alpha) {
  return sorted[upper_quantile_rank(sorted.size(), alpha) - 1];
}

inline std::vector<double> sample_wprime(const NullApprox& na, std::uint64_t seed) {
  std::vector<double> d = sample_weighted_chisq(na.weights, na.rho, na.draws_j, seed);
  for (double& v : d) v = na.xi * v + na.c;
  return d;
}

inline double critical_value(const NullApprox& na, double alpha, std::uint64_t seed) {
  upper_quantile_rank(na.draws_j, alpha);
  std::vector<double> d = sample_wprime(na, seed);
  std::sort(d.begin(), d.end());
  return sorted_upper_quantile(d, alpha);
}

// ---------------------------------------------------------------------------
// Default slope corrections and the full test
// ---------------------------------------------------------------------------

/// Through-origin regression slopes of exact on subsampled variance ("both"
/// sample sizes pooled), minus one, for k = l = n/4, n/6, n/8.
struct TauEntry {
  double k_over_n;
  double mvd;
  double mmd;
};
inline constexpr std::array<TauEntry, 3> kDefaultTau{{
    {1.0 / 4.0, 0.69348, 0.21990},
    {1.0 / 6.0, 0.34798, 0.10951},
    {1.0 / 8.0, 0.30928, 0.11643},
}};

/// Default tau for the subsample fraction k/n nearest to a tabulated one.
inline double default_tau(StatisticKind kind, Index k, Index n) {
  const double ratio = static_cast<double>(k) / static_cast<double>(n);
  const TauEntry* best = &kDefaultTau[0];
  for (const auto& e : kDefaultTau)
    if (std::abs(e.k_over_n - ratio) < std::abs(best->k_over_n - ratio)) best = &e;
  return kind == StatisticKind::mvd ? best->mvd : best->mmd;
}

struct TestOptions {
  double alpha = 0.05;
  std::size_t draws = 10000;
  std::optional<double> tau;
  std::optional<Index> n1, k, l;
  std::size_t subsample_iterations = 1000;
  std::uint64_t seed = 0;

  /// Plan for an X sample of size n and Y of size m; subsampling uses its own
  /// stream derived from the test seed.
  SubsamplingPlan plan_for(Index n, Index m) const {
    SubsamplingPlan p = SubsamplingPlan::defaults(n, m, derive_seed(seed, {1}));
    if (n1) p.n1 = *n1;
    if (k) p.k = *k;
    if (l) p.l = *l;
    p.iterations = subsample_iterations;
    return p;
  }
  std::uint64_t draw_seed() const { return derive_seed(seed, {2}); }
};

struct TestDiagnostics {
  double weights_trace = 0.0;
  double weights_source_trace = 0.0;
  std::size_t weight_count = 0;
  std::size_t clamped_negative_count = 0;
  double clamped_mass = 0.0;
  bool statistic_clamped = false;
  double statistic_raw = 0.0;
  std::uint64_t subsample_seed = 0;
  std::uint64_t draw_seed = 0;
};

struct TestReport {
  StatisticKind kind = StatisticKind::mvd;
  Index n = 0, m = 0, d = 0;
  KernelSpec kernel;
  double statistic = 0.0;  // (n+m) * statistic
  double critical_value = 0.0;
  double critical_value_uncorrected = 0.0;
  double p_value = 1.0;
  bool reject = false;
  double alpha = 0.05;
  double tau = 0.0;
  double v_sub = 0.0;
  double xi = 1.0;
  double c = 0.0;
  double rho = 0.5;
  std::size_t draws = 0;
  SubsamplingPlan plan;
  std::uint64_t seed = 0;
  TestDiagnostics diagnostics;
};

/// Run the test on a prebuilt Gram set (lets callers share one Gram set
/// between the MVD and MMD tests).
inline TestReport run_test_on_gram(const GramSet& g, Index dim, const KernelSpec& spec,
                                   StatisticKind kind, const TestOptions& opts) {
  const Index n = g.n(), m = g.m();
  const std::size_t rank = upper_quantile_rank(opts.draws, opts.alpha);

  TestReport r;
  r.kind = kind;
  r.n = n;
  r.m = m;
  r.d = dim;
  r.kernel = spec;
  r.alpha = opts.alpha;
  r.draws = opts.draws;
  r.seed = opts.seed;
  r.rho = static_cast<double>(n) / static_cast<double>(n + m);

  const StatisticValue sv = statistic_value(g, kind);
  r.statistic = static_cast<double>(n + m) * sv.value;

  const SpectralWeights w = spectral_weights(spectrum_source(g, kind), n);

  r.plan = opts.plan_for(n, m);
  r.v_sub = subsample_variance_from_gram(g.k_x, kind, r.plan);
  r.tau = opts.tau ? *opts.tau : default_tau(kind, r.plan.k, n);

  const NullApprox na = fit_wprime(w, r.rho, r.v_sub, r.tau, opts.draws);
  r.xi = na.xi;
  r.c = na.c;

  std::vector<double> s = sample_weighted_chisq(w, r.rho, opts.draws, opts.draw_seed());
  std::sort(s.begin(), s.end());
  r.critical_value_uncorrected = s[rank - 1];
  std::size_t exceed = 0;
  for (double& v : s) {
    v = na.xi * v + na.c;
    if (v >= r.statistic) ++exceed;
  }
  r.critical_value = s[rank - 1];
  r.p_value = static_cast<double>(exceed) / static_cast<double>(opts.draws);
  r.reject = r.statistic > r.critical_value;

  r.diagnostics.weights_trace = w.trace;
  r.diagnostics.weights_source_trace = w.source_trace;
  r.diagnostics.weight_count = w.lambdas.size();
  r.diagnostics.clamped_negative_count = w.clamped_count;
  r.diagnostics.clamped_mass = w.clamped_mass;
  r.diagnostics.statistic_clamped = sv.clamped();
  r.diagnostics.statistic_raw = sv.raw;
  r.diagnostics.subsample_seed = r.plan.seed;
  r.diagnostics.draw_seed = opts.draw_seed();
  return r;
}

inline TestReport run_test(const DataMatrix& x, const DataMatrix& y, const KernelSpec& spec,
                           StatisticKind kind, const TestOptions& opts = {}) {
  return run_test_on_gram(build_gram_set(x, y, spec), x.cols(), spec, kind, opts);
}

}  // namespace mvd
