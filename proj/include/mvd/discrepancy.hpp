#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "mvd/kernel.hpp"

namespace mvd {

enum class StatisticKind { mvd, mmd };

inline std::string_view to_string(StatisticKind k) {
  return k == StatisticKind::mvd ? "mvd" : "mmd";
}

inline StatisticKind parse_statistic_kind(std::string_view s) {
  if (s == "mvd") return StatisticKind::mvd;
  if (s == "mmd") return StatisticKind::mmd;
  throw std::invalid_argument("unknown statistic kind '" + std::string(s) + "'");
}

/// A squared-norm statistic. `raw` is the value before clamping negatives
/// produced by cancellation.
struct StatisticValue {
  double value = 0.0;
  double raw = 0.0;
  bool clamped() const noexcept { return raw < 0.0; }
};

namespace detail {

// Sum of squared entries, accumulated per column then combined in index order.
inline double frobenius_sq(const Matrix& a) {
  double total = 0.0;
  for (Index j = 0; j < a.cols(); ++j) {
    double s = 0.0;
    for (Index i = 0; i < a.rows(); ++i) s += a(i, j) * a(i, j);
    total += s;
  }
  return total;
}

inline double entry_sum(const Matrix& a) {
  double total = 0.0;
  for (Index j = 0; j < a.cols(); ++j) {
    double s = 0.0;
    for (Index i = 0; i < a.rows(); ++i) s += a(i, j);
    total += s;
  }
  return total;
}

inline StatisticValue clamp_nonnegative(double raw) {
  return StatisticValue{raw < 0.0 ? 0.0 : raw, raw};
}

}  // namespace detail

/// Squared Hilbert-Schmidt distance between the empirical covariance
/// operators: |Kc_x|_F^2 / n^2 - 2 |Kc_xy|_F^2 / (nm) + |Kc_y|_F^2 / m^2.
inline StatisticValue mvd_statistic_value(const GramSet& g) {
  const double n = static_cast<double>(g.n());
  const double m = static_cast<double>(g.m());
  const double raw = detail::frobenius_sq(g.kc_x) / (n * n) -
                     2.0 * detail::frobenius_sq(g.kc_xy) / (n * m) +
                     detail::frobenius_sq(g.kc_y) / (m * m);
  return detail::clamp_nonnegative(raw);
}

/// Biased (V-statistic) squared distance between empirical mean embeddings.
inline StatisticValue mmd_statistic_value(const GramSet& g) {
  const double n = static_cast<double>(g.n());
  const double m = static_cast<double>(g.m());
  const double raw = detail::entry_sum(g.k_x) / (n * n) +
                     detail::entry_sum(g.k_y) / (m * m) -
                     2.0 * detail::entry_sum(g.k_xy) / (n * m);
  return detail::clamp_nonnegative(raw);
}

inline double mvd_statistic(const GramSet& g) { return mvd_statistic_value(g).value; }
inline double mmd_statistic(const GramSet& g) { return mmd_statistic_value(g).value; }

inline StatisticValue statistic_value(const GramSet& g, StatisticKind kind) {
  return kind == StatisticKind::mvd ? mvd_statistic_value(g) : mmd_statistic_value(g);
}

/// H = P_n (Kc_x o Kc_x) P_n. Its spectrum divided by n carries the weights of
/// the null law of (n+m) * MVD statistic.
struct HMatrix {
  Matrix h;
  Index n() const noexcept { return h.rows(); }
};

inline HMatrix h_matrix(const GramSet& g) {
  if (g.kc_x.rows() < 2 || g.kc_x.rows() != g.kc_x.cols())
    throw std::invalid_argument("h_matrix: centered X Gram matrix missing");
  return HMatrix{double_center(g.kc_x.cwiseProduct(g.kc_x))};
}

/// Source matrix whose spectrum / n gives the null weights for `kind`:
/// H for MVD, the centered X Gram matrix for MMD.
inline Matrix spectrum_source(const GramSet& g, StatisticKind kind) {
  return kind == StatisticKind::mvd ? h_matrix(g).h : g.kc_x;
}

}  // namespace mvd
