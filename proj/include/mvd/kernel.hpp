#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace mvd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// An n x d table of finite observations, one row per sample point.
class DataMatrix {
 public:
  DataMatrix() = default;

  explicit DataMatrix(Matrix values) : values_(std::move(values)) {
    if (values_.rows() < 2)
      throw std::invalid_argument("DataMatrix: need at least 2 rows, got " +
                                  std::to_string(values_.rows()));
    if (values_.cols() < 1)
      throw std::invalid_argument("DataMatrix: need at least 1 column");
    if (!values_.allFinite())
      throw std::invalid_argument("DataMatrix: non-finite entry");
  }

  Index rows() const noexcept { return values_.rows(); }
  Index cols() const noexcept { return values_.cols(); }
  const Matrix& values() const noexcept { return values_; }
  auto row(Index i) const { return values_.row(i); }

  /// Rows picked by index, in the given order.
  template <typename IndexRange>
  DataMatrix select_rows(const IndexRange& idx) const {
    Matrix out(static_cast<Index>(std::size(idx)), cols());
    Index r = 0;
    for (auto i : idx) out.row(r++) = values_.row(static_cast<Index>(i));
    return DataMatrix(std::move(out));
  }

  friend bool operator==(const DataMatrix& a, const DataMatrix& b) {
    return a.values_.rows() == b.values_.rows() &&
           a.values_.cols() == b.values_.cols() &&
           (a.values_.array() == b.values_.array()).all();
  }

 private:
  Matrix values_;
};

enum class KernelFamily { gaussian };

/// k'(x, y) = exp(C) * exp(-sigma * |x - y|^2).
struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double sigma = 1.0;
  double log_scale = 0.0;

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
      throw std::invalid_argument("KernelSpec: sigma must be positive and finite");
    if (!std::isfinite(log_scale))
      throw std::invalid_argument("KernelSpec: log_scale must be finite");
  }

  double scale() const { return std::exp(log_scale); }
};

namespace detail {

template <typename A, typename B>
double squared_distance(const A& x, const B& y) {
  double s = 0.0;
  for (Index j = 0; j < x.size(); ++j) {
    const double diff = x[j] - y[j];
    s += diff * diff;
  }
  return s;
}

inline double gaussian_from_sqdist(double sqdist, double sigma, double scale) {
  return scale * std::exp(-sigma * sqdist);
}

}  // namespace detail

template <typename A, typename B>
double kernel_eval(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y,
                   const KernelSpec& spec) {
  spec.validate();
  if (x.size() != y.size())
    throw std::invalid_argument("kernel_eval: dimension mismatch (" +
                                std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()) + ")");
  if (!x.allFinite() || !y.allFinite())
    throw std::invalid_argument("kernel_eval: non-finite input");
  switch (spec.family) {
    case KernelFamily::gaussian:
      return detail::gaussian_from_sqdist(detail::squared_distance(x, y),
                                          spec.sigma, spec.scale());
  }
  throw std::invalid_argument("kernel_eval: unknown kernel family");
}

/// Symmetric within-sample Gram matrix. Only the upper triangle is evaluated;
/// the lower triangle is a copy, so the result is exactly symmetric.
inline Matrix gram_matrix(const DataMatrix& x, const KernelSpec& spec) {
  spec.validate();
  const Index n = x.rows();
  const double scale = spec.scale();
  const Matrix& v = x.values();
  Matrix k(n, n);
  for (Index i = 0; i < n; ++i) {
    k(i, i) = detail::gaussian_from_sqdist(0.0, spec.sigma, scale);
    for (Index j = i + 1; j < n; ++j) {
      const double kij = detail::gaussian_from_sqdist(
          detail::squared_distance(v.row(i), v.row(j)), spec.sigma, scale);
      k(i, j) = kij;
      k(j, i) = kij;
    }
  }
  return k;
}

inline Matrix cross_gram_matrix(const DataMatrix& x, const DataMatrix& y,
                                const KernelSpec& spec) {
  spec.validate();
  if (x.cols() != y.cols())
    throw std::invalid_argument("cross_gram_matrix: dimension mismatch");
  const double scale = spec.scale();
  const Matrix& a = x.values();
  const Matrix& b = y.values();
  Matrix k(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.rows(); ++j)
      k(i, j) = detail::gaussian_from_sqdist(
          detail::squared_distance(a.row(i), b.row(j)), spec.sigma, scale);
  return k;
}

/// Double-centering P_n A P_m computed as A - row means - column means + grand
/// mean. Row and column sums are accumulated in index order, and each entry is
/// formed as (a - (r_i + c_j)) + g, so a symmetric input gives an exactly
/// symmetric output.
inline Matrix double_center(const Matrix& a) {
  const Index n = a.rows();
  const Index m = a.cols();
  Vector row_mean = Vector::Zero(n);
  Vector col_mean = Vector::Zero(m);
  for (Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Index j = 0; j < m; ++j) s += a(i, j);
    row_mean[i] = s / static_cast<double>(m);
  }
  for (Index j = 0; j < m; ++j) {
    double s = 0.0;
    for (Index i = 0; i < n; ++i) s += a(i, j);
    col_mean[j] = s / static_cast<double>(n);
  }
  double grand = 0.0;
  for (Index i = 0; i < n; ++i) grand += row_mean[i];
  grand /= static_cast<double>(n);

  Matrix out(n, m);
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < n; ++i)
      out(i, j) = (a(i, j) - (row_mean[i] + col_mean[j])) + grand;
  return out;
}

/// Within- and cross-sample Gram matrices with their centered versions.
struct GramSet {
  Matrix k_x, k_y, k_xy;
  Matrix kc_x, kc_y, kc_xy;

  Index n() const noexcept { return k_x.rows(); }
  Index m() const noexcept { return k_y.rows(); }

  /// Assemble from already evaluated kernel blocks (e.g. submatrices of a
  /// larger Gram matrix).
  static GramSet from_blocks(Matrix kx, Matrix ky, Matrix kxy) {
    if (kx.rows() < 2 || ky.rows() < 2)
      throw std::invalid_argument("GramSet: need at least 2 points per sample");
    if (kx.rows() != kx.cols() || ky.rows() != ky.cols() ||
        kxy.rows() != kx.rows() || kxy.cols() != ky.rows())
      throw std::invalid_argument("GramSet: inconsistent block shapes");
    GramSet g;
    g.kc_x = double_center(kx);
    g.kc_y = double_center(ky);
    g.kc_xy = double_center(kxy);
    g.k_x = std::move(kx);
    g.k_y = std::move(ky);
    g.k_xy = std::move(kxy);
    return g;
  }
};

inline GramSet build_gram_set(const DataMatrix& x, const DataMatrix& y,
                              const KernelSpec& spec) {
  if (x.cols() != y.cols())
    throw std::invalid_argument("build_gram_set: dimension mismatch (" +
                                std::to_string(x.cols()) + " vs " +
                                std::to_string(y.cols()) + ")");
  if (x.rows() < 2 || y.rows() < 2)
    throw std::invalid_argument("build_gram_set: need at least 2 rows per sample");
  return GramSet::from_blocks(gram_matrix(x, spec), gram_matrix(y, spec),
                              cross_gram_matrix(x, y, spec));
}

}  // namespace mvd
