#pragma once

// Brute-force reference computations used only by the tests. None of these
// call into the library's kernel, centering, statistic or eigen code.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace oracle {

using Points = std::vector<std::vector<double>>;

inline double gauss(const std::vector<double>& a, const std::vector<double>& b, double sigma,
                    double log_scale = 0.0) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
  return std::exp(log_scale) * std::exp(-sigma * d2);
}

/// <phi(a) - mean_A phi, phi(b) - mean_B phi>, by direct summation.
inline double centered_ip(const Points& A, std::size_t ia, const Points& B, std::size_t ib,
                          double sigma, double log_scale) {
  const double na = static_cast<double>(A.size()), nb = static_cast<double>(B.size());
  double v = gauss(A[ia], B[ib], sigma, log_scale);
  double s = 0.0;
  for (const auto& bj : B) s += gauss(A[ia], bj, sigma, log_scale);
  v -= s / nb;
  s = 0.0;
  for (const auto& ai : A) s += gauss(ai, B[ib], sigma, log_scale);
  v -= s / na;
  s = 0.0;
  for (const auto& ai : A)
    for (const auto& bj : B) s += gauss(ai, bj, sigma, log_scale);
  v += s / (na * nb);
  return v;
}

/// ||Sigma(P_hat) - Sigma(Q_hat)||_HS^2 expanded into pairwise squared centered
/// feature inner products. O(n^2 m^2) kernel evaluations.
inline double mvd_norm_expansion(const Points& X, const Points& Y, double sigma,
                                 double log_scale = 0.0) {
  auto block = [&](const Points& A, const Points& B) {
    double s = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i)
      for (std::size_t j = 0; j < B.size(); ++j) {
        const double ip = centered_ip(A, i, B, j, sigma, log_scale);
        s += ip * ip;
      }
    return s / (static_cast<double>(A.size()) * static_cast<double>(B.size()));
  };
  return block(X, X) - 2.0 * block(X, Y) + block(Y, Y);
}

/// Plain V-statistic over all kernel pairs.
inline double mmd_pairwise(const Points& X, const Points& Y, double sigma,
                           double log_scale = 0.0) {
  auto mean_k = [&](const Points& A, const Points& B) {
    double s = 0.0;
    for (const auto& a : A)
      for (const auto& b : B) s += gauss(a, b, sigma, log_scale);
    return s / (static_cast<double>(A.size()) * static_cast<double>(B.size()));
  };
  return mean_k(X, X) + mean_k(Y, Y) - 2.0 * mean_k(X, Y);
}

using Dense = std::vector<std::vector<double>>;

inline Dense matmul(const Dense& a, const Dense& b) {
  Dense c(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < b[0].size(); ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline Dense projection(std::size_t n) {
  Dense p(n, std::vector<double>(n, -1.0 / static_cast<double>(n)));
  for (std::size_t i = 0; i < n; ++i) p[i][i] += 1.0;
  return p;
}

/// P_n A P_m with P formed explicitly.
inline Dense explicit_center(const Dense& a) {
  return matmul(matmul(projection(a.size()), a), projection(a[0].size()));
}

inline Dense kernel_matrix(const Points& A, const Points& B, double sigma, double log_scale = 0) {
  Dense k(A.size(), std::vector<double>(B.size()));
  for (std::size_t i = 0; i < A.size(); ++i)
    for (std::size_t j = 0; j < B.size(); ++j) k[i][j] = gauss(A[i], B[j], sigma, log_scale);
  return k;
}

/// Determinant by the Leibniz permutation sum (fine up to ~7x7).
inline double leibniz_det(const Dense& a) {
  const std::size_t n = a.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double det = 0.0;
  do {
    int inversions = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (perm[i] > perm[j]) ++inversions;
    double term = inversions % 2 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) term *= a[i][perm[i]];
    det += term;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return det;
}

/// Real roots of det(A - x I) for symmetric A, by sign scan plus bisection,
/// sorted descending. Assumes simple, well-separated roots.
inline std::vector<double> charpoly_eigenvalues(const Dense& a, std::size_t grid = 200000) {
  const std::size_t n = a.size();
  double bound = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < n; ++j) r += std::abs(a[i][j]);
    bound = std::max(bound, r);
  }
  bound = bound * 1.01 + 1e-12;
  auto p = [&](double x) {
    Dense b = a;
    for (std::size_t i = 0; i < n; ++i) b[i][i] -= x;
    return leibniz_det(b);
  };
  std::vector<double> roots;
  const double h = 2.0 * bound / static_cast<double>(grid);
  double x0 = -bound, f0 = p(x0);
  for (std::size_t g = 1; g <= grid; ++g) {
    const double x1 = -bound + static_cast<double>(g) * h;
    const double f1 = p(x1);
    if (f1 == 0.0) {
      roots.push_back(x1);
    } else if ((f0 < 0) != (f1 < 0) && f0 != 0.0) {
      double lo = x0, hi = x1, flo = f0;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = p(mid);
        if ((fm < 0) == (flo < 0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    x0 = x1;
    f0 = f1;
  }
  std::sort(roots.rbegin(), roots.rend());
  return roots;
}

/// Composite trapezoid rule on [a, b]; exponentially accurate for smooth
/// integrands that vanish at both ends.
inline double trapezoid(const std::function<double(double)>& f, double a, double b,
                        std::size_t n) {
  const double h = (b - a) / static_cast<double>(n);
  double s = 0.5 * (f(a) + f(b));
  for (std::size_t i = 1; i < n; ++i) s += f(a + static_cast<double>(i) * h);
  return s * h;
}

inline double normal_pdf(double x, double mean, double var) {
  return std::exp(-(x - mean) * (x - mean) / (2.0 * var)) / std::sqrt(2.0 * M_PI * var);
}

/// One-dimensional Gaussian law with a quadrature grid.
struct Law1d {
  double mean, var;
  std::vector<double> nodes, weights;  // weights include the density
  Law1d(double mean_, double var_, std::size_t n = 600) : mean(mean_), var(var_) {
    const double sd = std::sqrt(var), a = mean - 12 * sd, b = mean + 12 * sd;
    const double h = (b - a) / static_cast<double>(n);
    for (std::size_t i = 0; i <= n; ++i) {
      const double x = a + static_cast<double>(i) * h;
      nodes.push_back(x);
      weights.push_back((i == 0 || i == n ? 0.5 : 1.0) * h * normal_pdf(x, mean, var));
    }
  }
  template <typename F>
  double expect(F f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
};

inline double k1(double a, double b, double sigma) { return std::exp(-sigma * (a - b) * (a - b)); }

/// E k(X, X') for X, X' ~ p independent.
inline double kme_norm_sq_1d(const Law1d& p, const Law1d& q, double sigma) {
  return p.expect([&](double x) { return q.expect([&](double y) { return k1(x, y, sigma); }); });
}

/// <Sigma_P, Sigma_Q>_HS = E[(k(X,Y) - mu_Q(X) - mu_P(Y) + <mu_P, mu_Q>)^2],
/// with every mean embedding itself computed by quadrature.
inline double covariance_ip_1d(const Law1d& p, const Law1d& q, double sigma) {
  std::vector<double> mu_q_at_p(p.nodes.size()), mu_p_at_q(q.nodes.size());
  for (std::size_t i = 0; i < p.nodes.size(); ++i)
    mu_q_at_p[i] = q.expect([&](double y) { return k1(p.nodes[i], y, sigma); });
  for (std::size_t j = 0; j < q.nodes.size(); ++j)
    mu_p_at_q[j] = p.expect([&](double x) { return k1(x, q.nodes[j], sigma); });
  double mm = 0.0;
  for (std::size_t i = 0; i < p.nodes.size(); ++i) mm += p.weights[i] * mu_q_at_p[i];
  double s = 0.0;
  for (std::size_t i = 0; i < p.nodes.size(); ++i)
    for (std::size_t j = 0; j < q.nodes.size(); ++j) {
      const double v = k1(p.nodes[i], q.nodes[j], sigma) - mu_q_at_p[i] - mu_p_at_q[j] + mm;
      s += p.weights[i] * q.weights[j] * v * v;
    }
  return s;
}

/// Standard normal quantile by bisection on erfc.
inline double normal_quantile(double prob) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
    (cdf < prob ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Upper-alpha quantile of chi-square with one degree of freedom.
inline double chisq1_upper_quantile(double alpha) {
  const double z = normal_quantile(1.0 - alpha / 2.0);
  return z * z;
}

inline double sample_mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_variance(const std::vector<double>& v) {
  const double m = sample_mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace oracle
