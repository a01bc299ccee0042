#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mvd/kernel.hpp"

// Population MMD^2 and MVD^2 between Gaussians under the Gaussian kernel
// exp(C) * exp(-sigma |x - y|^2). The reference distribution P is N(0, I_d).

namespace mvd {

struct GaussianSpec {
  Vector mean;
  Matrix cov;

  static GaussianSpec standard(Index d) {
    return GaussianSpec{Vector::Zero(d), Matrix::Identity(d, d)};
  }
  /// N(t * 1, s * I_d)
  static GaussianSpec isotropic(Index d, double t, double s) {
    return GaussianSpec{Vector::Constant(d, t), s * Matrix::Identity(d, d)};
  }

  Index dim() const { return mean.size(); }

  void validate() const {
    const Index d = mean.size();
    if (d < 1) throw std::invalid_argument("GaussianSpec: empty mean");
    if (cov.rows() != d || cov.cols() != d)
      throw std::invalid_argument("GaussianSpec: covariance shape does not match mean");
    if (!mean.allFinite() || !cov.allFinite())
      throw std::invalid_argument("GaussianSpec: non-finite parameter");
    const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw std::invalid_argument("GaussianSpec: covariance is not symmetric");
  }
};

namespace detail {

struct Spectrum {
  Vector eigenvalues;  // of the covariance
  Vector rotated_mean; // U^T m
};

inline Spectrum spectrum_of(const GaussianSpec& q) {
  q.validate();
  Eigen::SelfAdjointEigenSolver<Matrix> es(q.cov);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("GaussianSpec: eigendecomposition failed");
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("GaussianSpec: covariance is not positive definite");
  return Spectrum{es.eigenvalues(), es.eigenvectors().transpose() * q.mean};
}

inline void check_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("sigma must be positive and finite");
}

// For A = a I + b Sigma + c Sigma^2 (diagonal in Sigma's eigenbasis):
// returns log|A| and m^T A^{-1} m.
struct QuadTerm {
  double log_det;
  double quad;
};

inline QuadTerm quad_term(const Spectrum& sp, double a, double b, double c = 0.0) {
  QuadTerm t{0.0, 0.0};
  for (Index i = 0; i < sp.eigenvalues.size(); ++i) {
    const double l = sp.eigenvalues[i];
    const double e = a + b * l + c * l * l;
    t.log_det += std::log(e);
    t.quad += sp.rotated_mean[i] * sp.rotated_mean[i] / e;
  }
  return t;
}

// |A|^{-power} * exp(-coef * m^T A^{-1} m)
inline double det_exp(const QuadTerm& t, double power, double coef) {
  return std::exp(-power * t.log_det - coef * t.quad);
}

// log|A| and d^T A^{-1} d for a general SPD matrix.
inline QuadTerm general_term(const Matrix& a, const Vector& delta) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("matrix is not positive definite");
  const Matrix& l = llt.matrixL();
  double log_det = 0.0;
  for (Index i = 0; i < l.rows(); ++i) log_det += 2.0 * std::log(l(i, i));
  return QuadTerm{log_det, delta.dot(llt.solve(delta))};
}

}  // namespace detail

/// |mu_k(N(m, Sigma))|^2 = |I + 4 sigma Sigma|^{-1/2} (with C = 0).
inline double kme_norm_sq(const GaussianSpec& q, double sigma) {
  detail::check_sigma(sigma);
  const auto sp = detail::spectrum_of(q);
  return detail::det_exp(detail::quad_term(sp, 1.0, 4.0 * sigma), 0.5, 0.0);
}

/// <mu_k(P), mu_k(Q)> = E k(X, Y) for X ~ P, Y ~ Q independent (with C = 0).
inline double kme_inner_product(const GaussianSpec& p, const GaussianSpec& q, double sigma) {
  detail::check_sigma(sigma);
  p.validate();
  q.validate();
  if (p.dim() != q.dim()) throw std::invalid_argument("kme_inner_product: dimension mismatch");
  const Index d = p.dim();
  const Matrix a = Matrix::Identity(d, d) + 2.0 * sigma * (p.cov + q.cov);
  return detail::det_exp(detail::general_term(a, q.mean - p.mean), 0.5, sigma);
}

/// <Sigma_k(P), Sigma_k(Q)> in the tensor-product space, for general Gaussian
/// P = N(mu, S) and Q = N(m0, S0) (with C = 0). Sum of four Gaussian
/// integrals I1 - I2 - I3 + I4 with
///   I1 = E k(X,Y)^2,  I2 = E_X (E_Y k(X,Y))^2,  I3 = E_Y (E_X k(X,Y))^2,
///   I4 = (E k(X,Y))^2.
inline double covariance_inner_product(const GaussianSpec& p, const GaussianSpec& q,
                                       double sigma) {
  detail::check_sigma(sigma);
  p.validate();
  q.validate();
  if (p.dim() != q.dim())
    throw std::invalid_argument("covariance_inner_product: dimension mismatch");
  const Index d = p.dim();
  const Matrix id = Matrix::Identity(d, d);
  const Vector delta = q.mean - p.mean;
  const double s2 = 2.0 * sigma, s4 = 4.0 * sigma;

  auto term = [&](const Matrix& a) {
    return detail::det_exp(detail::general_term(a, delta), 0.5, 2.0 * sigma);
  };
  auto inv_sqrt_det = [&](const Matrix& a) {
    return detail::det_exp(detail::general_term(a, Vector::Zero(d)), 0.5, 0.0);
  };

  const double i1 = term(id + s4 * (p.cov + q.cov));
  const double i2 = inv_sqrt_det(id + s2 * q.cov) * term(id + s2 * q.cov + s4 * p.cov);
  const double i3 = inv_sqrt_det(id + s2 * p.cov) * term(id + s2 * p.cov + s4 * q.cov);
  const double i4 = inv_sqrt_det(id + s2 * (p.cov + q.cov)) * term(id + s2 * (p.cov + q.cov));
  return i1 - i2 - i3 + i4;
}

/// MMD^2(N(0, I_d), q) under exp(C) * Gaussian kernel.
inline double mmd_sq_gaussian(const GaussianSpec& q, double sigma, double c = 0.0) {
  detail::check_sigma(sigma);
  const auto sp = detail::spectrum_of(q);
  const double d = static_cast<double>(q.dim());
  using detail::det_exp;
  using detail::quad_term;
  const double v = std::pow(1.0 + 4.0 * sigma, -d / 2.0) +
                   det_exp(quad_term(sp, 1.0, 4.0 * sigma), 0.5, 0.0) -
                   2.0 * det_exp(quad_term(sp, 1.0 + 2.0 * sigma, 2.0 * sigma), 0.5, sigma);
  return std::exp(c) * std::max(v, 0.0);
}

/// MVD^2(N(0, I_d), q) under exp(C) * Gaussian kernel.
inline double mvd_sq_gaussian(const GaussianSpec& q, double sigma, double c = 0.0) {
  detail::check_sigma(sigma);
  const auto sp = detail::spectrum_of(q);
  const double d = static_cast<double>(q.dim());
  const double s = sigma;
  using detail::det_exp;
  using detail::quad_term;

  // |Sigma_k(P)|^2
  const double pp = std::pow(1.0 + 8.0 * s, -d / 2.0) -
                    2.0 * std::pow(1.0 + 8.0 * s + 12.0 * s * s, -d / 2.0) +
                    std::pow(1.0 + 4.0 * s, -d);
  // |Sigma_k(Q)|^2
  const double qq = det_exp(quad_term(sp, 1.0, 8.0 * s), 0.5, 0.0) -
                    2.0 * det_exp(quad_term(sp, 1.0, 8.0 * s, 12.0 * s * s), 0.5, 0.0) +
                    det_exp(quad_term(sp, 1.0, 4.0 * s), 1.0, 0.0);
  // <Sigma_k(P), Sigma_k(Q)>
  const double pq =
      det_exp(quad_term(sp, 1.0 + 4.0 * s, 4.0 * s), 0.5, 2.0 * s) -
      det_exp(quad_term(sp, 1.0, 2.0 * s), 0.5, 0.0) *
          det_exp(quad_term(sp, 1.0 + 4.0 * s, 2.0 * s), 0.5, 2.0 * s) -
      std::pow(1.0 + 2.0 * s, -d / 2.0) *
          det_exp(quad_term(sp, 1.0 + 2.0 * s, 4.0 * s), 0.5, 2.0 * s) +
      det_exp(quad_term(sp, 1.0 + 2.0 * s, 2.0 * s), 1.0, 2.0 * s);

  const double v = pp + qq - 2.0 * pq;
  return std::exp(2.0 * c) * std::max(v, 0.0);
}

/// MMD^2(N(0, I_d), N(t 1, s I_d)), scalar form.
inline double mmd_sq_isotropic(double t, double s, Index dim, double sigma, double c = 0.0) {
  detail::check_sigma(sigma);
  if (!(s > 0.0)) throw std::invalid_argument("mmd_sq_isotropic: s must be positive");
  const double d = static_cast<double>(dim);
  const double a = 1.0 + 2.0 * sigma + 2.0 * sigma * s;
  const double v = std::pow(1.0 + 4.0 * sigma, -d / 2.0) +
                   std::pow(1.0 + 4.0 * sigma * s, -d / 2.0) -
                   2.0 * std::pow(a, -d / 2.0) * std::exp(-sigma * t * t * d / a);
  return std::exp(c) * std::max(v, 0.0);
}

/// MVD^2(N(0, I_d), N(t 1, s I_d)), scalar form.
inline double mvd_sq_isotropic(double t, double s, Index dim, double sigma, double c = 0.0) {
  detail::check_sigma(sigma);
  if (!(s > 0.0)) throw std::invalid_argument("mvd_sq_isotropic: s must be positive");
  const double d = static_cast<double>(dim);
  const double g = sigma;
  const double td = t * t * d;
  auto pw = [](double base, double e) { return std::pow(base, e); };

  const double a1 = 1.0 + 4.0 * g + 4.0 * g * s;
  const double a2 = 1.0 + 4.0 * g + 2.0 * g * s;
  const double a3 = 1.0 + 2.0 * g + 4.0 * g * s;
  const double a4 = 1.0 + 2.0 * g + 2.0 * g * s;

  const double v =
      pw(1.0 + 8.0 * g, -d / 2.0) - 2.0 * pw(1.0 + 8.0 * g + 12.0 * g * g, -d / 2.0) +
      pw(1.0 + 4.0 * g, -d) + pw(1.0 + 8.0 * g * s, -d / 2.0) -
      2.0 * pw(1.0 + 8.0 * g * s + 12.0 * g * g * s * s, -d / 2.0) +
      pw(1.0 + 4.0 * g * s, -d) - 2.0 * pw(a1, -d / 2.0) * std::exp(-2.0 * g * td / a1) +
      2.0 * pw(1.0 + 2.0 * g * s, -d / 2.0) * pw(a2, -d / 2.0) * std::exp(-2.0 * g * td / a2) +
      2.0 * pw(1.0 + 2.0 * g, -d / 2.0) * pw(a3, -d / 2.0) * std::exp(-2.0 * g * td / a3) -
      2.0 * pw(a4, -d) * std::exp(-2.0 * g * td / a4);
  return std::exp(2.0 * c) * std::max(v, 0.0);
}

struct CurvePoint {
  double t, s;
  Index d;
  double sigma, log_scale;
  double mmd_sq, mvd_sq;
};

/// Cartesian product of the t and s grids (t varies fastest within each s).
inline std::vector<CurvePoint> mvd_mmd_curves(const std::vector<double>& t_grid,
                                              const std::vector<double>& s_grid, Index d,
                                              double sigma, double c) {
  if (t_grid.empty() || s_grid.empty())
    throw std::invalid_argument("mvd_mmd_curves: empty grid");
  if (d < 1) throw std::invalid_argument("mvd_mmd_curves: dimension must be positive");
  if (!std::isfinite(c)) throw std::invalid_argument("mvd_mmd_curves: C must be finite");
  std::vector<CurvePoint> out;
  out.reserve(t_grid.size() * s_grid.size());
  for (double s : s_grid) {
    if (!std::isfinite(s) || !(s > 0.0))
      throw std::invalid_argument("mvd_mmd_curves: s values must be positive and finite");
    for (double t : t_grid) {
      if (!std::isfinite(t)) throw std::invalid_argument("mvd_mmd_curves: non-finite t");
      out.push_back(CurvePoint{t, s, d, sigma, c, mmd_sq_isotropic(t, s, d, sigma, c),
                               mvd_sq_isotropic(t, s, d, sigma, c)});
    }
  }
  return out;
}

}  // namespace mvd
