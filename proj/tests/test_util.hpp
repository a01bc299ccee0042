#pragma once

#include <random>

#include "mvd/kernel.hpp"
#include "oracles.hpp"

namespace testutil {

inline mvd::DataMatrix random_data(mvd::Index n, mvd::Index d, std::uint64_t seed,
                                   double scale = 1.0, double shift = 0.0) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  mvd::Matrix m(n, d);
  for (mvd::Index i = 0; i < n; ++i)
    for (mvd::Index j = 0; j < d; ++j) m(i, j) = shift + scale * z(eng);
  return mvd::DataMatrix(std::move(m));
}

inline mvd::DataMatrix from_rows(const std::vector<std::vector<double>>& rows) {
  mvd::Matrix m(static_cast<mvd::Index>(rows.size()), static_cast<mvd::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<mvd::Index>(i), static_cast<mvd::Index>(j)) = rows[i][j];
  return mvd::DataMatrix(std::move(m));
}

inline mvd::DataMatrix column(const std::vector<double>& v) {
  std::vector<std::vector<double>> rows;
  for (double x : v) rows.push_back({x});
  return from_rows(rows);
}

inline oracle::Points to_points(const mvd::DataMatrix& x) {
  oracle::Points p(static_cast<std::size_t>(x.rows()));
  for (mvd::Index i = 0; i < x.rows(); ++i)
    for (mvd::Index j = 0; j < x.cols(); ++j) p[static_cast<std::size_t>(i)].push_back(x.values()(i, j));
  return p;
}

inline double rel_err(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

}  // namespace testutil
