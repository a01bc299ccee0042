#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "mvd/kernel.hpp"

namespace mvd {

class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& msg, std::size_t line, std::size_t column = 0)
      : std::runtime_error(msg), line_(line), column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline double parse_cell(std::string_view cell, std::size_t line, std::size_t col) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size())
    throw CsvError("line " + std::to_string(line) + ", column " + std::to_string(col) +
                       ": non-numeric cell '" + std::string(cell) + "'",
                   line, col);
  if (!std::isfinite(v))
    throw CsvError("line " + std::to_string(line) + ", column " + std::to_string(col) +
                       ": non-finite value",
                   line, col);
  return v;
}

}  // namespace detail

/// Parse comma-separated numeric text. Blank lines are skipped; '.' is the
/// decimal separator regardless of locale.
inline DataMatrix parse_csv(std::string_view text, bool has_header) {
  std::vector<double> values;
  std::size_t cols = 0, rows = 0, line_no = 0;
  bool header_pending = has_header;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && line.substr(0, 3) == "\xEF\xBB\xBF")
      line.remove_prefix(3);  // UTF-8 BOM
    if (detail::trim(line).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    std::size_t c = 0;
    while (true) {
      const auto comma = line.find(',');
      values.push_back(detail::parse_cell(line.substr(0, comma), line_no, c + 1));
      ++c;
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (rows == 0)
      cols = c;
    else if (c != cols)
      throw CsvError("line " + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                         " fields, found " + std::to_string(c),
                     line_no);
    ++rows;
  }
  if (rows == 0) throw CsvError("empty file: no data rows", line_no);
  if (rows < 2) throw CsvError("need at least 2 data rows, found 1", line_no);
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = values[i * cols + j];
  return DataMatrix(std::move(m));
}

inline DataMatrix load_csv(const std::string& path, bool has_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), has_header);
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

inline void write_csv(std::ostream& out, const DataMatrix& x) {
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      if (j) out << ',';
      out << format_double(x.values()(i, j));
    }
    out << '\n';
  }
}

}  // namespace mvd
