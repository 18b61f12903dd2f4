#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace slda {

// Thrown for malformed input files. line < 0 means "not line-oriented".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, long line = -1)
      : std::runtime_error(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

// Thrown for invalid configuration before any work starts.
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown for I/O failures and numeric hard errors at runtime.
class RuntimeFailure : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense row-major matrix of doubles.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

  double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }
  std::span<double> row_span(int r) { return {row(r), static_cast<size_t>(cols)}; }
  std::span<const double> row_span(int r) const { return {row(r), static_cast<size_t>(cols)}; }

  double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  bool empty() const { return data.empty(); }
};

inline double sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

// Scales v so it sums to 1. Returns the pre-normalization sum.
inline double normalize(std::span<double> v) {
  double s = sum(v);
  if (s > 0.0) {
    double inv = 1.0 / s;
    for (double& x : v) x *= inv;
  }
  return s;
}

}  // namespace slda
