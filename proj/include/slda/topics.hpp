#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "slda/common.hpp"
#include "slda/rng.hpp"

namespace slda {

// Point on the unit simplex.
struct SimplexPoint {
  std::vector<double> w;

  int dim() const { return static_cast<int>(w.size()); }
  int support_size() const {
    int n = 0;
    for (double x : w) n += x > 0.0 ? 1 : 0;
    return n;
  }
  void validate(double tol = 1e-9) const {
    double s = 0.0;
    for (double x : w) {
      if (x < 0.0) throw RuntimeFailure("SimplexPoint: negative entry");
      s += x;
    }
    if (std::abs(s - 1.0) > tol) throw RuntimeFailure("SimplexPoint: does not sum to 1");
  }
};

// K x V row-stochastic topic-term matrix.
struct TopicMatrix {
  Matrix m;

  TopicMatrix() = default;
  TopicMatrix(int K, int V) : m(K, V) {}

  int num_topics() const { return m.rows; }
  int vocab_size() const { return m.cols; }
  double* row(int k) { return m.row(k); }
  const double* row(int k) const { return m.row(k); }

  void validate(double tol = 1e-6) const {
    for (int k = 0; k < m.rows; ++k) {
      double s = 0.0;
      for (int j = 0; j < m.cols; ++j) {
        double x = m(k, j);
        if (x < 0.0) throw RuntimeFailure("TopicMatrix: negative entry");
        s += x;
      }
      if (std::abs(s - 1.0) > tol) throw RuntimeFailure("TopicMatrix: row does not sum to 1");
    }
  }

  static TopicMatrix random(int K, int V, uint64_t seed) {
    TopicMatrix beta(K, V);
    Rng rng(seed);
    for (int k = 0; k < K; ++k) {
      double s = 0.0;
      for (int j = 0; j < V; ++j) {
        double x = -std::log(canonical_open(rng));
        beta.m(k, j) = x;
        s += x;
      }
      for (int j = 0; j < V; ++j) beta.m(k, j) /= s;
    }
    return beta;
  }
};

// K x V positive Dirichlet parameters over topics, with cached row sums.
// Also holds the expected term-topic counts used by the collapsed methods,
// which share the same shape.
struct VariationalTopics {
  Matrix lambda;
  std::vector<double> row_sums;

  VariationalTopics() = default;
  VariationalTopics(int K, int V, double fill = 0.0) : lambda(K, V, fill) {
    recompute_row_sums();
  }

  int num_topics() const { return lambda.rows; }
  int vocab_size() const { return lambda.cols; }

  void recompute_row_sums() {
    row_sums.assign(static_cast<size_t>(lambda.rows), 0.0);
    for (int k = 0; k < lambda.rows; ++k) {
      double s = 0.0;
      const double* r = lambda.row(k);
      for (int j = 0; j < lambda.cols; ++j) s += r[j];
      row_sums[static_cast<size_t>(k)] = s;
    }
  }

  void validate() const {
    if (static_cast<int>(row_sums.size()) != lambda.rows)
      throw RuntimeFailure("VariationalTopics: stale row sums");
    for (int k = 0; k < lambda.rows; ++k) {
      double s = 0.0;
      const double* r = lambda.row(k);
      for (int j = 0; j < lambda.cols; ++j) {
        if (!(r[j] > 0.0)) throw RuntimeFailure("VariationalTopics: nonpositive entry");
        s += r[j];
      }
      double cached = row_sums[static_cast<size_t>(k)];
      if (std::abs(s - cached) > 1e-8 * std::max(1.0, std::abs(s)))
        throw RuntimeFailure("VariationalTopics: row sum cache out of date");
    }
  }

  // Row-normalized expectation E(beta_k) proportional to lambda_k.
  TopicMatrix expected_beta() const {
    TopicMatrix beta(lambda.rows, lambda.cols);
    for (int k = 0; k < lambda.rows; ++k) {
      double inv = 1.0 / row_sums[static_cast<size_t>(k)];
      const double* src = lambda.row(k);
      double* dst = beta.row(k);
      for (int j = 0; j < lambda.cols; ++j) dst[j] = src[j] * inv;
    }
    return beta;
  }

  static VariationalTopics random(int K, int V, uint64_t seed) {
    VariationalTopics vt(K, V);
    Rng rng(seed);
    for (double& x : vt.lambda.data) x = 0.5 + canonical(rng);
    vt.recompute_row_sums();
    return vt;
  }
};

struct HyperParams {
  double alpha = 0.01;
  double eta = 0.01;
  int K = 100;

  void validate() const {
    if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
    if (!(eta > 0.0)) throw ConfigError("eta must be positive");
    if (K < 1) throw ConfigError("K must be at least 1");
  }
};

}  // namespace slda
