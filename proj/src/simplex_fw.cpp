#include "slda/simplex_fw.hpp"

#include <cassert>
#include <cmath>

namespace slda {

double SimplexObjective::value(std::span<const double> theta) const {
  std::vector<double> scratch(theta.size());
  return value_and_gradient(theta, scratch);
}

FwResult fw_maximize(const SimplexObjective& f, const FwConfig& cfg) {
  const int K = f.dim();
  if (K < 1) throw ConfigError("fw_maximize: dimension must be at least 1");
  if (cfg.max_iters < 1) throw ConfigError("fw_maximize: max_iters must be at least 1");

  FwResult result;
  result.theta.w.assign(static_cast<size_t>(K), 0.0);

  // theta_0: the vertex with the largest objective, lowest index on ties.
  int best = 0;
  double best_value = f.vertex_value(0);
  if (!std::isfinite(best_value))
    throw RuntimeFailure("fw_maximize: objective not finite at vertex 0");
  for (int k = 1; k < K; ++k) {
    double v = f.vertex_value(k);
    if (!std::isfinite(v))
      throw RuntimeFailure("fw_maximize: objective not finite at vertex " + std::to_string(k));
    if (v > best_value) {
      best_value = v;
      best = k;
    }
  }
  result.theta.w[static_cast<size_t>(best)] = 1.0;
  result.objective = best_value;
  if (cfg.track_objective) result.objective_trace.push_back(best_value);

  if (K == 1) {
    result.support_size = 1;
    return result;
  }

  std::vector<double> grad(static_cast<size_t>(K));
  std::vector<double>& theta = result.theta.w;
  double prev_value = best_value;
  bool stopped_early = false;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    // value is f(theta_iter); at iter 0 it equals the best vertex value.
    double value = f.value_and_gradient(theta, grad);
    if (iter > 0) {
      if (cfg.track_objective) result.objective_trace.push_back(value);
      result.objective = value;
      double improvement = std::abs(value - prev_value);
      if (cfg.rel_tol > 0.0 && improvement < cfg.rel_tol * std::abs(prev_value)) {
        stopped_early = true;
        break;
      }
      prev_value = value;
    }

    int pick = 0;
    double best_grad = grad[0];
    for (int k = 1; k < K; ++k) {
      if (grad[static_cast<size_t>(k)] > best_grad) {
        best_grad = grad[static_cast<size_t>(k)];
        pick = k;
      }
    }

    double step = 2.0 / (iter + 3.0);
    for (double& x : theta) x *= 1.0 - step;
    theta[static_cast<size_t>(pick)] += step;
    ++result.iters_used;

#ifndef NDEBUG
    double s = 0.0;
    for (double x : theta) {
      assert(x >= 0.0);
      s += x;
    }
    assert(std::abs(s - 1.0) < 1e-9);
#endif
  }

  if (!stopped_early) {
    // the loop stepped to theta_L without evaluating it
    result.objective = f.value(theta);
    if (cfg.track_objective) result.objective_trace.push_back(result.objective);
  }

  result.support_size = result.theta.support_size();
  return result;
}

LdaObjective::LdaObjective(const SparseDocument& doc, const TopicMatrix& beta, double eps) {
  if (doc.empty()) throw ConfigError("LdaObjective: empty document");
  num_topics_ = beta.num_topics();
  num_terms_ = doc.num_terms();
  counts_.resize(static_cast<size_t>(num_terms_));
  beta_slice_.resize(static_cast<size_t>(num_topics_) * num_terms_);
  for (int j = 0; j < num_terms_; ++j) {
    const auto& e = doc.entries[static_cast<size_t>(j)];
    if (e.term < 0 || e.term >= beta.vocab_size())
      throw ConfigError("LdaObjective: term id out of range for model");
    counts_[static_cast<size_t>(j)] = static_cast<double>(e.count);
    for (int k = 0; k < num_topics_; ++k) {
      double b = beta.m(k, e.term);
      beta_slice_[static_cast<size_t>(k) * num_terms_ + j] = b > eps ? b : eps;
    }
  }
}

double LdaObjective::vertex_value(int k) const {
  const double* row = beta_slice_.data() + static_cast<size_t>(k) * num_terms_;
  double v = 0.0;
  for (int j = 0; j < num_terms_; ++j) v += counts_[static_cast<size_t>(j)] * std::log(row[j]);
  return v;
}

double LdaObjective::value_and_gradient(std::span<const double> theta,
                                        std::span<double> grad) const {
  // s_j = sum_k theta_k beta_kj, then grad_k = sum_j d_j beta_kj / s_j.
  std::vector<double> mix(static_cast<size_t>(num_terms_), 0.0);
  for (int k = 0; k < num_topics_; ++k) {
    double t = theta[static_cast<size_t>(k)];
    if (t == 0.0) continue;
    const double* row = beta_slice_.data() + static_cast<size_t>(k) * num_terms_;
    for (int j = 0; j < num_terms_; ++j) mix[static_cast<size_t>(j)] += t * row[j];
  }
  double value = 0.0;
  for (int j = 0; j < num_terms_; ++j) {
    value += counts_[static_cast<size_t>(j)] * std::log(mix[static_cast<size_t>(j)]);
    mix[static_cast<size_t>(j)] = counts_[static_cast<size_t>(j)] / mix[static_cast<size_t>(j)];
  }
  for (int k = 0; k < num_topics_; ++k) {
    const double* row = beta_slice_.data() + static_cast<size_t>(k) * num_terms_;
    double g = 0.0;
    for (int j = 0; j < num_terms_; ++j) g += mix[static_cast<size_t>(j)] * row[j];
    grad[static_cast<size_t>(k)] = g;
  }
  return value;
}

double LdaObjective::value(std::span<const double> theta) const {
  std::vector<double> mix(static_cast<size_t>(num_terms_), 0.0);
  for (int k = 0; k < num_topics_; ++k) {
    double t = theta[static_cast<size_t>(k)];
    if (t == 0.0) continue;
    const double* row = beta_slice_.data() + static_cast<size_t>(k) * num_terms_;
    for (int j = 0; j < num_terms_; ++j) mix[static_cast<size_t>(j)] += t * row[j];
  }
  double value = 0.0;
  for (int j = 0; j < num_terms_; ++j)
    value += counts_[static_cast<size_t>(j)] * std::log(mix[static_cast<size_t>(j)]);
  return value;
}

FwResult fw_infer_theta(const SparseDocument& doc, const TopicMatrix& beta, const FwConfig& cfg) {
  if (doc.empty()) throw ConfigError("fw_infer_theta: empty document");
  LdaObjective objective(doc, beta);
  return fw_maximize(objective, cfg);
}

}  // namespace slda
