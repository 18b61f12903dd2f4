#include "slda/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "slda/special.hpp"

namespace slda {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Token list in term order: one entry index per token occurrence.
std::vector<int> expand_tokens(const SparseDocument& doc) {
  std::vector<int> tokens;
  tokens.reserve(static_cast<size_t>(doc.tokens()));
  for (int j = 0; j < doc.num_terms(); ++j)
    for (int64_t c = 0; c < doc.entries[static_cast<size_t>(j)].count; ++c) tokens.push_back(j);
  return tokens;
}

// log E_q[log beta_kj] weights for the document's terms: K x n_d matrix of
// psi(lambda_kj) - psi(sum_t lambda_kt).
Matrix log_term_weights(const VariationalTopics& lambda, const SparseDocument& doc) {
  const int K = lambda.num_topics();
  const int n = doc.num_terms();
  Matrix w(K, n);
  for (int k = 0; k < K; ++k) {
    double psi_row = digamma(lambda.row_sums[static_cast<size_t>(k)]);
    double* out = w.row(k);
    for (int j = 0; j < n; ++j)
      out[j] = digamma(lambda.lambda(k, doc.entries[static_cast<size_t>(j)].term)) - psi_row;
  }
  return w;
}

void require_nonempty(const SparseDocument& doc, const char* who) {
  if (doc.empty()) throw ConfigError(std::string(who) + ": empty document");
}

void init_phi_rows(Matrix& phi, Rng& rng) {
  for (int r = 0; r < phi.rows; ++r) dirichlet_sample(rng, 1.0, phi.row_span(r));
}

}  // namespace

const char* infer_method_name(InferMethod m) {
  switch (m) {
    case InferMethod::FW: return "fw";
    case InferMethod::VB: return "vb";
    case InferMethod::CVB: return "cvb";
    case InferMethod::CVB0: return "cvb0";
    case InferMethod::CGS: return "cgs";
  }
  return "?";
}

InferMethod parse_infer_method(const std::string& name) {
  if (name == "fw") return InferMethod::FW;
  if (name == "vb") return InferMethod::VB;
  if (name == "cvb") return InferMethod::CVB;
  if (name == "cvb0") return InferMethod::CVB0;
  if (name == "cgs") return InferMethod::CGS;
  throw ConfigError("unknown inference method: " + name);
}

SimplexPoint normalize_gamma(std::span<const double> gamma) {
  double total = 0.0;
  for (double g : gamma) {
    if (g < 0.0) throw RuntimeFailure("normalize_gamma: negative entry");
    total += g;
  }
  if (!(total > 0.0)) throw RuntimeFailure("normalize_gamma: zero total");
  SimplexPoint theta;
  theta.w.resize(gamma.size());
  for (size_t k = 0; k < gamma.size(); ++k) theta.w[k] = gamma[k] / total;
  return theta;
}

LocalPosterior vb_infer(const SparseDocument& doc, const VariationalTopics& lambda,
                        const HyperParams& hp, int max_iters, double rel_tol, uint64_t seed) {
  auto start = Clock::now();
  require_nonempty(doc, "vb_infer");
  if (max_iters < 1) throw ConfigError("vb_infer: max_iters must be at least 1");
  const int K = lambda.num_topics();
  const int n = doc.num_terms();
  const double alpha = hp.alpha;

  Matrix logw = log_term_weights(lambda, doc);
  Matrix phi(n, K);
  Rng rng(seed);
  init_phi_rows(phi, rng);

  std::vector<double> counts(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) counts[static_cast<size_t>(j)] = static_cast<double>(doc.entries[static_cast<size_t>(j)].count);

  std::vector<double> gamma(static_cast<size_t>(K));
  std::vector<double> elog_theta(static_cast<size_t>(K));
  std::vector<double> scores(static_cast<size_t>(K));

  auto update_gamma = [&] {
    for (int k = 0; k < K; ++k) {
      double g = alpha;
      for (int j = 0; j < n; ++j) g += counts[static_cast<size_t>(j)] * phi(j, k);
      gamma[static_cast<size_t>(k)] = g;
    }
  };

  const double elbo_const = std::lgamma(K * alpha) - K * std::lgamma(alpha);
  double prev_elbo = 0.0;
  int iters = 0;

  for (int iter = 0; iter < max_iters; ++iter) {
    update_gamma();
    double gamma_total = sum(gamma);
    double psi_total = digamma(gamma_total);
    for (int k = 0; k < K; ++k)
      elog_theta[static_cast<size_t>(k)] = digamma(gamma[static_cast<size_t>(k)]) - psi_total;

    // phi_jk ~ exp(Elog theta_k + Elog beta_kj)
    for (int j = 0; j < n; ++j) {
      double m = -HUGE_VAL;
      for (int k = 0; k < K; ++k) {
        scores[static_cast<size_t>(k)] = elog_theta[static_cast<size_t>(k)] + logw(k, j);
        m = std::max(m, scores[static_cast<size_t>(k)]);
      }
      double z = 0.0;
      for (int k = 0; k < K; ++k) z += std::exp(scores[static_cast<size_t>(k)] - m);
      for (int k = 0; k < K; ++k)
        phi(j, k) = std::exp(scores[static_cast<size_t>(k)] - m) / z;
    }

    // evidence bound assembled from the standard per-document terms
    double elbo = elbo_const;
    for (int j = 0; j < n; ++j) {
      double d = counts[static_cast<size_t>(j)];
      for (int k = 0; k < K; ++k) {
        double p = phi(j, k);
        if (p > 0.0)
          elbo += d * p * (elog_theta[static_cast<size_t>(k)] + logw(k, j) - std::log(p));
      }
    }
    for (int k = 0; k < K; ++k)
      elbo += (alpha - gamma[static_cast<size_t>(k)]) * elog_theta[static_cast<size_t>(k)] +
              std::lgamma(gamma[static_cast<size_t>(k)]);
    elbo -= std::lgamma(gamma_total);

    iters = iter + 1;
    if (iter > 0 && std::abs(elbo - prev_elbo) < rel_tol * std::abs(prev_elbo)) break;
    prev_elbo = elbo;
  }

  update_gamma();  // make the returned pair satisfy the gamma update exactly

  LocalPosterior post;
  post.method = InferMethod::VB;
  post.gamma = gamma;
  post.theta = normalize_gamma(gamma);
  post.phi = std::move(phi);
  post.phi_token_level = false;
  post.support_size = K;
  post.iters = iters;
  post.wall_time = seconds_since(start);
  return post;
}

namespace {

// Shared sweep state for the collapsed methods: a document-local copy of the
// count matrix restricted to the document's terms, plus running totals.
struct CollapsedState {
  std::vector<int> token_entry;
  Matrix phi;               // tokens x K
  Matrix n_local;           // K x n_d
  Matrix n_var;             // K x n_d (cvb only)
  std::vector<double> doc_topic;      // sum_t phi_tk
  std::vector<double> doc_topic_var;  // sum_t phi_tk (1 - phi_tk)
  std::vector<double> row_totals;     // global row sums + doc_topic
};

void refresh_collapsed(CollapsedState& st, const SparseDocument& doc,
                       const VariationalTopics& counts, bool with_variance) {
  const int K = counts.num_topics();
  const int n = doc.num_terms();
  for (int k = 0; k < K; ++k) {
    const double* src = counts.lambda.row(k);
    double* dst = st.n_local.row(k);
    for (int j = 0; j < n; ++j) dst[j] = src[doc.entries[static_cast<size_t>(j)].term];
  }
  if (with_variance) std::fill(st.n_var.data.begin(), st.n_var.data.end(), 0.0);
  st.doc_topic.assign(static_cast<size_t>(K), 0.0);
  st.doc_topic_var.assign(static_cast<size_t>(K), 0.0);
  st.row_totals = counts.row_sums;
  for (size_t t = 0; t < st.token_entry.size(); ++t) {
    int c = st.token_entry[t];
    for (int k = 0; k < K; ++k) {
      double p = st.phi(static_cast<int>(t), k);
      st.doc_topic[static_cast<size_t>(k)] += p;
      st.row_totals[static_cast<size_t>(k)] += p;
      st.n_local(k, c) += p;
      if (with_variance) {
        double v = p * (1.0 - p);
        st.doc_topic_var[static_cast<size_t>(k)] += v;
        st.n_var(k, c) += v;
      }
    }
  }
}

LocalPosterior collapsed_infer(const SparseDocument& doc, const VariationalTopics& counts,
                               const HyperParams& hp, int sweeps, int avg_from,
                               uint64_t seed, bool second_order, InferMethod method) {
  auto start = Clock::now();
  require_nonempty(doc, "collapsed inference");
  if (sweeps < 1) throw ConfigError("collapsed inference: needs at least one sweep");
  const int K = counts.num_topics();
  const int V = counts.vocab_size();
  const int n = doc.num_terms();
  const double alpha = hp.alpha;
  const double eta = hp.eta;
  const double v_eta = static_cast<double>(V) * eta;

  CollapsedState st;
  st.token_entry = expand_tokens(doc);
  const int num_tokens = static_cast<int>(st.token_entry.size());
  st.phi = Matrix(num_tokens, K);
  st.n_local = Matrix(K, n);
  if (second_order) st.n_var = Matrix(K, n);
  Rng rng(seed);
  init_phi_rows(st.phi, rng);

  Matrix phi_acc(num_tokens, K);
  int averaged = 0;

  std::vector<double> logp(static_cast<size_t>(K));
  std::vector<double> phi_new(static_cast<size_t>(K));

  for (int sweep = 0; sweep < sweeps; ++sweep) {
    // Rebuilding the running sums each sweep keeps incremental rounding from
    // accumulating across sweeps; within a sweep updates are O(K) per token.
    refresh_collapsed(st, doc, counts, second_order);

    for (int i = 0; i < num_tokens; ++i) {
      const int c = st.token_entry[static_cast<size_t>(i)];
      // zero-order factors stay in direct space (all three are positive and
      // of moderate size); only the cvb correction goes through exp, shifted
      // by its maximum so at least one factor is exactly 1
      double x_max = -HUGE_VAL;
      for (int k = 0; k < K; ++k) {
        double p_old = st.phi(i, k);
        double gamma_mi = alpha + st.doc_topic[static_cast<size_t>(k)] - p_old;
        double n_mi = st.n_local(k, c) - p_old + eta;
        double a_mi = st.row_totals[static_cast<size_t>(k)] - p_old + v_eta;
        phi_new[static_cast<size_t>(k)] = gamma_mi * n_mi / a_mi;
        if (second_order) {
          double v_old = p_old * (1.0 - p_old);
          double v_mi = st.doc_topic_var[static_cast<size_t>(k)] - v_old;
          double vn_mi = st.n_var(k, c) - v_old;
          double x = -v_mi / (2.0 * gamma_mi * gamma_mi) - vn_mi / (2.0 * n_mi * n_mi) +
                     v_mi / (2.0 * a_mi * a_mi);
          logp[static_cast<size_t>(k)] = x;
          x_max = std::max(x_max, x);
        }
      }
      double z = 0.0;
      for (int k = 0; k < K; ++k) {
        if (second_order)
          phi_new[static_cast<size_t>(k)] *= std::exp(logp[static_cast<size_t>(k)] - x_max);
        z += phi_new[static_cast<size_t>(k)];
      }
      for (int k = 0; k < K; ++k) {
        double p_new = phi_new[static_cast<size_t>(k)] / z;
        double p_old = st.phi(i, k);
        double delta = p_new - p_old;
        st.doc_topic[static_cast<size_t>(k)] += delta;
        st.row_totals[static_cast<size_t>(k)] += delta;
        st.n_local(k, c) += delta;
        if (second_order) {
          double dv = p_new * (1.0 - p_new) - p_old * (1.0 - p_old);
          st.doc_topic_var[static_cast<size_t>(k)] += dv;
          st.n_var(k, c) += dv;
        }
        st.phi(i, k) = p_new;
      }
    }

    if (sweep >= avg_from) {
      for (size_t idx = 0; idx < phi_acc.data.size(); ++idx) phi_acc.data[idx] += st.phi.data[idx];
      ++averaged;
    }
  }

  // Average of post-burn-in sweep states; with avg_from >= sweeps the final
  // sweep state is returned as-is.
  Matrix phi_out;
  if (averaged > 0) {
    phi_out = std::move(phi_acc);
    double inv = 1.0 / averaged;
    for (double& x : phi_out.data) x *= inv;
  } else {
    phi_out = std::move(st.phi);
  }

  LocalPosterior post;
  post.method = method;
  post.gamma.assign(static_cast<size_t>(K), alpha);
  for (int i = 0; i < num_tokens; ++i)
    for (int k = 0; k < K; ++k) post.gamma[static_cast<size_t>(k)] += phi_out(i, k);
  post.theta = normalize_gamma(post.gamma);
  post.phi = std::move(phi_out);
  post.phi_token_level = true;
  post.support_size = K;
  post.iters = sweeps;
  post.wall_time = seconds_since(start);
  return post;
}

}  // namespace

LocalPosterior cvb_infer(const SparseDocument& doc, const VariationalTopics& counts,
                         const HyperParams& hp, int max_iters, uint64_t seed,
                         bool zero_variances) {
  // final sweep state is returned (avg_from past the end disables averaging)
  return collapsed_infer(doc, counts, hp, max_iters, max_iters, seed, !zero_variances,
                         InferMethod::CVB);
}

LocalPosterior cvb0_infer(const SparseDocument& doc, const VariationalTopics& counts,
                          const HyperParams& hp, int sweeps, int burn_in, uint64_t seed) {
  if (burn_in < 0 || burn_in >= sweeps)
    throw ConfigError("cvb0_infer: burn_in must lie in [0, sweeps)");
  return collapsed_infer(doc, counts, hp, sweeps, burn_in, seed, false, InferMethod::CVB0);
}

LocalPosterior cgs_infer(const SparseDocument& doc, const VariationalTopics& lambda,
                         const HyperParams& hp, const GibbsConfig& cfg) {
  auto start = Clock::now();
  require_nonempty(doc, "cgs_infer");
  if (cfg.samples < 1) throw ConfigError("cgs_infer: needs at least one retained sample");
  if (cfg.burn_in < 0) throw ConfigError("cgs_infer: negative burn_in");
  const int K = lambda.num_topics();
  const double alpha = hp.alpha;

  // exp(psi(lambda_kj) - psi(row sum)) for the document's terms
  Matrix weights = log_term_weights(lambda, doc);
  for (double& x : weights.data) x = std::exp(x);

  std::vector<int> token_entry = expand_tokens(doc);
  const int num_tokens = static_cast<int>(token_entry.size());
  Rng rng(cfg.seed);

  std::vector<int> z(static_cast<size_t>(num_tokens));
  std::vector<double> topic_counts(static_cast<size_t>(K), 0.0);
  for (int i = 0; i < num_tokens; ++i) {
    z[static_cast<size_t>(i)] = static_cast<int>(uniform_below(rng, static_cast<uint64_t>(K)));
    topic_counts[static_cast<size_t>(z[static_cast<size_t>(i)])] += 1.0;
  }

  Matrix sample_counts(num_tokens, K);
  std::vector<double> probs(static_cast<size_t>(K));

  const int total_sweeps = cfg.burn_in + cfg.samples;
  for (int sweep = 0; sweep < total_sweeps; ++sweep) {
    for (int i = 0; i < num_tokens; ++i) {
      const int c = token_entry[static_cast<size_t>(i)];
      topic_counts[static_cast<size_t>(z[static_cast<size_t>(i)])] -= 1.0;
      double total = 0.0;
      for (int k = 0; k < K; ++k) {
        double p = (alpha + topic_counts[static_cast<size_t>(k)]) * weights(k, c);
        probs[static_cast<size_t>(k)] = p;
        total += p;
      }
      double u = canonical(rng) * total;
      int pick = K - 1;
      double acc = 0.0;
      for (int k = 0; k < K; ++k) {
        acc += probs[static_cast<size_t>(k)];
        if (u < acc) {
          pick = k;
          break;
        }
      }
      z[static_cast<size_t>(i)] = pick;
      topic_counts[static_cast<size_t>(pick)] += 1.0;
    }
    if (sweep >= cfg.burn_in)
      for (int i = 0; i < num_tokens; ++i) sample_counts(i, z[static_cast<size_t>(i)]) += 1.0;
  }

  double inv_s = 1.0 / cfg.samples;
  for (double& x : sample_counts.data) x *= inv_s;

  LocalPosterior post;
  post.method = InferMethod::CGS;
  post.gamma.assign(static_cast<size_t>(K), alpha);
  int support = 0;
  for (int k = 0; k < K; ++k) {
    double mass = 0.0;
    for (int i = 0; i < num_tokens; ++i) mass += sample_counts(i, k);
    post.gamma[static_cast<size_t>(k)] += mass;
    support += mass > 0.0 ? 1 : 0;
  }
  post.theta = normalize_gamma(post.gamma);
  post.phi = std::move(sample_counts);
  post.phi_token_level = true;
  post.support_size = support;
  post.iters = total_sweeps;
  post.wall_time = seconds_since(start);
  return post;
}

LocalPosterior fw_posterior(const SparseDocument& doc, const TopicMatrix& beta,
                            const FwConfig& cfg) {
  auto start = Clock::now();
  FwResult r = fw_infer_theta(doc, beta, cfg);
  LocalPosterior post;
  post.method = InferMethod::FW;
  post.theta = std::move(r.theta);
  post.support_size = r.support_size;
  post.iters = r.iters_used;
  post.wall_time = seconds_since(start);
  return post;
}

namespace {

Matrix recover_phi_impl(const SimplexPoint& theta, const SparseDocument& doc,
                        const Matrix& weights_by_term /* K x n_d */) {
  const int K = theta.dim();
  const int n = doc.num_terms();
  Matrix phi(n, K);
  for (int j = 0; j < n; ++j) {
    double total = 0.0;
    for (int k = 0; k < K; ++k) {
      double p = theta.w[static_cast<size_t>(k)] * weights_by_term(k, j);
      phi(j, k) = p;
      total += p;
    }
    if (!(total > 0.0))
      throw RuntimeFailure("recover_phi_from_theta: zero responsibility row");
    double inv = 1.0 / total;
    for (int k = 0; k < K; ++k) phi(j, k) *= inv;
  }
  return phi;
}

}  // namespace

Matrix recover_phi_from_theta(const SimplexPoint& theta, const SparseDocument& doc,
                              const TopicMatrix& beta) {
  const int K = beta.num_topics();
  const int n = doc.num_terms();
  Matrix slice(K, n);
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < n; ++j)
      slice(k, j) = beta.m(k, doc.entries[static_cast<size_t>(j)].term);
  return recover_phi_impl(theta, doc, slice);
}

Matrix recover_phi_from_theta(const SimplexPoint& theta, const SparseDocument& doc,
                              const VariationalTopics& lambda) {
  Matrix logw = log_term_weights(lambda, doc);
  for (double& x : logw.data) x = std::exp(x);
  return recover_phi_impl(theta, doc, logw);
}

}  // namespace slda
