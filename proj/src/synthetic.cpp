#include "slda/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace slda {

SyntheticData make_synthetic(const SyntheticConfig& cfg) {
  if (cfg.K < 1 || cfg.V < cfg.K) throw ConfigError("make_synthetic: need V >= K >= 1");
  if (cfg.docs < 1 || cfg.doc_length < 1)
    throw ConfigError("make_synthetic: need at least one document and one token");
  if (!(cfg.spread >= 0.0 && cfg.spread < 1.0))
    throw ConfigError("make_synthetic: spread must lie in [0, 1)");
  if (!(cfg.doc_alpha > 0.0)) throw ConfigError("make_synthetic: doc_alpha must be positive");

  SyntheticData data;
  data.true_beta = TopicMatrix(cfg.K, cfg.V);
  for (int k = 0; k < cfg.K; ++k) {
    int lo = static_cast<int>(static_cast<int64_t>(k) * cfg.V / cfg.K);
    int hi = static_cast<int>(static_cast<int64_t>(k + 1) * cfg.V / cfg.K);
    double in_block = (1.0 - cfg.spread) / (hi - lo);
    double off_block = cfg.V - (hi - lo) > 0 ? cfg.spread / (cfg.V - (hi - lo)) : 0.0;
    for (int j = 0; j < cfg.V; ++j)
      data.true_beta.m(k, j) = (j >= lo && j < hi) ? in_block : off_block;
    if (off_block == 0.0) data.true_beta.m(k, lo) += cfg.spread;  // K == 1 corner
  }

  // Per-topic CDF over terms for token draws.
  Matrix cdf(cfg.K, cfg.V);
  for (int k = 0; k < cfg.K; ++k) {
    double acc = 0.0;
    for (int j = 0; j < cfg.V; ++j) {
      acc += data.true_beta.m(k, j);
      cdf(k, j) = acc;
    }
    cdf(k, cfg.V - 1) = 1.0;
  }

  data.corpus.vocab_size = cfg.V;
  data.corpus.docs.resize(static_cast<size_t>(cfg.docs));
  std::vector<double> theta(static_cast<size_t>(cfg.K));
  std::vector<int64_t> term_counts(static_cast<size_t>(cfg.V));
  for (int d = 0; d < cfg.docs; ++d) {
    Rng rng(derive_seed(cfg.seed, "synthetic-doc", static_cast<uint64_t>(d)));
    dirichlet_sample(rng, cfg.doc_alpha, theta);
    std::fill(term_counts.begin(), term_counts.end(), 0);
    for (int i = 0; i < cfg.doc_length; ++i) {
      double uz = canonical(rng);
      int topic = 0;
      double acc = 0.0;
      for (int k = 0; k < cfg.K; ++k) {
        acc += theta[static_cast<size_t>(k)];
        if (uz < acc || k == cfg.K - 1) {
          topic = k;
          break;
        }
      }
      double uw = canonical(rng);
      const double* row = cdf.row(topic);
      int term = static_cast<int>(std::lower_bound(row, row + cfg.V, uw) - row);
      if (term >= cfg.V) term = cfg.V - 1;
      ++term_counts[static_cast<size_t>(term)];
    }
    auto& doc = data.corpus.docs[static_cast<size_t>(d)];
    for (int j = 0; j < cfg.V; ++j)
      if (term_counts[static_cast<size_t>(j)] > 0)
        doc.entries.push_back({j, term_counts[static_cast<size_t>(j)]});
  }

  data.vocab.terms.reserve(static_cast<size_t>(cfg.V));
  int width = static_cast<int>(std::to_string(cfg.V).size());
  for (int j = 0; j < cfg.V; ++j) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "term%0*d", width, j);
    data.vocab.terms.emplace_back(buf);
  }
  return data;
}

}  // namespace slda
