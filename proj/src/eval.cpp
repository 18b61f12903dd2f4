#include "slda/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "slda/parallel.hpp"

namespace slda {

EvalModel EvalModel::point(TopicMatrix beta) {
  EvalModel m;
  m.is_variational_ = false;
  m.beta_ = std::move(beta);
  return m;
}

EvalModel EvalModel::variational(VariationalTopics lambda) {
  EvalModel m;
  m.is_variational_ = true;
  m.beta_ = lambda.expected_beta();
  m.lambda_ = std::move(lambda);
  return m;
}

const VariationalTopics& EvalModel::lambda() const {
  if (!is_variational_)
    throw ConfigError("this model is a point estimate; no variational parameters");
  return lambda_;
}

namespace {

// E(theta) on the observed half, by the configured method.
SimplexPoint infer_expected_theta(const SparseDocument& observed, const EvalModel& model,
                                  const PredictiveConfig& cfg, uint64_t seed) {
  switch (cfg.method) {
    case InferMethod::FW:
      return fw_infer_theta(observed, model.expected_beta(), cfg.fw).theta;
    case InferMethod::VB:
      return vb_infer(observed, model.lambda(), cfg.hp, cfg.vb_max_iters, cfg.vb_rel_tol, seed)
          .theta;
    case InferMethod::CVB:
      return cvb_infer(observed, model.lambda(), cfg.hp, cfg.cvb0_sweeps, seed).theta;
    case InferMethod::CVB0:
      return cvb0_infer(observed, model.lambda(), cfg.hp, cfg.cvb0_sweeps, cfg.cvb0_burn_in, seed)
          .theta;
    case InferMethod::CGS: {
      GibbsConfig gc = cfg.gibbs;
      gc.seed = seed;
      return cgs_infer(observed, model.lambda(), cfg.hp, gc).theta;
    }
  }
  throw ConfigError("unhandled inference method");
}

}  // namespace

PredictiveResult log_predictive_probability(const EvalModel& model, const Corpus& test,
                                            const PredictiveConfig& cfg) {
  if (test.num_docs() == 0) throw ConfigError("log_predictive_probability: empty test corpus");
  if (!(cfg.ratio > 0.0 && cfg.ratio < 1.0)) throw ConfigError("ratio must lie in (0,1)");
  if (cfg.num_splits < 1) throw ConfigError("num_splits must be at least 1");
  if (model.vocab_size() != test.vocab_size)
    throw ConfigError("model and test corpus disagree on vocabulary size");

  // Eligible documents: long enough that both halves are nonempty after
  // rounding. The skip rule depends only on document length, never the seed.
  auto splittable = [&](const SparseDocument& d) {
    int64_t n = d.tokens();
    if (n < 2) return false;
    int64_t obs = std::llround(cfg.ratio * static_cast<double>(n));
    return obs >= 1 && obs < n;
  };

  std::vector<int> selected;
  int skipped = 0;
  for (int i = 0; i < test.num_docs(); ++i) {
    if (splittable(test.docs[static_cast<size_t>(i)]))
      selected.push_back(i);
    else
      ++skipped;
  }
  if (static_cast<int>(selected.size()) > cfg.test_docs) {
    Rng rng(derive_seed(cfg.seed, "test-doc-sample"));
    shuffle_vector(selected, rng);
    selected.resize(static_cast<size_t>(cfg.test_docs));
    std::sort(selected.begin(), selected.end());
  }
  if (selected.empty()) throw ConfigError("no test documents are long enough to split");

  const TopicMatrix& beta = model.expected_beta();
  const int threads = resolve_threads(cfg.threads);

  PredictiveResult result;
  result.skipped_docs = skipped;
  result.used_docs = static_cast<int>(selected.size());

  for (int split = 0; split < cfg.num_splits; ++split) {
    std::vector<double> doc_ll(selected.size(), 0.0);
    std::vector<int64_t> doc_tokens(selected.size(), 0);
    parallel_for(static_cast<int64_t>(selected.size()), threads, [&](int64_t idx) {
      const SparseDocument& doc = test.docs[static_cast<size_t>(selected[static_cast<size_t>(idx)])];
      // seeds keyed by content so scores do not depend on document order
      uint64_t split_seed = derive_seed(cfg.seed, "heldout", static_cast<uint64_t>(split),
                                        document_hash(doc));
      HeldoutSplit ho = split_heldout(doc, cfg.ratio, split_seed);
      SimplexPoint theta = infer_expected_theta(ho.observed, model, cfg,
                                                derive_seed(split_seed, "local-infer"));
      double ll = 0.0;
      int64_t tokens = 0;
      for (const auto& e : ho.heldout.entries) {
        double p = 0.0;
        for (int k = 0; k < beta.num_topics(); ++k)
          p += theta.w[static_cast<size_t>(k)] * beta.m(k, e.term);
        ll += static_cast<double>(e.count) * std::log(p);
        tokens += e.count;
      }
      doc_ll[static_cast<size_t>(idx)] = ll;
      doc_tokens[static_cast<size_t>(idx)] = tokens;
    });

    double total_ll = 0.0;
    int64_t total_tokens = 0;
    for (size_t i = 0; i < selected.size(); ++i) {
      total_ll += doc_ll[i];
      total_tokens += doc_tokens[i];
    }
    result.per_split.push_back(total_ll / static_cast<double>(total_tokens));
    result.heldout_tokens = total_tokens;
  }

  result.log_pred_prob =
      std::accumulate(result.per_split.begin(), result.per_split.end(), 0.0) /
      static_cast<double>(result.per_split.size());
  return result;
}

NpmiResult npmi(const EvalModel& model, const Corpus& reference, const NpmiConfig& cfg) {
  if (reference.num_docs() == 0) throw ConfigError("npmi: empty reference corpus");
  if (cfg.top_n < 2) throw ConfigError("npmi: top_n must be at least 2");
  const TopicMatrix& beta = model.expected_beta();
  const int K = beta.num_topics();
  const int V = beta.vocab_size();
  const int n = std::min(cfg.top_n, V);
  const double D = static_cast<double>(reference.num_docs());

  NpmiResult result;
  result.per_topic.resize(static_cast<size_t>(K));

  std::vector<int> order(static_cast<size_t>(V));
  for (int t = 0; t < K; ++t) {
    // top-n terms by probability, ties broken toward the lower term id
    std::iota(order.begin(), order.end(), 0);
    const double* row = beta.row(t);
    std::partial_sort(order.begin(), order.begin() + n, order.end(), [&](int a, int b) {
      if (row[a] != row[b]) return row[a] > row[b];
      return a < b;
    });
    std::vector<int> top(order.begin(), order.begin() + n);

    // document frequencies over the reference corpus
    std::vector<int> sorted_top = top;
    std::sort(sorted_top.begin(), sorted_top.end());
    std::vector<int64_t> df(static_cast<size_t>(n), 0);
    Matrix co(n, n);
    std::vector<int> present;
    for (const auto& doc : reference.docs) {
      present.clear();
      size_t a = 0, b = 0;
      while (a < doc.entries.size() && b < sorted_top.size()) {
        int32_t term = doc.entries[a].term;
        if (term < sorted_top[b]) {
          ++a;
        } else if (term > sorted_top[b]) {
          ++b;
        } else {
          present.push_back(sorted_top[b]);
          ++a;
          ++b;
        }
      }
      for (size_t x = 0; x < present.size(); ++x) {
        int ix = static_cast<int>(std::find(top.begin(), top.end(), present[x]) - top.begin());
        df[static_cast<size_t>(ix)] += 1;
        for (size_t y = x + 1; y < present.size(); ++y) {
          int iy = static_cast<int>(std::find(top.begin(), top.end(), present[y]) - top.begin());
          co(ix, iy) += 1.0;
          co(iy, ix) += 1.0;
        }
      }
    }

    double total = 0.0;
    for (int j = 1; j < n; ++j) {
      for (int i = 0; i < j; ++i) {
        double joint = co(j, i) / D;
        double value;
        if (joint <= 0.0) {
          value = -1.0;  // analytic limit as the joint probability vanishes
        } else if (joint >= 1.0) {
          value = 1.0;  // both marginals are 1 as well; limit of the ratio form
        } else {
          double pi = static_cast<double>(df[static_cast<size_t>(i)]) / D;
          double pj = static_cast<double>(df[static_cast<size_t>(j)]) / D;
          value = std::log(joint / (pj * pi)) / (-std::log(joint));
        }
        total += value;
      }
    }
    result.per_topic[static_cast<size_t>(t)] = 2.0 * total / (static_cast<double>(n) * (n - 1));
  }

  result.mean = std::accumulate(result.per_topic.begin(), result.per_topic.end(), 0.0) /
                static_cast<double>(K);
  return result;
}

double sparsity_fraction(std::span<const LocalPosterior> posteriors) {
  if (posteriors.empty()) throw ConfigError("sparsity_fraction: empty posterior list");
  double total = 0.0;
  for (const auto& p : posteriors) {
    double k = static_cast<double>(p.theta.dim());
    switch (p.method) {
      case InferMethod::FW:
      case InferMethod::CGS:
        total += static_cast<double>(p.support_size) / k;
        break;
      default:
        total += 1.0;  // dense posteriors
        break;
    }
  }
  return total / static_cast<double>(posteriors.size());
}

TimingSummary timing_report(std::span<const double> seconds) {
  if (seconds.empty()) throw ConfigError("timing_report: empty sample list");
  TimingSummary s;
  s.n = static_cast<int64_t>(seconds.size());
  std::vector<double> sorted(seconds.begin(), seconds.end());
  std::sort(sorted.begin(), sorted.end());
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(s.n);
  size_t mid = sorted.size() / 2;
  s.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  size_t p95_idx = static_cast<size_t>(
      std::ceil(0.95 * static_cast<double>(sorted.size()))) - 1;
  s.p95 = sorted[std::min(p95_idx, sorted.size() - 1)];
  return s;
}

}  // namespace slda
