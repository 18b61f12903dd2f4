#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "slda/corpus.hpp"
#include "slda/inference.hpp"
#include "slda/topics.hpp"

namespace slda {

// A learned model under evaluation: either a point topic matrix or Dirichlet
// parameters whose expectation E(beta_k) is lambda_k row-normalized.
class EvalModel {
 public:
  static EvalModel point(TopicMatrix beta);
  static EvalModel variational(VariationalTopics lambda);

  bool is_variational() const { return is_variational_; }
  const TopicMatrix& expected_beta() const { return beta_; }
  const VariationalTopics& lambda() const;
  int num_topics() const { return beta_.num_topics(); }
  int vocab_size() const { return beta_.vocab_size(); }

 private:
  bool is_variational_ = false;
  TopicMatrix beta_;
  VariationalTopics lambda_;
};

struct PredictiveConfig {
  double ratio = 0.8;
  int num_splits = 5;
  int test_docs = 1000;
  uint64_t seed = 0;
  InferMethod method = InferMethod::FW;
  HyperParams hp;  // alpha/eta used by the variational inference methods
  FwConfig fw{.max_iters = 50, .rel_tol = 1e-6, .track_objective = false};
  GibbsConfig gibbs;
  int vb_max_iters = 50;
  double vb_rel_tol = 1e-4;
  int cvb0_sweeps = 50;
  int cvb0_burn_in = 25;
  int threads = 1;
};

struct PredictiveResult {
  double log_pred_prob = 0.0;           // mean over splits, nats per held-out token
  std::vector<double> per_split;
  int64_t heldout_tokens = 0;           // per split
  int skipped_docs = 0;                 // too short to split
  int used_docs = 0;
};

// Document-completion score: split each test document into observed and
// held-out tokens, infer E(theta) on the observed part with the configured
// method, then average log sum_k E(theta_k) E(beta_kw) over held-out tokens.
PredictiveResult log_predictive_probability(const EvalModel& model, const Corpus& test,
                                            const PredictiveConfig& cfg);

struct NpmiConfig {
  int top_n = 10;
};

struct NpmiResult {
  double mean = 0.0;
  std::vector<double> per_topic;
};

// Topic coherence over the top-n terms per topic. P(w) and P(w_i, w_j) are
// document frequencies in the reference corpus; pairs that never co-occur
// score the analytic limit -1, so every value stays inside [-1, 1].
NpmiResult npmi(const EvalModel& model, const Corpus& reference, const NpmiConfig& cfg = {});

// Mean fraction of topics used per document: support/K for the sparse
// methods (FW, CGS), exactly 1 for VB/CVB/CVB0.
double sparsity_fraction(std::span<const LocalPosterior> posteriors);

struct TimingSummary {
  double mean = 0.0;
  double median = 0.0;
  double p95 = 0.0;
  int64_t n = 0;
};

TimingSummary timing_report(std::span<const double> seconds);

}  // namespace slda
