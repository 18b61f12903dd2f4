#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slda/corpus.hpp"
#include "slda/inference.hpp"
#include "slda/simplex_fw.hpp"
#include "slda/topics.hpp"

namespace slda {

enum class LearnerKind {
  MlFw,
  OnlineFw,
  StreamingFw,
  OnlineVb,
  StreamingVb,
  OnlineCgs,
  OnlineCvb0,
};

const char* learner_name(LearnerKind kind);
LearnerKind parse_learner_kind(const std::string& name);

// Online learners scale sufficient statistics by D/S and need the corpus
// size; the stream-capable ones must work without it.
bool learner_requires_corpus_size(LearnerKind kind);
// True when the model is a point topic matrix rather than Dirichlet params.
bool learner_uses_point_model(LearnerKind kind);

// rho_t = (tau + t)^-kappa with t counting minibatches from 1. kappa in
// (0.5, 1] keeps sum(rho) divergent and sum(rho^2) finite.
struct StepSchedule {
  double tau = 1.0;
  double kappa = 0.9;

  void validate() const {
    if (!(kappa > 0.5 && kappa <= 1.0)) throw ConfigError("kappa must lie in (0.5, 1]");
    if (!(tau >= 0.0)) throw ConfigError("tau must be nonnegative");
  }
  double rho(uint64_t t) const;
};

struct LearnerConfig {
  LearnerKind kind = LearnerKind::MlFw;
  HyperParams hp;
  StepSchedule schedule;
  std::optional<uint64_t> corpus_size;  // D, required by the online kinds only

  FwConfig fw{.max_iters = 30, .rel_tol = 1e-6, .track_objective = false};
  GibbsConfig gibbs;
  int vb_max_iters = 50;
  double vb_rel_tol = 1e-4;
  int cvb0_sweeps = 50;
  int cvb0_burn_in = 25;

  uint64_t master_seed = 0;
  int threads = 0;  // 0 = resolve from environment

  void validate() const;
};

struct LearnerState {
  LearnerKind kind = LearnerKind::MlFw;
  uint64_t t = 0;  // minibatches consumed
  TopicMatrix beta;          // point model (ML-FW)
  VariationalTopics lambda;  // Dirichlet model (all other kinds)

  int num_topics() const;
  int vocab_size() const;

  static LearnerState init(const LearnerConfig& cfg, int vocab_size);
};

struct MinibatchReport {
  uint64_t t = 0;
  int docs_processed = 0;  // non-empty documents
  double mean_theta_support = 0.0;
  double mean_local_iters = 0.0;
  double local_time = 0.0;   // inference plus statistics gathering, seconds
  double update_time = 0.0;  // global model update, seconds
};

// One stochastic step: local inference for every document in the batch
// against a snapshot of the model, then a single-writer global update.
// Results do not depend on the thread count.
MinibatchReport learner_step(LearnerState& state, std::span<const SparseDocument> batch,
                             const LearnerConfig& cfg);

MinibatchReport mlfw_step(LearnerState& state, std::span<const SparseDocument> batch,
                          const LearnerConfig& cfg);
MinibatchReport onlinefw_step(LearnerState& state, std::span<const SparseDocument> batch,
                              const LearnerConfig& cfg);
MinibatchReport streamingfw_step(LearnerState& state, std::span<const SparseDocument> batch,
                                 const LearnerConfig& cfg);
MinibatchReport onlinevb_step(LearnerState& state, std::span<const SparseDocument> batch,
                              const LearnerConfig& cfg);
MinibatchReport streamingvb_step(LearnerState& state, std::span<const SparseDocument> batch,
                                 const LearnerConfig& cfg);
MinibatchReport onlinecgs_step(LearnerState& state, std::span<const SparseDocument> batch,
                               const LearnerConfig& cfg);
MinibatchReport onlinecvb0_step(LearnerState& state, std::span<const SparseDocument> batch,
                                const LearnerConfig& cfg);

struct RunOptions {
  uint64_t max_minibatches = 0;  // 0 = until the stream ends
  double max_seconds = 0.0;      // 0 = no wall-clock cap
  uint64_t checkpoint_every = 0;
  std::function<void(const LearnerState&)> checkpoint_writer;
  // Called after every step; return false to stop the run.
  std::function<bool(const LearnerState&, const MinibatchReport&)> on_report;
  bool collect_reports = true;
};

struct RunResult {
  LearnerState state;
  std::vector<MinibatchReport> reports;
};

// Drives next-minibatch -> step -> report until the stream ends or a limit
// hits. Pass a resumed state (with stream already skipped to state.t) to
// continue an earlier run; otherwise a fresh state is built for vocab_size.
RunResult run_learner(MinibatchStream& stream, const LearnerConfig& cfg, int vocab_size,
                      const RunOptions& opts = {},
                      std::optional<LearnerState> initial = std::nullopt);

}  // namespace slda
