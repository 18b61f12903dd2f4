#include "slda/learners.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "slda/parallel.hpp"

namespace slda {

namespace {
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}
}  // namespace

const char* learner_name(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::MlFw: return "ml-fw";
    case LearnerKind::OnlineFw: return "online-fw";
    case LearnerKind::StreamingFw: return "streaming-fw";
    case LearnerKind::OnlineVb: return "online-vb";
    case LearnerKind::StreamingVb: return "streaming-vb";
    case LearnerKind::OnlineCgs: return "online-cgs";
    case LearnerKind::OnlineCvb0: return "online-cvb0";
  }
  return "?";
}

LearnerKind parse_learner_kind(const std::string& name) {
  for (LearnerKind k : {LearnerKind::MlFw, LearnerKind::OnlineFw, LearnerKind::StreamingFw,
                        LearnerKind::OnlineVb, LearnerKind::StreamingVb, LearnerKind::OnlineCgs,
                        LearnerKind::OnlineCvb0})
    if (name == learner_name(k)) return k;
  throw ConfigError("unknown learner: " + name);
}

bool learner_requires_corpus_size(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::OnlineFw:
    case LearnerKind::OnlineVb:
    case LearnerKind::OnlineCgs:
    case LearnerKind::OnlineCvb0:
      return true;
    default:
      return false;
  }
}

bool learner_uses_point_model(LearnerKind kind) { return kind == LearnerKind::MlFw; }

double StepSchedule::rho(uint64_t t) const {
  return std::pow(tau + static_cast<double>(t), -kappa);
}

void LearnerConfig::validate() const {
  hp.validate();
  schedule.validate();
  if (learner_requires_corpus_size(kind)) {
    if (!corpus_size.has_value() || *corpus_size == 0)
      throw ConfigError(std::string(learner_name(kind)) +
                        " requires the corpus size (number of documents)");
  } else if (corpus_size.has_value()) {
    throw ConfigError(std::string(learner_name(kind)) +
                      " is stream-capable and must not be given a corpus size");
  }
  if (fw.max_iters < 1) throw ConfigError("FW iteration budget must be positive");
  if (vb_max_iters < 1) throw ConfigError("VB iteration budget must be positive");
  if (gibbs.samples < 1) throw ConfigError("CGS needs at least one retained sample");
  if (gibbs.burn_in < 0) throw ConfigError("CGS burn-in must be nonnegative");
  if (cvb0_burn_in < 0 || cvb0_burn_in >= cvb0_sweeps)
    throw ConfigError("CVB0 burn-in must lie in [0, sweeps)");
}

int LearnerState::num_topics() const {
  return learner_uses_point_model(kind) ? beta.num_topics() : lambda.num_topics();
}

int LearnerState::vocab_size() const {
  return learner_uses_point_model(kind) ? beta.vocab_size() : lambda.vocab_size();
}

LearnerState LearnerState::init(const LearnerConfig& cfg, int vocab_size) {
  cfg.validate();
  if (vocab_size < 1) throw ConfigError("vocabulary must be nonempty");
  LearnerState st;
  st.kind = cfg.kind;
  st.t = 0;
  uint64_t seed = derive_seed(cfg.master_seed, "init-model");
  if (learner_uses_point_model(cfg.kind))
    st.beta = TopicMatrix::random(cfg.hp.K, vocab_size, seed);
  else
    st.lambda = VariationalTopics::random(cfg.hp.K, vocab_size, seed);
  return st;
}

namespace {

// Per-document output of the local phase. stats is n_d x K and already
// count-weighted: stats(j, k) = d_j * phi_djk (unused by ML-FW, which folds
// theta directly).
struct DocResult {
  bool skipped = false;
  int support = 0;
  int iters = 0;
  std::vector<double> theta;
  Matrix stats;
};

// Aggregates token-level phi to count-weighted term-level stats.
Matrix token_phi_to_term_stats(const SparseDocument& doc, const Matrix& token_phi) {
  const int K = token_phi.cols;
  Matrix stats(doc.num_terms(), K);
  int token = 0;
  for (int j = 0; j < doc.num_terms(); ++j) {
    for (int64_t c = 0; c < doc.entries[static_cast<size_t>(j)].count; ++c, ++token)
      for (int k = 0; k < K; ++k) stats(j, k) += token_phi(token, k);
  }
  return stats;
}

DocResult run_local(const SparseDocument& doc, const LearnerState& state,
                    const TopicMatrix& beta_snapshot, const LearnerConfig& cfg, uint64_t seed) {
  DocResult out;
  switch (cfg.kind) {
    case LearnerKind::MlFw: {
      FwResult r = fw_infer_theta(doc, beta_snapshot, cfg.fw);
      out.support = r.support_size;
      out.iters = r.iters_used;
      out.theta = std::move(r.theta.w);
      return out;
    }
    case LearnerKind::OnlineFw:
    case LearnerKind::StreamingFw: {
      FwResult r = fw_infer_theta(doc, beta_snapshot, cfg.fw);
      out.support = r.support_size;
      out.iters = r.iters_used;
      Matrix phi = recover_phi_from_theta(r.theta, doc, beta_snapshot);
      for (int j = 0; j < doc.num_terms(); ++j) {
        double d = static_cast<double>(doc.entries[static_cast<size_t>(j)].count);
        for (int k = 0; k < phi.cols; ++k) phi(j, k) *= d;
      }
      out.stats = std::move(phi);
      return out;
    }
    case LearnerKind::OnlineVb:
    case LearnerKind::StreamingVb: {
      LocalPosterior post =
          vb_infer(doc, state.lambda, cfg.hp, cfg.vb_max_iters, cfg.vb_rel_tol, seed);
      out.support = post.support_size;
      out.iters = post.iters;
      Matrix stats = std::move(post.phi);
      for (int j = 0; j < doc.num_terms(); ++j) {
        double d = static_cast<double>(doc.entries[static_cast<size_t>(j)].count);
        for (int k = 0; k < stats.cols; ++k) stats(j, k) *= d;
      }
      out.stats = std::move(stats);
      return out;
    }
    case LearnerKind::OnlineCgs: {
      GibbsConfig gc = cfg.gibbs;
      gc.seed = seed;
      LocalPosterior post = cgs_infer(doc, state.lambda, cfg.hp, gc);
      out.support = post.support_size;
      out.iters = post.iters;
      out.stats = token_phi_to_term_stats(doc, post.phi);
      return out;
    }
    case LearnerKind::OnlineCvb0: {
      LocalPosterior post =
          cvb0_infer(doc, state.lambda, cfg.hp, cfg.cvb0_sweeps, cfg.cvb0_burn_in, seed);
      out.support = post.support_size;
      out.iters = post.iters;
      out.stats = token_phi_to_term_stats(doc, post.phi);
      return out;
    }
  }
  throw ConfigError("unhandled learner kind");
}

}  // namespace

MinibatchReport learner_step(LearnerState& state, std::span<const SparseDocument> batch,
                             const LearnerConfig& cfg) {
  if (state.kind != cfg.kind) throw ConfigError("learner_step: state/config kind mismatch");
  MinibatchReport report;
  if (batch.empty()) {
    std::fprintf(stderr, "[slda] warning: %s step %llu received an empty batch, skipping\n",
                 learner_name(cfg.kind), static_cast<unsigned long long>(state.t + 1));
    report.t = state.t;
    return report;
  }

  const uint64_t t = state.t + 1;
  const int K = state.num_topics();
  const int V = state.vocab_size();
  const int threads = resolve_threads(cfg.threads);

  auto local_start = Clock::now();

  // Model snapshot for the local steps. FW kinds read a point topic matrix;
  // for variational models that is the row-normalized lambda.
  TopicMatrix beta_snapshot;
  switch (cfg.kind) {
    case LearnerKind::MlFw:
      break;  // state.beta is read directly; the update below never aliases it
    case LearnerKind::OnlineFw:
    case LearnerKind::StreamingFw:
      beta_snapshot = state.lambda.expected_beta();
      break;
    default:
      break;  // vb/cgs/cvb0 read state.lambda directly
  }
  const TopicMatrix& beta_ref = cfg.kind == LearnerKind::MlFw ? state.beta : beta_snapshot;

  Matrix ss(K, V);
  int processed = 0;
  int64_t skipped_empty = 0;
  double support_total = 0.0;
  double iters_total = 0.0;

  // Chunked local phase: a chunk of documents is inferred in parallel, then
  // folded serially in document order, so results are identical for any
  // thread count.
  const size_t chunk_docs = 256;
  std::vector<DocResult> results;
  for (size_t begin = 0; begin < batch.size(); begin += chunk_docs) {
    const size_t end = std::min(begin + chunk_docs, batch.size());
    results.assign(end - begin, DocResult{});
    parallel_for(static_cast<int64_t>(end - begin), threads, [&](int64_t local_idx) {
      const size_t i = begin + static_cast<size_t>(local_idx);
      const SparseDocument& doc = batch[i];
      if (doc.empty()) {
        results[static_cast<size_t>(local_idx)].skipped = true;
        return;
      }
      uint64_t seed = derive_seed(cfg.master_seed, "local", t, static_cast<uint64_t>(i));
      results[static_cast<size_t>(local_idx)] = run_local(doc, state, beta_ref, cfg, seed);
    });

    for (size_t local_idx = 0; local_idx < results.size(); ++local_idx) {
      const DocResult& r = results[local_idx];
      const SparseDocument& doc = batch[begin + local_idx];
      if (r.skipped) {
        ++skipped_empty;
        continue;
      }
      ++processed;
      support_total += r.support;
      iters_total += r.iters;
      if (cfg.kind == LearnerKind::MlFw) {
        for (int j = 0; j < doc.num_terms(); ++j) {
          const auto& e = doc.entries[static_cast<size_t>(j)];
          double d = static_cast<double>(e.count);
          for (int k = 0; k < K; ++k) ss(k, e.term) += d * r.theta[static_cast<size_t>(k)];
        }
      } else {
        for (int j = 0; j < doc.num_terms(); ++j) {
          const auto& e = doc.entries[static_cast<size_t>(j)];
          for (int k = 0; k < K; ++k) ss(k, e.term) += r.stats(j, k);
        }
      }
    }
  }

  if (skipped_empty > 0)
    std::fprintf(stderr, "[slda] step %llu: skipped %lld empty documents\n",
                 static_cast<unsigned long long>(t), static_cast<long long>(skipped_empty));

  double local_time = seconds_since(local_start);
  auto update_start = Clock::now();

  const double eta = cfg.hp.eta;
  switch (cfg.kind) {
    case LearnerKind::MlFw: {
      double rho = cfg.schedule.rho(t);
      for (int k = 0; k < K; ++k) {
        double* beta_row = state.beta.row(k);
        const double* ss_row = ss.row(k);
        double mass = 0.0;
        for (int j = 0; j < V; ++j) mass += ss_row[j];
        if (mass > 0.0) {
          double inv = 1.0 / mass;
          for (int j = 0; j < V; ++j)
            beta_row[j] = (1.0 - rho) * beta_row[j] + rho * (ss_row[j] * inv);
        }
        // zero-mass topic rows carry the previous row through unchanged
      }
      break;
    }
    case LearnerKind::OnlineFw:
    case LearnerKind::OnlineVb:
    case LearnerKind::OnlineCgs:
    case LearnerKind::OnlineCvb0: {
      double rho = cfg.schedule.rho(t);
      double scale = static_cast<double>(*cfg.corpus_size) / static_cast<double>(batch.size());
      for (int k = 0; k < K; ++k) {
        double* lam = state.lambda.lambda.row(k);
        const double* ss_row = ss.row(k);
        for (int j = 0; j < V; ++j)
          lam[j] = (1.0 - rho) * lam[j] + rho * (eta + scale * ss_row[j]);
      }
      state.lambda.recompute_row_sums();
      break;
    }
    case LearnerKind::StreamingFw:
    case LearnerKind::StreamingVb: {
      // additive posterior update, keeping eta inside the minibatch statistics
      for (int k = 0; k < K; ++k) {
        double* lam = state.lambda.lambda.row(k);
        const double* ss_row = ss.row(k);
        for (int j = 0; j < V; ++j) lam[j] += eta + ss_row[j];
      }
      state.lambda.recompute_row_sums();
      break;
    }
  }

  state.t = t;
  report.t = t;
  report.docs_processed = processed;
  report.mean_theta_support = processed > 0 ? support_total / processed : 0.0;
  report.mean_local_iters = processed > 0 ? iters_total / processed : 0.0;
  report.local_time = local_time;
  report.update_time = seconds_since(update_start);
  return report;
}

namespace {
MinibatchReport step_as(LearnerKind kind, LearnerState& state,
                        std::span<const SparseDocument> batch, const LearnerConfig& cfg) {
  if (cfg.kind != kind)
    throw ConfigError(std::string("step called for ") + learner_name(kind) +
                      " but config says " + learner_name(cfg.kind));
  return learner_step(state, batch, cfg);
}
}  // namespace

MinibatchReport mlfw_step(LearnerState& s, std::span<const SparseDocument> b,
                          const LearnerConfig& c) {
  return step_as(LearnerKind::MlFw, s, b, c);
}
MinibatchReport onlinefw_step(LearnerState& s, std::span<const SparseDocument> b,
                              const LearnerConfig& c) {
  return step_as(LearnerKind::OnlineFw, s, b, c);
}
MinibatchReport streamingfw_step(LearnerState& s, std::span<const SparseDocument> b,
                                 const LearnerConfig& c) {
  return step_as(LearnerKind::StreamingFw, s, b, c);
}
MinibatchReport onlinevb_step(LearnerState& s, std::span<const SparseDocument> b,
                              const LearnerConfig& c) {
  return step_as(LearnerKind::OnlineVb, s, b, c);
}
MinibatchReport streamingvb_step(LearnerState& s, std::span<const SparseDocument> b,
                                 const LearnerConfig& c) {
  return step_as(LearnerKind::StreamingVb, s, b, c);
}
MinibatchReport onlinecgs_step(LearnerState& s, std::span<const SparseDocument> b,
                               const LearnerConfig& c) {
  return step_as(LearnerKind::OnlineCgs, s, b, c);
}
MinibatchReport onlinecvb0_step(LearnerState& s, std::span<const SparseDocument> b,
                                const LearnerConfig& c) {
  return step_as(LearnerKind::OnlineCvb0, s, b, c);
}

RunResult run_learner(MinibatchStream& stream, const LearnerConfig& cfg, int vocab_size,
                      const RunOptions& opts, std::optional<LearnerState> initial) {
  cfg.validate();
  RunResult result;
  if (initial.has_value()) {
    if (initial->kind != cfg.kind) throw ConfigError("run_learner: resumed state kind mismatch");
    result.state = std::move(*initial);
  } else {
    result.state = LearnerState::init(cfg, vocab_size);
  }

  auto start = Clock::now();
  for (;;) {
    if (opts.max_minibatches > 0 && result.state.t >= opts.max_minibatches) break;
    if (opts.max_seconds > 0.0 && seconds_since(start) >= opts.max_seconds) break;
    auto batch = stream.next();
    if (!batch.has_value()) break;
    MinibatchReport report = learner_step(result.state, *batch, cfg);
    if (opts.collect_reports) result.reports.push_back(report);
    if (opts.checkpoint_every > 0 && result.state.t % opts.checkpoint_every == 0 &&
        opts.checkpoint_writer)
      opts.checkpoint_writer(result.state);
    if (opts.on_report && !opts.on_report(result.state, report)) break;
  }
  return result;
}

}  // namespace slda
