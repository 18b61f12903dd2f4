// Command-line front end: train, infer, eval, bench, make-synthetic.
// Exit codes: 0 success, 1 runtime/I-O failure, 2 usage or config error.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include "slda/corpus.hpp"
#include "slda/eval.hpp"
#include "slda/inference.hpp"
#include "slda/learners.hpp"
#include "slda/metrics_io.hpp"
#include "slda/model_io.hpp"
#include "slda/parallel.hpp"
#include "slda/synthetic.hpp"

using namespace slda;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

struct TrainArgs {
  std::string corpus_path;
  std::string vocab_path;
  std::string learner = "ml-fw";
  int k = 100;
  double alpha = -1.0;  // resolved below: 1/K, or 1 for FW-based learners
  double eta = -1.0;    // resolved below: 1/K
  int batch = 5000;
  double kappa = 0.9;
  double tau = 1.0;
  int fw_iters = 30;
  double fw_tol = 1e-6;
  int vb_iters = 50;
  double vb_tol = 1e-4;
  int gibbs_burnin = 25;
  int gibbs_samples = 25;
  int cvb0_sweeps = 50;
  int cvb0_burnin = 25;
  uint64_t num_docs = 0;
  uint64_t seed = 42;
  uint64_t epochs = 1;
  uint64_t max_minibatches = 0;
  double max_seconds = 0.0;
  uint64_t checkpoint_every = 0;
  uint64_t eval_every = 10;
  std::string test_corpus_path;
  std::string eval_method;
  int eval_docs = 1000;
  int eval_splits = 5;
  double eval_ratio = 0.8;
  int npmi_top = 10;
  std::string out_dir;
  std::string resume_path;
  int threads = 0;
};

bool learner_is_fw_based(LearnerKind kind) {
  return kind == LearnerKind::MlFw || kind == LearnerKind::OnlineFw ||
         kind == LearnerKind::StreamingFw;
}

InferMethod default_eval_method(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::MlFw:
    case LearnerKind::OnlineFw:
    case LearnerKind::StreamingFw:
      return InferMethod::FW;
    case LearnerKind::OnlineVb:
    case LearnerKind::StreamingVb:
      return InferMethod::VB;
    case LearnerKind::OnlineCgs:
      return InferMethod::CGS;
    case LearnerKind::OnlineCvb0:
      return InferMethod::CVB0;
  }
  return InferMethod::FW;
}

LearnerConfig learner_config_from(const TrainArgs& args, LearnerKind kind) {
  LearnerConfig cfg;
  cfg.kind = kind;
  double alpha = args.alpha;
  if (alpha < 0.0) alpha = learner_is_fw_based(kind) ? 1.0 : 1.0 / args.k;
  if (learner_is_fw_based(kind) && alpha != 1.0)
    throw ConfigError("FW-based learners solve the alpha = 1 objective; leave --alpha unset");
  double eta = args.eta < 0.0 ? 1.0 / args.k : args.eta;
  cfg.hp = {.alpha = alpha, .eta = eta, .K = args.k};
  cfg.schedule = {.tau = args.tau, .kappa = args.kappa};
  if (args.num_docs > 0) cfg.corpus_size = args.num_docs;
  cfg.fw = {.max_iters = args.fw_iters, .rel_tol = args.fw_tol, .track_objective = false};
  cfg.gibbs = {.burn_in = args.gibbs_burnin, .samples = args.gibbs_samples, .seed = 0};
  cfg.vb_max_iters = args.vb_iters;
  cfg.vb_rel_tol = args.vb_tol;
  cfg.cvb0_sweeps = args.cvb0_sweeps;
  cfg.cvb0_burn_in = args.cvb0_burnin;
  cfg.master_seed = args.seed;
  cfg.threads = args.threads;
  return cfg;
}

json config_echo(const TrainArgs& args, const LearnerConfig& cfg, int vocab_size) {
  json j;
  j["learner"] = learner_name(cfg.kind);
  j["corpus"] = args.corpus_path;
  j["vocab"] = args.vocab_path;
  j["k"] = cfg.hp.K;
  j["alpha"] = cfg.hp.alpha;
  j["eta"] = cfg.hp.eta;
  j["batch"] = args.batch;
  j["kappa"] = cfg.schedule.kappa;
  j["tau"] = cfg.schedule.tau;
  j["fw_iters"] = cfg.fw.max_iters;
  j["fw_tol"] = cfg.fw.rel_tol;
  j["vb_iters"] = cfg.vb_max_iters;
  j["vb_tol"] = cfg.vb_rel_tol;
  j["gibbs_burnin"] = cfg.gibbs.burn_in;
  j["gibbs_samples"] = cfg.gibbs.samples;
  j["cvb0_sweeps"] = cfg.cvb0_sweeps;
  j["cvb0_burnin"] = cfg.cvb0_burn_in;
  if (cfg.corpus_size) j["num_docs"] = *cfg.corpus_size;
  j["master_seed"] = cfg.master_seed;
  j["epochs"] = args.epochs;
  j["threads"] = resolve_threads(cfg.threads);
  j["vocab_size"] = vocab_size;
  j["eval_every"] = args.eval_every;
  j["eval_docs"] = args.eval_docs;
  j["eval_splits"] = args.eval_splits;
  j["eval_ratio"] = args.eval_ratio;
  j["npmi_top"] = args.npmi_top;
  return j;
}

double sparsity_of_report(LearnerKind kind, const MinibatchReport& report, int K) {
  switch (kind) {
    case LearnerKind::MlFw:
    case LearnerKind::OnlineFw:
    case LearnerKind::StreamingFw:
    case LearnerKind::OnlineCgs:
      return report.mean_theta_support / static_cast<double>(K);
    default:
      return 1.0;  // dense posteriors
  }
}

int cmd_train(const TrainArgs& args) {
  LearnerKind kind = parse_learner_kind(args.learner);
  LearnerConfig cfg = learner_config_from(args, kind);
  cfg.validate();

  Corpus corpus = load_corpus_any(args.corpus_path);
  std::optional<Vocabulary> vocab;
  if (!args.vocab_path.empty()) {
    vocab = load_vocab(args.vocab_path);
    if (vocab->size() != corpus.vocab_size)
      throw ConfigError("vocabulary size " + std::to_string(vocab->size()) +
                        " does not match corpus vocabulary " + std::to_string(corpus.vocab_size));
  }
  int empties = corpus.count_empty_docs();
  if (empties > 0)
    std::fprintf(stderr, "[slda] corpus has %d empty documents (retained, skipped by learners)\n",
                 empties);

  std::optional<Corpus> test_corpus;
  if (!args.test_corpus_path.empty()) test_corpus = load_corpus_any(args.test_corpus_path);

  std::filesystem::create_directories(args.out_dir);

  std::optional<LearnerState> initial;
  if (!args.resume_path.empty()) {
    ModelFile ckpt = load_model(args.resume_path);
    if (ckpt.master_seed != cfg.master_seed)
      throw ConfigError("checkpoint was produced with a different master seed");
    if (ckpt.K != cfg.hp.K || ckpt.V != corpus.vocab_size)
      throw ConfigError("checkpoint dimensions do not match this run");
    initial = state_from_model(ckpt);
    if (initial->kind != kind) throw ConfigError("checkpoint learner kind mismatch");
  }

  StreamMode mode = args.epochs == 1 ? StreamMode::SinglePass : StreamMode::ShuffledEpochs;
  MinibatchStream stream(corpus, args.batch, derive_seed(cfg.master_seed, "stream"), mode,
                         args.epochs);
  if (initial) stream.skip(initial->t);

  PredictiveConfig eval_cfg;
  eval_cfg.ratio = args.eval_ratio;
  eval_cfg.num_splits = args.eval_splits;
  eval_cfg.test_docs = args.eval_docs;
  eval_cfg.seed = derive_seed(cfg.master_seed, "eval");
  eval_cfg.method = args.eval_method.empty() ? default_eval_method(kind)
                                             : parse_infer_method(args.eval_method);
  eval_cfg.hp = cfg.hp;
  eval_cfg.gibbs = cfg.gibbs;
  eval_cfg.vb_max_iters = cfg.vb_max_iters;
  eval_cfg.vb_rel_tol = cfg.vb_rel_tol;
  eval_cfg.cvb0_sweeps = cfg.cvb0_sweeps;
  eval_cfg.cvb0_burn_in = cfg.cvb0_burn_in;
  eval_cfg.threads = cfg.threads;

  std::vector<MetricsRow> metrics;
  double train_seconds = 0.0;
  int64_t docs_seen = initial ? -1 : 0;  // docs_seen unknown when resuming mid-stream
  if (initial) docs_seen = static_cast<int64_t>(initial->t) * args.batch;

  auto evaluate_now = [&](const LearnerState& state, const MinibatchReport& report) {
    MetricsRow row;
    row.minibatch_t = state.t;
    row.docs_seen = docs_seen;
    row.wall_time_s = train_seconds;
    row.mean_sparsity = sparsity_of_report(kind, report, cfg.hp.K);
    row.mean_infer_ms =
        report.docs_processed > 0 ? 1000.0 * report.local_time / report.docs_processed : 0.0;
    if (test_corpus) {
      EvalModel model = eval_model_from(model_from_state(state, cfg));
      row.log_pred_prob = log_predictive_probability(model, *test_corpus, eval_cfg).log_pred_prob;
      row.npmi = npmi(model, corpus, {.top_n = args.npmi_top}).mean;
    }
    metrics.push_back(row);
  };

  RunOptions opts;
  opts.max_minibatches = args.max_minibatches;
  opts.max_seconds = args.max_seconds;
  opts.checkpoint_every = args.checkpoint_every;
  if (args.checkpoint_every > 0) {
    opts.checkpoint_writer = [&](const LearnerState& state) {
      save_model(args.out_dir + "/checkpoint_t" + std::to_string(state.t) + ".slda",
                 model_from_state(state, cfg));
    };
  }
  opts.collect_reports = false;
  opts.on_report = [&](const LearnerState& state, const MinibatchReport& report) {
    train_seconds += report.local_time + report.update_time;
    docs_seen += args.batch;  // emitted batch size; the final one may be short
    if (args.eval_every > 0 && state.t % args.eval_every == 0) evaluate_now(state, report);
    return true;
  };

  RunResult result = run_learner(stream, cfg, corpus.vocab_size, opts, std::move(initial));

  ModelFile final_model = model_from_state(result.state, cfg);
  save_model(args.out_dir + "/model.slda", final_model);
  write_metrics_csv(args.out_dir + "/metrics.csv", metrics);
  json metadata;
  metadata["empty_documents"] = empties;
  metadata["npmi_zero_cooccurrence_pairs"] = "assigned analytic limit -1";
  metadata["final_t"] = result.state.t;
  write_metrics_json(args.out_dir + "/metrics.json", config_echo(args, cfg, corpus.vocab_size),
                     metrics, metadata);
  std::printf("trained %s for %llu minibatches; model written to %s/model.slda\n",
              learner_name(kind), static_cast<unsigned long long>(result.state.t),
              args.out_dir.c_str());
  return 0;
}

struct InferArgs {
  std::string model_path;
  std::string corpus_path;
  std::string out_path;
  std::string phi_path;
  std::string method;
  int fw_iters = 50;
  double fw_tol = 1e-6;
  int vb_iters = 50;
  double vb_tol = 1e-4;
  int gibbs_burnin = 25;
  int gibbs_samples = 25;
  int cvb0_sweeps = 50;
  int cvb0_burnin = 25;
  double alpha = -1.0;
  uint64_t seed = 42;
  int threads = 0;
};

int cmd_infer(const InferArgs& args) {
  ModelFile model_file = load_model(args.model_path);
  Corpus corpus = load_corpus_any(args.corpus_path);
  if (model_file.V != corpus.vocab_size)
    throw ConfigError("model vocabulary V=" + std::to_string(model_file.V) +
                      " does not match corpus V=" + std::to_string(corpus.vocab_size));
  EvalModel model = eval_model_from(model_file);

  InferMethod method = args.method.empty()
                           ? default_eval_method(parse_learner_kind(
                                 model_file.is_point() ? "ml-fw" : model_file.kind))
                           : parse_infer_method(args.method);
  if (method != InferMethod::FW && !model.is_variational())
    throw ConfigError("method '" + std::string(infer_method_name(method)) +
                      "' needs a variational model; this file holds a point estimate");

  HyperParams hp{.alpha = args.alpha > 0.0 ? args.alpha : (model_file.alpha > 0.0 ? model_file.alpha : 1.0),
                 .eta = model_file.eta > 0.0 ? model_file.eta : 0.01,
                 .K = model_file.K};

  std::FILE* out = args.out_path.empty() ? stdout : std::fopen(args.out_path.c_str(), "w");
  if (!out) throw RuntimeFailure("cannot write " + args.out_path);
  std::FILE* phi_out = nullptr;
  if (!args.phi_path.empty()) {
    phi_out = std::fopen(args.phi_path.c_str(), "w");
    if (!phi_out) throw RuntimeFailure("cannot write " + args.phi_path);
  }

  for (int d = 0; d < corpus.num_docs(); ++d) {
    const SparseDocument& doc = corpus.docs[static_cast<size_t>(d)];
    if (doc.empty()) {
      std::fprintf(out, "%d SKIPPED\n", d);
      continue;
    }
    uint64_t seed = derive_seed(args.seed, "cli-infer", static_cast<uint64_t>(d));
    LocalPosterior post;
    switch (method) {
      case InferMethod::FW:
        post = fw_posterior(doc, model.expected_beta(),
                            {.max_iters = args.fw_iters, .rel_tol = args.fw_tol});
        break;
      case InferMethod::VB:
        post = vb_infer(doc, model.lambda(), hp, args.vb_iters, args.vb_tol, seed);
        break;
      case InferMethod::CVB:
        post = cvb_infer(doc, model.lambda(), hp, args.cvb0_sweeps, seed);
        break;
      case InferMethod::CVB0:
        post = cvb0_infer(doc, model.lambda(), hp, args.cvb0_sweeps, args.cvb0_burnin, seed);
        break;
      case InferMethod::CGS:
        post = cgs_infer(doc, model.lambda(), hp,
                         {.burn_in = args.gibbs_burnin, .samples = args.gibbs_samples, .seed = seed});
        break;
    }
    std::fprintf(out, "%d", d);
    for (int k = 0; k < post.theta.dim(); ++k)
      if (post.theta.w[static_cast<size_t>(k)] > 0.0)
        std::fprintf(out, " %d:%.6f", k, post.theta.w[static_cast<size_t>(k)]);
    std::fprintf(out, "\n");

    if (phi_out) {
      Matrix phi = method == InferMethod::FW
                       ? recover_phi_from_theta(post.theta, doc, model.expected_beta())
                       : Matrix();
      const Matrix& rows = phi.empty() ? post.phi : phi;
      if (!rows.empty() && !post.phi_token_level) {
        for (int j = 0; j < doc.num_terms(); ++j) {
          std::fprintf(phi_out, "%d %d", d, doc.entries[static_cast<size_t>(j)].term);
          for (int k = 0; k < rows.cols; ++k)
            if (rows(j, k) > 1e-9) std::fprintf(phi_out, " %d:%.6f", k, rows(j, k));
          std::fprintf(phi_out, "\n");
        }
      }
    }
  }
  if (out != stdout) std::fclose(out);
  if (phi_out) std::fclose(phi_out);
  return 0;
}

struct EvalArgs {
  std::string model_path;
  std::string test_corpus_path;
  std::string train_corpus_path;
  std::string out_prefix;
  std::string method;
  int eval_docs = 1000;
  int eval_splits = 5;
  double eval_ratio = 0.8;
  int npmi_top = 10;
  int fw_iters = 50;
  int vb_iters = 50;
  int gibbs_burnin = 25;
  int gibbs_samples = 25;
  int cvb0_sweeps = 50;
  int cvb0_burnin = 25;
  uint64_t seed = 42;
  int threads = 0;
};

int cmd_eval(const EvalArgs& args) {
  ModelFile model_file = load_model(args.model_path);
  Corpus test = load_corpus_any(args.test_corpus_path);
  if (model_file.V != test.vocab_size)
    throw ConfigError("model vocabulary V=" + std::to_string(model_file.V) +
                      " does not match corpus V=" + std::to_string(test.vocab_size));
  EvalModel model = eval_model_from(model_file);

  PredictiveConfig cfg;
  cfg.ratio = args.eval_ratio;
  cfg.num_splits = args.eval_splits;
  cfg.test_docs = args.eval_docs;
  cfg.seed = args.seed;
  cfg.method = args.method.empty()
                   ? default_eval_method(parse_learner_kind(
                         model_file.is_point() ? "ml-fw" : model_file.kind))
                   : parse_infer_method(args.method);
  cfg.hp = {.alpha = model_file.alpha > 0.0 ? model_file.alpha : 1.0,
            .eta = model_file.eta > 0.0 ? model_file.eta : 0.01,
            .K = model_file.K};
  cfg.fw.max_iters = args.fw_iters;
  cfg.vb_max_iters = args.vb_iters;
  cfg.gibbs = {.burn_in = args.gibbs_burnin, .samples = args.gibbs_samples, .seed = 0};
  cfg.cvb0_sweeps = args.cvb0_sweeps;
  cfg.cvb0_burn_in = args.cvb0_burnin;
  cfg.threads = args.threads;
  if (cfg.method != InferMethod::FW && !model.is_variational())
    throw ConfigError("method '" + std::string(infer_method_name(cfg.method)) +
                      "' needs a variational model; this file holds a point estimate");

  PredictiveResult pred = log_predictive_probability(model, test, cfg);
  const Corpus* reference = &test;
  Corpus train;
  bool reference_is_test = true;
  if (!args.train_corpus_path.empty()) {
    train = load_corpus_any(args.train_corpus_path);
    reference = &train;
    reference_is_test = false;
  }
  NpmiResult coherence = npmi(model, *reference, {.top_n = args.npmi_top});

  MetricsRow row;
  row.minibatch_t = model_file.t;
  row.docs_seen = 0;
  row.wall_time_s = 0.0;
  row.log_pred_prob = pred.log_pred_prob;
  row.npmi = coherence.mean;
  row.mean_sparsity = 0.0;
  row.mean_infer_ms = 0.0;

  json config;
  config["model"] = args.model_path;
  config["model_kind"] = model_file.kind;
  config["test_corpus"] = args.test_corpus_path;
  config["train_corpus"] = args.train_corpus_path;
  config["method"] = infer_method_name(cfg.method);
  config["ratio"] = cfg.ratio;
  config["num_splits"] = cfg.num_splits;
  config["test_docs"] = cfg.test_docs;
  config["npmi_top"] = args.npmi_top;
  config["seed"] = args.seed;
  config["k"] = model_file.K;
  config["alpha"] = cfg.hp.alpha;

  json metadata;
  metadata["per_split"] = pred.per_split;
  metadata["per_topic_npmi"] = coherence.per_topic;
  metadata["skipped_docs"] = pred.skipped_docs;
  metadata["used_docs"] = pred.used_docs;
  metadata["npmi_zero_cooccurrence_pairs"] = "assigned analytic limit -1";
  metadata["npmi_reference"] = reference_is_test ? "test corpus" : "training corpus";

  if (!args.out_prefix.empty()) {
    std::filesystem::path prefix(args.out_prefix);
    if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
    std::vector<MetricsRow> rows{row};
    write_metrics_csv(args.out_prefix + ".csv", rows);
    write_metrics_json(args.out_prefix + ".json", config, rows, metadata);
  }
  std::printf("log_pred_prob %.6f nats/token (%d docs, %d skipped), npmi %.6f\n",
              pred.log_pred_prob, pred.used_docs, pred.skipped_docs, coherence.mean);
  return 0;
}

struct BenchArgs {
  std::string model_path;
  std::string corpus_path;
  int docs = 1000;
  double pseudo_counts = 1000.0;
  double alpha = -1.0;
  int fw_iters = 50;
  double fw_tol = 1e-6;
  int vb_iters = 50;
  double vb_tol = 1e-4;
  int gibbs_burnin = 25;
  int gibbs_samples = 25;
  int cvb0_sweeps = 50;
  int cvb0_burnin = 25;
  uint64_t seed = 42;
  bool compare_threads = false;
  int threads = 0;
};

int cmd_bench(const BenchArgs& args) {
  ModelFile model_file = load_model(args.model_path);
  Corpus corpus = load_corpus_any(args.corpus_path);
  if (model_file.V != corpus.vocab_size)
    throw ConfigError("model/corpus vocabulary mismatch: " + std::to_string(model_file.V) +
                      " vs " + std::to_string(corpus.vocab_size));

  // Every method needs Dirichlet parameters; point models are lifted with
  // pseudo-counts lambda = eta + c * beta.
  VariationalTopics lambda;
  double eta = model_file.eta > 0.0 ? model_file.eta : 0.01;
  if (model_file.is_point()) {
    lambda = VariationalTopics(model_file.K, model_file.V);
    for (int k = 0; k < model_file.K; ++k)
      for (int j = 0; j < model_file.V; ++j)
        lambda.lambda(k, j) = eta + args.pseudo_counts * model_file.payload(k, j);
    lambda.recompute_row_sums();
  } else {
    lambda.lambda = model_file.payload;
    lambda.recompute_row_sums();
  }
  TopicMatrix beta = lambda.expected_beta();
  HyperParams hp{.alpha = args.alpha > 0.0 ? args.alpha
                                           : (model_file.alpha > 0.0 ? model_file.alpha : 1.0),
                 .eta = eta,
                 .K = model_file.K};

  std::vector<const SparseDocument*> docs;
  for (const auto& d : corpus.docs) {
    if (!d.empty()) docs.push_back(&d);
    if (static_cast<int>(docs.size()) >= args.docs) break;
  }
  if (docs.empty()) throw ConfigError("no nonempty documents to benchmark");

  struct MethodTiming {
    const char* name;
    std::vector<double> seconds;
    double mean_iters = 0.0;
  };
  std::vector<MethodTiming> methods{{"fw", {}, 0.0}, {"cgs", {}, 0.0}, {"cvb0", {}, 0.0},
                                    {"vb", {}, 0.0}};

  for (size_t i = 0; i < docs.size(); ++i) {
    uint64_t seed = derive_seed(args.seed, "bench", static_cast<uint64_t>(i));
    LocalPosterior post = fw_posterior(*docs[i], beta, {.max_iters = args.fw_iters,
                                                        .rel_tol = args.fw_tol});
    methods[0].seconds.push_back(post.wall_time);
    methods[0].mean_iters += post.iters;
    post = cgs_infer(*docs[i], lambda, hp,
                     {.burn_in = args.gibbs_burnin, .samples = args.gibbs_samples, .seed = seed});
    methods[1].seconds.push_back(post.wall_time);
    methods[1].mean_iters += post.iters;
    post = cvb0_infer(*docs[i], lambda, hp, args.cvb0_sweeps, args.cvb0_burnin, seed);
    methods[2].seconds.push_back(post.wall_time);
    methods[2].mean_iters += post.iters;
    post = vb_infer(*docs[i], lambda, hp, args.vb_iters, args.vb_tol, seed);
    methods[3].seconds.push_back(post.wall_time);
    methods[3].mean_iters += post.iters;
  }

  std::printf("per-document inference over %zu documents (K=%d, V=%d)\n", docs.size(),
              model_file.K, model_file.V);
  std::printf("%-6s %12s %12s %12s %10s\n", "method", "mean_ms", "median_ms", "p95_ms",
              "mean_iters");
  for (auto& m : methods) {
    TimingSummary s = timing_report(m.seconds);
    std::printf("%-6s %12.4f %12.4f %12.4f %10.1f\n", m.name, s.mean * 1e3, s.median * 1e3,
                s.p95 * 1e3, m.mean_iters / static_cast<double>(docs.size()));
  }

  if (args.compare_threads) {
    // one ML-FW minibatch local+update pass, serial vs parallel
    std::vector<SparseDocument> batch;
    batch.reserve(docs.size());
    for (const auto* d : docs) batch.push_back(*d);
    LearnerConfig cfg;
    cfg.kind = LearnerKind::MlFw;
    cfg.hp = {.alpha = 1.0, .eta = eta, .K = model_file.K};
    cfg.fw = {.max_iters = args.fw_iters, .rel_tol = args.fw_tol, .track_objective = false};
    cfg.master_seed = args.seed;

    auto time_step = [&](int threads) {
      LearnerConfig c = cfg;
      c.threads = threads;
      LearnerState state = LearnerState::init(c, model_file.V);
      state.beta = beta;
      auto start = Clock::now();
      MinibatchReport r = learner_step(state, batch, c);
      double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
      (void)r;
      return elapsed;
    };
    double serial = time_step(1);
    int parallel_threads = resolve_threads(args.threads > 1 ? args.threads : 0);
    double parallel = time_step(parallel_threads);
    std::printf("\nml-fw minibatch of %zu docs: serial %.3fs, %d threads %.3fs (speedup %.2fx)\n",
                batch.size(), serial, parallel_threads, parallel, serial / parallel);
  }
  return 0;
}

struct SynthArgs {
  std::string out_dir;
  int k = 5;
  int vocab = 200;
  int docs = 5000;
  int doc_length = 100;
  double spread = 0.01;
  double doc_alpha = 0.3;
  uint64_t seed = 42;
};

int cmd_make_synthetic(const SynthArgs& args) {
  SyntheticConfig cfg{.K = args.k, .V = args.vocab, .docs = args.docs,
                      .doc_length = args.doc_length, .spread = args.spread,
                      .doc_alpha = args.doc_alpha, .seed = args.seed};
  SyntheticData data = make_synthetic(cfg);
  std::filesystem::create_directories(args.out_dir);
  save_docword(args.out_dir + "/docword.synth.txt", data.corpus);
  save_vocab(args.out_dir + "/vocab.synth.txt", data.vocab);

  ModelFile truth;
  truth.kind = "synthetic-truth";
  truth.K = cfg.K;
  truth.V = cfg.V;
  truth.alpha = cfg.doc_alpha;
  truth.eta = 0.0;
  truth.tau = 0.0;
  truth.kappa = 0.0;
  truth.t = 0;
  truth.master_seed = cfg.seed;
  truth.payload = data.true_beta.m;
  save_model(args.out_dir + "/truth.slda", truth);
  std::printf("wrote %d documents (V=%d, K=%d) to %s\n", cfg.docs, cfg.V, cfg.K,
              args.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse topic-mixture inference and stochastic LDA learning"};
  app.require_subcommand(1);

  TrainArgs train;
  CLI::App* cmd_train_app = app.add_subcommand("train", "Learn a model from a corpus");
  cmd_train_app->add_option("--corpus", train.corpus_path, "docword file (.txt, .txt.gz, .slda)")
      ->required();
  cmd_train_app->add_option("--vocab", train.vocab_path, "vocabulary file");
  cmd_train_app->add_option("--learner", train.learner,
                            "ml-fw|online-fw|streaming-fw|online-vb|streaming-vb|online-cgs|online-cvb0");
  cmd_train_app->add_option("--k", train.k, "number of topics");
  cmd_train_app->add_option("--alpha", train.alpha, "document Dirichlet prior (default 1/K)");
  cmd_train_app->add_option("--eta", train.eta, "topic Dirichlet prior (default 1/K)");
  cmd_train_app->add_option("--batch", train.batch, "minibatch size S");
  cmd_train_app->add_option("--kappa", train.kappa, "forgetting rate");
  cmd_train_app->add_option("--tau", train.tau, "step-size offset");
  cmd_train_app->add_option("--fw-iters", train.fw_iters, "FW iteration cap");
  cmd_train_app->add_option("--fw-tol", train.fw_tol, "FW relative improvement stop");
  cmd_train_app->add_option("--vb-iters", train.vb_iters, "VB iteration cap");
  cmd_train_app->add_option("--vb-tol", train.vb_tol, "VB bound improvement stop");
  cmd_train_app->add_option("--gibbs-burnin", train.gibbs_burnin, "CGS burn-in sweeps");
  cmd_train_app->add_option("--gibbs-samples", train.gibbs_samples, "CGS retained samples");
  cmd_train_app->add_option("--cvb0-sweeps", train.cvb0_sweeps, "CVB0 sweeps");
  cmd_train_app->add_option("--cvb0-burnin", train.cvb0_burnin, "CVB0 burn-in sweeps");
  cmd_train_app->add_option("--num-docs", train.num_docs,
                            "corpus size D (required by online-* learners)");
  cmd_train_app->add_option("--seed", train.seed, "master seed");
  cmd_train_app->add_option("--epochs", train.epochs, "passes over the corpus (0 = loop forever)");
  cmd_train_app->add_option("--max-minibatches", train.max_minibatches, "stop after this many steps");
  cmd_train_app->add_option("--max-seconds", train.max_seconds, "training wall-clock budget");
  cmd_train_app->add_option("--checkpoint-every", train.checkpoint_every,
                            "write a checkpoint every C minibatches");
  cmd_train_app->add_option("--eval-every", train.eval_every, "metrics cadence in minibatches");
  cmd_train_app->add_option("--test-corpus", train.test_corpus_path, "held-out corpus for metrics");
  cmd_train_app->add_option("--eval-method", train.eval_method,
                            "inference method for evaluation (default: the learner's)");
  cmd_train_app->add_option("--eval-docs", train.eval_docs, "test documents per evaluation");
  cmd_train_app->add_option("--eval-splits", train.eval_splits, "random splits per evaluation");
  cmd_train_app->add_option("--eval-ratio", train.eval_ratio, "observed fraction");
  cmd_train_app->add_option("--npmi-top", train.npmi_top, "top terms per topic for NPMI");
  cmd_train_app->add_option("--out", train.out_dir, "output directory")->required();
  cmd_train_app->add_option("--resume", train.resume_path, "checkpoint to resume from");
  cmd_train_app->add_option("--threads", train.threads, "thread cap (0 = auto)");

  InferArgs infer;
  CLI::App* cmd_infer_app = app.add_subcommand("infer", "Write per-document topic mixtures");
  cmd_infer_app->add_option("--model", infer.model_path, "model file")->required();
  cmd_infer_app->add_option("--corpus", infer.corpus_path, "documents to infer")->required();
  cmd_infer_app->add_option("--out", infer.out_path, "output path (default stdout)");
  cmd_infer_app->add_option("--phi", infer.phi_path, "also write term responsibilities here");
  cmd_infer_app->add_option("--method", infer.method, "fw|vb|cvb|cvb0|cgs");
  cmd_infer_app->add_option("--fw-iters", infer.fw_iters, "FW iteration cap");
  cmd_infer_app->add_option("--fw-tol", infer.fw_tol, "FW relative improvement stop");
  cmd_infer_app->add_option("--vb-iters", infer.vb_iters, "VB iteration cap");
  cmd_infer_app->add_option("--alpha", infer.alpha, "alpha override for variational methods");
  cmd_infer_app->add_option("--seed", infer.seed, "seed");
  cmd_infer_app->add_option("--threads", infer.threads, "thread cap");

  EvalArgs eval_args;
  CLI::App* cmd_eval_app = app.add_subcommand("eval", "Score a saved model");
  cmd_eval_app->add_option("--model", eval_args.model_path, "model file")->required();
  cmd_eval_app->add_option("--test-corpus", eval_args.test_corpus_path, "held-out corpus")
      ->required();
  cmd_eval_app->add_option("--train-corpus", eval_args.train_corpus_path,
                           "NPMI reference corpus (default: the test corpus)");
  cmd_eval_app->add_option("--out", eval_args.out_prefix, "output prefix for .csv/.json");
  cmd_eval_app->add_option("--method", eval_args.method, "fw|vb|cvb|cvb0|cgs");
  cmd_eval_app->add_option("--eval-docs", eval_args.eval_docs, "documents per split");
  cmd_eval_app->add_option("--eval-splits", eval_args.eval_splits, "number of random splits");
  cmd_eval_app->add_option("--eval-ratio", eval_args.eval_ratio, "observed fraction");
  cmd_eval_app->add_option("--npmi-top", eval_args.npmi_top, "top terms per topic");
  cmd_eval_app->add_option("--seed", eval_args.seed, "seed");
  cmd_eval_app->add_option("--threads", eval_args.threads, "thread cap");

  BenchArgs bench;
  CLI::App* cmd_bench_app = app.add_subcommand("bench", "Per-method inference timing table");
  cmd_bench_app->add_option("--model", bench.model_path, "model file")->required();
  cmd_bench_app->add_option("--corpus", bench.corpus_path, "documents to infer")->required();
  cmd_bench_app->add_option("--docs", bench.docs, "number of documents");
  cmd_bench_app->add_option("--pseudo-counts", bench.pseudo_counts,
                            "lambda scale when lifting a point model");
  cmd_bench_app->add_option("--alpha", bench.alpha, "alpha for the variational methods");
  cmd_bench_app->add_option("--fw-iters", bench.fw_iters, "FW iteration cap");
  cmd_bench_app->add_option("--vb-iters", bench.vb_iters, "VB iteration cap");
  cmd_bench_app->add_option("--gibbs-burnin", bench.gibbs_burnin, "CGS burn-in");
  cmd_bench_app->add_option("--gibbs-samples", bench.gibbs_samples, "CGS samples");
  cmd_bench_app->add_option("--cvb0-sweeps", bench.cvb0_sweeps, "CVB0 sweeps");
  cmd_bench_app->add_option("--cvb0-burnin", bench.cvb0_burnin, "CVB0 burn-in");
  cmd_bench_app->add_option("--seed", bench.seed, "seed");
  cmd_bench_app->add_flag("--compare-threads", bench.compare_threads,
                          "also time one ml-fw minibatch serial vs parallel");
  cmd_bench_app->add_option("--threads", bench.threads, "thread cap for the comparison");

  SynthArgs synth;
  CLI::App* cmd_synth_app =
      app.add_subcommand("make-synthetic", "Generate a corpus from known topics");
  cmd_synth_app->add_option("--out", synth.out_dir, "output directory")->required();
  cmd_synth_app->add_option("--k", synth.k, "number of topics");
  cmd_synth_app->add_option("--vocab", synth.vocab, "vocabulary size");
  cmd_synth_app->add_option("--docs", synth.docs, "number of documents");
  cmd_synth_app->add_option("--doc-length", synth.doc_length, "tokens per document");
  cmd_synth_app->add_option("--spread", synth.spread, "off-block probability mass per topic");
  cmd_synth_app->add_option("--doc-alpha", synth.doc_alpha, "document Dirichlet concentration");
  cmd_synth_app->add_option("--seed", synth.seed, "generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (cmd_train_app->parsed()) return cmd_train(train);
    if (cmd_infer_app->parsed()) return cmd_infer(infer);
    if (cmd_eval_app->parsed()) return cmd_eval(eval_args);
    if (cmd_bench_app->parsed()) return cmd_bench(bench);
    if (cmd_synth_app->parsed()) return cmd_make_synthetic(synth);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
