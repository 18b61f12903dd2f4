#include <doctest.h>

#include <cmath>

#include "slda/learners.hpp"
#include "slda/synthetic.hpp"
#include "test_helpers.hpp"

using namespace slda;
using namespace slda::testing;

namespace {

LearnerConfig base_config(LearnerKind kind, int K, double alpha = 1.0, double eta = 0.1) {
  LearnerConfig cfg;
  cfg.kind = kind;
  cfg.hp = {.alpha = alpha, .eta = eta, .K = K};
  cfg.master_seed = 99;
  cfg.threads = 1;
  if (learner_requires_corpus_size(kind)) cfg.corpus_size = 2;
  return cfg;
}

// lambda with one dominant term per topic; FW/VB against it produce one-hot
// responsibilities to double precision.
VariationalTopics separated_lambda_2x2(double strength) {
  VariationalTopics lambda(2, 2);
  lambda.lambda(0, 0) = strength;
  lambda.lambda(0, 1) = 1.0;
  lambda.lambda(1, 0) = 1.0;
  lambda.lambda(1, 1) = strength;
  lambda.recompute_row_sums();
  return lambda;
}

bool matrices_equal(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) return false;
  for (size_t i = 0; i < a.data.size(); ++i)
    if (a.data[i] != b.data[i]) return false;
  return true;
}

}  // namespace

TEST_CASE("step schedule: rho_1 = 2^-0.9 for tau=1, kappa=0.9") {
  StepSchedule s{.tau = 1.0, .kappa = 0.9};
  CHECK(s.rho(1) == doctest::Approx(0.5358867312681466).epsilon(1e-12));
  CHECK(s.rho(2) == doctest::Approx(std::pow(3.0, -0.9)).epsilon(1e-15));
}

TEST_CASE("step schedule validates the forgetting-rate range") {
  CHECK_THROWS_AS((StepSchedule{.tau = 1.0, .kappa = 0.5}.validate()), ConfigError);
  CHECK_THROWS_AS((StepSchedule{.tau = 1.0, .kappa = 1.01}.validate()), ConfigError);
  CHECK_THROWS_AS((StepSchedule{.tau = -0.1, .kappa = 0.9}.validate()), ConfigError);
  CHECK_NOTHROW((StepSchedule{.tau = 0.0, .kappa = 1.0}.validate()));
  CHECK_NOTHROW((StepSchedule{.tau = 1.0, .kappa = 0.9}.validate()));
}

TEST_CASE("config validation: corpus size required by online kinds, rejected elsewhere") {
  for (LearnerKind kind : {LearnerKind::OnlineFw, LearnerKind::OnlineVb, LearnerKind::OnlineCgs,
                           LearnerKind::OnlineCvb0}) {
    LearnerConfig cfg = base_config(kind, 3);
    cfg.corpus_size.reset();
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  for (LearnerKind kind :
       {LearnerKind::MlFw, LearnerKind::StreamingFw, LearnerKind::StreamingVb}) {
    LearnerConfig cfg = base_config(kind, 3);
    cfg.corpus_size = 100;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}

TEST_CASE("mlfw with one topic averages toward the batch term distribution") {
  LearnerConfig cfg = base_config(LearnerKind::MlFw, 1);
  LearnerState state = LearnerState::init(cfg, 4);
  std::vector<double> old_beta(state.beta.row(0), state.beta.row(0) + 4);

  std::vector<SparseDocument> batch{make_doc({{0, 2}, {1, 2}}), make_doc({{1, 2}, {3, 2}})};
  MinibatchReport report = mlfw_step(state, batch, cfg);
  CHECK(report.t == 1);
  CHECK(report.docs_processed == 2);

  // empirical distribution of the batch: (2, 4, 0, 2) / 8
  double rho = cfg.schedule.rho(1);
  double expected[4] = {0.25, 0.5, 0.0, 0.25};
  for (int j = 0; j < 4; ++j)
    CHECK(state.beta.m(0, j) ==
          doctest::Approx((1.0 - rho) * old_beta[j] + rho * expected[j]).epsilon(1e-14));
  state.beta.validate(1e-9);
}

TEST_CASE("mlfw carries over topic rows that receive no batch mass") {
  LearnerConfig cfg = base_config(LearnerKind::MlFw, 2);
  LearnerState state = LearnerState::init(cfg, 4);
  // topic 0 explains terms {0,1}, topic 1 explains terms {2,3}
  double rows[2][4] = {{0.5, 0.5, 0.0, 0.0}, {0.0, 0.0, 0.5, 0.5}};
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 4; ++j) state.beta.m(k, j) = rows[k][j];
  std::vector<double> row1_before(state.beta.row(1), state.beta.row(1) + 4);

  // all documents live in topic 0's block, so topic 1 gets zero mass
  std::vector<SparseDocument> batch{make_doc({{0, 3}}), make_doc({{0, 1}, {1, 2}})};
  mlfw_step(state, batch, cfg);

  for (int j = 0; j < 4; ++j) CHECK(state.beta.m(1, j) == row1_before[static_cast<size_t>(j)]);
  state.beta.validate(1e-8);
}

TEST_CASE("mlfw rows stay on the simplex across many steps") {
  LearnerConfig cfg = base_config(LearnerKind::MlFw, 4);
  cfg.fw.max_iters = 10;
  LearnerState state = LearnerState::init(cfg, 12);
  Rng rng(5);
  for (int step = 0; step < 20; ++step) {
    std::vector<SparseDocument> batch;
    for (int d = 0; d < 6; ++d) batch.push_back(random_doc(rng, 12, 4));
    mlfw_step(state, batch, cfg);
    state.beta.validate(1e-8);
  }
}

TEST_CASE("onlinefw: one-hot responsibility gives lambda_hat = eta + D on the hit cell") {
  LearnerConfig cfg = base_config(LearnerKind::OnlineFw, 2, 1.0, 0.1);
  cfg.corpus_size = 2;  // D = 2, batch of one doc -> scale D/S = 2
  LearnerState state = LearnerState::init(cfg, 2);
  state.lambda = separated_lambda_2x2(1e8);
  Matrix lambda_before = state.lambda.lambda;

  std::vector<SparseDocument> batch{make_doc({{0, 1}})};
  onlinefw_step(state, batch, cfg);

  // theta = e_0 exactly, phi_00 = 1: lambda_hat = [[eta + 2, eta], [eta, eta]]
  double rho = cfg.schedule.rho(1);
  double expected_hat[2][2] = {{cfg.hp.eta + 2.0, cfg.hp.eta}, {cfg.hp.eta, cfg.hp.eta}};
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 2; ++j)
      CHECK(state.lambda.lambda(k, j) ==
            doctest::Approx((1.0 - rho) * lambda_before(k, j) + rho * expected_hat[k][j])
                .epsilon(1e-12));
}

TEST_CASE("onlinefw two-step hand trace (K=2, V=2, D=2, S=1)") {
  const double eta = 0.05;
  LearnerConfig cfg = base_config(LearnerKind::OnlineFw, 2, 1.0, eta);
  cfg.corpus_size = 2;
  LearnerState state = LearnerState::init(cfg, 2);
  state.lambda = separated_lambda_2x2(1e9);

  // straight-line replay of the two updates
  Matrix expected = state.lambda.lambda;
  auto apply = [&](int topic, int term, uint64_t t) {
    double rho = std::pow(cfg.schedule.tau + static_cast<double>(t), -cfg.schedule.kappa);
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 2; ++j) {
        double hat = eta + ((k == topic && j == term) ? 2.0 : 0.0);
        expected(k, j) = (1.0 - rho) * expected(k, j) + rho * hat;
      }
  };

  std::vector<SparseDocument> batch_a{make_doc({{0, 1}})};  // lands on topic 0
  onlinefw_step(state, batch_a, cfg);
  apply(0, 0, 1);
  std::vector<SparseDocument> batch_b{make_doc({{1, 1}})};  // lands on topic 1
  onlinefw_step(state, batch_b, cfg);
  apply(1, 1, 2);

  for (size_t i = 0; i < expected.data.size(); ++i)
    CHECK(std::abs(state.lambda.lambda.data[i] - expected.data[i]) <= 1e-12);
}

TEST_CASE("onlinefw: batch of empty documents pulls lambda toward eta") {
  LearnerConfig cfg = base_config(LearnerKind::OnlineFw, 2, 1.0, 0.2);
  cfg.corpus_size = 2;
  LearnerState state = LearnerState::init(cfg, 3);
  Matrix before = state.lambda.lambda;
  std::vector<SparseDocument> batch{SparseDocument{}, SparseDocument{}};
  MinibatchReport report = onlinefw_step(state, batch, cfg);
  CHECK(report.docs_processed == 0);
  double rho = cfg.schedule.rho(1);
  for (size_t i = 0; i < before.data.size(); ++i)
    CHECK(state.lambda.lambda.data[i] ==
          doctest::Approx((1.0 - rho) * before.data[i] + rho * cfg.hp.eta).epsilon(1e-14));
}

TEST_CASE("streamingfw: additive update, every entry grows by at least eta") {
  const double eta = 0.07;
  LearnerConfig cfg = base_config(LearnerKind::StreamingFw, 2, 1.0, eta);
  LearnerState state = LearnerState::init(cfg, 2);
  state.lambda = separated_lambda_2x2(1e9);

  Matrix expected = state.lambda.lambda;
  std::vector<SparseDocument> batch_a{make_doc({{0, 1}})};
  std::vector<SparseDocument> batch_b{make_doc({{1, 1}})};

  Matrix before = state.lambda.lambda;
  streamingfw_step(state, batch_a, cfg);
  for (size_t i = 0; i < before.data.size(); ++i)
    CHECK(state.lambda.lambda.data[i] >= before.data[i] + eta - 1e-12);

  streamingfw_step(state, batch_b, cfg);
  // hand trace: lambda_hat_A = eta + one token on (0,0); same for B at (1,1)
  expected(0, 0) += eta + 1.0;
  expected(0, 1) += eta;
  expected(1, 0) += eta;
  expected(1, 1) += eta;
  expected(0, 0) += eta;
  expected(0, 1) += eta;
  expected(1, 0) += eta;
  expected(1, 1) += eta + 1.0;
  for (size_t i = 0; i < expected.data.size(); ++i)
    CHECK(std::abs(state.lambda.lambda.data[i] - expected.data[i]) <= 1e-12);
}

TEST_CASE("onlinevb / streamingvb traces with forced one-hot responsibilities") {
  const double eta = 0.04;

  SUBCASE("online") {
    LearnerConfig cfg = base_config(LearnerKind::OnlineVb, 2, 1.0, eta);
    cfg.corpus_size = 2;
    LearnerState state = LearnerState::init(cfg, 2);
    state.lambda = separated_lambda_2x2(1e17);
    Matrix expected = state.lambda.lambda;

    std::vector<SparseDocument> batch{make_doc({{0, 1}})};
    onlinevb_step(state, batch, cfg);
    double rho = cfg.schedule.rho(1);
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 2; ++j) {
        double hat = eta + ((k == 0 && j == 0) ? 2.0 : 0.0);
        expected(k, j) = (1.0 - rho) * expected(k, j) + rho * hat;
      }
    for (size_t i = 0; i < expected.data.size(); ++i)
      CHECK(std::abs(state.lambda.lambda.data[i] - expected.data[i]) <= 1e-12);
  }

  SUBCASE("streaming") {
    LearnerConfig cfg = base_config(LearnerKind::StreamingVb, 2, 1.0, eta);
    LearnerState state = LearnerState::init(cfg, 2);
    state.lambda = separated_lambda_2x2(1e17);
    Matrix expected = state.lambda.lambda;

    std::vector<SparseDocument> batch{make_doc({{0, 1}})};
    streamingvb_step(state, batch, cfg);
    expected(0, 0) += eta + 1.0;
    expected(0, 1) += eta;
    expected(1, 0) += eta;
    expected(1, 1) += eta;
    for (size_t i = 0; i < expected.data.size(); ++i)
      CHECK(std::abs(state.lambda.lambda.data[i] - expected.data[i]) <= 1e-12);
  }
}

TEST_CASE("onlinecgs with a single topic is exact") {
  const double eta = 0.15;
  LearnerConfig cfg = base_config(LearnerKind::OnlineCgs, 1, 0.5, eta);
  cfg.corpus_size = 4;
  LearnerState state = LearnerState::init(cfg, 3);
  Matrix before = state.lambda.lambda;

  // batch term counts: term0 -> 3, term2 -> 1; scale D/S = 4/2 = 2
  std::vector<SparseDocument> batch{make_doc({{0, 3}}), make_doc({{2, 1}})};
  onlinecgs_step(state, batch, cfg);
  double rho = cfg.schedule.rho(1);
  double counts[3] = {3.0, 0.0, 1.0};
  for (int j = 0; j < 3; ++j)
    CHECK(state.lambda.lambda(0, j) ==
          doctest::Approx((1.0 - rho) * before(0, j) + rho * (eta + 2.0 * counts[j]))
              .epsilon(1e-14));
}

TEST_CASE("onlinecgs trajectory is bit-identical across runs with the same seed") {
  Rng rng(61);
  Corpus corpus = random_corpus(rng, 30, 12, 1, 6);
  LearnerConfig cfg = base_config(LearnerKind::OnlineCgs, 3, 0.25, 0.1);
  cfg.corpus_size = 30;
  cfg.gibbs = {.burn_in = 3, .samples = 4, .seed = 0};

  auto run = [&]() {
    MinibatchStream stream(corpus, 10, 7);
    return run_learner(stream, cfg, corpus.vocab_size);
  };
  RunResult a = run();
  RunResult b = run();
  CHECK(a.state.t == b.state.t);
  CHECK(matrices_equal(a.state.lambda.lambda, b.state.lambda.lambda));
}

TEST_CASE("onlinecvb0 recovers blocked topics on a small synthetic corpus") {
  SyntheticConfig sc{.K = 2, .V = 10, .docs = 200, .doc_length = 30, .spread = 0.02,
                     .doc_alpha = 0.4, .seed = 15};
  SyntheticData data = make_synthetic(sc);

  LearnerConfig cfg = base_config(LearnerKind::OnlineCvb0, 2, 0.5, 0.1);
  cfg.corpus_size = static_cast<uint64_t>(data.corpus.num_docs());
  cfg.cvb0_sweeps = 20;
  cfg.cvb0_burn_in = 10;
  MinibatchStream stream(data.corpus, 50, 3, StreamMode::ShuffledEpochs, 8);
  RunResult result = run_learner(stream, cfg, sc.V);

  TopicMatrix learned = result.state.lambda.expected_beta();
  // best-permutation cosine similarity against the generator topics
  double best = -1.0;
  for (int perm = 0; perm < 2; ++perm) {
    double total = 0.0;
    for (int k = 0; k < 2; ++k) {
      int match = perm == 0 ? k : 1 - k;
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (int j = 0; j < sc.V; ++j) {
        dot += learned.m(k, j) * data.true_beta.m(match, j);
        na += learned.m(k, j) * learned.m(k, j);
        nb += data.true_beta.m(match, j) * data.true_beta.m(match, j);
      }
      total += dot / std::sqrt(na * nb);
    }
    best = std::max(best, total / 2.0);
  }
  CHECK(best >= 0.9);
}

TEST_CASE("empty batch is a warned no-op") {
  LearnerConfig cfg = base_config(LearnerKind::MlFw, 2);
  LearnerState state = LearnerState::init(cfg, 5);
  Matrix before = state.beta.m;
  MinibatchReport report = learner_step(state, {}, cfg);
  CHECK(state.t == 0);
  CHECK(report.docs_processed == 0);
  CHECK(matrices_equal(state.beta.m, before));
}

TEST_CASE("learner results are independent of the thread count") {
  Rng rng(17);
  Corpus corpus = random_corpus(rng, 40, 15, 2, 6);
  for (LearnerKind kind : {LearnerKind::MlFw, LearnerKind::OnlineVb, LearnerKind::OnlineCgs}) {
    LearnerConfig cfg = base_config(kind, 3, kind == LearnerKind::MlFw ? 1.0 : 0.3, 0.1);
    if (learner_requires_corpus_size(kind)) cfg.corpus_size = 40;
    cfg.vb_max_iters = 15;
    cfg.gibbs = {.burn_in = 3, .samples = 3, .seed = 0};

    auto run = [&](int threads) {
      LearnerConfig c = cfg;
      c.threads = threads;
      MinibatchStream stream(corpus, 13, 5);
      return run_learner(stream, c, corpus.vocab_size);
    };
    RunResult serial = run(1);
    RunResult parallel = run(4);
    if (kind == LearnerKind::MlFw)
      CHECK(matrices_equal(serial.state.beta.m, parallel.state.beta.m));
    else
      CHECK(matrices_equal(serial.state.lambda.lambda, parallel.state.lambda.lambda));
  }
}

TEST_CASE("variational models stay strictly positive") {
  Rng rng(23);
  Corpus corpus = random_corpus(rng, 30, 10, 1, 5);
  for (LearnerKind kind : {LearnerKind::OnlineVb, LearnerKind::StreamingVb,
                           LearnerKind::OnlineFw, LearnerKind::StreamingFw}) {
    LearnerConfig cfg = base_config(kind, 3, 1.0, 0.05);
    if (learner_requires_corpus_size(kind))
      cfg.corpus_size = 30;
    else
      cfg.corpus_size.reset();
    MinibatchStream stream(corpus, 10, 66);
    RunResult result = run_learner(stream, cfg, corpus.vocab_size);
    double min_entry = HUGE_VAL;
    for (double x : result.state.lambda.lambda.data) min_entry = std::min(min_entry, x);
    CHECK(min_entry > 0.0);
    result.state.lambda.validate();
  }
}

TEST_CASE("run_learner respects max_minibatches and checkpoint cadence") {
  Rng rng(29);
  Corpus corpus = random_corpus(rng, 50, 10, 1, 5);
  LearnerConfig cfg = base_config(LearnerKind::MlFw, 2);
  cfg.fw.max_iters = 5;

  int checkpoints = 0;
  RunOptions opts;
  opts.max_minibatches = 4;
  opts.checkpoint_every = 2;
  opts.checkpoint_writer = [&](const LearnerState&) { ++checkpoints; };
  MinibatchStream stream(corpus, 10, 1);
  RunResult result = run_learner(stream, cfg, corpus.vocab_size, opts);
  CHECK(result.state.t == 4);
  CHECK(result.reports.size() == 4);
  CHECK(checkpoints == 2);
}
