#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "slda/common.hpp"
#include "slda/corpus.hpp"
#include "slda/simplex_fw.hpp"
#include "slda/topics.hpp"

namespace slda {

enum class InferMethod { FW, VB, CVB, CVB0, CGS };

const char* infer_method_name(InferMethod m);
InferMethod parse_infer_method(const std::string& name);

struct GibbsConfig {
  int burn_in = 25;
  int samples = 25;
  uint64_t seed = 0;
};

// Output of per-document inference. phi rows are distributions over topics;
// it is term-level (n_d x K) for VB and token-level (ell_d x K) for the
// collapsed methods, and left empty by FW. support_size counts nonzero theta
// entries for FW, topics hit by retained samples for CGS, and K otherwise.
struct LocalPosterior {
  InferMethod method = InferMethod::FW;
  SimplexPoint theta;
  std::vector<double> gamma;   // empty for FW
  Matrix phi;                  // empty for FW
  bool phi_token_level = false;
  int support_size = 0;
  int iters = 0;
  double wall_time = 0.0;
};

// theta_k = gamma_k / sum(gamma). Requires nonnegative entries, positive sum.
SimplexPoint normalize_gamma(std::span<const double> gamma);

// Coordinate-ascent variational inference for one document against a fixed
// lambda. Alternates the gamma and phi updates from a random phi start until
// the per-document evidence bound improves by less than rel_tol (relative) or
// max_iters passes. The returned gamma is recomputed from the final phi so
// the pair satisfies the gamma update exactly.
LocalPosterior vb_infer(const SparseDocument& doc, const VariationalTopics& lambda,
                        const HyperParams& hp, int max_iters = 50, double rel_tol = 1e-4,
                        uint64_t seed = 0);

// Collapsed variational inference with the second-order correction, sweeping
// tokens against a document-local copy of the count matrix; the global counts
// are never touched. zero_variances drops the correction term, which makes
// the update identical to cvb0.
LocalPosterior cvb_infer(const SparseDocument& doc, const VariationalTopics& counts,
                         const HyperParams& hp, int max_iters = 50, uint64_t seed = 0,
                         bool zero_variances = false);

// Zero-order collapsed update. Runs `sweeps` full passes; the returned phi
// averages the per-sweep states after the first `burn_in` sweeps.
LocalPosterior cvb0_infer(const SparseDocument& doc, const VariationalTopics& counts,
                          const HyperParams& hp, int sweeps = 50, int burn_in = 25,
                          uint64_t seed = 0);

// Collapsed Gibbs sampling: resample each token's topic from its conditional,
// discard cfg.burn_in sweeps, average indicators over cfg.samples retained
// sweeps. The per-term weights exp(psi(lambda_kj) - psi(sum_t lambda_kt)) are
// computed once per call.
LocalPosterior cgs_infer(const SparseDocument& doc, const VariationalTopics& lambda,
                         const HyperParams& hp, const GibbsConfig& cfg);

// FW MAP inference wrapped into the common posterior shape.
LocalPosterior fw_posterior(const SparseDocument& doc, const TopicMatrix& beta,
                            const FwConfig& cfg = {});

// Term-level responsibilities recovered from a topic mixture:
// point form phi_jk ~ theta_k beta_kj, expected form
// phi_jk ~ theta_k exp(psi(lambda_kj) - psi(sum_t lambda_kt)).
Matrix recover_phi_from_theta(const SimplexPoint& theta, const SparseDocument& doc,
                              const TopicMatrix& beta);
Matrix recover_phi_from_theta(const SimplexPoint& theta, const SparseDocument& doc,
                              const VariationalTopics& lambda);

}  // namespace slda
