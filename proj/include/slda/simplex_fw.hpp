#pragma once

#include <span>
#include <vector>

#include "slda/common.hpp"
#include "slda/corpus.hpp"
#include "slda/topics.hpp"

namespace slda {

struct FwConfig {
  int max_iters = 50;
  double rel_tol = 1e-6;        // 0 disables the early stop
  bool track_objective = false;
};

struct FwResult {
  SimplexPoint theta;
  int iters_used = 0;
  double objective = 0.0;
  int support_size = 0;
  // f(theta_0) .. f(theta_iters_used), filled when track_objective is set.
  std::vector<double> objective_trace;
};

// Concave differentiable function over the unit simplex. Implementations must
// keep values finite at every vertex (floor their inputs if needed).
class SimplexObjective {
 public:
  virtual ~SimplexObjective() = default;
  virtual int dim() const = 0;
  virtual double vertex_value(int k) const = 0;
  virtual double value_and_gradient(std::span<const double> theta,
                                    std::span<double> grad) const = 0;
  virtual double value(std::span<const double> theta) const;
};

// Conditional-gradient ascent over the simplex: start at the best vertex,
// then repeatedly blend toward the vertex with the largest gradient entry
// with step 2/(iter+3). After L steps the iterate has at most L+1 nonzero
// entries. Ties break toward the lowest index; the routine is deterministic.
FwResult fw_maximize(const SimplexObjective& f, const FwConfig& cfg = {});

// Document log likelihood f(theta) = sum_j d_j log(sum_k theta_k beta_kj),
// evaluated on a K x n_d slice of beta gathered once per document. Entries
// are floored at eps inside the slice only, so f stays finite at vertices
// even when the stored model has exact zeros.
class LdaObjective final : public SimplexObjective {
 public:
  LdaObjective(const SparseDocument& doc, const TopicMatrix& beta, double eps = 1e-10);

  int dim() const override { return num_topics_; }
  double vertex_value(int k) const override;
  double value_and_gradient(std::span<const double> theta, std::span<double> grad) const override;
  double value(std::span<const double> theta) const override;

 private:
  int num_topics_ = 0;
  int num_terms_ = 0;
  std::vector<double> counts_;      // d_j for the document's terms
  std::vector<double> beta_slice_;  // row-major K x n_d, floored
};

FwResult fw_infer_theta(const SparseDocument& doc, const TopicMatrix& beta,
                        const FwConfig& cfg = {});

}  // namespace slda
