#pragma once

#include <cstdint>
#include <string>

#include "slda/learners.hpp"
#include "slda/eval.hpp"
#include "slda/topics.hpp"

namespace slda {

// On-disk model container. Layout (little-endian): magic "SLDAMDL", version
// u16 (= 1), kind tag (16 bytes, null padded), K u64, V u64, alpha f64,
// eta f64, tau f64, kappa f64, t u64, master_seed u64, then the K*V payload
// as row-major f64 (beta for point models, lambda otherwise), then a crc32
// trailer (u32) over the payload bytes.
struct ModelFile {
  std::string kind;  // a learner name, or "synthetic-truth" for generator output
  int K = 0;
  int V = 0;
  double alpha = 0.0;
  double eta = 0.0;
  double tau = 0.0;
  double kappa = 0.0;
  uint64_t t = 0;
  uint64_t master_seed = 0;
  Matrix payload;

  bool is_point() const;
};

void save_model(const std::string& path, const ModelFile& model);
ModelFile load_model(const std::string& path);

ModelFile model_from_state(const LearnerState& state, const LearnerConfig& cfg);
LearnerState state_from_model(const ModelFile& model);
EvalModel eval_model_from(const ModelFile& model);

}  // namespace slda
