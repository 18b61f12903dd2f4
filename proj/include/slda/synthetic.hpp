#pragma once

#include <cstdint>

#include "slda/corpus.hpp"
#include "slda/topics.hpp"

namespace slda {

// Generator for corpora with known topics. Topics partition the vocabulary
// into K contiguous blocks: a topic puts mass (1 - spread) uniformly on its
// own block and spreads the rest over the other terms, so small spread means
// sharply peaked, well-separated topics. Document mixtures are
// Dirichlet(doc_alpha) draws; every document has exactly doc_length tokens.
struct SyntheticConfig {
  int K = 5;
  int V = 200;
  int docs = 5000;
  int doc_length = 100;
  double spread = 0.01;
  double doc_alpha = 0.3;
  uint64_t seed = 0;
};

struct SyntheticData {
  Corpus corpus;
  Vocabulary vocab;
  TopicMatrix true_beta;
};

SyntheticData make_synthetic(const SyntheticConfig& cfg);

}  // namespace slda
