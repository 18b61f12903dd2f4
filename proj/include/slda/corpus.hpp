#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slda/common.hpp"
#include "slda/rng.hpp"

namespace slda {

struct Vocabulary {
  std::vector<std::string> terms;
  int size() const { return static_cast<int>(terms.size()); }
};

struct DocEntry {
  int32_t term;    // 0-based term id
  int64_t count;   // >= 1
};

// Bag-of-words document. Entries are sorted by term id with no duplicates;
// tokens() is the total token count (sum of entry counts).
struct SparseDocument {
  std::vector<DocEntry> entries;

  int num_terms() const { return static_cast<int>(entries.size()); }
  bool empty() const { return entries.empty(); }
  int64_t tokens() const {
    int64_t n = 0;
    for (const auto& e : entries) n += e.count;
    return n;
  }
};

// Content hash used to derive per-document random streams that do not depend
// on the document's position in a corpus.
uint64_t document_hash(const SparseDocument& doc);

struct Corpus {
  std::vector<SparseDocument> docs;
  int vocab_size = 0;

  int num_docs() const { return static_cast<int>(docs.size()); }
  int64_t total_tokens() const {
    int64_t n = 0;
    for (const auto& d : docs) n += d.tokens();
    return n;
  }
  int count_empty_docs() const {
    int n = 0;
    for (const auto& d : docs) n += d.empty() ? 1 : 0;
    return n;
  }
};

// UCI bag-of-words readers. The docword file has three header lines (D, W,
// NNZ) followed by NNZ lines of 1-based "docID wordID count"; the vocab file
// has one term per line. Paths ending in .gz are decompressed on the fly.
Corpus load_docword(const std::string& path);
Vocabulary load_vocab(const std::string& path);

struct LoadedCorpus {
  Corpus corpus;
  Vocabulary vocab;
};
LoadedCorpus load_uci_bow(const std::string& docword_path, const std::string& vocab_path);

void save_docword(const std::string& path, const Corpus& corpus);
void save_vocab(const std::string& path, const Vocabulary& vocab);

// Binary corpus cache. Layout (all integers little-endian):
//   magic "SLDA" (4 bytes), version u16 (= 1), D u64, V u64, then per
//   document: varint(num entries), then per entry varint(term gap) and
//   varint(count), where the first gap is the term id itself and subsequent
//   gaps are (term - prev_term - 1). Varints are LEB128.
void save_corpus_cache(const std::string& path, const Corpus& corpus);
Corpus load_corpus_cache(const std::string& path);

// Dispatch by extension: .slda -> binary cache, anything else -> docword text.
Corpus load_corpus_any(const std::string& path);

struct HeldoutSplit {
  SparseDocument observed;
  SparseDocument heldout;
  double ratio = 0.0;
};

// Token-level random split: each token occurrence is assigned without
// replacement, the observed part receiving round(ratio * tokens()).
// Requires 0 < ratio < 1 and at least two tokens.
HeldoutSplit split_heldout(const SparseDocument& doc, double ratio, uint64_t seed);

enum class StreamMode { SinglePass, ShuffledEpochs };

// Deterministic minibatch source over a corpus. SinglePass walks one seeded
// permutation; ShuffledEpochs replays the corpus for `epochs` rounds with a
// fresh permutation per round (epochs = 0 means unbounded). Owned by a single
// consumer.
class MinibatchStream {
 public:
  MinibatchStream(const Corpus& corpus, int batch_size, uint64_t seed,
                  StreamMode mode = StreamMode::SinglePass, uint64_t epochs = 1);

  std::optional<std::vector<SparseDocument>> next();
  uint64_t batches_emitted() const { return batches_emitted_; }
  // Fast-forward past n batches (used when resuming from a checkpoint).
  void skip(uint64_t n);

 private:
  void reshuffle_for_epoch();

  const Corpus* corpus_;
  int batch_size_;
  uint64_t seed_;
  StreamMode mode_;
  uint64_t epochs_;
  uint64_t epoch_ = 0;
  size_t pos_ = 0;
  uint64_t batches_emitted_ = 0;
  std::vector<int> order_;
};

}  // namespace slda
