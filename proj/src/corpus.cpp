#include "slda/corpus.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>

namespace slda {

namespace {

bool ends_with(const std::string& s, const char* suffix) {
  size_t n = std::strlen(suffix);
  return s.size() >= n && s.compare(s.size() - n, n, suffix) == 0;
}

// Line reader over plain or gzip files.
class LineReader {
 public:
  explicit LineReader(const std::string& path) : path_(path) {
    if (ends_with(path, ".gz")) {
      gz_ = gzopen(path.c_str(), "rb");
      if (!gz_) throw RuntimeFailure("cannot open " + path);
    } else {
      file_.open(path);
      if (!file_) throw RuntimeFailure("cannot open " + path);
    }
  }
  ~LineReader() {
    if (gz_) gzclose(gz_);
  }

  bool getline(std::string& out) {
    ++line_no_;
    if (gz_) {
      out.clear();
      char buf[4096];
      bool got = false;
      while (gzgets(gz_, buf, sizeof(buf))) {
        got = true;
        out += buf;
        if (!out.empty() && out.back() == '\n') break;
      }
      if (!got) return false;
    } else {
      if (!std::getline(file_, out)) return false;
    }
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
    return true;
  }

  long line_no() const { return line_no_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream file_;
  gzFile gz_ = nullptr;
  long line_no_ = 0;
};

int64_t parse_positive_int(const std::string& s, LineReader& r, const char* what) {
  try {
    size_t pos = 0;
    long long v = std::stoll(s, &pos);
    if (pos != s.size() || v < 0) throw std::invalid_argument(what);
    return v;
  } catch (const std::exception&) {
    throw ParseError(r.path() + ": expected " + std::string(what) + ", got \"" + s + "\"",
                     r.line_no());
  }
}

}  // namespace

uint64_t document_hash(const SparseDocument& doc) {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto fold = [&h](uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ULL;
  };
  for (const auto& e : doc.entries) {
    fold(static_cast<uint64_t>(e.term));
    fold(static_cast<uint64_t>(e.count));
  }
  return mix64(h);
}

Corpus load_docword(const std::string& path) {
  LineReader reader(path);
  std::string line;
  int64_t header[3];
  const char* names[3] = {"document count D", "vocabulary size W", "triple count NNZ"};
  for (int i = 0; i < 3; ++i) {
    if (!reader.getline(line)) throw ParseError(path + ": missing header line", reader.line_no());
    header[i] = parse_positive_int(line, reader, names[i]);
  }
  const int64_t num_docs = header[0], vocab = header[1], nnz = header[2];

  Corpus corpus;
  corpus.vocab_size = static_cast<int>(vocab);
  corpus.docs.resize(static_cast<size_t>(num_docs));

  for (int64_t i = 0; i < nnz; ++i) {
    if (!reader.getline(line))
      throw ParseError(path + ": expected " + std::to_string(nnz) + " triples, file ended after " +
                           std::to_string(i),
                       reader.line_no());
    long long doc_id, word_id, count;
    if (std::sscanf(line.c_str(), "%lld %lld %lld", &doc_id, &word_id, &count) != 3)
      throw ParseError(path + ": malformed triple \"" + line + "\"", reader.line_no());
    if (doc_id < 1 || doc_id > num_docs)
      throw ParseError(path + ": docID " + std::to_string(doc_id) + " out of range 1.." +
                           std::to_string(num_docs),
                       reader.line_no());
    if (word_id < 1 || word_id > vocab)
      throw ParseError(path + ": wordID " + std::to_string(word_id) + " out of range 1.." +
                           std::to_string(vocab),
                       reader.line_no());
    if (count < 1)
      throw ParseError(path + ": count must be positive, got " + std::to_string(count),
                       reader.line_no());
    corpus.docs[static_cast<size_t>(doc_id - 1)].entries.push_back(
        {static_cast<int32_t>(word_id - 1), count});
  }

  // Triples may arrive in any order; canonicalize and merge duplicates.
  for (auto& doc : corpus.docs) {
    std::sort(doc.entries.begin(), doc.entries.end(),
              [](const DocEntry& a, const DocEntry& b) { return a.term < b.term; });
    size_t w = 0;
    for (size_t r = 0; r < doc.entries.size(); ++r) {
      if (w > 0 && doc.entries[w - 1].term == doc.entries[r].term)
        doc.entries[w - 1].count += doc.entries[r].count;
      else
        doc.entries[w++] = doc.entries[r];
    }
    doc.entries.resize(w);
  }
  return corpus;
}

Vocabulary load_vocab(const std::string& path) {
  LineReader reader(path);
  Vocabulary vocab;
  std::string line;
  std::map<std::string, long> seen;
  while (reader.getline(line)) {
    if (line.empty() && vocab.terms.empty()) continue;
    auto [it, inserted] = seen.emplace(line, reader.line_no());
    if (!inserted)
      throw ParseError(path + ": duplicate term \"" + line + "\" (first at line " +
                           std::to_string(it->second) + ")",
                       reader.line_no());
    vocab.terms.push_back(line);
  }
  // allow one trailing blank line
  if (!vocab.terms.empty() && vocab.terms.back().empty()) vocab.terms.pop_back();
  return vocab;
}

LoadedCorpus load_uci_bow(const std::string& docword_path, const std::string& vocab_path) {
  LoadedCorpus out;
  out.corpus = load_docword(docword_path);
  out.vocab = load_vocab(vocab_path);
  if (out.vocab.size() != out.corpus.vocab_size)
    throw ParseError(vocab_path + ": vocabulary has " + std::to_string(out.vocab.size()) +
                     " terms but docword header says W = " + std::to_string(out.corpus.vocab_size));
  return out;
}

void save_docword(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write " + path);
  int64_t nnz = 0;
  for (const auto& d : corpus.docs) nnz += d.num_terms();
  out << corpus.num_docs() << "\n" << corpus.vocab_size << "\n" << nnz << "\n";
  for (int d = 0; d < corpus.num_docs(); ++d)
    for (const auto& e : corpus.docs[d].entries)
      out << (d + 1) << " " << (e.term + 1) << " " << e.count << "\n";
  if (!out) throw RuntimeFailure("write failed: " + path);
}

void save_vocab(const std::string& path, const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write " + path);
  for (const auto& t : vocab.terms) out << t << "\n";
  if (!out) throw RuntimeFailure("write failed: " + path);
}

namespace {

void put_varint(std::string& out, uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<char>((v & 0x7f) | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<char>(v));
}

uint64_t get_varint(const std::string& buf, size_t& pos) {
  uint64_t v = 0;
  int shift = 0;
  for (;;) {
    if (pos >= buf.size()) throw ParseError("corpus cache: truncated varint");
    uint8_t b = static_cast<uint8_t>(buf[pos++]);
    v |= static_cast<uint64_t>(b & 0x7f) << shift;
    if (!(b & 0x80)) return v;
    shift += 7;
    if (shift > 63) throw ParseError("corpus cache: varint overflow");
  }
}

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint64_t get_u64(const std::string& buf, size_t& pos) {
  if (pos + 8 > buf.size()) throw ParseError("corpus cache: truncated header");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(buf[pos + i])) << (8 * i);
  pos += 8;
  return v;
}

}  // namespace

void save_corpus_cache(const std::string& path, const Corpus& corpus) {
  std::string buf;
  buf += "SLDA";
  put_u16(buf, 1);
  put_u64(buf, static_cast<uint64_t>(corpus.num_docs()));
  put_u64(buf, static_cast<uint64_t>(corpus.vocab_size));
  for (const auto& doc : corpus.docs) {
    put_varint(buf, static_cast<uint64_t>(doc.entries.size()));
    int64_t prev = -1;
    for (const auto& e : doc.entries) {
      put_varint(buf, static_cast<uint64_t>(e.term - prev - 1));
      put_varint(buf, static_cast<uint64_t>(e.count));
      prev = e.term;
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw RuntimeFailure("write failed: " + path);
}

Corpus load_corpus_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  size_t pos = 0;
  if (buf.size() < 6 || buf.compare(0, 4, "SLDA") != 0)
    throw ParseError(path + ": bad magic, not a corpus cache");
  pos = 4;
  uint16_t version = static_cast<uint8_t>(buf[pos]) | (static_cast<uint8_t>(buf[pos + 1]) << 8);
  pos += 2;
  if (version != 1) throw ParseError(path + ": unsupported cache version " + std::to_string(version));
  uint64_t num_docs = get_u64(buf, pos);
  uint64_t vocab = get_u64(buf, pos);
  Corpus corpus;
  corpus.vocab_size = static_cast<int>(vocab);
  corpus.docs.resize(num_docs);
  for (uint64_t d = 0; d < num_docs; ++d) {
    uint64_t n = get_varint(buf, pos);
    auto& entries = corpus.docs[d].entries;
    entries.resize(n);
    int64_t prev = -1;
    for (uint64_t i = 0; i < n; ++i) {
      int64_t term = prev + 1 + static_cast<int64_t>(get_varint(buf, pos));
      int64_t count = static_cast<int64_t>(get_varint(buf, pos));
      if (term >= static_cast<int64_t>(vocab))
        throw ParseError(path + ": term id " + std::to_string(term) + " >= V");
      if (count < 1) throw ParseError(path + ": nonpositive count in cache");
      entries[i] = {static_cast<int32_t>(term), count};
      prev = term;
    }
  }
  if (pos != buf.size()) throw ParseError(path + ": trailing bytes in corpus cache");
  return corpus;
}

Corpus load_corpus_any(const std::string& path) {
  if (ends_with(path, ".slda")) return load_corpus_cache(path);
  return load_docword(path);
}

HeldoutSplit split_heldout(const SparseDocument& doc, double ratio, uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw ConfigError("split_heldout: ratio must lie in (0,1)");
  int64_t total = doc.tokens();
  if (total < 2) throw ConfigError("split_heldout: document has fewer than 2 tokens");

  std::vector<int32_t> token_terms;
  token_terms.reserve(static_cast<size_t>(total));
  for (const auto& e : doc.entries)
    for (int64_t i = 0; i < e.count; ++i) token_terms.push_back(e.term);

  Rng rng(seed);
  shuffle_vector(token_terms, rng);

  int64_t observed_tokens = std::llround(ratio * static_cast<double>(total));

  auto build = [](std::span<const int32_t> terms) {
    std::vector<int32_t> sorted(terms.begin(), terms.end());
    std::sort(sorted.begin(), sorted.end());
    SparseDocument d;
    for (int32_t t : sorted) {
      if (!d.entries.empty() && d.entries.back().term == t)
        ++d.entries.back().count;
      else
        d.entries.push_back({t, 1});
    }
    return d;
  };

  HeldoutSplit split;
  split.ratio = ratio;
  split.observed = build({token_terms.data(), static_cast<size_t>(observed_tokens)});
  split.heldout = build({token_terms.data() + observed_tokens,
                         static_cast<size_t>(total - observed_tokens)});
  return split;
}

MinibatchStream::MinibatchStream(const Corpus& corpus, int batch_size, uint64_t seed,
                                 StreamMode mode, uint64_t epochs)
    : corpus_(&corpus), batch_size_(batch_size), seed_(seed), mode_(mode), epochs_(epochs) {
  if (batch_size_ < 1) throw ConfigError("minibatch size must be positive");
  if (mode_ == StreamMode::SinglePass) epochs_ = 1;
  reshuffle_for_epoch();
}

void MinibatchStream::reshuffle_for_epoch() {
  order_.resize(corpus_->docs.size());
  for (size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
  Rng rng(derive_seed(seed_, "minibatch-permutation", epoch_));
  shuffle_vector(order_, rng);
  pos_ = 0;
}

std::optional<std::vector<SparseDocument>> MinibatchStream::next() {
  if (order_.empty()) return std::nullopt;
  if (pos_ >= order_.size()) {
    ++epoch_;
    if (epochs_ != 0 && epoch_ >= epochs_) return std::nullopt;
    reshuffle_for_epoch();
  }
  size_t end = std::min(pos_ + static_cast<size_t>(batch_size_), order_.size());
  std::vector<SparseDocument> batch;
  batch.reserve(end - pos_);
  for (size_t i = pos_; i < end; ++i) batch.push_back(corpus_->docs[static_cast<size_t>(order_[i])]);
  pos_ = end;
  ++batches_emitted_;
  return batch;
}

void MinibatchStream::skip(uint64_t n) {
  for (uint64_t i = 0; i < n; ++i) {
    if (order_.empty()) return;
    if (pos_ >= order_.size()) {
      ++epoch_;
      if (epochs_ != 0 && epoch_ >= epochs_) return;
      reshuffle_for_epoch();
    }
    pos_ = std::min(pos_ + static_cast<size_t>(batch_size_), order_.size());
    ++batches_emitted_;
  }
}

}  // namespace slda
