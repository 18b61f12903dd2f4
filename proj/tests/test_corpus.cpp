#include <doctest.h>
#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>

#include "slda/corpus.hpp"
#include "test_helpers.hpp"

using namespace slda;
using namespace slda::testing;

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

struct FileGuard {
  std::string path;
  ~FileGuard() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("load_uci_bow parses the documented format") {
  FileGuard dw{temp_path("dw.txt")}, vc{temp_path("vc.txt")};
  write_file(dw.path, "2\n3\n3\n1 1 2\n1 3 1\n2 2 5\n");
  write_file(vc.path, "alpha\nbeta\ngamma\n");
  auto loaded = load_uci_bow(dw.path, vc.path);
  CHECK(loaded.corpus.num_docs() == 2);
  CHECK(loaded.corpus.vocab_size == 3);
  CHECK(loaded.vocab.size() == 3);
  REQUIRE(loaded.corpus.docs[0].entries.size() == 2);
  CHECK(loaded.corpus.docs[0].entries[0].term == 0);
  CHECK(loaded.corpus.docs[0].entries[0].count == 2);
  CHECK(loaded.corpus.docs[0].entries[1].term == 2);
  CHECK(loaded.corpus.docs[0].entries[1].count == 1);
  REQUIRE(loaded.corpus.docs[1].entries.size() == 1);
  CHECK(loaded.corpus.docs[1].entries[0].term == 1);
  CHECK(loaded.corpus.docs[1].entries[0].count == 5);
}

TEST_CASE("load_uci_bow minimal file") {
  FileGuard dw{temp_path("dw1.txt")}, vc{temp_path("vc1.txt")};
  write_file(dw.path, "1\n1\n1\n1 1 1\n");
  write_file(vc.path, "only\n");
  auto loaded = load_uci_bow(dw.path, vc.path);
  CHECK(loaded.corpus.num_docs() == 1);
  CHECK(loaded.corpus.docs[0].tokens() == 1);
  CHECK(loaded.corpus.docs[0].entries[0].count == 1);
}

TEST_CASE("load_docword reports malformed input with line numbers") {
  FileGuard dw{temp_path("dw_bad.txt")};

  SUBCASE("bad header") {
    write_file(dw.path, "x\n3\n1\n1 1 1\n");
    CHECK_THROWS_WITH_AS(load_docword(dw.path), doctest::Contains("line 1"), ParseError);
  }
  SUBCASE("malformed triple") {
    write_file(dw.path, "1\n3\n1\nnot a triple\n");
    CHECK_THROWS_WITH_AS(load_docword(dw.path), doctest::Contains("line 4"), ParseError);
  }
  SUBCASE("wordID out of range") {
    write_file(dw.path, "1\n3\n1\n1 4 1\n");
    CHECK_THROWS_WITH_AS(load_docword(dw.path), doctest::Contains("wordID"), ParseError);
  }
  SUBCASE("docID out of range") {
    write_file(dw.path, "1\n3\n1\n2 1 1\n");
    CHECK_THROWS_WITH_AS(load_docword(dw.path), doctest::Contains("docID"), ParseError);
  }
  SUBCASE("truncated file") {
    write_file(dw.path, "1\n3\n2\n1 1 1\n");
    CHECK_THROWS_AS(load_docword(dw.path), ParseError);
  }
}

TEST_CASE("empty documents are retained") {
  FileGuard dw{temp_path("dw_empty.txt")};
  write_file(dw.path, "3\n2\n2\n1 1 1\n3 2 4\n");
  Corpus corpus = load_docword(dw.path);
  CHECK(corpus.num_docs() == 3);
  CHECK(corpus.docs[1].empty());
  CHECK(corpus.count_empty_docs() == 1);
}

TEST_CASE("100-document synthetic corpus round-trips through the text format") {
  Rng rng(421);
  Corpus corpus = random_corpus(rng, 100, 50, 1, 20);
  FileGuard dw{temp_path("dw_rt.txt")};
  save_docword(dw.path, corpus);
  Corpus reloaded = load_docword(dw.path);
  REQUIRE(reloaded.num_docs() == corpus.num_docs());
  CHECK(reloaded.vocab_size == corpus.vocab_size);
  for (int d = 0; d < corpus.num_docs(); ++d) {
    REQUIRE(reloaded.docs[d].entries.size() == corpus.docs[d].entries.size());
    for (size_t j = 0; j < corpus.docs[d].entries.size(); ++j) {
      CHECK(reloaded.docs[d].entries[j].term == corpus.docs[d].entries[j].term);
      CHECK(reloaded.docs[d].entries[j].count == corpus.docs[d].entries[j].count);
    }
  }
}

TEST_CASE("gzip docword and vocab files load transparently") {
  FileGuard dw{temp_path("dw.txt.gz")}, vc{temp_path("vc.txt.gz")};
  {
    gzFile f = gzopen(dw.path.c_str(), "wb");
    const char* content = "2\n2\n2\n1 1 3\n2 2 1\n";
    gzwrite(f, content, static_cast<unsigned>(strlen(content)));
    gzclose(f);
    gzFile g = gzopen(vc.path.c_str(), "wb");
    const char* terms = "aa\nbb\n";
    gzwrite(g, terms, static_cast<unsigned>(strlen(terms)));
    gzclose(g);
  }
  auto loaded = load_uci_bow(dw.path, vc.path);
  CHECK(loaded.corpus.num_docs() == 2);
  CHECK(loaded.corpus.docs[0].entries[0].count == 3);
  CHECK(loaded.vocab.terms[1] == "bb");
}

TEST_CASE("binary cache round-trips exactly") {
  Rng rng(77);
  Corpus corpus = random_corpus(rng, 60, 40, 1, 15);
  corpus.docs[5].entries.clear();  // keep an empty doc in the mix
  FileGuard f{temp_path("cache.slda")};
  save_corpus_cache(f.path, corpus);
  Corpus reloaded = load_corpus_cache(f.path);
  REQUIRE(reloaded.num_docs() == corpus.num_docs());
  for (int d = 0; d < corpus.num_docs(); ++d) {
    REQUIRE(reloaded.docs[d].entries.size() == corpus.docs[d].entries.size());
    for (size_t j = 0; j < corpus.docs[d].entries.size(); ++j) {
      CHECK(reloaded.docs[d].entries[j].term == corpus.docs[d].entries[j].term);
      CHECK(reloaded.docs[d].entries[j].count == corpus.docs[d].entries[j].count);
    }
  }
  CHECK(load_corpus_any(f.path).num_docs() == corpus.num_docs());
}

TEST_CASE("vocabulary rejects duplicate terms") {
  FileGuard vc{temp_path("vc_dup.txt")};
  write_file(vc.path, "apple\nbanana\napple\n");
  CHECK_THROWS_AS(load_vocab(vc.path), ParseError);
}

TEST_CASE("split_heldout forces counts for a single-term document") {
  SparseDocument doc = make_doc({{0, 4}});
  for (uint64_t seed : {1ULL, 99ULL, 12345ULL}) {
    HeldoutSplit split = split_heldout(doc, 0.75, seed);
    REQUIRE(split.observed.entries.size() == 1);
    CHECK(split.observed.entries[0].count == 3);
    REQUIRE(split.heldout.entries.size() == 1);
    CHECK(split.heldout.entries[0].count == 1);
  }
}

TEST_CASE("split_heldout 80:20 token arithmetic") {
  SparseDocument doc = make_doc({{0, 3}, {1, 3}, {2, 4}});
  REQUIRE(doc.tokens() == 10);
  HeldoutSplit split = split_heldout(doc, 0.8, 7);
  CHECK(split.observed.tokens() == 8);
  CHECK(split.heldout.tokens() == 2);
}

TEST_CASE("split_heldout preserves the token multiset over 1000 random documents") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    SparseDocument doc = random_doc(rng, 30, 1 + static_cast<int>(uniform_below(rng, 10)));
    if (doc.tokens() < 2) continue;
    double ratio = 0.2 + 0.6 * canonical(rng);
    HeldoutSplit split = split_heldout(doc, ratio, derive_seed(5, "t", trial));

    std::map<int, int64_t> combined;
    for (const auto& e : split.observed.entries) combined[e.term] += e.count;
    for (const auto& e : split.heldout.entries) combined[e.term] += e.count;
    REQUIRE(combined.size() == doc.entries.size());
    for (const auto& e : doc.entries) CHECK(combined[e.term] == e.count);

    CHECK(split.observed.tokens() ==
          std::llround(ratio * static_cast<double>(doc.tokens())));
  }
}

TEST_CASE("split_heldout is deterministic for a fixed seed") {
  Rng rng(9);
  SparseDocument doc = random_doc(rng, 50, 12);
  HeldoutSplit a = split_heldout(doc, 0.8, 31337);
  HeldoutSplit b = split_heldout(doc, 0.8, 31337);
  REQUIRE(a.observed.entries.size() == b.observed.entries.size());
  for (size_t j = 0; j < a.observed.entries.size(); ++j) {
    CHECK(a.observed.entries[j].term == b.observed.entries[j].term);
    CHECK(a.observed.entries[j].count == b.observed.entries[j].count);
  }
}

TEST_CASE("split_heldout rejects unsplittable documents") {
  CHECK_THROWS_AS(split_heldout(make_doc({{0, 1}}), 0.8, 1), ConfigError);
  CHECK_THROWS_AS(split_heldout(make_doc({{0, 4}}), 1.2, 1), ConfigError);
}

TEST_CASE("minibatch stream: single pass sizes 3,3,1 for D=7, S=3") {
  Rng rng(5);
  Corpus corpus = random_corpus(rng, 7, 10, 1, 3);
  MinibatchStream stream(corpus, 3, 42);
  auto b1 = stream.next(), b2 = stream.next(), b3 = stream.next(), b4 = stream.next();
  REQUIRE(b1.has_value());
  REQUIRE(b2.has_value());
  REQUIRE(b3.has_value());
  CHECK(b1->size() == 3);
  CHECK(b2->size() == 3);
  CHECK(b3->size() == 1);
  CHECK_FALSE(b4.has_value());
  CHECK(stream.batches_emitted() == 3);
}

TEST_CASE("minibatch stream: shuffled epochs visit every document exactly E times") {
  Corpus corpus;
  corpus.vocab_size = 6;
  for (int d = 0; d < 6; ++d) corpus.docs.push_back(make_doc({{d, static_cast<int64_t>(d + 1)}}));
  MinibatchStream stream(corpus, 3, 11, StreamMode::ShuffledEpochs, 2);
  std::map<int64_t, int> seen;  // distinguish docs by their unique counts
  int batches = 0;
  while (auto batch = stream.next()) {
    ++batches;
    for (const auto& doc : *batch) seen[doc.entries[0].count] += 1;
  }
  CHECK(batches == 4);
  REQUIRE(seen.size() == 6);
  for (const auto& [key, count] : seen) CHECK(count == 2);
}

TEST_CASE("minibatch stream is bit-identical across runs with the same seed") {
  Rng rng(6);
  Corpus corpus = random_corpus(rng, 23, 10, 1, 4);
  for (StreamMode mode : {StreamMode::SinglePass, StreamMode::ShuffledEpochs}) {
    MinibatchStream s1(corpus, 4, 987, mode, 3);
    MinibatchStream s2(corpus, 4, 987, mode, 3);
    for (;;) {
      auto a = s1.next();
      auto b = s2.next();
      REQUIRE(a.has_value() == b.has_value());
      if (!a.has_value()) break;
      REQUIRE(a->size() == b->size());
      for (size_t i = 0; i < a->size(); ++i) {
        REQUIRE((*a)[i].entries.size() == (*b)[i].entries.size());
        for (size_t j = 0; j < (*a)[i].entries.size(); ++j) {
          CHECK((*a)[i].entries[j].term == (*b)[i].entries[j].term);
          CHECK((*a)[i].entries[j].count == (*b)[i].entries[j].count);
        }
      }
    }
  }
}

TEST_CASE("minibatch stream skip() fast-forwards to the same position") {
  Rng rng(14);
  Corpus corpus = random_corpus(rng, 25, 10, 1, 4);
  MinibatchStream full(corpus, 4, 55, StreamMode::ShuffledEpochs, 3);
  for (int i = 0; i < 5; ++i) full.next();
  MinibatchStream skipped(corpus, 4, 55, StreamMode::ShuffledEpochs, 3);
  skipped.skip(5);
  CHECK(skipped.batches_emitted() == 5);
  auto a = full.next();
  auto b = skipped.next();
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  REQUIRE(a->size() == b->size());
  for (size_t i = 0; i < a->size(); ++i)
    CHECK((*a)[i].entries[0].term == (*b)[i].entries[0].term);
}
