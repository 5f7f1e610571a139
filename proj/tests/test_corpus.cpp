// Apache License, Version 2.0, refer to LICENSE.txt

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "nptot/corpus.hpp"
#include "nptot/errors.hpp"
#include "nptot/rng.hpp"

using namespace nptot;
namespace fs = std::filesystem;

namespace {

std::vector<RawDocument> raw_docs(std::initializer_list<std::pair<double, const char*>> docs) {
  std::vector<RawDocument> out;
  int n = 0;
  for (const auto& [t, text] : docs) {
    out.push_back(RawDocument{"doc" + std::to_string(n++), t, text});
  }
  return out;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("nptot_corpus_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("timestamp normalization maps the range onto (eps, 1-eps)") {
  auto docs = raw_docs({{1790.0, "x"}, {2002.0, "y"}, {1900.0, "z"}});
  TimestampScaler scaler = normalize_timestamps(docs);
  CHECK(scaler(1790.0) == doctest::Approx(0.001).epsilon(1e-12));
  CHECK(scaler(2002.0) == doctest::Approx(0.999).epsilon(1e-12));

  auto mid = raw_docs({{0.0, "x"}, {10.0, "y"}});
  TimestampScaler s2 = normalize_timestamps(mid);
  CHECK(s2(5.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("normalization is strictly monotone and rejects a degenerate range") {
  auto docs = raw_docs({{3.0, "a"}, {7.5, "b"}});
  TimestampScaler scaler = normalize_timestamps(docs);
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double a = 3.0 + rng.uniform() * 4.5;
    const double b = 3.0 + rng.uniform() * 4.5;
    if (a < b) CHECK(scaler(a) < scaler(b));
    if (a > b) CHECK(scaler(a) > scaler(b));
  }
  auto flat = raw_docs({{5.0, "a"}, {5.0, "b"}});
  CHECK_THROWS_WITH_AS(normalize_timestamps(flat), "degenerate time range", DataError);
}

TEST_CASE("preprocess applies the filter pipeline in order") {
  auto docs = raw_docs({{0.0, "a an the cat cat cat"}, {1.0, "cat nap"}});
  PreprocessConfig cfg;
  cfg.min_word_len = 3;
  cfg.drop_top_k = 0;
  cfg.min_count = 2;
  cfg.min_doc_len = 1;
  Corpus corpus = preprocess(docs, cfg);
  REQUIRE(corpus.vocab_size() == 1);
  CHECK(corpus.vocab[0] == "cat");
  REQUIRE(corpus.documents.size() == 2);
  CHECK(corpus.documents[0].tokens == std::vector<int>{0, 0, 0});
}

TEST_CASE("identity filters keep every distinct word") {
  auto docs = raw_docs({{0.0, "Red fish blue Fish"}, {1.0, "one fish two fish"}});
  PreprocessConfig cfg;
  cfg.min_word_len = 1;
  cfg.drop_top_k = 0;
  cfg.min_count = 1;
  cfg.min_doc_len = 1;
  Corpus corpus = preprocess(docs, cfg);
  CHECK(corpus.vocab == std::vector<std::string>{"blue", "fish", "one", "red", "two"});
  CHECK(corpus.total_tokens() == 8);
}

TEST_CASE("stopwords and the top-k cut run before the count filter") {
  auto docs = raw_docs({{0.0, "aaa aaa aaa bbb bbb ccc ccc ddd"}, {1.0, "aaa bbb ccc ddd"}});
  PreprocessConfig cfg;
  cfg.min_word_len = 3;
  cfg.drop_top_k = 1;  // drops aaa (most frequent)
  cfg.min_count = 2;
  cfg.min_doc_len = 1;
  cfg.stopwords = {"ddd"};
  Corpus corpus = preprocess(docs, cfg);
  CHECK(corpus.vocab == std::vector<std::string>{"bbb", "ccc"});
}

TEST_CASE("paragraph splitting yields chunk documents with the parent timestamp") {
  std::string nine_paragraphs;
  for (int p = 0; p < 9; ++p) {
    nine_paragraphs += "paragraph number with words someword" + std::to_string(p) + "\n\n";
  }
  std::vector<RawDocument> docs{{"speech", 1801.0, nine_paragraphs},
                                {"other", 1802.0, "unrelated filler words here\n"}};
  PreprocessConfig cfg;
  cfg.min_word_len = 1;
  cfg.drop_top_k = 0;
  cfg.min_count = 1;
  cfg.min_doc_len = 1;
  cfg.split_paragraphs = 3;
  Corpus corpus = preprocess(docs, cfg);
  int chunks = 0;
  double stamp = -1.0;
  for (const auto& d : corpus.documents) {
    if (d.source_id.rfind("speech#", 0) == 0) {
      ++chunks;
      if (stamp < 0.0) stamp = d.timestamp;
      CHECK(d.timestamp == stamp);
    }
  }
  CHECK(chunks == 3);
}

TEST_CASE("preprocess never grows the token count and every vocab word passes the filters") {
  Rng rng(7);
  const std::vector<std::string> pool{"alpha", "beta",  "gamma", "delta", "ep",
                                      "zeta",  "theta", "iota",  "kappa", "mu"};
  std::vector<RawDocument> docs;
  std::size_t input_tokens = 0;
  for (int j = 0; j < 20; ++j) {
    std::string text;
    const int len = 5 + static_cast<int>(rng.below(40));
    for (int i = 0; i < len; ++i) {
      text += pool[rng.below(pool.size())];
      text += ' ';
      ++input_tokens;
    }
    docs.push_back({"d" + std::to_string(j), static_cast<double>(j), text});
  }
  PreprocessConfig cfg;
  cfg.min_word_len = 3;
  cfg.drop_top_k = 2;
  cfg.min_count = 4;
  cfg.min_doc_len = 2;
  Corpus corpus = preprocess(docs, cfg);
  CHECK(corpus.total_tokens() <= input_tokens);
  // surviving vocabulary honors the length filter
  for (const auto& w : corpus.vocab) CHECK(w.size() >= 3);
  for (const auto& d : corpus.documents) {
    CHECK(d.tokens.size() >= 2);
    CHECK(d.timestamp > 0.0);
    CHECK(d.timestamp < 1.0);
  }
}

TEST_CASE("empty corpus after filtering is an error") {
  auto docs = raw_docs({{0.0, "aa bb"}, {1.0, "cc dd"}});
  PreprocessConfig cfg;  // min_word_len 3 kills everything
  CHECK_THROWS_AS(preprocess(docs, cfg), DataError);
}

TEST_CASE("raw jsonl loading reports the offending line") {
  TempDir tmp;
  const std::string path = tmp.file("raw.jsonl");
  {
    std::ofstream out(path);
    out << R"({"id": "a", "timestamp": 1.5, "text": "hello world"})" << "\n";
    out << "this is not json\n";
  }
  try {
    load_raw_jsonl(path);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }

  const std::string empty_path = tmp.file("empty.jsonl");
  std::ofstream(empty_path).close();
  try {
    load_raw_jsonl(empty_path);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("no documents") != std::string::npos);
  }
}

TEST_CASE("corpus files round-trip byte-identically") {
  TempDir tmp;
  auto docs = raw_docs({{0.0, "aaa bbb aaa ccc"}, {1.0, "bbb ccc ddd eee"}});
  PreprocessConfig cfg;
  cfg.min_word_len = 1;
  cfg.drop_top_k = 0;
  cfg.min_count = 1;
  cfg.min_doc_len = 1;
  Corpus corpus = preprocess(docs, cfg);

  const std::string p1 = tmp.file("c1.json"), p2 = tmp.file("c2.json");
  save_corpus(corpus, p1);
  Corpus loaded = load_corpus(p1);
  CHECK(loaded.vocab == corpus.vocab);
  REQUIRE(loaded.documents.size() == corpus.documents.size());
  for (std::size_t j = 0; j < corpus.documents.size(); ++j) {
    CHECK(loaded.documents[j].tokens == corpus.documents[j].tokens);
    CHECK(loaded.documents[j].timestamp == corpus.documents[j].timestamp);
    CHECK(loaded.documents[j].source_id == corpus.documents[j].source_id);
  }
  save_corpus(loaded, p2);
  CHECK(read_file(p1) == read_file(p2));
  CHECK(loaded.vocab_hash() == corpus.vocab_hash());
}

TEST_CASE("corpus loader validates token ids and timestamps") {
  TempDir tmp;
  const std::string path = tmp.file("bad.json");
  {
    std::ofstream out(path);
    out << R"({"format":"nptot-corpus","version":1,"vocab":["a"],"time_range":[0,1,],)";
  }
  CHECK_THROWS_AS(load_corpus(path), DataError);
  {
    std::ofstream out(path);
    out << R"({"format":"nptot-corpus","version":1,"vocab":["a"],"time_range":[0,1],)"
        << R"("documents":[{"source_id":"d","timestamp":0.5,"token_ids":[3]}]})";
  }
  CHECK_THROWS_AS(load_corpus(path), DataError);
}

TEST_CASE("tokenizer keeps multibyte words and lowercases ascii") {
  auto words = tokenize("Hello, WORLD! \xD8\xA7\xD9\x84\xD8\xAB\xD9\x88\xD8\xB1\xD8\xA9 2011");
  REQUIRE(words.size() == 4);
  CHECK(words[0] == "hello");
  CHECK(words[1] == "world");
  CHECK(words[2] == "\xD8\xA7\xD9\x84\xD8\xAB\xD9\x88\xD8\xB1\xD8\xA9");
  CHECK(words[3] == "2011");
}
