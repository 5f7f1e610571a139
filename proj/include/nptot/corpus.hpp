// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace nptot {

struct RawDocument {
  std::string id;
  double timestamp = 0.0;  // original units (epoch days, years, ...)
  std::string text;
};

struct Document {
  std::vector<int> tokens;   // word ids
  double timestamp = 0.0;    // normalized, strictly inside (0,1)
  std::string source_id;
};

struct Corpus {
  std::vector<std::string> vocab;  // index = word id
  std::vector<Document> documents;
  std::pair<double, double> time_range{0.0, 0.0};  // original units

  int vocab_size() const { return static_cast<int>(vocab.size()); }
  std::size_t total_tokens() const;
  std::string vocab_hash() const;  // fnv1a-64 over the word list
};

// Affine map onto (eps, 1-eps); the boundary margin keeps beta and Gaussian
// time densities finite at the extremes.
struct TimestampScaler {
  double t_min = 0.0;
  double t_max = 1.0;
  double eps = 1e-3;
  double operator()(double t) const {
    return eps + (1.0 - 2.0 * eps) * (t - t_min) / (t_max - t_min);
  }
};

// Throws DataError("degenerate time range") when all timestamps are equal.
TimestampScaler normalize_timestamps(const std::vector<RawDocument>& raw);

struct PreprocessConfig {
  int min_word_len = 3;
  int drop_top_k = 40;
  int min_count = 10;
  int min_doc_len = 20;
  std::set<std::string> stopwords;
  std::optional<int> split_paragraphs;  // e.g. 3 to cut speeches into chunks
};

// Lowercases, splits on non-alphanumeric bytes (multibyte UTF-8 is kept as
// letters), then filters: word length -> stopwords -> top-k by corpus
// frequency -> min count -> short documents. Vocab is the sorted survivor set.
Corpus preprocess(const std::vector<RawDocument>& raw, const PreprocessConfig& config);

std::vector<std::string> tokenize(const std::string& text);

// One {"id","timestamp","text"} object per line.
std::vector<RawDocument> load_raw_jsonl(const std::string& path);

// Versioned processed-corpus container (vocab array + documents array).
void save_corpus(const Corpus& corpus, const std::string& path);
Corpus load_corpus(const std::string& path);

std::set<std::string> load_stopwords(const std::string& path);

}  // namespace nptot
