// Apache License, Version 2.0, refer to LICENSE.txt

#include "nptot/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "nptot/errors.hpp"

namespace nptot {

using nlohmann::json;

std::size_t Corpus::total_tokens() const {
  std::size_t n = 0;
  for (const auto& d : documents) n += d.tokens.size();
  return n;
}

std::string Corpus::vocab_hash() const {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ull;
  };
  for (const auto& w : vocab) {
    for (unsigned char c : w) mix(c);
    mix('\n');
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

TimestampScaler normalize_timestamps(const std::vector<RawDocument>& raw) {
  if (raw.empty()) throw DataError("normalize_timestamps: no documents");
  double lo = raw.front().timestamp, hi = raw.front().timestamp;
  for (const auto& d : raw) {
    if (!std::isfinite(d.timestamp)) throw DataError("normalize_timestamps: non-finite timestamp");
    lo = std::min(lo, d.timestamp);
    hi = std::max(hi, d.timestamp);
  }
  if (lo == hi) throw DataError("degenerate time range");
  return TimestampScaler{lo, hi, 1e-3};
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c >= 0x80;
    if (keep) {
      cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

namespace {

// Word length in code points, not bytes (the corpora are bilingual).
std::size_t utf8_len(const std::string& w) {
  std::size_t n = 0;
  for (unsigned char c : w) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::vector<std::string> split_blank_line_paragraphs(const std::string& text) {
  std::vector<std::string> paras;
  std::string cur;
  std::istringstream in(text);
  std::string line;
  auto flush = [&]() {
    if (cur.find_first_not_of(" \t\r\n") != std::string::npos) paras.push_back(cur);
    cur.clear();
  };
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      flush();
    } else {
      cur += line;
      cur += '\n';
    }
  }
  flush();
  return paras;
}

}  // namespace

Corpus preprocess(const std::vector<RawDocument>& raw, const PreprocessConfig& config) {
  if (raw.empty()) throw DataError("preprocess: no documents");

  // Optional paragraph split; every chunk inherits the speech timestamp.
  std::vector<RawDocument> units;
  if (config.split_paragraphs && *config.split_paragraphs > 0) {
    const int per = *config.split_paragraphs;
    for (const auto& d : raw) {
      auto paras = split_blank_line_paragraphs(d.text);
      if (paras.empty()) continue;
      for (std::size_t start = 0, part = 0; start < paras.size(); start += per, ++part) {
        RawDocument chunk;
        chunk.id = d.id + "#p" + std::to_string(part);
        chunk.timestamp = d.timestamp;
        for (std::size_t i = start; i < std::min(paras.size(), start + per); ++i) {
          chunk.text += paras[i];
          chunk.text += '\n';
        }
        units.push_back(std::move(chunk));
      }
    }
  } else {
    units = raw;
  }
  if (units.empty()) throw DataError("preprocess: no documents after paragraph split");

  const TimestampScaler scaler = normalize_timestamps(units);

  // Length and stopword filters, then corpus frequencies for the top-k cut.
  std::vector<std::vector<std::string>> docs_words(units.size());
  std::map<std::string, long long> freq;
  for (std::size_t j = 0; j < units.size(); ++j) {
    for (auto& w : tokenize(units[j].text)) {
      if (static_cast<int>(utf8_len(w)) < config.min_word_len) continue;
      if (config.stopwords.count(w)) continue;
      ++freq[w];
      docs_words[j].push_back(std::move(w));
    }
  }

  std::set<std::string> dropped_top;
  if (config.drop_top_k > 0) {
    std::vector<std::pair<long long, std::string>> by_freq;
    by_freq.reserve(freq.size());
    for (const auto& [w, c] : freq) by_freq.emplace_back(c, w);
    std::sort(by_freq.begin(), by_freq.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (std::size_t i = 0; i < by_freq.size() && i < static_cast<std::size_t>(config.drop_top_k); ++i) {
      dropped_top.insert(by_freq[i].second);
    }
  }

  std::set<std::string> vocab_set;
  for (const auto& [w, c] : freq) {
    if (dropped_top.count(w)) continue;
    if (c < config.min_count) continue;
    vocab_set.insert(w);
  }

  Corpus corpus;
  corpus.vocab.assign(vocab_set.begin(), vocab_set.end());
  corpus.time_range = {scaler.t_min, scaler.t_max};
  std::map<std::string, int> word_id;
  for (std::size_t v = 0; v < corpus.vocab.size(); ++v) word_id[corpus.vocab[v]] = static_cast<int>(v);

  for (std::size_t j = 0; j < units.size(); ++j) {
    Document doc;
    doc.source_id = units[j].id;
    doc.timestamp = scaler(units[j].timestamp);
    for (const auto& w : docs_words[j]) {
      auto it = word_id.find(w);
      if (it != word_id.end()) doc.tokens.push_back(it->second);
    }
    if (static_cast<int>(doc.tokens.size()) < std::max(1, config.min_doc_len)) continue;
    corpus.documents.push_back(std::move(doc));
  }
  if (corpus.documents.empty()) throw DataError("preprocess: empty corpus after filtering");
  return corpus;
}

std::vector<RawDocument> load_raw_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<RawDocument> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("timestamp") ||
        !j.contains("text") || !j["id"].is_string() || !j["timestamp"].is_number() ||
        !j["text"].is_string()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": malformed document line");
    }
    RawDocument d;
    d.id = j["id"].get<std::string>();
    d.timestamp = j["timestamp"].get<double>();
    d.text = j["text"].get<std::string>();
    if (d.id.empty()) throw DataError(path + ":" + std::to_string(line_no) + ": empty id");
    if (!std::isfinite(d.timestamp)) {
      throw DataError(path + ":" + std::to_string(line_no) + ": non-finite timestamp");
    }
    docs.push_back(std::move(d));
  }
  if (docs.empty()) throw DataError(path + ": no documents");
  return docs;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  json j;
  j["format"] = "nptot-corpus";
  j["version"] = 1;
  j["vocab"] = corpus.vocab;
  j["time_range"] = {corpus.time_range.first, corpus.time_range.second};
  json docs = json::array();
  for (const auto& d : corpus.documents) {
    docs.push_back({{"source_id", d.source_id}, {"timestamp", d.timestamp}, {"token_ids", d.tokens}});
  }
  j["documents"] = std::move(docs);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(0) << '\n';
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object() || j.value("format", "") != "nptot-corpus") {
    throw DataError(path + ": not a corpus file");
  }
  if (j.value("version", 0) != 1) throw DataError(path + ": unsupported corpus version");
  Corpus corpus;
  corpus.vocab = j.at("vocab").get<std::vector<std::string>>();
  corpus.time_range = {j.at("time_range")[0].get<double>(), j.at("time_range")[1].get<double>()};
  for (const auto& dj : j.at("documents")) {
    Document d;
    d.source_id = dj.at("source_id").get<std::string>();
    d.timestamp = dj.at("timestamp").get<double>();
    d.tokens = dj.at("token_ids").get<std::vector<int>>();
    if (d.tokens.empty()) throw DataError(path + ": document without tokens");
    if (!(d.timestamp > 0.0 && d.timestamp < 1.0)) {
      throw DataError(path + ": timestamp outside (0,1)");
    }
    for (int w : d.tokens) {
      if (w < 0 || w >= corpus.vocab_size()) throw DataError(path + ": token id out of range");
    }
    corpus.documents.push_back(std::move(d));
  }
  if (corpus.documents.empty()) throw DataError(path + ": no documents");
  return corpus;
}

std::set<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    for (auto& w : tokenize(line)) words.insert(std::move(w));
  }
  return words;
}

}  // namespace nptot
