// Apache License, Version 2.0, refer to LICENSE.txt

#include "nptot/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "nptot/conjugate.hpp"
#include "nptot/errors.hpp"
#include "nptot/rng.hpp"

namespace nptot {

using nlohmann::json;

double SyntheticTruth::time_density(int topic, double t) const {
  double density = 0.0;
  for (const auto& [mean, var, weight] : topic_time[topic]) {
    density += weight * std::exp(gauss_log_pdf(t, mean, var));
  }
  return density;
}

std::pair<Corpus, SyntheticTruth> generate_synthetic(const SyntheticConfig& config) {
  if (config.d < 1 || config.k < 1 || config.v < 1 || config.c < 1 || config.tokens_per_doc < 1) {
    throw DataError("generate_synthetic: all counts must be >= 1");
  }
  Rng rng(config.seed);
  SyntheticTruth truth;

  // Topic-word rows: Gaussian bumps over word indices, center ~ U[0, V].
  const double word_sd = config.effective_word_sd();
  truth.topic_word.resize(config.k);
  for (int k = 0; k < config.k; ++k) {
    const double center = rng.uniform() * config.v;
    auto& row = truth.topic_word[k];
    row.resize(config.v);
    double total = 0.0;
    for (int v = 0; v < config.v; ++v) {
      const double x = v + 0.5;
      row[v] = std::exp(-(x - center) * (x - center) / (2.0 * word_sd * word_sd));
      total += row[v];
    }
    for (double& p : row) p /= total;
  }

  // Time mixtures: C equal-weight components, equal variance from
  // 3*C*sqrt(var) = 1, means 1/C apart with a random per-topic phase.
  const double var = 1.0 / (9.0 * config.c * config.c);
  truth.topic_time.resize(config.k);
  for (int k = 0; k < config.k; ++k) {
    const double phase = rng.uniform() / config.c;
    for (int c = 0; c < config.c; ++c) {
      truth.topic_time[k].push_back({phase + static_cast<double>(c) / config.c, var,
                                     1.0 / config.c});
    }
  }

  // One document per timestamp, evenly spaced inside (0.005, 0.995).
  truth.timestamps.resize(config.d);
  for (int j = 0; j < config.d; ++j) {
    truth.timestamps[j] =
        config.d == 1 ? 0.5 : 0.005 + 0.99 * static_cast<double>(j) / (config.d - 1);
  }

  truth.doc_topic.assign(config.d, std::vector<double>(config.k, 0.0));
  for (int j = 0; j < config.d; ++j) {
    double total = 0.0;
    for (int k = 0; k < config.k; ++k) {
      truth.doc_topic[j][k] = truth.time_density(k, truth.timestamps[j]);
      total += truth.doc_topic[j][k];
    }
    for (double& p : truth.doc_topic[j]) p /= total;
  }

  Corpus corpus;
  corpus.vocab.resize(config.v);
  for (int v = 0; v < config.v; ++v) corpus.vocab[v] = "w" + std::to_string(v);
  corpus.time_range = {truth.timestamps.front(), truth.timestamps.back()};
  auto draw = [&rng](const std::vector<double>& probs) {
    double u = rng.uniform();
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      u -= probs[i];
      if (u < 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  };
  for (int j = 0; j < config.d; ++j) {
    Document doc;
    doc.source_id = "synth" + std::to_string(j);
    doc.timestamp = truth.timestamps[j];
    doc.tokens.resize(config.tokens_per_doc);
    for (int i = 0; i < config.tokens_per_doc; ++i) {
      const int topic = draw(truth.doc_topic[j]);
      doc.tokens[i] = draw(truth.topic_word[topic]);
    }
    corpus.documents.push_back(std::move(doc));
  }
  return {std::move(corpus), std::move(truth)};
}

void save_truth(const SyntheticTruth& truth, const std::string& path) {
  json j{{"format", "nptot-truth"},
         {"version", 1},
         {"topic_word", truth.topic_word},
         {"doc_topic", truth.doc_topic},
         {"timestamps", truth.timestamps}};
  json tt = json::array();
  for (const auto& topic : truth.topic_time) {
    json row = json::array();
    for (const auto& comp : topic) row.push_back({comp[0], comp[1], comp[2]});
    tt.push_back(std::move(row));
  }
  j["topic_time"] = std::move(tt);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(0) << '\n';
}

SyntheticTruth load_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || j.value("format", "") != "nptot-truth") {
    throw DataError(path + ": not a truth file");
  }
  SyntheticTruth truth;
  truth.topic_word = j.at("topic_word").get<std::vector<std::vector<double>>>();
  truth.doc_topic = j.at("doc_topic").get<std::vector<std::vector<double>>>();
  truth.timestamps = j.at("timestamps").get<std::vector<double>>();
  for (const auto& row : j.at("topic_time")) {
    std::vector<std::array<double, 3>> topic;
    for (const auto& comp : row) {
      topic.push_back({comp[0].get<double>(), comp[1].get<double>(), comp[2].get<double>()});
    }
    truth.topic_time.push_back(std::move(topic));
  }
  return truth;
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw DataError("total_variation: length mismatch");
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return 0.5 * tv;
}

TopicMatch match_topics(const std::vector<std::vector<double>>& truth_rows,
                        const std::vector<std::pair<int, std::vector<double>>>& inferred_rows) {
  TopicMatch match;
  std::vector<bool> used_true(truth_rows.size(), false);
  std::vector<bool> used_inf(inferred_rows.size(), false);
  const std::size_t n_pairs = std::min(truth_rows.size(), inferred_rows.size());
  for (std::size_t round = 0; round < n_pairs; ++round) {
    double best_tv = 2.0;
    std::size_t best_t = 0, best_i = 0;
    for (std::size_t t = 0; t < truth_rows.size(); ++t) {
      if (used_true[t]) continue;
      for (std::size_t i = 0; i < inferred_rows.size(); ++i) {
        if (used_inf[i]) continue;
        const double tv = total_variation(truth_rows[t], inferred_rows[i].second);
        if (tv < best_tv) {
          best_tv = tv;
          best_t = t;
          best_i = i;
        }
      }
    }
    used_true[best_t] = true;
    used_inf[best_i] = true;
    match.pairs.emplace_back(static_cast<int>(best_t), inferred_rows[best_i].first);
    match.tv.push_back(best_tv);
  }
  match.unmatched_true = static_cast<int>(truth_rows.size() - n_pairs);
  match.unmatched_inferred = static_cast<int>(inferred_rows.size() - n_pairs);
  return match;
}

int count_modes(const std::vector<double>& density, double prominence_frac) {
  const int n = static_cast<int>(density.size());
  if (n < 3) return 0;
  double global_max = 0.0;
  for (double d : density) global_max = std::max(global_max, d);
  if (global_max <= 0.0) return 0;
  const double min_prom = prominence_frac * global_max;

  // Local maxima (plateau-aware), then prominence against the lowest valley
  // separating each peak from higher ground.
  std::vector<int> peaks;
  for (int i = 0; i < n; ++i) {
    int l = i - 1, r = i + 1;
    while (r < n && density[r] == density[i]) ++r;
    const bool left_ok = l < 0 || density[l] < density[i];
    const bool right_ok = r >= n || density[r] < density[i];
    if (left_ok && right_ok) {
      peaks.push_back(i);
      i = r - 1;
    }
  }
  int modes = 0;
  for (int p : peaks) {
    double left_valley = density[p];
    for (int i = p - 1; i >= 0; --i) {
      left_valley = std::min(left_valley, density[i]);
      if (density[i] > density[p]) break;
    }
    double right_valley = density[p];
    for (int i = p + 1; i < n; ++i) {
      right_valley = std::min(right_valley, density[i]);
      if (density[i] > density[p]) break;
    }
    bool higher_left = false, higher_right = false;
    for (int i = p - 1; i >= 0; --i) {
      if (density[i] > density[p]) {
        higher_left = true;
        break;
      }
    }
    for (int i = p + 1; i < n; ++i) {
      if (density[i] > density[p]) {
        higher_right = true;
        break;
      }
    }
    double prom;
    if (!higher_left && !higher_right) {
      prom = density[p];  // the global peak
    } else if (higher_left && higher_right) {
      prom = density[p] - std::max(left_valley, right_valley);
    } else if (higher_left) {
      prom = density[p] - left_valley;
    } else {
      prom = density[p] - right_valley;
    }
    if (prom >= min_prom) ++modes;
  }
  return modes;
}

}  // namespace nptot
