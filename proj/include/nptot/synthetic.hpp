// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nptot/corpus.hpp"

namespace nptot {

struct SyntheticConfig {
  int d = 100;             // documents
  int k = 30;              // topics
  int v = 100;             // vocabulary
  int c = 10;              // time components per topic
  int tokens_per_doc = 50;
  double word_sd = 0.0;    // bump width over word indices; 0 -> v/20
  std::uint64_t seed = 0;

  double effective_word_sd() const { return word_sd > 0.0 ? word_sd : v / 20.0; }
};

struct SyntheticTruth {
  std::vector<std::vector<double>> topic_word;  // K x V rows, each summing to 1
  // per topic: (mean, variance, weight) triples of the time mixture
  std::vector<std::vector<std::array<double, 3>>> topic_time;
  std::vector<std::vector<double>> doc_topic;  // D x K rows
  std::vector<double> timestamps;              // D values in (0,1)

  double time_density(int topic, double t) const;
};

// Ground-truth generator: topic-word rows are discretized Gaussian bumps
// with uniform random centers on [0,V]; per-topic time mixtures are C
// equal-weight Gaussians with variance 1/(3C)^2, evenly spaced with a random
// phase; document topic proportions follow each topic's density at the
// document's timestamp; words follow the usual LDA draw.
std::pair<Corpus, SyntheticTruth> generate_synthetic(const SyntheticConfig& config);

void save_truth(const SyntheticTruth& truth, const std::string& path);
SyntheticTruth load_truth(const std::string& path);

// Greedy max-weight matching on (1 - total variation) between true and
// inferred topic-word rows.
struct TopicMatch {
  std::vector<std::pair<int, int>> pairs;  // (true topic, inferred topic id)
  std::vector<double> tv;                  // per matched pair
  int unmatched_true = 0;
  int unmatched_inferred = 0;
};
TopicMatch match_topics(const std::vector<std::vector<double>>& truth_rows,
                        const std::vector<std::pair<int, std::vector<double>>>& inferred_rows);

double total_variation(const std::vector<double>& p, const std::vector<double>& q);

// Count interior modes of a density sampled on a uniform grid: local maxima
// whose prominence is at least prominence_frac of the global maximum.
int count_modes(const std::vector<double>& density, double prominence_frac);

}  // namespace nptot
