// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nptot/conjugate.hpp"
#include "nptot/corpus.hpp"
#include "nptot/crf.hpp"
#include "nptot/rng.hpp"
#include "nptot/time_hdp.hpp"

namespace nptot {

struct NptotConfig {
  double gamma = 1.0;    // top-level word DP
  double alpha0 = 1.0;   // document-level word DP
  double alpha1 = 1.0;   // topic-level time DP
  double lambda = 1.0;   // top-level time DP
  double beta = 0.1;     // word Dirichlet
  NigPrior nig;          // flat default over time component parameters
  int s_passes = 5;      // sequential-imputation passes for table dish moves
  double converge = 0.05;
  int max_sweeps = 1000;
  bool sequential_scan = false;  // default: one global shuffled order per sweep
  bool audit_every_sweep = false;
  std::uint64_t seed = 0;
};

struct TrainDiagnostics {
  std::vector<double> changed_fraction;  // per sweep
  bool converged = false;
};

// Collapsed Gibbs sampler over the two coupled franchises: word tables per
// document with topics as dishes, and time tables per topic with shared
// Gaussian components as dishes.
class NptotSampler {
 public:
  NptotSampler(const Corpus& corpus, const NptotConfig& config);

  // Sequentially seats every token by its prior-predictive weights.
  void init_from_prior();
  // Seats every document at a single table, all serving one dish.
  void init_single_topic();

  // One full pass: per-token table moves, then word-dish and time-dish
  // resampling. Returns the fraction of tokens whose topic changed.
  double sweep();

  TrainDiagnostics run(int max_sweeps, double converge);

  // Gibbs steps, exposed for direct exercise.
  void remove_token(int j, int i);
  void sample_word_table(int j, int i);
  void sample_time_table(int j, int i);
  bool resample_word_dish(int j, int table);
  void resample_all_word_dishes();
  void resample_all_time_dishes();

  double log_time_marginal(int topic, double t) const { return time_.log_marginal(topic, t); }

  // Unnormalized log weights as used by sample_word_table: one entry per
  // existing table of document j plus the NEW-table entry last. The token
  // must already be removed.
  struct TableWeights {
    std::vector<int> tables;  // parallel to logw[0..n-1]; logw.back() is NEW
    std::vector<double> logw;
  };
  TableWeights word_table_log_weights(int j, int i) const;

  // Per-dish decomposition of the NEW-table weight (ids parallel; kNew last).
  struct DishWeights {
    std::vector<int> dishes;
    std::vector<double> logw;
  };
  DishWeights new_table_dish_log_weights(int j, int i) const;

  // Candidate log weights for re-dishing a word table whose counts are
  // already detached (test hook used mid-resample; see resample_word_dish).
  DishWeights word_dish_log_weights(const std::vector<std::pair<std::int64_t, double>>& toks,
                                    const std::vector<int>& words, int s_passes);

  // State access
  int doc_count() const { return static_cast<int>(words_.size()); }
  int doc_size(int j) const { return static_cast<int>(words_[j].size()); }
  std::int64_t token_count() const { return n_tokens_; }
  int vocab_size() const { return vocab_size_; }
  int topic_count() const { return static_cast<int>(topic_words_.size()); }
  std::vector<int> topic_ids() const;
  int time_component_count() const { return time_.component_count(); }
  double max_topic_share() const;
  int word_table_of(int j, int i) const { return word_table_[j][i]; }
  int time_table_of(int j, int i) const { return time_table_[j][i]; }
  int topic_of(int j, int i) const;
  int time_component_of(int j, int i) const;
  int word_of(int j, int i) const { return words_[j][i]; }
  double time_of(int j, int i) const { return times_[j][i]; }
  const DirMultStats& topic_word_stats(int topic) const { return topic_words_.at(topic); }
  const Franchise& word_franchise() const { return word_fr_; }
  const TimeHdp& time_hdp() const { return time_; }
  const NptotConfig& config() const { return config_; }
  Rng& rng() { return rng_; }

  // Full consistency check; throws NumericError on drift.
  void audit() const;

  // Resamples all observations (words per topic urn, timestamps per
  // component urn) with the seating fixed. Used by the sampler-correctness
  // chain checks.
  void resample_observations();

  // Serialization (assignments + both franchises; counts are rebuilt).
  struct State {
    Franchise::State word_franchise;
    TimeHdp::State time;
    std::vector<std::vector<int>> word_table;
    std::vector<std::vector<int>> time_table;
  };
  State state() const;
  void restore(const State& s);

 private:
  std::int64_t tid(int j, int i) const { return doc_offset_[j] + i; }
  int tok_doc(std::int64_t t) const;
  double log_joint_word_pred(const DirMultStats* stats, const std::vector<int>& words) const;
  void drop_topic_if_dead(int topic);

  NptotConfig config_;
  int vocab_size_;
  std::vector<std::vector<int>> words_;
  std::vector<std::vector<double>> times_;
  std::vector<std::int64_t> doc_offset_;
  std::int64_t n_tokens_ = 0;

  Franchise word_fr_;  // restaurants = documents, dishes = topics
  TimeHdp time_;       // restaurants = topics, dishes = time components
  std::map<int, DirMultStats> topic_words_;
  std::vector<std::vector<int>> word_table_;
  std::vector<std::vector<int>> time_table_;
  Rng rng_;
};

}  // namespace nptot
