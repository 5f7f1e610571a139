// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nptot/conjugate.hpp"
#include "nptot/corpus.hpp"
#include "nptot/rng.hpp"
#include "nptot/time_hdp.hpp"

namespace nptot {

enum class FiniteKind { lda, tot, tot_multimodal };

std::string finite_kind_name(FiniteKind k);
FiniteKind finite_kind_from_name(const std::string& name);

struct FiniteConfig {
  FiniteKind kind = FiniteKind::lda;
  int k = 10;
  double alpha = 0.0;  // 0 -> conventional 50/K
  double beta = 0.1;
  // time HDP side, tot_multimodal only
  double alpha1 = 1.0;
  double lambda = 1.0;
  NigPrior nig;
  int max_sweeps = 1000;    // the LDA baselines run a fixed iteration budget
  double converge = 0.0;    // tot and tot_multimodal stop below 5% by default
  bool refit_psi = true;    // tot: method-of-moments refit after each sweep
  std::uint64_t seed = 0;

  double effective_alpha() const { return alpha > 0.0 ? alpha : 50.0 / k; }
};

// Collapsed Gibbs over a fixed set of K topics. Three flavors share the word
// side: plain LDA, TOT (beta density over timestamps, refit each sweep), and
// TOT-Multimodal (the time HDP kept, the word HDP replaced by Dirichlet(K)).
class FiniteSampler {
 public:
  FiniteSampler(const Corpus& corpus, const FiniteConfig& config);

  void init_random();
  double sweep();

  struct Diagnostics {
    std::vector<double> changed_fraction;
    bool converged = false;
  };
  Diagnostics run(int max_sweeps, double converge);

  // Token-level pieces (token must be removed for the weights call).
  void remove_token(int j, int i);
  void add_token(int j, int i, int topic);
  std::vector<double> token_log_weights(int j, int i) const;

  void refit_psi();
  void set_psi(int topic, const BetaParams& p) { psi_.at(topic) = p; }

  int z(int j, int i) const { return z_[j][i]; }
  int k() const { return config_.k; }
  int doc_count() const { return static_cast<int>(words_.size()); }
  int doc_size(int j) const { return static_cast<int>(words_[j].size()); }
  std::int64_t token_count() const { return n_tokens_; }
  int doc_topic_count(int j, int topic) const { return doc_topic_[j][topic]; }
  const std::vector<DirMultStats>& topic_words() const { return topic_words_; }
  const std::vector<BetaParams>& psi() const { return psi_; }
  const TimeHdp& time_hdp() const { return *time_; }
  bool has_time_hdp() const { return time_.has_value(); }
  double time_of(int j, int i) const { return times_[j][i]; }
  int time_table_of(int j, int i) const { return time_table_[j][i]; }
  const FiniteConfig& config() const { return config_; }
  Rng& rng() { return rng_; }

  int active_topics() const;  // topics with at least one token

  void audit() const;

 private:
  std::int64_t tid(int j, int i) const { return doc_offset_[j] + i; }
  double log_time_factor(int topic, double t, double log_global) const;

  FiniteConfig config_;
  double alpha_;
  int vocab_size_;
  std::vector<std::vector<int>> words_;
  std::vector<std::vector<double>> times_;
  std::vector<std::int64_t> doc_offset_;
  std::int64_t n_tokens_ = 0;

  std::vector<std::vector<int>> z_;
  std::vector<std::vector<int>> doc_topic_;
  std::vector<DirMultStats> topic_words_;
  std::vector<BetaParams> psi_;
  std::optional<TimeHdp> time_;
  std::vector<std::vector<int>> time_table_;
  Rng rng_;
};

// Post-hoc per-topic time fits for the LDA baselines.
enum class PosthocMode { unimodal, multimodal };

struct PosthocTopicFit {
  bool fitted = false;  // topics with zero tokens are skipped
  double mean = 0.5;
  double var = 1.0;
  GaussMixture gmm;  // multimodal mode only
};

struct PosthocTimeFit {
  PosthocMode mode = PosthocMode::unimodal;
  std::vector<PosthocTopicFit> topics;
  int skipped = 0;
};

// Timestamps of tokens assigned to each topic (duplicated document stamps).
PosthocTimeFit posthoc_time_fit(const std::vector<std::vector<int>>& z,
                                const std::vector<double>& doc_times, int k, PosthocMode mode,
                                int c_max, Rng& rng);

}  // namespace nptot
