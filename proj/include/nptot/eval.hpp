// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nptot/baselines.hpp"
#include "nptot/corpus.hpp"
#include "nptot/snapshot.hpp"

namespace nptot {

struct SplitResult {
  Corpus train;
  Corpus test;
  long long dropped_test_tokens = 0;  // outside the train vocabulary
};

// Document-level 70:30 split with a seeded shuffle; the vocabulary is
// rebuilt from the training half and test tokens outside it are dropped.
SplitResult split_corpus(const Corpus& corpus, double ratio, std::uint64_t seed);

// Model parameters frozen for held-out evaluation: per-topic word
// predictives at training counts, a per-topic time density, and the prior
// over topics (Dirichlet for the parametric models, the dish weights of the
// word franchise for the nonparametric one).
class FrozenModel {
 public:
  enum class TimeKind { none, gaussian, gmm, beta, time_hdp };

  struct Topic {
    int id = 0;  // model-side id (nptot) or index (finite)
    std::vector<double> log_word;
    TimeKind time_kind = TimeKind::none;
    double mean = 0.5, var = 1.0;
    GaussMixture gmm;
    BetaParams beta_params;
  };

  static FrozenModel from_nptot(const NptotView& view);
  // LDA variants attach a post-hoc fit; plain LDA (fit == nullptr) carries
  // no time density.
  static FrozenModel from_finite(const FiniteView& view, const PosthocTimeFit* fit);

  int topic_count() const { return static_cast<int>(topics_.size()); }
  int vocab_size() const { return vocab_size_; }
  bool nonparametric() const { return nonparametric_; }
  const std::string& kind() const { return kind_; }
  const std::vector<Topic>& topics() const { return topics_; }

  double log_word_pred(int index, int w) const;  // index == -1: fresh topic, 1/V
  double log_time_density(int index, double t) const;  // index == -1: fresh topic

  // Finite prior
  double alpha() const { return alpha_; }
  // Nonparametric prior
  double alpha0() const { return alpha0_; }
  double log_dish_prob(int index) const;  // frozen m_k/(m+gamma); -1 -> gamma/(m+gamma)

 private:
  std::string kind_;
  int vocab_size_ = 0;
  bool nonparametric_ = false;
  double alpha_ = 1.0;
  double alpha0_ = 1.0, gamma_ = 1.0;
  std::vector<double> dish_weight_;  // m_k per topic index
  double dish_total_ = 0.0;          // m_..
  std::vector<Topic> topics_;
  std::optional<TimeHdp> time_;
  std::vector<int> hdp_topic_ids_;
};

struct EvalProtocol {
  int burn_in = 50;
  int samples = 200;
  std::uint64_t seed = 0;
};

struct JointLikResult {
  double nll_per_token = 0.0;
  long long n_tokens = 0;
  int n_samples = 0;
};

// Harmonic-mean estimate of the per-document joint likelihood of words and
// timestamp, reported as average per-token negative log likelihood.
JointLikResult joint_loglik(const FrozenModel& model, const Corpus& test,
                            const EvalProtocol& protocol);

struct PerplexityResult {
  double perplexity = 1.0;
  long long n_tokens = 0;  // completed (second-half) tokens
  int skipped_docs = 0;
  int n_samples = 0;
};

// Document-completion perplexity: first half observed (with the timestamp),
// second half scored through the estimated topic proportions.
PerplexityResult completion_perplexity(const FrozenModel& model, const Corpus& test,
                                       const EvalProtocol& protocol);

struct EvalReport {
  std::string model;
  int k = 0;  // fixed K, or the discovered topic count for nptot
  double nll_per_token = 0.0;
  double perplexity = 0.0;
  long long n_test_tokens = 0;
  int n_samples = 0;
  std::uint64_t seed = 0;
  double runtime_s = 0.0;
  std::string error;  // empty on success
};

struct ExperimentModel {
  std::string name;  // nptot | tot | tot-multimodal | lda-unimodal | lda-multimodal
  int k = 0;         // ignored for nptot; 0 -> nptot's discovered count
};

struct ExperimentConfig {
  double split_ratio = 0.7;
  std::uint64_t seed = 0;
  EvalProtocol protocol;
  NptotConfig nptot;
  FiniteConfig finite;  // template for the parametric models (k overridden)
  int gmm_c_max = 10;
  int top_words = 10;
  int density_grid = 200;
  bool timings = false;  // keep the CSV byte-stable unless asked
};

struct ExperimentResult {
  std::vector<EvalReport> reports;
  std::string csv;
  nlohmann::json topics;  // per model: top words + time density curves
};

// Trains every requested model on the split's training half, evaluates both
// metrics on the test half, and assembles the CSV and plot data. Per-model
// failures are recorded in the report and do not stop the run.
ExperimentResult run_experiment(const Corpus& corpus, const std::vector<ExperimentModel>& models,
                                const ExperimentConfig& config);

std::string reports_to_csv(const std::vector<EvalReport>& reports, bool timings);

}  // namespace nptot
