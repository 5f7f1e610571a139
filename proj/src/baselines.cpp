// Apache License, Version 2.0, refer to LICENSE.txt

#include "nptot/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "nptot/errors.hpp"

namespace nptot {

std::string finite_kind_name(FiniteKind k) {
  switch (k) {
    case FiniteKind::lda: return "lda";
    case FiniteKind::tot: return "tot";
    case FiniteKind::tot_multimodal: return "tot_multimodal";
  }
  throw DataError("unknown finite kind");
}

FiniteKind finite_kind_from_name(const std::string& name) {
  if (name == "lda") return FiniteKind::lda;
  if (name == "tot") return FiniteKind::tot;
  if (name == "tot_multimodal") return FiniteKind::tot_multimodal;
  throw DataError("unknown model kind: " + name);
}

FiniteSampler::FiniteSampler(const Corpus& corpus, const FiniteConfig& config)
    : config_(config),
      alpha_(config.effective_alpha()),
      vocab_size_(corpus.vocab_size()),
      rng_(config.seed) {
  if (config.k < 1) throw DataError("FiniteSampler: k must be >= 1");
  if (corpus.documents.empty()) throw DataError("FiniteSampler: empty corpus");
  for (const auto& d : corpus.documents) {
    words_.push_back(d.tokens);
    times_.emplace_back(d.tokens.size(), d.timestamp);
    doc_offset_.push_back(n_tokens_);
    n_tokens_ += static_cast<std::int64_t>(d.tokens.size());
  }
  z_.resize(words_.size());
  doc_topic_.assign(words_.size(), std::vector<int>(config.k, 0));
  for (std::size_t j = 0; j < words_.size(); ++j) z_[j].assign(words_[j].size(), -1);
  topic_words_.assign(config.k, DirMultStats(vocab_size_, config.beta));
  psi_.assign(config.k, BetaParams{1.0, 1.0});
  if (config.kind == FiniteKind::tot_multimodal) {
    time_.emplace(config.alpha1, config.lambda, config.nig);
    time_table_.resize(words_.size());
    for (std::size_t j = 0; j < words_.size(); ++j) time_table_[j].assign(words_[j].size(), kNew);
  }
}

void FiniteSampler::init_random() {
  for (int j = 0; j < doc_count(); ++j) {
    for (int i = 0; i < doc_size(j); ++i) {
      add_token(j, i, static_cast<int>(rng_.below(config_.k)));
    }
  }
}

void FiniteSampler::remove_token(int j, int i) {
  const int topic = z_[j][i];
  if (topic < 0) throw NumericError("FiniteSampler: token not assigned");
  --doc_topic_[j][topic];
  topic_words_[topic].remove(words_[j][i]);
  if (time_) {
    time_->remove(tid(j, i), times_[j][i]);
    time_table_[j][i] = kNew;
  }
  z_[j][i] = -1;
}

void FiniteSampler::add_token(int j, int i, int topic) {
  z_[j][i] = topic;
  ++doc_topic_[j][topic];
  topic_words_[topic].add(words_[j][i]);
  if (time_) {
    time_table_[j][i] = time_->sample_table(rng_, tid(j, i), topic, times_[j][i]);
  }
}

double FiniteSampler::log_time_factor(int topic, double t, double log_global) const {
  switch (config_.kind) {
    case FiniteKind::lda: return 0.0;
    case FiniteKind::tot: return beta_log_pdf(t, psi_[topic]);
    case FiniteKind::tot_multimodal: return time_->log_marginal(topic, t, log_global);
  }
  return 0.0;
}

std::vector<double> FiniteSampler::token_log_weights(int j, int i) const {
  const int w = words_[j][i];
  const double t = times_[j][i];
  const double log_global = time_ ? time_->log_global_mix(t) : 0.0;
  std::vector<double> logw(config_.k);
  for (int topic = 0; topic < config_.k; ++topic) {
    logw[topic] = std::log(doc_topic_[j][topic] + alpha_) +
                  topic_words_[topic].log_predictive(w) + log_time_factor(topic, t, log_global);
  }
  return logw;
}

double FiniteSampler::sweep() {
  std::int64_t changed = 0;
  for (int j = 0; j < doc_count(); ++j) {
    for (int i = 0; i < doc_size(j); ++i) {
      const int old_topic = z_[j][i];
      remove_token(j, i);
      const std::vector<double> logw = token_log_weights(j, i);
      const int topic = static_cast<int>(sample_logweights_invcdf(rng_, logw));
      add_token(j, i, topic);
      if (topic != old_topic) ++changed;
    }
  }
  if (config_.kind == FiniteKind::tot && config_.refit_psi) refit_psi();
  if (config_.kind == FiniteKind::tot_multimodal) {
    // time dish resampling, as in the nonparametric model
    for (int topic : time_->franchise().restaurant_ids()) {
      const std::vector<int> tables = time_->franchise().tables_of(topic);
      for (int table : tables) {
        if (!time_->franchise().has_table(table)) continue;
        std::vector<double> ts;
        for (std::int64_t token : time_->franchise().table_members(table)) {
          auto it = std::upper_bound(doc_offset_.begin(), doc_offset_.end(), token);
          const int d = static_cast<int>(it - doc_offset_.begin()) - 1;
          ts.push_back(times_[d][token - doc_offset_[d]]);
        }
        time_->resample_table_dish(rng_, table, ts);
      }
    }
  }
  return static_cast<double>(changed) / static_cast<double>(n_tokens_);
}

void FiniteSampler::refit_psi() {
  std::vector<std::vector<double>> per_topic(config_.k);
  for (int j = 0; j < doc_count(); ++j) {
    for (int i = 0; i < doc_size(j); ++i) per_topic[z_[j][i]].push_back(times_[j][i]);
  }
  for (int topic = 0; topic < config_.k; ++topic) {
    if (per_topic[topic].size() < 2) continue;  // keep previous parameters
    psi_[topic] = beta_fit_moments(per_topic[topic]).params;
  }
}

FiniteSampler::Diagnostics FiniteSampler::run(int max_sweeps, double converge) {
  Diagnostics diag;
  for (int s = 0; s < max_sweeps; ++s) {
    const double changed = sweep();
    diag.changed_fraction.push_back(changed);
    if (converge > 0.0 && changed < converge) {
      diag.converged = true;
      break;
    }
  }
  return diag;
}

int FiniteSampler::active_topics() const {
  int n = 0;
  for (const auto& stats : topic_words_) {
    if (stats.total() > 0) ++n;
  }
  return n;
}

void FiniteSampler::audit() const {
  std::vector<std::vector<int>> dt(doc_count(), std::vector<int>(config_.k, 0));
  std::vector<std::vector<int>> tw(config_.k, std::vector<int>(vocab_size_, 0));
  for (int j = 0; j < doc_count(); ++j) {
    int nj = 0;
    for (int i = 0; i < doc_size(j); ++i) {
      const int topic = z_[j][i];
      if (topic < 0 || topic >= config_.k) throw NumericError("audit: z out of range");
      ++dt[j][topic];
      ++tw[topic][words_[j][i]];
      ++nj;
    }
    if (dt[j] != doc_topic_[j]) throw NumericError("audit: doc_topic drift");
    int sum = 0;
    for (int c : doc_topic_[j]) sum += c;
    if (sum != nj) throw NumericError("audit: doc_topic total drift");
  }
  for (int topic = 0; topic < config_.k; ++topic) {
    for (int v = 0; v < vocab_size_; ++v) {
      if (tw[topic][v] != topic_words_[topic].count(v)) throw NumericError("audit: f(v,k) drift");
    }
  }
  if (time_) {
    time_->audit();
    if (time_->franchise().total_customers() != n_tokens_) {
      throw NumericError("audit: time seats != tokens");
    }
    for (int j = 0; j < doc_count(); ++j) {
      for (int i = 0; i < doc_size(j); ++i) {
        if (time_->franchise().table_restaurant(time_table_[j][i]) != z_[j][i]) {
          throw NumericError("audit: time table under wrong topic");
        }
      }
    }
  }
}

PosthocTimeFit posthoc_time_fit(const std::vector<std::vector<int>>& z,
                                const std::vector<double>& doc_times, int k, PosthocMode mode,
                                int c_max, Rng& rng) {
  PosthocTimeFit fit;
  fit.mode = mode;
  std::vector<std::vector<double>> per_topic(k);
  for (std::size_t j = 0; j < z.size(); ++j) {
    for (int topic : z[j]) per_topic[topic].push_back(doc_times[j]);
  }
  fit.topics.resize(k);
  for (int topic = 0; topic < k; ++topic) {
    const auto& ts = per_topic[topic];
    if (ts.empty()) {
      ++fit.skipped;
      continue;
    }
    PosthocTopicFit& tf = fit.topics[topic];
    tf.fitted = true;
    double mean = 0.0;
    for (double t : ts) mean += t;
    mean /= static_cast<double>(ts.size());
    double var = 0.0;
    for (double t : ts) var += (t - mean) * (t - mean);
    var /= static_cast<double>(ts.size());
    tf.mean = mean;
    tf.var = std::max(var, 1e-6);
    if (mode == PosthocMode::multimodal) {
      tf.gmm = gmm_fit(ts, c_max, rng);
    }
  }
  return fit;
}

}  // namespace nptot
