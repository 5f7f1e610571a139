// Apache License, Version 2.0, refer to LICENSE.txt

#include "nptot/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "nptot/errors.hpp"
#include "nptot/report.hpp"

namespace nptot {

SplitResult split_corpus(const Corpus& corpus, double ratio, std::uint64_t seed) {
  const std::size_t n = corpus.documents.size();
  if (n < 2) throw DataError("split_corpus: need at least 2 documents");
  if (!(ratio > 0.0 && ratio < 1.0)) throw DataError("split_corpus: ratio must be in (0,1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::size_t n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

  SplitResult out;
  // vocabulary from the training half only
  std::vector<bool> in_train_vocab(corpus.vocab.size(), false);
  for (std::size_t r = 0; r < n_train; ++r) {
    for (int w : corpus.documents[order[r]].tokens) in_train_vocab[w] = true;
  }
  std::vector<int> remap(corpus.vocab.size(), -1);
  for (std::size_t v = 0; v < corpus.vocab.size(); ++v) {
    if (in_train_vocab[v]) {
      remap[v] = static_cast<int>(out.train.vocab.size());
      out.train.vocab.push_back(corpus.vocab[v]);
    }
  }
  out.test.vocab = out.train.vocab;
  out.train.time_range = corpus.time_range;
  out.test.time_range = corpus.time_range;

  for (std::size_t r = 0; r < n; ++r) {
    const Document& src = corpus.documents[order[r]];
    Document doc;
    doc.source_id = src.source_id;
    doc.timestamp = src.timestamp;
    for (int w : src.tokens) {
      if (remap[w] >= 0) {
        doc.tokens.push_back(remap[w]);
      } else {
        ++out.dropped_test_tokens;
      }
    }
    if (r < n_train) {
      out.train.documents.push_back(std::move(doc));
    } else if (!doc.tokens.empty()) {
      out.test.documents.push_back(std::move(doc));
    }
  }
  return out;
}

FrozenModel FrozenModel::from_nptot(const NptotView& view) {
  FrozenModel m;
  m.kind_ = "nptot";
  m.vocab_size_ = view.vocab_size;
  m.nonparametric_ = true;
  m.alpha0_ = view.alpha0;
  m.gamma_ = view.gamma;
  m.dish_total_ = static_cast<double>(view.total_tables);
  for (int k : view.topic_ids) {
    Topic topic;
    topic.id = k;
    const DirMultStats& stats = view.topic_words.at(k);
    topic.log_word.resize(view.vocab_size);
    for (int v = 0; v < view.vocab_size; ++v) topic.log_word[v] = stats.log_predictive(v);
    topic.time_kind = TimeKind::time_hdp;
    m.topics_.push_back(std::move(topic));
    m.dish_weight_.push_back(static_cast<double>(view.dish_tables.at(k)));
    m.hdp_topic_ids_.push_back(k);
  }
  m.time_ = view.time;
  return m;
}

FrozenModel FrozenModel::from_finite(const FiniteView& view, const PosthocTimeFit* fit) {
  FrozenModel m;
  m.kind_ = finite_kind_name(view.kind);
  m.vocab_size_ = view.vocab_size;
  m.alpha_ = view.alpha;

  // pooled fallback for topics the post-hoc fit skipped
  double pooled_mean = 0.5, pooled_var = 1.0;
  if (fit) {
    double s = 0.0, ss = 0.0;
    for (double t : view.doc_times) {
      s += t;
      ss += t * t;
    }
    const double n = static_cast<double>(view.doc_times.size());
    pooled_mean = s / n;
    pooled_var = std::max(ss / n - pooled_mean * pooled_mean, 1e-6);
  }

  for (int k = 0; k < view.k; ++k) {
    Topic topic;
    topic.id = k;
    const DirMultStats& stats = view.topic_words[k];
    topic.log_word.resize(view.vocab_size);
    for (int v = 0; v < view.vocab_size; ++v) topic.log_word[v] = stats.log_predictive(v);
    if (view.kind == FiniteKind::tot) {
      topic.time_kind = TimeKind::beta;
      topic.beta_params = view.psi[k];
    } else if (view.kind == FiniteKind::tot_multimodal) {
      topic.time_kind = TimeKind::time_hdp;
      m.hdp_topic_ids_.push_back(k);
    } else if (fit) {
      const PosthocTopicFit& tf = fit->topics[k];
      if (fit->mode == PosthocMode::multimodal) {
        topic.time_kind = TimeKind::gmm;
        if (tf.fitted) {
          topic.gmm = tf.gmm;
        } else {
          topic.gmm.weights = {1.0};
          topic.gmm.means = {pooled_mean};
          topic.gmm.vars = {pooled_var};
        }
      } else {
        topic.time_kind = TimeKind::gaussian;
        topic.mean = tf.fitted ? tf.mean : pooled_mean;
        topic.var = tf.fitted ? tf.var : pooled_var;
      }
    }
    m.topics_.push_back(std::move(topic));
  }
  if (view.kind == FiniteKind::tot_multimodal) m.time_ = view.time;
  if (fit) {
    m.kind_ = fit->mode == PosthocMode::multimodal ? "lda_multimodal" : "lda_unimodal";
  }
  return m;
}

double FrozenModel::log_word_pred(int index, int w) const {
  if (index < 0) return -std::log(static_cast<double>(vocab_size_));
  return topics_[index].log_word[w];
}

double FrozenModel::log_time_density(int index, double t) const {
  if (index < 0) {
    return time_ ? time_->log_marginal(kNew, t) : 0.0;
  }
  const Topic& topic = topics_[index];
  switch (topic.time_kind) {
    case TimeKind::none: return 0.0;
    case TimeKind::gaussian: return gauss_log_pdf(t, topic.mean, topic.var);
    case TimeKind::gmm: return topic.gmm.log_pdf(t);
    case TimeKind::beta: return beta_log_pdf(t, topic.beta_params);
    case TimeKind::time_hdp: return time_->log_marginal(hdp_topic_ids_[index], t);
  }
  return 0.0;
}

double FrozenModel::log_dish_prob(int index) const {
  const double denom = dish_total_ + gamma_;
  if (index < 0) return std::log(gamma_ / denom);
  return std::log(dish_weight_[index] / denom);
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

// Per-document Gibbs chain over topic assignments for the parametric models.
class FiniteDocChain {
 public:
  FiniteDocChain(const FrozenModel& model, const std::vector<int>& words, double t)
      : model_(model), words_(words) {
    const int k = model.topic_count();
    counts_.assign(k, 0);
    log_time_.resize(k);
    for (int topic = 0; topic < k; ++topic) {
      log_time_[topic] = model.log_time_density(topic, t);
    }
    z_.assign(words.size(), -1);
  }

  void init(Rng& rng) {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      z_[i] = static_cast<int>(rng.below(model_.topic_count()));
      ++counts_[z_[i]];
    }
  }

  void sweep(Rng& rng) {
    const int k = model_.topic_count();
    std::vector<double> logw(k);
    for (std::size_t i = 0; i < words_.size(); ++i) {
      --counts_[z_[i]];
      for (int topic = 0; topic < k; ++topic) {
        logw[topic] = std::log(counts_[topic] + model_.alpha()) +
                      model_.log_word_pred(topic, words_[i]) + log_time_[topic];
      }
      z_[i] = static_cast<int>(sample_logweights_invcdf(rng, logw));
      ++counts_[z_[i]];
    }
  }

  double cond_log_lik() const {
    double ll = 0.0;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      ll += model_.log_word_pred(z_[i], words_[i]) + log_time_[z_[i]];
    }
    return ll;
  }

  // theta_hat over topics (no extra bucket for parametric models)
  std::vector<double> theta_hat() const {
    const int k = model_.topic_count();
    const double denom = static_cast<double>(words_.size()) + k * model_.alpha();
    std::vector<double> theta(k);
    for (int topic = 0; topic < k; ++topic) theta[topic] = (counts_[topic] + model_.alpha()) / denom;
    return theta;
  }

 private:
  const FrozenModel& model_;
  const std::vector<int>& words_;
  std::vector<int> z_;
  std::vector<int> counts_;
  std::vector<double> log_time_;
};

// Per-document chain for the nonparametric model: word tables grow by the
// document-level CRP; dishes come from the frozen global dish weights.
// Topic index -1 denotes a fresh topic (uniform words, prior time density).
class HdpDocChain {
 public:
  HdpDocChain(const FrozenModel& model, const std::vector<int>& words, double t)
      : model_(model), words_(words) {
    const int k = model.topic_count();
    log_time_.resize(k + 1);
    for (int topic = 0; topic < k; ++topic) {
      log_time_[topic] = model.log_time_density(topic, t);
    }
    log_time_[k] = model.log_time_density(-1, t);
    log_dish_.resize(k + 1);
    for (int topic = 0; topic < k; ++topic) log_dish_[topic] = model.log_dish_prob(topic);
    log_dish_[k] = model.log_dish_prob(-1);
    table_of_.assign(words.size(), -1);
  }

  double lt(int index) const { return log_time_[index < 0 ? log_time_.size() - 1 : index]; }
  double ld(int index) const { return log_dish_[index < 0 ? log_dish_.size() - 1 : index]; }

  void init(Rng& rng) {
    for (std::size_t i = 0; i < words_.size(); ++i) place_token(rng, i);
  }

  void sweep(Rng& rng) {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      remove_token(i);
      place_token(rng, i);
    }
    resample_table_dishes(rng);
  }

  double cond_log_lik() const {
    double ll = 0.0;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      const int dish = tables_[table_of_[i]].dish;
      ll += model_.log_word_pred(dish, words_[i]) + lt(dish);
    }
    return ll;
  }

  // theta over {topics} + {fresh}: table counts smoothed by alpha0 * dish prob
  std::vector<double> theta_hat() const {
    const int k = model_.topic_count();
    std::vector<double> theta(k + 1, 0.0);
    double n = 0.0;
    for (const Table& table : tables_) {
      if (table.count == 0) continue;
      theta[table.dish < 0 ? k : table.dish] += static_cast<double>(table.count);
      n += static_cast<double>(table.count);
    }
    const double denom = n + model_.alpha0();
    for (int topic = 0; topic <= k; ++topic) {
      theta[topic] = (theta[topic] + model_.alpha0() * std::exp(log_dish_[topic])) / denom;
    }
    return theta;
  }

 private:
  struct Table {
    int dish = -1;  // -1 = fresh topic
    int count = 0;
  };

  void remove_token(std::size_t i) {
    Table& table = tables_[table_of_[i]];
    --table.count;
    table_of_[i] = -1;
  }

  void place_token(Rng& rng, std::size_t i) {
    const int w = words_[i];
    std::vector<double> logw;
    std::vector<int> ids;
    for (std::size_t a = 0; a < tables_.size(); ++a) {
      if (tables_[a].count == 0) continue;
      const int dish = tables_[a].dish;
      logw.push_back(std::log(static_cast<double>(tables_[a].count)) +
                     model_.log_word_pred(dish, w) + lt(dish));
      ids.push_back(static_cast<int>(a));
    }
    // NEW table: frozen mixture over dishes plus a fresh one
    std::vector<double> dish_logw = dish_weights(w);
    const double new_weight =
        (ids.empty() ? 0.0 : std::log(model_.alpha0())) + log_sum_exp(dish_logw);
    logw.push_back(new_weight);
    const std::size_t pick = sample_logweights_gumbel(rng, logw);
    if (pick < ids.size()) {
      ++tables_[ids[pick]].count;
      table_of_[i] = ids[pick];
      return;
    }
    const std::size_t dpick = sample_logweights_gumbel(rng, dish_logw);
    const int dish = dpick == dish_logw.size() - 1 ? -1 : static_cast<int>(dpick);
    table_of_[i] = static_cast<int>(alloc_table(dish));
    ++tables_[table_of_[i]].count;
  }

  std::vector<double> dish_weights(int w) const {
    const int k = model_.topic_count();
    std::vector<double> logw(k + 1);
    for (int topic = 0; topic < k; ++topic) {
      logw[topic] = log_dish_[topic] + model_.log_word_pred(topic, w) + lt(topic);
    }
    logw[k] = log_dish_[k] + model_.log_word_pred(-1, w) + lt(-1);
    return logw;
  }

  void resample_table_dishes(Rng& rng) {
    const int k = model_.topic_count();
    for (Table& table : tables_) {
      if (table.count == 0) continue;
      std::vector<double> logw(k + 1);
      for (int topic = 0; topic <= k; ++topic) {
        const int dish = topic == k ? -1 : topic;
        double lp = log_dish_[topic] + table.count * lt(dish);
        for (std::size_t i = 0; i < words_.size(); ++i) {
          if (table_of_[i] >= 0 && &tables_[table_of_[i]] == &table) {
            lp += model_.log_word_pred(dish, words_[i]);
          }
        }
        logw[topic] = lp;
      }
      const std::size_t pick = sample_logweights_gumbel(rng, logw);
      table.dish = pick == static_cast<std::size_t>(k) ? -1 : static_cast<int>(pick);
    }
  }

  std::size_t alloc_table(int dish) {
    for (std::size_t a = 0; a < tables_.size(); ++a) {
      if (tables_[a].count == 0) {
        tables_[a] = Table{dish, 0};
        return a;
      }
    }
    tables_.push_back(Table{dish, 0});
    return tables_.size() - 1;
  }

  const FrozenModel& model_;
  const std::vector<int>& words_;
  std::vector<Table> tables_;
  std::vector<int> table_of_;
  std::vector<double> log_time_;
  std::vector<double> log_dish_;
};

}  // namespace

JointLikResult joint_loglik(const FrozenModel& model, const Corpus& test,
                            const EvalProtocol& protocol) {
  JointLikResult result;
  result.n_samples = protocol.samples;
  double total = 0.0;
  for (std::size_t d = 0; d < test.documents.size(); ++d) {
    const Document& doc = test.documents[d];
    Rng rng(mix_seed(protocol.seed, d));
    std::vector<double> neg_ll(protocol.samples);
    if (model.nonparametric()) {
      HdpDocChain chain(model, doc.tokens, doc.timestamp);
      chain.init(rng);
      for (int b = 0; b < protocol.burn_in; ++b) chain.sweep(rng);
      for (int s = 0; s < protocol.samples; ++s) {
        chain.sweep(rng);
        neg_ll[s] = -chain.cond_log_lik();
      }
    } else {
      FiniteDocChain chain(model, doc.tokens, doc.timestamp);
      chain.init(rng);
      for (int b = 0; b < protocol.burn_in; ++b) chain.sweep(rng);
      for (int s = 0; s < protocol.samples; ++s) {
        chain.sweep(rng);
        neg_ll[s] = -chain.cond_log_lik();
      }
    }
    const double log_phat = std::log(static_cast<double>(protocol.samples)) - log_sum_exp(neg_ll);
    if (!std::isfinite(log_phat)) {
      throw NumericError("joint_loglik: non-finite estimate for document " + doc.source_id);
    }
    total += log_phat;
    result.n_tokens += static_cast<long long>(doc.tokens.size());
  }
  if (result.n_tokens == 0) throw DataError("joint_loglik: empty test set");
  result.nll_per_token = -total / static_cast<double>(result.n_tokens);
  return result;
}

PerplexityResult completion_perplexity(const FrozenModel& model, const Corpus& test,
                                       const EvalProtocol& protocol) {
  PerplexityResult result;
  result.n_samples = protocol.samples;
  double total = 0.0;
  for (std::size_t d = 0; d < test.documents.size(); ++d) {
    const Document& doc = test.documents[d];
    const std::size_t n = doc.tokens.size();
    if (n < 2) {
      ++result.skipped_docs;
      continue;
    }
    Rng rng(mix_seed(protocol.seed, d));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    const std::size_t n_observed = (n + 1) / 2;
    std::vector<int> observed, completed;
    for (std::size_t i = 0; i < n; ++i) {
      (i < n_observed ? observed : completed).push_back(doc.tokens[order[i]]);
    }

    std::vector<double> sample_logs(protocol.samples);
    auto score = [&](const std::vector<double>& theta) {
      // words-only completion product; the fresh-topic bucket, when present,
      // emits uniformly
      double ll = 0.0;
      const int k = model.topic_count();
      for (int w : completed) {
        double p = 0.0;
        for (int topic = 0; topic < k; ++topic) {
          p += theta[topic] * std::exp(model.log_word_pred(topic, w));
        }
        if (theta.size() == static_cast<std::size_t>(k) + 1) {
          p += theta[k] / static_cast<double>(model.vocab_size());
        }
        ll += std::log(p);
      }
      return ll;
    };

    if (model.nonparametric()) {
      HdpDocChain chain(model, observed, doc.timestamp);
      chain.init(rng);
      for (int b = 0; b < protocol.burn_in; ++b) chain.sweep(rng);
      for (int s = 0; s < protocol.samples; ++s) {
        chain.sweep(rng);
        sample_logs[s] = score(chain.theta_hat());
      }
    } else {
      FiniteDocChain chain(model, observed, doc.timestamp);
      chain.init(rng);
      for (int b = 0; b < protocol.burn_in; ++b) chain.sweep(rng);
      for (int s = 0; s < protocol.samples; ++s) {
        chain.sweep(rng);
        sample_logs[s] = score(chain.theta_hat());
      }
    }
    const double doc_log =
        log_sum_exp(sample_logs) - std::log(static_cast<double>(protocol.samples));
    if (!std::isfinite(doc_log)) {
      throw NumericError("completion_perplexity: non-finite estimate for document " +
                         doc.source_id);
    }
    total += doc_log;
    result.n_tokens += static_cast<long long>(completed.size());
  }
  if (result.n_tokens == 0) throw DataError("completion_perplexity: no completable documents");
  result.perplexity = std::exp(-total / static_cast<double>(result.n_tokens));
  return result;
}

std::string reports_to_csv(const std::vector<EvalReport>& reports, bool timings) {
  std::string csv = "model,k,nll_per_token,perplexity,n_test_tokens,n_samples,seed,runtime_s\n";
  char buf[256];
  for (const auto& r : reports) {
    if (!r.error.empty()) {
      std::snprintf(buf, sizeof(buf), "%s,%d,error,error,0,0,%llu,-\n", r.model.c_str(), r.k,
                    static_cast<unsigned long long>(r.seed));
      csv += buf;
      continue;
    }
    std::string runtime = "-";
    if (timings) {
      std::snprintf(buf, sizeof(buf), "%.3f", r.runtime_s);
      runtime = buf;
    }
    std::snprintf(buf, sizeof(buf), "%s,%d,%.10g,%.10g,%lld,%d,%llu,%s\n", r.model.c_str(), r.k,
                  r.nll_per_token, r.perplexity, r.n_test_tokens, r.n_samples,
                  static_cast<unsigned long long>(r.seed), runtime.c_str());
    csv += buf;
  }
  return csv;
}

ExperimentResult run_experiment(const Corpus& corpus, const std::vector<ExperimentModel>& models,
                                const ExperimentConfig& config) {
  ExperimentResult result;
  result.topics = nlohmann::json::object();
  SplitResult split = split_corpus(corpus, config.split_ratio, config.seed);
  EvalProtocol protocol = config.protocol;
  protocol.seed = mix_seed(config.seed, 0xE7A1);
  int nptot_topics = 0;
  std::map<int, ModelSnapshot> lda_cache;  // per K, shared by both LDA baselines

  for (const auto& spec : models) {
    EvalReport report;
    report.model = spec.name;
    report.k = spec.k;
    report.seed = config.seed;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      FrozenModel frozen = [&]() -> FrozenModel {
        if (spec.name == "nptot") {
          NptotConfig cfg = config.nptot;
          cfg.seed = config.seed;
          ModelSnapshot snap = train_nptot(split.train, cfg);
          NptotView view = rebuild_nptot_view(snap);
          nptot_topics = static_cast<int>(view.topic_ids.size());
          report.k = nptot_topics;
          result.topics[spec.name] =
              topic_report(snap, split.train.vocab, config.top_words, config.density_grid, nullptr);
          return FrozenModel::from_nptot(view);
        }
        int k = spec.k;
        if (k <= 0) {
          if (nptot_topics <= 0) {
            throw DataError(spec.name + ": k not given and no nptot run precedes it");
          }
          k = nptot_topics;
          report.k = k;
        }
        FiniteConfig cfg = config.finite;
        cfg.k = k;
        cfg.seed = config.seed;
        if (spec.name == "tot") {
          cfg.kind = FiniteKind::tot;
          if (cfg.converge <= 0.0) cfg.converge = 0.05;
          ModelSnapshot snap = train_finite(split.train, cfg);
          result.topics[spec.name] =
              topic_report(snap, split.train.vocab, config.top_words, config.density_grid, nullptr);
          return FrozenModel::from_finite(rebuild_finite_view(snap), nullptr);
        }
        if (spec.name == "tot-multimodal") {
          cfg.kind = FiniteKind::tot_multimodal;
          if (cfg.converge <= 0.0) cfg.converge = 0.05;
          ModelSnapshot snap = train_finite(split.train, cfg);
          result.topics[spec.name] =
              topic_report(snap, split.train.vocab, config.top_words, config.density_grid, nullptr);
          return FrozenModel::from_finite(rebuild_finite_view(snap), nullptr);
        }
        if (spec.name == "lda-unimodal" || spec.name == "lda-multimodal") {
          cfg.kind = FiniteKind::lda;
          auto it = lda_cache.find(k);
          if (it == lda_cache.end()) {
            it = lda_cache.emplace(k, train_finite(split.train, cfg)).first;
          }
          FiniteView view = rebuild_finite_view(it->second);
          const PosthocMode mode = spec.name == "lda-multimodal" ? PosthocMode::multimodal
                                                                 : PosthocMode::unimodal;
          Rng fit_rng(mix_seed(config.seed, 0xF17));
          PosthocTimeFit fit =
              posthoc_time_fit(view.z, view.doc_times, view.k, mode, config.gmm_c_max, fit_rng);
          result.topics[spec.name] = topic_report(it->second, split.train.vocab, config.top_words,
                                                  config.density_grid, &fit);
          return FrozenModel::from_finite(view, &fit);
        }
        throw DataError("unknown model: " + spec.name);
      }();

      const JointLikResult jl = joint_loglik(frozen, split.test, protocol);
      const PerplexityResult pp = completion_perplexity(frozen, split.test, protocol);
      report.nll_per_token = jl.nll_per_token;
      report.perplexity = pp.perplexity;
      report.n_test_tokens = jl.n_tokens;
      report.n_samples = protocol.samples;
    } catch (const std::exception& e) {
      report.error = e.what();
    }
    report.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.reports.push_back(std::move(report));
  }
  result.csv = reports_to_csv(result.reports, config.timings);
  return result;
}

}  // namespace nptot
