// Apache License, Version 2.0, refer to LICENSE.txt

#include "nptot/nptot.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nptot/errors.hpp"

namespace nptot {

NptotSampler::NptotSampler(const Corpus& corpus, const NptotConfig& config)
    : config_(config),
      vocab_size_(corpus.vocab_size()),
      word_fr_(config.alpha0, config.gamma),
      time_(config.alpha1, config.lambda, config.nig),
      rng_(config.seed) {
  if (corpus.documents.empty()) throw DataError("NptotSampler: empty corpus");
  if (vocab_size_ <= 0) throw DataError("NptotSampler: empty vocabulary");
  words_.reserve(corpus.documents.size());
  times_.reserve(corpus.documents.size());
  for (const auto& d : corpus.documents) {
    if (d.tokens.empty()) throw DataError("NptotSampler: document without tokens");
    words_.push_back(d.tokens);
    // the document timestamp, duplicated per token
    times_.emplace_back(d.tokens.size(), d.timestamp);
    doc_offset_.push_back(n_tokens_);
    n_tokens_ += static_cast<std::int64_t>(d.tokens.size());
  }
  word_table_.resize(words_.size());
  time_table_.resize(words_.size());
  for (std::size_t j = 0; j < words_.size(); ++j) {
    word_table_[j].assign(words_[j].size(), kNew);
    time_table_[j].assign(words_[j].size(), kNew);
  }
}

int NptotSampler::tok_doc(std::int64_t t) const {
  auto it = std::upper_bound(doc_offset_.begin(), doc_offset_.end(), t);
  return static_cast<int>(it - doc_offset_.begin()) - 1;
}

int NptotSampler::topic_of(int j, int i) const {
  const int table = word_table_[j][i];
  return table == kNew ? kNew : word_fr_.table_dish(table);
}

int NptotSampler::time_component_of(int j, int i) const {
  const int table = time_table_[j][i];
  return table == kNew ? kNew : time_.franchise().table_dish(table);
}

std::vector<int> NptotSampler::topic_ids() const { return word_fr_.dish_ids(); }

double NptotSampler::max_topic_share() const {
  long long best = 0;
  for (const auto& [k, stats] : topic_words_) best = std::max(best, stats.total());
  return n_tokens_ == 0 ? 0.0 : static_cast<double>(best) / static_cast<double>(n_tokens_);
}

void NptotSampler::drop_topic_if_dead(int topic) {
  if (word_fr_.has_dish(topic)) return;
  auto it = topic_words_.find(topic);
  if (it == topic_words_.end()) return;
  if (it->second.total() != 0) {
    throw NumericError("NptotSampler: dead topic still owns words");
  }
  if (time_.franchise().restaurant_customers(topic) != 0) {
    throw NumericError("NptotSampler: dead topic still owns time tables");
  }
  topic_words_.erase(it);
}

void NptotSampler::remove_token(int j, int i) {
  const std::int64_t token = tid(j, i);
  if (word_table_[j][i] == kNew) throw NumericError("remove_token: token not assigned");
  time_.remove(token, times_[j][i]);
  time_table_[j][i] = kNew;
  UnseatResult res = word_fr_.unseat(token);
  topic_words_.at(res.dish).remove(words_[j][i]);
  word_table_[j][i] = kNew;
  if (res.removed_dish) drop_topic_if_dead(res.dish);
}

NptotSampler::DishWeights NptotSampler::new_table_dish_log_weights(int j, int i) const {
  const int w = words_[j][i];
  const double t = times_[j][i];
  const double log_global = time_.log_global_mix(t);
  DishWeights dw;
  const auto prior = word_fr_.dish_prior();
  dw.dishes.reserve(prior.dishes.size() + 1);
  dw.logw.reserve(prior.dishes.size() + 1);
  for (const auto& [dish, m] : prior.dishes) {
    dw.dishes.push_back(dish);
    dw.logw.push_back(std::log(m) + topic_words_.at(dish).log_predictive(w) +
                      time_.log_marginal(dish, t, log_global));
  }
  if (prior.new_weight > 0.0 || prior.dishes.empty()) {
    dw.dishes.push_back(kNew);
    const double lw = prior.dishes.empty() ? 0.0 : std::log(prior.new_weight);
    dw.logw.push_back(lw - std::log(static_cast<double>(vocab_size_)) + log_global);
  }
  return dw;
}

NptotSampler::TableWeights NptotSampler::word_table_log_weights(int j, int i) const {
  const int w = words_[j][i];
  const double t = times_[j][i];
  const double log_global = time_.log_global_mix(t);
  TableWeights tw;
  const auto& tables = word_fr_.tables_of(j);
  tw.tables.reserve(tables.size());
  tw.logw.reserve(tables.size() + 1);
  std::map<int, double> tm_cache;
  auto tm = [&](int topic) {
    auto it = tm_cache.find(topic);
    if (it != tm_cache.end()) return it->second;
    const double v = time_.log_marginal(topic, t, log_global);
    tm_cache.emplace(topic, v);
    return v;
  };
  for (int table : tables) {
    const int dish = word_fr_.table_dish(table);
    tw.tables.push_back(table);
    tw.logw.push_back(std::log(static_cast<double>(word_fr_.table_customers(table))) +
                      topic_words_.at(dish).log_predictive(w) + tm(dish));
  }
  // NEW-table mass: mixture over dishes plus a fresh dish.
  DishWeights dw = new_table_dish_log_weights(j, i);
  double log_mix = log_sum_exp(dw.logw);
  const double dish_norm = word_fr_.total_tables() + config_.gamma;
  if (dish_norm > 0.0) log_mix -= std::log(dish_norm);
  const double alpha0 = config_.alpha0;
  if (alpha0 > 0.0 || tables.empty()) {
    tw.logw.push_back((tables.empty() ? 0.0 : std::log(alpha0)) + log_mix);
  }
  return tw;
}

void NptotSampler::sample_word_table(int j, int i) {
  const std::int64_t token = tid(j, i);
  TableWeights tw = word_table_log_weights(j, i);
  const std::size_t pick = sample_logweights_gumbel(rng_, tw.logw);
  int dish;
  if (pick < tw.tables.size()) {
    const int table = tw.tables[pick];
    word_fr_.seat(token, j, table);
    dish = word_fr_.table_dish(table);
    word_table_[j][i] = table;
  } else {
    DishWeights dw = new_table_dish_log_weights(j, i);
    const std::size_t dpick = sample_logweights_gumbel(rng_, dw.logw);
    SeatResult res = word_fr_.seat(token, j, kNew, dw.dishes[dpick]);
    dish = res.dish;
    word_table_[j][i] = res.table;
    if (res.created_dish) topic_words_.emplace(dish, DirMultStats(vocab_size_, config_.beta));
  }
  topic_words_.at(dish).add(words_[j][i]);
}

void NptotSampler::sample_time_table(int j, int i) {
  const std::int64_t token = tid(j, i);
  const int topic = topic_of(j, i);
  if (topic == kNew) throw NumericError("sample_time_table: token has no topic");
  time_table_[j][i] = time_.sample_table(rng_, token, topic, times_[j][i]);
}

double NptotSampler::log_joint_word_pred(const DirMultStats* stats,
                                         const std::vector<int>& words) const {
  const double vbeta = vocab_size_ * config_.beta;
  const double base_total = stats ? static_cast<double>(stats->total()) : 0.0;
  std::map<int, int> seen;
  double lp = 0.0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const int w = words[i];
    const double f = stats ? static_cast<double>(stats->count(w)) : 0.0;
    lp += std::log((config_.beta + f + seen[w]) / (vbeta + base_total + static_cast<double>(i)));
    ++seen[w];
  }
  return lp;
}

NptotSampler::DishWeights NptotSampler::word_dish_log_weights(
    const std::vector<std::pair<std::int64_t, double>>& toks, const std::vector<int>& words,
    int s_passes) {
  DishWeights dw;
  const auto prior = word_fr_.dish_prior();
  for (const auto& [dish, m] : prior.dishes) {
    dw.dishes.push_back(dish);
    dw.logw.push_back(std::log(m) + log_joint_word_pred(&topic_words_.at(dish), words) +
                      time_.log_phat(rng_, dish, toks, s_passes));
  }
  if (prior.new_weight > 0.0 || prior.dishes.empty()) {
    dw.dishes.push_back(kNew);
    const double lw = prior.dishes.empty() ? 0.0 : std::log(prior.new_weight);
    dw.logw.push_back(lw + log_joint_word_pred(nullptr, words) +
                      time_.log_phat(rng_, kNew, toks, s_passes));
  }
  return dw;
}

bool NptotSampler::resample_word_dish(int j, int table) {
  const std::vector<std::int64_t> members = word_fr_.table_members(table);
  std::vector<std::pair<std::int64_t, double>> toks;
  std::vector<int> words;
  toks.reserve(members.size());
  words.reserve(members.size());
  for (std::int64_t token : members) {
    const int d = tok_doc(token);
    const int i = static_cast<int>(token - doc_offset_[d]);
    toks.emplace_back(token, times_[d][i]);
    words.push_back(words_[d][i]);
    time_.remove(token, times_[d][i]);
    time_table_[d][i] = kNew;
  }
  const int old_dish = word_fr_.detach_table_dish(table);
  DirMultStats& old_stats = topic_words_.at(old_dish);
  for (int w : words) old_stats.remove(w);
  drop_topic_if_dead(old_dish);

  DishWeights dw = word_dish_log_weights(toks, words, config_.s_passes);
  const std::size_t pick = sample_logweights_gumbel(rng_, dw.logw);
  const int dish = word_fr_.attach_table_dish(table, dw.dishes[pick]);
  if (dw.dishes[pick] == kNew) topic_words_.emplace(dish, DirMultStats(vocab_size_, config_.beta));
  DirMultStats& stats = topic_words_.at(dish);
  for (int w : words) stats.add(w);
  // fresh time seats under the chosen dish
  for (std::int64_t token : members) {
    const int d = tok_doc(token);
    const int i = static_cast<int>(token - doc_offset_[d]);
    time_table_[d][i] = time_.sample_table(rng_, token, dish, times_[d][i]);
  }
  return dish != old_dish;
}

void NptotSampler::resample_all_word_dishes() {
  for (int j = 0; j < doc_count(); ++j) {
    const std::vector<int> tables = word_fr_.tables_of(j);
    for (int table : tables) {
      if (word_fr_.has_table(table)) resample_word_dish(j, table);
    }
  }
}

void NptotSampler::resample_all_time_dishes() {
  for (int topic : time_.franchise().restaurant_ids()) {
    const std::vector<int> tables = time_.franchise().tables_of(topic);
    for (int table : tables) {
      if (!time_.franchise().has_table(table)) continue;
      std::vector<double> ts;
      for (std::int64_t token : time_.franchise().table_members(table)) {
        const int d = tok_doc(token);
        ts.push_back(times_[d][token - doc_offset_[d]]);
      }
      time_.resample_table_dish(rng_, table, ts);
    }
  }
}

void NptotSampler::init_from_prior() {
  for (int j = 0; j < doc_count(); ++j) {
    for (int i = 0; i < doc_size(j); ++i) {
      sample_word_table(j, i);
      sample_time_table(j, i);
    }
  }
}

void NptotSampler::init_single_topic() {
  int dish = kNew;
  for (int j = 0; j < doc_count(); ++j) {
    int table = kNew;
    for (int i = 0; i < doc_size(j); ++i) {
      SeatResult res = word_fr_.seat(tid(j, i), j, table, table == kNew ? dish : kNew);
      if (res.created_dish) topic_words_.emplace(res.dish, DirMultStats(vocab_size_, config_.beta));
      dish = res.dish;
      table = res.table;
      topic_words_.at(dish).add(words_[j][i]);
      word_table_[j][i] = table;
      sample_time_table(j, i);
    }
  }
}

double NptotSampler::sweep() {
  std::vector<std::int64_t> order(n_tokens_);
  std::iota(order.begin(), order.end(), 0);
  if (!config_.sequential_scan) rng_.shuffle(order);

  std::vector<int> before(n_tokens_);
  for (std::int64_t t = 0; t < n_tokens_; ++t) {
    const int j = tok_doc(t);
    before[t] = topic_of(j, static_cast<int>(t - doc_offset_[j]));
  }

  for (std::int64_t t : order) {
    const int j = tok_doc(t);
    const int i = static_cast<int>(t - doc_offset_[j]);
    remove_token(j, i);
    sample_word_table(j, i);
    sample_time_table(j, i);
  }
  resample_all_word_dishes();
  resample_all_time_dishes();

  std::int64_t changed = 0;
  for (std::int64_t t = 0; t < n_tokens_; ++t) {
    const int j = tok_doc(t);
    if (topic_of(j, static_cast<int>(t - doc_offset_[j])) != before[t]) ++changed;
  }
  return static_cast<double>(changed) / static_cast<double>(n_tokens_);
}

TrainDiagnostics NptotSampler::run(int max_sweeps, double converge) {
  TrainDiagnostics diag;
  for (int s = 0; s < max_sweeps; ++s) {
    const double changed = sweep();
    diag.changed_fraction.push_back(changed);
    if (config_.audit_every_sweep) audit();
    if (changed < converge) {
      diag.converged = true;
      break;
    }
  }
  return diag;
}

void NptotSampler::audit() const {
  word_fr_.audit();
  time_.audit();
  if (word_fr_.total_customers() != n_tokens_) throw NumericError("audit: word seats != tokens");
  if (time_.franchise().total_customers() != n_tokens_) {
    throw NumericError("audit: time seats != tokens");
  }

  std::map<int, std::vector<int>> topic_counts;  // rebuilt f(v,k)
  std::map<int, std::pair<long long, double>> comp_stats;
  for (int j = 0; j < doc_count(); ++j) {
    for (int i = 0; i < doc_size(j); ++i) {
      const int wt = word_table_[j][i];
      const int tt = time_table_[j][i];
      if (wt == kNew || tt == kNew) throw NumericError("audit: unassigned token");
      if (word_fr_.customer_table(tid(j, i)) != wt) throw NumericError("audit: word seat drift");
      if (time_.franchise().customer_table(tid(j, i)) != tt) {
        throw NumericError("audit: time seat drift");
      }
      const int topic = word_fr_.table_dish(wt);
      if (time_.franchise().table_restaurant(tt) != topic) {
        throw NumericError("audit: time table under wrong topic");
      }
      auto& counts = topic_counts[topic];
      counts.resize(vocab_size_, 0);
      ++counts[words_[j][i]];
      auto& cs = comp_stats[time_.franchise().table_dish(tt)];
      cs.first += 1;
      cs.second += times_[j][i];
    }
  }
  if (topic_counts.size() != topic_words_.size()) throw NumericError("audit: topic set drift");
  long long total = 0;
  for (const auto& [k, counts] : topic_counts) {
    auto it = topic_words_.find(k);
    if (it == topic_words_.end()) throw NumericError("audit: missing topic stats");
    for (int v = 0; v < vocab_size_; ++v) {
      if (counts[v] != it->second.count(v)) throw NumericError("audit: f(v,k) drift");
    }
    total += it->second.total();
  }
  if (total != n_tokens_) throw NumericError("audit: topic word totals != tokens");
  if (comp_stats.size() != time_.components().size()) throw NumericError("audit: component set drift");
  long long comp_total = 0;
  for (const auto& [c, cs] : comp_stats) {
    const NigStats& stats = time_.components().at(c);
    if (stats.n() != cs.first) throw NumericError("audit: component count drift");
    if (std::abs(stats.sum() - cs.second) > 1e-9 * std::max(1.0, std::abs(cs.second))) {
      throw NumericError("audit: component sum drift");
    }
    comp_total += stats.n();
  }
  if (comp_total != n_tokens_) throw NumericError("audit: component totals != tokens");
}

void NptotSampler::resample_observations() {
  // Words: Polya urn per topic over its tokens in id order.
  for (int topic : word_fr_.dish_ids()) {
    std::vector<std::int64_t> toks;
    for (int j = 0; j < doc_count(); ++j) {
      for (int i = 0; i < doc_size(j); ++i) {
        if (topic_of(j, i) == topic) toks.push_back(tid(j, i));
      }
    }
    std::vector<int> counts(vocab_size_, 0);
    std::vector<double> logw(vocab_size_);
    int n = 0;
    for (std::int64_t token : toks) {
      for (int v = 0; v < vocab_size_; ++v) {
        logw[v] = std::log(config_.beta + counts[v]);
      }
      const int w = static_cast<int>(sample_logweights_invcdf(rng_, logw));
      ++counts[w];
      ++n;
      const int d = tok_doc(token);
      words_[d][token - doc_offset_[d]] = w;
    }
    DirMultStats rebuilt(vocab_size_, config_.beta);
    for (int v = 0; v < vocab_size_; ++v) {
      for (int c = 0; c < counts[v]; ++c) rebuilt.add(v);
    }
    topic_words_.at(topic) = rebuilt;
  }
  // Timestamps: sequential predictive urn per component.
  std::map<int, std::vector<std::int64_t>> comp_tokens;
  for (int topic : time_.franchise().restaurant_ids()) {
    for (int table : time_.franchise().tables_of(topic)) {
      const int comp = time_.franchise().table_dish(table);
      for (std::int64_t token : time_.franchise().table_members(table)) {
        comp_tokens[comp].push_back(token);
      }
    }
  }
  std::map<int, NigStats> rebuilt_comps;
  for (auto& [comp, toks] : comp_tokens) {
    std::sort(toks.begin(), toks.end());
    NigStats stats(config_.nig);
    for (std::int64_t token : toks) {
      const double t = stats.sample_predictive(rng_);
      stats.add(t);
      const int d = tok_doc(token);
      times_[d][token - doc_offset_[d]] = t;
    }
    rebuilt_comps.emplace(comp, stats);
  }
  time_.set_component_stats(rebuilt_comps);
}

NptotSampler::State NptotSampler::state() const {
  return State{word_fr_.state(), time_.state(), word_table_, time_table_};
}

void NptotSampler::restore(const State& s) {
  word_fr_ = Franchise::from_state(s.word_franchise);
  word_table_ = s.word_table;
  time_table_ = s.time_table;
  std::map<std::int64_t, double> token_times;
  for (int j = 0; j < doc_count(); ++j) {
    for (int i = 0; i < doc_size(j); ++i) token_times[tid(j, i)] = times_[j][i];
  }
  time_ = TimeHdp::from_state(s.time, token_times);
  topic_words_.clear();
  for (int j = 0; j < doc_count(); ++j) {
    for (int i = 0; i < doc_size(j); ++i) {
      const int topic = topic_of(j, i);
      auto [it, fresh] = topic_words_.try_emplace(topic, DirMultStats(vocab_size_, config_.beta));
      it->second.add(words_[j][i]);
    }
  }
  audit();
}

}  // namespace nptot
