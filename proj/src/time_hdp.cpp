// Apache License, Version 2.0, refer to LICENSE.txt

#include "nptot/time_hdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "nptot/errors.hpp"

namespace nptot {

TimeHdp::TimeHdp(double alpha1, double lambda, const NigPrior& prior)
    : prior_(prior), franchise_(alpha1, lambda) {}

double TimeHdp::log_global_mix(double t) const {
  const double lambda = franchise_.top_concentration();
  const double denom = franchise_.total_tables() + lambda;
  std::vector<double> terms;
  terms.reserve(components_.size() + 1);
  for (const auto& [c, stats] : components_) {
    const int r_c = franchise_.dish_table_count(c);
    terms.push_back(std::log(r_c / denom) + stats.log_predictive(t));
  }
  if (lambda > 0.0) {
    terms.push_back(std::log(lambda / denom) + NigStats(prior_).log_predictive(t));
  }
  if (terms.empty()) {
    // lambda == 0 with no components: treat the forced first component as new
    return NigStats(prior_).log_predictive(t);
  }
  return log_sum_exp(terms);
}

double TimeHdp::log_marginal(int topic, double t) const {
  return log_marginal(topic, t, log_global_mix(t));
}

double TimeHdp::log_marginal(int topic, double t, double log_global) const {
  const double alpha1 = franchise_.restaurant_concentration();
  const int q_total = topic == kNew ? 0 : franchise_.restaurant_customers(topic);
  if (q_total == 0) return log_global;
  const double denom = q_total + alpha1;
  std::vector<double> terms;
  const auto& tables = franchise_.tables_of(topic);
  terms.reserve(tables.size() + 1);
  for (int table : tables) {
    const int q = franchise_.table_customers(table);
    const int comp = franchise_.table_dish(table);
    terms.push_back(std::log(q / denom) + components_.at(comp).log_predictive(t));
  }
  if (alpha1 > 0.0) terms.push_back(std::log(alpha1 / denom) + log_global);
  return log_sum_exp(terms);
}

TimeHdp::TableWeights TimeHdp::table_log_weights(int topic, double t) const {
  TableWeights tw;
  const auto& tables = franchise_.tables_of(topic);
  tw.tables.reserve(tables.size());
  tw.logw.reserve(tables.size() + 1);
  for (int table : tables) {
    const int q = franchise_.table_customers(table);
    const int comp = franchise_.table_dish(table);
    tw.tables.push_back(table);
    tw.logw.push_back(std::log(static_cast<double>(q)) + components_.at(comp).log_predictive(t));
  }
  const double alpha1 = franchise_.restaurant_concentration();
  if (alpha1 > 0.0 || tables.empty()) {
    tw.logw.push_back((tables.empty() ? 0.0 : std::log(alpha1)) + log_global_mix(t));
  }
  return tw;
}

TimeHdp::CompWeights TimeHdp::new_table_comp_log_weights(double t) const {
  CompWeights cw;
  cw.comps.reserve(components_.size() + 1);
  cw.logw.reserve(components_.size() + 1);
  for (const auto& [c, stats] : components_) {
    cw.comps.push_back(c);
    cw.logw.push_back(std::log(static_cast<double>(franchise_.dish_table_count(c))) +
                      stats.log_predictive(t));
  }
  const double lambda = franchise_.top_concentration();
  if (lambda > 0.0 || cw.comps.empty()) {
    cw.comps.push_back(kNew);
    cw.logw.push_back((components_.empty() ? 0.0 : std::log(lambda)) +
                      NigStats(prior_).log_predictive(t));
  }
  return cw;
}

int TimeHdp::seat_at_table(std::int64_t token, int table, double t) {
  const int topic = franchise_.table_restaurant(table);
  franchise_.seat(token, topic, table);
  const int comp = franchise_.table_dish(table);
  components_.at(comp).add(t);
  return comp;
}

int TimeHdp::seat_new_table(std::int64_t token, int topic, int comp, double t) {
  SeatResult res = franchise_.seat(token, topic, kNew, comp);
  if (res.created_dish) components_.emplace(res.dish, NigStats(prior_));
  components_.at(res.dish).add(t);
  return res.table;
}

int TimeHdp::sample_table(Rng& rng, std::int64_t token, int topic, double t) {
  TableWeights tw = table_log_weights(topic, t);
  const std::size_t pick = sample_logweights_gumbel(rng, tw.logw);
  if (pick < tw.tables.size()) {
    seat_at_table(token, tw.tables[pick], t);
    return tw.tables[pick];
  }
  CompWeights cw = new_table_comp_log_weights(t);
  const std::size_t cpick = sample_logweights_gumbel(rng, cw.logw);
  return seat_new_table(token, topic, cw.comps[cpick], t);
}

void TimeHdp::remove(std::int64_t token, double t) {
  UnseatResult res = franchise_.unseat(token);
  components_.at(res.dish).remove(t);
  if (res.removed_dish) {
    if (components_.at(res.dish).n() != 0) {
      throw NumericError("TimeHdp: removed component still holds points");
    }
    components_.erase(res.dish);
  }
}

int TimeHdp::detach_table_component(int table, std::span<const double> times) {
  const int old_comp = franchise_.detach_table_dish(table);
  NigStats& old_stats = components_.at(old_comp);
  for (double t : times) old_stats.remove(t);
  if (!franchise_.has_dish(old_comp)) {
    if (old_stats.n() != 0) throw NumericError("TimeHdp: orphaned component retains points");
    components_.erase(old_comp);
  }
  return old_comp;
}

TimeHdp::CompWeights TimeHdp::table_dish_log_weights(std::span<const double> times) const {
  // joint predictive of the table's timestamps under each candidate
  CompWeights cw;
  for (const auto& [c, stats] : components_) {
    NigStats scratch = stats;
    double lp = std::log(static_cast<double>(franchise_.dish_table_count(c)));
    for (double t : times) {
      lp += scratch.log_predictive(t);
      scratch.add(t);
    }
    cw.comps.push_back(c);
    cw.logw.push_back(lp);
  }
  const double lambda = franchise_.top_concentration();
  if (lambda > 0.0 || cw.comps.empty()) {
    NigStats scratch(prior_);
    double lp = cw.comps.empty() ? 0.0 : std::log(lambda);
    for (double t : times) {
      lp += scratch.log_predictive(t);
      scratch.add(t);
    }
    cw.comps.push_back(kNew);
    cw.logw.push_back(lp);
  }
  return cw;
}

void TimeHdp::attach_table_component(int table, int comp, std::span<const double> times) {
  const int chosen = franchise_.attach_table_dish(table, comp);
  auto [it, created] = components_.try_emplace(chosen, NigStats(prior_));
  for (double t : times) it->second.add(t);
}

bool TimeHdp::resample_table_dish(Rng& rng, int table, std::span<const double> times) {
  const int old_comp = detach_table_component(table, times);
  CompWeights cw = table_dish_log_weights(times);
  const std::size_t pick = sample_logweights_gumbel(rng, cw.logw);
  attach_table_component(table, cw.comps[pick], times);
  const int chosen = franchise_.table_dish(table);
  return chosen != old_comp;
}

double TimeHdp::log_phat(Rng& rng, int topic,
                         std::span<const std::pair<std::int64_t, double>> tokens, int passes) {
  if (tokens.empty()) return 0.0;
  if (tokens.size() == 1) return log_marginal(topic, tokens.front().second);
  if (passes < 1) throw DataError("log_phat: passes must be >= 1");

  // Scratch restaurant for a brand-new topic candidate; every pass is rolled
  // back below, so it leaves no trace.
  const int rest = topic == kNew ? std::numeric_limits<int>::min() : topic;

  std::vector<double> pass_logs(passes);
  for (int s = 0; s < passes; ++s) {
    // Bit-exact rollback: snapshot each pre-existing component once, before
    // its first mutation; components minted by the pass die with their table.
    std::map<int, NigStats> saved;
    std::set<int> minted;
    std::vector<std::int64_t> seated;
    double lp = 0.0;
    auto snapshot = [&](int comp) {
      if (!minted.count(comp) && !saved.count(comp)) saved.emplace(comp, components_.at(comp));
    };
    for (const auto& [token, t] : tokens) {
      lp += log_marginal(rest, t);
      TableWeights tw = table_log_weights(rest, t);
      const std::size_t pick = sample_logweights_gumbel(rng, tw.logw);
      if (pick < tw.tables.size()) {
        snapshot(franchise_.table_dish(tw.tables[pick]));
        seat_at_table(token, tw.tables[pick], t);
      } else {
        CompWeights cw = new_table_comp_log_weights(t);
        const std::size_t cpick = sample_logweights_gumbel(rng, cw.logw);
        const int comp = cw.comps[cpick];
        if (comp != kNew) snapshot(comp);
        const int table = seat_new_table(token, rest, comp, t);
        if (comp == kNew) minted.insert(franchise_.table_dish(table));
      }
      seated.push_back(token);
    }
    pass_logs[s] = lp;
    for (std::size_t r = seated.size(); r-- > 0;) {
      const std::int64_t token = seated[r];
      const int table = franchise_.customer_table(token);
      const int comp = franchise_.table_dish(table);
      UnseatResult res = franchise_.unseat(token);
      components_.at(comp).remove(tokens[r].second);
      if (res.removed_dish) {
        if (!minted.count(comp)) {
          throw NumericError("log_phat rollback removed a pre-existing component");
        }
        components_.erase(comp);
      }
    }
    for (const auto& [c, stats] : saved) components_.at(c) = stats;
  }
  return log_sum_exp(pass_logs) - std::log(static_cast<double>(passes));
}

std::int64_t TimeHdp::total_points() const {
  std::int64_t n = 0;
  for (const auto& [c, stats] : components_) n += stats.n();
  return n;
}

void TimeHdp::set_component_stats(const std::map<int, NigStats>& stats) {
  for (const auto& [c, s] : stats) {
    if (!franchise_.has_dish(c)) throw NumericError("set_component_stats: unknown component");
  }
  if (stats.size() != components_.size()) {
    throw NumericError("set_component_stats: component set mismatch");
  }
  components_ = stats;
}

void TimeHdp::audit() const {
  franchise_.audit();
  std::vector<int> dishes = franchise_.dish_ids();
  if (dishes.size() != components_.size()) {
    throw NumericError("TimeHdp audit: component map out of sync");
  }
  for (int d : dishes) {
    if (!components_.count(d)) throw NumericError("TimeHdp audit: dish without component stats");
  }
  if (total_points() != franchise_.total_customers()) {
    throw NumericError("TimeHdp audit: component point counts drift");
  }
}

TimeHdp::State TimeHdp::state() const {
  return State{alpha1(), lambda(), prior_, franchise_.state()};
}

TimeHdp TimeHdp::from_state(const State& s, const std::map<std::int64_t, double>& token_times) {
  TimeHdp hdp(s.alpha1, s.lambda, s.prior);
  hdp.franchise_ = Franchise::from_state(s.franchise);
  for (const auto& ts : s.franchise.tables) {
    auto [it, fresh] = hdp.components_.try_emplace(ts.dish, NigStats(s.prior));
    for (std::int64_t token : ts.members) {
      it->second.add(token_times.at(token));
    }
  }
  hdp.audit();
  return hdp;
}

}  // namespace nptot
