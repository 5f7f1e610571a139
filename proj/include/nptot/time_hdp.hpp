// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "nptot/conjugate.hpp"
#include "nptot/crf.hpp"
#include "nptot/rng.hpp"

namespace nptot {

// The time half of the model: a franchise whose restaurants are topics and
// whose dishes are Gaussian time components with collapsed NIG parameters,
// globally shared across topics. Token timestamps are the customers.
class TimeHdp {
 public:
  TimeHdp(double alpha1, double lambda, const NigPrior& prior);

  // log p(t | topic, rest): mixture over the topic's time tables plus the
  // new-table term (global components plus a fresh one). topic == kNew uses
  // the new-table term alone.
  double log_marginal(int topic, double t) const;

  // Same, reusing a precomputed log_global_mix(t) (it does not depend on the
  // topic, so callers scoring many topics at one timestamp share it).
  double log_marginal(int topic, double t, double log_global) const;

  // log of sum_c r_c/(r+lambda) g_c(t) + lambda/(r+lambda) g_new(t).
  double log_global_mix(double t) const;

  // Unnormalized seating weights for a token under a fixed topic; the last
  // entry is the new-table option (absent when alpha1 == 0 and tables exist).
  struct TableWeights {
    std::vector<int> tables;
    std::vector<double> logw;  // one per table, then NEW
  };
  TableWeights table_log_weights(int topic, double t) const;

  // Component decomposition of the new-table option; kNew last (absent when
  // lambda == 0 and components exist).
  struct CompWeights {
    std::vector<int> comps;
    std::vector<double> logw;
  };
  CompWeights new_table_comp_log_weights(double t) const;

  // Deterministic seating primitives.
  int seat_at_table(std::int64_t token, int table, double t);           // -> component
  int seat_new_table(std::int64_t token, int topic, int comp, double t);  // -> table id

  // Gibbs draw of a time table for a token under a fixed topic; seats the
  // token and updates component stats. Returns the table id.
  int sample_table(Rng& rng, std::int64_t token, int topic, double t);

  // Removes a token's seat and its timestamp from the component stats.
  void remove(std::int64_t token, double t);

  // Component reassignment of a whole time table (the Gibbs step over time
  // dishes), split into inspectable pieces.
  int detach_table_component(int table, std::span<const double> times);  // -> old component
  CompWeights table_dish_log_weights(std::span<const double> times) const;  // detached state
  void attach_table_component(int table, int comp, std::span<const double> times);
  bool resample_table_dish(Rng& rng, int table, std::span<const double> times);

  // Sequential-imputation estimate of log p(times | topic): passes of
  // assign-one-by-one, averaging the products of predictive densities.
  // Exact (single marginal evaluation) for one token.
  double log_phat(Rng& rng, int topic, std::span<const std::pair<std::int64_t, double>> tokens,
                  int passes);

  const Franchise& franchise() const { return franchise_; }
  const std::map<int, NigStats>& components() const { return components_; }
  NigStats fresh_component() const { return NigStats(prior_); }
  const NigPrior& prior() const { return prior_; }
  double alpha1() const { return franchise_.restaurant_concentration(); }
  double lambda() const { return franchise_.top_concentration(); }

  int component_count() const { return static_cast<int>(components_.size()); }
  std::int64_t total_points() const;

  // Replaces every component's sufficient statistics; keys must match the
  // franchise's dish set. Used when observations are resampled in place.
  void set_component_stats(const std::map<int, NigStats>& stats);

  void audit() const;

  // Serialization round-trip.
  struct State {
    double alpha1, lambda;
    NigPrior prior;
    Franchise::State franchise;
    // component sufficient stats are rebuilt from member timestamps
  };
  State state() const;
  static TimeHdp from_state(const State& s,
                            const std::map<std::int64_t, double>& token_times);

 private:
  NigPrior prior_;
  Franchise franchise_;  // restaurants = topics, dishes = components
  std::map<int, NigStats> components_;
};

}  // namespace nptot
