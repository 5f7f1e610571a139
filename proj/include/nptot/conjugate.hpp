// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <span>
#include <vector>

#include "nptot/rng.hpp"

namespace nptot {

// Collapsed symmetric Dirichlet-multinomial over a fixed vocabulary.
// Predictive of word w given counts f: (beta + f(w)) / (V*beta + sum_v f(v)).
class DirMultStats {
 public:
  DirMultStats() = default;
  DirMultStats(int vocab_size, double beta);

  void add(int w);
  void remove(int w);

  double predictive(int w) const;
  double log_predictive(int w) const;

  int count(int w) const { return counts_[w]; }
  long long total() const { return total_; }
  int vocab_size() const { return static_cast<int>(counts_.size()); }
  double beta() const { return beta_; }
  const std::vector<int>& counts() const { return counts_; }

 private:
  std::vector<int> counts_;
  long long total_ = 0;
  double beta_ = 0.1;
};

struct NigPrior {
  double m0 = 0.5;     // location
  double kappa0 = 0.1; // pseudo-count
  double a0 = 1.0;     // shape
  double b0 = 0.1;     // rate
};

// Sufficient statistics of a normal-inverse-gamma component over time.
// The posterior predictive is a Student-t; its scale is floored at
// kVarianceFloor to keep densities finite for near-degenerate components.
class NigStats {
 public:
  static constexpr double kVarianceFloor = 1e-6;

  NigStats() : NigStats(NigPrior{}) {}
  explicit NigStats(const NigPrior& prior);

  void add(double t);
  void remove(double t);

  double log_predictive(double t) const;
  double predictive(double t) const;

  // Draws from the posterior predictive Student-t (same floored scale the
  // density uses).
  double sample_predictive(Rng& rng) const;

  long long n() const { return n_; }
  double sum() const { return sum_; }
  double sumsq() const { return sumsq_; }
  const NigPrior& prior() const { return prior_; }

  // Posterior parameters (prior values when n == 0).
  double kappa_n() const { return kappa_n_; }
  double m_n() const { return m_n_; }
  double a_n() const { return a_n_; }
  double b_n() const { return b_n_; }

 private:
  void refresh();

  NigPrior prior_;
  long long n_ = 0;
  double sum_ = 0.0;
  double sumsq_ = 0.0;

  // cached posterior + Student-t constants
  double kappa_n_ = 0, m_n_ = 0, a_n_ = 0, b_n_ = 0;
  double t_log_norm_ = 0, t_half_nu_p1_ = 0, t_inv_nu_s2_ = 0, t_scale2_ = 0;
};

struct BetaParams {
  double psi1 = 1.0;
  double psi2 = 1.0;
};

struct BetaMomentFit {
  BetaParams params;
  bool degenerate = false;  // variance floor kicked in
};

// Method of moments: q = m(1-m)/s^2 - 1, psi = (m*q, (1-m)*q), clamped >= 1e-3.
BetaMomentFit beta_fit_from_moments(double mean, double variance);
BetaMomentFit beta_fit_moments(std::span<const double> times);

double beta_log_pdf(double t, const BetaParams& p);

double gauss_log_pdf(double t, double mean, double var);

struct GaussMixture {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> vars;
  double train_log_lik = 0.0;
  std::vector<double> log_lik_trace;  // per EM iteration of the selected fit

  int components() const { return static_cast<int>(weights.size()); }
  double log_pdf(double t) const;
};

// EM fit with k-means++ init, 10 restarts, up to 200 iterations per run,
// component count chosen in 1..c_max by BIC. c_max is reduced to the point
// count when there are fewer points than components.
GaussMixture gmm_fit(std::span<const double> times, int c_max, Rng& rng);

}  // namespace nptot
