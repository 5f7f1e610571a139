// Apache License, Version 2.0, refer to LICENSE.txt

#include "nptot/conjugate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nptot/errors.hpp"

namespace nptot {

DirMultStats::DirMultStats(int vocab_size, double beta) : counts_(vocab_size, 0), beta_(beta) {
  if (vocab_size <= 0) throw DataError("DirMultStats: vocab size must be positive");
  if (beta <= 0.0) throw DataError("DirMultStats: beta must be positive");
}

void DirMultStats::add(int w) {
  ++counts_.at(w);
  ++total_;
}

void DirMultStats::remove(int w) {
  if (counts_.at(w) <= 0) throw NumericError("DirMultStats: removing unseen word");
  --counts_[w];
  --total_;
}

double DirMultStats::predictive(int w) const {
  const int V = vocab_size();
  return (beta_ + counts_.at(w)) / (V * beta_ + static_cast<double>(total_));
}

double DirMultStats::log_predictive(int w) const { return std::log(predictive(w)); }

NigStats::NigStats(const NigPrior& prior) : prior_(prior) {
  if (prior.kappa0 <= 0 || prior.a0 <= 0 || prior.b0 <= 0) {
    throw DataError("NigStats: kappa0, a0, b0 must be positive");
  }
  refresh();
}

void NigStats::add(double t) {
  ++n_;
  sum_ += t;
  sumsq_ += t * t;
  refresh();
}

void NigStats::remove(double t) {
  if (n_ <= 0) throw NumericError("NigStats: remove from empty stats");
  --n_;
  if (n_ == 0) {
    sum_ = 0.0;
    sumsq_ = 0.0;
  } else {
    sum_ -= t;
    sumsq_ -= t * t;
  }
  refresh();
}

void NigStats::refresh() {
  const double n = static_cast<double>(n_);
  kappa_n_ = prior_.kappa0 + n;
  a_n_ = prior_.a0 + 0.5 * n;
  if (n_ == 0) {
    m_n_ = prior_.m0;
    b_n_ = prior_.b0;
  } else {
    const double mean = sum_ / n;
    m_n_ = (prior_.kappa0 * prior_.m0 + sum_) / kappa_n_;
    double scatter = sumsq_ - sum_ * sum_ / n;
    if (scatter < 0.0) scatter = 0.0;  // fp slack
    b_n_ = prior_.b0 + 0.5 * scatter +
           prior_.kappa0 * n * (mean - prior_.m0) * (mean - prior_.m0) / (2.0 * kappa_n_);
  }
  const double nu = 2.0 * a_n_;
  t_scale2_ = std::max(b_n_ * (kappa_n_ + 1.0) / (a_n_ * kappa_n_), kVarianceFloor);
  t_half_nu_p1_ = 0.5 * (nu + 1.0);
  t_inv_nu_s2_ = 1.0 / (nu * t_scale2_);
  t_log_norm_ = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                0.5 * std::log(nu * M_PI * t_scale2_);
}

double NigStats::log_predictive(double t) const {
  const double d = t - m_n_;
  return t_log_norm_ - t_half_nu_p1_ * std::log1p(d * d * t_inv_nu_s2_);
}

double NigStats::predictive(double t) const { return std::exp(log_predictive(t)); }

double NigStats::sample_predictive(Rng& rng) const {
  // t = loc + s * Z / sqrt(G/ (nu/2) / 2)... standard t via normal / chi-square.
  const double nu = 2.0 * a_n_;
  const double z = rng.normal();
  const double chi2 = 2.0 * rng.gamma(0.5 * nu);  // chi^2 with nu dof
  return m_n_ + std::sqrt(t_scale2_) * z / std::sqrt(chi2 / nu);
}

BetaMomentFit beta_fit_from_moments(double mean, double variance) {
  BetaMomentFit fit;
  if (!(mean > 0.0 && mean < 1.0)) throw DataError("beta_fit: mean must lie in (0,1)");
  if (variance < 1e-12) {  // zero up to fp noise
    variance = 1e-6;
    fit.degenerate = true;
  }
  const double q = mean * (1.0 - mean) / variance - 1.0;
  fit.params.psi1 = std::max(mean * q, 1e-3);
  fit.params.psi2 = std::max((1.0 - mean) * q, 1e-3);
  return fit;
}

BetaMomentFit beta_fit_moments(std::span<const double> times) {
  if (times.size() < 2) throw DataError("beta_fit_moments: need at least 2 points");
  double mean = 0.0;
  for (double t : times) mean += t;
  mean /= static_cast<double>(times.size());
  double var = 0.0;
  for (double t : times) var += (t - mean) * (t - mean);
  var /= static_cast<double>(times.size());
  return beta_fit_from_moments(mean, var);
}

double beta_log_pdf(double t, const BetaParams& p) {
  if (!(t > 0.0 && t < 1.0)) return -std::numeric_limits<double>::infinity();
  const double log_b = std::lgamma(p.psi1) + std::lgamma(p.psi2) - std::lgamma(p.psi1 + p.psi2);
  return (p.psi1 - 1.0) * std::log(t) + (p.psi2 - 1.0) * std::log1p(-t) - log_b;
}

double gauss_log_pdf(double t, double mean, double var) {
  const double d = t - mean;
  return -0.5 * (std::log(2.0 * M_PI * var) + d * d / var);
}

double GaussMixture::log_pdf(double t) const {
  std::vector<double> terms(weights.size());
  for (std::size_t c = 0; c < weights.size(); ++c) {
    terms[c] = std::log(weights[c]) + gauss_log_pdf(t, means[c], vars[c]);
  }
  return log_sum_exp(terms);
}

namespace {

constexpr double kGmmVarFloor = 1e-6;
constexpr int kGmmRestarts = 10;
constexpr int kGmmMaxIters = 200;
constexpr double kGmmTol = 1e-6;

double mixture_log_lik(std::span<const double> xs, const GaussMixture& g) {
  double ll = 0.0;
  for (double x : xs) ll += g.log_pdf(x);
  return ll;
}

// k-means++ seeding over scalar points.
std::vector<double> kmeanspp_centers(std::span<const double> xs, int k, Rng& rng) {
  std::vector<double> centers;
  centers.reserve(k);
  centers.push_back(xs[rng.below(xs.size())]);
  std::vector<double> d2(xs.size());
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (double c : centers) best = std::min(best, (xs[i] - c) * (xs[i] - c));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      centers.push_back(xs[rng.below(xs.size())]);
      continue;
    }
    double u = rng.uniform() * total;
    std::size_t pick = xs.size() - 1;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      u -= d2[i];
      if (u < 0.0) {
        pick = i;
        break;
      }
    }
    centers.push_back(xs[pick]);
  }
  return centers;
}

GaussMixture em_run(std::span<const double> xs, int k, Rng& rng) {
  const std::size_t n = xs.size();
  GaussMixture g;
  g.means = kmeanspp_centers(xs, k, rng);
  double var0 = 0.0, mean0 = 0.0;
  for (double x : xs) mean0 += x;
  mean0 /= static_cast<double>(n);
  for (double x : xs) var0 += (x - mean0) * (x - mean0);
  var0 = std::max(var0 / static_cast<double>(n), kGmmVarFloor);
  g.weights.assign(k, 1.0 / k);
  g.vars.assign(k, var0);

  std::vector<double> resp(n * k);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < kGmmMaxIters; ++iter) {
    // E step
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        resp[i * k + c] = std::log(g.weights[c]) + gauss_log_pdf(xs[i], g.means[c], g.vars[c]);
        mx = std::max(mx, resp[i * k + c]);
      }
      double s = 0.0;
      for (int c = 0; c < k; ++c) s += std::exp(resp[i * k + c] - mx);
      ll += mx + std::log(s);
      for (int c = 0; c < k; ++c) resp[i * k + c] = std::exp(resp[i * k + c] - mx) / s;
    }
    g.log_lik_trace.push_back(ll);
    // M step
    for (int c = 0; c < k; ++c) {
      double rsum = 0.0, msum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        rsum += resp[i * k + c];
        msum += resp[i * k + c] * xs[i];
      }
      rsum = std::max(rsum, 1e-12);
      const double mean = msum / rsum;
      double vsum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        vsum += resp[i * k + c] * (xs[i] - mean) * (xs[i] - mean);
      }
      g.weights[c] = rsum / static_cast<double>(n);
      g.means[c] = mean;
      g.vars[c] = std::max(vsum / rsum, kGmmVarFloor);
    }
    if (ll - prev_ll < kGmmTol && iter > 0) break;
    prev_ll = ll;
  }
  g.train_log_lik = mixture_log_lik(xs, g);
  return g;
}

}  // namespace

GaussMixture gmm_fit(std::span<const double> times, int c_max, Rng& rng) {
  if (times.empty()) throw DataError("gmm_fit: no points");
  if (c_max < 1) throw DataError("gmm_fit: c_max must be >= 1");
  c_max = std::min<int>(c_max, static_cast<int>(times.size()));

  GaussMixture best;
  double best_bic = std::numeric_limits<double>::infinity();
  const double log_n = std::log(static_cast<double>(times.size()));
  for (int k = 1; k <= c_max; ++k) {
    GaussMixture best_k;
    double best_k_ll = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < kGmmRestarts; ++r) {
      GaussMixture g = em_run(times, k, rng);
      if (g.train_log_lik > best_k_ll) {
        best_k_ll = g.train_log_lik;
        best_k = std::move(g);
      }
    }
    const double params = 3.0 * k - 1.0;
    const double bic = -2.0 * best_k_ll + params * log_n;
    if (bic < best_bic) {
      best_bic = bic;
      best = std::move(best_k);
    }
  }
  return best;
}

}  // namespace nptot
