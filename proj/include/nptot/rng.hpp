// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace nptot {

// Seeded generator with explicit draw algorithms, so that a (seed, binary)
// pair always reproduces the same stream regardless of standard-library
// distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

  std::uint64_t raw() { return eng_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller (one value per call).
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double var) {
    return mean + std::sqrt(var) * normal();
  }

  // Gamma(shape, 1) via Marsaglia-Tsang.
  double gamma(double shape) {
    if (shape <= 0.0) throw std::invalid_argument("Rng::gamma: shape must be positive");
    if (shape < 1.0) {
      return gamma(shape + 1.0) * std::pow(uniform_pos(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
  }

  double gumbel() { return -std::log(-std::log(uniform_pos())); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

inline double log_sum_exp(std::span<const double> logs) {
  double mx = -INFINITY;
  for (double x : logs) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : logs) s += std::exp(x - mx);
  return mx + std::log(s);
}

// Gumbel-max draw from unnormalized log-weights.
inline std::size_t sample_logweights_gumbel(Rng& rng, std::span<const double> logw) {
  if (logw.empty()) throw std::invalid_argument("sample_logweights_gumbel: no weights");
  std::size_t best = 0;
  double best_val = -INFINITY;
  for (std::size_t i = 0; i < logw.size(); ++i) {
    const double v = logw[i] + rng.gumbel();
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  if (!std::isfinite(best_val)) throw std::runtime_error("sample_logweights_gumbel: all weights zero");
  return best;
}

// Inverse-CDF draw from unnormalized log-weights; consumes exactly one uniform.
inline std::size_t sample_logweights_invcdf(Rng& rng, std::span<const double> logw) {
  if (logw.empty()) throw std::invalid_argument("sample_logweights_invcdf: no weights");
  double mx = -INFINITY;
  for (double x : logw) mx = std::max(mx, x);
  if (!std::isfinite(mx)) throw std::runtime_error("sample_logweights_invcdf: all weights zero");
  double total = 0.0;
  for (double x : logw) total += std::exp(x - mx);
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i + 1 < logw.size(); ++i) {
    u -= std::exp(logw[i] - mx);
    if (u < 0.0) return i;
  }
  return logw.size() - 1;
}

}  // namespace nptot
