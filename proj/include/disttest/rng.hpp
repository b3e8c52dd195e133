#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace disttest {

/// Counter-based pseudorandom generator (SplitMix64 core). A stream is
/// identified by a 64-bit key; `child` derives an independent stream from a
/// label without disturbing the parent, which is how the testers split one
/// seed into per-stage streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix(seed ^ 0x6A09E667F3BCC909ull)) {}

  std::uint64_t u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix(state_);
  }

  /// Independent stream derived from (this stream's key, label).
  Rng child(std::uint64_t label) const {
    Rng r(0);
    r.state_ = mix(state_ ^ mix(label + 0x1F83D9ABFB41BD6Bull));
    return r;
  }

  /// Uniform in [0, 1).
  double unit() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

  /// Uniform over {0, ..., n-1} (Lemire's multiply-shift; bias negligible for
  /// the bounded n used here, and deterministic).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(u64()) * n) >> 64);
  }

  /// Poisson(mean) draw: inversion for small means, transformed rejection
  /// (Hormann's PTRS) for large ones.
  long long poisson(double mean) {
    if (mean < 0) throw std::domain_error("poisson: negative mean");
    if (mean == 0) return 0;
    if (mean < 30.0) return poisson_inversion(mean);
    return poisson_ptrs(mean);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  long long poisson_inversion(double mean) {
    double p = std::exp(-mean);
    double cum = p;
    long long k = 0;
    double u = unit();
    while (u > cum) {
      ++k;
      p *= mean / static_cast<double>(k);
      cum += p;
      if (k > 1000) break;  // numerically unreachable for mean < 30
    }
    return k;
  }

  long long poisson_ptrs(double mean) {
    const double log_mean = std::log(mean);
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      double u = unit() - 0.5;
      double v = unit();
      double us = 0.5 - std::fabs(u);
      double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= v_r) return static_cast<long long>(kf);
      if (kf < 0 || (us < 0.013 && v > us)) continue;
      double k = kf;
      if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
          k * log_mean - mean - std::lgamma(k + 1.0)) {
        return static_cast<long long>(kf);
      }
    }
  }

  std::uint64_t state_;
};

/// Walker/Vose alias table for O(1) draws from an explicit finite pmf.
class AliasTable {
 public:
  AliasTable() = default;

  explicit AliasTable(const std::vector<double>& weights) { build(weights); }

  void build(const std::vector<double>& weights) {
    const std::size_t n = weights.size();
    if (n == 0) throw std::invalid_argument("alias table: empty pmf");
    double total = 0;
    for (double w : weights) {
      if (w < 0) throw std::invalid_argument("alias table: negative weight");
      total += w;
    }
    if (total <= 0) throw std::invalid_argument("alias table: zero total mass");
    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) scaled[i] = weights[i] * n / total;
    std::vector<std::uint32_t> small, large;
    small.reserve(n);
    large.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
      std::uint32_t s = small.back();
      small.pop_back();
      std::uint32_t l = large.back();
      large.pop_back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      (scaled[l] < 1.0 ? small : large).push_back(l);
    }
    for (std::uint32_t i : large) prob_[i] = 1.0;
    for (std::uint32_t i : small) prob_[i] = 1.0;
  }

  bool empty() const { return prob_.empty(); }
  std::size_t size() const { return prob_.size(); }

  std::uint32_t draw(Rng& rng) const {
    std::uint64_t r = rng.u64();
    std::uint32_t i = static_cast<std::uint32_t>(
        (static_cast<unsigned __int128>(r) * prob_.size()) >> 64);
    // Reuse the low bits for the coin flip; they are independent enough of the
    // high-bits index for this generator and keep the draw at one u64 per call.
    double coin = static_cast<double>(r & 0x1FFFFFFFFFFFFFull) * 0x1.0p-53;
    return coin < prob_[i] ? i : alias_[i];
  }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

}  // namespace disttest
