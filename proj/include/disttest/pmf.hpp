#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace disttest {

/// Dense probability mass function on a contiguous integer window
/// [offset, offset + size). `normalized == false` marks pseudo-distributions
/// (possibly non-unit mass or, after Fourier inversion, slightly negative
/// entries); operations that need probability semantics check the flag.
struct Pmf {
  std::int64_t offset = 0;
  std::vector<double> weights;
  bool normalized = true;

  std::size_t size() const { return weights.size(); }
  std::int64_t lo() const { return offset; }
  std::int64_t hi() const { return offset + static_cast<std::int64_t>(weights.size()) - 1; }

  double at(std::int64_t j) const {
    if (j < lo() || j > hi()) return 0.0;
    return weights[static_cast<std::size_t>(j - offset)];
  }

  double total_mass() const {
    double s = 0;
    for (double w : weights) s += w;
    return s;
  }

  void validate() const {
    if (!normalized) return;
    for (double w : weights) {
      if (w < -1e-12) throw std::invalid_argument("pmf: negative weight");
    }
    if (std::fabs(total_mass() - 1.0) > 1e-9)
      throw std::invalid_argument("pmf: weights do not sum to 1");
  }

  static Pmf point_mass(std::int64_t j) { return Pmf{j, {1.0}, true}; }

  static Pmf uniform(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw std::invalid_argument("uniform pmf: empty window");
    std::size_t n = static_cast<std::size_t>(hi - lo + 1);
    return Pmf{lo, std::vector<double>(n, 1.0 / static_cast<double>(n)), true};
  }

  static Pmf binomial(long trials, double p) {
    if (trials < 0 || p < 0.0 || p > 1.0) throw std::invalid_argument("binomial pmf: bad parameters");
    std::vector<double> w(static_cast<std::size_t>(trials) + 1);
    // log-space evaluation keeps large `trials` finite
    double lp = std::log(std::max(p, 1e-300));
    double lq = std::log(std::max(1.0 - p, 1e-300));
    for (long j = 0; j <= trials; ++j) {
      double lw = std::lgamma(trials + 1.0) - std::lgamma(j + 1.0) - std::lgamma(trials - j + 1.0);
      if (p == 0.0) {
        w[j] = (j == 0) ? 1.0 : 0.0;
        continue;
      }
      if (p == 1.0) {
        w[j] = (j == trials) ? 1.0 : 0.0;
        continue;
      }
      w[j] = std::exp(lw + j * lp + (trials - j) * lq);
    }
    return Pmf{0, std::move(w), true};
  }
};

struct Moments {
  double mean = 0;
  double variance = 0;
};

inline Moments moments(const Pmf& p) {
  double mean = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    mean += p.weights[i] * static_cast<double>(p.offset + static_cast<std::int64_t>(i));
  double var = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double d = static_cast<double>(p.offset + static_cast<std::int64_t>(i)) - mean;
    var += p.weights[i] * d * d;
  }
  return {mean, var};
}

struct Distances {
  double tv = 0;
  double l1 = 0;
  double l2 = 0;
  double hellinger = 0;
};

/// Distances between pmfs aligned by their absolute windows; entries missing
/// on one side count as zero.
inline Distances distances(const Pmf& p, const Pmf& q) {
  std::int64_t lo = std::min(p.lo(), q.lo());
  std::int64_t hi = std::max(p.hi(), q.hi());
  double l1 = 0, l2sq = 0, hsq = 0;
  for (std::int64_t j = lo; j <= hi; ++j) {
    double a = p.at(j), b = q.at(j);
    double d = a - b;
    l1 += std::fabs(d);
    l2sq += d * d;
    double sd = std::sqrt(std::max(a, 0.0)) - std::sqrt(std::max(b, 0.0));
    hsq += sd * sd;
  }
  return {l1 / 2.0, l1, std::sqrt(l2sq), std::sqrt(hsq / 2.0)};
}

/// P mod M, placed on the window [anchor, anchor + M - 1]. Residue-class mass
/// is preserved exactly (plain additions, no rounding beyond fp addition).
inline Pmf mod_reduce(const Pmf& p, std::int64_t M, std::int64_t anchor = 0) {
  if (M < 1) throw std::invalid_argument("mod_reduce: M must be >= 1");
  Pmf out;
  out.offset = anchor;
  out.weights.assign(static_cast<std::size_t>(M), 0.0);
  out.normalized = p.normalized;
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::int64_t j = p.offset + static_cast<std::int64_t>(i);
    std::int64_t r = (j - anchor) % M;
    if (r < 0) r += M;
    out.weights[static_cast<std::size_t>(r)] += p.weights[i];
  }
  return out;
}

/// Empirical distribution of integer samples over the window [lo, hi].
inline Pmf empirical(const std::vector<std::int64_t>& samples, std::int64_t lo, std::int64_t hi) {
  if (samples.empty()) throw std::domain_error("empirical: no samples");
  if (hi < lo) throw std::invalid_argument("empirical: empty window");
  Pmf out;
  out.offset = lo;
  out.weights.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
  for (std::int64_t s : samples) {
    if (s < lo || s > hi) throw std::invalid_argument("empirical: sample outside window");
    out.weights[static_cast<std::size_t>(s - lo)] += 1.0;
  }
  double inv = 1.0 / static_cast<double>(samples.size());
  for (double& w : out.weights) w *= inv;
  return out;
}

/// Discrete log-concavity: interval support and p(j)^2 >= p(j-1)p(j+1) - tol.
inline bool is_logconcave(const Pmf& p, double tol = 1e-12) {
  std::size_t first = p.size(), last = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.weights[i] > 0) {
      first = std::min(first, i);
      last = std::max(last, i);
    }
  }
  if (first == p.size()) return false;  // zero function
  for (std::size_t i = first; i <= last; ++i) {
    if (p.weights[i] <= 0) return false;  // gap in the support
  }
  for (std::size_t i = first + 1; i < last; ++i) {
    if (p.weights[i] * p.weights[i] < p.weights[i - 1] * p.weights[i + 1] - tol) return false;
  }
  return true;
}

inline bool is_unimodal(const Pmf& p, double tol = 1e-12) {
  // single sign change of first differences, ignoring leading/trailing zeros
  bool falling = false;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    double d = p.weights[i + 1] - p.weights[i];
    if (d > tol && falling) return false;
    if (d < -tol) falling = true;
  }
  return true;
}

}  // namespace disttest
