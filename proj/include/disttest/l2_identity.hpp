#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "disttest/dft.hpp"
#include "disttest/dist_spec.hpp"
#include "disttest/ledger.hpp"
#include "disttest/pmf.hpp"
#include "disttest/rng.hpp"

namespace disttest {

/// Raw statistic of the tolerant L2 identity tester:
/// Z = sum_i (X_i - m*Pstar(i))^2 - X_i, an unbiased estimator of
/// m^2 ||P - Pstar||_2^2 under Poissonized sampling.
struct L2Statistic {
  double z = 0;
  long long m = 0;        // planned sample count
  long long m_prime = 0;  // realized Poisson count
  std::vector<std::int64_t> counts;
};

/// Statistic from explicit per-symbol counts against an aligned pseudo
/// distribution (pstar may be non-normalized and may take negative values).
inline L2Statistic compute_statistic(const std::vector<std::int64_t>& counts, long long m,
                                     const Pmf& pstar) {
  if (counts.size() != pstar.size())
    throw std::domain_error("compute_statistic: counts and pstar windows differ");
  L2Statistic st;
  st.m = m;
  st.counts = counts;
  KahanSum z;
  long long total = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    double d = static_cast<double>(counts[i]) - static_cast<double>(m) * pstar.weights[i];
    z.add(d * d - static_cast<double>(counts[i]));
    total += counts[i];
  }
  st.z = z.sum;
  st.m_prime = total;
  return st;
}

struct L2TestResult {
  bool accept = false;
  L2Statistic stat;
  double threshold = 0;  // 3 m^2 eps^2
};

/// Algorithm 2 with Poissonization done internally: draws Poi(m) samples with
/// m = ceil(c*sqrt(b)/eps^2) and rejects iff Z > 3 m^2 eps^2 (the square-root
/// free restatement, well-defined for negative Z). Samples falling outside
/// pstar's window enter the statistic as zero-pstar symbols.
inline L2TestResult tolerant_l2_test(Sampler& sampler, const Pmf& pstar, double epsilon, double b,
                                     Rng& rng, const ConstantLedger& ledger = {}) {
  if (b <= 0) throw std::domain_error("tolerant_l2_test: b must be positive");
  if (epsilon <= 0) throw std::domain_error("tolerant_l2_test: epsilon must be positive");
  const long long m =
      static_cast<long long>(std::ceil(ledger.l2_c * std::sqrt(b) / (epsilon * epsilon)));
  const long long m_prime = rng.poisson(static_cast<double>(m));
  std::vector<std::int64_t> counts(pstar.size(), 0);
  std::map<std::int64_t, std::int64_t> outside;
  for (long long i = 0; i < m_prime; ++i) {
    std::int64_t s = sampler.draw(rng);
    if (s >= pstar.lo() && s <= pstar.hi()) {
      counts[static_cast<std::size_t>(s - pstar.offset)] += 1;
    } else {
      outside[s] += 1;
    }
  }
  L2Statistic st = compute_statistic(counts, m, pstar);
  for (auto& [_, c] : outside) {
    double d = static_cast<double>(c);
    st.z += d * d - d;
    st.m_prime += c;
  }
  L2TestResult res;
  res.stat = st;
  res.threshold = 3.0 * static_cast<double>(m) * static_cast<double>(m) * epsilon * epsilon;
  res.accept = !(st.z > res.threshold);
  return res;
}

struct StrongThresholds {
  bool below_2_9 = false;  // Z <= 2.9 m^2 eps^2
  bool above_3_1 = false;  // Z >= 3.1 m^2 eps^2
};

inline StrongThresholds strong_thresholds(const L2Statistic& stat, double epsilon) {
  double scale = static_cast<double>(stat.m) * static_cast<double>(stat.m) * epsilon * epsilon;
  return {stat.z <= 2.9 * scale, stat.z >= 3.1 * scale};
}

}  // namespace disttest
