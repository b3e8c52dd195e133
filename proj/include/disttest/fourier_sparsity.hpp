#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "disttest/dft.hpp"
#include "disttest/dist_spec.hpp"
#include "disttest/lattice.hpp"
#include "disttest/ledger.hpp"
#include "disttest/report.hpp"
#include "disttest/rng.hpp"

namespace disttest {

struct SparsityStats {
  long long m = 0;
  long long m_prime = 0;
  double l2_emp = 0;            // ||Q'||_2^2 from integer counts
  double in_s_energy = 0;       // ||Q'_hat 1_S||_2^2
  double norm_lhs = 0;          // m'^2 ||Q'||^2 - m'
  double norm_threshold = 0;    // (3/2) b m^2
  double sparsity_lhs = 0;
  double sparsity_threshold = 0;
  double b = 0;
  double epsilon = 0;
};

struct SparsityOutcome {
  bool rejected = false;
  Stage stage = Stage::None;
  FourierCoeffs coeffs;  // empirical coefficients on S when not rejected
  SparsityStats stats;
  std::vector<std::int64_t> counts;  // histogram over the window
};

namespace detail {

inline void draw_histogram(Sampler& sampler, Rng& rng, long long m_prime, std::int64_t anchor,
                           std::int64_t M, std::vector<std::int64_t>& counts) {
  counts.assign(static_cast<std::size_t>(M), 0);
  constexpr std::size_t kChunk = 1 << 14;
  std::vector<std::int64_t> buf(kChunk);
  long long remaining = m_prime;
  while (remaining > 0) {
    std::size_t take = static_cast<std::size_t>(std::min<long long>(remaining, kChunk));
    sampler.draw_batch(rng, buf.data(), take);
    for (std::size_t i = 0; i < take; ++i) {
      std::int64_t idx = buf[i] - anchor;
      if (idx < 0 || idx >= M)
        throw std::domain_error("fourier support tester: sample outside the [M] window");
      ++counts[static_cast<std::size_t>(idx)];
    }
    remaining -= static_cast<long long>(take);
  }
}

inline double counts_sq_sum(const std::vector<std::int64_t>& counts) {
  unsigned __int128 acc = 0;
  for (std::int64_t c : counts)
    acc += static_cast<unsigned __int128>(c) * static_cast<unsigned __int128>(c);
  return static_cast<double>(acc);
}

}  // namespace detail

/// Algorithm 1: test that the unknown distribution's DFT mass sits on S, and
/// learn the coefficients on S if so. The sampler must emit values in
/// [anchor, anchor + M). Preconditions: 0 in S, S conjugate-symmetric. b may
/// exceed 1 (callers pass class-derived bounds that are vacuous when large).
inline SparsityOutcome test_fourier_support_1d(Sampler& sampler, std::int64_t M,
                                               const std::vector<std::int64_t>& S, double epsilon,
                                               double b, Rng& rng,
                                               const ConstantLedger& ledger = {},
                                               std::int64_t anchor = 0) {
  if (M < 1) throw std::invalid_argument("test_fourier_support_1d: M must be >= 1");
  if (b <= 0 || epsilon <= 0) throw std::domain_error("test_fourier_support_1d: b, eps must be > 0");
  SparsityOutcome out;
  auto& st = out.stats;
  st.b = b;
  st.epsilon = epsilon;
  const double C = ledger.sparsity_c_1d;
  const double Md = static_cast<double>(M);
  st.m = static_cast<long long>(std::ceil(
      C * (std::sqrt(b) / (epsilon * epsilon) +
           static_cast<double>(S.size()) / (Md * epsilon * epsilon) + std::sqrt(Md))));
  st.m_prime = rng.poisson(static_cast<double>(st.m));
  if (st.m_prime > 2 * st.m || st.m_prime == 0) {
    out.rejected = true;
    out.stage = Stage::PoissonOverflow;
    return out;
  }
  detail::draw_histogram(sampler, rng, st.m_prime, anchor, M, out.counts);
  const double mp = static_cast<double>(st.m_prime);
  const double sq = detail::counts_sq_sum(out.counts);
  st.l2_emp = sq / (mp * mp);
  out.coeffs = dft_counts(out.counts, anchor, M, S, mp);
  st.in_s_energy = out.coeffs.l2_sq();

  st.norm_lhs = sq - mp;  // = m'^2 ||Q'||^2 - m', exact in integers
  st.norm_threshold = 1.5 * b * static_cast<double>(st.m) * static_cast<double>(st.m);
  if (st.norm_lhs > st.norm_threshold) {
    out.rejected = true;
    out.stage = Stage::NormCheck;
    return out;
  }

  const double ratio = mp / static_cast<double>(st.m);
  st.sparsity_lhs = st.l2_emp - st.in_s_energy / Md;
  st.sparsity_threshold = 3.0 * epsilon * epsilon * ratio * ratio + 1.0 / mp;
  if (st.sparsity_lhs >= st.sparsity_threshold) {
    out.rejected = true;
    out.stage = Stage::SparsityCheck;
    return out;
  }
  return out;
}

struct LatticeSparsityOutcome {
  bool rejected = false;
  Stage stage = Stage::None;
  LatticeFourierCoeffs coeffs;
  SparsityStats stats;
};

/// Algorithm 6, the high-dimensional analogue. The thresholds follow the
/// printed algorithm: the sample bound drops the |S| term and the sparsity
/// check compares ||Q'||^2 - ||Q'_hat 1_S||^2 (without a 1/det(M) factor)
/// against 3 eps^2 + 1/m'.
inline LatticeSparsityOutcome test_fourier_support_lattice(
    SamplerKD& sampler, const LatticeBasis& basis, const std::vector<IntVec>& S, double epsilon,
    double b, const std::vector<double>& center, Rng& rng, const ConstantLedger& ledger = {}) {
  if (b <= 0 || epsilon <= 0)
    throw std::domain_error("test_fourier_support_lattice: b, eps must be > 0");
  LatticeSparsityOutcome out;
  auto& st = out.stats;
  st.b = b;
  st.epsilon = epsilon;
  const double det = std::fabs(basis.det);
  st.m = static_cast<long long>(
      std::ceil(ledger.sparsity_c_lattice * (std::sqrt(b) / (epsilon * epsilon) + std::sqrt(det))));
  st.m_prime = rng.poisson(static_cast<double>(st.m));
  if (st.m_prime > 2 * st.m || st.m_prime == 0) {
    out.rejected = true;
    out.stage = Stage::PoissonOverflow;
    return out;
  }

  // Histogram over the fundamental domain, dense-indexed through its
  // bounding box.
  const int k = basis.k;
  std::vector<std::int64_t> span(k, 0);
  for (int r = 0; r < k; ++r) {
    std::int64_t s = 1;
    for (int c = 0; c < k; ++c) s += std::abs(basis.cols[c][r]);
    span[r] = s + 2;
  }
  std::vector<std::int64_t> base(k);
  for (int r = 0; r < k; ++r)
    base[r] = static_cast<std::int64_t>(std::floor(center[r])) - span[r] / 2 - 1;
  long long box = 1;
  for (int r = 0; r < k; ++r) box *= span[r] + 2;
  std::vector<std::int64_t> counts(static_cast<std::size_t>(box), 0);
  std::map<IntVec, std::int64_t> overflow;  // samples whose reduction leaves the box

  // flattened M^{-1} and columns for the allocation-free reduce in the loop
  std::vector<double> inv_flat(static_cast<std::size_t>(k) * k);
  std::vector<std::int64_t> cols_flat(static_cast<std::size_t>(k) * k);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) {
      inv_flat[static_cast<std::size_t>(r) * k + c] = basis.inv[r][c];
      cols_flat[static_cast<std::size_t>(c) * k + r] = basis.cols[c][r];
    }
  std::vector<std::int64_t> x(k);
  std::vector<double> t(k);
  IntVec red(k);
  for (long long i = 0; i < st.m_prime; ++i) {
    sampler.draw(rng, x);
    for (int r = 0; r < k; ++r) {
      double acc = 0;
      for (int c = 0; c < k; ++c)
        acc += inv_flat[static_cast<std::size_t>(r) * k + c] *
               (static_cast<double>(x[c]) - center[c]);
      t[r] = acc;
    }
    for (int r = 0; r < k; ++r) red[r] = x[r];
    for (int c = 0; c < k; ++c) {
      std::int64_t bi = static_cast<std::int64_t>(std::ceil(t[c] - 0.5));
      if (bi != 0)
        for (int r = 0; r < k; ++r)
          red[r] -= cols_flat[static_cast<std::size_t>(c) * k + r] * bi;
    }
    long long idx = 0;
    bool inside = true;
    for (int r = 0; r < k; ++r) {
      std::int64_t off = red[r] - base[r];
      if (off < 0 || off >= span[r] + 2) {
        inside = false;
        break;
      }
      idx = idx * (span[r] + 2) + off;
    }
    if (inside) {
      ++counts[static_cast<std::size_t>(idx)];
    } else {
      overflow[red] += 1;
    }
  }

  const double mp = static_cast<double>(st.m_prime);
  unsigned __int128 sq_acc = 0;
  for (std::int64_t c : counts)
    sq_acc += static_cast<unsigned __int128>(c) * static_cast<unsigned __int128>(c);
  for (auto& [_, c] : overflow)
    sq_acc += static_cast<unsigned __int128>(c) * static_cast<unsigned __int128>(c);
  const double sq = static_cast<double>(sq_acc);
  st.l2_emp = sq / (mp * mp);

  st.norm_lhs = sq - mp;
  st.norm_threshold = 1.5 * b * static_cast<double>(st.m) * static_cast<double>(st.m);
  if (st.norm_lhs > st.norm_threshold) {
    out.rejected = true;
    out.stage = Stage::NormCheck;
    return out;
  }

  // Empirical coefficients on S from the nonzero histogram cells.
  std::map<IntVec, double> emp;
  for (std::size_t idx = 0; idx < counts.size(); ++idx) {
    if (counts[idx] == 0) continue;
    long long rem = static_cast<long long>(idx);
    IntVec pt(k);
    for (int r = k - 1; r >= 0; --r) {
      pt[r] = base[r] + rem % (span[r] + 2);
      rem /= (span[r] + 2);
    }
    emp[pt] = static_cast<double>(counts[idx]) / mp;
  }
  for (auto& [pt, c] : overflow) emp[pt] += static_cast<double>(c) / mp;
  out.coeffs = lattice_dft(emp, basis, S);
  st.in_s_energy = out.coeffs.l2_sq();

  st.sparsity_lhs = st.l2_emp - st.in_s_energy;
  st.sparsity_threshold = 3.0 * epsilon * epsilon + 1.0 / mp;
  if (st.sparsity_lhs >= st.sparsity_threshold) {
    out.rejected = true;
    out.stage = Stage::SparsityCheck;
    return out;
  }
  return out;
}

struct PlancherelDecomposition {
  double outside_energy = 0;           // ||Q'||^2 - (1/M)||Q'_hat 1_S||^2
  std::optional<double> identity_residual;  // only with an exact Q supplied
};

/// Diagnostic instance of the Plancherel identity behind the sparsity check.
/// With an exact Q supplied (test-only), also reports the residual of
/// ||Q'-H||^2 = (1/M)||Q_hat 1_S - Q'_hat 1_S||^2 + outside_energy, where H is
/// the inverse transform of Q_hat 1_S.
inline PlancherelDecomposition plancherel_decomposition(const Pmf& q_emp,
                                                        const std::vector<std::int64_t>& S,
                                                        std::int64_t M,
                                                        const Pmf* exact_q = nullptr) {
  PlancherelDecomposition out;
  KahanSum l2;
  for (double w : q_emp.weights) l2.add(w * w);
  FourierCoeffs emp_s = dft_1d(q_emp, M, S);
  out.outside_energy = l2.sum - emp_s.l2_sq() / static_cast<double>(M);
  if (exact_q != nullptr) {
    FourierCoeffs q_s = dft_1d(*exact_q, M, S);
    InversionResult h = inverse_dft_1d(q_s, q_emp.offset);
    double lhs = 0;
    for (std::int64_t j = q_emp.lo(); j <= q_emp.hi(); ++j) {
      double d = q_emp.at(j) - h.pmf.at(j);
      lhs += d * d;
    }
    double learn = 0;
    for (std::size_t i = 0; i < q_s.size(); ++i) learn += std::norm(q_s.values[i] - emp_s.values[i]);
    out.identity_residual = std::fabs(lhs - (learn / static_cast<double>(M) + out.outside_energy));
  }
  return out;
}

}  // namespace disttest
