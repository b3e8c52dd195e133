#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "disttest/pmf.hpp"

namespace disttest {

using Complex = std::complex<double>;

/// e(x) = exp(-2*pi*i*x), the transform kernel.
inline Complex e_of(double x) {
  double t = -2.0 * std::numbers::pi * x;
  return {std::cos(t), std::sin(t)};
}

/// Compensated (Kahan) accumulator; the sparsity statistics sit at O(eps^2)
/// scale and must not be swamped by round-off on long supports.
struct KahanSum {
  double sum = 0, c = 0;
  void add(double x) {
    double y = x - c;
    double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

struct KahanComplex {
  KahanSum re, im;
  void add(Complex z) {
    re.add(z.real());
    im.add(z.imag());
  }
  Complex value() const { return {re.sum, im.sum}; }
};

/// Sparse collection of DFT-mod-M coefficients, frequencies sorted.
struct FourierCoeffs {
  std::int64_t modulus = 1;
  std::vector<std::int64_t> freqs;
  std::vector<Complex> values;

  std::size_t size() const { return freqs.size(); }

  Complex at(std::int64_t xi) const {
    auto it = std::lower_bound(freqs.begin(), freqs.end(), xi);
    if (it == freqs.end() || *it != xi) return {0.0, 0.0};
    return values[static_cast<std::size_t>(it - freqs.begin())];
  }

  bool contains(std::int64_t xi) const {
    auto it = std::lower_bound(freqs.begin(), freqs.end(), xi);
    return it != freqs.end() && *it == xi;
  }

  double l2_sq() const {
    KahanSum s;
    for (const Complex& v : values) s.add(std::norm(v));
    return s.sum;
  }
};

/// Twiddle table e(r/M) for r in [0, M); phases are reduced to exact integer
/// residues before lookup, so equal angles give bit-identical factors.
inline std::vector<Complex> twiddle_table(std::int64_t M) {
  std::vector<Complex> t(static_cast<std::size_t>(M));
  for (std::int64_t r = 0; r < M; ++r)
    t[static_cast<std::size_t>(r)] = e_of(static_cast<double>(r) / static_cast<double>(M));
  return t;
}

inline std::vector<std::int64_t> all_frequencies(std::int64_t M) {
  std::vector<std::int64_t> s(static_cast<std::size_t>(M));
  for (std::int64_t i = 0; i < M; ++i) s[static_cast<std::size_t>(i)] = i;
  return s;
}

/// DFT modulo M of a pmf at the requested frequencies:
/// F_hat(xi) = sum_j e(xi*j/M) F(j). The kernel is 1-periodic, so p need not
/// live on [M].
inline FourierCoeffs dft_1d(const Pmf& p, std::int64_t M, const std::vector<std::int64_t>& freqs) {
  if (M < 1) throw std::invalid_argument("dft_1d: M must be >= 1");
  FourierCoeffs out;
  out.modulus = M;
  out.freqs = freqs;
  std::sort(out.freqs.begin(), out.freqs.end());
  out.values.resize(out.freqs.size());
  const auto tw = twiddle_table(M);
  for (std::size_t fi = 0; fi < out.freqs.size(); ++fi) {
    const std::int64_t xi = out.freqs[fi];
    KahanComplex acc;
    for (std::size_t i = 0; i < p.size(); ++i) {
      double w = p.weights[i];
      if (w == 0.0) continue;
      std::int64_t j = p.offset + static_cast<std::int64_t>(i);
      std::int64_t r = (xi % M) * (j % M) % M;
      if (r < 0) r += M;
      acc.add(w * tw[static_cast<std::size_t>(r)]);
    }
    out.values[fi] = acc.value();
  }
  return out;
}

inline FourierCoeffs dft_1d(const Pmf& p, std::int64_t M) { return dft_1d(p, M, all_frequencies(M)); }

/// DFT of an integer histogram over the window [anchor, anchor + M), scaled by
/// 1/total. Phases use the absolute positions anchor + index.
inline FourierCoeffs dft_counts(const std::vector<std::int64_t>& counts, std::int64_t anchor,
                                std::int64_t M, const std::vector<std::int64_t>& freqs,
                                double total) {
  if (static_cast<std::int64_t>(counts.size()) != M)
    throw std::invalid_argument("dft_counts: histogram size must equal M");
  FourierCoeffs out;
  out.modulus = M;
  out.freqs = freqs;
  std::sort(out.freqs.begin(), out.freqs.end());
  out.values.resize(out.freqs.size());
  const auto tw = twiddle_table(M);
  for (std::size_t fi = 0; fi < out.freqs.size(); ++fi) {
    const std::int64_t xi = out.freqs[fi];
    KahanComplex acc;
    for (std::int64_t i = 0; i < M; ++i) {
      std::int64_t c = counts[static_cast<std::size_t>(i)];
      if (c == 0) continue;
      std::int64_t j = anchor + i;
      std::int64_t r = (xi % M) * (j % M) % M;
      if (r < 0) r += M;
      acc.add(static_cast<double>(c) * tw[static_cast<std::size_t>(r)]);
    }
    out.values[fi] = acc.value() / total;
  }
  return out;
}

struct InversionResult {
  Pmf pmf;               // pseudo-distribution: real parts of the inversion
  double imag_residue;   // max |imaginary part| seen; < 1e-6 expected for
                         // conjugate-symmetric coefficient sets
};

/// Inverse DFT modulo M onto the window [m0, m0 + M - 1]:
/// F(j) = (1/M) sum_xi e(-xi*j/M) F_hat(xi). Frequencies absent from `c` are
/// treated as zero, which realizes the truncation H_hat = Q_hat * 1_S.
inline InversionResult inverse_dft_1d(const FourierCoeffs& c, std::int64_t m0) {
  const std::int64_t M = c.modulus;
  InversionResult out;
  out.pmf.offset = m0;
  out.pmf.weights.assign(static_cast<std::size_t>(M), 0.0);
  out.pmf.normalized = false;
  out.imag_residue = 0.0;
  const auto tw = twiddle_table(M);
  for (std::int64_t idx = 0; idx < M; ++idx) {
    std::int64_t j = m0 + idx;
    KahanComplex acc;
    for (std::size_t fi = 0; fi < c.freqs.size(); ++fi) {
      std::int64_t xi = c.freqs[fi];
      // e(-xi*j/M) = conj(e(xi*j/M)) for real kernel table
      std::int64_t r = (xi % M) * (j % M) % M;
      if (r < 0) r += M;
      acc.add(c.values[fi] * std::conj(tw[static_cast<std::size_t>(r)]));
    }
    Complex v = acc.value() / static_cast<double>(M);
    out.pmf.weights[static_cast<std::size_t>(idx)] = v.real();
    out.imag_residue = std::max(out.imag_residue, std::fabs(v.imag()));
  }
  return out;
}

/// | ||p||_2^2 - (1/M)||p_hat||_2^2 |, a self-test primitive (Plancherel).
inline double plancherel_residual(const Pmf& p, std::int64_t M) {
  if (static_cast<std::int64_t>(p.size()) > M)
    throw std::invalid_argument("plancherel_residual: support wider than M");
  KahanSum direct;
  for (double w : p.weights) direct.add(w * w);
  FourierCoeffs c = dft_1d(p, M);
  return std::fabs(direct.sum - c.l2_sq() / static_cast<double>(M));
}

/// One log-linear segment: value exp(alpha + beta*j) on integers j in [a, b].
struct LogLinearPiece {
  std::int64_t a = 0;
  std::int64_t b = 0;
  double alpha = 0;
  double beta = 0;
};

inline Pmf expand_pieces(const std::vector<LogLinearPiece>& pieces) {
  if (pieces.empty()) throw std::invalid_argument("expand_pieces: no pieces");
  std::int64_t lo = pieces.front().a, hi = pieces.front().b;
  for (const auto& pc : pieces) {
    lo = std::min(lo, pc.a);
    hi = std::max(hi, pc.b);
  }
  Pmf out;
  out.offset = lo;
  out.weights.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
  out.normalized = false;
  for (const auto& pc : pieces)
    for (std::int64_t j = pc.a; j <= pc.b; ++j)
      out.weights[static_cast<std::size_t>(j - lo)] += std::exp(pc.alpha + pc.beta * static_cast<double>(j));
  return out;
}

/// Closed-form DFT of a piecewise log-linear function via geometric series:
/// sum_{j=a}^{b} e^{alpha+beta*j} e(xi*j/M), ratio r = e^{beta} e(xi/M).
/// Falls back to direct summation when |1 - r| < 1e-8.
inline FourierCoeffs dft_piecewise_exponential(const std::vector<LogLinearPiece>& pieces,
                                               std::int64_t M,
                                               const std::vector<std::int64_t>& freqs) {
  FourierCoeffs out;
  out.modulus = M;
  out.freqs = freqs;
  std::sort(out.freqs.begin(), out.freqs.end());
  out.values.assign(out.freqs.size(), {0.0, 0.0});
  for (const auto& pc : pieces) {
    if (pc.b < pc.a) throw std::invalid_argument("dft_piecewise_exponential: empty piece");
    for (std::size_t fi = 0; fi < out.freqs.size(); ++fi) {
      const std::int64_t xi = out.freqs[fi];
      const Complex ratio = std::exp(pc.beta) * e_of(static_cast<double>(xi) / static_cast<double>(M));
      const std::int64_t len = pc.b - pc.a + 1;
      Complex first = std::exp(pc.alpha + pc.beta * static_cast<double>(pc.a)) *
                      e_of(static_cast<double>(xi) * static_cast<double>(pc.a) / static_cast<double>(M));
      if (std::abs(1.0 - ratio) < 1e-8) {
        Complex term = first;
        KahanComplex acc;
        for (std::int64_t t = 0; t < len; ++t) {
          acc.add(term);
          term *= ratio;
        }
        out.values[fi] += acc.value();
      } else {
        out.values[fi] += first * (1.0 - std::pow(ratio, static_cast<double>(len))) / (1.0 - ratio);
      }
    }
  }
  return out;
}

}  // namespace disttest
