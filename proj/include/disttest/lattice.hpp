#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "disttest/dft.hpp"
#include "disttest/dist_spec.hpp"

namespace disttest {

using IntVec = std::vector<std::int64_t>;
using Mat = std::vector<std::vector<double>>;

/// Integer k x k determinant by cofactor expansion (k is tiny here).
inline std::int64_t int_det(const std::vector<std::vector<std::int64_t>>& a) {
  const int n = static_cast<int>(a.size());
  if (n == 1) return a[0][0];
  std::int64_t acc = 0;
  for (int c = 0; c < n; ++c) {
    std::vector<std::vector<std::int64_t>> minor;
    minor.reserve(n - 1);
    for (int r = 1; r < n; ++r) {
      std::vector<std::int64_t> row;
      row.reserve(n - 1);
      for (int cc = 0; cc < n; ++cc)
        if (cc != c) row.push_back(a[r][cc]);
      minor.push_back(std::move(row));
    }
    std::int64_t term = a[0][c] * int_det(minor);
    acc += (c % 2 == 0) ? term : -term;
  }
  return acc;
}

/// Integer adjugate: adj(A)_{rc} = (-1)^{r+c} det(minor of A without row c,
/// column r), so that A^{-1} = adj(A) / det(A).
inline std::vector<std::vector<std::int64_t>> int_adjugate(
    const std::vector<std::vector<std::int64_t>>& a) {
  const int n = static_cast<int>(a.size());
  std::vector<std::vector<std::int64_t>> adj(n, std::vector<std::int64_t>(n, 0));
  if (n == 1) {
    adj[0][0] = 1;
    return adj;
  }
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      std::vector<std::vector<std::int64_t>> minor;
      for (int rr = 0; rr < n; ++rr) {
        if (rr == c) continue;
        std::vector<std::int64_t> row;
        for (int cc = 0; cc < n; ++cc)
          if (cc != r) row.push_back(a[rr][cc]);
        minor.push_back(std::move(row));
      }
      std::int64_t m = int_det(minor);
      adj[r][c] = ((r + c) % 2 == 0) ? m : -m;
    }
  }
  return adj;
}

/// Integer lattice basis M (columns generate L = M Z^k) with cached
/// determinant and inverse.
struct LatticeBasis {
  int k = 0;
  std::vector<std::vector<std::int64_t>> cols;  // cols[i] is the i-th column
  double det = 0;
  std::int64_t det_int = 0;
  Mat inv;  // M^{-1}
  std::vector<std::vector<std::int64_t>> adj_t;  // adj(M^T), integer

  static LatticeBasis from_columns(std::vector<std::vector<std::int64_t>> columns) {
    LatticeBasis b;
    b.k = static_cast<int>(columns.size());
    b.cols = std::move(columns);
    for (auto& c : b.cols)
      if (static_cast<int>(c.size()) != b.k)
        throw std::invalid_argument("lattice basis: columns must be k-vectors");
    Mat m(b.k, std::vector<double>(b.k));
    for (int r = 0; r < b.k; ++r)
      for (int c = 0; c < b.k; ++c) m[r][c] = static_cast<double>(b.cols[c][r]);
    b.det = invert(m, b.inv);
    std::vector<std::vector<std::int64_t>> mt(b.k, std::vector<std::int64_t>(b.k));
    for (int r = 0; r < b.k; ++r)
      for (int c = 0; c < b.k; ++c) mt[r][c] = b.cols[r][c];  // (M^T)_{rc} = M_{cr}
    b.det_int = int_det(mt);  // det(M^T) = det(M)
    b.adj_t = int_adjugate(mt);
    if (b.det_int == 0 || std::fabs(b.det) < 0.5)
      throw std::invalid_argument("lattice basis: singular integer matrix");
    return b;
  }

  static LatticeBasis diagonal(const std::vector<std::int64_t>& d) {
    int k = static_cast<int>(d.size());
    std::vector<std::vector<std::int64_t>> cols(k, std::vector<std::int64_t>(k, 0));
    for (int i = 0; i < k; ++i) cols[i][i] = d[i];
    return from_columns(std::move(cols));
  }

  std::int64_t det_abs_rounded() const { return static_cast<std::int64_t>(std::llround(std::fabs(det))); }

  /// (M^T)^{-1} v, the dual point represented by the integer vector v.
  std::vector<double> dual_point(const IntVec& v) const {
    std::vector<double> xi(k, 0.0);
    // (M^T)^{-1} = (M^{-1})^T, so xi_r = sum_c inv[c][r] * v[c]
    for (int r = 0; r < k; ++r)
      for (int c = 0; c < k; ++c) xi[r] += inv[c][r] * static_cast<double>(v[c]);
    return xi;
  }

 private:
  // Gauss-Jordan with partial pivoting; returns the determinant.
  static double invert(Mat a, Mat& out) {
    const int n = static_cast<int>(a.size());
    out.assign(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) out[i][i] = 1.0;
    double det = 1.0;
    for (int col = 0; col < n; ++col) {
      int piv = col;
      for (int r = col + 1; r < n; ++r)
        if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
      if (std::fabs(a[piv][col]) < 1e-12) return 0.0;
      if (piv != col) {
        std::swap(a[piv], a[col]);
        std::swap(out[piv], out[col]);
        det = -det;
      }
      det *= a[col][col];
      double inv_p = 1.0 / a[col][col];
      for (int c = 0; c < n; ++c) {
        a[col][c] *= inv_p;
        out[col][c] *= inv_p;
      }
      for (int r = 0; r < n; ++r) {
        if (r == col) continue;
        double f = a[r][col];
        if (f == 0.0) continue;
        for (int c = 0; c < n; ++c) {
          a[r][c] -= f * a[col][c];
          out[r][c] -= f * out[col][c];
        }
      }
    }
    return det;
  }
};

/// Coefficients indexed by dual points xi = (M^T)^{-1} v, stored via the
/// integer representatives v.
struct LatticeFourierCoeffs {
  LatticeBasis basis;
  std::vector<IntVec> reps;
  std::vector<Complex> values;

  std::size_t size() const { return reps.size(); }

  double l2_sq() const {
    KahanSum s;
    for (const Complex& v : values) s.add(std::norm(v));
    return s.sum;
  }
};

/// Canonical residue of v modulo M^T Z^k, computed in exact integer
/// arithmetic: v - M^T round((M^T)^{-1} v). Two integer vectors stand for the
/// same dual point iff their canonical residues coincide.
inline IntVec canonical_dual_residue(const LatticeBasis& basis, const IntVec& v) {
  const int k = basis.k;
  std::vector<std::int64_t> b(k);
  for (int rr = 0; rr < k; ++rr) {
    std::int64_t num = 0;
    for (int c = 0; c < k; ++c) num += basis.adj_t[rr][c] * v[c];
    std::int64_t d = basis.det_int;
    if (d < 0) {
      num = -num;
      d = -d;
    }
    std::int64_t a = 2 * num + d, bb = 2 * d;
    b[rr] = a >= 0 ? a / bb : -((-a + bb - 1) / bb);
  }
  IntVec residue(k);
  for (int rr = 0; rr < k; ++rr) {
    std::int64_t acc = v[rr];
    for (int c = 0; c < k; ++c) acc -= basis.cols[rr][c] * b[c];
    residue[rr] = acc;
  }
  return residue;
}

/// All integer vectors v with ||v||_2 <= radius, deduplicated modulo M^T Z^k
/// (i.e., as members of L*/Z^k). The representative kept is the first in
/// lexicographic enumeration order.
inline std::vector<IntVec> lattice_dual_ball(const LatticeBasis& basis, double radius) {
  if (radius < 0) throw std::invalid_argument("lattice_dual_ball: negative radius");
  const int k = basis.k;
  const std::int64_t r = static_cast<std::int64_t>(std::floor(radius));
  // Two dual points coincide iff v - v' lies in M^T Z^k, i.e.
  // (M^T)^{-1}(v - v') is integral. Canonicalize by reducing v modulo M^T.
  std::map<IntVec, IntVec> seen;  // canonical residue -> representative
  std::vector<IntVec> out;
  // iterate the box [-r, r]^k
  IntVec cur(k, -r);
  for (;;) {
    double norm_sq = 0;
    for (int i = 0; i < k; ++i) norm_sq += static_cast<double>(cur[i]) * static_cast<double>(cur[i]);
    if (norm_sq <= radius * radius + 1e-12) {
      IntVec residue = canonical_dual_residue(basis, cur);
      if (seen.emplace(residue, cur).second) out.push_back(cur);
    }
    // advance odometer
    int pos = 0;
    while (pos < k) {
      if (++cur[pos] <= r) break;
      cur[pos] = -r;
      ++pos;
    }
    if (pos == k) break;
  }
  return out;
}

/// Reduce x into the fundamental domain center + M*(-1/2, 1/2]^k: returns
/// x + M*b for the unique integer b, computed coordinatewise in the basis
/// with the half-open convention matching (-1/2, 1/2].
inline IntVec fundamental_reduce(const IntVec& x, const LatticeBasis& basis,
                                 const std::vector<double>& center) {
  const int k = basis.k;
  if (static_cast<int>(x.size()) != k || static_cast<int>(center.size()) != k)
    throw std::invalid_argument("fundamental_reduce: dimension mismatch");
  // t = M^{-1}(x - center) must land in (-1/2, 1/2]; b = -round_half_down(t)
  std::vector<double> t(k, 0.0);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c)
      t[r] += basis.inv[r][c] * (static_cast<double>(x[c]) - center[c]);
  IntVec out = x;
  for (int c = 0; c < k; ++c) {
    // round t to the nearest integer, ties at .5 rounding DOWN so that the
    // reduced coordinate lands in (-1/2, 1/2]
    double b = std::ceil(t[c] - 0.5);
    std::int64_t bi = static_cast<std::int64_t>(std::llround(b));
    if (bi != 0)
      for (int r = 0; r < k; ++r) out[r] -= basis.cols[c][r] * bi;
  }
  return out;
}

inline bool in_fundamental_domain(const IntVec& x, const LatticeBasis& basis,
                                  const std::vector<double>& center, double slack = 1e-9) {
  std::vector<double> t(basis.k, 0.0);
  for (int r = 0; r < basis.k; ++r)
    for (int c = 0; c < basis.k; ++c)
      t[r] += basis.inv[r][c] * (static_cast<double>(x[c]) - center[c]);
  for (double ti : t)
    if (ti <= -0.5 - slack || ti > 0.5 + slack) return false;
  return true;
}

/// Lattice DFT of a sparse distribution over one fundamental domain:
/// F_hat(xi) = sum_x e(xi . x) F(x), with xi = (M^T)^{-1} v for each
/// representative v in S.
inline LatticeFourierCoeffs lattice_dft(const std::map<IntVec, double>& dist,
                                        const LatticeBasis& basis,
                                        const std::vector<IntVec>& reps) {
  LatticeFourierCoeffs out;
  out.basis = basis;
  out.reps = reps;
  out.values.assign(reps.size(), {0.0, 0.0});
  for (std::size_t fi = 0; fi < reps.size(); ++fi) {
    std::vector<double> xi = basis.dual_point(reps[fi]);
    KahanComplex acc;
    for (const auto& [x, w] : dist) {
      double dot = 0;
      for (int c = 0; c < basis.k; ++c) dot += xi[c] * static_cast<double>(x[c]);
      acc.add(w * e_of(dot - std::floor(dot)));
    }
    out.values[fi] = acc.value();
  }
  return out;
}

inline LatticeFourierCoeffs lattice_dft(const MultiPmf& mp, const LatticeBasis& basis,
                                        const std::vector<IntVec>& reps) {
  std::map<IntVec, double> dist;
  for (const auto& [pt, w] : mp.entries) {
    IntVec x(pt.begin(), pt.end());
    dist[x] += w;
  }
  return lattice_dft(dist, basis, reps);
}

}  // namespace disttest
