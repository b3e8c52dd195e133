#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "disttest/dft.hpp"
#include "disttest/dist_spec.hpp"
#include "disttest/ledger.hpp"
#include "disttest/report.hpp"
#include "disttest/rng.hpp"

namespace disttest {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Characteristic factor of one summand pmf at frequency xi mod M.
inline Complex summand_phi(const std::vector<double>& pmf, std::int64_t xi, std::int64_t M) {
  Complex acc = 0;
  for (std::size_t j = 0; j < pmf.size(); ++j) {
    if (pmf[j] == 0.0) continue;
    std::int64_t r = (xi % M) * (static_cast<std::int64_t>(j) % M) % M;
    acc += pmf[j] * e_of(static_cast<double>(r) / static_cast<double>(M));
  }
  return acc;
}

/// DFT mod M of an SIIRV in closed form: the product of per-group factors
/// raised to their multiplicities. No convolution needed.
inline Complex siirv_dft_at(const SiirvSpec& spec, std::int64_t xi, std::int64_t M) {
  Complex acc = 1.0;
  for (auto& [pmf, count] : spec.groups)
    acc *= std::pow(summand_phi(pmf, xi, M), static_cast<double>(count));
  return acc;
}

struct CoverMember {
  SiirvSpec spec;
  double mean = 0;
  double sd = 0;
};

/// Desk-scale stand-in for the external SIIRV cover constructions: an
/// explicit enumeration whose radius is certified only over the enumerated
/// subfamily, never over all of S_{n,k}.
struct Cover {
  double gamma = 0;
  bool certified = false;  // desk covers never certify the full class
  std::vector<CoverMember> members;
};

enum class CoverFamilies { IidOnly, Both };

namespace detail {

inline void push_member(Cover& cover, SiirvSpec spec) {
  Moments m = spec.exact_moments();
  cover.members.push_back({std::move(spec), m.mean, std::sqrt(m.variance)});
}

/// Simplex grid over the first k-1 coordinates with the given mesh; the last
/// coordinate takes the remainder.
template <typename Fn>
void for_each_simplex_point(int k, double mesh, Fn&& fn) {
  long g = static_cast<long>(std::floor(1.0 / mesh + 1e-9));
  std::vector<long> idx(k - 1, 0);
  std::vector<double> q(k);
  for (;;) {
    long sum = 0;
    for (long v : idx) sum += v;
    if (sum <= g) {
      double acc = 0;
      for (int i = 0; i < k - 1; ++i) {
        q[i] = static_cast<double>(idx[i]) * mesh;
        acc += q[i];
      }
      q[k - 1] = std::max(0.0, 1.0 - acc);
      // renormalize the mesh round-off exactly
      double total = 0;
      for (double v : q) total += v;
      for (double& v : q) v /= total;
      fn(q);
    }
    int pos = 0;
    while (pos < k - 1) {
      if (++idx[pos] <= g) break;
      idx[pos] = 0;
      ++pos;
    }
    if (pos == k - 1) break;
  }
}

inline long simplex_grid_count(int k, double mesh) {
  long g = static_cast<long>(std::floor(1.0 / mesh + 1e-9)) + 1;
  // number of (k-1)-tuples with sum <= g-1: C(g-1+k-1, k-1)
  double acc = 1;
  for (int i = 1; i <= k - 1; ++i) acc = acc * (g - 1 + i) / i;
  return static_cast<long>(acc);
}

}  // namespace detail

/// Enumerated desk cover: (a) i.i.d.-summand SIIRVs on a simplex grid of mesh
/// gamma/(2n) per coordinate, and (b) shifted binomials on a (shift, trials,
/// p) grid with p-mesh gamma/(4n). The returned gamma is the certified radius
/// over the enumerated subfamily only.
inline Cover build_cover_desk(long n, int k, double gamma, long budget,
                              CoverFamilies families = CoverFamilies::Both) {
  if (gamma <= 0) throw std::invalid_argument("build_cover_desk: gamma must be positive");
  Cover cover;
  cover.certified = false;
  if (gamma >= 1.0) {
    // TV <= 1 always: one member suffices
    detail::push_member(cover, SiirvSpec::iid(n, k, [&] {
      std::vector<double> q(k, 0.0);
      q[0] = 1.0;
      return q;
    }()));
    cover.gamma = 1.0;
    return cover;
  }

  const double mesh_a = gamma / (2.0 * static_cast<double>(n));
  long count_a = detail::simplex_grid_count(k, mesh_a);
  long count_b = 0;
  const double mesh_b = gamma / (4.0 * static_cast<double>(n));
  long p_grid = static_cast<long>(std::floor(1.0 / mesh_b)) + 1;
  if (families == CoverFamilies::Both) {
    for (long t = 0; t <= n; ++t) {
      for (long s = 0; s + t <= n * (k - 1); ++s) {
        if (t + (s + k - 2) / (k - 1) > n) continue;
        count_b += (t > 0 ? p_grid : 1);
        if (count_a + count_b > budget) break;
      }
      if (count_a + count_b > budget) break;
    }
  }
  if (count_a + count_b > budget)
    throw ResourceError("build_cover_desk: enumeration exceeds the budget");

  detail::for_each_simplex_point(k, mesh_a, [&](const std::vector<double>& q) {
    detail::push_member(cover, SiirvSpec::iid(n, k, q));
  });

  if (families == CoverFamilies::Both) {
    for (long t = 0; t <= n; ++t) {
      for (long s = 0; s + t <= n * (k - 1); ++s) {
        long shift_summands = (s + k - 2) / (k - 1);  // ceil(s / (k-1))
        if (t + shift_summands > n) continue;
        for (long pi = 0; pi < p_grid; ++pi) {
          if (t == 0 && pi > 0) break;  // p is meaningless without trials
          double p = std::min(1.0, static_cast<double>(pi) * mesh_b);
          SiirvSpec spec;
          spec.k = k;
          spec.n = n;
          if (t > 0) {
            std::vector<double> bern(k, 0.0);
            bern[0] = 1.0 - p;
            bern[1] = p;
            spec.groups.push_back({std::move(bern), t});
          }
          if (s > 0) {
            long full = s / (k - 1), rem = s % (k - 1);
            if (full > 0) {
              std::vector<double> det(k, 0.0);
              det[static_cast<std::size_t>(k - 1)] = 1.0;
              spec.groups.push_back({std::move(det), full});
            }
            if (rem > 0) {
              std::vector<double> det(k, 0.0);
              det[static_cast<std::size_t>(rem)] = 1.0;
              spec.groups.push_back({std::move(det), 1});
            }
          }
          if (t + shift_summands < n) {
            std::vector<double> zero(k, 0.0);
            zero[0] = 1.0;
            spec.groups.push_back({std::move(zero), n - t - shift_summands});
          }
          spec.validate();
          detail::push_member(cover, std::move(spec));
        }
      }
    }
  }

  // Certified radius over the enumerated subfamily: per-coordinate rounding
  // to mesh_a costs at most (k-1)*mesh_a/2 in summand L1, hence
  // n*(k-1)*mesh_a/4 in TV for family (a); family (b) p-rounding costs at
  // most n*mesh_b/2 in TV.
  double radius_a = static_cast<double>(n) * (k - 1) * mesh_a / 4.0;
  double radius_b = static_cast<double>(n) * mesh_b / 2.0;
  cover.gamma = std::max(radius_a, families == CoverFamilies::Both ? radius_b : 0.0);
  return cover;
}

/// Coarsest-gamma search: the smallest gamma >= gamma_target whose
/// enumeration fits the budget. The k >= 3 tester path uses the i.i.d.
/// family only; shifted binomials go through the dedicated PBD routes.
inline Cover build_cover_feasible(long n, int k, double gamma_target, long budget,
                                  CoverFamilies families = CoverFamilies::IidOnly) {
  double gamma = gamma_target;
  for (int attempt = 0; attempt < 64; ++attempt) {
    try {
      return build_cover_desk(n, k, gamma, budget, families);
    } catch (const ResourceError&) {
      gamma *= 1.5;
    }
  }
  throw ResourceError("build_cover_feasible: no feasible gamma under the budget");
}

struct ProjectionResult {
  bool accept = false;
  double best_distance_sq = std::numeric_limits<double>::infinity();
  long candidates_checked = 0;
  long moment_survivors = 0;
};

/// Algorithm 4: scan the cover, moment-filter each member, and accept when
/// some member's Fourier coefficients on S sit within eps^2/5 of H_hat.
inline ProjectionResult project_siirv(const FourierCoeffs& h_coeffs,
                                      const std::vector<std::int64_t>& S, const Cover& cover,
                                      double mu_tilde, double sigma_tilde, double epsilon) {
  if (cover.members.empty()) throw ConfigError("project_siirv: empty cover");
  const std::int64_t M = h_coeffs.modulus;
  ProjectionResult res;
  for (const auto& member : cover.members) {
    ++res.candidates_checked;
    if (std::fabs(mu_tilde - member.mean) > sigma_tilde) continue;
    if (!(2.0 * (member.sd + 1.0) >= sigma_tilde + 1.0 &&
          sigma_tilde + 1.0 >= (member.sd + 1.0) / 2.0))
      continue;
    ++res.moment_survivors;
    KahanSum dist;
    for (std::int64_t xi : S) {
      Complex q = siirv_dft_at(member.spec, xi, M);
      dist.add(std::norm(h_coeffs.at(xi) - q));
    }
    res.best_distance_sq = std::min(res.best_distance_sq, dist.sum);
    if (dist.sum <= epsilon * epsilon / 5.0) {
      res.accept = true;
      return res;
    }
  }
  return res;
}

struct ShiftedBinomial {
  std::int64_t shift = 0;
  long trials = 0;
  double p = 0;

  Complex dft_at(std::int64_t xi, std::int64_t M) const {
    Complex base = 1.0 - p + p * e_of(static_cast<double>(xi % M) / static_cast<double>(M));
    std::int64_t r = (xi % M) * (shift % M) % M;
    if (r < 0) r += M;
    return std::pow(base, static_cast<double>(trials)) *
           e_of(static_cast<double>(r) / static_cast<double>(M));
  }
};

/// One candidate PBD described by its distinct Bernoulli values and their
/// multiplicities (remaining summands are zeros).
struct PbdCandidate {
  std::vector<std::pair<double, long>> values;

  double mean() const {
    double m = 0;
    for (auto& [v, c] : values) m += v * static_cast<double>(c);
    return m;
  }
  double variance() const {
    double s = 0;
    for (auto& [v, c] : values) s += v * (1.0 - v) * static_cast<double>(c);
    return s;
  }
  Complex dft_at(std::int64_t xi, std::int64_t M) const {
    Complex acc = 1.0;
    Complex root = e_of(static_cast<double>(xi % M) / static_cast<double>(M));
    for (auto& [v, c] : values)
      acc *= std::pow(1.0 - v + v * root, static_cast<double>(c));
    return acc;
  }
};

struct PbdProjectionResult {
  bool accept = false;
  double best_distance_sq = std::numeric_limits<double>::infinity();
  PbdCandidate best;
  long candidates_checked = 0;
};

/// Small-variance PBD projection: candidate search over PBDs with at most
/// B = ceil(log2(1/eps)) distinct parameter values from the eps^2-mesh grid,
/// moment-filtered, accepting iff some candidate has
/// sum_{xi in S} |H_hat - Q_hat|^2 <= eps^2/4.
inline PbdProjectionResult pbd_project_small_variance(const FourierCoeffs& h_coeffs,
                                                      const std::vector<std::int64_t>& S,
                                                      std::int64_t M, double mu_tilde,
                                                      double sigma_tilde, long n, double epsilon,
                                                      const ConstantLedger& ledger = {}) {
  PbdProjectionResult res;
  const double thr = epsilon * epsilon / 4.0;
  const double var_target = sigma_tilde * sigma_tilde - 1.0;

  auto moment_ok = [&](double mean, double var) {
    if (std::fabs(mu_tilde - mean) > sigma_tilde) return false;
    double sd = std::sqrt(std::max(var, 0.0));
    return 2.0 * (sd + 1.0) >= sigma_tilde + 1.0 && sigma_tilde + 1.0 >= (sd + 1.0) / 2.0;
  };

  auto check = [&](const PbdCandidate& cand) {
    double mean = cand.mean(), var = cand.variance();
    if (!moment_ok(mean, var)) return false;
    ++res.candidates_checked;
    KahanSum dist;
    for (std::int64_t xi : S) dist.add(std::norm(h_coeffs.at(xi) - cand.dft_at(xi, M)));
    if (dist.sum < res.best_distance_sq) {
      res.best_distance_sq = dist.sum;
      res.best = cand;
    }
    return dist.sum <= thr;
  };

  const double mesh = epsilon * epsilon;
  std::vector<double> grid;
  for (double v = 0.0; v <= 1.0 + 1e-12; v += mesh) grid.push_back(std::min(v, 1.0));

  // One distinct value: multiplicity band solved from the mean filter.
  for (double v : grid) {
    if (v <= 0.0) {
      PbdCandidate zero;  // all-zeros PBD = point mass at 0
      if (check(zero)) {
        res.accept = true;
        return res;
      }
      continue;
    }
    long lo = static_cast<long>(std::floor((mu_tilde - sigma_tilde) / v));
    long hi = static_cast<long>(std::ceil((mu_tilde + sigma_tilde) / v));
    lo = std::max<long>(lo, 0);
    hi = std::min<long>(hi, n);
    for (long m1 = lo; m1 <= hi; ++m1) {
      if (check(PbdCandidate{{{v, m1}}})) {
        res.accept = true;
        return res;
      }
    }
  }

  // Two distinct values: multiplicities from the 2x2 moment system, with the
  // four integer roundings tried.
  long B = static_cast<long>(std::ceil(std::log2(1.0 / epsilon)));
  if (B >= 2) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      for (std::size_t j = i + 1; j < grid.size(); ++j) {
        double v1 = grid[i], v2 = grid[j];
        if (v1 <= 0.0) continue;
        // m1 v1 + m2 v2 = mu,  m1 v1(1-v1) + m2 v2(1-v2) = var
        double a11 = v1, a12 = v2, a21 = v1 * (1 - v1), a22 = v2 * (1 - v2);
        double det = a11 * a22 - a12 * a21;
        if (std::fabs(det) < 1e-12) continue;
        double m1f = (mu_tilde * a22 - var_target * a12) / det;
        double m2f = (var_target * a11 - mu_tilde * a21) / det;
        for (double d1 : {std::floor(m1f), std::ceil(m1f)}) {
          for (double d2 : {std::floor(m2f), std::ceil(m2f)}) {
            long m1 = static_cast<long>(d1), m2 = static_cast<long>(d2);
            if (m1 < 0 || m2 < 0 || m1 + m2 > n || m1 + m2 == 0) continue;
            if (check(PbdCandidate{{{v1, m1}, {v2, m2}}})) {
              res.accept = true;
              return res;
            }
          }
        }
      }
    }
  }

  // Deeper multisets (3..B distinct values): a budgeted deterministic draw of
  // value sets with moment-projected multiplicities.
  if (B >= 3 && ledger.pbd_search_budget > 0) {
    Rng search(0x5EED * static_cast<std::uint64_t>(n + 1) + static_cast<std::uint64_t>(M));
    for (long t = 0; t < ledger.pbd_search_budget; ++t) {
      long j = 3 + static_cast<long>(search.below(static_cast<std::uint64_t>(B - 2)));
      PbdCandidate cand;
      double mean_left = mu_tilde;
      long slots = n;
      bool ok = true;
      for (long u = 0; u < j && ok; ++u) {
        double v = grid[search.below(grid.size())];
        if (v <= 0.0) continue;
        long cap = std::min<long>(slots, static_cast<long>(mean_left / v));
        if (cap <= 0) {
          ok = false;
          break;
        }
        long c = 1 + static_cast<long>(search.below(static_cast<std::uint64_t>(cap)));
        cand.values.push_back({v, c});
        mean_left -= v * static_cast<double>(c);
        slots -= c;
      }
      if (!ok || cand.values.empty()) continue;
      if (check(cand)) {
        res.accept = true;
        return res;
      }
    }
  }
  return res;
}

struct ShiftedBinomialFit {
  bool accept = false;
  Stage stage = Stage::None;  // MomentInfeasible when no candidate exists
  ShiftedBinomial fit;
  double best_distance_sq = std::numeric_limits<double>::infinity();
  long long samples_used = 0;
};

/// Large-variance PBD projection: learn a shifted binomial by moment matching
/// on O(|S|/eps^2) fresh samples, then accept iff its closed-form DFT is
/// within eps^2/5 of H_hat on S. `n_bound`, when nonnegative, restricts
/// candidates to members of PBD_n (shift >= 0, shift + trials <= n).
inline ShiftedBinomialFit pbd_fit_shifted_binomial(const FourierCoeffs& h_coeffs,
                                                   const std::vector<std::int64_t>& S,
                                                   Sampler& sampler, double epsilon, Rng& rng,
                                                   const ConstantLedger& ledger = {},
                                                   long n_bound = -1) {
  ShiftedBinomialFit res;
  const std::int64_t M = h_coeffs.modulus;
  const long long N = static_cast<long long>(
      std::ceil(ledger.pbd_fit_c * static_cast<double>(S.size()) / (epsilon * epsilon)));
  res.samples_used = N;
  double sum = 0, sumsq = 0;
  for (long long i = 0; i < N; ++i) {
    double x = static_cast<double>(sampler.draw(rng));
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / static_cast<double>(N);
  const double var =
      std::max(0.0, (sumsq - static_cast<double>(N) * mean * mean) / static_cast<double>(N - 1));

  const long t_lo = std::max<long>(1, static_cast<long>(std::ceil(var)));
  const long t_hi = std::max<long>(
      t_lo, static_cast<long>(std::ceil(4.0 * std::max({mean, var, 1.0}))));
  bool any_candidate = false;
  for (long t = t_lo; t <= t_hi; ++t) {
    double disc = 1.0 - 4.0 * var / static_cast<double>(t);
    if (disc < 0) continue;
    for (int side = 0; side < 2; ++side) {
      double p = 0.5 + (side == 0 ? -0.5 : 0.5) * std::sqrt(disc);
      p = std::min(1.0 - 1e-9, std::max(1e-9, p));
      std::int64_t shift = static_cast<std::int64_t>(std::llround(mean - p * static_cast<double>(t)));
      if (n_bound >= 0) {
        if (shift < 0 || shift + t > n_bound) continue;
      }
      any_candidate = true;
      ShiftedBinomial cand{shift, t, p};
      KahanSum dist;
      for (std::int64_t xi : S) dist.add(std::norm(h_coeffs.at(xi) - cand.dft_at(xi, M)));
      if (dist.sum < res.best_distance_sq) {
        res.best_distance_sq = dist.sum;
        res.fit = cand;
      }
    }
  }
  if (!any_candidate) {
    res.stage = Stage::MomentInfeasible;
    return res;
  }
  res.accept = res.best_distance_sq <= epsilon * epsilon / 5.0;
  if (!res.accept) res.stage = Stage::Projection;
  return res;
}

}  // namespace disttest
