#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "disttest/dft.hpp"
#include "disttest/dist_spec.hpp"
#include "disttest/fourier_sparsity.hpp"
#include "disttest/ledger.hpp"
#include "disttest/pmf.hpp"
#include "disttest/projection.hpp"
#include "disttest/report.hpp"
#include "disttest/rng.hpp"

namespace disttest {

struct MomentEstimates {
  double mu_tilde = 0;
  double sigma_tilde_sq = 1;  // estimates Var[X] + 1, always >= 1
  long long m_used = 0;

  double sigma_tilde() const { return std::sqrt(sigma_tilde_sq); }
};

/// Empirical mean and unbiased sample variance + 1 from m = 800k draws.
inline MomentEstimates estimate_moments(Sampler& sampler, int k, Rng& rng,
                                        const ConstantLedger& ledger = {}) {
  if (k < 2) throw std::invalid_argument("estimate_moments: k must be >= 2");
  const long long m = static_cast<long long>(ledger.moment_samples_per_k) * k;
  double sum = 0, sumsq = 0;
  for (long long i = 0; i < m; ++i) {
    double x = static_cast<double>(sampler.draw(rng));
    sum += x;
    sumsq += x * x;
  }
  MomentEstimates est;
  est.m_used = m;
  est.mu_tilde = sum / static_cast<double>(m);
  double svar = (sumsq - static_cast<double>(m) * est.mu_tilde * est.mu_tilde) /
                static_cast<double>(m - 1);
  est.sigma_tilde_sq = std::max(0.0, svar) + 1.0;
  return est;
}

struct SparseFreqSet {
  std::int64_t modulus = 1;
  double delta = 0;
  double radius = 0;
  std::vector<std::int64_t> entries;  // sorted, 0 included, conjugate-symmetric
};

/// Distance of x to the nearest point of {a/b : 1 <= b < k, 0 <= a <= b},
/// with wraparound so frequencies near M land next to a/b = 1 == 0.
inline double rational_wrap_distance(double x, int k) {
  double best = 1.0;
  for (int b = 1; b < k; ++b) {
    for (int a = 0; a <= b; ++a) {
      double d = std::fabs(x - static_cast<double>(a) / static_cast<double>(b));
      best = std::min(best, std::min(d, 1.0 - d));
    }
  }
  return best;
}

/// Algorithm 3 step 11: the frequency set S of all xi within
/// C' sqrt(ln(1/delta)) / (4 sigma_tilde) of some rational a/b with b < k,
/// where delta = eps / (C'' sqrt(k log2(k/eps))).
inline SparseFreqSet build_sparse_set(std::int64_t M, double sigma_tilde, int k, double epsilon,
                                      const ConstantLedger& ledger = {}) {
  if (M < 3 || M % 2 == 0) throw std::invalid_argument("build_sparse_set: M must be odd and >= 3");
  if (sigma_tilde <= 0) throw std::invalid_argument("build_sparse_set: sigma_tilde must be > 0");
  SparseFreqSet out;
  out.modulus = M;
  out.delta = epsilon / (ledger.siirv_c_dprime *
                         std::sqrt(static_cast<double>(k) * std::log2(static_cast<double>(k) / epsilon)));
  const double log_term = std::sqrt(std::max(0.0, std::log(1.0 / out.delta)));
  out.radius = ledger.siirv_c_prime * log_term / (4.0 * sigma_tilde);
  for (std::int64_t xi = 0; xi < M; ++xi) {
    double x = static_cast<double>(xi) / static_cast<double>(M);
    if (xi == 0 || rational_wrap_distance(x, k) <= out.radius) out.entries.push_back(xi);
  }
  return out;
}

/// Algorithm 3 steps 7/9: m = ceil(c/eps) draws; fail iff the count outside
/// [lo, hi] reaches (9/40) eps m.
inline bool check_effective_support(Sampler& sampler, std::int64_t lo, std::int64_t hi,
                                    double epsilon, Rng& rng, const ConstantLedger& ledger = {},
                                    long long* samples_out = nullptr) {
  const long long m = static_cast<long long>(std::ceil(ledger.support_check_c / epsilon));
  if (samples_out != nullptr) *samples_out = m;
  long long outside = 0;
  for (long long i = 0; i < m; ++i) {
    std::int64_t x = sampler.draw(rng);
    if (x < lo || x > hi) ++outside;
  }
  return static_cast<double>(outside) < (9.0 / 40.0) * epsilon * static_cast<double>(m);
}

/// Sampler adapter producing P mod M anchored at `anchor`.
class ModReduceSampler final : public Sampler {
 public:
  ModReduceSampler(Sampler& inner, std::int64_t M, std::int64_t anchor)
      : inner_(inner), m_(M), anchor_(anchor) {}

  std::int64_t draw(Rng& rng) override { return reduce(inner_.draw(rng)); }

  void draw_batch(Rng& rng, std::int64_t* out, std::size_t count) override {
    inner_.draw_batch(rng, out, count);
    for (std::size_t i = 0; i < count; ++i) out[i] = reduce(out[i]);
  }

 private:
  std::int64_t reduce(std::int64_t x) const {
    std::int64_t r = (x - anchor_) % m_;
    if (r < 0) r += m_;
    return anchor_ + r;
  }
  Sampler& inner_;
  std::int64_t m_;
  std::int64_t anchor_;
};

namespace detail {

/// Low-frequency conjugate-symmetric set {xi : min(xi, M-xi) <= ell}.
inline std::vector<std::int64_t> lowfreq_set(std::int64_t M, std::int64_t ell) {
  std::vector<std::int64_t> s;
  for (std::int64_t xi = 0; xi < M; ++xi)
    if (std::min(xi, M - xi) <= ell) s.push_back(xi);
  return s;
}

}  // namespace detail

/// Algorithm 3 end-to-end.
inline TestReport test_siirv(Sampler& sampler, long n, int k, double epsilon, Rng& rng,
                             const ConstantLedger& ledger = {}) {
  if (n < 1) throw std::invalid_argument("test_siirv: n must be >= 1");
  if (k < 2) throw std::invalid_argument("test_siirv: k must be >= 2");
  if (!(epsilon > 0 && epsilon <= 1)) throw std::invalid_argument("test_siirv: eps in (0,1]");

  TestReport rep;
  rep.klass = k == 2 ? "pbd" : "siirv";
  rep.n = n;
  rep.k = k;
  rep.epsilon = epsilon;
  rep.ledger = ledger;

  Rng moments_rng = rng.child(1);
  Rng support_rng = rng.child(2);
  Rng empirical_rng = rng.child(3);
  Rng fourier_rng = rng.child(4);
  Rng projection_rng = rng.child(5);

  MomentEstimates est = estimate_moments(sampler, k, moments_rng, ledger);
  rep.total_samples += est.m_used;
  rep.mu_tilde = est.mu_tilde;
  rep.sigma_tilde = est.sigma_tilde();

  // Blatant violation of (n,k)-SIIRV-iness.
  if (est.sigma_tilde() > 2.0 * static_cast<double>(k) * std::sqrt(static_cast<double>(n))) {
    rep.accept = false;
    rep.stage = Stage::VarianceGate;
    return rep;
  }

  const double sigma = est.sigma_tilde();
  const bool small_branch =
      sigma <= 2.0 * static_cast<double>(k) * std::sqrt(std::log(10.0 / epsilon));
  rep.extra["branch"] = small_branch ? "small-variance" : "big-variance";

  const double alpha_split = ledger.pbd_alpha / (epsilon * epsilon);

  if (small_branch) {
    const std::int64_t M =
        1 + 2 * static_cast<std::int64_t>(std::ceil(15.0 * k * std::log(10.0 / epsilon)));
    const std::int64_t anchor = static_cast<std::int64_t>(std::floor(est.mu_tilde)) - (M - 1) / 2;
    rep.big_m = M;

    long long support_samples = 0;
    bool pass = check_effective_support(sampler, anchor, anchor + M - 1, epsilon, support_rng,
                                        ledger, &support_samples);
    rep.total_samples += support_samples;
    if (!pass) {
      rep.accept = false;
      rep.stage = Stage::SupportCheck;
      return rep;
    }

    const long long N = static_cast<long long>(
        std::ceil(ledger.siirv_emp_c * static_cast<double>(M) / (epsilon * epsilon)));
    rep.total_samples += N;
    rep.m = N;
    std::vector<std::int64_t> kept;
    kept.reserve(static_cast<std::size_t>(N));
    for (long long i = 0; i < N; ++i) {
      std::int64_t x = sampler.draw(empirical_rng);
      if (x >= anchor && x <= anchor + M - 1) kept.push_back(x);
    }
    if (kept.empty()) {
      rep.accept = false;
      rep.stage = Stage::SupportCheck;
      return rep;
    }
    Pmf h = empirical(kept, anchor, anchor + M - 1);
    rep.hypothesis.kind = "pmf";
    rep.hypothesis.pmf = h;

    // Projection on low frequencies: the empirical coefficients are only
    // trustworthy there at the N = C|S|/eps^2 budget.
    const std::int64_t ell =
        static_cast<std::int64_t>(std::ceil(ledger.proj_lowfreq_c * std::log2(1.0 / epsilon)));
    std::vector<std::int64_t> s_proj = detail::lowfreq_set(M, std::min(ell, (M - 1) / 2));
    rep.s_size = static_cast<long long>(s_proj.size());
    FourierCoeffs h_hat = dft_1d(h, M, s_proj);

    bool ok = false;
    if (k == 2 && sigma < alpha_split) {
      auto proj =
          pbd_project_small_variance(h_hat, s_proj, M, est.mu_tilde, sigma, n, epsilon, ledger);
      rep.extra["projection_best_distance_sq"] = proj.best_distance_sq;
      ok = proj.accept;
    } else if (k == 2) {
      auto fit = pbd_fit_shifted_binomial(h_hat, s_proj, sampler, epsilon, projection_rng, ledger, n);
      rep.total_samples += fit.samples_used;
      rep.extra["projection_best_distance_sq"] = fit.best_distance_sq;
      ok = fit.accept;
    } else {
      double gamma_target = epsilon / (5.0 * std::sqrt(static_cast<double>(s_proj.size())));
      Cover cover = build_cover_feasible(n, k, gamma_target, ledger.cover_budget);
      auto proj = project_siirv(h_hat, s_proj, cover, est.mu_tilde, sigma, epsilon);
      rep.extra["projection_best_distance_sq"] = proj.best_distance_sq;
      rep.extra["cover_gamma"] = cover.gamma;
      ok = proj.accept;
    }
    rep.accept = ok;
    rep.stage = ok ? Stage::None : Stage::Projection;
    return rep;
  }

  // Big-variance branch.
  const std::int64_t M = 1 + 2 * static_cast<std::int64_t>(
                                 std::ceil(4.0 * sigma * std::sqrt(std::log(4.0 / epsilon))));
  const std::int64_t anchor = static_cast<std::int64_t>(std::floor(est.mu_tilde)) - (M - 1) / 2;
  rep.big_m = M;

  long long support_samples = 0;
  bool pass = check_effective_support(sampler, anchor, anchor + M - 1, epsilon, support_rng,
                                      ledger, &support_samples);
  rep.total_samples += support_samples;
  if (!pass) {
    rep.accept = false;
    rep.stage = Stage::SupportCheck;
    return rep;
  }

  SparseFreqSet sparse = build_sparse_set(M, sigma, k, epsilon, ledger);
  rep.s_size = static_cast<long long>(sparse.entries.size());
  const double b = 16.0 * static_cast<double>(k) / sigma;
  rep.b = b;
  const double eps_fourier = epsilon / (5.0 * std::sqrt(static_cast<double>(M)));

  ModReduceSampler reduced(sampler, M, anchor);
  SparsityOutcome outcome = test_fourier_support_1d(reduced, M, sparse.entries, eps_fourier, b,
                                                    fourier_rng, ledger, anchor);
  rep.m = outcome.stats.m;
  rep.m_prime = outcome.stats.m_prime;
  rep.total_samples += outcome.stats.m_prime;
  if (outcome.rejected) {
    rep.accept = false;
    rep.stage = outcome.stage;
    return rep;
  }
  rep.hypothesis.kind = "fourier";
  rep.hypothesis.coeffs = outcome.coeffs;

  bool ok = false;
  if (k == 2 && sigma < alpha_split) {
    auto proj = pbd_project_small_variance(outcome.coeffs, sparse.entries, M, est.mu_tilde, sigma,
                                           n, epsilon, ledger);
    rep.extra["projection_best_distance_sq"] = proj.best_distance_sq;
    ok = proj.accept;
  } else if (k == 2) {
    auto fit = pbd_fit_shifted_binomial(outcome.coeffs, sparse.entries, sampler, epsilon,
                                        projection_rng, ledger, n);
    rep.total_samples += fit.samples_used;
    rep.extra["projection_best_distance_sq"] = fit.best_distance_sq;
    ok = fit.accept;
  } else {
    double gamma_target = epsilon / (5.0 * std::sqrt(static_cast<double>(sparse.entries.size())));
    Cover cover = build_cover_feasible(n, k, gamma_target, ledger.cover_budget);
    auto proj = project_siirv(outcome.coeffs, sparse.entries, cover, est.mu_tilde, sigma, epsilon);
    rep.extra["projection_best_distance_sq"] = proj.best_distance_sq;
    rep.extra["cover_gamma"] = cover.gamma;
    ok = proj.accept;
  }
  rep.accept = ok;
  rep.stage = ok ? Stage::None : Stage::Projection;
  return rep;
}

/// Structural check of the DKS Fourier-support lemma on an exact SIIRV:
/// the set L(delta, M, s) must contain every frequency with |P_hat| > delta.
struct FourierTailCheck {
  std::vector<std::int64_t> l_set;
  std::vector<std::int64_t> violations;  // xi outside L with |P_hat(xi)| > delta
};

inline FourierTailCheck siirv_fourier_tail_bound(const SiirvSpec& spec, std::int64_t M,
                                                 double delta) {
  Pmf p = convolve_exact(spec);
  double s = std::sqrt(moments(p).variance);
  if (s <= 0) throw std::domain_error("siirv_fourier_tail_bound: spec must have positive variance");
  FourierTailCheck out;
  const double radius = std::sqrt(std::log(1.0 / delta)) / (2.0 * s);
  FourierCoeffs c = dft_1d(mod_reduce(p, M), M);
  for (std::int64_t xi = 0; xi < M; ++xi) {
    bool in_l = xi != 0 && rational_wrap_distance(static_cast<double>(xi) / static_cast<double>(M),
                                                  spec.k) < radius;
    if (xi == 0) in_l = true;  // DC always large; the lemma speaks of [M-1]\L
    if (in_l) {
      out.l_set.push_back(xi);
    } else if (std::abs(c.at(xi)) > delta) {
      out.violations.push_back(xi);
    }
  }
  return out;
}

/// Claim: any (n,k)-SIIRV mod M with sd s has ||P mod M||_2^2 <= 8k/s.
struct L2BoundCheck {
  double lhs = 0;  // ||P mod M||_2^2
  double rhs = 0;  // 8k/s
};

inline L2BoundCheck siirv_l2_bound_check(const SiirvSpec& spec, std::int64_t M) {
  Pmf p = convolve_exact(spec);
  double s = std::sqrt(moments(p).variance);
  if (M <= static_cast<std::int64_t>(std::ceil(s)))
    throw std::invalid_argument("siirv_l2_bound_check: requires M > s");
  Pmf r = mod_reduce(p, M);
  KahanSum l2;
  for (double w : r.weights) l2.add(w * w);
  return {l2.sum, 8.0 * static_cast<double>(spec.k) / s};
}

}  // namespace disttest
