#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "disttest/dft.hpp"
#include "disttest/dist_spec.hpp"
#include "disttest/ledger.hpp"
#include "disttest/pmf.hpp"
#include "disttest/report.hpp"
#include "disttest/rng.hpp"
#include "disttest/siirv.hpp"

namespace disttest {

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MleResult {
  Pmf pmf;                            // log-concave, normalized over its window
  std::vector<LogLinearPiece> pieces; // expand to pmf (absolute-x parameters)
  double loglik = 0;
  long iterations = 0;
};

/// Discrete log-concave maximum likelihood: maximize sum c(x) phi(x) -
/// N log sum e^{phi(x)} over concave phi. The concave cone is parameterized
/// exactly by a base slope plus nonnegative downward kinks, so projected
/// gradient ascent needs only an orthant projection.
inline MleResult logconcave_mle(const std::vector<std::int64_t>& counts, std::int64_t offset,
                                const ConstantLedger& ledger = {}) {
  // trim to the observed range; the MLE has no mass outside it
  std::size_t first = counts.size(), last = 0;
  double n_total = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0) throw std::invalid_argument("logconcave_mle: negative count");
    if (counts[i] > 0) {
      first = std::min(first, i);
      last = std::max(last, i);
      n_total += static_cast<double>(counts[i]);
    }
  }
  if (first == counts.size()) throw std::invalid_argument("logconcave_mle: empty histogram");
  const std::size_t w = last - first + 1;
  const std::int64_t lo = offset + static_cast<std::int64_t>(first);
  std::vector<double> c(w);
  for (std::size_t i = 0; i < w; ++i) c[i] = static_cast<double>(counts[first + i]);

  MleResult res;
  if (w == 1) {
    res.pmf = Pmf{lo, {1.0}, true};
    res.pieces = {{lo, lo, 0.0, 0.0}};
    res.loglik = 0.0;
    return res;
  }

  // Ascent over the slope sequence d (concavity = d non-increasing), with the
  // pool-adjacent-violators projection, which is the exact L2 projection onto
  // that cone. phi is the cumulative sum of d anchored at phi[0] = 0; the
  // objective is shift-invariant so the anchor is free.
  std::vector<double> d(w - 1, 0.0);
  std::vector<double> phi(w), prob(w), resid(w);

  auto objective = [&]() {
    phi[0] = 0.0;
    for (std::size_t x = 1; x < w; ++x) phi[x] = phi[x - 1] + d[x - 1];
    double mx = phi[0];
    for (double v : phi) mx = std::max(mx, v);
    double z = 0;
    for (double v : phi) z += std::exp(v - mx);
    double logz = mx + std::log(z);
    double obj = -n_total * logz;
    for (std::size_t x = 0; x < w; ++x) {
      obj += c[x] * phi[x];
      prob[x] = std::exp(phi[x] - logz);
    }
    return obj;
  };

  // exact L2 projection onto non-increasing sequences (PAVA on -d)
  std::vector<double> pool_val, pool_wgt;
  std::vector<std::size_t> pool_len;
  auto project_nonincreasing = [&](std::vector<double>& v) {
    pool_val.clear();
    pool_wgt.clear();
    pool_len.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      double val = v[i];
      double wgt = 1.0;
      std::size_t len = 1;
      while (!pool_val.empty() && pool_val.back() < val) {
        val = (val * wgt + pool_val.back() * pool_wgt.back()) / (wgt + pool_wgt.back());
        wgt += pool_wgt.back();
        len += pool_len.back();
        pool_val.pop_back();
        pool_wgt.pop_back();
        pool_len.pop_back();
      }
      pool_val.push_back(val);
      pool_wgt.push_back(wgt);
      pool_len.push_back(len);
    }
    std::size_t pos = 0;
    for (std::size_t p = 0; p < pool_val.size(); ++p)
      for (std::size_t r = 0; r < pool_len[p]; ++r) v[pos++] = pool_val[p];
  };

  double obj = objective();
  double step = 1.0 / n_total;
  std::vector<double> grad(w - 1), cand(w - 1), saved(w - 1);
  long iter = 0;
  long stall_streak = 0;
  const double tol = ledger.mle_tol * std::max(1.0, n_total);
  for (; iter < ledger.mle_iter_cap; ++iter) {
    for (std::size_t x = 0; x < w; ++x) resid[x] = c[x] - n_total * prob[x];
    // d_i moves phi[x] for all x > i: grad_i = suffix sum of residuals
    double suffix = 0;
    for (std::size_t i = w - 1; i-- > 0;) {
      suffix += resid[i + 1];
      grad[i] = suffix;
    }

    // KKT residual for the monotone cone: strictly decreasing slopes need
    // zero gradient; within a tied block, the block total must vanish and no
    // feasible within-block direction (non-increasing perturbation, i.e.
    // positive prefix sums) may ascend.
    double pg = 0;
    for (std::size_t start = 0; start < w - 1;) {
      std::size_t end = start;
      double block = grad[start];
      while (end + 1 < w - 1 && std::fabs(d[end + 1] - d[start]) < 1e-12) {
        ++end;
        block += grad[end];
      }
      pg = std::max(pg, std::fabs(block));
      double prefix = 0;
      for (std::size_t i = start; i < end; ++i) {
        prefix += grad[i];
        pg = std::max(pg, std::max(prefix, 0.0));
      }
      start = end + 1;
    }
    if (pg <= tol) break;

    bool improved = false;
    double before = obj;
    for (int bt = 0; bt < 70 && !improved; ++bt) {
      for (std::size_t i = 0; i < w - 1; ++i) cand[i] = d[i] + step * grad[i];
      project_nonincreasing(cand);
      saved.swap(d);
      d = cand;
      double value = objective();
      if (value > obj) {
        improved = true;
        obj = value;
        step *= 1.7;
      } else {
        d.swap(saved);
        step *= 0.5;
      }
    }
    if (!improved) {
      // no representable ascent left at this point
      obj = objective();
      if (pg <= 1e-3 * std::max(1.0, n_total)) break;
      throw NumericalError("logconcave_mle: line search stalled before convergence");
    }
    if (obj - before <= 1e-13 * (1.0 + std::fabs(obj))) {
      if (++stall_streak > 100) break;  // progress below fp resolution
    } else {
      stall_streak = 0;
    }
  }
  if (iter >= ledger.mle_iter_cap)
    throw NumericalError("logconcave_mle: iteration cap reached without convergence");

  obj = objective();
  res.iterations = iter;
  res.pmf.offset = lo;
  res.pmf.weights.assign(w, 0.0);
  double total = 0;
  for (std::size_t x = 0; x < w; ++x) total += prob[x];
  for (std::size_t x = 0; x < w; ++x) res.pmf.weights[x] = prob[x] / total;
  res.pmf.normalized = true;

  // piecewise log-linear extraction from the active kinks
  double logz = 0;
  {
    double mx = phi[0];
    for (double v : phi) mx = std::max(mx, v);
    double z = 0;
    for (double v : phi) z += std::exp(v - mx);
    logz = mx + std::log(z) + std::log(total);
  }
  // Disjoint log-linear segments from the runs of equal slope: the first run
  // [0, r1] keeps its closing point, later runs start one past the previous
  // boundary so the integer pieces partition the window.
  const double kink_tol = 1e-9;
  {
    std::size_t run_start = 0;  // index into d
    std::size_t piece_start = 0;
    for (std::size_t i = 1; i <= w - 1; ++i) {
      bool boundary = (i == w - 1) || std::fabs(d[i] - d[run_start]) > kink_tol;
      if (!boundary) continue;
      LogLinearPiece pc;
      pc.a = lo + static_cast<std::int64_t>(piece_start);
      pc.b = lo + static_cast<std::int64_t>(i);
      pc.beta = d[run_start];
      pc.alpha = (phi[piece_start] - logz) - pc.beta * static_cast<double>(pc.a);
      res.pieces.push_back(pc);
      piece_start = i + 1;
      run_start = i;
    }
  }

  res.loglik = 0;
  for (std::size_t x = 0; x < w; ++x)
    if (c[x] > 0) res.loglik += c[x] * std::log(res.pmf.weights[x]);
  return res;
}

struct FinalStatistic {
  double value = 0;
  double threshold = 0;          // 3 (eps/sqrt(M))^2 (m'/m)^2 + 1/m'
  double printed_threshold = 0;  // 3 m^2 eps^2, recorded as printed
  bool reject = false;
};

/// Algorithm 8 steps 9-10: value = ||Q'||^2 - ||Q'_hat 1_S||^2 / M +
/// ||Q'_hat 1_S - H_hat 1_S||^2 / M, compared against the dimensionally
/// consistent threshold; the printed 3 m^2 eps^2 is carried alongside.
inline FinalStatistic final_statistic(const std::vector<std::int64_t>& counts, std::int64_t anchor,
                                      long long m, long long m_prime, const MleResult& h,
                                      const std::vector<std::int64_t>& S, std::int64_t M,
                                      double epsilon) {
  FinalStatistic out;
  const double mp = static_cast<double>(m_prime);
  unsigned __int128 sq = 0;
  for (std::int64_t c : counts) sq += static_cast<unsigned __int128>(c) * static_cast<unsigned __int128>(c);
  const double l2_emp = static_cast<double>(sq) / (mp * mp);
  FourierCoeffs q_hat = dft_counts(counts, anchor, M, S, mp);
  FourierCoeffs h_hat = dft_piecewise_exponential(h.pieces, M, S);
  KahanSum diff;
  for (std::size_t i = 0; i < q_hat.size(); ++i)
    diff.add(std::norm(q_hat.values[i] - h_hat.at(q_hat.freqs[i])));
  const double Md = static_cast<double>(M);
  out.value = l2_emp - q_hat.l2_sq() / Md + diff.sum / Md;
  const double eps_prime = epsilon / std::sqrt(Md);
  const double ratio = mp / static_cast<double>(m);
  out.threshold = 3.0 * eps_prime * eps_prime * ratio * ratio + 1.0 / mp;
  out.printed_threshold =
      3.0 * static_cast<double>(m) * static_cast<double>(m) * epsilon * epsilon;
  out.reject = out.value > out.threshold;
  return out;
}

/// Exact out-of-band Fourier energy sum_{min(xi, M-xi) > ell} |P_hat(xi)|^2.
inline double logconcave_fourier_tail(const Pmf& p, std::int64_t M, std::int64_t ell) {
  FourierCoeffs c = dft_1d(mod_reduce(p, M), M);
  KahanSum tail;
  for (std::int64_t xi = 0; xi < M; ++xi)
    if (std::min(xi, M - xi) > ell) tail.add(std::norm(c.at(xi)));
  return tail.sum;
}

/// Algorithm 8 end-to-end.
inline TestReport test_logconcave(Sampler& sampler, long n, double epsilon, Rng& rng,
                                  const ConstantLedger& ledger = {}) {
  if (!(epsilon > 0 && epsilon <= 1))
    throw std::invalid_argument("test_logconcave: eps in (0,1]");
  TestReport rep;
  rep.klass = "logconcave";
  rep.n = n;
  rep.k = 1;
  rep.epsilon = epsilon;
  rep.ledger = ledger;

  Rng moments_rng = rng.child(1);
  Rng support_rng = rng.child(2);
  Rng mle_rng = rng.child(6);
  Rng final_rng = rng.child(7);

  // O(1) moment draws; sigma_tilde is 1 plus the sample standard deviation.
  const long long m0 = ledger.lc_moment_samples;
  rep.total_samples += m0;
  double sum = 0, sumsq = 0;
  for (long long i = 0; i < m0; ++i) {
    double x = static_cast<double>(sampler.draw(moments_rng));
    sum += x;
    sumsq += x * x;
  }
  const double mu = sum / static_cast<double>(m0);
  const double svar =
      std::max(0.0, (sumsq - static_cast<double>(m0) * mu * mu) / static_cast<double>(m0 - 1));
  const double sigma = 1.0 + std::sqrt(svar);
  rep.mu_tilde = mu;
  rep.sigma_tilde = sigma;

  const std::int64_t M =
      1 + 2 * static_cast<std::int64_t>(std::ceil(ledger.lc_m_c * sigma * std::log(1.0 / epsilon)));
  const std::int64_t anchor = static_cast<std::int64_t>(std::floor(mu)) - (M - 1) / 2;
  rep.big_m = M;

  // Effective support at the eps^2 scale.
  const long long m_sup =
      static_cast<long long>(std::ceil(ledger.lc_support_c / (epsilon * epsilon)));
  rep.total_samples += m_sup;
  long long outside = 0;
  for (long long i = 0; i < m_sup; ++i) {
    std::int64_t x = sampler.draw(support_rng);
    if (x < anchor || x > anchor + M - 1) ++outside;
  }
  if (static_cast<double>(outside) >=
      (9.0 / 40.0) * epsilon * epsilon * static_cast<double>(m_sup)) {
    rep.accept = false;
    rep.stage = Stage::SupportCheck;
    return rep;
  }

  // MLE over the samples landing in I.
  const long long m_mle = static_cast<long long>(
      std::ceil(ledger.lc_mle_c * std::log(static_cast<double>(M) / epsilon) /
                std::pow(epsilon, 2.5)));
  rep.total_samples += m_mle;
  std::vector<std::int64_t> hist(static_cast<std::size_t>(M), 0);
  for (long long i = 0; i < m_mle; ++i) {
    std::int64_t x = sampler.draw(mle_rng);
    if (x >= anchor && x <= anchor + M - 1) ++hist[static_cast<std::size_t>(x - anchor)];
  }
  MleResult mle;
  try {
    mle = logconcave_mle(hist, anchor, ledger);
  } catch (const NumericalError& err) {
    rep.accept = false;
    rep.stage = Stage::MleFailure;
    rep.extra["mle_error"] = err.what();
    return rep;
  } catch (const std::invalid_argument&) {
    rep.accept = false;
    rep.stage = Stage::MleFailure;
    return rep;
  }
  rep.hypothesis.kind = "mle-pieces";
  rep.hypothesis.pmf = mle.pmf;
  rep.hypothesis.pieces = mle.pieces;

  const double sigma_h = std::sqrt(moments(mle.pmf).variance);
  rep.extra["sigma_h"] = sigma_h;
  if (1.0 + sigma_h <= sigma / 2.0 || sigma_h >= 2.0 * sigma) {
    rep.accept = false;
    rep.stage = Stage::VarianceSanity;
    return rep;
  }

  const std::int64_t ell = static_cast<std::int64_t>(std::ceil(
      ledger.lc_freq_c * std::log2(1.0 / epsilon) * std::log2(1.0 / epsilon) /
      (epsilon * epsilon)));
  std::vector<std::int64_t> S = detail::lowfreq_set(M, std::min(ell, (M - 1) / 2));
  rep.s_size = static_cast<long long>(S.size());
  rep.b = ledger.lc_b_c / sigma;

  const long long m = static_cast<long long>(std::ceil(
      ledger.lc_final_c * std::sqrt(sigma) * std::log(1.0 / epsilon) / (epsilon * epsilon)));
  const long long m_prime = final_rng.poisson(static_cast<double>(m));
  rep.m = m;
  rep.m_prime = m_prime;
  rep.total_samples += m_prime;
  if (m_prime == 0) {
    rep.accept = false;
    rep.stage = Stage::PoissonOverflow;
    return rep;
  }
  std::vector<std::int64_t> counts(static_cast<std::size_t>(M), 0);
  for (long long i = 0; i < m_prime; ++i) {
    std::int64_t x = sampler.draw(final_rng);
    std::int64_t r = (x - anchor) % M;
    if (r < 0) r += M;
    ++counts[static_cast<std::size_t>(r)];
  }
  FinalStatistic fin = final_statistic(counts, anchor, m, m_prime, mle, S, M, epsilon);
  rep.extra["final_value"] = fin.value;
  rep.extra["final_threshold"] = fin.threshold;
  rep.extra["final_threshold_printed"] = fin.printed_threshold;
  rep.accept = !fin.reject;
  rep.stage = fin.reject ? Stage::FinalStatistic : Stage::None;
  return rep;
}

}  // namespace disttest
