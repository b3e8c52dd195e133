// Acceptance suite: one test per criterion, each printing its own pass/fail
#include <set>
// line through the gtest reporter and asserting its runtime budget.

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <complex>

#include "disttest/dist_spec.hpp"
#include "disttest/framework.hpp"
#include "disttest/l2_identity.hpp"
#include "disttest/logconcave.hpp"
#include "disttest/pmd.hpp"
#include "disttest/siirv.hpp"
#include "support/oracles.hpp"

using namespace disttest;

namespace {

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - t0)
               .count() /
           1000.0;
  }
};

double exact_l2(const Pmf& p, const Pmf& q) { return distances(p, q).l2; }

double exact_l2_sq_norm(const Pmf& p) {
  double s = 0;
  for (double w : p.weights) s += w * w;
  return s;
}

/// Rigorous TV lower bound from any distribution with spikes at 0 and `gap`
/// to PBD_n: if Q(0) = a then E[Q] <= ln(1/a), so Q(gap) <= ln(1/a)/gap by
/// Markov; TV >= max(1/2 - Q(0), 1/2 - Q(gap)), minimized over a.
double pbd_two_spike_tv_lower_bound(long gap) {
  double lb = 1.0;
  for (double a = 1e-6; a <= 1.0; a += 1e-6) {
    double q_gap = std::log(1.0 / a) / static_cast<double>(gap);
    double bound = std::max(0.5 - a, 0.5 - std::min(1.0, q_gap));
    lb = std::min(lb, bound);
  }
  return lb;
}

/// Rigorous TV lower bound from the composition-uniform distribution to
/// PMD_{n,2}: the first coordinate of any member is a PBD with variance at
/// most n/4, so by Chebyshev it puts 3/4 of its mass on a window of width
/// 4 sqrt(n/4) + 1, where the uniform puts at most that width / (n+1).
double comp_uniform_tv_lower_bound(long n) {
  double width = 4.0 * std::sqrt(static_cast<double>(n) / 4.0) + 1.0;
  return 0.75 - width / static_cast<double>(n + 1);
}

/// Rigorous TV lower bound from the two-spike mixture (mass 1/2 at both ends
/// of a window with `gap` interior points) to any unimodal distribution:
/// interior values dominate min of the endpoints.
double two_spike_unimodal_tv_lower_bound(long gap) {
  double lb = 1.0;
  for (double a = 0; a <= 1.0; a += 1e-3) {
    for (double b = 0; b <= 1.0 - a + 1e-12; b += 1e-3) {
      double interior = static_cast<double>(gap) * std::min(a, b);
      if (a + b + interior > 1.0 + 1e-9) continue;
      double v = (std::fabs(0.5 - a) + std::fabs(0.5 - b) + interior) / 2.0;
      lb = std::min(lb, v);
    }
  }
  return lb;
}

}  // namespace

// Criterion 1: Plancherel residual, inversion round trip, lattice DFT at k=1.
TEST(Acceptance, Criterion01_FourierCorrectness) {
  Stopwatch watch;
  Rng rng(101);
  for (int t = 0; t < 100; ++t) {
    std::int64_t M = 2 + static_cast<std::int64_t>(rng.below(127));
    Pmf p = oracles::random_pmf(rng, 0, static_cast<std::size_t>(M));
    ASSERT_LT(plancherel_residual(p, M), 1e-10);

    InversionResult inv = inverse_dft_1d(dft_1d(p, M), 0);
    for (std::int64_t j = 0; j < M; ++j) ASSERT_NEAR(inv.pmf.at(j), p.at(j), 1e-10);
  }
  for (int t = 0; t < 20; ++t) {
    std::int64_t M = 5 + static_cast<std::int64_t>(rng.below(40));
    Pmf p = oracles::random_pmf(rng, 0, static_cast<std::size_t>(M));
    LatticeBasis basis = LatticeBasis::diagonal({M});
    std::map<IntVec, double> dist;
    for (std::size_t i = 0; i < p.size(); ++i) dist[{static_cast<std::int64_t>(i)}] = p.weights[i];
    std::vector<IntVec> reps;
    for (std::int64_t xi = 0; xi < M; ++xi) reps.push_back({xi});
    LatticeFourierCoeffs lc = lattice_dft(dist, basis, reps);
    FourierCoeffs c1 = dft_1d(p, M);
    for (std::size_t i = 0; i < reps.size(); ++i)
      ASSERT_LT(std::abs(lc.values[i] - c1.at(reps[i][0])), 1e-12);
  }
  EXPECT_LT(watch.seconds(), 5.0);
}

// Criterion 2: tolerant L2 tester at c = 61, ten pairs per case, rates >= 0.70
// over 400 trials each.
TEST(Acceptance, Criterion02_L2IdentityTester) {
  Stopwatch watch;
  ConstantLedger ledger;
  ASSERT_DOUBLE_EQ(ledger.l2_c, 61.0);
  const double eps = 0.2;
  const int trials = 400;

  std::vector<std::pair<Pmf, Pmf>> close_pairs;  // ||P - P*||_2 <= eps
  close_pairs.push_back({Pmf::uniform(0, 3), Pmf::uniform(0, 3)});
  close_pairs.push_back({Pmf::binomial(6, 0.5), Pmf::binomial(6, 0.5)});
  close_pairs.push_back({Pmf::binomial(10, 0.3), Pmf::binomial(10, 0.3)});
  close_pairs.push_back({Pmf::uniform(2, 11), Pmf::uniform(2, 11)});
  close_pairs.push_back({Pmf::binomial(20, 0.5), Pmf::binomial(20, 0.5)});
  {
    // perturbed pairs with small, exactly-computed L2 distance
    Pmf base = Pmf::uniform(0, 9);
    for (double bump : {0.02, 0.04, 0.06, 0.08, 0.10}) {
      Pmf shifted = base;
      shifted.weights[0] += bump;
      shifted.weights[9] -= bump;
      close_pairs.push_back({base, shifted});
    }
  }
  ASSERT_EQ(close_pairs.size(), 10u);

  std::vector<std::pair<Pmf, Pmf>> far_pairs;  // ||P - P*||_2 >= 2 eps
  far_pairs.push_back({Pmf::point_mass(0), Pmf::point_mass(1)});
  far_pairs.push_back({Pmf::point_mass(3), Pmf::point_mass(9)});
  far_pairs.push_back({Pmf{0, {0.5, 0.5}, true}, Pmf::point_mass(0)});
  far_pairs.push_back({Pmf{0, {0.9, 0.1}, true}, Pmf{0, {0.1, 0.9}, true}});
  far_pairs.push_back({Pmf::point_mass(0), Pmf::uniform(0, 9)});
  far_pairs.push_back({Pmf{0, {0.7, 0.3}, true}, Pmf{0, {0.3, 0.7}, true}});
  far_pairs.push_back({Pmf{0, {0.6, 0.4}, true}, Pmf{0, {0.1, 0.9}, true}});
  far_pairs.push_back({Pmf::binomial(2, 0.5), Pmf::point_mass(1)});
  far_pairs.push_back({Pmf{0, {0.8, 0.2}, true}, Pmf{0, {0.2, 0.8}, true}});
  far_pairs.push_back({Pmf::binomial(1, 0.95), Pmf::binomial(1, 0.05)});
  ASSERT_EQ(far_pairs.size(), 10u);

  Rng rng(202);
  for (std::size_t pi = 0; pi < close_pairs.size(); ++pi) {
    auto& [p, pstar] = close_pairs[pi];
    ASSERT_LE(exact_l2(p, pstar), eps);  // exact case-(a) verification
    double b = std::max(exact_l2_sq_norm(p), exact_l2_sq_norm(pstar));
    PmfSampler sampler(p);
    int accepts = 0;
    for (int t = 0; t < trials; ++t) {
      Rng r = rng.child(pi * 10000 + t);
      if (tolerant_l2_test(sampler, pstar, eps, b, r, ledger).accept) ++accepts;
    }
    EXPECT_GE(accepts, static_cast<int>(trials * 0.70)) << "close pair " << pi;
  }
  for (std::size_t pi = 0; pi < far_pairs.size(); ++pi) {
    auto& [p, pstar] = far_pairs[pi];
    ASSERT_GE(exact_l2(p, pstar), 2 * eps);  // exact case-(b) verification
    double b = std::max(exact_l2_sq_norm(p), exact_l2_sq_norm(pstar));
    PmfSampler sampler(p);
    int rejects = 0;
    for (int t = 0; t < trials; ++t) {
      Rng r = rng.child(500000 + pi * 10000 + t);
      if (!tolerant_l2_test(sampler, pstar, eps, b, r, ledger).accept) ++rejects;
    }
    EXPECT_GE(rejects, static_cast<int>(trials * 0.70)) << "far pair " << pi;
  }
  EXPECT_LT(watch.seconds(), 120.0);
}

// Criterion 3: the Fourier-sparsity tester on Bin(40,0.5) mod M with the
// SIIRV-derived (M, S, b), and on a planted high-frequency perturbation.
TEST(Acceptance, Criterion03_FourierSparsityTester) {
  Stopwatch watch;
  ConstantLedger ledger;
  const double eps = 0.25;
  const int trials = 300;

  // SIIRV-derived parameters from the exact moments of Bin(40, 0.5)
  const double sigma_tilde = std::sqrt(10.0 + 1.0);
  const std::int64_t M =
      1 + 2 * static_cast<std::int64_t>(std::ceil(4.0 * sigma_tilde * std::sqrt(std::log(4.0 / eps))));
  SparseFreqSet sparse = build_sparse_set(M, sigma_tilde, 2, eps, ledger);
  const double b = 16.0 * 2.0 / sigma_tilde;

  // completeness on Bin(40, 0.5) mod M
  Pmf reduced = mod_reduce(Pmf::binomial(40, 0.5), M);
  FourierCoeffs exact_q = dft_1d(reduced, M, sparse.entries);
  {
    PmfSampler sampler(reduced);
    Rng rng(303);
    int non_reject = 0, coeff_ok = 0;
    for (int t = 0; t < trials; ++t) {
      Rng r = rng.child(t);
      auto out = test_fourier_support_1d(sampler, M, sparse.entries, eps, b, r, ledger);
      if (out.rejected) continue;
      ++non_reject;
      double err = 0;
      for (std::size_t i = 0; i < sparse.entries.size(); ++i)
        err += std::norm(out.coeffs.values[i] - exact_q.at(sparse.entries[i]));
      if (std::sqrt(err) <= eps * std::sqrt(static_cast<double>(M)) / 10.0) ++coeff_ok;
    }
    EXPECT_GE(non_reject, static_cast<int>(trials * 0.65));
    EXPECT_GE(coeff_ok * 10, non_reject * 9);  // learned coefficients accurate in >= 90%
  }

  // soundness on a planted perturbation: point mass mixed into the uniform,
  // with exactly verified out-of-S energy above eps^2 (and above the printed
  // stage-2 threshold 3 eps^2, which is what the check actually compares)
  {
    const double w = 0.85;
    std::int64_t j0 = M / 3;
    Pmf planted = Pmf::uniform(0, M - 1);
    for (auto& weight : planted.weights) weight *= (1.0 - w);
    planted.weights[static_cast<std::size_t>(j0)] += w;
    planted.validate();
    FourierCoeffs full = dft_1d(planted, M);
    double out_energy = 0;
    for (std::int64_t xi = 0; xi < M; ++xi) {
      if (std::binary_search(sparse.entries.begin(), sparse.entries.end(), xi)) continue;
      out_energy += std::norm(full.at(xi));
    }
    out_energy /= static_cast<double>(M);
    ASSERT_GT(out_energy, eps * eps);  // exact verification of the planted energy
    ASSERT_GT(out_energy, 3.0 * eps * eps + 0.04);  // margin over the printed threshold

    PmfSampler sampler(planted);
    Rng rng(304);
    int rejects = 0;
    for (int t = 0; t < trials; ++t) {
      Rng r = rng.child(t);
      if (test_fourier_support_1d(sampler, M, sparse.entries, eps, b, r, ledger).rejected)
        ++rejects;
    }
    EXPECT_GE(rejects, static_cast<int>(trials * 0.65));
  }
  EXPECT_LT(watch.seconds(), 300.0);
}

// Criterion 4: structural lemmas on 50 random exact SIIRVs.
TEST(Acceptance, Criterion04_StructuralLemmas) {
  Stopwatch watch;
  Rng rng(404);
  int tested = 0;
  while (tested < 50) {
    SiirvSpec spec = oracles::random_siirv(rng, 40, 4);
    Pmf p = convolve_exact(spec);
    double s = std::sqrt(moments(p).variance);
    if (s < 1.0) continue;
    std::int64_t M = static_cast<std::int64_t>(std::ceil(s)) + 1 +
                     static_cast<std::int64_t>(rng.below(40));
    double delta = 0.05 + 0.4 * rng.unit();
    FourierTailCheck check = siirv_fourier_tail_bound(spec, M, delta);
    ASSERT_EQ(check.violations.size(), 0u);  // Lemma: |P_hat| <= delta outside L
    L2BoundCheck l2 = siirv_l2_bound_check(spec, M);
    ASSERT_LE(l2.lhs, l2.rhs);  // Claim: ||P mod M||_2^2 <= 8k/s
    ++tested;
  }
  EXPECT_LT(watch.seconds(), 60.0);
}

// Criterion 5: Test-SIIRV end to end at eps in {0.25, 0.1}, 100 trials each.
TEST(Acceptance, Criterion05_TestSiirvEndToEnd) {
  Stopwatch watch;
  ConstantLedger ledger;
  const int trials = 100;

  SiirvSpec hetero;
  hetero.n = 60;
  hetero.k = 3;
  hetero.groups = {{{0.1, 0.6, 0.3}, 20}, {{0.5, 0.25, 0.25}, 40}};
  hetero.validate();

  struct AcceptCase {
    const char* name;
    DistSpec spec;
    long n;
    int k;
  };
  std::vector<AcceptCase> accept_cases;
  accept_cases.push_back({"Bin(100,0.5)", DistSpec::from_siirv(SiirvSpec::iid(100, 2, {0.5, 0.5})),
                          100, 2});
  accept_cases.push_back({"Bin(400,0.1)", DistSpec::from_siirv(SiirvSpec::iid(400, 2, {0.9, 0.1})),
                          400, 2});
  accept_cases.push_back({"hetero-3siirv", DistSpec::from_siirv(hetero), 60, 3});

  Rng rng(505);
  for (double eps : {0.25, 0.1}) {
    for (std::size_t ci = 0; ci < accept_cases.size(); ++ci) {
      auto sampler = make_sampler(accept_cases[ci].spec);
      int accepts = 0;
      for (int t = 0; t < trials; ++t) {
        Rng r = rng.child(static_cast<std::uint64_t>(eps * 1000) * 100000 + ci * 1000 + t);
        if (test_siirv(*sampler, accept_cases[ci].n, accept_cases[ci].k, eps, r, ledger).accept)
          ++accepts;
      }
      EXPECT_GE(accepts, trials * 3 / 5) << accept_cases[ci].name << " eps=" << eps;
    }

    // far instance 1: uniform[0,400] against PBD_100; certified by support
    {
      Pmf uni = Pmf::uniform(0, 400);
      double outside = 300.0 / 401.0;  // PBD_100 lives on [0, 100]
      ASSERT_GT(outside, eps);
      PmfSampler sampler(uni);
      int rejects = 0;
      for (int t = 0; t < trials; ++t) {
        Rng r = rng.child(900000 + static_cast<std::uint64_t>(eps * 1000) * 1000 + t);
        if (!test_siirv(sampler, 100, 2, eps, r, ledger).accept) ++rejects;
      }
      EXPECT_GE(rejects, trials * 3 / 5) << "uniform[0,400] eps=" << eps;
    }

    // far instance 2: planted bimodal (spikes at 0 and 12), certified by the
    // mean/Markov argument
    {
      ASSERT_GT(pbd_two_spike_tv_lower_bound(12), eps);
      Pmf bimodal{0, std::vector<double>(13, 0.0), true};
      bimodal.weights[0] = 0.5;
      bimodal.weights[12] = 0.5;
      PmfSampler sampler(bimodal);
      int rejects = 0;
      for (int t = 0; t < trials; ++t) {
        Rng r = rng.child(950000 + static_cast<std::uint64_t>(eps * 1000) * 1000 + t);
        if (!test_siirv(sampler, 100, 2, eps, r, ledger).accept) ++rejects;
      }
      EXPECT_GE(rejects, trials * 3 / 5) << "bimodal eps=" << eps;
    }
  }
  EXPECT_LT(watch.seconds(), 1200.0);
}

// Criterion 6: n^{1/4} scaling of the PBD sample count between n = 64 and
// n = 1024 at the default constants.
TEST(Acceptance, Criterion06_SampleScaling) {
  Stopwatch watch;
  ConstantLedger ledger;
  const double eps = 0.25;
  const int trials = 5;
  Rng rng(606);

  auto mean_total = [&](long n) {
    auto sampler = make_sampler(DistSpec::from_siirv(SiirvSpec::iid(n, 2, {0.5, 0.5})));
    double total = 0;
    for (int t = 0; t < trials; ++t) {
      Rng r = rng.child(static_cast<std::uint64_t>(n) * 100 + t);
      TestReport rep = test_siirv(*sampler, n, 2, eps, r, ledger);
      total += static_cast<double>(rep.total_samples);
    }
    return total / trials;
  };

  double t64 = mean_total(64);
  double t1024 = mean_total(1024);
  double ratio = t1024 / t64;
  // The criterion band as stated. At the pinned constants the two n land in
  // different variance branches of Algorithm Test-SIIRV, so this assertion
  // documents the measured ratio rather than being expected to hold; see the
  // supplementary big-branch check below for the n^{1/4} behaviour itself.
  EXPECT_GE(ratio, 1.5) << "t64=" << t64 << " t1024=" << t1024;
  EXPECT_LE(ratio, 6.0) << "t64=" << t64 << " t1024=" << t1024;

  // Supplementary: within the big-variance branch the Fourier-stage budget
  // scales like n^{1/4}: ratio for n in {4096, 16384} close to 4^{1/4}.
  double t4096 = mean_total(4096);
  double t16384 = mean_total(16384);
  double big_ratio = t16384 / t4096;
  EXPECT_GE(big_ratio, 1.1);
  EXPECT_LE(big_ratio, 2.0);
  EXPECT_LT(watch.seconds(), 600.0);
}

// Criterion 7: Test-PMD at desk scale (k = 2).
TEST(Acceptance, Criterion07_TestPmd) {
  Stopwatch watch;
  ConstantLedger ledger;
  const double eps = 0.3;
  const long n = 40;
  const int trials = 50;
  Rng rng(707);

  // completeness on an i.i.d.-categorical PMD
  {
    PmdSpec spec = PmdSpec::iid(n, 2, {0.5, 0.5});
    auto sampler = make_sampler_kd(DistSpec::from_pmd(spec));
    int accepts = 0;
    for (int t = 0; t < trials; ++t) {
      Rng r = rng.child(t);
      if (test_pmd(*sampler, n, 2, eps, r, ledger).accept) ++accepts;
    }
    EXPECT_GE(accepts, trials * 3 / 5);
  }

  // soundness on the composition-uniform instance, certified far
  {
    ASSERT_GT(comp_uniform_tv_lower_bound(n), eps);
    struct CompUniform final : SamplerKD {
      long n;
      explicit CompUniform(long n) : n(n) {}
      void draw(Rng& r, std::vector<std::int64_t>& out) override {
        std::int64_t a = static_cast<std::int64_t>(r.below(static_cast<std::uint64_t>(n + 1)));
        out = {a, n - a};
      }
      int dim() const override { return 2; }
    } far(n);
    const int far_trials = 25;
    int rejects = 0;
    for (int t = 0; t < far_trials; ++t) {
      Rng r = rng.child(10000 + t);
      if (!test_pmd(far, n, 2, eps, r, ledger).accept) ++rejects;
    }
    EXPECT_GE(rejects, far_trials * 3 / 5);
  }

  // Prop 7.1 structural check on exact desk instances: out-of-S L1 mass of
  // the lattice DFT over the full dual quotient stays below eps/10, and the
  // squared (L2) version below eps^2/100.
  {
    for (double q0 : {0.5, 0.3}) {
      PmdSpec spec = PmdSpec::iid(n, 2, {q0, 1.0 - q0});
      CovEstimates exact;
      exact.mu_hat = spec.exact_mean();
      exact.sigma_hat = spec.exact_covariance();
      jacobi_eigen(exact.sigma_hat, exact.eigvals, exact.eigvecs);
      LatticeBasis basis = build_lattice(exact, 2, eps, ledger);

      const double lg = std::log2(2.0 / eps);
      const double radius = ledger.pmd_lattice_c * ledger.pmd_lattice_c * 4.0 * lg;
      std::vector<IntVec> S = lattice_dual_ball(basis, radius);

      // all residues of the dual quotient: a ball wide enough to reach every
      // class, capped by dedup at det(M) classes
      double wide = 0;
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) wide += std::fabs(static_cast<double>(basis.cols[c][r]));
      std::vector<IntVec> all = lattice_dual_ball(basis, wide);
      ASSERT_EQ(static_cast<double>(all.size()), std::round(std::fabs(basis.det)));

      MultiPmf pmf = convolve_exact_pmd(spec);
      std::map<IntVec, double> reduced;
      for (auto& [pt, wgt] : pmf.entries) {
        IntVec x(pt.begin(), pt.end());
        reduced[fundamental_reduce(x, basis, exact.mu_hat)] += wgt;
      }
      LatticeFourierCoeffs coeffs = lattice_dft(reduced, basis, all);
      std::set<IntVec> in_s;
      for (const auto& v : S) in_s.insert(canonical_dual_residue(basis, v));
      double l1 = 0, l2 = 0;
      for (std::size_t i = 0; i < all.size(); ++i) {
        if (in_s.count(canonical_dual_residue(basis, all[i]))) continue;
        l1 += std::abs(coeffs.values[i]);
        l2 += std::norm(coeffs.values[i]);
      }
      // At desk scale the printed radius covers the whole dual quotient (it
      // must: the coefficients along the sum-direction characters never
      // decay), so the out-of-S mass is exactly zero.
      EXPECT_LT(l1, eps / 10.0) << "q0=" << q0;
      EXPECT_LT(l2, eps * eps / 100.0) << "q0=" << q0;
    }
  }

  // Hadamard and rank-deficiency invariants over 50 random runs.
  {
    for (int t = 0; t < 50; ++t) {
      Rng r = rng.child(20000 + t);
      double q0 = 0.2 + 0.6 * r.unit();
      long nn = 20 + static_cast<long>(r.below(80));
      PmdSpec spec = PmdSpec::iid(nn, 2, {q0, 1.0 - q0});
      auto sampler = make_sampler_kd(DistSpec::from_pmd(spec));
      CovEstimates est = estimate_mean_cov(*sampler, 2, r, ledger);
      std::vector<double> vals = est.eigvals;
      std::sort(vals.begin(), vals.end());
      ASSERT_LE(std::fabs(vals[0]), 0.05 * std::max(std::fabs(vals[1]), 1.0));
      LatticeBasis basis = build_lattice(est, 2, 0.3, ledger);
      double prod = 1;
      for (int i = 0; i < 2; ++i) {
        double norm = 0;
        for (int rr = 0; rr < 2; ++rr)
          norm += static_cast<double>(basis.cols[i][rr]) * static_cast<double>(basis.cols[i][rr]);
        prod *= std::sqrt(norm);
      }
      ASSERT_LE(std::fabs(basis.det), prod + 1e-9);
    }
  }
  EXPECT_LT(watch.seconds(), 1200.0);
}

// Criterion 8: hard-instance norms.
TEST(Acceptance, Criterion08_HardInstanceNorms) {
  Stopwatch watch;
  LbNorms n22 = norms_for_lb(hard_instance(2, 2));
  EXPECT_NEAR(n22.l2_sq, 3.0 / 8.0, 1e-14);

  for (long n : {50L, 100L, 200L}) {
    LbNorms norms = norms_for_lb(hard_instance(n, 2));
    double richmond_shallit = std::pow(2.0, 1.0) / std::sqrt(4.0 * M_PI * static_cast<double>(n));
    double ratio = norms.l2_sq / richmond_shallit;
    EXPECT_GE(ratio, 0.5) << "n=" << n;
    EXPECT_LE(ratio, 2.0) << "n=" << n;
  }

  Rng rng(808);
  for (int t = 0; t < 30; ++t) {
    long n = 2 + static_cast<long>(rng.below(15));
    int k = 2 + static_cast<int>(rng.below(2));
    std::vector<double> q(k);
    double total = 0;
    for (auto& x : q) {
      x = rng.unit() + 0.05;
      total += x;
    }
    for (auto& x : q) x /= total;
    LbNorms norms = norms_for_lb(PmdSpec::iid(n, k, q));  // Holder asserted inside
    EXPECT_GE(norms.two_thirds, 1.0 / std::sqrt(norms.l2_sq) - 1e-12);
  }
  EXPECT_LT(watch.seconds(), 120.0);
}

// Criterion 9: log-concave MLE quality.
TEST(Acceptance, Criterion09_LogconcaveMle) {
  Stopwatch watch;
  ConstantLedger ledger;
  Rng rng(909);

  // structural sanity on random histograms
  for (int t = 0; t < 50; ++t) {
    Rng r = rng.child(t);
    std::size_t w = 2 + r.below(40);
    std::vector<std::int64_t> counts(w, 0);
    for (std::size_t i = 0; i < w; ++i) counts[i] = static_cast<std::int64_t>(r.below(60));
    counts[0] = std::max<std::int64_t>(counts[0], 1);
    counts[w - 1] = std::max<std::int64_t>(counts[w - 1], 1);
    MleResult res = logconcave_mle(counts, 0, ledger);
    ASSERT_TRUE(is_logconcave(res.pmf, 1e-9));
    ASSERT_TRUE(is_unimodal(res.pmf, 1e-12));
  }

  // grid-search oracle on 3-5 point windows: a shrinking-mesh pattern search
  // over pmfs, independent of the solver's parameterization
  std::vector<std::vector<std::int64_t>> windows{
      {1, 2, 1}, {2, 1, 2}, {1, 3, 3, 1}, {4, 1, 1, 4}, {1, 2, 5, 2, 1}, {3, 1, 4, 1, 3}};
  for (const auto& counts : windows) {
    MleResult res = logconcave_mle(counts, 0, ledger);
    double got = 0;
    for (std::size_t i = 0; i < counts.size(); ++i)
      got += static_cast<double>(counts[i]) * std::log(res.pmf.weights[i]);
    double best = oracles::logconcave_loglik_oracle(counts);
    EXPECT_NEAR(got, best, 1e-5);
  }

  // Hellinger^2 consistency: mean over 50 trials decreases by >= 2x from
  // m = 500 to m = 8000, non-increasing through m = 2000
  Pmf target = Pmf::binomial(30, 0.5);
  PmfSampler sampler(target);
  auto mean_hellinger_sq = [&](int m, std::uint64_t salt) {
    double total = 0;
    for (int t = 0; t < 50; ++t) {
      Rng r = rng.child(salt + t);
      std::vector<std::int64_t> counts(31, 0);
      for (int i = 0; i < m; ++i) ++counts[static_cast<std::size_t>(sampler.draw(r))];
      MleResult res = logconcave_mle(counts, 0, ledger);
      double h = distances(res.pmf, target).hellinger;
      total += h * h;
    }
    return total / 50.0;
  };
  double h500 = mean_hellinger_sq(500, 100000);
  double h2000 = mean_hellinger_sq(2000, 200000);
  double h8000 = mean_hellinger_sq(8000, 300000);
  EXPECT_LE(h2000, h500 + 1e-12);
  EXPECT_LE(h8000, h2000 + 1e-12);
  EXPECT_LE(h8000, h500 / 2.0);
  EXPECT_LT(watch.seconds(), 600.0);
}

// Criterion 10: Test-log-concave end to end.
TEST(Acceptance, Criterion10_TestLogconcave) {
  Stopwatch watch;
  ConstantLedger ledger;
  const int trials = 100;
  Rng rng(1010);

  // accept: Bin(200, 0.5) at eps = 0.3
  {
    PmfSampler sampler(Pmf::binomial(200, 0.5));
    int accepts = 0;
    for (int t = 0; t < trials; ++t) {
      Rng r = rng.child(t);
      if (test_logconcave(sampler, 200, 0.3, r, ledger).accept) ++accepts;
    }
    EXPECT_GE(accepts, trials * 3 / 5);
  }

  // accept: geometric(0.3) truncated to [0, 60]
  {
    Pmf geo{0, std::vector<double>(61), true};
    double total = 0;
    for (int j = 0; j <= 60; ++j) {
      geo.weights[j] = 0.3 * std::pow(0.7, j);
      total += geo.weights[j];
    }
    for (auto& w : geo.weights) w /= total;
    ASSERT_TRUE(is_logconcave(geo));
    PmfSampler sampler(geo);
    int accepts = 0;
    for (int t = 0; t < trials; ++t) {
      Rng r = rng.child(10000 + t);
      if (test_logconcave(sampler, 61, 0.3, r, ledger).accept) ++accepts;
    }
    EXPECT_GE(accepts, trials * 3 / 5);
  }

  // reject: two-spike mixture, certified > 0.2 far from every log-concave
  // (hence unimodal) distribution
  {
    ASSERT_GT(two_spike_unimodal_tv_lower_bound(39), 0.2);
    Pmf spikes{0, std::vector<double>(41, 0.0), true};
    spikes.weights[0] = 0.5;
    spikes.weights[40] = 0.5;
    PmfSampler sampler(spikes);
    int rejects = 0;
    for (int t = 0; t < trials; ++t) {
      Rng r = rng.child(20000 + t);
      if (!test_logconcave(sampler, 41, 0.2, r, ledger).accept) ++rejects;
    }
    EXPECT_GE(rejects, trials * 3 / 5);
  }

  // piecewise-exponential DFT closed form against the naive DFT
  {
    Rng r = rng.child(30000);
    std::vector<std::int64_t> counts(37, 0);
    PmfSampler sampler(Pmf::binomial(36, 0.4));
    for (int i = 0; i < 3000; ++i) ++counts[static_cast<std::size_t>(sampler.draw(r))];
    MleResult res = logconcave_mle(counts, 0, ledger);
    const std::int64_t M = 81;
    FourierCoeffs fast = dft_piecewise_exponential(res.pieces, M, all_frequencies(M));
    FourierCoeffs slow = dft_1d(res.pmf, M);
    for (std::int64_t xi = 0; xi < M; ++xi)
      ASSERT_LT(std::abs(fast.at(xi) - slow.at(xi)), 1e-9);
  }
  EXPECT_LT(watch.seconds(), 900.0);
}

// Criterion 11: the generic framework.
TEST(Acceptance, Criterion11_GenericFramework) {
  Stopwatch watch;
  ConstantLedger ledger;
  Rng rng(1111);
  const int trials = 100;

  // demo plugin completeness and soundness
  {
    const std::int64_t L = 100;
    ClassPlugin plugin = make_uniform_interval_plugin(L);
    const double eps = 0.75;

    PmfSampler in_class(Pmf::uniform(37, 37 + L - 1));
    int accepts = 0;
    for (int t = 0; t < trials; ++t) {
      Rng r = rng.child(t);
      if (test_class(in_class, plugin, eps, r, ledger).accept) ++accepts;
    }
    EXPECT_GE(accepts, trials * 3 / 5);

    // far: two separated blocks; TV from any interval uniform of length in
    // [L/2, L] is at least 1/4 (one block is always missed by >= half), and
    // the certified value for this geometry is far above eps/... the demo
    // soundness instance is checked at the same eps
    Pmf blocks{0, std::vector<double>(201, 0.0), true};
    for (int j = 0; j < 10; ++j) blocks.weights[j] = 0.5 / 10.0;
    for (int j = 191; j <= 200; ++j) blocks.weights[j] = 0.5 / 10.0;
    double far_lb = 1.0;
    for (std::int64_t len = L / 2; len <= L; ++len) {
      for (std::int64_t a = 0; a + len - 1 <= 200; ++a) {
        Pmf uni = Pmf::uniform(a, a + len - 1);
        far_lb = std::min(far_lb, distances(blocks, uni).tv);
      }
    }
    ASSERT_GT(far_lb, eps);
    PmfSampler far(blocks);
    int rejects = 0;
    for (int t = 0; t < trials; ++t) {
      Rng r = rng.child(10000 + t);
      if (!test_class(far, plugin, eps, r, ledger).accept) ++rejects;
    }
    EXPECT_GE(rejects, trials * 3 / 5);

    // default-b inequality on exact in-class instances
    for (double e2 : {0.5, 0.75, 1.0}) {
      std::vector<std::int64_t> S = plugin.s_of(e2);
      std::int64_t M = plugin.m_of(e2);
      for (std::int64_t len = L / 2; len <= L; len += 5) {
        double l2 = 1.0 / static_cast<double>(len);
        EXPECT_LE(l2,
                  (static_cast<double>(S.size()) + e2 * e2 / 100.0) / static_cast<double>(M));
      }
    }
  }

  // SIIRV plugin against the big-variance branch of Algorithm Test-SIIRV on
  // paired seeds
  {
    const long n = 1024;
    const double eps = 0.25;
    auto sampler = make_sampler(DistSpec::from_siirv(SiirvSpec::iid(n, 2, {0.5, 0.5})));
    ClassPlugin plugin = make_siirv_plugin(n, 2, 16.0, ledger);
    int agree = 0;
    const int pairs = 40;
    for (int t = 0; t < pairs; ++t) {
      Rng r1 = rng.child(20000 + t);
      Rng r2 = rng.child(20000 + t);
      bool a = test_siirv(*sampler, n, 2, eps, r1, ledger).accept;
      bool b = test_class(*sampler, plugin, eps, r2, ledger).accept;
      if (a == b) ++agree;
    }
    EXPECT_GE(agree * 100, pairs * 95);
  }
  EXPECT_LT(watch.seconds(), 600.0);
}

// Criterion 12: determinism and report schema.
TEST(Acceptance, Criterion12_DeterminismAndSchema) {
  Stopwatch watch;
  ConstantLedger ledger;

  auto validate_schema = [](const nlohmann::json& j) {
    ASSERT_EQ(j.at("schema"), "disttest/1");
    ASSERT_TRUE(j.at("verdict") == "accept" || j.at("verdict") == "reject");
    const std::vector<std::string> stages{
        "none", "variance-gate", "support-check", "poisson-overflow", "norm-check",
        "sparsity-check", "projection", "moment-infeasible", "variance-sanity",
        "mle-failure", "final-statistic", "geometry"};
    ASSERT_NE(std::find(stages.begin(), stages.end(), j.at("stage").get<std::string>()),
              stages.end());
    for (const char* key : {"seed", "n", "k", "epsilon", "total_samples", "m", "m_prime", "M",
                            "S_size", "b", "det_M", "mu_tilde", "sigma_tilde"}) {
      ASSERT_TRUE(j.contains(key)) << key;
      ASSERT_TRUE(j.at(key).is_number()) << key;
      double v = j.at(key).get<double>();
      ASSERT_TRUE(std::isfinite(v)) << key;
    }
    ASSERT_TRUE(j.contains("hypothesis"));
    ASSERT_TRUE(j.contains("ledger"));
    ASSERT_TRUE(j.contains("rng_split_map"));
  };

  // byte-identical reruns and schema validity across the tester classes
  {
    auto sampler = make_sampler(DistSpec::from_siirv(SiirvSpec::iid(50, 2, {0.5, 0.5})));
    Rng r1(42), r2(42);
    TestReport a = test_siirv(*sampler, 50, 2, 0.3, r1, ledger);
    auto sampler2 = make_sampler(DistSpec::from_siirv(SiirvSpec::iid(50, 2, {0.5, 0.5})));
    TestReport b = test_siirv(*sampler2, 50, 2, 0.3, r2, ledger);
    a.seed = b.seed = 42;
    EXPECT_EQ(a.to_json().dump(2), b.to_json().dump(2));
    validate_schema(a.to_json());
  }
  {
    PmfSampler sampler(Pmf::binomial(100, 0.5));
    Rng r1(7), r2(7);
    TestReport a = test_logconcave(sampler, 100, 0.3, r1, ledger);
    PmfSampler sampler2(Pmf::binomial(100, 0.5));
    TestReport b = test_logconcave(sampler2, 100, 0.3, r2, ledger);
    EXPECT_EQ(a.to_json().dump(2), b.to_json().dump(2));
    validate_schema(a.to_json());
  }
  {
    PmdSpec spec = PmdSpec::iid(20, 2, {0.5, 0.5});
    auto s1 = make_sampler_kd(DistSpec::from_pmd(spec));
    auto s2 = make_sampler_kd(DistSpec::from_pmd(spec));
    Rng r1(9), r2(9);
    TestReport a = test_pmd(*s1, 20, 2, 0.4, r1, ledger);
    TestReport b = test_pmd(*s2, 20, 2, 0.4, r2, ledger);
    EXPECT_EQ(a.to_json().dump(2), b.to_json().dump(2));
    validate_schema(a.to_json());
  }
  {
    ClassPlugin plugin = make_uniform_interval_plugin(40);
    PmfSampler sampler(Pmf::uniform(5, 34));
    Rng r1(11), r2(11);
    PmfSampler sampler2(Pmf::uniform(5, 34));
    TestReport a = test_class(sampler, plugin, 0.8, r1, ledger);
    TestReport b = test_class(sampler2, plugin, 0.8, r2, ledger);
    EXPECT_EQ(a.to_json().dump(2), b.to_json().dump(2));
    validate_schema(a.to_json());
  }
  EXPECT_LT(watch.seconds(), 60.0);
}
