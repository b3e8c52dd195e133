#pragma once

#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace disttest {

/// Every tunable constant used by the testers, in one place. The defaults are
/// the values the test suite is calibrated against; a ledger snapshot is
/// embedded in every TestReport so a run can be reproduced exactly.
struct ConstantLedger {
  // Tolerant L2 identity tester (Algorithm 2).
  double l2_c = 61.0;  // sample multiplier, m = ceil(c*sqrt(b)/eps^2)

  // Fourier effective-support tester (Algorithms 1 and 6).
  double sparsity_c_1d = 2000.0;
  double sparsity_c_lattice = 2000.0;

  // SIIRV tester (Algorithm 3).
  double siirv_c_prime = 2.0;        // C' in the frequency-set radius
  double siirv_c_dprime = 10.0;      // C'' in the delta definition
  double siirv_emp_c = 4.0;          // empirical-learning multiplier, N = C|S|/eps^2
  double support_check_c = 720.0;    // samples = ceil(c/eps) for the mass check
  int moment_samples_per_k = 800;    // m = 800k draws for mean/variance

  // Projection step.
  double proj_lowfreq_c = 3.0;       // ell = ceil(c*log2(1/eps)) for small-branch checks
  double pbd_alpha = 1.0;            // small/large variance split at alpha/eps^2
  long pbd_search_budget = 20000;    // extra multi-value candidates beyond the exhaustive scan
  double pbd_fit_c = 8.0;            // shifted-binomial fit samples = ceil(c|S|/eps^2)
  long cover_budget = 200000;        // enumeration cap for desk covers

  // PMD tester (Algorithm 7).
  int pmd_cov_c = 50;                // m0 = c*k^4 samples for mean/covariance
  double pmd_lattice_c = 3.0;        // C in the lattice column scaling and dual radius C^2k^2 log
  double pmd_support_c = 20.0;       // samples = ceil(c/eps) for the strict domain check
  bool pmd_support_count_based = false;  // use the (eps/5, eps/4) count rule instead of any-outside
  double pmd_cover_mesh = 0.002;     // simplex grid mesh for the desk PMD cover

  // Log-concavity tester (Algorithm 8).
  int lc_moment_samples = 200;
  double lc_m_c = 4.0;               // M = 1 + 2*ceil(c*sigma*ln(1/eps))
  double lc_support_c = 720.0;       // samples = ceil(c/eps^2) for the mass check
  double lc_mle_c = 20.0;            // MLE samples = ceil(c*ln(M/eps)/eps^(5/2))
  double lc_freq_c = 1.0;            // S radius = ceil(c*log2(1/eps)^2/eps^2)
  double lc_final_c = 850.0;         // final-stage m = ceil(c*sqrt(sigma)*ln(1/eps)/eps^2)
  double lc_b_c = 3.0;               // L2-norm bound b = c/sigma for the final stage
  double lc_tail_theta = 100.0 / (3.14159265358979323846 * 3.14159265358979323846);

  // Log-concave MLE solver.
  double mle_tol = 1e-8;
  long mle_iter_cap = 100000;

  // Generic framework (Algorithm 5).
  double framework_support_c = 720.0;

  nlohmann::json to_json() const {
    return nlohmann::json{
        {"l2_c", l2_c},
        {"sparsity_c_1d", sparsity_c_1d},
        {"sparsity_c_lattice", sparsity_c_lattice},
        {"siirv_c_prime", siirv_c_prime},
        {"siirv_c_dprime", siirv_c_dprime},
        {"siirv_emp_c", siirv_emp_c},
        {"support_check_c", support_check_c},
        {"moment_samples_per_k", moment_samples_per_k},
        {"proj_lowfreq_c", proj_lowfreq_c},
        {"pbd_alpha", pbd_alpha},
        {"pbd_search_budget", pbd_search_budget},
        {"pbd_fit_c", pbd_fit_c},
        {"cover_budget", cover_budget},
        {"pmd_cov_c", pmd_cov_c},
        {"pmd_lattice_c", pmd_lattice_c},
        {"pmd_support_c", pmd_support_c},
        {"pmd_support_count_based", pmd_support_count_based},
        {"pmd_cover_mesh", pmd_cover_mesh},
        {"lc_moment_samples", lc_moment_samples},
        {"lc_m_c", lc_m_c},
        {"lc_support_c", lc_support_c},
        {"lc_mle_c", lc_mle_c},
        {"lc_freq_c", lc_freq_c},
        {"lc_final_c", lc_final_c},
        {"lc_b_c", lc_b_c},
        {"lc_tail_theta", lc_tail_theta},
        {"mle_tol", mle_tol},
        {"mle_iter_cap", mle_iter_cap},
        {"framework_support_c", framework_support_c},
    };
  }

  void apply_overrides(const nlohmann::json& j) {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("l2_c", l2_c);
    get("sparsity_c_1d", sparsity_c_1d);
    get("sparsity_c_lattice", sparsity_c_lattice);
    get("siirv_c_prime", siirv_c_prime);
    get("siirv_c_dprime", siirv_c_dprime);
    get("siirv_emp_c", siirv_emp_c);
    get("support_check_c", support_check_c);
    get("moment_samples_per_k", moment_samples_per_k);
    get("proj_lowfreq_c", proj_lowfreq_c);
    get("pbd_alpha", pbd_alpha);
    get("pbd_search_budget", pbd_search_budget);
    get("pbd_fit_c", pbd_fit_c);
    get("cover_budget", cover_budget);
    get("pmd_cov_c", pmd_cov_c);
    get("pmd_lattice_c", pmd_lattice_c);
    get("pmd_support_c", pmd_support_c);
    get("pmd_support_count_based", pmd_support_count_based);
    get("pmd_cover_mesh", pmd_cover_mesh);
    get("lc_moment_samples", lc_moment_samples);
    get("lc_m_c", lc_m_c);
    get("lc_support_c", lc_support_c);
    get("lc_mle_c", lc_mle_c);
    get("lc_freq_c", lc_freq_c);
    get("lc_final_c", lc_final_c);
    get("lc_b_c", lc_b_c);
    get("lc_tail_theta", lc_tail_theta);
    get("mle_tol", mle_tol);
    get("mle_iter_cap", mle_iter_cap);
    get("framework_support_c", framework_support_c);
  }

  /// Ledger with DISTTEST_LEDGER (a JSON file path) applied, if set.
  static ConstantLedger from_environment() {
    ConstantLedger ledger;
    if (const char* path = std::getenv("DISTTEST_LEDGER")) {
      std::ifstream in(path);
      if (!in) throw std::runtime_error(std::string("cannot open DISTTEST_LEDGER file: ") + path);
      nlohmann::json j;
      in >> j;
      ledger.apply_overrides(j);
    }
    return ledger;
  }
};

}  // namespace disttest
