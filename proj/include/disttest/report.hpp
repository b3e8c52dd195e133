#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "disttest/dft.hpp"
#include "disttest/ledger.hpp"
#include "disttest/pmf.hpp"

namespace disttest {

/// Which gate produced a rejection (or None on accept).
enum class Stage {
  None,
  VarianceGate,
  SupportCheck,
  PoissonOverflow,
  NormCheck,
  SparsityCheck,
  Projection,
  MomentInfeasible,
  VarianceSanity,
  MleFailure,
  FinalStatistic,
  Geometry,
};

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::None: return "none";
    case Stage::VarianceGate: return "variance-gate";
    case Stage::SupportCheck: return "support-check";
    case Stage::PoissonOverflow: return "poisson-overflow";
    case Stage::NormCheck: return "norm-check";
    case Stage::SparsityCheck: return "sparsity-check";
    case Stage::Projection: return "projection";
    case Stage::MomentInfeasible: return "moment-infeasible";
    case Stage::VarianceSanity: return "variance-sanity";
    case Stage::MleFailure: return "mle-failure";
    case Stage::FinalStatistic: return "final-statistic";
    case Stage::Geometry: return "geometry";
  }
  return "unknown";
}

/// Hypothesis emitted on accept: either explicit pmf weights, Fourier
/// coefficients on S, or MLE pieces. Unused parts stay empty.
struct Hypothesis {
  std::string kind = "none";  // none | pmf | fourier | mle-pieces
  Pmf pmf;
  FourierCoeffs coeffs;
  std::vector<LogLinearPiece> pieces;
};

/// Full record of one tester invocation. Serialized reports are
/// deterministic for a fixed RunConfig: wall-clock timings deliberately stay
/// out of the report and are logged separately by the CLI.
struct TestReport {
  std::string klass;  // pbd | siirv | pmd | logconcave | plugin:<name>
  bool accept = false;
  Stage stage = Stage::None;
  std::uint64_t seed = 0;
  long n = 0;
  int k = 0;
  double epsilon = 0;
  long long total_samples = 0;
  long long m = 0;
  long long m_prime = 0;
  long long big_m = 0;        // modulus M (or det(M) for PMD)
  long long s_size = 0;       // |S|
  double b = 0;
  double det_m = 0;           // PMD lattice determinant
  double mu_tilde = 0;
  double sigma_tilde = 0;
  nlohmann::json extra;       // stage-specific diagnostics
  Hypothesis hypothesis;
  ConstantLedger ledger;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["schema"] = "disttest/1";
    j["class"] = klass;
    j["verdict"] = accept ? "accept" : "reject";
    j["stage"] = stage_name(stage);
    j["seed"] = seed;
    j["n"] = n;
    j["k"] = k;
    j["epsilon"] = epsilon;
    j["total_samples"] = total_samples;
    j["m"] = m;
    j["m_prime"] = m_prime;
    j["M"] = big_m;
    j["S_size"] = s_size;
    j["b"] = b;
    j["det_M"] = det_m;
    j["mu_tilde"] = mu_tilde;
    j["sigma_tilde"] = sigma_tilde;
    j["extra"] = extra.is_null() ? nlohmann::json::object() : extra;
    nlohmann::json h;
    h["kind"] = hypothesis.kind;
    if (hypothesis.kind == "pmf") {
      h["offset"] = hypothesis.pmf.offset;
      h["weights"] = hypothesis.pmf.weights;
    } else if (hypothesis.kind == "fourier") {
      h["modulus"] = hypothesis.coeffs.modulus;
      h["freqs"] = hypothesis.coeffs.freqs;
      nlohmann::json vals = nlohmann::json::array();
      for (const auto& v : hypothesis.coeffs.values)
        vals.push_back(nlohmann::json::array({v.real(), v.imag()}));
      h["values"] = std::move(vals);
    } else if (hypothesis.kind == "mle-pieces") {
      nlohmann::json ps = nlohmann::json::array();
      for (const auto& pc : hypothesis.pieces)
        ps.push_back(nlohmann::json::array({pc.a, pc.b, pc.alpha, pc.beta}));
      h["pieces"] = std::move(ps);
      h["offset"] = hypothesis.pmf.offset;
      h["weights"] = hypothesis.pmf.weights;
    }
    j["hypothesis"] = std::move(h);
    j["ledger"] = ledger.to_json();
    j["rng_split_map"] = nlohmann::json{
        {"moments", 1}, {"support", 2}, {"empirical", 3}, {"fourier", 4},
        {"projection", 5}, {"mle", 6}, {"final", 7}};
    return j;
  }
};

}  // namespace disttest
