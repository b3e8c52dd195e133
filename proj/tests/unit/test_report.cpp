#include "disttest/report.hpp"

#include <gtest/gtest.h>

#include "disttest/ledger.hpp"

using namespace disttest;

TEST(Report, StageNamesCoverEnum) {
  EXPECT_STREQ(stage_name(Stage::None), "none");
  EXPECT_STREQ(stage_name(Stage::PoissonOverflow), "poisson-overflow");
  EXPECT_STREQ(stage_name(Stage::Projection), "projection");
  EXPECT_STREQ(stage_name(Stage::MleFailure), "mle-failure");
}

TEST(Report, SerializationIsStable) {
  TestReport rep;
  rep.klass = "pbd";
  rep.accept = true;
  rep.seed = 77;
  rep.n = 100;
  rep.k = 2;
  rep.epsilon = 0.25;
  rep.total_samples = 12345;
  rep.hypothesis.kind = "pmf";
  rep.hypothesis.pmf = Pmf{3, {0.25, 0.5, 0.25}, true};
  std::string a = rep.to_json().dump(2);
  std::string b = rep.to_json().dump(2);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.find("\"schema\": \"disttest/1\""), std::string::npos);
  EXPECT_NE(a.find("\"verdict\": \"accept\""), std::string::npos);
}

TEST(Report, FourierHypothesisRoundTrips) {
  TestReport rep;
  rep.klass = "siirv";
  rep.hypothesis.kind = "fourier";
  rep.hypothesis.coeffs.modulus = 8;
  rep.hypothesis.coeffs.freqs = {0, 1, 7};
  rep.hypothesis.coeffs.values = {{1, 0}, {0.5, -0.25}, {0.5, 0.25}};
  nlohmann::json j = rep.to_json();
  EXPECT_EQ(j["hypothesis"]["modulus"], 8);
  EXPECT_EQ(j["hypothesis"]["values"][1][1], -0.25);
}

TEST(Ledger, OverridesApply) {
  ConstantLedger ledger;
  nlohmann::json j = {{"l2_c", 10.0}, {"moment_samples_per_k", 100}};
  ledger.apply_overrides(j);
  EXPECT_DOUBLE_EQ(ledger.l2_c, 10.0);
  EXPECT_EQ(ledger.moment_samples_per_k, 100);
  EXPECT_DOUBLE_EQ(ledger.sparsity_c_1d, 2000.0);  // untouched

  nlohmann::json snap = ledger.to_json();
  ConstantLedger back;
  back.apply_overrides(snap);
  EXPECT_EQ(back.to_json(), snap);
}
