// Runs the PBD tester against an in-class binomial and a far uniform, and
// prints the two reports.

#include <iostream>

#include "disttest/dist_spec.hpp"
#include "disttest/siirv.hpp"

int main() {
  using namespace disttest;
  ConstantLedger ledger;
  Rng rng(2024);

  auto binomial = make_sampler(DistSpec::from_siirv(SiirvSpec::iid(100, 2, {0.5, 0.5})));
  Rng r1 = rng.child(1);
  TestReport in_class = test_siirv(*binomial, 100, 2, 0.25, r1, ledger);
  std::cout << "Bin(100, 0.5) vs PBD_100: " << (in_class.accept ? "accept" : "reject")
            << " (stage " << stage_name(in_class.stage) << ", " << in_class.total_samples
            << " samples)\n";

  auto uniform = make_sampler(DistSpec::from_pmf(Pmf::uniform(0, 400)));
  Rng r2 = rng.child(2);
  TestReport far = test_siirv(*uniform, 100, 2, 0.25, r2, ledger);
  std::cout << "Uniform[0,400] vs PBD_100: " << (far.accept ? "accept" : "reject") << " (stage "
            << stage_name(far.stage) << ", " << far.total_samples << " samples)\n";
  return 0;
}
