// Fits the discrete log-concave MLE to binomial draws and prints the
// recovered piecewise log-linear segments.

#include <cstdio>

#include "disttest/dist_spec.hpp"
#include "disttest/logconcave.hpp"

int main() {
  using namespace disttest;
  ConstantLedger ledger;
  Rng rng(7);

  Pmf target = Pmf::binomial(30, 0.5);
  PmfSampler sampler(target);
  std::vector<std::int64_t> hist(31, 0);
  for (int i = 0; i < 4000; ++i) ++hist[static_cast<std::size_t>(sampler.draw(rng))];

  MleResult mle = logconcave_mle(hist, 0, ledger);
  std::printf("log-likelihood %.4f, %zu pieces, %ld iterations\n", mle.loglik, mle.pieces.size(),
              mle.iterations);
  for (const auto& pc : mle.pieces)
    std::printf("  [%lld, %lld]  alpha=%.6f beta=%.6f\n", static_cast<long long>(pc.a),
                static_cast<long long>(pc.b), pc.alpha, pc.beta);
  Distances d = distances(mle.pmf, target);
  std::printf("TV to the true binomial: %.4f\n", d.tv);
  return 0;
}
