#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "psketch/oracle.hpp"
#include "psketch/psl.hpp"

using namespace psk;

namespace {

// KS distance of samples against the W(k) CDF (1 - 1/x)^k.
double ks_against_wk(std::vector<double> samples, uint64_t k) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double ks = 0.0;
  for (size_t i = 0; i < samples.size(); ++i) {
    double f = std::pow(1.0 - 1.0 / samples[i], static_cast<double>(k));
    ks = std::max(ks, std::abs(f - (i + 1) / n));
    ks = std::max(ks, std::abs(f - i / n));
  }
  return ks;
}

}  // namespace

TEST_CASE("params derive k and t") {
  PslParams p = PslParams::make(0.2, 0.1);
  CHECK(p.k == 2000);  // ceil(8 / (0.1 * 0.04))
  CHECK(p.t == doctest::Approx(20.0));
  CHECK(p.t > 12.0);
  CHECK_THROWS_AS(PslParams::make(0.5, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(PslParams::make(0.2, 0.0), std::invalid_argument);
}

TEST_CASE("approximator predicate") {
  CHECK(is_approximator(1.0, 1.0, {0.0, 1.0}));               // exact value
  CHECK(is_approximator(5.5, 5.5, {0.3, 1.7}));
  CHECK_FALSE(is_approximator(0.0, 1.0, {0.5, 1.0}));         // 1 - 0.5 > 0
  CHECK(is_approximator(2.1, 1.0, {0.1, 2.0}));               // boundary 2*1+0.1
  CHECK_FALSE(is_approximator(2.1000001, 1.0, {0.1, 2.0}));
}

TEST_CASE("weights are at least one and recomputable") {
  PrecisionWeights w(42, 20);
  for (uint64_t i = 0; i < 2000; ++i) {
    double v = w.weight(i);
    CHECK(v >= 1.0);
    CHECK(v == w.weight(i));
    double best = 0.0;
    for (uint64_t j = 0; j < 20; ++j) {
      best = std::max(best, w.column_weight(i, j));
    }
    CHECK(v == best);
  }
}

TEST_CASE("weight law matches W(k) for k in {1, 5, 20}") {
  const int draws = 100000;
  for (uint64_t k : {1ull, 5ull, 20ull}) {
    std::vector<double> samples(draws);
    for (int d = 0; d < draws; ++d) {
      // Fresh seed per draw gives iid samples from W(k).
      samples[d] = PrecisionWeights(derive64(k, Role::trial, d), k).weight(0);
    }
    CHECK(ks_against_wk(std::move(samples), k) < 0.01);
  }
}

TEST_CASE("conditional weight cost: E[w | w <= n^5] <= 6 k ln n") {
  const uint64_t k = 20;
  const double n = 1e4;
  const double cutoff = std::pow(n, 5.0);
  const int draws = 1000000;
  double sum = 0.0;
  uint64_t kept = 0;
  for (int d = 0; d < draws; ++d) {
    double v = PrecisionWeights(derive64(99, Role::trial, d), k).weight(0);
    if (v <= cutoff) {
      sum += v;
      ++kept;
    }
  }
  double mean = sum / kept;
  CHECK(mean <= 6.0 * k * std::log(n));
}

TEST_CASE("reconstruct on all-zero estimates is zero") {
  PslParams params = PslParams::make(0.2, 0.1);
  std::vector<double> w(100, 50.0), est(100, 0.0);
  CHECK(reconstruct(w, est, params) == 0.0);
}

TEST_CASE("reconstruct matches the hand-evaluated formula") {
  PslParams params;
  params.k = 10;
  params.t = 20.0;
  std::vector<double> w{100.0}, est{0.4};
  // q = 0.4*100/20 = 2; s = 1/10 + (9/10)*(1/99); sigma = 20 s = 24/11.
  CHECK(reconstruct(w, est, params) ==
        doctest::Approx(24.0 / 11.0).epsilon(1e-12));
}

TEST_CASE("reconstruct is nondecreasing in each estimate") {
  PslParams params = PslParams::make(0.25, 0.125);
  const uint64_t n = 64;
  PrecisionWeights weights(7, params.k);
  std::vector<double> w(n), est(n);
  for (uint64_t i = 0; i < n; ++i) {
    w[i] = weights.weight(i);
    est[i] = 0.3 + 0.01 * static_cast<double>(i % 7);
  }
  double base = reconstruct(w, est, params);
  for (uint64_t i = 0; i < n; ++i) {
    auto bumped = est;
    bumped[i] += 0.05;
    CHECK(reconstruct(w, bumped, params) >= base);
  }
}

TEST_CASE("doubling t never grows the contributing set") {
  PslParams params = PslParams::make(0.2, 0.1);
  const uint64_t n = 512;
  PrecisionWeights weights(11, 40);
  std::vector<double> w(n), est(n);
  for (uint64_t i = 0; i < n; ++i) {
    w[i] = weights.weight(i);
    est[i] = (i % 3 == 0) ? 0.9 : 0.01;
  }
  ReconstructDiagnostics d1, d2;
  reconstruct(w, est, params, &d1);
  PslParams doubled = params;
  doubled.t *= 2.0;
  reconstruct(w, est, doubled, &d2);
  CHECK(d2.contributing <= d1.contributing);
}

TEST_CASE("unit weights crossing the threshold take the limit value") {
  PslParams params;
  params.k = 10;
  params.t = 20.0;
  std::vector<double> w{1.0}, est{25.0};  // a_hat >= t with w == 1
  ReconstructDiagnostics diag;
  double sigma = reconstruct(w, est, params, &diag);
  CHECK(sigma == doctest::Approx(20.0 * (1.0 / 10.0)));
  CHECK(diag.unit_weight_limit == 1);
}

TEST_CASE("expected weight power: closed forms and oracle cross-checks") {
  CHECK(expected_weight_power(1, 0.5) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(expected_weight_power(17, 1e-7) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK_THROWS_AS(expected_weight_power(5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(expected_weight_power(0, 0.5), std::invalid_argument);

  // Independent oracle: E[w^a] = k * Beta(1-a, k) via lgamma.
  for (uint64_t k : {1ull, 2ull, 5ull, 20ull, 26817ull}) {
    for (double a : {0.1, 0.5, 2.0 / 3.0, 0.9}) {
      double exact = static_cast<double>(k) *
                     std::exp(std::lgamma(1.0 - a) +
                              std::lgamma(static_cast<double>(k)) -
                              std::lgamma(static_cast<double>(k) + 1.0 - a));
      CHECK(expected_weight_power(k, a) ==
            doctest::Approx(exact).epsilon(1e-5));
    }
  }

  // Appendix-style bound with the constant pinned to 1: E[w^a] <= k^a/(1-a).
  double e23 = expected_weight_power(20, 2.0 / 3.0);
  CHECK(e23 <= std::pow(20.0, 2.0 / 3.0) / (1.0 - 2.0 / 3.0));

  // Monte Carlo cross-check via inverse-CDF sampling, within 2%.
  const int draws = 1000000;
  double sum = 0.0;
  for (int d = 0; d < draws; ++d) {
    uint64_t bits = derive64(31337, Role::trial, d);
    double u = (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    double w = 1.0 / (1.0 - std::pow(u, 1.0 / 20.0));
    sum += std::pow(w, 2.0 / 3.0);
  }
  CHECK(sum / draws == doctest::Approx(e23).epsilon(0.02));
}

TEST_CASE("PSL accuracy under the single-sided adversary") {
  // Success frequency of the (rho, e^eps) event stays above 2/3 - 0.05
  // for both constant adversaries.
  const uint64_t n = 2048;
  const double eps = 0.2, rho = 0.1;
  PslParams params = PslParams::make(eps, rho);
  std::vector<double> a(n, 0.5);
  double sigma = 0.5 * static_cast<double>(n);
  for (auto mode :
       {oracle::AdversaryMode::plus_one, oracle::AdversaryMode::minus_one}) {
    auto report = oracle::run_trials(2024 + static_cast<int>(mode), 500,
                                     [&](uint64_t seed) {
      PrecisionWeights weights(seed, params.k);
      std::vector<double> w(n);
      for (uint64_t i = 0; i < n; ++i) w[i] = weights.weight(i);
      auto est = oracle::psl_adversary(a, w, params, mode);
      double s = reconstruct(w, est, params);
      return is_approximator(s, sigma, {rho, std::exp(eps)});
    });
    CHECK(report.success_rate >= 2.0 / 3.0 - 0.05);
  }
}

TEST_CASE("adversarial reconstruct example: n=100, all 0.5") {
  const uint64_t n = 100;
  const double eps = 0.2, rho = 0.2;
  PslParams params = PslParams::make(eps, rho);
  std::vector<double> a(n, 0.5);
  auto report = oracle::run_trials(555, 500, [&](uint64_t seed) {
    PrecisionWeights weights(seed, params.k);
    std::vector<double> w(n);
    for (uint64_t i = 0; i < n; ++i) w[i] = weights.weight(i);
    auto est =
        oracle::psl_adversary(a, w, params, oracle::AdversaryMode::plus_one);
    double s = reconstruct(w, est, params);
    return is_approximator(s, 50.0, {rho, std::exp(eps)});
  });
  CHECK(report.success_rate >= 2.0 / 3.0);
}
