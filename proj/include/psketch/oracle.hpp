#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "psketch/psl.hpp"

namespace psk::oracle {

// sum_i |x_i|^p with compensated summation.
double exact_norm(std::span<const double> x, double p);

// ||x||_{p,q} = (sum_i (sum_j |x_ij|^q)^{p/q})^{1/p} for a dense matrix
// given as rows.
double exact_cascaded(const std::vector<std::vector<double>>& rows, double p,
                      double q);

// Normalized |x_i|^p / ||x||_p^p; throws on the zero vector.
std::vector<double> exact_sampling_target(std::span<const double> x, double p);

struct TrialReport {
  uint64_t trials = 0;
  uint64_t successes = 0;
  double success_rate = 0.0;
  double ci_low_99 = 0.0;  // one-sided exact binomial lower bound
};

// "trials=... successes=... rate=... ci_low=..." for log scraping.
std::string to_key_values(const TrialReport& report);

// Exact (Clopper-Pearson style) one-sided lower confidence bound: the
// largest p such that P[Bin(trials, p) >= successes] <= 1 - confidence,
// found by bisection on the binomial upper tail.
double binomial_ci_low(uint64_t successes, uint64_t trials,
                       double confidence = 0.99);

// Runs `trials` independent experiments; trial i receives the seed
// derive64(harness_seed, Role::trial, i), so the report is identical for
// any thread count. threads == 0 picks hardware concurrency.
TrialReport run_trials(uint64_t harness_seed, uint64_t trials,
                       const std::function<bool(uint64_t)>& experiment,
                       unsigned threads = 0);

enum class AdversaryMode {
  none,          // a_hat = a
  plus_one,      // a_hat = a + 1/w
  minus_one,     // a_hat = max(0, a - 1/w)
  greedy,        // per-index sign chosen to maximize |sigma_hat - sigma|
  honest_noise,  // a_hat = clamp(a + U[-1,1]/w)
};

// Worst-case approximator model: every output is a valid
// (1/w_i, 1)-approximator of a_i. The greedy mode walks the indices in
// order, keeping the running deviation of t*s_i against a_i and picking
// the sign that pushes |deviation| hardest.
std::vector<double> psl_adversary(std::span<const double> a,
                                  std::span<const double> weights,
                                  const PslParams& params, AdversaryMode mode,
                                  uint64_t noise_seed = 0);

}  // namespace psk::oracle
