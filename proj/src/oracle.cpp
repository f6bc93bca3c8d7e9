#include "psketch/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

namespace psk::oracle {

double exact_norm(std::span<const double> x, double p) {
  double sum = 0.0, comp = 0.0;
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite entry");
    double term = std::pow(std::abs(v), p);
    double tmp = sum + term;
    if (std::abs(sum) >= term) {
      comp += (sum - tmp) + term;
    } else {
      comp += (term - tmp) + sum;
    }
    sum = tmp;
  }
  return sum + comp;
}

double exact_cascaded(const std::vector<std::vector<double>>& rows, double p,
                      double q) {
  double outer = 0.0;
  for (const auto& row : rows) {
    double inner = 0.0;
    for (double v : row) inner += std::pow(std::abs(v), q);
    outer += std::pow(inner, p / q);
  }
  return std::pow(outer, 1.0 / p);
}

std::vector<double> exact_sampling_target(std::span<const double> x, double p) {
  double total = exact_norm(x, p);
  if (total == 0.0) throw std::invalid_argument("zero vector has no target");
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    out[i] = std::pow(std::abs(x[i]), p) / total;
  }
  return out;
}

namespace {

// log P[Bin(n, p) >= s], by direct summation in log space.
double binom_upper_tail(uint64_t s, uint64_t n, double p) {
  if (s == 0) return 1.0;
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  const double lp = std::log(p), lq = std::log1p(-p);
  const double lgn = std::lgamma(static_cast<double>(n) + 1.0);
  double tail = 0.0;
  for (uint64_t j = s; j <= n; ++j) {
    double lc = lgn - std::lgamma(static_cast<double>(j) + 1.0) -
                std::lgamma(static_cast<double>(n - j) + 1.0);
    tail += std::exp(lc + static_cast<double>(j) * lp +
                     static_cast<double>(n - j) * lq);
  }
  return std::min(tail, 1.0);
}

}  // namespace

double binomial_ci_low(uint64_t successes, uint64_t trials, double confidence) {
  if (trials == 0 || successes > trials) {
    throw std::invalid_argument("bad trial counts");
  }
  if (successes == 0) return 0.0;
  const double alpha = 1.0 - confidence;
  double lo = 0.0, hi = static_cast<double>(successes) / trials;
  for (int iter = 0; iter < 100; ++iter) {
    double mid = 0.5 * (lo + hi);
    if (binom_upper_tail(successes, trials, mid) >= alpha) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return lo;
}

std::string to_key_values(const TrialReport& report) {
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "trials=%llu successes=%llu rate=%.6f ci_low=%.6f",
                static_cast<unsigned long long>(report.trials),
                static_cast<unsigned long long>(report.successes),
                report.success_rate, report.ci_low_99);
  return buf;
}

TrialReport run_trials(uint64_t harness_seed, uint64_t trials,
                       const std::function<bool(uint64_t)>& experiment,
                       unsigned threads) {
  if (trials == 0) throw std::invalid_argument("trials must be positive");
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, trials);

  std::vector<uint8_t> ok(trials, 0);
  std::atomic<uint64_t> next{0};
  auto worker = [&]() {
    for (;;) {
      uint64_t i = next.fetch_add(1);
      if (i >= trials) break;
      ok[i] = experiment(derive64(harness_seed, Role::trial, i)) ? 1 : 0;
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < threads; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  TrialReport report;
  report.trials = trials;
  for (uint8_t v : ok) report.successes += v;
  report.success_rate =
      static_cast<double>(report.successes) / static_cast<double>(trials);
  report.ci_low_99 = binomial_ci_low(report.successes, trials, 0.99);
  return report;
}

std::vector<double> psl_adversary(std::span<const double> a,
                                  std::span<const double> weights,
                                  const PslParams& params, AdversaryMode mode,
                                  uint64_t noise_seed) {
  if (a.size() != weights.size()) {
    throw std::invalid_argument("length mismatch");
  }
  const size_t n = a.size();
  std::vector<double> out(n);

  auto clamped = [](double v) { return v < 0.0 ? 0.0 : v; };
  // Contribution t*s_i of one index under estimate a_hat.
  auto ts = [&](double a_hat, double w) -> double {
    double q = a_hat * w / params.t;
    if (q < 1.0) return 0.0;
    double k = static_cast<double>(params.k);
    double s = w > 1.0 ? 1.0 / k + ((k - 1.0) / k) * (q - 1.0) / (w - 1.0)
                       : 1.0 / k;
    return params.t * s;
  };

  switch (mode) {
    case AdversaryMode::none:
      for (size_t i = 0; i < n; ++i) out[i] = a[i];
      break;
    case AdversaryMode::plus_one:
      for (size_t i = 0; i < n; ++i) out[i] = a[i] + 1.0 / weights[i];
      break;
    case AdversaryMode::minus_one:
      for (size_t i = 0; i < n; ++i) out[i] = clamped(a[i] - 1.0 / weights[i]);
      break;
    case AdversaryMode::greedy: {
      double dev = 0.0;
      for (size_t i = 0; i < n; ++i) {
        double hi = a[i] + 1.0 / weights[i];
        double lo = clamped(a[i] - 1.0 / weights[i]);
        double d_hi = ts(hi, weights[i]) - a[i];
        double d_lo = ts(lo, weights[i]) - a[i];
        if (std::abs(dev + d_hi) >= std::abs(dev + d_lo)) {
          out[i] = hi;
          dev += d_hi;
        } else {
          out[i] = lo;
          dev += d_lo;
        }
      }
      break;
    }
    case AdversaryMode::honest_noise:
      for (size_t i = 0; i < n; ++i) {
        uint64_t bits = derive64(noise_seed, Role::trial, i);
        double u = static_cast<double>(bits >> 11) * 0x1.0p-53;  // [0,1)
        out[i] = clamped(a[i] + (2.0 * u - 1.0) / weights[i]);
      }
      break;
  }
  return out;
}

}  // namespace psk::oracle
