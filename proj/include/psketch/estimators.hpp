#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "psketch/sketch.hpp"

namespace psk {

struct EstimateReport {
  double value = 0.0;   // r * sigma_hat (l1) or r^p * sigma_hat (lp, fk)
  double r_used = 0.0;
  std::vector<std::pair<double, double>> halving_trace;  // (r, sigma_hat)
  bool success_flag = false;  // stop test fired before r_min
};

struct EstimateOptions {
  // Halving starts at 2^(ceil(log2 n) + 31) by default, the paper's
  // n * M bound with M = 2^31; 0 keeps the default.
  double r_max = 0.0;
  double r_min = 0x1.0p-20;
};

// Per-index recovery: median over the l tables of |H_j(h_j(i))/r|^p / w_i.
double recover_xhat(const LinearSketch& sketch, double r, uint64_t i);

// One reconstruction pass at a fixed scale guess: recover_xhat over all
// indices, then the reconstruction R; returns r * sigma_hat.
double estimate_at_r(const LinearSketch& sketch, double r);

EstimateReport estimate_l1(const LinearSketch& sketch,
                           const EstimateOptions& options = {});
EstimateReport estimate_lp(const LinearSketch& sketch,
                           const EstimateOptions& options = {});
EstimateReport estimate_fk(const LinearSketch& sketch, const AmsSketch& ams);

// Dispatch on the sketch's problem kind (fk uses the embedded AMS).
EstimateReport estimate(const LinearSketch& sketch,
                        const EstimateOptions& options = {});

// Median of independent repetitions' values.
double median_value(std::span<const EstimateReport> reports);

namespace detail {

// Shared halving search over r = successive powers of two, descending.
// med[i] must be the median over tables of the absolute cell value for
// index i, so that xhat_i(r) = (med[i]/r)^p / w_i; sigma_hat(r) is the
// reconstruction output and the loop stops at sigma_hat > threshold.
EstimateReport halving_search(std::span<const double> med,
                              std::span<const double> weights, double p,
                              const PslParams& params, double threshold,
                              double r_max, double r_min);

std::vector<double> median_abs_cells(const LinearSketch& sketch);
std::vector<double> materialize_weights(const LinearSketch& sketch);

}  // namespace detail

}  // namespace psk
