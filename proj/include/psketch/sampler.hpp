#pragma once

#include <cstdint>
#include <span>

#include "psketch/sketch.hpp"

namespace psk {

struct SampleOutcome {
  uint64_t index = 0;
  double value = 0.0;   // approximator to |x_{i*}|^p
  uint64_t j_star = 0;  // weight column that isolated the index
  bool failed = true;
};

// One draw from the sampling sketch. r must be a factor-2 approximation
// of ||x||_p^p; per-index scores are xhat_i = med_j |H_j(h_j(i))|^p / (r w_i),
// an index survives column j when xhat_i * w_{i,j} >= t, and the first
// column with exactly one survivor wins. FAIL is a legitimate outcome;
// retrying needs a sketch built with a fresh master seed.
SampleOutcome sample(const LinearSketch& sketch, double r);

// Factor-2 approximation of ||x||_p^p from the embedded companion norm
// sketch; returns 0 when the companion's estimate is flagged (zero
// stream), in which case sample() will FAIL.
double sampler_r(const LinearSketch& sketch);

SampleOutcome sample_auto(const LinearSketch& sketch);

// Tries the given independently seeded sketches in order and returns the
// first non-FAIL outcome.
SampleOutcome sample_with_retries(std::span<const LinearSketch> sketches,
                                  double r);

}  // namespace psk
