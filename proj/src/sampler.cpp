#include "psketch/sampler.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "psketch/estimators.hpp"

namespace psk {

SampleOutcome sample(const LinearSketch& sketch, double r) {
  const auto& cfg = sketch.config();
  if (cfg.problem != Problem::sampler) {
    throw std::invalid_argument("sketch was not created for sampling");
  }
  SampleOutcome outcome;
  if (!(r > 0.0)) return outcome;

  auto med = detail::median_abs_cells(sketch);
  const auto& weights = sketch.weights();

  std::vector<double> xhat(cfg.n);
  for (uint64_t i = 0; i < cfg.n; ++i) {
    xhat[i] = std::pow(med[i], cfg.p) / (r * sketch.weight(i));
  }

  for (uint64_t j = 0; j < cfg.k; ++j) {
    uint64_t survivor = 0;
    uint32_t count = 0;
    for (uint64_t i = 0; i < cfg.n; ++i) {
      if (xhat[i] * weights.column_weight(i, j) >= cfg.t) {
        survivor = i;
        if (++count > 1) break;
      }
    }
    if (count == 1) {
      outcome.index = survivor;
      outcome.value = xhat[survivor] * r;
      outcome.j_star = j;
      outcome.failed = false;
      return outcome;
    }
  }
  return outcome;
}

double sampler_r(const LinearSketch& sketch) {
  if (sketch.config().problem != Problem::sampler || !sketch.companion()) {
    throw std::invalid_argument("sketch has no companion norm sketch");
  }
  EstimateReport rep = estimate_lp(*sketch.companion());
  return rep.success_flag ? rep.value : 0.0;
}

SampleOutcome sample_auto(const LinearSketch& sketch) {
  return sample(sketch, sampler_r(sketch));
}

SampleOutcome sample_with_retries(std::span<const LinearSketch> sketches,
                                  double r) {
  SampleOutcome outcome;
  for (const auto& sketch : sketches) {
    outcome = sample(sketch, r);
    if (!outcome.failed) return outcome;
  }
  return outcome;
}

}  // namespace psk
