#include "psketch/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace psk {

namespace detail {

std::vector<double> median_abs_cells(const LinearSketch& sketch) {
  const auto& cfg = sketch.config();
  std::vector<double> med(cfg.n);
  std::vector<double> vals(cfg.l);
  for (uint64_t i = 0; i < cfg.n; ++i) {
    for (uint32_t j = 0; j < cfg.l; ++j) {
      vals[j] = std::abs(sketch.cell(j, sketch.bucket_of(j, i)));
    }
    auto mid = vals.begin() + cfg.l / 2;
    std::nth_element(vals.begin(), mid, vals.end());
    med[i] = *mid;
  }
  return med;
}

std::vector<double> materialize_weights(const LinearSketch& sketch) {
  std::vector<double> w(sketch.config().n);
  for (uint64_t i = 0; i < w.size(); ++i) w[i] = sketch.weight(i);
  return w;
}

namespace {

double sigma_at(std::span<const double> med, std::span<const double> weights,
                double p, const PslParams& params, double r) {
  std::vector<double> xhat(med.size());
  for (size_t i = 0; i < med.size(); ++i) {
    xhat[i] = std::pow(med[i] / r, p) / weights[i];
  }
  return reconstruct(weights, xhat, params);
}

}  // namespace

EstimateReport halving_search(std::span<const double> med,
                              std::span<const double> weights, double p,
                              const PslParams& params, double threshold,
                              double r_max, double r_min) {
  EstimateReport report;
  for (double r = r_max; r >= r_min; r *= 0.5) {
    double sigma = sigma_at(med, weights, p, params, r);
    report.halving_trace.emplace_back(r, sigma);
    if (sigma > threshold) {
      report.r_used = r;
      report.value = std::pow(r, p) * sigma;
      report.success_flag = true;
      return report;
    }
    report.r_used = r;
  }
  report.value = 0.0;
  report.success_flag = false;
  return report;
}

}  // namespace detail

namespace {

PslParams psl_params_of(const SketchConfig& cfg) {
  PslParams p;
  p.epsilon = cfg.epsilon;
  p.rho = cfg.rho;
  p.zeta = cfg.zeta;
  p.k = cfg.k;
  p.t = cfg.t;
  return p;
}

double default_r_max(const SketchConfig& cfg) {
  uint32_t e = 0;
  uint64_t n = cfg.n;
  while ((uint64_t{1} << e) < n) ++e;
  return std::ldexp(1.0, static_cast<int>(e) + 31);
}

}  // namespace

double recover_xhat(const LinearSketch& sketch, double r, uint64_t i) {
  if (!(r > 0.0)) throw std::invalid_argument("r must be positive");
  const auto& cfg = sketch.config();
  std::vector<double> vals(cfg.l);
  for (uint32_t j = 0; j < cfg.l; ++j) {
    double h = sketch.cell(j, sketch.bucket_of(j, i));
    vals[j] = std::pow(std::abs(h / r), cfg.p) / sketch.weight(i);
  }
  auto mid = vals.begin() + cfg.l / 2;
  std::nth_element(vals.begin(), mid, vals.end());
  return *mid;
}

double estimate_at_r(const LinearSketch& sketch, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("r must be positive");
  const auto& cfg = sketch.config();
  auto weights = detail::materialize_weights(sketch);
  std::vector<double> xhat(cfg.n);
  for (uint64_t i = 0; i < cfg.n; ++i) xhat[i] = recover_xhat(sketch, r, i);
  return r * reconstruct(weights, xhat, psl_params_of(cfg));
}

EstimateReport estimate_l1(const LinearSketch& sketch,
                           const EstimateOptions& options) {
  const auto& cfg = sketch.config();
  if (cfg.problem != Problem::l1) {
    throw std::invalid_argument("sketch was not created for l1");
  }
  auto med = detail::median_abs_cells(sketch);
  auto weights = detail::materialize_weights(sketch);
  double r_max = options.r_max > 0.0 ? options.r_max : default_r_max(cfg);
  double threshold = (1.0 + 2.0 * cfg.epsilon) / 4.0;
  return detail::halving_search(med, weights, cfg.p, psl_params_of(cfg),
                                threshold, r_max, options.r_min);
}

EstimateReport estimate_lp(const LinearSketch& sketch,
                           const EstimateOptions& options) {
  const auto& cfg = sketch.config();
  if (cfg.problem != Problem::lp) {
    throw std::invalid_argument("sketch was not created for lp");
  }
  auto med = detail::median_abs_cells(sketch);
  auto weights = detail::materialize_weights(sketch);
  double r_max = options.r_max > 0.0 ? options.r_max : default_r_max(cfg);
  // Reduces to the l1 stop rule at p = 1: the guess r tracks ||x||_p, so
  // sigma_hat sits near (||x||_p / r)^p when the guess is right.
  double threshold = (1.0 + 2.0 * cfg.epsilon) / std::pow(4.0, cfg.p);
  return detail::halving_search(med, weights, cfg.p, psl_params_of(cfg),
                                threshold, r_max, options.r_min);
}

EstimateReport estimate_fk(const LinearSketch& sketch, const AmsSketch& ams) {
  const auto& cfg = sketch.config();
  if (cfg.problem != Problem::fk) {
    throw std::invalid_argument("sketch was not created for fk");
  }
  double r = ams.estimate();
  EstimateReport report;
  if (r <= 0.0) {
    if (!sketch.is_zero()) {
      throw std::runtime_error(
          "inconsistent stream: AMS estimate is zero but sketch is not");
    }
    return report;  // zero vector: value 0, flagged
  }
  auto med = detail::median_abs_cells(sketch);
  auto weights = detail::materialize_weights(sketch);
  std::vector<double> xhat(cfg.n);
  for (uint64_t i = 0; i < cfg.n; ++i) {
    xhat[i] = std::pow(med[i] / r, cfg.p) / weights[i];
  }
  double sigma = reconstruct(weights, xhat, psl_params_of(cfg));
  report.r_used = r;
  report.halving_trace.emplace_back(r, sigma);
  report.value = std::pow(r, cfg.p) * sigma;
  report.success_flag = true;
  return report;
}

EstimateReport estimate(const LinearSketch& sketch,
                        const EstimateOptions& options) {
  switch (sketch.config().problem) {
    case Problem::l1:
      return estimate_l1(sketch, options);
    case Problem::lp:
      return estimate_lp(sketch, options);
    case Problem::fk:
      if (!sketch.ams()) throw std::invalid_argument("fk sketch lacks AMS");
      return estimate_fk(sketch, *sketch.ams());
    default:
      throw std::invalid_argument("no estimator for this problem kind");
  }
}

double median_value(std::span<const EstimateReport> reports) {
  if (reports.empty()) throw std::invalid_argument("no reports");
  std::vector<double> vals;
  vals.reserve(reports.size());
  for (const auto& r : reports) vals.push_back(r.value);
  std::sort(vals.begin(), vals.end());
  size_t n = vals.size();
  return n % 2 == 1 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
}

}  // namespace psk
