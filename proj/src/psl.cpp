#include "psketch/psl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace psk {

PslParams PslParams::make(double epsilon, double rho, double zeta) {
  if (!(epsilon > 0.0) || !(epsilon < 1.0 / 3.0)) {
    throw std::invalid_argument("epsilon must lie in (0, 1/3)");
  }
  if (!(rho > 0.0) || rho > 1.0) {
    throw std::invalid_argument("rho must lie in (0, 1]");
  }
  if (!(zeta > 0.0)) {
    throw std::invalid_argument("zeta must be positive");
  }
  PslParams p;
  p.epsilon = epsilon;
  p.rho = rho;
  p.zeta = zeta;
  p.k = static_cast<uint64_t>(std::ceil(zeta / (rho * epsilon * epsilon)));
  p.t = 4.0 / epsilon;
  return p;
}

bool is_approximator(double tau_hat, double tau, const ApproximatorSpec& spec) {
  return tau / spec.f - spec.rho <= tau_hat && tau_hat <= spec.f * tau + spec.rho;
}

PrecisionWeights::PrecisionWeights(uint64_t master_seed, uint64_t k) : k_(k) {
  if (k == 0) throw std::invalid_argument("k must be positive");
  seeds_.reserve(k);
  for (uint64_t j = 0; j < k; ++j) {
    seeds_.push_back(make_affine_seed(master_seed, Role::weight_column, j));
  }
}

double PrecisionWeights::weight(uint64_t i) const {
  double best = 1.0;
  for (const auto& seed : seeds_) {
    double w = 1.0 / uniform01(seed, i);
    if (w > best) best = w;
  }
  return best;
}

double PrecisionWeights::column_weight(uint64_t i, uint64_t j) const {
  return 1.0 / uniform01(seeds_.at(j), i);
}

double reconstruct(std::span<const double> weights,
                   std::span<const double> estimates,
                   const PslParams& params,
                   ReconstructDiagnostics* diag) {
  if (weights.size() != estimates.size()) {
    throw std::invalid_argument("weights/estimates length mismatch");
  }
  const double k = static_cast<double>(params.k);
  const double t = params.t;
  // Neumaier-compensated sum; the result must not depend on how callers
  // partition the input.
  double sum = 0.0, comp = 0.0;
  auto add = [&](double v) {
    double tmp = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - tmp) + v;
    } else {
      comp += (v - tmp) + sum;
    }
    sum = tmp;
  };
  for (size_t i = 0; i < weights.size(); ++i) {
    const double w = weights[i];
    const double a_hat = estimates[i];
    if (a_hat < 0.0) throw std::invalid_argument("estimates must be >= 0");
    const double q = a_hat * w / t;
    if (q < 1.0) continue;
    if (diag) ++diag->contributing;
    double s;
    if (w > 1.0) {
      s = 1.0 / k + ((k - 1.0) / k) * (q - 1.0) / (w - 1.0);
    } else {
      s = 1.0 / k;
      if (diag) ++diag->unit_weight_limit;
    }
    add(s);
  }
  return t * (sum + comp);
}

namespace {

// Adaptive Simpson on [a, b] with standard error splitting.
double simpson(double fa, double fm, double fb, double a, double b) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <typename F>
double adapt(const F& f, double a, double b, double fa, double fm, double fb,
             double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(fa, flm, fm, a, m);
  double right = simpson(fm, frm, fb, m, b);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double expected_weight_power(uint64_t k, double alpha) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1)");
  }
  // Substituting u = v^{1/(1-alpha)} removes the endpoint singularity of
  // int_0^1 u^{-alpha} k (1-u)^{k-1} du; the transformed integrand is
  // smooth and monotone on [0, 1].
  const double inv = 1.0 / (1.0 - alpha);
  const double km1 = static_cast<double>(k) - 1.0;
  auto f = [&](double v) -> double {
    if (v <= 0.0) return 1.0;
    if (v >= 1.0) return 0.0;
    double u = std::pow(v, inv);
    if (u >= 1.0) return 0.0;
    return km1 == 0.0 ? 1.0 : std::pow(1.0 - u, km1);
  };
  double fa = f(0.0), fm = f(0.5), fb = f(1.0);
  double whole = simpson(fa, fm, fb, 0.0, 1.0);
  double integral = adapt(f, 0.0, 1.0, fa, fm, fb, whole, 1e-9, 60);
  return static_cast<double>(k) * inv * integral;
}

}  // namespace psk
