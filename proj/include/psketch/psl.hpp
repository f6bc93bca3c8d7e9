#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "psketch/hashing.hpp"

namespace psk {

// Parameters tying the weight distribution W(k) to the reconstruction
// threshold t.
struct PslParams {
  double epsilon = 0.0;  // multiplicative error, in (0, 1/3)
  double rho = 0.0;      // additive error, in (0, 1]
  double zeta = 8.0;
  uint64_t k = 0;        // ceil(zeta / (rho * epsilon^2))
  double t = 0.0;        // 4 / epsilon

  static PslParams make(double epsilon, double rho, double zeta = 8.0);
};

struct ApproximatorSpec {
  double rho = 0.0;  // additive slack, >= 0
  double f = 1.0;    // multiplicative factor, in [1, 2]
};

// True iff tau/f - rho <= tau_hat <= f*tau + rho (bounds inclusive).
bool is_approximator(double tau_hat, double tau, const ApproximatorSpec& spec);

// Per-index precision weights w_i = max_{j<k} 1/u_{i,j}. Column j draws
// its uniforms from a dedicated affine seed, so every w_i is recomputable
// on demand and the marginal law is exactly W(k), CDF (1 - 1/x)^k on
// [1, inf). Weights are pairwise independent across indices; columns are
// mutually independent.
class PrecisionWeights {
 public:
  PrecisionWeights(uint64_t master_seed, uint64_t k);

  double weight(uint64_t i) const;  // max over columns, always >= 1
  double column_weight(uint64_t i, uint64_t j) const;
  uint64_t columns() const { return k_; }

 private:
  uint64_t k_;
  std::vector<AffineSeed> seeds_;
};

struct ReconstructDiagnostics {
  uint64_t contributing = 0;       // indices with a_hat * w_i >= t
  uint64_t unit_weight_limit = 0;  // w_i == 1 entries forced to s_i = 1/k
};

// Deterministic reconstruction: for each index with a_hat_i * w_i / t >= 1,
//   s_i = 1/k + ((k-1)/k) * (a_hat_i * w_i / t - 1) / (w_i - 1),
// otherwise s_i = 0; the output is t * sum_i s_i. The degenerate w_i == 1
// crossing the threshold takes the limit value s_i = 1/k and is flagged.
double reconstruct(std::span<const double> weights,
                   std::span<const double> estimates,
                   const PslParams& params,
                   ReconstructDiagnostics* diag = nullptr);

// E[w^alpha] for w ~ W(k) and alpha in (0, 1), by adaptive quadrature of
// the transformed integral (k/(1-alpha)) * int_0^1 (1 - v^{1/(1-alpha)})^{k-1} dv
// to relative precision 1e-6. alpha >= 1 is rejected (the moment needs
// conditioning to be finite).
double expected_weight_power(uint64_t k, double alpha);

}  // namespace psk
