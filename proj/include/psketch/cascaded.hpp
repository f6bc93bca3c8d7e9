#pragma once

#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "psketch/estimators.hpp"
#include "psketch/sketch.hpp"

namespace psk::cascaded {

// Pinned generalized-p-type bounds, by regime:
//   (a) 0 < p <= q <= 2:            81 * omega
//   (b) q >= 2, p >= 2:             81 * c_q * omega^{2/p} * n^{1-2/p}
//       q >= 2, 0 < p < 2:          81 * c_q * omega^{2/p}
//   (c) q < p, p >= 1:              9 * n^{1-1/p} * omega^{1/p}
//       q < p, 0 < p < 1:           9 * omega^{1/p}
// with c_q = q^2 unless overridden. Overlapping regimes take the minimum
// applicable bound. Case (b) is the only one needing kappa-wise hashes.
struct PTypeBound {
  double value = 0.0;
  char which = '?';  // 'a', 'b' or 'c'
};
PTypeBound p_type_bound_case(double p, double q, uint64_t n, double omega,
                             double q_constant = 0.0);
double p_type_bound(double p, double q, uint64_t n, double omega);

enum class InnerMode : uint8_t {
  exact = 0,   // cell holds the raw n2-vector; the default for n2 <= 64
  sketch = 1,  // cell holds an lq (or Fq when q > 2) sketch at eps/2
};

struct CascadedConfig {
  uint64_t n1 = 0;
  uint64_t n2 = 0;
  double p = 1.0;
  double q = 1.0;
  double epsilon = 0.0;
  double rho = 0.0;
  double zeta = 8.0;
  uint64_t k = 0;
  double t = 0.0;
  uint64_t m = 0;
  uint32_t l = 0;
  double omega = 0.0;        // 10 k ln(n1^5)
  double omega_prime = 0.0;  // 3 p omega / eps, the p-type budget
  double alpha_bound = 0.0;  // selected p-type bound (m = ceil of it)
  char bound_case = '?';
  uint32_t kappa = 2;        // 2, or 2 ceil(q) + 2 in case (b)
  InnerMode inner = InnerMode::exact;
  uint64_t master_seed = 0;
  double q_constant = 0.0;   // 0 means the default q^2

  struct Options {
    double q_constant = 0.0;
    uint32_t table_factor = 4;
    uint64_t inner_exact_max = 64;
  };

  static CascadedConfig create(uint64_t n1, uint64_t n2, double p, double q,
                               double epsilon, double zeta,
                               uint64_t master_seed);
  static CascadedConfig create(uint64_t n1, uint64_t n2, double p, double q,
                               double epsilon, double zeta,
                               uint64_t master_seed, const Options& options);

  bool operator==(const CascadedConfig&) const = default;
};

// Outer hash tables whose cells hold inner linear-sketch state:
//   cell(j, z) = sum_{i: h_j(i) = z} g_j(i) * w_i^{1/p} * L_X(row_i).
// With exact cells L_X is the identity and a cell is a dense n2-vector.
class NestedSketch {
 public:
  static NestedSketch create(uint64_t n1, uint64_t n2, double p, double q,
                             double epsilon, double zeta, uint64_t master_seed);
  static NestedSketch create(uint64_t n1, uint64_t n2, double p, double q,
                             double epsilon, double zeta, uint64_t master_seed,
                             const CascadedConfig::Options& options);
  explicit NestedSketch(const CascadedConfig& config);

  const CascadedConfig& config() const { return config_; }
  uint64_t update_count() const { return update_count_; }

  void update(uint64_t i, uint64_t j, double delta);
  static NestedSketch merge(const NestedSketch& a, const NestedSketch& b);

  EstimateReport estimate(const EstimateOptions& options = {}) const;

  uint64_t bucket_of(uint32_t table, uint64_t i) const;
  int sign_of(uint32_t table, uint64_t i) const;
  double weight(uint64_t i) const;

  // Inner-estimator norm of one cell (exact lq norm for exact cells).
  double cell_norm(uint32_t table, uint64_t z) const;

  using DenseCell = std::vector<double>;
  using SparseCell = std::unordered_map<uint64_t, double>;
  using ExactTable = std::unordered_map<uint64_t, DenseCell>;
  using SketchTable = std::unordered_map<uint64_t, SparseCell>;

  const std::vector<ExactTable>& exact_tables() const { return exact_tables_; }
  const std::vector<SketchTable>& sketch_tables() const {
    return sketch_tables_;
  }
  std::vector<ExactTable>& exact_tables() { return exact_tables_; }
  std::vector<SketchTable>& sketch_tables() { return sketch_tables_; }
  void set_update_count(uint64_t c) { update_count_ = c; }

  // Fraction of cell reads in the last estimate() whose inner estimator
  // came back flagged; always 0 for exact cells.
  double last_inner_failure_rate() const { return last_inner_failure_rate_; }

 private:
  double inner_norm(const SparseCell& cell) const;

  CascadedConfig config_;
  std::vector<AffineSeed> bucket_seeds_;
  std::vector<AffineSeed> sign_seeds_;
  std::vector<PolySeed> poly_bucket_seeds_;
  std::vector<PolySeed> poly_sign_seeds_;
  PrecisionWeights weights_;
  std::vector<ExactTable> exact_tables_;
  std::vector<SketchTable> sketch_tables_;
  std::unique_ptr<LinearSketch> inner_template_;
  std::vector<PolySeed> inner_ams_seeds_;
  uint64_t update_count_ = 0;
  mutable std::unordered_map<uint64_t, double> weight_cache_;
  mutable double last_inner_failure_rate_ = 0.0;
};

}  // namespace psk::cascaded
