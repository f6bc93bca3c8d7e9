#pragma once

#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "psketch/hashing.hpp"
#include "psketch/psl.hpp"

namespace psk {

enum class Problem : uint8_t {
  fk = 0,
  l1 = 1,
  lp = 2,
  sampler = 3,
  cascaded = 4,  // used by the file format; see cascaded.hpp
};

const char* problem_name(Problem p);

// All dimensioning parameters of one sketch, derivable from
// (problem, n, p, epsilon, zeta, master_seed). Per problem:
//   fk      rho = (eps/4)/n^{p/2-1}, k = ceil(zeta/(rho eps^2)),
//           omega = 9 E[w^{2/p}],   m = ceil(alpha omega),
//           alpha = (6p)^2 / eps^{2-2/p}
//   l1      rho = eps/8, omega = 10 k ln(n^5), m = ceil(3 omega)
//   lp      rho = eps/8, omega = 10 k ln(n^5), alpha = 3^{2+p} eps^{1-p},
//           m = ceil(alpha omega)
//   sampler k = ceil(zeta t log2 n), omega = 10 k ln(n^5),
//           alpha = 3^{2+p} eps^{1-p}, m = ceil(alpha omega)
// and always l = next odd >= table_factor * ceil(log2 n), t = 4/eps.
struct SketchConfig {
  Problem problem = Problem::l1;
  uint64_t n = 0;
  double p = 1.0;
  double epsilon = 0.0;
  double rho = 0.0;
  double zeta = 8.0;
  uint64_t k = 0;
  double t = 0.0;
  uint64_t m = 0;
  uint32_t l = 0;
  double omega = 0.0;
  double alpha_blowup = 0.0;
  uint64_t master_seed = 0;

  struct Options {
    uint32_t table_factor = 4;      // the "l = O(log n)" multiplier
    bool sampler_companion = true;  // embed the norm sketch used for r
  };

  static SketchConfig create(Problem problem, uint64_t n, double p,
                             double epsilon, double zeta, uint64_t master_seed);
  static SketchConfig create(Problem problem, uint64_t n, double p,
                             double epsilon, double zeta, uint64_t master_seed,
                             const Options& options);

  bool operator==(const SketchConfig&) const = default;
};

// AMS second-moment sketch: 6*ceil(p^2 ln n) counters of 4-wise signed
// sums, read out as a median of 6-counter group means. estimate() is
// scaled so that (1 - 1/p)||x||_2 <= r <= ||x||_2 holds with probability
// at least 0.95 at this width.
class AmsSketch {
 public:
  AmsSketch(uint64_t n, double p, uint64_t master_seed);

  void update(uint64_t i, double delta);
  double estimate() const;
  void merge_from(const AmsSketch& other);

  uint32_t rows() const { return static_cast<uint32_t>(counters_.size()); }
  const std::vector<double>& counters() const { return counters_; }
  void set_counters(std::vector<double> counters);

 private:
  uint64_t n_;
  double p_;
  std::vector<PolySeed> seeds_;
  std::vector<double> counters_;
};

// The l x m array of weight-scaled, sign-flipped cell sums
//   H_j(z) = sum_{i: h_j(i) = z} g_j(i) * w_i^{1/p} * x_i.
// Cells are stored sparsely (the pinned m runs into the hundreds of
// millions while at most n*l cells are ever touched); absent cells read
// as 0.0, which keeps the dense semantics intact.
//
// Concurrency: updates must be externally serialized; estimation and
// sampling read a quiesced sketch. Distinct sketches are independent.
class LinearSketch {
 public:
  static LinearSketch create(Problem problem, uint64_t n, double p,
                             double epsilon, double zeta, uint64_t master_seed);
  static LinearSketch create(Problem problem, uint64_t n, double p,
                             double epsilon, double zeta, uint64_t master_seed,
                             const SketchConfig::Options& options);
  explicit LinearSketch(const SketchConfig& config);

  const SketchConfig& config() const { return config_; }
  uint64_t update_count() const { return update_count_; }

  void update(uint64_t i, double delta);
  static LinearSketch merge(const LinearSketch& a, const LinearSketch& b);

  double cell(uint32_t table, uint64_t z) const;
  uint64_t bucket_of(uint32_t table, uint64_t i) const;
  int sign_of(uint32_t table, uint64_t i) const;

  double weight(uint64_t i) const;  // cached w_i
  const PrecisionWeights& weights() const { return weights_; }

  const AmsSketch* ams() const { return ams_.get(); }          // fk only
  AmsSketch* ams() { return ams_.get(); }
  const LinearSketch* companion() const { return companion_.get(); }  // sampler
  LinearSketch* companion() { return companion_.get(); }
  void set_companion(std::unique_ptr<LinearSketch> companion);

  bool is_zero() const;

  using Table = std::unordered_map<uint64_t, double>;
  const std::vector<Table>& tables() const { return tables_; }

  // Direct cell access for serialization and fault-injection tests.
  void raw_add(uint32_t table, uint64_t z, double delta);
  void set_update_count(uint64_t c) { update_count_ = c; }

 private:
  SketchConfig config_;
  std::vector<AffineSeed> bucket_seeds_;
  std::vector<AffineSeed> sign_seeds_;
  PrecisionWeights weights_;
  std::vector<Table> tables_;
  uint64_t update_count_ = 0;
  mutable std::unordered_map<uint64_t, double> weight_cache_;
  std::unique_ptr<AmsSketch> ams_;
  std::unique_ptr<LinearSketch> companion_;
};

}  // namespace psk
