#pragma once

#include <cstdint>
#include <vector>

namespace psk {

// 2^61 - 1, the production field modulus.
inline constexpr uint64_t kMersenne61 = (uint64_t{1} << 61) - 1;

// h(i) = (a*i + b) mod P over the prime field F_P. A uniformly random
// (a, b) with a != 0 gives a pairwise-independent family. Evaluation is
// integer-only, so identical seeds produce identical outputs on every
// machine.
struct AffineSeed {
  uint64_t a = 1;  // 1 <= a < prime
  uint64_t b = 0;  // 0 <= b < prime
  uint64_t prime = kMersenne61;
};

// h(i) = sum_d c_d * i^d mod P, degree kappa-1. Uniformly random
// coefficients give a kappa-wise independent family.
struct PolySeed {
  std::vector<uint64_t> coeffs;  // kappa entries, each < prime
  uint64_t prime = kMersenne61;
  uint32_t kappa = 2;
};

uint64_t mulmod(uint64_t a, uint64_t b, uint64_t prime);
uint64_t affine_eval(const AffineSeed& seed, uint64_t i);
uint64_t poly_eval(const PolySeed& seed, uint64_t i);

// Bucket hash into [0, m).
uint64_t bucket(const AffineSeed& seed, uint64_t i, uint64_t m);
uint64_t poly_bucket(const PolySeed& seed, uint64_t i, uint64_t m);

// Rademacher sign in {-1, +1}; Pr[+1] = 1/2 up to O(1/P).
int sign(const AffineSeed& seed, uint64_t i);
int poly_sign(const PolySeed& seed, uint64_t i);

// Uniform variate (h(i) + 1) / P in (0, 1]. Never zero, so 1/u is finite.
double uniform01(const AffineSeed& seed, uint64_t i);

// Roles partition the derived seed space so hash families drawn for
// different purposes never share seed material.
enum class Role : uint32_t {
  table_bucket = 1,
  table_sign = 2,
  weight_column = 3,
  ams_row = 4,
  companion = 5,
  repetition = 6,
  inner_sketch = 7,
  trial = 8,
};

// Fixed counter-based expansion of a 64-bit master seed into per-role
// seed words: two rounds of the splitmix64 finalizer over
// (master + GOLDEN*role, then + GOLDEN*(index+1)). This is the only
// randomness source in the library; the mapping is frozen so that
// sketches built on different machines from the same master seed merge.
uint64_t derive64(uint64_t master, Role role, uint64_t index);

AffineSeed make_affine_seed(uint64_t master, Role role, uint64_t index,
                            uint64_t prime = kMersenne61);
PolySeed make_poly_seed(uint64_t master, Role role, uint64_t index,
                        uint32_t kappa, uint64_t prime = kMersenne61);

}  // namespace psk
