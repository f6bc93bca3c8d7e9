#include "psketch/hashing.hpp"

#include <stdexcept>

namespace psk {

namespace {

constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline uint64_t mix64(uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

inline uint64_t mulmod_m61(uint64_t a, uint64_t b) {
  unsigned __int128 z = static_cast<unsigned __int128>(a) * b;
  uint64_t lo = static_cast<uint64_t>(z & kMersenne61);
  uint64_t hi = static_cast<uint64_t>(z >> 61);
  uint64_t s = lo + hi;
  s = (s & kMersenne61) + (s >> 61);
  if (s >= kMersenne61) s -= kMersenne61;
  return s;
}

}  // namespace

uint64_t mulmod(uint64_t a, uint64_t b, uint64_t prime) {
  if (prime == kMersenne61) return mulmod_m61(a, b);
  return static_cast<uint64_t>(
      static_cast<unsigned __int128>(a) * b % prime);
}

uint64_t affine_eval(const AffineSeed& seed, uint64_t i) {
  uint64_t x = i % seed.prime;
  uint64_t v = mulmod(seed.a, x, seed.prime) + seed.b;
  if (v >= seed.prime) v -= seed.prime;
  return v;
}

uint64_t poly_eval(const PolySeed& seed, uint64_t i) {
  uint64_t x = i % seed.prime;
  uint64_t acc = 0;
  for (auto it = seed.coeffs.rbegin(); it != seed.coeffs.rend(); ++it) {
    acc = mulmod(acc, x, seed.prime) + *it;
    if (acc >= seed.prime) acc -= seed.prime;
  }
  return acc;
}

uint64_t bucket(const AffineSeed& seed, uint64_t i, uint64_t m) {
  return affine_eval(seed, i) % m;
}

uint64_t poly_bucket(const PolySeed& seed, uint64_t i, uint64_t m) {
  return poly_eval(seed, i) % m;
}

int sign(const AffineSeed& seed, uint64_t i) {
  return (affine_eval(seed, i) & 1) ? 1 : -1;
}

int poly_sign(const PolySeed& seed, uint64_t i) {
  return (poly_eval(seed, i) & 1) ? 1 : -1;
}

double uniform01(const AffineSeed& seed, uint64_t i) {
  return static_cast<double>(affine_eval(seed, i) + 1) /
         static_cast<double>(seed.prime);
}

uint64_t derive64(uint64_t master, Role role, uint64_t index) {
  uint64_t z = mix64(master + kGolden * static_cast<uint64_t>(role));
  return mix64(z + kGolden * (index + 1));
}

AffineSeed make_affine_seed(uint64_t master, Role role, uint64_t index,
                            uint64_t prime) {
  AffineSeed seed;
  seed.prime = prime;
  seed.a = 1 + derive64(master, role, 2 * index) % (prime - 1);
  seed.b = derive64(master, role, 2 * index + 1) % prime;
  return seed;
}

PolySeed make_poly_seed(uint64_t master, Role role, uint64_t index,
                        uint32_t kappa, uint64_t prime) {
  if (kappa < 2 || kappa > 64) throw std::invalid_argument("kappa out of range");
  PolySeed seed;
  seed.prime = prime;
  seed.kappa = kappa;
  seed.coeffs.resize(kappa);
  for (uint32_t d = 0; d < kappa; ++d) {
    seed.coeffs[d] = derive64(master, role, index * 64 + d) % prime;
  }
  return seed;
}

}  // namespace psk
