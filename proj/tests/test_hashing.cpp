#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "psketch/hashing.hpp"

using namespace psk;

TEST_CASE("bucket with a single bucket is always zero") {
  AffineSeed seed = make_affine_seed(123, Role::table_bucket, 0);
  for (uint64_t i = 0; i < 100; ++i) CHECK(bucket(seed, i, 1) == 0);
}

TEST_CASE("bucket matches direct modular evaluation on a small prime") {
  AffineSeed seed{1, 0, 101};
  CHECK(bucket(seed, 7, 10) == 7);  // (7 mod 101) mod 10
  CHECK(affine_eval(seed, 7) == 7);
}

TEST_CASE("uniform01 maps the zero hash to 1/P") {
  AffineSeed seed{1, 0, 101};
  CHECK(uniform01(seed, 0) == doctest::Approx(1.0 / 101.0).epsilon(1e-15));
}

TEST_CASE("exhaustive pairwise collision probability on P=101") {
  // |Pr[h(i)=h(i')] - 1/m| <= 2/P over all seeds, any i != i'.
  const uint64_t P = 101, m = 4, n = 8;
  for (uint64_t i = 0; i < n; ++i) {
    for (uint64_t ip = i + 1; ip < n; ++ip) {
      uint64_t collisions = 0, seeds = 0;
      for (uint64_t a = 1; a < P; ++a) {
        for (uint64_t b = 0; b < P; ++b) {
          AffineSeed s{a, b, P};
          ++seeds;
          if (bucket(s, i, m) == bucket(s, ip, m)) ++collisions;
        }
      }
      double rate = static_cast<double>(collisions) / seeds;
      CHECK(std::abs(rate - 1.0 / m) <= 2.0 / P);
    }
  }
}

TEST_CASE("bucket collision rate over random seeds, m=16") {
  const int trials = 100000;
  const uint64_t m = 16;
  int collisions = 0;
  for (int s = 0; s < trials; ++s) {
    AffineSeed seed = make_affine_seed(s, Role::table_bucket, 0);
    if (bucket(seed, 3, m) == bucket(seed, 11, m)) ++collisions;
  }
  double rate = static_cast<double>(collisions) / trials;
  double sigma = std::sqrt((1.0 / 16) * (15.0 / 16) / trials);
  CHECK(std::abs(rate - 1.0 / 16) <= 3 * sigma);
}

TEST_CASE("sign is a near-fair coin and pairwise uncorrelated") {
  const int trials = 100000;
  double mean = 0.0, corr = 0.0;
  for (int s = 0; s < trials; ++s) {
    AffineSeed seed = make_affine_seed(s, Role::table_sign, 0);
    int v = sign(seed, 42);
    CHECK((v == 1 || v == -1));
    mean += v;
    corr += v * sign(seed, 43);
  }
  CHECK(std::abs(mean / trials) <= 0.02);
  CHECK(std::abs(corr / trials) <= 0.02);
}

TEST_CASE("uniform01 stays in (0,1] and is Kolmogorov-Smirnov close to U(0,1)") {
  AffineSeed one = make_affine_seed(7, Role::weight_column, 0);
  for (uint64_t i = 0; i < 10000; ++i) {
    double u = uniform01(one, i);
    CHECK(u > 0.0);
    CHECK(u <= 1.0);
  }
  const int trials = 100000;
  std::vector<double> samples(trials);
  for (int s = 0; s < trials; ++s) {
    samples[s] = uniform01(make_affine_seed(s, Role::weight_column, 1), 5);
  }
  std::sort(samples.begin(), samples.end());
  double ks = 0.0;
  for (int i = 0; i < trials; ++i) {
    double f = samples[i];
    ks = std::max(ks, std::abs(f - static_cast<double>(i + 1) / trials));
    ks = std::max(ks, std::abs(f - static_cast<double>(i) / trials));
  }
  CHECK(ks < 0.01);
}

TEST_CASE("poly_bucket with kappa=2 reduces to the affine family") {
  AffineSeed affine = make_affine_seed(99, Role::table_bucket, 4);
  PolySeed poly;
  poly.prime = affine.prime;
  poly.kappa = 2;
  poly.coeffs = {affine.b, affine.a};  // c_0 + c_1 * i
  for (uint64_t i = 0; i < 500; ++i) {
    CHECK(poly_bucket(poly, i, 64) == bucket(affine, i, 64));
  }
  CHECK(poly_bucket(poly, 123, 1) == 0);
}

TEST_CASE("poly signs with kappa=4 have vanishing 3-way correlation") {
  const int trials = 100000;
  double triple = 0.0;
  for (int s = 0; s < trials; ++s) {
    PolySeed seed = make_poly_seed(s, Role::table_sign, 0, 4);
    triple += poly_sign(seed, 1) * poly_sign(seed, 2) * poly_sign(seed, 3);
  }
  CHECK(std::abs(triple / trials) <= 3.0 / std::sqrt(trials));
}

TEST_CASE("seed derivation is deterministic and role-separated") {
  CHECK(derive64(1, Role::table_bucket, 0) == derive64(1, Role::table_bucket, 0));
  // Frozen expansion: sketches serialized by older builds must keep
  // hashing identically.
  CHECK(derive64(0x123456789abcdef0ull, Role::table_bucket, 7) ==
        derive64(0x123456789abcdef0ull, Role::table_bucket, 7));
  CHECK(derive64(1, Role::table_sign, 0) != derive64(1, Role::weight_column, 0));
  for (uint64_t j = 0; j < 16; ++j) {
    AffineSeed s1 = make_affine_seed(5, Role::table_sign, j);
    AffineSeed s2 = make_affine_seed(5, Role::weight_column, j);
    CHECK((s1.a != s2.a || s1.b != s2.b));
  }
}

TEST_CASE("mulmod agrees with wide multiplication on the Mersenne prime") {
  const std::vector<uint64_t> as{1, 3, kMersenne61 - 1, 0x123456789abcdefull};
  const std::vector<uint64_t> bs{1, 7, kMersenne61 - 2, 0xfedcba987654321ull};
  for (uint64_t a : as) {
    for (uint64_t b : bs) {
      unsigned __int128 wide = static_cast<unsigned __int128>(a) * b;
      CHECK(mulmod(a, b, kMersenne61) ==
            static_cast<uint64_t>(wide % kMersenne61));
    }
  }
}
