#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <random>

#include "psketch/estimators.hpp"
#include "psketch/serialize.hpp"

using namespace psk;

namespace {

bool tables_equal(const LinearSketch& a, const LinearSketch& b) {
  for (uint32_t j = 0; j < a.config().l; ++j) {
    for (const auto& [z, v] : a.tables()[j]) {
      if (v != 0.0 && b.cell(j, z) != v) return false;
    }
    for (const auto& [z, v] : b.tables()[j]) {
      if (v != 0.0 && a.cell(j, z) != v) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("round trip of a fresh sketch") {
  auto s = LinearSketch::create(Problem::l1, 256, 0.0, 0.25, 8.0, 42);
  auto bytes = serialize(s);
  auto back = deserialize_sketch(bytes);
  CHECK(back.config() == s.config());
  CHECK(back.update_count() == 0);
  CHECK(tables_equal(s, back));
  CHECK(serialize(back) == bytes);  // canonical form is stable
}

TEST_CASE("round trip after ten thousand updates is bit-exact") {
  auto s = LinearSketch::create(Problem::lp, 512, 1.5, 0.25, 8.0, 43);
  std::mt19937_64 rng(7);
  for (int u = 0; u < 10000; ++u) {
    s.update(rng() % 512, static_cast<double>(rng() % 201) - 100.0);
  }
  auto bytes = serialize(s);
  auto back = deserialize_sketch(bytes);
  CHECK(back.update_count() == s.update_count());
  CHECK(tables_equal(s, back));
  CHECK(serialize(back) == bytes);
  // The estimator sees the same sketch.
  CHECK(estimate_lp(back).value == estimate_lp(s).value);
}

TEST_CASE("fk sketches carry their AMS section") {
  auto s = LinearSketch::create(Problem::fk, 512, 3.0, 0.3, 8.0, 44);
  for (uint64_t i = 0; i < 64; ++i) s.update(i, 3.0);
  auto back = deserialize_sketch(serialize(s));
  REQUIRE(back.ams() != nullptr);
  CHECK(back.ams()->counters() == s.ams()->counters());
  CHECK(estimate_fk(back, *back.ams()).value ==
        estimate_fk(s, *s.ams()).value);
}

TEST_CASE("sampler sketches embed their companion") {
  auto s = LinearSketch::create(Problem::sampler, 64, 1.0, 0.25, 8.0, 45);
  for (uint64_t i = 0; i < 32; ++i) s.update(i, 2.0);
  REQUIRE(s.companion() != nullptr);
  auto back = deserialize_sketch(serialize(s));
  REQUIRE(back.companion() != nullptr);
  CHECK(back.companion()->config() == s.companion()->config());
  CHECK(tables_equal(*back.companion(), *s.companion()));
}

TEST_CASE("cascaded round trips, exact and sketch cells") {
  auto exact = cascaded::NestedSketch::create(16, 8, 1.0, 2.0, 0.3, 8.0, 46);
  exact.update(3, 5, 2.0);
  exact.update(9, 1, -4.0);
  auto bytes = serialize(exact);
  auto back = deserialize_nested(bytes);
  CHECK(back.config() == exact.config());
  CHECK(serialize(back) == bytes);
  CHECK(back.estimate().value == exact.estimate().value);

  auto inner = cascaded::NestedSketch::create(16, 128, 1.0, 1.5, 0.3, 8.0, 47);
  inner.update(2, 100, 3.0);
  auto bytes2 = serialize(inner);
  auto back2 = deserialize_nested(bytes2);
  CHECK(serialize(back2) == bytes2);
  CHECK(back2.cell_norm(0, back2.bucket_of(0, 2)) ==
        inner.cell_norm(0, inner.bucket_of(0, 2)));
}

TEST_CASE("format errors are explicit") {
  auto s = LinearSketch::create(Problem::l1, 256, 0.0, 0.25, 8.0, 48);
  auto bytes = serialize(s);

  auto corrupted = bytes;
  corrupted[0] = 'X';
  CHECK_THROWS_AS(deserialize_file(corrupted), FormatError);

  auto truncated = bytes;
  truncated.resize(truncated.size() / 2);
  CHECK_THROWS_AS(deserialize_file(truncated), FormatError);

  auto bad_version = bytes;
  bad_version[4] = 9;
  CHECK_THROWS_AS(deserialize_file(bad_version), FormatError);

  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(deserialize_file(trailing), FormatError);
}

TEST_CASE("multi-repetition files keep their order") {
  SketchFile file;
  file.problem = Problem::l1;
  for (uint64_t r = 0; r < 3; ++r) {
    file.flat.push_back(
        LinearSketch::create(Problem::l1, 64, 0.0, 0.25, 8.0, 100 + r));
    file.flat.back().update(5, static_cast<double>(r + 1));
  }
  auto bytes = serialize_file(file);
  auto back = deserialize_file(bytes);
  CHECK(back.repetitions() == 3);
  for (uint64_t r = 0; r < 3; ++r) {
    CHECK(back.flat[r].config().master_seed == 100 + r);
    CHECK(back.flat[r].update_count() == 1);
  }
  CHECK(serialize_file(back) == bytes);
}

TEST_CASE("save and load through the filesystem") {
  std::string path = "serialize_test.psk";
  SketchFile file;
  file.problem = Problem::lp;
  file.flat.push_back(LinearSketch::create(Problem::lp, 64, 2.0, 0.25, 8.0, 9));
  file.flat.back().update(3, 5.0);
  save_file(path, file);
  auto back = load_file(path);
  CHECK(back.problem == Problem::lp);
  CHECK(tables_equal(back.flat.front(), file.flat.front()));
  std::remove(path.c_str());
}

TEST_CASE("update order only moves cells within tolerance") {
  auto forward = LinearSketch::create(Problem::lp, 128, 1.5, 0.25, 8.0, 50);
  auto backward = LinearSketch::create(Problem::lp, 128, 1.5, 0.25, 8.0, 50);
  std::vector<std::pair<uint64_t, double>> ops;
  std::mt19937_64 rng(11);
  for (int u = 0; u < 500; ++u) {
    ops.emplace_back(rng() % 128, static_cast<double>(rng() % 41) - 20.0);
  }
  for (auto [i, d] : ops) forward.update(i, d);
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
    backward.update(it->first, it->second);
  }
  for (uint32_t j = 0; j < forward.config().l; ++j) {
    for (const auto& [z, v] : forward.tables()[j]) {
      double other = backward.cell(j, z);
      CHECK(std::abs(other - v) <= 1e-9 * (std::abs(v) + 1.0));
    }
  }
}
