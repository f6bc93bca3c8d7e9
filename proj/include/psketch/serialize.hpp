#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "psketch/cascaded.hpp"
#include "psketch/sketch.hpp"

namespace psk {

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A sketch file holds one or more independently seeded repetitions of the
// same configuration (estimates can be amplified by taking the median,
// and the sampler retries FAIL on the next repetition). Exactly one of
// the two vectors is populated, per the problem tag.
struct SketchFile {
  Problem problem = Problem::l1;
  std::vector<LinearSketch> flat;
  std::vector<cascaded::NestedSketch> nested;

  uint32_t repetitions() const {
    return static_cast<uint32_t>(flat.size() + nested.size());
  }
};

// Fixed little-endian binary format, magic "PSK1" version 1. Cells are
// stored sparsely and canonically (sorted, exact zeros dropped), so equal
// sketches serialize to identical bytes on every platform.
std::vector<uint8_t> serialize_file(const SketchFile& file);
SketchFile deserialize_file(std::span<const uint8_t> bytes);

// Single-repetition convenience wrappers; round trips are bit-exact on
// cells and seeds.
std::vector<uint8_t> serialize(const LinearSketch& sketch);
LinearSketch deserialize_sketch(std::span<const uint8_t> bytes);
std::vector<uint8_t> serialize(const cascaded::NestedSketch& sketch);
cascaded::NestedSketch deserialize_nested(std::span<const uint8_t> bytes);

// File I/O with write-then-rename replacement.
void save_file(const std::string& path, const SketchFile& file);
SketchFile load_file(const std::string& path);

}  // namespace psk
