#include "psketch/serialize.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <memory>

namespace psk {

namespace {

constexpr char kMagic[4] = {'P', 'S', 'K', '1'};
constexpr uint32_t kVersion = 1;
constexpr double kCompanionEpsilon = 0.33;

void put_u8(std::vector<uint8_t>& out, uint8_t v) { out.push_back(v); }

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<uint8_t>& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_u64(out, bits);
}

struct Reader {
  std::span<const uint8_t> data;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > data.size()) throw FormatError("truncated sketch file");
  }
  uint8_t u8() {
    need(1);
    return data[pos++];
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data[pos++]) << (8 * i);
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(data[pos++]) << (8 * i);
    return v;
  }
  double f64() {
    uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
};

void write_flat_config(std::vector<uint8_t>& out, const SketchConfig& cfg) {
  put_u8(out, static_cast<uint8_t>(cfg.problem));
  put_u64(out, cfg.n);
  put_f64(out, cfg.p);
  put_f64(out, cfg.epsilon);
  put_f64(out, cfg.rho);
  put_f64(out, cfg.zeta);
  put_u64(out, cfg.k);
  put_f64(out, cfg.t);
  put_u64(out, cfg.m);
  put_u32(out, cfg.l);
  put_f64(out, cfg.omega);
  put_f64(out, cfg.alpha_blowup);
  put_u64(out, cfg.master_seed);
}

SketchConfig read_flat_config(Reader& r) {
  SketchConfig cfg;
  uint8_t tag = r.u8();
  if (tag > 3) throw FormatError("bad problem tag in sketch body");
  cfg.problem = static_cast<Problem>(tag);
  cfg.n = r.u64();
  cfg.p = r.f64();
  cfg.epsilon = r.f64();
  cfg.rho = r.f64();
  cfg.zeta = r.f64();
  cfg.k = r.u64();
  cfg.t = r.f64();
  cfg.m = r.u64();
  cfg.l = r.u32();
  cfg.omega = r.f64();
  cfg.alpha_blowup = r.f64();
  cfg.master_seed = r.u64();
  if (cfg.n == 0 || cfg.l == 0 || cfg.m == 0 || cfg.k == 0) {
    throw FormatError("degenerate config in sketch body");
  }
  return cfg;
}

void write_tables(std::vector<uint8_t>& out,
                  const std::vector<LinearSketch::Table>& tables) {
  for (const auto& table : tables) {
    std::vector<std::pair<uint64_t, double>> cells;
    cells.reserve(table.size());
    for (const auto& [z, v] : table) {
      if (v != 0.0) cells.emplace_back(z, v);
    }
    std::sort(cells.begin(), cells.end());
    put_u64(out, cells.size());
    for (const auto& [z, v] : cells) {
      put_u64(out, z);
      put_f64(out, v);
    }
  }
}

void write_flat_body(std::vector<uint8_t>& out, const LinearSketch& sketch) {
  write_flat_config(out, sketch.config());
  put_u64(out, sketch.update_count());
  write_tables(out, sketch.tables());
  if (const AmsSketch* ams = sketch.ams()) {
    put_u8(out, 1);
    put_u32(out, ams->rows());
    for (double c : ams->counters()) put_f64(out, c);
  } else {
    put_u8(out, 0);
  }
  if (const LinearSketch* companion = sketch.companion()) {
    put_u8(out, 1);
    write_flat_body(out, *companion);
  } else {
    put_u8(out, 0);
  }
}

LinearSketch read_flat_body(Reader& r) {
  SketchConfig cfg = read_flat_config(r);
  LinearSketch sketch(cfg);
  sketch.set_update_count(r.u64());
  for (uint32_t j = 0; j < cfg.l; ++j) {
    uint64_t count = r.u64();
    for (uint64_t c = 0; c < count; ++c) {
      uint64_t z = r.u64();
      double v = r.f64();
      if (z >= cfg.m) throw FormatError("cell index out of range");
      sketch.raw_add(j, z, v);
    }
  }
  if (r.u8() == 1) {
    uint32_t rows = r.u32();
    if (!sketch.ams() || sketch.ams()->rows() != rows) {
      throw FormatError("AMS section does not match config");
    }
    std::vector<double> counters(rows);
    for (auto& c : counters) c = r.f64();
    sketch.ams()->set_counters(std::move(counters));
  }
  if (r.u8() == 1) {
    if (cfg.problem != Problem::sampler) {
      throw FormatError("companion section outside a sampler body");
    }
    LinearSketch companion = read_flat_body(r);
    if (companion.config().problem != Problem::lp || companion.companion()) {
      throw FormatError("malformed companion section");
    }
    sketch.set_companion(std::make_unique<LinearSketch>(std::move(companion)));
  }
  return sketch;
}

void write_nested_body(std::vector<uint8_t>& out,
                       const cascaded::NestedSketch& sketch) {
  const auto& cfg = sketch.config();
  put_u64(out, cfg.n1);
  put_u64(out, cfg.n2);
  put_f64(out, cfg.p);
  put_f64(out, cfg.q);
  put_f64(out, cfg.epsilon);
  put_f64(out, cfg.rho);
  put_f64(out, cfg.zeta);
  put_u64(out, cfg.k);
  put_f64(out, cfg.t);
  put_u64(out, cfg.m);
  put_u32(out, cfg.l);
  put_f64(out, cfg.omega);
  put_f64(out, cfg.omega_prime);
  put_f64(out, cfg.alpha_bound);
  put_u8(out, static_cast<uint8_t>(cfg.bound_case));
  put_u32(out, cfg.kappa);
  put_u8(out, static_cast<uint8_t>(cfg.inner));
  put_u64(out, cfg.master_seed);
  put_f64(out, cfg.q_constant);
  put_u64(out, sketch.update_count());

  if (cfg.inner == cascaded::InnerMode::exact) {
    for (const auto& table : sketch.exact_tables()) {
      std::vector<std::pair<uint64_t, const cascaded::NestedSketch::DenseCell*>>
          cells;
      for (const auto& [z, cell] : table) {
        bool nonzero = false;
        for (double v : cell) {
          if (v != 0.0) {
            nonzero = true;
            break;
          }
        }
        if (nonzero) cells.emplace_back(z, &cell);
      }
      std::sort(cells.begin(), cells.end());
      put_u64(out, cells.size());
      for (const auto& [z, cell] : cells) {
        put_u64(out, z);
        for (double v : *cell) put_f64(out, v);
      }
    }
  } else {
    for (const auto& table : sketch.sketch_tables()) {
      std::vector<std::pair<uint64_t, const cascaded::NestedSketch::SparseCell*>>
          cells;
      for (const auto& [z, cell] : table) cells.emplace_back(z, &cell);
      std::sort(cells.begin(), cells.end());
      put_u64(out, cells.size());
      for (const auto& [z, cell] : cells) {
        std::vector<std::pair<uint64_t, double>> entries;
        entries.reserve(cell->size());
        for (const auto& [key, v] : *cell) {
          if (v != 0.0) entries.emplace_back(key, v);
        }
        std::sort(entries.begin(), entries.end());
        put_u64(out, z);
        put_u64(out, entries.size());
        for (const auto& [key, v] : entries) {
          put_u64(out, key);
          put_f64(out, v);
        }
      }
    }
  }
}

cascaded::NestedSketch read_nested_body(Reader& r) {
  cascaded::CascadedConfig cfg;
  cfg.n1 = r.u64();
  cfg.n2 = r.u64();
  cfg.p = r.f64();
  cfg.q = r.f64();
  cfg.epsilon = r.f64();
  cfg.rho = r.f64();
  cfg.zeta = r.f64();
  cfg.k = r.u64();
  cfg.t = r.f64();
  cfg.m = r.u64();
  cfg.l = r.u32();
  cfg.omega = r.f64();
  cfg.omega_prime = r.f64();
  cfg.alpha_bound = r.f64();
  cfg.bound_case = static_cast<char>(r.u8());
  cfg.kappa = r.u32();
  uint8_t inner = r.u8();
  if (inner > 1) throw FormatError("bad inner-mode tag");
  cfg.inner = static_cast<cascaded::InnerMode>(inner);
  cfg.master_seed = r.u64();
  cfg.q_constant = r.f64();
  if (cfg.n1 == 0 || cfg.n2 == 0 || cfg.l == 0 || cfg.m == 0) {
    throw FormatError("degenerate cascaded config");
  }
  cascaded::NestedSketch sketch(cfg);
  sketch.set_update_count(r.u64());
  if (cfg.inner == cascaded::InnerMode::exact) {
    for (uint32_t j = 0; j < cfg.l; ++j) {
      uint64_t count = r.u64();
      for (uint64_t c = 0; c < count; ++c) {
        uint64_t z = r.u64();
        if (z >= cfg.m) throw FormatError("cell index out of range");
        cascaded::NestedSketch::DenseCell cell(cfg.n2);
        for (auto& v : cell) v = r.f64();
        sketch.exact_tables()[j][z] = std::move(cell);
      }
    }
  } else {
    for (uint32_t j = 0; j < cfg.l; ++j) {
      uint64_t count = r.u64();
      for (uint64_t c = 0; c < count; ++c) {
        uint64_t z = r.u64();
        if (z >= cfg.m) throw FormatError("cell index out of range");
        uint64_t len = r.u64();
        cascaded::NestedSketch::SparseCell cell;
        cell.reserve(len);
        for (uint64_t e = 0; e < len; ++e) {
          uint64_t key = r.u64();
          cell[key] = r.f64();
        }
        sketch.sketch_tables()[j][z] = std::move(cell);
      }
    }
  }
  return sketch;
}

}  // namespace

std::vector<uint8_t> serialize_file(const SketchFile& file) {
  if (file.repetitions() == 0) {
    throw std::invalid_argument("sketch file needs at least one repetition");
  }
  bool nested = file.problem == Problem::cascaded;
  if (nested ? !file.flat.empty() || file.nested.empty()
             : !file.nested.empty() || file.flat.empty()) {
    throw std::invalid_argument("problem tag does not match file contents");
  }
  std::vector<uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kVersion);
  put_u8(out, static_cast<uint8_t>(file.problem));
  put_u32(out, file.repetitions());
  if (nested) {
    for (const auto& sketch : file.nested) write_nested_body(out, sketch);
  } else {
    for (const auto& sketch : file.flat) {
      if (sketch.config().problem != file.problem) {
        throw std::invalid_argument("repetition problem mismatch");
      }
      write_flat_body(out, sketch);
    }
  }
  return out;
}

SketchFile deserialize_file(std::span<const uint8_t> bytes) {
  Reader r{bytes};
  r.need(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("bad magic: not a sketch file");
  }
  r.pos = 4;
  uint32_t version = r.u32();
  if (version != kVersion) throw FormatError("unsupported format version");
  uint8_t tag = r.u8();
  if (tag > 4) throw FormatError("bad problem tag");
  SketchFile file;
  file.problem = static_cast<Problem>(tag);
  uint32_t reps = r.u32();
  if (reps == 0) throw FormatError("file holds no repetitions");
  for (uint32_t i = 0; i < reps; ++i) {
    if (file.problem == Problem::cascaded) {
      file.nested.push_back(read_nested_body(r));
    } else {
      LinearSketch sketch = read_flat_body(r);
      if (sketch.config().problem != file.problem) {
        throw FormatError("body problem tag does not match header");
      }
      file.flat.push_back(std::move(sketch));
    }
  }
  if (r.pos != bytes.size()) throw FormatError("trailing bytes in sketch file");
  return file;
}

std::vector<uint8_t> serialize(const LinearSketch& sketch) {
  std::vector<uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kVersion);
  put_u8(out, static_cast<uint8_t>(sketch.config().problem));
  put_u32(out, 1);
  write_flat_body(out, sketch);
  return out;
}

LinearSketch deserialize_sketch(std::span<const uint8_t> bytes) {
  SketchFile file = deserialize_file(bytes);
  if (file.flat.size() != 1) {
    throw FormatError("expected a single-repetition flat sketch file");
  }
  return std::move(file.flat.front());
}

std::vector<uint8_t> serialize(const cascaded::NestedSketch& sketch) {
  std::vector<uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kVersion);
  put_u8(out, static_cast<uint8_t>(Problem::cascaded));
  put_u32(out, 1);
  write_nested_body(out, sketch);
  return out;
}

cascaded::NestedSketch deserialize_nested(std::span<const uint8_t> bytes) {
  SketchFile file = deserialize_file(bytes);
  if (file.nested.size() != 1) {
    throw FormatError("expected a single-repetition cascaded sketch file");
  }
  return std::move(file.nested.front());
}

void save_file(const std::string& path, const SketchFile& file) {
  std::vector<uint8_t> bytes = serialize_file(file);
  std::string tmp = path + ".tmp";
  {
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(
        std::fopen(tmp.c_str(), "wb"), &std::fclose);
    if (!fp) throw std::runtime_error("cannot open " + tmp + " for writing");
    if (std::fwrite(bytes.data(), 1, bytes.size(), fp.get()) != bytes.size()) {
      throw std::runtime_error("short write to " + tmp);
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("cannot replace " + path);
  }
}

SketchFile load_file(const std::string& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(
      std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!fp) throw std::runtime_error("cannot open " + path);
  std::fseek(fp.get(), 0, SEEK_END);
  long size = std::ftell(fp.get());
  std::fseek(fp.get(), 0, SEEK_SET);
  std::vector<uint8_t> bytes(static_cast<size_t>(size));
  if (std::fread(bytes.data(), 1, bytes.size(), fp.get()) != bytes.size()) {
    throw std::runtime_error("short read from " + path);
  }
  return deserialize_file(bytes);
}

}  // namespace psk
