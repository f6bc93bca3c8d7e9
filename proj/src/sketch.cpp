#include "psketch/sketch.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace psk {

namespace {

uint32_t ceil_log2(uint64_t n) {
  return n <= 1 ? 0 : 64 - std::countl_zero(n - 1);
}

uint32_t next_odd_at_least(uint64_t v) {
  if (v < 3) v = 3;
  return static_cast<uint32_t>(v | 1);
}

}  // namespace

const char* problem_name(Problem p) {
  switch (p) {
    case Problem::fk: return "fk";
    case Problem::l1: return "l1";
    case Problem::lp: return "lp";
    case Problem::sampler: return "sampler";
    case Problem::cascaded: return "cascaded";
  }
  return "?";
}

SketchConfig SketchConfig::create(Problem problem, uint64_t n, double p,
                                  double epsilon, double zeta,
                                  uint64_t master_seed) {
  return create(problem, n, p, epsilon, zeta, master_seed, Options{});
}

SketchConfig SketchConfig::create(Problem problem, uint64_t n, double p,
                                  double epsilon, double zeta,
                                  uint64_t master_seed,
                                  const Options& options) {
  if (n < 8) throw std::invalid_argument("n must be at least 8");
  if (!(epsilon > 0.0) || !(epsilon < 1.0 / 3.0)) {
    throw std::invalid_argument("epsilon must lie in (0, 1/3)");
  }
  if (!(zeta > 0.0)) throw std::invalid_argument("zeta must be positive");

  SketchConfig cfg;
  cfg.problem = problem;
  cfg.n = n;
  cfg.epsilon = epsilon;
  cfg.zeta = zeta;
  cfg.master_seed = master_seed;
  cfg.l = next_odd_at_least(static_cast<uint64_t>(options.table_factor) *
                            ceil_log2(n));
  const double nd = static_cast<double>(n);
  const double log_n5 = 5.0 * std::log(nd);

  switch (problem) {
    case Problem::fk: {
      if (!(p > 2.0)) throw std::invalid_argument("fk requires p > 2");
      cfg.p = p;
      cfg.rho = (epsilon / 4.0) / std::pow(nd, p / 2.0 - 1.0);
      if (!(cfg.rho > 0.0)) {
        throw std::invalid_argument("derived rho underflowed; n too large for this p");
      }
      PslParams params = PslParams::make(epsilon, cfg.rho, zeta);
      cfg.k = params.k;
      cfg.t = params.t;
      cfg.omega = 9.0 * expected_weight_power(cfg.k, 2.0 / p);
      cfg.alpha_blowup = 36.0 * p * p / std::pow(epsilon, 2.0 - 2.0 / p);
      cfg.m = static_cast<uint64_t>(std::ceil(cfg.alpha_blowup * cfg.omega));
      break;
    }
    case Problem::l1:
    case Problem::lp: {
      if (problem == Problem::l1) {
        cfg.p = 1.0;
      } else {
        if (!(p >= 1.0) || !(p <= 2.0)) {
          throw std::invalid_argument("lp requires p in [1, 2]");
        }
        cfg.p = p;
      }
      cfg.rho = epsilon / 8.0;
      PslParams params = PslParams::make(epsilon, cfg.rho, zeta);
      cfg.k = params.k;
      cfg.t = params.t;
      cfg.omega = 10.0 * static_cast<double>(cfg.k) * log_n5;
      if (problem == Problem::l1) {
        cfg.alpha_blowup = 3.0;
      } else {
        cfg.alpha_blowup = std::pow(3.0, 2.0 + cfg.p) *
                           std::pow(epsilon, 1.0 - cfg.p);
      }
      cfg.m = static_cast<uint64_t>(std::ceil(cfg.alpha_blowup * cfg.omega));
      break;
    }
    case Problem::sampler: {
      if (!(p >= 1.0) || !(p <= 2.0)) {
        throw std::invalid_argument("sampler requires p in [1, 2]");
      }
      cfg.p = p;
      cfg.rho = epsilon / 8.0;
      cfg.t = 4.0 / epsilon;
      cfg.k = static_cast<uint64_t>(
          std::ceil(zeta * cfg.t * std::log2(nd)));
      cfg.omega = 10.0 * static_cast<double>(cfg.k) * log_n5;
      cfg.alpha_blowup = std::pow(3.0, 2.0 + p) * std::pow(epsilon, 1.0 - p);
      cfg.m = static_cast<uint64_t>(std::ceil(cfg.alpha_blowup * cfg.omega));
      break;
    }
    case Problem::cascaded:
      throw std::invalid_argument("cascaded sketches use cascaded::create");
  }
  return cfg;
}

AmsSketch::AmsSketch(uint64_t n, double p, uint64_t master_seed)
    : n_(n), p_(p) {
  uint64_t groups = static_cast<uint64_t>(
      std::ceil(p * p * std::log(static_cast<double>(n))));
  if (groups < 1) groups = 1;
  uint64_t rows = 6 * groups;
  seeds_.reserve(rows);
  for (uint64_t r = 0; r < rows; ++r) {
    seeds_.push_back(make_poly_seed(master_seed, Role::ams_row, r, 4));
  }
  counters_.assign(rows, 0.0);
}

void AmsSketch::update(uint64_t i, double delta) {
  if (i >= n_) throw std::out_of_range("index out of range");
  for (size_t r = 0; r < counters_.size(); ++r) {
    counters_[r] += poly_sign(seeds_[r], i) * delta;
  }
}

double AmsSketch::estimate() const {
  const size_t groups = counters_.size() / 6;
  std::vector<double> means(groups);
  for (size_t g = 0; g < groups; ++g) {
    double sum = 0.0;
    for (size_t r = 0; r < 6; ++r) {
      double c = counters_[6 * g + r];
      sum += c * c;
    }
    means[g] = sum / 6.0;
  }
  std::sort(means.begin(), means.end());
  double med = (groups % 2 == 1)
                   ? means[groups / 2]
                   : 0.5 * (means[groups / 2 - 1] + means[groups / 2]);
  double z = std::sqrt(std::max(0.0, med));
  return z * (1.0 - 1.0 / (2.0 * p_));
}

void AmsSketch::merge_from(const AmsSketch& other) {
  if (other.counters_.size() != counters_.size() || other.n_ != n_ ||
      other.p_ != p_) {
    throw std::invalid_argument("AMS sketch mismatch");
  }
  for (size_t r = 0; r < counters_.size(); ++r) {
    counters_[r] += other.counters_[r];
  }
}

void AmsSketch::set_counters(std::vector<double> counters) {
  if (counters.size() != counters_.size()) {
    throw std::invalid_argument("counter count mismatch");
  }
  counters_ = std::move(counters);
}

LinearSketch LinearSketch::create(Problem problem, uint64_t n, double p,
                                  double epsilon, double zeta,
                                  uint64_t master_seed) {
  return create(problem, n, p, epsilon, zeta, master_seed,
                SketchConfig::Options{});
}

LinearSketch LinearSketch::create(Problem problem, uint64_t n, double p,
                                  double epsilon, double zeta,
                                  uint64_t master_seed,
                                  const SketchConfig::Options& options) {
  LinearSketch sketch(
      SketchConfig::create(problem, n, p, epsilon, zeta, master_seed, options));
  if (problem == Problem::sampler && options.sampler_companion) {
    sketch.companion_ = std::make_unique<LinearSketch>(SketchConfig::create(
        Problem::lp, n, p, 0.33, zeta,
        derive64(master_seed, Role::companion, 0)));
  }
  return sketch;
}

LinearSketch::LinearSketch(const SketchConfig& config)
    : config_(config), weights_(config.master_seed, config.k),
      tables_(config.l) {
  bucket_seeds_.reserve(config_.l);
  sign_seeds_.reserve(config_.l);
  for (uint32_t j = 0; j < config_.l; ++j) {
    bucket_seeds_.push_back(
        make_affine_seed(config_.master_seed, Role::table_bucket, j));
    sign_seeds_.push_back(
        make_affine_seed(config_.master_seed, Role::table_sign, j));
  }
  if (config_.problem == Problem::fk) {
    ams_ = std::make_unique<AmsSketch>(config_.n, config_.p,
                                       config_.master_seed);
  }
}

double LinearSketch::weight(uint64_t i) const {
  auto it = weight_cache_.find(i);
  if (it != weight_cache_.end()) return it->second;
  double w = weights_.weight(i);
  weight_cache_.emplace(i, w);
  return w;
}

void LinearSketch::update(uint64_t i, double delta) {
  if (i >= config_.n) throw std::out_of_range("index out of range");
  if (delta == 0.0) return;
  const double scale = std::pow(weight(i), 1.0 / config_.p) * delta;
  for (uint32_t j = 0; j < config_.l; ++j) {
    uint64_t z = bucket(bucket_seeds_[j], i, config_.m);
    tables_[j][z] += sign(sign_seeds_[j], i) * scale;
  }
  if (ams_) ams_->update(i, delta);
  if (companion_) companion_->update(i, delta);
  ++update_count_;
}

LinearSketch LinearSketch::merge(const LinearSketch& a, const LinearSketch& b) {
  if (!(a.config_ == b.config_)) {
    throw std::invalid_argument("sketch config mismatch");
  }
  if (static_cast<bool>(a.companion_) != static_cast<bool>(b.companion_)) {
    throw std::invalid_argument("companion sketch mismatch");
  }
  LinearSketch out(a.config_);
  for (uint32_t j = 0; j < out.config_.l; ++j) {
    out.tables_[j] = a.tables_[j];
    for (const auto& [z, v] : b.tables_[j]) out.tables_[j][z] += v;
  }
  out.update_count_ = a.update_count_ + b.update_count_;
  if (a.ams_ && b.ams_) {
    out.ams_->set_counters(a.ams_->counters());
    out.ams_->merge_from(*b.ams_);
  }
  if (a.companion_ && b.companion_) {
    out.companion_ = std::make_unique<LinearSketch>(
        merge(*a.companion_, *b.companion_));
  }
  return out;
}

double LinearSketch::cell(uint32_t table, uint64_t z) const {
  const auto& t = tables_.at(table);
  auto it = t.find(z);
  return it == t.end() ? 0.0 : it->second;
}

uint64_t LinearSketch::bucket_of(uint32_t table, uint64_t i) const {
  return bucket(bucket_seeds_.at(table), i, config_.m);
}

int LinearSketch::sign_of(uint32_t table, uint64_t i) const {
  return sign(sign_seeds_.at(table), i);
}

bool LinearSketch::is_zero() const {
  for (const auto& t : tables_) {
    for (const auto& [z, v] : t) {
      if (v != 0.0) return false;
    }
  }
  return true;
}

void LinearSketch::raw_add(uint32_t table, uint64_t z, double delta) {
  tables_.at(table)[z] += delta;
}

void LinearSketch::set_companion(std::unique_ptr<LinearSketch> companion) {
  companion_ = std::move(companion);
}

}  // namespace psk
