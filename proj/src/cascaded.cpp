#include "psketch/cascaded.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace psk::cascaded {

namespace {

uint32_t ceil_log2(uint64_t n) {
  return n <= 1 ? 0 : 64 - std::countl_zero(n - 1);
}

uint32_t next_odd_at_least(uint64_t v) {
  if (v < 3) v = 3;
  return static_cast<uint32_t>(v | 1);
}

// Cell-state keys for sketch-mode cells: inner table in the top byte,
// 0xFF marking the embedded AMS counters of an Fq inner sketch.
constexpr uint64_t kAmsTag = 0xFFull << 56;

uint64_t inner_key(uint32_t inner_table, uint64_t z) {
  return (static_cast<uint64_t>(inner_table) << 56) | z;
}

}  // namespace

PTypeBound p_type_bound_case(double p, double q, uint64_t n, double omega,
                             double q_constant) {
  if (!(p > 0.0) || !(q > 0.0) || !(omega > 0.0)) {
    throw std::invalid_argument("p, q and omega must be positive");
  }
  const double nd = static_cast<double>(n);
  const double cq = q_constant > 0.0 ? q_constant : q * q;
  PTypeBound best;
  best.value = 0.0;
  auto consider = [&](double value, char which) {
    if (best.which == '?' || value < best.value) {
      best.value = value;
      best.which = which;
    }
  };
  if (p <= q && q <= 2.0) {
    consider(81.0 * omega, 'a');
  }
  if (q >= 2.0) {
    if (p >= 2.0) {
      consider(81.0 * cq * std::pow(omega, 2.0 / p) *
                   std::pow(nd, 1.0 - 2.0 / p),
               'b');
    } else {
      consider(81.0 * cq * std::pow(omega, 2.0 / p), 'b');
    }
  }
  if (q < p) {
    if (p >= 1.0) {
      consider(9.0 * std::pow(nd, 1.0 - 1.0 / p) * std::pow(omega, 1.0 / p),
               'c');
    } else {
      consider(9.0 * std::pow(omega, 1.0 / p), 'c');
    }
  }
  if (best.which == '?') {
    throw std::invalid_argument("(p, q) outside every p-type regime");
  }
  return best;
}

double p_type_bound(double p, double q, uint64_t n, double omega) {
  return p_type_bound_case(p, q, n, omega).value;
}

CascadedConfig CascadedConfig::create(uint64_t n1, uint64_t n2, double p,
                                      double q, double epsilon, double zeta,
                                      uint64_t master_seed) {
  return create(n1, n2, p, q, epsilon, zeta, master_seed, Options{});
}

CascadedConfig CascadedConfig::create(uint64_t n1, uint64_t n2, double p,
                                      double q, double epsilon, double zeta,
                                      uint64_t master_seed,
                                      const Options& options) {
  if (n1 < 8) throw std::invalid_argument("n1 must be at least 8");
  if (n2 < 1) throw std::invalid_argument("n2 must be positive");
  if (!(epsilon > 0.0) || !(epsilon < 1.0 / 3.0)) {
    throw std::invalid_argument("epsilon must lie in (0, 1/3)");
  }
  if (!(p > 0.0) || !(q > 0.0)) {
    throw std::invalid_argument("p and q must be positive");
  }
  CascadedConfig cfg;
  cfg.n1 = n1;
  cfg.n2 = n2;
  cfg.p = p;
  cfg.q = q;
  cfg.epsilon = epsilon;
  cfg.zeta = zeta;
  cfg.master_seed = master_seed;
  cfg.q_constant = options.q_constant;
  cfg.rho = epsilon / 8.0;
  PslParams params = PslParams::make(epsilon, cfg.rho, zeta);
  cfg.k = params.k;
  cfg.t = params.t;
  cfg.omega = 10.0 * static_cast<double>(cfg.k) * 5.0 *
              std::log(static_cast<double>(n1));
  cfg.omega_prime = 3.0 * p * cfg.omega / epsilon;
  PTypeBound bound =
      p_type_bound_case(p, q, n1, cfg.omega_prime, options.q_constant);
  cfg.alpha_bound = bound.value;
  cfg.bound_case = bound.which;
  cfg.m = static_cast<uint64_t>(std::ceil(bound.value));
  cfg.l = next_odd_at_least(static_cast<uint64_t>(options.table_factor) *
                            ceil_log2(n1));
  cfg.kappa = bound.which == 'b'
                  ? 2 * static_cast<uint32_t>(std::ceil(q)) + 2
                  : 2;
  if (n2 <= options.inner_exact_max) {
    cfg.inner = InnerMode::exact;
  } else {
    if (q < 1.0) {
      throw std::invalid_argument(
          "no inner estimator for q < 1; keep n2 within the exact-cell limit");
    }
    cfg.inner = InnerMode::sketch;
  }
  return cfg;
}

NestedSketch NestedSketch::create(uint64_t n1, uint64_t n2, double p, double q,
                                  double epsilon, double zeta,
                                  uint64_t master_seed) {
  return create(n1, n2, p, q, epsilon, zeta, master_seed,
                CascadedConfig::Options{});
}

NestedSketch NestedSketch::create(uint64_t n1, uint64_t n2, double p, double q,
                                  double epsilon, double zeta,
                                  uint64_t master_seed,
                                  const CascadedConfig::Options& options) {
  return NestedSketch(
      CascadedConfig::create(n1, n2, p, q, epsilon, zeta, master_seed, options));
}

NestedSketch::NestedSketch(const CascadedConfig& config)
    : config_(config), weights_(config.master_seed, config.k) {
  if (config_.kappa <= 2) {
    bucket_seeds_.reserve(config_.l);
    sign_seeds_.reserve(config_.l);
    for (uint32_t j = 0; j < config_.l; ++j) {
      bucket_seeds_.push_back(
          make_affine_seed(config_.master_seed, Role::table_bucket, j));
      sign_seeds_.push_back(
          make_affine_seed(config_.master_seed, Role::table_sign, j));
    }
  } else {
    poly_bucket_seeds_.reserve(config_.l);
    poly_sign_seeds_.reserve(config_.l);
    for (uint32_t j = 0; j < config_.l; ++j) {
      poly_bucket_seeds_.push_back(make_poly_seed(
          config_.master_seed, Role::table_bucket, j, config_.kappa));
      poly_sign_seeds_.push_back(make_poly_seed(
          config_.master_seed, Role::table_sign, j, config_.kappa));
    }
  }
  if (config_.inner == InnerMode::exact) {
    exact_tables_.resize(config_.l);
  } else {
    sketch_tables_.resize(config_.l);
    Problem inner_problem = config_.q > 2.0 ? Problem::fk : Problem::lp;
    inner_template_ = std::make_unique<LinearSketch>(SketchConfig::create(
        inner_problem, config_.n2, config_.q, config_.epsilon / 2.0,
        config_.zeta, derive64(config_.master_seed, Role::inner_sketch, 0)));
    if (const AmsSketch* ams = inner_template_->ams()) {
      inner_ams_seeds_.reserve(ams->rows());
      for (uint32_t r = 0; r < ams->rows(); ++r) {
        inner_ams_seeds_.push_back(make_poly_seed(
            inner_template_->config().master_seed, Role::ams_row, r, 4));
      }
    }
  }
}

uint64_t NestedSketch::bucket_of(uint32_t table, uint64_t i) const {
  return config_.kappa <= 2
             ? bucket(bucket_seeds_.at(table), i, config_.m)
             : poly_bucket(poly_bucket_seeds_.at(table), i, config_.m);
}

int NestedSketch::sign_of(uint32_t table, uint64_t i) const {
  return config_.kappa <= 2 ? sign(sign_seeds_.at(table), i)
                            : poly_sign(poly_sign_seeds_.at(table), i);
}

double NestedSketch::weight(uint64_t i) const {
  auto it = weight_cache_.find(i);
  if (it != weight_cache_.end()) return it->second;
  double w = weights_.weight(i);
  weight_cache_.emplace(i, w);
  return w;
}

void NestedSketch::update(uint64_t i, uint64_t j, double delta) {
  if (i >= config_.n1) throw std::out_of_range("row index out of range");
  if (j >= config_.n2) throw std::out_of_range("column index out of range");
  if (delta == 0.0) return;
  const double scale = std::pow(weight(i), 1.0 / config_.p) * delta;
  for (uint32_t jt = 0; jt < config_.l; ++jt) {
    const uint64_t z = bucket_of(jt, i);
    const double signed_scale = sign_of(jt, i) * scale;
    if (config_.inner == InnerMode::exact) {
      DenseCell& cell = exact_tables_[jt][z];
      if (cell.empty()) cell.assign(config_.n2, 0.0);
      cell[j] += signed_scale;
    } else {
      SparseCell& cell = sketch_tables_[jt][z];
      const LinearSketch& inner = *inner_template_;
      const double inner_scale =
          std::pow(inner.weight(j), 1.0 / config_.q) * signed_scale;
      for (uint32_t j2 = 0; j2 < inner.config().l; ++j2) {
        cell[inner_key(j2, inner.bucket_of(j2, j))] +=
            inner.sign_of(j2, j) * inner_scale;
      }
      // AMS counters of an Fq inner sketch are linear in the row too.
      for (uint32_t r = 0; r < inner_ams_seeds_.size(); ++r) {
        cell[kAmsTag | r] += poly_sign(inner_ams_seeds_[r], j) * signed_scale;
      }
    }
  }
  ++update_count_;
}

NestedSketch NestedSketch::merge(const NestedSketch& a, const NestedSketch& b) {
  if (!(a.config_ == b.config_)) {
    throw std::invalid_argument("cascaded config mismatch");
  }
  NestedSketch out(a.config_);
  out.exact_tables_ = a.exact_tables_;
  out.sketch_tables_ = a.sketch_tables_;
  for (uint32_t jt = 0; jt < a.config_.l; ++jt) {
    if (a.config_.inner == InnerMode::exact) {
      for (const auto& [z, cell] : b.exact_tables_[jt]) {
        DenseCell& dst = out.exact_tables_[jt][z];
        if (dst.empty()) dst.assign(a.config_.n2, 0.0);
        for (uint64_t c = 0; c < cell.size(); ++c) dst[c] += cell[c];
      }
    } else {
      for (const auto& [z, cell] : b.sketch_tables_[jt]) {
        SparseCell& dst = out.sketch_tables_[jt][z];
        for (const auto& [key, v] : cell) dst[key] += v;
      }
    }
  }
  out.update_count_ = a.update_count_ + b.update_count_;
  return out;
}

double NestedSketch::inner_norm(const SparseCell& cell) const {
  const LinearSketch& tmpl = *inner_template_;
  LinearSketch inner(tmpl.config());
  std::vector<double> ams_counters;
  if (tmpl.ams()) ams_counters.assign(tmpl.ams()->rows(), 0.0);
  for (const auto& [key, v] : cell) {
    if ((key & kAmsTag) == kAmsTag) {
      ams_counters.at(key & ~kAmsTag) = v;
    } else {
      inner.raw_add(static_cast<uint32_t>(key >> 56), key & ((1ull << 56) - 1),
                    v);
    }
  }
  EstimateReport rep;
  try {
    if (tmpl.ams()) {
      inner.ams()->set_counters(std::move(ams_counters));
      rep = estimate_fk(inner, *inner.ams());
    } else {
      rep = estimate_lp(inner);
    }
  } catch (const std::runtime_error&) {
    rep.success_flag = false;
  }
  if (!rep.success_flag) {
    last_inner_failure_rate_ += 1.0;  // normalized by caller
    return 0.0;
  }
  return std::pow(rep.value, 1.0 / config_.q);
}

double NestedSketch::cell_norm(uint32_t table, uint64_t z) const {
  if (config_.inner == InnerMode::exact) {
    const auto& t = exact_tables_.at(table);
    auto it = t.find(z);
    if (it == t.end()) return 0.0;
    double sum = 0.0;
    for (double v : it->second) sum += std::pow(std::abs(v), config_.q);
    return std::pow(sum, 1.0 / config_.q);
  }
  const auto& t = sketch_tables_.at(table);
  auto it = t.find(z);
  if (it == t.end()) return 0.0;
  return inner_norm(it->second);
}

EstimateReport NestedSketch::estimate(const EstimateOptions& options) const {
  last_inner_failure_rate_ = 0.0;
  std::vector<double> med(config_.n1);
  std::vector<double> norms(config_.l);
  for (uint64_t i = 0; i < config_.n1; ++i) {
    for (uint32_t jt = 0; jt < config_.l; ++jt) {
      norms[jt] = cell_norm(jt, bucket_of(jt, i));
    }
    auto mid = norms.begin() + config_.l / 2;
    std::nth_element(norms.begin(), mid, norms.end());
    med[i] = *mid;
  }
  uint64_t reads = static_cast<uint64_t>(config_.n1) * config_.l;
  last_inner_failure_rate_ /= static_cast<double>(reads);

  std::vector<double> w(config_.n1);
  for (uint64_t i = 0; i < config_.n1; ++i) w[i] = weight(i);

  PslParams params;
  params.epsilon = config_.epsilon;
  params.rho = config_.rho;
  params.zeta = config_.zeta;
  params.k = config_.k;
  params.t = config_.t;

  double r_max = options.r_max;
  if (!(r_max > 0.0)) {
    r_max = std::ldexp(1.0, static_cast<int>(ceil_log2(config_.n1 * config_.n2)) + 31);
  }
  double threshold = (1.0 + 2.0 * config_.epsilon) / std::pow(4.0, config_.p);
  return detail::halving_search(med, w, config_.p, params, threshold, r_max,
                                options.r_min);
}

}  // namespace psk::cascaded
