// psketch: create, feed, merge and query precision-sampling sketches of
// turnstile streams. Exit codes: 0 success, 2 usage or parameter domain,
// 3 file/stream format, 4 sampler FAIL after retries.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "psketch/estimators.hpp"
#include "psketch/sampler.hpp"
#include "psketch/serialize.hpp"

namespace {

using namespace psk;

constexpr int kExitUsage = 2;
constexpr int kExitFormat = 3;
constexpr int kExitFail = 4;

Problem parse_problem(const std::string& name) {
  if (name == "fk") return Problem::fk;
  if (name == "l1") return Problem::l1;
  if (name == "lp") return Problem::lp;
  if (name == "sampler") return Problem::sampler;
  if (name == "cascaded") return Problem::cascaded;
  throw std::invalid_argument("--problem must be one of fk|l1|lp|sampler|cascaded");
}

struct CreateArgs {
  std::string problem;
  uint64_t n = 0;
  uint64_t n2 = 0;
  double p = 0.0;
  double q = 0.0;
  double epsilon = 0.0;
  double zeta = 8.0;
  uint64_t seed = 0;
  uint32_t repetitions = 1;
  bool no_companion = false;
  std::string out;
};

int cmd_create(const CreateArgs& args) {
  Problem problem = parse_problem(args.problem);
  if (problem == Problem::fk || problem == Problem::lp ||
      problem == Problem::sampler) {
    if (args.p == 0.0) {
      std::cerr << "error: --p is required for " << args.problem << "\n";
      return kExitUsage;
    }
  }
  SketchFile file;
  file.problem = problem;
  auto rep_seed = [&](uint32_t r) {
    return r == 0 ? args.seed : derive64(args.seed, Role::repetition, r);
  };
  if (problem == Problem::cascaded) {
    if (args.n2 == 0 || args.q == 0.0) {
      std::cerr << "error: cascaded sketches need --n2 and --q\n";
      return kExitUsage;
    }
    double p = args.p == 0.0 ? 1.0 : args.p;
    for (uint32_t r = 0; r < args.repetitions; ++r) {
      file.nested.push_back(cascaded::NestedSketch::create(
          args.n, args.n2, p, args.q, args.epsilon, args.zeta, rep_seed(r)));
    }
    const auto& cfg = file.nested.front().config();
    std::printf("k=%llu\nt=%.17g\nm=%llu\nl=%u\nomega=%.17g\nalpha=%.17g\n",
                static_cast<unsigned long long>(cfg.k), cfg.t,
                static_cast<unsigned long long>(cfg.m), cfg.l, cfg.omega,
                cfg.alpha_bound);
    std::printf("kappa=%u\ncase=%c\ninner=%s\n", cfg.kappa, cfg.bound_case,
                cfg.inner == cascaded::InnerMode::exact ? "exact" : "sketch");
  } else {
    SketchConfig::Options options;
    options.sampler_companion = !args.no_companion;
    for (uint32_t r = 0; r < args.repetitions; ++r) {
      file.flat.push_back(LinearSketch::create(problem, args.n, args.p,
                                               args.epsilon, args.zeta,
                                               rep_seed(r), options));
    }
    const auto& cfg = file.flat.front().config();
    std::printf("k=%llu\nt=%.17g\nm=%llu\nl=%u\nomega=%.17g\nalpha=%.17g\n",
                static_cast<unsigned long long>(cfg.k), cfg.t,
                static_cast<unsigned long long>(cfg.m), cfg.l, cfg.omega,
                cfg.alpha_blowup);
  }
  save_file(args.out, file);
  return 0;
}

int apply_stream(SketchFile& file, std::istream& in) {
  std::string line;
  uint64_t line_no = 0;
  bool nested = file.problem == Problem::cascaded;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    std::istringstream ss(line);
    uint64_t i = 0, j = 0;
    double delta = 0.0;
    bool ok;
    if (nested) {
      ok = static_cast<bool>(ss >> i >> j >> delta);
    } else {
      ok = static_cast<bool>(ss >> i >> delta);
    }
    std::string rest;
    if (!ok || (ss >> rest)) {
      std::cerr << "error: line " << line_no << ": expected '"
                << (nested ? "i j delta" : "i delta") << "'\n";
      return kExitFormat;
    }
    try {
      if (nested) {
        for (auto& sketch : file.nested) sketch.update(i, j, delta);
      } else {
        for (auto& sketch : file.flat) sketch.update(i, delta);
      }
    } catch (const std::out_of_range& e) {
      std::cerr << "error: line " << line_no << ": " << e.what() << "\n";
      return kExitFormat;
    }
  }
  return 0;
}

int cmd_update(const std::string& sketch_path, const std::string& in_path) {
  SketchFile file = load_file(sketch_path);
  int rc;
  if (in_path.empty()) {
    rc = apply_stream(file, std::cin);
  } else {
    std::ifstream in(in_path);
    if (!in) {
      std::cerr << "error: cannot open " << in_path << "\n";
      return kExitFormat;
    }
    rc = apply_stream(file, in);
  }
  if (rc != 0) return rc;
  save_file(sketch_path, file);
  return 0;
}

int cmd_merge(const std::string& a_path, const std::string& b_path,
              const std::string& out_path) {
  SketchFile a = load_file(a_path);
  SketchFile b = load_file(b_path);
  if (a.problem != b.problem || a.repetitions() != b.repetitions()) {
    std::cerr << "error: sketch files are not mergeable\n";
    return kExitFormat;
  }
  SketchFile out;
  out.problem = a.problem;
  try {
    for (size_t r = 0; r < a.flat.size(); ++r) {
      out.flat.push_back(LinearSketch::merge(a.flat[r], b.flat[r]));
    }
    for (size_t r = 0; r < a.nested.size(); ++r) {
      out.nested.push_back(
          cascaded::NestedSketch::merge(a.nested[r], b.nested[r]));
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFormat;
  }
  save_file(out_path, out);
  return 0;
}

void print_report(const EstimateReport& report) {
  std::printf("value=%.17g\n", report.value);
  std::printf("r_used=%.17g\n", report.r_used);
  std::printf("success=%s\n", report.success_flag ? "true" : "false");
  for (const auto& [r, sigma] : report.halving_trace) {
    std::printf("trace r=%.17g sigma_hat=%.17g\n", r, sigma);
  }
}

int cmd_estimate(const std::string& sketch_path, uint32_t repetitions) {
  SketchFile file = load_file(sketch_path);
  if (file.problem == Problem::sampler) {
    std::cerr << "error: sampler sketches answer `psketch sample`\n";
    return kExitUsage;
  }
  uint32_t use = file.repetitions();
  if (repetitions > 0) {
    if (repetitions > use) {
      std::cerr << "error: file holds only " << use << " repetitions\n";
      return kExitUsage;
    }
    use = repetitions;
  }
  std::vector<EstimateReport> reports;
  for (uint32_t r = 0; r < use; ++r) {
    EstimateReport rep = file.problem == Problem::cascaded
                             ? file.nested[r].estimate()
                             : estimate(file.flat[r]);
    if (use > 1) {
      std::printf("rep%u value=%.17g r_used=%.17g success=%s\n", r, rep.value,
                  rep.r_used, rep.success_flag ? "true" : "false");
    }
    reports.push_back(std::move(rep));
  }
  if (use == 1) {
    print_report(reports.front());
  } else {
    std::printf("value=%.17g\n", median_value(reports));
  }
  return 0;
}

int cmd_sample(const std::string& sketch_path, std::optional<double> r_flag,
               bool auto_r, uint32_t retries) {
  SketchFile file = load_file(sketch_path);
  if (file.problem != Problem::sampler) {
    std::cerr << "error: not a sampler sketch\n";
    return kExitUsage;
  }
  if (r_flag.has_value() == auto_r) {
    std::cerr << "error: pass exactly one of --r and --auto-r\n";
    return kExitUsage;
  }
  uint32_t budget = std::min<uint32_t>(retries + 1, file.repetitions());
  for (uint32_t attempt = 0; attempt < budget; ++attempt) {
    const LinearSketch& sketch = file.flat[attempt];
    double r = r_flag ? *r_flag : sampler_r(sketch);
    SampleOutcome outcome = sample(sketch, r);
    if (!outcome.failed) {
      std::printf("index=%llu value=%.17g j_star=%llu rep=%u\n",
                  static_cast<unsigned long long>(outcome.index),
                  outcome.value,
                  static_cast<unsigned long long>(outcome.j_star), attempt);
      return 0;
    }
  }
  std::printf("FAIL\n");
  return kExitFail;
}

int cmd_info(const std::string& sketch_path) {
  SketchFile file = load_file(sketch_path);
  std::printf("problem=%s\nrepetitions=%u\n", problem_name(file.problem),
              file.repetitions());
  if (file.problem == Problem::cascaded) {
    const auto& cfg = file.nested.front().config();
    std::printf("n1=%llu n2=%llu p=%g q=%g epsilon=%g zeta=%g\n",
                static_cast<unsigned long long>(cfg.n1),
                static_cast<unsigned long long>(cfg.n2), cfg.p, cfg.q,
                cfg.epsilon, cfg.zeta);
    std::printf("k=%llu t=%g m=%llu l=%u kappa=%u case=%c updates=%llu\n",
                static_cast<unsigned long long>(cfg.k), cfg.t,
                static_cast<unsigned long long>(cfg.m), cfg.l, cfg.kappa,
                cfg.bound_case,
                static_cast<unsigned long long>(
                    file.nested.front().update_count()));
  } else {
    const auto& cfg = file.flat.front().config();
    std::printf("n=%llu p=%g epsilon=%g zeta=%g\n",
                static_cast<unsigned long long>(cfg.n), cfg.p, cfg.epsilon,
                cfg.zeta);
    std::printf("k=%llu t=%g m=%llu l=%u updates=%llu\n",
                static_cast<unsigned long long>(cfg.k), cfg.t,
                static_cast<unsigned long long>(cfg.m), cfg.l,
                static_cast<unsigned long long>(
                    file.flat.front().update_count()));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"precision-sampling linear sketches for turnstile streams"};
  app.require_subcommand(1);

  CreateArgs create_args;
  auto* create = app.add_subcommand("create", "write a zeroed sketch file");
  create->add_option("--problem", create_args.problem)->required();
  create->add_option("--n", create_args.n)->required();
  create->add_option("--n2", create_args.n2);
  create->add_option("--p", create_args.p);
  create->add_option("--q", create_args.q);
  create->add_option("--epsilon", create_args.epsilon)->required();
  create->add_option("--zeta", create_args.zeta);
  create->add_option("--seed", create_args.seed)->required();
  create->add_option("--repetitions", create_args.repetitions);
  create->add_flag("--no-companion", create_args.no_companion,
                   "skip the sampler's embedded norm sketch");
  create->add_option("--out", create_args.out)->required();

  std::string sketch_path, in_path;
  auto* update = app.add_subcommand(
      "update", "apply 'i delta' (or 'i j delta') records to a sketch");
  update->add_option("--sketch", sketch_path)->required();
  update->add_option("--in", in_path);

  std::string merge_a, merge_b, merge_out;
  auto* merge = app.add_subcommand("merge", "cell-wise sum of two sketches");
  merge->add_option("a", merge_a)->required();
  merge->add_option("b", merge_b)->required();
  merge->add_option("--out", merge_out)->required();

  std::string est_path;
  uint32_t est_reps = 0;
  auto* estimate = app.add_subcommand("estimate", "run the estimator");
  estimate->add_option("--sketch", est_path)->required();
  estimate->add_option("--repetitions", est_reps);

  std::string sample_path;
  double sample_r = 0.0;
  bool sample_auto_r = false;
  uint32_t sample_retries = 3;
  auto* sample = app.add_subcommand("sample", "draw an index from a sampler");
  sample->add_option("--sketch", sample_path)->required();
  auto* r_opt = sample->add_option("--r", sample_r,
                                   "factor-2 approximation of ||x||_p^p");
  sample->add_flag("--auto-r", sample_auto_r,
                   "estimate r from the embedded norm sketch");
  sample->add_option("--retries", sample_retries);

  std::string info_path;
  auto* info = app.add_subcommand("info", "print a sketch file's parameters");
  info->add_option("--sketch", info_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (create->parsed()) return cmd_create(create_args);
    if (update->parsed()) return cmd_update(sketch_path, in_path);
    if (merge->parsed()) return cmd_merge(merge_a, merge_b, merge_out);
    if (estimate->parsed()) return cmd_estimate(est_path, est_reps);
    if (sample->parsed()) {
      std::optional<double> r;
      if (r_opt->count() > 0) r = sample_r;
      return cmd_sample(sample_path, r, sample_auto_r, sample_retries);
    }
    if (info->parsed()) return cmd_info(info_path);
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFormat;
  }
  return 0;
}
