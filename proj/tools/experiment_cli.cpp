// Command line front end for the row-action solver experiments.
//
//   rkm_cli generate ...   write a test system (and noisy data) as CSV files
//   rkm_cli run ...        run a solver, write the averaged error trace
//   rkm_cli compare ...    run several methods on one system, merged by cost
//   rkm_cli bounds ...     print the spectral constants of a system
//   rkm_cli verify ...     run a self-check suite, one line per check
//
// Exit codes: 0 success, 1 failed verification, 2 bad configuration,
// 3 file I/O failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rkm/experiment.hpp"
#include "rkm/verify.hpp"

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw rkm::io_error("cannot open " + path + " for writing");
  out << text;
  if (!out.flush()) throw rkm::io_error("write to " + path + " failed");
}

std::string vector_csv(const rkm::Vector& v) {
  std::string text;
  for (Eigen::Index i = 0; i < v.size(); ++i) text += fmt17(v(i)) + "\n";
  return text;
}

std::string matrix_csv(const rkm::Matrix& a) {
  std::string text;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (j) text += ',';
      text += fmt17(a(i, j));
    }
    text += '\n';
  }
  return text;
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty())
    std::cout << text;
  else
    write_file(out_path, text);
}

// Flags shared by run and compare, collected before building configs.
struct RunFlags {
  std::string problem = "phillips";
  int n = 200;
  double delta = 0.0;
  std::string method = "rkm";
  std::vector<std::string> methods;
  std::int64_t iters = 0;
  int runs = 100;
  std::uint64_t seed = 0;
  int level = 5;
  std::vector<int> bands;
  std::int64_t epoch = 0;
  double tau = 1.1;
  std::int64_t stride = 0;
  bool dp = false;
  std::string out;
  std::string config_path;
};

// JSON config file: one flat object whose keys are the long option names.
// Values given on the command line win over the file.
void apply_config_file(const CLI::App& sub, RunFlags& f) {
  if (f.config_path.empty()) return;
  std::ifstream in(f.config_path);
  if (!in) throw rkm::io_error("cannot open " + f.config_path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw rkm::config_error(f.config_path + ": " + e.what());
  }
  if (!doc.is_object())
    throw rkm::config_error(f.config_path + ": expected one flat object");

  auto cli_set = [&](const std::string& name) {
    const CLI::Option* opt = sub.get_option_no_throw("--" + name);
    return opt != nullptr && opt->count() > 0;
  };
  try {
    for (const auto& [key, value] : doc.items()) {
      if (cli_set(key)) continue;
      if (key == "problem") f.problem = value.get<std::string>();
      else if (key == "n") f.n = value.get<int>();
      else if (key == "delta") f.delta = value.get<double>();
      else if (key == "method") f.method = value.get<std::string>();
      else if (key == "iters") f.iters = value.get<std::int64_t>();
      else if (key == "runs") f.runs = value.get<int>();
      else if (key == "seed") f.seed = value.get<std::uint64_t>();
      else if (key == "level") f.level = value.get<int>();
      else if (key == "bands") f.bands = value.get<std::vector<int>>();
      else if (key == "epoch") f.epoch = value.get<std::int64_t>();
      else if (key == "tau") f.tau = value.get<double>();
      else if (key == "stride") f.stride = value.get<std::int64_t>();
      else if (key == "dp") f.dp = value.get<bool>();
      else if (key == "out") f.out = value.get<std::string>();
      else throw rkm::config_error(f.config_path + ": unknown key " + key);
    }
  } catch (const nlohmann::json::exception& e) {
    throw rkm::config_error(f.config_path + ": " + e.what());
  }
}

rkm::ExperimentConfig to_config(const RunFlags& f, const std::string& method) {
  rkm::ExperimentConfig cfg;
  cfg.problem = f.problem;
  cfg.n = f.n;
  cfg.delta_rel = f.delta;
  cfg.method = rkm::parse_method(method);
  cfg.iterations = f.iters;
  cfg.runs = f.runs;
  cfg.seed = f.seed;
  cfg.level = f.level;
  cfg.bands = f.bands;
  cfg.epoch = f.epoch;
  cfg.tau = f.tau;
  cfg.stride = f.stride;
  cfg.use_discrepancy = f.dp;
  return cfg;
}

void add_run_flags(CLI::App& sub, RunFlags& f, bool single_method) {
  sub.add_option("--problem", f.problem,
                 "System name: phillips, gravity, shaw, circle");
  sub.add_option("--n", f.n, "Number of rows");
  sub.add_option("--delta", f.delta, "Relative noise level");
  if (single_method)
    sub.add_option("--method", f.method, "Solver: km, rkm, rkmvr, lm");
  else
    sub.add_option("--methods", f.methods, "Solvers to compare")
        ->delimiter(',');
  sub.add_option("--iters", f.iters, "Iteration cap");
  sub.add_option("--runs", f.runs, "Sample paths to average");
  sub.add_option("--seed", f.seed, "Master seed");
  sub.add_option("--level", f.level, "Band truncation level");
  sub.add_option("--bands", f.bands, "Multi-band boundaries")->delimiter(',');
  sub.add_option("--epoch", f.epoch, "Snapshot spacing for rkmvr, 0 = n");
  sub.add_option("--tau", f.tau, "Stopping threshold factor");
  sub.add_option("--stride", f.stride, "Record spacing, 0 = auto");
  sub.add_flag("--dp", f.dp, "Stop at the residual threshold");
  sub.add_option("--out", f.out, "Output CSV path, default stdout");
  sub.add_option("--config", f.config_path, "JSON file with the same keys");
}

int run_generate(const std::string& problem, int n, double delta,
                 std::uint64_t seed, const std::string& out_dir) {
  rkm::LinearSystem system = rkm::make_named_system(problem, n);
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
      throw rkm::io_error("cannot create directory " + out_dir + ": " +
                          ec.message());
  }
  const std::string prefix = out_dir.empty() ? "" : out_dir + "/";
  write_file(prefix + "A.csv", matrix_csv(system.a));
  write_file(prefix + "b.csv", vector_csv(system.b));
  if (system.x_true)
    write_file(prefix + "x_true.csv", vector_csv(*system.x_true));
  if (delta > 0.0) {
    rkm::Rng rng = rkm::Rng::for_stream(seed, rkm::kNoiseStream);
    const rkm::NoisyObservation noise = rkm::add_noise(system.b, delta, rng);
    write_file(prefix + "b_delta.csv", vector_csv(noise.b_delta));
  }
  return 0;
}

int run_single(const CLI::App& sub, RunFlags f) {
  apply_config_file(sub, f);
  const rkm::ExperimentResult res = run_experiment(to_config(f, f.method));
  emit(f.out, rkm::trace_to_csv(res.averaged));
  return 0;
}

int run_compare(const CLI::App& sub, RunFlags f) {
  apply_config_file(sub, f);
  if (f.methods.empty()) f.methods = {"km", "rkm", "rkmvr", "lm"};
  std::vector<rkm::ExperimentConfig> configs;
  for (const auto& method : f.methods) configs.push_back(to_config(f, method));
  emit(f.out, rkm::compare_csv(configs));
  return 0;
}

int run_bounds(const std::string& problem, int n, int level) {
  const rkm::LinearSystem system = rkm::make_named_system(problem, n);
  const rkm::SvdBasis basis = rkm::svd(system.a);
  const double frob = system.a.norm();
  const rkm::SpectralConstants spectral = rkm::spectral_constants(basis, frob);
  const rkm::BoundConstants c = rkm::bound_constants(basis, frob, level);
  const rkm::Propagation p = rkm::make_propagation(c);
  std::printf("problem=%s n=%d level=%d\n", system.name.c_str(), n, level);
  std::printf("frob_norm=%s\n", fmt17(frob).c_str());
  std::printf("sigma_max=%s\n", fmt17(spectral.sigma_max).c_str());
  std::printf("sigma_min=%s\n", fmt17(spectral.sigma_min).c_str());
  std::printf("kappa=%s\n", fmt17(spectral.kappa).c_str());
  std::printf("numeric_rank=%d\n", spectral.numeric_rank);
  std::printf("c1=%s\n", fmt17(c.c1).c_str());
  std::printf("c2=%s\n", fmt17(c.c2).c_str());
  if (c.alpha_defined) std::printf("alpha=%s\n", fmt17(c.alpha).c_str());
  std::printf("lambda_plus=%s\n", fmt17(p.lambda_plus).c_str());
  std::printf("lambda_minus=%s\n", fmt17(p.lambda_minus).c_str());
  return 0;
}

int run_verify(const std::string& suite) {
  const std::vector<rkm::CheckResult> results = rkm::run_suite(suite);
  int failures = 0;
  for (const auto& r : results) {
    std::printf("%s %s (margin=%.3g)\n", r.pass ? "PASS" : "FAIL",
                r.name.c_str(), r.margin);
    if (!r.pass) ++failures;
  }
  std::printf("%zu checks, %d failed\n", results.size(), failures);
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Row-action solvers with frequency-band error tracking"};
  app.require_subcommand(1);

  std::string gen_problem = "phillips";
  int gen_n = 200;
  double gen_delta = 0.0;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  CLI::App* generate = app.add_subcommand("generate", "Write a system as CSV");
  generate->add_option("--problem", gen_problem, "System name");
  generate->add_option("--n", gen_n, "Number of rows");
  generate->add_option("--delta", gen_delta, "Relative noise level");
  generate->add_option("--seed", gen_seed, "Master seed for the noise");
  generate->add_option("--out", gen_out, "Output directory, default cwd");

  RunFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "Run one solver");
  add_run_flags(*run, run_flags, true);

  RunFlags cmp_flags;
  CLI::App* compare =
      app.add_subcommand("compare", "Run several solvers, merge by cost");
  add_run_flags(*compare, cmp_flags, false);

  std::string bounds_problem = "phillips";
  int bounds_n = 200;
  int bounds_level = 5;
  CLI::App* bounds =
      app.add_subcommand("bounds", "Print spectral constants and rates");
  bounds->add_option("--problem", bounds_problem, "System name");
  bounds->add_option("--n", bounds_n, "Number of rows");
  bounds->add_option("--level", bounds_level, "Band truncation level");

  std::string suite = "all";
  CLI::App* verify = app.add_subcommand("verify", "Run a self-check suite");
  verify->add_option(
      "suite", suite,
      "lemmas, theorem33, theorem35, props, propagation, or all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (generate->parsed())
      return run_generate(gen_problem, gen_n, gen_delta, gen_seed, gen_out);
    if (run->parsed()) return run_single(*run, run_flags);
    if (compare->parsed()) return run_compare(*compare, cmp_flags);
    if (bounds->parsed())
      return run_bounds(bounds_problem, bounds_n, bounds_level);
    if (verify->parsed()) return run_verify(suite);
  } catch (const rkm::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const rkm::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
