#include "rkm/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace rkm {

namespace {

constexpr const char* kCsvHeader = "k,cost_units,e_total,e_low,e_high,residual_sq";

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct RunContext {
  const ExperimentConfig& cfg;
  const LinearSystem& system;
  const Vector& b_used;
  const Vector& x_true;
  const SvdBasis* basis = nullptr;       // set when any band mass is recorded
  std::optional<FrequencySplit> split;   // set for the two-band record
  std::int64_t iterations = 0;
  std::int64_t stride = 0;
  std::int64_t epoch = 0;
  StoppingRule rule;

  bool due(std::int64_t k) const {
    return k % stride == 0 || k == iterations;
  }

  void record(RunTrace& trace, const Vector& x, std::int64_t k,
              std::int64_t cost) const {
    BandErrorRecord rec;
    rec.k = k;
    rec.cost_units = cost;
    Vector e = x - x_true;
    rec.e_total = e.squaredNorm();
    if (split) {
      auto [low, high] = band_energies(*split, e);
      rec.e_low = low;
      rec.e_high = high;
    }
    if (cfg.record_residual) rec.residual_sq = residual_sq(system, x, b_used);
    trace.records.push_back(rec);
    if (!cfg.bands.empty())
      trace.band_masses.push_back(multi_band_energies(*basis, cfg.bands, e));
  }

  bool met(const Vector& x) const {
    return cfg.use_discrepancy &&
           discrepancy_check(x, system, b_used, rule);
  }
};

RunTrace run_row_action(const RunContext& ctx, const Vector& x0,
                        std::uint64_t seed, bool randomized) {
  RunTrace trace;
  SolverState s = make_solver_state(ctx.system, x0, seed);
  std::int64_t cost = 0;
  ctx.record(trace, s.x, 0, 0);
  if (ctx.met(s.x)) {
    trace.stop_reason = StopReason::discrepancy;
    return trace;
  }
  for (std::int64_t k = 1; k <= ctx.iterations; ++k) {
    if (randomized)
      rkm_step(s, ctx.system, ctx.b_used);
    else
      km_step(s, ctx.system, ctx.b_used);
    ++cost;
    const bool stop = ctx.met(s.x);
    if (ctx.due(k) || stop) ctx.record(trace, s.x, k, cost);
    if (stop) {
      trace.stop_iteration = k;
      trace.stop_reason = StopReason::discrepancy;
      trace.total_cost_units = cost;
      return trace;
    }
  }
  trace.stop_iteration = ctx.iterations;
  trace.stop_reason = StopReason::cap;
  trace.total_cost_units = cost;
  return trace;
}

RunTrace run_landweber(const RunContext& ctx, const Vector& x0) {
  RunTrace trace;
  const std::int64_t n = ctx.system.a.rows();
  Vector x = x0;
  std::int64_t cost = 0;
  ctx.record(trace, x, 0, 0);
  if (ctx.met(x)) {
    trace.stop_reason = StopReason::discrepancy;
    return trace;
  }
  const double frob_sq = ctx.system.a.squaredNorm();
  for (std::int64_t k = 1; k <= ctx.iterations; ++k) {
    x = landweber_step(x, ctx.system, ctx.b_used, frob_sq);
    cost += n;
    const bool stop = ctx.met(x);
    if (ctx.due(k) || stop) ctx.record(trace, x, k, cost);
    if (stop) {
      trace.stop_iteration = k;
      trace.stop_reason = StopReason::discrepancy;
      trace.total_cost_units = cost;
      return trace;
    }
  }
  trace.stop_iteration = ctx.iterations;
  trace.stop_reason = StopReason::cap;
  trace.total_cost_units = cost;
  return trace;
}

RunTrace run_variance_reduced(const RunContext& ctx, const Vector& x0,
                              std::uint64_t seed) {
  RunTrace trace;
  const std::int64_t n = ctx.system.a.rows();
  RkmvrState s = make_rkmvr_state(ctx.system, x0, ctx.epoch, seed);
  std::int64_t cost = 0;
  ctx.record(trace, s.inner.x, 0, 0);
  if (ctx.met(s.inner.x)) {
    trace.stop_reason = StopReason::discrepancy;
    return trace;
  }
  for (std::int64_t k = 1; k <= ctx.iterations; ++k) {
    rkmvr_step(s, ctx.system, ctx.b_used);
    if (s.snapshot_taken) {
      cost += n;
      if (ctx.cfg.use_discrepancy &&
          std::sqrt(s.snapshot_residual_sq) <=
              ctx.rule.tau * ctx.rule.delta_abs) {
        // Stop at the snapshot iterate; the row update just made is not part
        // of the accepted trajectory.
        const std::int64_t k_stop = k - 1;
        if (trace.records.empty() || trace.records.back().k != k_stop)
          ctx.record(trace, s.snapshot_x, k_stop, cost);
        trace.stop_iteration = k_stop;
        trace.stop_reason = StopReason::discrepancy;
        trace.total_cost_units = cost;
        return trace;
      }
    }
    ++cost;
    if (ctx.due(k)) ctx.record(trace, s.inner.x, k, cost);
  }
  trace.stop_iteration = ctx.iterations;
  trace.stop_reason = StopReason::cap;
  trace.total_cost_units = cost;
  return trace;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.iterations < 1)
    throw config_error("run_experiment: iterations must be >= 1");
  if (cfg.runs < 1) throw config_error("run_experiment: runs must be >= 1");
  if (cfg.delta_rel < 0.0)
    throw config_error("run_experiment: delta must be nonnegative");
  if (cfg.stride < 0)
    throw config_error("run_experiment: stride must be nonnegative");
  if (cfg.epoch < 0)
    throw config_error("run_experiment: epoch must be nonnegative");
  if (cfg.tau <= 0.0) throw config_error("run_experiment: tau must be positive");
  if (cfg.use_discrepancy && cfg.runs > 1 && cfg.method != Method::km &&
      cfg.method != Method::lm)
    throw config_error(
        "run_experiment: discrepancy stopping needs runs = 1; launch separate "
        "seeds instead");
}

}  // namespace

Method parse_method(std::string_view name) {
  if (name == "km") return Method::km;
  if (name == "rkm") return Method::rkm;
  if (name == "rkmvr") return Method::rkmvr;
  if (name == "lm") return Method::lm;
  throw config_error("unknown method: " + std::string(name));
}

const char* method_name(Method m) {
  switch (m) {
    case Method::km: return "km";
    case Method::rkm: return "rkm";
    case Method::rkmvr: return "rkmvr";
    case Method::lm: return "lm";
  }
  return "?";
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);

  ExperimentResult result;
  result.system = make_named_system(cfg.problem, cfg.n);
  const LinearSystem& system = result.system;
  const int m = static_cast<int>(system.a.cols());
  if (!system.x_true)
    throw config_error("run_experiment: problem lacks a reference solution");

  Vector x0 = Vector::Zero(m);
  if (cfg.x0) {
    if (cfg.x0->size() != m)
      throw config_error("run_experiment: x0 length does not match columns");
    x0 = *cfg.x0;
  }

  Rng noise_rng = Rng::for_stream(cfg.seed, kNoiseStream);
  result.noise = add_noise(system.b, cfg.delta_rel, noise_rng);

  RunContext ctx{cfg,
                 system,
                 result.noise.b_delta,
                 *system.x_true,
                 nullptr,
                 std::nullopt,
                 cfg.iterations,
                 cfg.stride > 0 ? cfg.stride
                                : std::max<std::int64_t>(1, cfg.iterations / 2000),
                 cfg.epoch > 0 ? cfg.epoch
                               : static_cast<std::int64_t>(system.a.rows()),
                 StoppingRule{cfg.tau, result.noise.delta_abs}};

  const bool needs_basis = cfg.record_bands || !cfg.bands.empty();
  if (needs_basis) {
    result.basis = svd(system.a);
    ctx.basis = &*result.basis;
    if (cfg.bands.empty()) {
      ctx.split = make_split(*result.basis, cfg.level);
    } else {
      // Validates the boundaries once up front.
      multi_band_energies(*result.basis, cfg.bands, Vector::Zero(m));
    }
  }

  const bool deterministic =
      cfg.method == Method::km || cfg.method == Method::lm;
  const int runs = deterministic ? 1 : cfg.runs;

  RunTrace averaged;
  for (int j = 0; j < runs; ++j) {
    const std::uint64_t seed = derive_seed(cfg.seed, j);
    RunTrace trace;
    switch (cfg.method) {
      case Method::km:
        trace = run_row_action(ctx, x0, seed, false);
        break;
      case Method::rkm:
        trace = run_row_action(ctx, x0, seed, true);
        break;
      case Method::rkmvr:
        trace = run_variance_reduced(ctx, x0, seed);
        break;
      case Method::lm:
        trace = run_landweber(ctx, x0);
        break;
    }
    if (j == 0) {
      averaged = trace;
    } else {
      if (trace.records.size() != averaged.records.size())
        throw config_error("run_experiment: runs recorded unequal schedules");
      for (std::size_t r = 0; r < trace.records.size(); ++r) {
        averaged.records[r].e_total += trace.records[r].e_total;
        averaged.records[r].e_low += trace.records[r].e_low;
        averaged.records[r].e_high += trace.records[r].e_high;
        averaged.records[r].residual_sq += trace.records[r].residual_sq;
      }
      for (std::size_t b = 0; b < trace.band_masses.size(); ++b)
        for (std::size_t c = 0; c < trace.band_masses[b].size(); ++c)
          averaged.band_masses[b][c] += trace.band_masses[b][c];
    }
    if (cfg.keep_run_traces) result.per_run.push_back(std::move(trace));
  }
  if (runs > 1) {
    const double inv = 1.0 / runs;
    for (auto& rec : averaged.records) {
      rec.e_total *= inv;
      rec.e_low *= inv;
      rec.e_high *= inv;
      rec.residual_sq *= inv;
    }
    for (auto& row : averaged.band_masses)
      for (auto& v : row) v *= inv;
  }
  result.averaged = std::move(averaged);
  return result;
}

std::string trace_to_csv(const RunTrace& trace) {
  std::string out;
  const bool multi = !trace.band_masses.empty();
  if (!multi) {
    out += kCsvHeader;
    out += '\n';
  } else {
    out += "k,cost_units,e_total";
    for (std::size_t b = 0; b < trace.band_masses.front().size(); ++b)
      out += ",e_band_" + std::to_string(b + 1);
    out += ",residual_sq\n";
  }
  for (std::size_t r = 0; r < trace.records.size(); ++r) {
    const BandErrorRecord& rec = trace.records[r];
    out += std::to_string(rec.k);
    out += ',';
    out += std::to_string(rec.cost_units);
    out += ',';
    out += fmt17(rec.e_total);
    if (!multi) {
      out += ',';
      out += fmt17(rec.e_low);
      out += ',';
      out += fmt17(rec.e_high);
    } else {
      for (double v : trace.band_masses[r]) {
        out += ',';
        out += fmt17(v);
      }
    }
    out += ',';
    out += fmt17(rec.residual_sq);
    out += '\n';
  }
  return out;
}

void export_csv(const RunTrace& trace, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw io_error("export_csv: cannot open " + path);
  f << trace_to_csv(trace);
  if (!f) throw io_error("export_csv: write failed for " + path);
}

RunTrace parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw io_error("parse_csv: unexpected header");
  RunTrace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    BandErrorRecord rec;
    char* pos = line.data();
    char* end = nullptr;
    auto next = [&](bool last) {
      const double v = std::strtod(pos, &end);
      if (end == pos || (*end != (last ? '\0' : ',')))
        throw io_error("parse_csv: malformed row: " + line);
      pos = end + (last ? 0 : 1);
      return v;
    };
    rec.k = static_cast<std::int64_t>(next(false));
    rec.cost_units = static_cast<std::int64_t>(next(false));
    rec.e_total = next(false);
    rec.e_low = next(false);
    rec.e_high = next(false);
    rec.residual_sq = next(true);
    trace.records.push_back(rec);
  }
  return trace;
}

RunTrace import_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw io_error("import_csv: cannot open " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_csv(buf.str());
}

std::string compare_csv(const std::vector<ExperimentConfig>& configs) {
  if (configs.size() < 2)
    throw config_error("compare: need at least two methods");
  for (const auto& cfg : configs) {
    if (cfg.problem != configs[0].problem || cfg.n != configs[0].n ||
        cfg.delta_rel != configs[0].delta_rel ||
        cfg.seed != configs[0].seed)
      throw config_error(
          "compare: configs must share problem, size, noise level and seed");
  }

  std::vector<std::string> labels;
  std::vector<std::map<std::int64_t, const BandErrorRecord*>> by_cost;
  std::vector<ExperimentResult> results;
  results.reserve(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    results.push_back(run_experiment(configs[i]));
    std::string label = method_name(configs[i].method);
    int dup = 1;
    for (std::size_t j = 0; j < i; ++j)
      if (label == method_name(configs[j].method)) ++dup;
    if (dup > 1) label += std::to_string(dup);
    labels.push_back(label);
  }
  for (const auto& res : results) {
    std::map<std::int64_t, const BandErrorRecord*> m;
    for (const auto& rec : res.averaged.records) m[rec.cost_units] = &rec;
    by_cost.push_back(std::move(m));
  }

  std::string out = "cost_units";
  for (const auto& label : labels)
    out += "," + label + "_k," + label + "_e_total," + label + "_e_low," +
           label + "_e_high," + label + "_residual_sq";
  out += '\n';

  bool any = false;
  for (const auto& [cost, rec0] : by_cost[0]) {
    bool everywhere = true;
    for (std::size_t i = 1; i < by_cost.size(); ++i)
      if (!by_cost[i].count(cost)) {
        everywhere = false;
        break;
      }
    if (!everywhere) continue;
    any = true;
    out += std::to_string(cost);
    for (const auto& m : by_cost) {
      const BandErrorRecord& rec = *m.at(cost);
      out += "," + std::to_string(rec.k) + "," + fmt17(rec.e_total) + "," +
             fmt17(rec.e_low) + "," + fmt17(rec.e_high) + "," +
             fmt17(rec.residual_sq);
    }
    out += '\n';
  }
  if (!any)
    throw config_error(
        "compare: record grids share no cost values; adjust stride");
  return out;
}

}  // namespace rkm
