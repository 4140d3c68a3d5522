#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rkm/analysis.hpp"
#include "rkm/solvers.hpp"

namespace rkm {

enum class Method { km, rkm, rkmvr, lm };

// Stream id reserved for drawing observation noise from a master seed, so
// separately generated data matches what run_experiment solves against.
inline constexpr std::uint64_t kNoiseStream = 0x6e6f697365ull;

Method parse_method(std::string_view name);
const char* method_name(Method m);

// Cost model: one unit is one row operation.  km/rkm/rkmvr steps cost 1,
// a Landweber step costs n, and each snapshot gradient inside rkmvr adds n.
struct ExperimentConfig {
  std::string problem = "phillips";
  int n = 200;
  double delta_rel = 0.0;
  Method method = Method::rkm;
  std::int64_t iterations = 0;  // required, >= 1
  int runs = 100;               // km/lm are deterministic and always run once
  std::uint64_t seed = 0;
  int level = 5;
  std::vector<int> bands;       // multi-band boundaries; overrides level
  std::int64_t epoch = 0;       // rkmvr snapshot spacing, 0 -> n
  double tau = 1.1;
  std::int64_t stride = 0;      // record spacing, 0 -> max(1, iterations/2000)
  bool use_discrepancy = false; // requires runs == 1

  // Programmatic knobs, not exposed on the command line.
  std::optional<Vector> x0;     // default zero
  bool record_bands = true;
  bool record_residual = true;
  bool keep_run_traces = false;
};

enum class StopReason { cap, discrepancy };

// Records are kept at k = 0, every stride-th iteration, the final iterate,
// and the stopping iterate.  With several runs, record fields hold the mean
// over runs, accumulated in ascending run order.
struct RunTrace {
  std::vector<BandErrorRecord> records;
  // Squared band masses per record when multi-band boundaries are set;
  // band_masses[r] has one entry per band.
  std::vector<std::vector<double>> band_masses;
  std::int64_t stop_iteration = 0;
  StopReason stop_reason = StopReason::cap;
  std::int64_t total_cost_units = 0;
};

struct ExperimentResult {
  LinearSystem system;
  std::optional<SvdBasis> basis;  // present when band masses were recorded
  NoisyObservation noise;
  RunTrace averaged;
  std::vector<RunTrace> per_run;  // filled when keep_run_traces
};

// Deterministic: the result is a pure function of the config.  Noise is
// drawn once from a reserved stream of the master seed and shared by all
// runs; run j samples rows with seed derive_seed(seed, j).
ExperimentResult run_experiment(const ExperimentConfig& config);

// CSV with header k,cost_units,e_total,e_low,e_high,residual_sq and 17
// significant digits, enough for exact double round-trips.  Multi-band
// traces replace the two band columns with e_band_1..e_band_B.
std::string trace_to_csv(const RunTrace& trace);

void export_csv(const RunTrace& trace, const std::string& path);

// Inverse of trace_to_csv for two-band traces; used to check round-trips.
RunTrace parse_csv(const std::string& text);

RunTrace import_csv(const std::string& path);

// Runs every config (which must agree on problem, size, noise level and
// seed) and merges the averaged traces into one CSV keyed by cost_units,
// keeping the rows where every method has a record.
std::string compare_csv(const std::vector<ExperimentConfig>& configs);

}  // namespace rkm
