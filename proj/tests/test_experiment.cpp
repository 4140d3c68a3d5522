#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "rkm/experiment.hpp"

using namespace rkm;

namespace {

ExperimentConfig base_config() {
  ExperimentConfig cfg;
  cfg.problem = "phillips";
  cfg.n = 30;
  cfg.method = Method::rkm;
  cfg.iterations = 60;
  cfg.runs = 3;
  cfg.seed = 5;
  cfg.level = 3;
  cfg.stride = 20;
  return cfg;
}

}  // namespace

TEST_CASE("method names round-trip") {
  for (Method m : {Method::km, Method::rkm, Method::rkmvr, Method::lm})
    CHECK(parse_method(method_name(m)) == m);
  CHECK_THROWS_AS(parse_method("sor"), config_error);
}

TEST_CASE("configs are validated") {
  ExperimentConfig cfg = base_config();
  cfg.iterations = 0;
  CHECK_THROWS_AS(run_experiment(cfg), config_error);

  cfg = base_config();
  cfg.runs = 0;
  CHECK_THROWS_AS(run_experiment(cfg), config_error);

  cfg = base_config();
  cfg.delta_rel = -0.5;
  CHECK_THROWS_AS(run_experiment(cfg), config_error);

  cfg = base_config();
  cfg.use_discrepancy = true;  // randomized method with several runs
  CHECK_THROWS_AS(run_experiment(cfg), config_error);

  cfg = base_config();
  cfg.level = 40;  // past the column count
  CHECK_THROWS_AS(run_experiment(cfg), config_error);

  cfg = base_config();
  cfg.bands = {3, 2};
  CHECK_THROWS_AS(run_experiment(cfg), config_error);
}

TEST_CASE("record schedule covers start, stride and the end") {
  ExperimentConfig cfg = base_config();
  cfg.iterations = 7;
  cfg.stride = 3;
  cfg.runs = 1;
  const ExperimentResult res = run_experiment(cfg);
  std::vector<std::int64_t> ks;
  for (const auto& rec : res.averaged.records) ks.push_back(rec.k);
  CHECK(ks == std::vector<std::int64_t>{0, 3, 6, 7});
  CHECK(res.averaged.total_cost_units == 7);
  CHECK(res.averaged.stop_reason == StopReason::cap);
}

TEST_CASE("results are a pure function of the config") {
  ExperimentConfig cfg = base_config();
  cfg.delta_rel = 1e-2;
  const ExperimentResult r1 = run_experiment(cfg);
  const ExperimentResult r2 = run_experiment(cfg);
  CHECK(trace_to_csv(r1.averaged) == trace_to_csv(r2.averaged));
  CHECK((r1.noise.eta - r2.noise.eta).norm() == 0.0);
  CHECK(r1.noise.delta_abs == r2.noise.delta_abs);
}

TEST_CASE("noise is shared across runs but rows are not") {
  ExperimentConfig cfg = base_config();
  cfg.delta_rel = 1e-2;
  cfg.keep_run_traces = true;
  const ExperimentResult res = run_experiment(cfg);
  REQUIRE(res.per_run.size() == 3);
  // Distinct sampling paths give distinct traces.
  CHECK(res.per_run[0].records.back().e_total !=
        res.per_run[1].records.back().e_total);
}

TEST_CASE("averaged trace equals the mean of the kept runs") {
  ExperimentConfig cfg = base_config();
  cfg.runs = 4;
  cfg.keep_run_traces = true;
  cfg.bands = {2, 5};
  const ExperimentResult res = run_experiment(cfg);
  REQUIRE(res.per_run.size() == 4);

  for (std::size_t r = 0; r < res.averaged.records.size(); ++r) {
    double mean_total = 0.0, mean_res = 0.0;
    for (const auto& run : res.per_run) {
      mean_total += run.records[r].e_total;
      mean_res += run.records[r].residual_sq;
    }
    mean_total /= 4.0;
    mean_res /= 4.0;
    CHECK(res.averaged.records[r].e_total ==
          doctest::Approx(mean_total).epsilon(1e-12));
    CHECK(res.averaged.records[r].residual_sq ==
          doctest::Approx(mean_res).epsilon(1e-12));

    for (std::size_t c = 0; c < res.averaged.band_masses[r].size(); ++c) {
      double mean_band = 0.0;
      for (const auto& run : res.per_run) mean_band += run.band_masses[r][c];
      mean_band /= 4.0;
      CHECK(res.averaged.band_masses[r][c] ==
            doctest::Approx(mean_band).epsilon(1e-12));
    }
  }
}

TEST_CASE("deterministic methods run once") {
  ExperimentConfig cfg = base_config();
  cfg.method = Method::km;
  cfg.runs = 5;
  cfg.keep_run_traces = true;
  const ExperimentResult res = run_experiment(cfg);
  CHECK(res.per_run.size() == 1);

  cfg.method = Method::lm;
  cfg.iterations = 10;
  const ExperimentResult lm = run_experiment(cfg);
  CHECK(lm.per_run.size() == 1);
  // A full-gradient step costs one sweep over the rows.
  CHECK(lm.averaged.total_cost_units == 10 * 30);
}

TEST_CASE("band masses agree with the two-band split") {
  ExperimentConfig cfg = base_config();
  cfg.runs = 1;
  cfg.bands = {3};
  const ExperimentResult multi = run_experiment(cfg);
  cfg.bands.clear();
  cfg.level = 3;
  const ExperimentResult two = run_experiment(cfg);
  REQUIRE(multi.averaged.band_masses.size() ==
          two.averaged.records.size());
  for (std::size_t r = 0; r < two.averaged.records.size(); ++r) {
    CHECK(multi.averaged.band_masses[r][0] ==
          doctest::Approx(two.averaged.records[r].e_low).epsilon(1e-12));
    CHECK(multi.averaged.band_masses[r][1] ==
          doctest::Approx(two.averaged.records[r].e_high).epsilon(1e-12));
  }
}

TEST_CASE("discrepancy stopping on noisy data") {
  ExperimentConfig cfg = base_config();
  cfg.method = Method::rkm;
  cfg.runs = 1;
  cfg.delta_rel = 5e-2;
  cfg.iterations = 50 * 30;
  cfg.use_discrepancy = true;
  const ExperimentResult res = run_experiment(cfg);
  CHECK(res.averaged.stop_reason == StopReason::discrepancy);
  CHECK(res.averaged.stop_iteration < cfg.iterations);
  const double threshold = cfg.tau * res.noise.delta_abs;
  CHECK(std::sqrt(res.averaged.records.back().residual_sq) <=
        threshold * (1.0 + 1e-12));

  // The variance-reduced method only tests the rule at snapshots, so it
  // stops on a snapshot iterate.
  cfg.method = Method::rkmvr;
  cfg.epoch = 30;
  const ExperimentResult vr = run_experiment(cfg);
  CHECK(vr.averaged.stop_reason == StopReason::discrepancy);
  CHECK(vr.averaged.stop_iteration % 30 == 0);
  CHECK(std::sqrt(vr.averaged.records.back().residual_sq) <=
        threshold * (1.0 + 1e-12));
  // k_stop row updates, plus one sweep for each snapshot gradient taken at
  // 30, 60, ..., k_stop.
  const std::int64_t k_stop = vr.averaged.stop_iteration;
  CHECK(vr.averaged.total_cost_units == k_stop + 30 * (k_stop / 30));
}

TEST_CASE("csv round-trips exactly") {
  ExperimentConfig cfg = base_config();
  cfg.delta_rel = 1e-3;
  cfg.runs = 2;
  const ExperimentResult res = run_experiment(cfg);
  const std::string text = trace_to_csv(res.averaged);
  const RunTrace back = parse_csv(text);
  REQUIRE(back.records.size() == res.averaged.records.size());
  for (std::size_t r = 0; r < back.records.size(); ++r) {
    CHECK(back.records[r].k == res.averaged.records[r].k);
    CHECK(back.records[r].cost_units == res.averaged.records[r].cost_units);
    CHECK(back.records[r].e_total == res.averaged.records[r].e_total);
    CHECK(back.records[r].e_low == res.averaged.records[r].e_low);
    CHECK(back.records[r].e_high == res.averaged.records[r].e_high);
    CHECK(back.records[r].residual_sq == res.averaged.records[r].residual_sq);
  }

  const std::string path = "trace_roundtrip_tmp.csv";
  export_csv(res.averaged, path);
  const RunTrace from_file = import_csv(path);
  CHECK(trace_to_csv(from_file) == text);
  std::remove(path.c_str());

  CHECK_THROWS_AS(parse_csv("wrong,header\n1,2\n"), io_error);
  CHECK_THROWS_AS(
      parse_csv("k,cost_units,e_total,e_low,e_high,residual_sq\n1,2,3,4\n"),
      io_error);
  CHECK_THROWS_AS(import_csv("no_such_file.csv"), io_error);
}

TEST_CASE("comparison merges on common cost values") {
  ExperimentConfig km = base_config();
  km.method = Method::km;
  km.runs = 1;
  km.iterations = 40;
  km.stride = 10;
  ExperimentConfig rkm = km;
  rkm.method = Method::rkm;

  const std::string merged = compare_csv({km, rkm});
  std::size_t lines = 0;
  for (char ch : merged) lines += (ch == '\n');
  CHECK(lines == 1 + 5);  // header + k = 0,10,20,30,40
  CHECK(merged.rfind("cost_units,km_k,km_e_total", 0) == 0);
  CHECK(merged.find("rkm_e_total") != std::string::npos);

  ExperimentConfig other = rkm;
  other.n = 40;
  CHECK_THROWS_AS(compare_csv({km, other}), config_error);
  CHECK_THROWS_AS(compare_csv({km}), config_error);
}

TEST_CASE("error history shows semiconvergence under noise") {
  ExperimentConfig cfg;
  cfg.problem = "phillips";
  cfg.n = 60;
  cfg.method = Method::rkm;
  cfg.delta_rel = 5e-2;
  cfg.iterations = 20 * 60;
  cfg.runs = 40;
  cfg.seed = 12;
  cfg.level = 5;
  cfg.stride = 10;
  const ExperimentResult res = run_experiment(cfg);
  double min_err = res.averaged.records.front().e_total;
  std::size_t argmin = 0;
  for (std::size_t r = 0; r < res.averaged.records.size(); ++r) {
    if (res.averaged.records[r].e_total < min_err) {
      min_err = res.averaged.records[r].e_total;
      argmin = r;
    }
  }
  // The averaged error dips in the interior, then noise takes over.
  CHECK(argmin > 0);
  CHECK(argmin + 1 < res.averaged.records.size());
  CHECK(res.averaged.records.back().e_total > min_err);
}
