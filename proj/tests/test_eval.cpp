#include <catch2/catch_amalgamated.hpp>

#include <cafdi/eval.hpp>

#include "testbench.hpp"

#include <algorithm>

using bench::Matrix;
using bench::Vector;
using cafdi::Category;
using cafdi::Index;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::MessageMatches;

namespace {

struct Bench {
  cafdi::AugmentedModel aug = bench::augmented();
  cafdi::DetectorBank bank = bench::pinned_bank(aug);
};

cafdi::SimConfig noisy_config(double t_end, std::uint64_t seed) {
  cafdi::SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = t_end;
  cfg.seed = seed;
  cfg.noise_on = true;
  return cfg;
}

// Synthetic trace with hand-placed residual-norm patterns, for exercising the
// detector logic without a simulation.
cafdi::SimulationTrace synthetic_trace(Index samples, double dt) {
  cafdi::SimulationTrace trace;
  trace.lean = true;
  trace.t = Vector::Zero(samples);
  for (Index k = 0; k < samples; ++k) trace.t(k) = double(k) * dt;
  for (int c = 0; c < 4; ++c) trace.channels[c].res_norm = Vector::Zero(samples);
  return trace;
}

}  // namespace

TEST_CASE("calibration validates its run count and margin") {
  const Bench b;
  const cafdi::SimConfig cfg = noisy_config(1.0, 0);
  REQUIRE_THROWS_MATCHES(cafdi::calibrate_threshold(b.aug, b.bank, cfg, 0), std::invalid_argument,
                         MessageMatches(ContainsSubstring("n_runs must be positive")));
  REQUIRE_THROWS_MATCHES(cafdi::calibrate_threshold(b.aug, b.bank, cfg, 1, 0.5),
                         std::invalid_argument,
                         MessageMatches(ContainsSubstring("margin must be >= 1")));
}

TEST_CASE("calibration is deterministic and scales with the margin") {
  const Bench b;
  const cafdi::SimConfig cfg = noisy_config(5.0, 7);

  const cafdi::ThresholdSet a = cafdi::calibrate_threshold(b.aug, b.bank, cfg, 10, 1.1);
  const cafdi::ThresholdSet again = cafdi::calibrate_threshold(b.aug, b.bank, cfg, 10, 1.1);
  const cafdi::ThresholdSet wide = cafdi::calibrate_threshold(b.aug, b.bank, cfg, 10, 2.2);

  for (int c = 0; c < 4; ++c) {
    REQUIRE(a.raw[c] == again.raw[c]);
    REQUIRE(a.degenerate[c] == again.degenerate[c]);
    REQUIRE(wide.raw[c] == Catch::Approx(2.0 * a.raw[c]).epsilon(1e-15));
  }
  REQUIRE(a.n_runs == 10);
  REQUIRE(a.base_seed == 7);
  REQUIRE(a.margin == 1.1);

  // The attack channels cancel healthy dynamics exactly; only round-off
  // survives, which the calibration marks as degenerate.
  REQUIRE(a.degenerate[0]);
  REQUIRE(a.degenerate[1]);
  REQUIRE_FALSE(a.degenerate[2]);
  REQUIRE_FALSE(a.degenerate[3]);
  REQUIRE(a.raw[2] > 1e-6);
  REQUIRE(a.raw[3] > 1e-6);

  // Degenerate channels are clamped to the floor.
  REQUIRE(a.effective(Category::AA) == a.floor);
  REQUIRE(a.effective(Category::AF) == a.raw[2]);
}

TEST_CASE("noise-free calibration reports every channel degenerate") {
  const Bench b;
  cafdi::SimConfig cfg = noisy_config(2.0, 0);
  cfg.noise_on = false;
  const cafdi::ThresholdSet th = cafdi::calibrate_threshold(b.aug, b.bank, cfg, 1);
  for (int c = 0; c < 4; ++c) {
    REQUIRE(th.degenerate[c]);
    REQUIRE(th.effective(Category(c)) == th.floor);
  }
}

TEST_CASE("detection honors debounce, start time, and threshold ordering") {
  cafdi::SimulationTrace trace = synthetic_trace(100, 0.1);
  Vector& nr = trace.channels[0].res_norm;
  nr(10) = 5.0;
  nr(20) = 5.0;
  nr(21) = 5.0;
  nr(22) = 5.0;

  cafdi::ThresholdSet th;
  th.raw = {1.0, 1.0, 1.0, 1.0};
  th.floor = 1e-9;

  REQUIRE_THROWS_AS(cafdi::detect(trace, th, 0), std::invalid_argument);

  const cafdi::DetectionReport single = cafdi::detect(trace, th, 1);
  REQUIRE(single.detected[0]);
  REQUIRE(single.first_crossing[0] == Catch::Approx(1.0));
  REQUIRE_FALSE(single.detected[1]);
  REQUIRE(std::isnan(single.first_crossing[1]));
  REQUIRE(single.max_res_norm[0] == 5.0);
  REQUIRE(single.threshold_used[0] == 1.0);
  REQUIRE(single.detected_categories() == std::vector<Category>{Category::AA});

  // A three-sample debounce skips the lone spike and reports the start of the
  // first qualifying window.
  const cafdi::DetectionReport window = cafdi::detect(trace, th, 3);
  REQUIRE(window.detected[0]);
  REQUIRE(window.first_crossing[0] == Catch::Approx(2.0));

  REQUIRE_FALSE(cafdi::detect(trace, th, 4).detected[0]);

  // Samples before t_from are ignored entirely.
  const cafdi::DetectionReport late = cafdi::detect(trace, th, 1, 1.5);
  REQUIRE(late.detected[0]);
  REQUIRE(late.first_crossing[0] == Catch::Approx(2.0));

  // Raising a threshold can only lose detections.
  cafdi::ThresholdSet high = th;
  high.raw[0] = 10.0;
  REQUIRE_FALSE(cafdi::detect(trace, high, 1).detected[0]);
}

TEST_CASE("calibrated thresholds keep healthy false positives rare") {
  const Bench b;
  const double t_end = 5.0;
  const cafdi::ThresholdSet th =
      cafdi::calibrate_threshold(b.aug, b.bank, noisy_config(t_end, 7), 20, 1.1);

  int false_positives = 0;
  const int trials = 60;
  for (int i = 0; i < trials; ++i) {
    cafdi::SimConfig cfg = noisy_config(t_end, cafdi::mix_seed(999, std::uint64_t(i)));
    cfg.lean = true;
    const cafdi::ScenarioTimeline tl = cafdi::healthy_timeline(b.aug, b.bank.d_ac.cols(), t_end);
    const cafdi::SimulationTrace trace = cafdi::simulate(b.aug, b.bank, tl, cfg);
    const cafdi::DetectionReport rep = cafdi::detect(trace, th, 1);
    for (int c = 0; c < 4; ++c) false_positives += rep.detected[c] ? 1 : 0;
  }
  REQUIRE(false_positives <= 3);
}

TEST_CASE("detection separates a staged fault scenario") {
  const Bench b;
  const double t_end = 10.0;
  const cafdi::ThresholdSet th =
      cafdi::calibrate_threshold(b.aug, b.bank, noisy_config(t_end, 7), 10, 1.1);

  cafdi::ScenarioTimeline tl = cafdi::healthy_timeline(b.aug, b.bank.d_ac.cols(), t_end);
  tl.f1 = cafdi::bias_fault(1, 40.0, 5.0);
  const cafdi::SimulationTrace trace =
      cafdi::simulate(b.aug, b.bank, tl, noisy_config(t_end, 123));
  const cafdi::DetectionReport rep = cafdi::detect(trace, th, 1);

  REQUIRE(rep.detected[int(Category::AF)]);
  REQUIRE(rep.first_crossing[int(Category::AF)] >= 5.0);
  REQUIRE(rep.first_crossing[int(Category::AF)] < 6.0);
  REQUIRE_FALSE(rep.detected[int(Category::AA)]);
  REQUIRE_FALSE(rep.detected[int(Category::SA)]);
}

TEST_CASE("covertness gap separates the console view from the plant view") {
  const Bench b;
  cafdi::SimConfig cfg = noisy_config(10.0, 5);
  cfg.noise_on = false;

  cafdi::ScenarioTimeline tl = cafdi::healthy_timeline(b.aug, b.bank.d_ac.cols(), 10.0);
  tl.a_u = cafdi::constant_signal(Vector{{2.0, 1.0}}, 1.0);
  tl.a_y = cafdi::covert_attack(b.aug, tl.a_u, cfg.dt);

  const double gap_console = cafdi::covertness_gap(b.aug, b.bank, tl, cfg, false);
  const double gap_plant = cafdi::covertness_gap(b.aug, b.bank, tl, cfg, true);
  REQUIRE(gap_console < 1e-8);
  REQUIRE(gap_plant > 0.5);

  // Identical seeds make the attacked and clean runs share noise draws, so
  // the gap is noise-invariant.
  cafdi::SimConfig noisy = cfg;
  noisy.noise_on = true;
  const double gap_noisy = cafdi::covertness_gap(b.aug, b.bank, tl, noisy, false);
  REQUIRE(gap_noisy == Catch::Approx(gap_console).margin(1e-9));
}

TEST_CASE("tpr trial insists on the target anomaly being active") {
  const Bench b;
  const cafdi::ThresholdSet th;
  cafdi::ActiveSignals only_fault;
  only_fault.f1 = true;
  REQUIRE_THROWS_MATCHES(
      cafdi::tpr_trial(b.aug, b.bank, th, Category::AA, only_fault, 0),
      std::invalid_argument,
      MessageMatches(ContainsSubstring("target channel's own anomaly must be active")));
}

TEST_CASE("the stock campaign grid crosses each target with every other anomaly subset") {
  const cafdi::TprGrid grid = cafdi::default_tpr_grid();
  for (int t = 0; t < 4; ++t) REQUIRE(grid[t].size() == 8);
  REQUIRE(grid[0][0].label == "a_u");
  REQUIRE(grid[0][7].label == "a_u+a_y+f1+f2");
  REQUIRE(grid[1][0].label == "a_y");
  REQUIRE(grid[2][0].label == "f1");
  REQUIRE(grid[3][0].label == "f2");
  REQUIRE(grid[0][0].active.a_u);
  REQUIRE_FALSE(grid[0][0].active.f1);
  REQUIRE(grid[0][7].active.f2);
}

TEST_CASE("tpr campaign accounting is exact and thread-count invariant") {
  const Bench b;
  const double t_end = 5.0;
  const cafdi::ThresholdSet th =
      cafdi::calibrate_threshold(b.aug, b.bank, noisy_config(t_end, 7), 10, 1.1);

  // One target-only row per table keeps the campaign small.
  cafdi::TprGrid grid;
  for (int t = 0; t < 4; ++t) {
    cafdi::TprRowSpec row;
    row.active.a_u = (t == 0);
    row.active.a_y = (t == 1);
    row.active.f1 = (t == 2);
    row.active.f2 = (t == 3);
    row.label = "only";
    grid[t].push_back(row);
  }

  cafdi::TprParams params;
  params.onset = 1.0;
  params.t_end = t_end;
  params.threads = 1;
  const auto serial = cafdi::tpr_campaign(b.aug, b.bank, th, grid, 3, 11, params);
  params.threads = 4;
  const auto parallel = cafdi::tpr_campaign(b.aug, b.bank, th, grid, 3, 11, params);

  for (int t = 0; t < 4; ++t) {
    const cafdi::TprRow& row = serial[t].rows[0];
    REQUIRE(serial[t].target == cafdi::all_categories[t]);
    REQUIRE(row.n_runs == 3);
    REQUIRE(row.true_positives + row.false_negatives() == 3);
    REQUIRE(row.tpr == Catch::Approx(double(row.true_positives) / 3.0));
    // The reference anomalies are far above threshold: every trial hits.
    REQUIRE(row.true_positives == 3);
    REQUIRE(parallel[t].rows[0].true_positives == row.true_positives);
  }

  REQUIRE_THROWS_MATCHES(cafdi::tpr_campaign(b.aug, b.bank, th, grid, 0, 11, params),
                         std::invalid_argument,
                         MessageMatches(ContainsSubstring("n_runs must be positive")));

  cafdi::TprGrid bad = grid;
  bad[0][0].active.a_u = false;
  bad[0][0].label = "bad-row";
  REQUIRE_THROWS_MATCHES(
      cafdi::tpr_campaign(b.aug, b.bank, th, bad, 2, 11, params), std::invalid_argument,
      MessageMatches(ContainsSubstring("row 'bad-row' does not activate the target anomaly")));
}
