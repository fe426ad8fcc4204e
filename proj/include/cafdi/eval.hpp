#pragma once

#include <cafdi/sim.hpp>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace cafdi {

/* ------------------------------- thresholds ------------------------------- */

// Residual thresholds per channel. `raw` is margin * (largest healthy residual
// norm seen during calibration). A channel whose healthy residual is zero up to
// round-off gets a degenerate raw value; detection therefore tests against
// effective(), which never drops below `floor` so that round-off leakage in the
// exactly-decoupled channels cannot trip a detector.
struct ThresholdSet {
  std::array<double, 4> raw{{0.0, 0.0, 0.0, 0.0}};
  std::array<bool, 4> degenerate{{false, false, false, false}};
  double floor = 1e-6;
  double margin = 1.1;
  int n_runs = 0;
  std::uint64_t base_seed = 0;

  double effective(Category cat) const {
    return std::max(raw[static_cast<int>(cat)], floor);
  }
};

// Scale below which a calibrated healthy maximum is indistinguishable from
// floating-point residue of an exact cancellation.
inline constexpr double degenerate_threshold_scale = 1e-9;

// Runs `n_runs` healthy closed-loop simulations (anomalies absent, noise as
// configured) and sets each channel threshold to margin * max over runs and
// time of the residual norm. Run i uses seed mix_seed(cfg.seed, i), so the
// result depends only on (model, bank, cfg, n_runs, margin), not scheduling.
inline ThresholdSet calibrate_threshold(const AugmentedModel& aug,
                                        const DetectorBank& bank,
                                        const SimConfig& cfg, int n_runs,
                                        double margin = 1.1) {
  if (n_runs <= 0) {
    throw std::invalid_argument("calibrate_threshold: n_runs must be positive");
  }
  if (!(margin >= 1.0)) {
    throw std::invalid_argument("calibrate_threshold: margin must be >= 1");
  }
  ThresholdSet out;
  out.margin = margin;
  out.n_runs = n_runs;
  out.base_seed = cfg.seed;

  std::array<double, 4> healthy_max{{0.0, 0.0, 0.0, 0.0}};
  for (int i = 0; i < n_runs; ++i) {
    SimConfig run_cfg = cfg;
    run_cfg.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(i));
    run_cfg.lean = true;
    ScenarioTimeline healthy = healthy_timeline(
        aug, bank.d_ac.cols(), cfg.t_end);
    SimulationTrace trace = simulate(aug, bank, healthy, run_cfg);
    if (trace.truncated) {
      throw std::runtime_error(
          "calibrate_threshold: healthy run diverged; the bank is unstable");
    }
    for (int c = 0; c < 4; ++c) {
      const double m = trace.channels[c].res_norm.maxCoeff();
      healthy_max[c] = std::max(healthy_max[c], m);
    }
  }
  for (int c = 0; c < 4; ++c) {
    out.raw[c] = margin * healthy_max[c];
    out.degenerate[c] = healthy_max[c] <= degenerate_threshold_scale;
  }
  return out;
}

/* -------------------------------- detection ------------------------------- */

struct DetectionReport {
  std::array<bool, 4> detected{{false, false, false, false}};
  // Start time of the first qualifying exceedance window; NaN when undetected.
  std::array<double, 4> first_crossing{
      {std::numeric_limits<double>::quiet_NaN(),
       std::numeric_limits<double>::quiet_NaN(),
       std::numeric_limits<double>::quiet_NaN(),
       std::numeric_limits<double>::quiet_NaN()}};
  std::array<double, 4> max_res_norm{{0.0, 0.0, 0.0, 0.0}};
  std::array<double, 4> threshold_used{{0.0, 0.0, 0.0, 0.0}};

  // Isolation verdict: the set of flagged channels.
  std::vector<Category> detected_categories() const {
    std::vector<Category> out;
    for (Category cat : all_categories) {
      if (detected[static_cast<int>(cat)]) out.push_back(cat);
    }
    return out;
  }
};

// Flags channel `cat` once its residual norm exceeds the effective threshold
// for `debounce` consecutive samples, considering only samples at t >= t_from.
// The reported crossing is the start of the qualifying window.
inline DetectionReport detect(const SimulationTrace& trace,
                              const ThresholdSet& thresholds, int debounce = 1,
                              double t_from = 0.0) {
  if (debounce < 1) throw std::invalid_argument("detect: debounce must be >= 1");
  DetectionReport report;
  const Index n_samples = trace.t.size();
  for (Category cat : all_categories) {
    const int c = static_cast<int>(cat);
    const double eta = thresholds.effective(cat);
    report.threshold_used[c] = eta;
    const Vector& norm = trace.channels[c].res_norm;
    if (norm.size() > 0) report.max_res_norm[c] = norm.maxCoeff();
    int run_len = 0;
    for (Index k = 0; k < n_samples; ++k) {
      if (trace.t(k) < t_from) continue;
      if (norm(k) > eta) {
        ++run_len;
        if (run_len >= debounce) {
          report.detected[c] = true;
          report.first_crossing[c] = trace.t(k - (debounce - 1));
          break;
        }
      } else {
        run_len = 0;
      }
    }
  }
  return report;
}

/* ----------------------------- covertness gap ----------------------------- */

// Peak deviation that `timeline`'s anomalies cause in a chosen measurement,
// relative to an anomaly-free run with identical seed and noise draws. With
// at_plant_output the gap is measured at y_p (what the attack really does to
// the plant); otherwise at y* (what the controller side observes).
inline double covertness_gap(const AugmentedModel& aug, const DetectorBank& bank,
                             const ScenarioTimeline& timeline,
                             const SimConfig& cfg, bool at_plant_output = false) {
  SimConfig run_cfg = cfg;
  run_cfg.lean = false;
  ScenarioTimeline free = timeline;
  const Index n_c = bank.d_ac.cols();
  free.a_u = zero_signal(aug.dims.m_a);
  free.a_y = zero_signal(aug.dims.p_a);
  free.a_c = zero_signal(n_c);
  free.f1 = zero_signal(aug.dims.m_f);
  free.f2 = zero_signal(aug.dims.p_f);

  SimulationTrace attacked = simulate(aug, bank, timeline, run_cfg);
  SimulationTrace clean = simulate(aug, bank, free, run_cfg);
  if (attacked.truncated || clean.truncated) {
    throw std::runtime_error("covertness_gap: simulation diverged");
  }
  const Matrix& a = at_plant_output ? attacked.y_p : attacked.y_star;
  const Matrix& b = at_plant_output ? clean.y_p : clean.y_star;
  double gap = 0.0;
  for (Index k = 0; k < a.cols(); ++k) {
    gap = std::max(gap, (a.col(k) - b.col(k)).norm());
  }
  return gap;
}

/* ------------------------------ TPR campaign ------------------------------ */

struct TprParams {
  double onset = 1.0;
  double t_end = 10.0;
  double dt = 1e-3;
  int debounce = 1;
  int threads = 0;  // 0: hardware concurrency
};

// One anomaly combination to run: the full activation pattern (the table's
// target anomaly must be on) and its display label.
struct TprRowSpec {
  std::string label;
  ActiveSignals active;
};

// Row combinations per table, indexed by Category.
using TprGrid = std::array<std::vector<TprRowSpec>, 4>;

struct TprRow {
  std::string label;
  ActiveSignals active;
  int true_positives = 0;
  int n_runs = 0;
  double tpr = 0.0;

  int false_negatives() const { return n_runs - true_positives; }
};

struct TprTable {
  Category target = Category::AA;
  std::vector<TprRow> rows;
};

namespace detail {

inline const char* anomaly_axis_name(int axis) {
  switch (axis) {
    case 0: return "a_u";
    case 1: return "a_y";
    case 2: return "f1";
    case 3: return "f2";
    default: return "?";
  }
}

inline void set_axis(ActiveSignals& sig, int axis, bool on) {
  switch (axis) {
    case 0: sig.a_u = on; break;
    case 1: sig.a_y = on; break;
    case 2: sig.f1 = on; break;
    case 3: sig.f2 = on; break;
    default: break;
  }
}

inline int target_axis(Category cat) {
  switch (cat) {
    case Category::AA: return 0;
    case Category::SA: return 1;
    case Category::AF: return 2;
    case Category::SF: return 3;
  }
  return 0;
}

// Row r of a table activates the target plus the subset of the three
// remaining anomaly axes encoded by the bits of r (axis order preserved).
inline TprRowSpec make_tpr_row(Category target, int r) {
  TprRowSpec row;
  const int t_axis = target_axis(target);
  set_axis(row.active, t_axis, true);
  std::string label = anomaly_axis_name(t_axis);
  int bit = 0;
  for (int axis = 0; axis < 4; ++axis) {
    if (axis == t_axis) continue;
    if ((r >> bit) & 1) {
      set_axis(row.active, axis, true);
      label += "+";
      label += anomaly_axis_name(axis);
    }
    ++bit;
  }
  row.label = label;
  return row;
}

}  // namespace detail

// The stock campaign grid: per table, the target anomaly crossed with every
// subset of the other three anomaly kinds (8 rows).
inline TprGrid default_tpr_grid() {
  TprGrid grid;
  for (Category cat : all_categories) {
    for (int r = 0; r < 8; ++r) {
      grid[static_cast<int>(cat)].push_back(detail::make_tpr_row(cat, r));
    }
  }
  return grid;
}

// One detection trial: did channel `target` flag within [onset, t_end]?
// Throws if the pattern does not include the target's own anomaly, since the
// result would measure false positives, not true positives.
inline bool tpr_trial(const AugmentedModel& aug, const DetectorBank& bank,
                      const ThresholdSet& thresholds, Category target,
                      const ActiveSignals& active, std::uint64_t seed,
                      const TprParams& params = {}) {
  const int t_axis = detail::target_axis(target);
  const bool target_on = (t_axis == 0 && active.a_u) ||
                         (t_axis == 1 && active.a_y) ||
                         (t_axis == 2 && active.f1) ||
                         (t_axis == 3 && active.f2);
  if (!target_on) {
    throw std::invalid_argument(
        "tpr_trial: the target channel's own anomaly must be active");
  }
  ScenarioTimeline timeline = probe_timeline(aug, bank, active, params.onset,
                                             params.t_end, params.dt);
  SimConfig cfg;
  cfg.dt = params.dt;
  cfg.t_end = params.t_end;
  cfg.seed = seed;
  cfg.noise_on = true;
  cfg.lean = true;
  SimulationTrace trace = simulate(aug, bank, timeline, cfg);
  if (trace.truncated) return false;
  DetectionReport report =
      detect(trace, thresholds, params.debounce, params.onset);
  return report.detected[static_cast<int>(target)];
}

// Monte-Carlo true-positive-rate sweep over the grid's anomaly combinations:
// n_runs noisy trials per row, TP counted when the table's target channel
// flags inside [onset, t_end]. Trial (table, row, run) uses seed
// mix_seed(base_seed, flat index), so results are thread-count invariant.
inline std::array<TprTable, 4> tpr_campaign(const AugmentedModel& aug,
                                            const DetectorBank& bank,
                                            const ThresholdSet& thresholds,
                                            const TprGrid& grid, int n_runs,
                                            std::uint64_t base_seed,
                                            const TprParams& params = {}) {
  if (n_runs <= 0) {
    throw std::invalid_argument("tpr_campaign: n_runs must be positive");
  }
  constexpr int n_tables = 4;
  std::array<TprTable, 4> tables;
  std::vector<int> cell_table;   // flat cell -> table
  std::vector<int> cell_row;     // flat cell -> row within its table
  for (int t = 0; t < n_tables; ++t) {
    tables[t].target = all_categories[t];
    const int t_axis = detail::target_axis(tables[t].target);
    for (std::size_t r = 0; r < grid[t].size(); ++r) {
      const TprRowSpec& spec = grid[t][r];
      const bool target_on = (t_axis == 0 && spec.active.a_u) ||
                             (t_axis == 1 && spec.active.a_y) ||
                             (t_axis == 2 && spec.active.f1) ||
                             (t_axis == 3 && spec.active.f2);
      if (!target_on) {
        throw std::invalid_argument("tpr_campaign: row '" + spec.label +
                                    "' does not activate the target anomaly of table " +
                                    category_name(tables[t].target));
      }
      TprRow row;
      row.label = spec.label;
      row.active = spec.active;
      row.n_runs = n_runs;
      tables[t].rows.push_back(row);
      cell_table.push_back(t);
      cell_row.push_back(static_cast<int>(r));
    }
  }

  const long n_cells = static_cast<long>(cell_table.size());
  const long total = n_cells * n_runs;
  if (total == 0) return tables;
  std::vector<std::atomic<int>> hits(cell_table.size());
  for (auto& h : hits) h.store(0);
  std::atomic<long> next{0};
  std::atomic<bool> failed{false};
  std::string error_text;
  std::mutex error_mutex;

  unsigned n_threads = params.threads > 0
                           ? static_cast<unsigned>(params.threads)
                           : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(total));

  auto worker = [&]() {
    for (;;) {
      const long job = next.fetch_add(1);
      if (job >= total || failed.load()) return;
      const long cell = job / n_runs;
      const int t = cell_table[static_cast<std::size_t>(cell)];
      const int r = cell_row[static_cast<std::size_t>(cell)];
      const std::uint64_t seed =
          mix_seed(base_seed, static_cast<std::uint64_t>(job));
      try {
        const bool hit =
            tpr_trial(aug, bank, thresholds, tables[t].target,
                      tables[t].rows[r].active, seed, params);
        if (hit) hits[static_cast<std::size_t>(cell)].fetch_add(1);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        error_text = e.what();
        failed.store(true);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failed.load()) {
    throw std::runtime_error("tpr_campaign: trial failed: " + error_text);
  }

  for (long cell = 0; cell < n_cells; ++cell) {
    TprRow& row = tables[cell_table[cell]].rows[cell_row[cell]];
    row.true_positives = hits[static_cast<std::size_t>(cell)].load();
    row.tpr = static_cast<double>(row.true_positives) / n_runs;
  }
  return tables;
}

inline std::array<TprTable, 4> tpr_campaign(const AugmentedModel& aug,
                                            const DetectorBank& bank,
                                            const ThresholdSet& thresholds,
                                            int n_runs, std::uint64_t base_seed,
                                            const TprParams& params = {}) {
  return tpr_campaign(aug, bank, thresholds, default_tpr_grid(), n_runs,
                      base_seed, params);
}

}  // namespace cafdi
