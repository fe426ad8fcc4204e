// Command-line front end: design detector banks, run attack/fault scenarios,
// calibrate thresholds, sweep detection rates, and dump plant invariant zeros.
// Exit codes: 0 success, 2 usage or config error, 3 design/attack infeasible,
// 4 simulation blow-up (trace truncated).

#include <cafdi/config.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 2;
constexpr int exit_infeasible = 3;
constexpr int exit_blowup = 4;

struct CommonArgs {
  std::string preset;
  std::string config_path;
  std::string out_prefix;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--preset", args.preset, "Built-in model preset name");
  cmd->add_option("--config", args.config_path, "Path to a JSON config document");
  cmd->add_option("--out", args.out_prefix, "Output path prefix for artifacts");
  cmd->add_option("--seed", args.seed, "Base seed override")
      ->each([&args](const std::string&) { args.seed_given = true; });
}

cafdi::ConfigDocument load_config(const CommonArgs& args) {
  if (args.preset.empty() == args.config_path.empty()) {
    throw std::invalid_argument("pass exactly one of --preset or --config");
  }
  cafdi::ConfigDocument doc;
  if (!args.preset.empty()) {
    doc = cafdi::config_from_preset(args.preset);
  } else {
    std::ifstream in(args.config_path);
    if (!in) throw std::invalid_argument("cannot open config file: " + args.config_path);
    cafdi::Json j;
    try {
      j = cafdi::Json::parse(in);
    } catch (const std::exception& e) {
      throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
    }
    doc = cafdi::parse_config(j);
  }
  if (args.seed_given) {
    doc.sim.seed = args.seed;
    doc.design.seed = args.seed;
  }
  return doc;
}

void write_text(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

void write_json(const std::string& path, const cafdi::Json& j) {
  write_text(path, j.dump(2) + "\n");
}

std::string prefix_or(const CommonArgs& args, const char* fallback) {
  return args.out_prefix.empty() ? fallback : args.out_prefix;
}

// The bank a command operates on: pinned gains when the config carries them,
// a fresh design otherwise.
cafdi::DetectorBank resolve_bank(const cafdi::ConfigDocument& doc,
                                 const cafdi::AugmentedModel& aug) {
  if (doc.bank) return *doc.bank;
  return cafdi::design_bank(aug, doc.d_ac, doc.design);
}

cafdi::ThresholdSet resolve_thresholds(const cafdi::ConfigDocument& doc,
                                       const cafdi::AugmentedModel& aug,
                                       const cafdi::DetectorBank& bank,
                                       const std::string& thresholds_path) {
  if (!thresholds_path.empty()) {
    std::ifstream in(thresholds_path);
    if (!in) {
      throw std::invalid_argument("cannot open thresholds file: " + thresholds_path);
    }
    cafdi::Json j;
    try {
      j = cafdi::Json::parse(in);
    } catch (const std::exception& e) {
      throw std::invalid_argument(std::string("thresholds: invalid JSON: ") + e.what());
    }
    return cafdi::thresholds_from_json(j);
  }
  cafdi::SimConfig cal_cfg = doc.sim;
  cafdi::ThresholdSet th = cafdi::calibrate_threshold(
      aug, bank, cal_cfg, doc.eval.calibration_runs, doc.eval.margin);
  th.floor = doc.eval.floor;
  return th;
}

int cmd_design(const CommonArgs& args) {
  const cafdi::ConfigDocument doc = load_config(args);
  const cafdi::AugmentedModel aug = cafdi::build_augmented(doc.plant, doc.aux);
  const cafdi::DetectorBank bank = cafdi::design_bank(aug, doc.d_ac, doc.design);
  const cafdi::ConditionReport report = cafdi::verify_conditions(bank, aug);

  const std::string prefix = prefix_or(args, "design");
  write_json(prefix + ".bank.json", cafdi::bank_to_json(bank));
  write_json(prefix + ".conditions.json", cafdi::conditions_to_json(report));

  int failing = 0;
  for (const auto& check : report.checks) {
    if (!check.pass) {
      std::fprintf(stderr, "condition failed: %s (%s)\n", check.id.c_str(),
                   check.description.c_str());
      ++failing;
    }
  }
  std::printf("bank: %s.bank.json  conditions: %s.conditions.json  (%zu checks, %d failing)\n",
              prefix.c_str(), prefix.c_str(), report.checks.size(), failing);
  return report.ok() ? exit_ok : exit_infeasible;
}

int cmd_run(const CommonArgs& args, const std::string& scenario_flag,
            const std::string& thresholds_path, std::optional<double> dt_flag,
            std::optional<double> t_end_flag, bool no_noise) {
  cafdi::ConfigDocument doc = load_config(args);
  if (dt_flag) doc.sim.dt = *dt_flag;
  if (no_noise) doc.sim.noise_on = false;

  const cafdi::AugmentedModel aug = cafdi::build_augmented(doc.plant, doc.aux);
  const cafdi::DetectorBank base_bank = resolve_bank(doc, aug);

  // Scenario priority: explicit flag, then the config's named scenario, then
  // a declarative timeline block.
  cafdi::Scenario sc;
  const std::string name = !scenario_flag.empty() ? scenario_flag : doc.scenario;
  if (!name.empty()) {
    sc = cafdi::build_scenario(name, aug, base_bank, doc.sim.dt);
  } else if (doc.timeline) {
    sc.name = "custom";
    sc.bank = base_bank;
    sc.timeline = cafdi::timeline_from_spec(aug, doc.n_c(), *doc.timeline, doc.sim.dt);
  } else {
    throw std::invalid_argument(
        "no scenario selected: pass --scenario or declare scenario/timeline in the config");
  }

  cafdi::SimConfig cfg = doc.sim;
  cfg.t_end = t_end_flag ? *t_end_flag : sc.timeline.t_end;

  const cafdi::ThresholdSet thresholds =
      resolve_thresholds(doc, aug, sc.bank, thresholds_path);
  const cafdi::SimulationTrace trace = cafdi::simulate(aug, sc.bank, sc.timeline, cfg);
  const cafdi::DetectionReport report =
      cafdi::detect(trace, thresholds, doc.eval.debounce);

  const std::string prefix = prefix_or(args, "run");
  cafdi::export_trace_csv(trace, prefix + ".trace.csv");
  cafdi::Json rj = cafdi::detection_to_json(report);
  rj["scenario"] = sc.name;
  rj["truncated"] = trace.truncated;
  if (trace.truncated) rj["truncated_at"] = trace.truncated_at;
  rj["thresholds"] = cafdi::thresholds_to_json(thresholds);
  write_json(prefix + ".report.json", rj);

  std::string verdict;
  for (cafdi::Category cat : report.detected_categories()) {
    if (!verdict.empty()) verdict += ", ";
    verdict += cafdi::category_name(cat);
  }
  std::printf("scenario %s: verdict {%s}  trace: %s.trace.csv  report: %s.report.json\n",
              sc.name.c_str(), verdict.c_str(), prefix.c_str(), prefix.c_str());
  if (trace.truncated) {
    std::fprintf(stderr, "simulation diverged; trace truncated at t=%.6f\n",
                 trace.truncated_at);
    return exit_blowup;
  }
  return exit_ok;
}

int cmd_calibrate(const CommonArgs& args, std::optional<int> runs_flag,
                  std::optional<double> dt_flag, std::optional<double> t_end_flag,
                  bool no_noise) {
  cafdi::ConfigDocument doc = load_config(args);
  if (dt_flag) doc.sim.dt = *dt_flag;
  if (t_end_flag) doc.sim.t_end = *t_end_flag;
  if (no_noise) doc.sim.noise_on = false;
  const int runs = runs_flag ? *runs_flag : doc.eval.calibration_runs;
  if (runs <= 0) throw std::invalid_argument("--runs must be a positive count");

  const cafdi::AugmentedModel aug = cafdi::build_augmented(doc.plant, doc.aux);
  const cafdi::DetectorBank bank = resolve_bank(doc, aug);
  cafdi::ThresholdSet th =
      cafdi::calibrate_threshold(aug, bank, doc.sim, runs, doc.eval.margin);
  th.floor = doc.eval.floor;

  const std::string prefix = prefix_or(args, "calibrate");
  write_json(prefix + ".thresholds.json", cafdi::thresholds_to_json(th));
  for (cafdi::Category cat : cafdi::all_categories) {
    const int c = static_cast<int>(cat);
    std::printf("eta_%s = %.6e%s\n", cafdi::category_name(cat), th.effective(cat),
                th.degenerate[c] ? "  (degenerate healthy residual, floor applied)" : "");
  }
  std::printf("thresholds: %s.thresholds.json\n", prefix.c_str());
  return exit_ok;
}

int cmd_tpr(const CommonArgs& args, std::optional<int> runs_flag,
            const std::string& thresholds_path, std::optional<double> dt_flag,
            bool no_noise) {
  cafdi::ConfigDocument doc = load_config(args);
  if (dt_flag) doc.sim.dt = *dt_flag;
  if (no_noise) doc.sim.noise_on = false;
  const int runs = runs_flag ? *runs_flag : 100;
  if (runs <= 0) throw std::invalid_argument("--runs must be a positive count");

  const cafdi::AugmentedModel aug = cafdi::build_augmented(doc.plant, doc.aux);
  const cafdi::DetectorBank bank = resolve_bank(doc, aug);
  const cafdi::ThresholdSet thresholds =
      resolve_thresholds(doc, aug, bank, thresholds_path);

  cafdi::TprParams params;
  params.onset = doc.eval.tpr_onset;
  params.t_end = doc.eval.tpr_t_end;
  params.dt = doc.sim.dt;
  params.debounce = doc.eval.debounce;
  const auto tables = cafdi::tpr_campaign(aug, bank, thresholds, runs, doc.sim.seed, params);

  const std::string prefix = prefix_or(args, "tpr");
  write_text(prefix + ".tpr.csv", cafdi::tpr_to_csv(tables));
  write_json(prefix + ".tpr.json", cafdi::tpr_to_json(tables));
  for (const auto& table : tables) {
    double lo = 1.0;
    for (const auto& row : table.rows) lo = std::min(lo, row.tpr);
    std::printf("table %s: %zu rows, min tpr %.3f\n",
                cafdi::category_name(table.target), table.rows.size(), lo);
  }
  std::printf("tables: %s.tpr.csv, %s.tpr.json\n", prefix.c_str(), prefix.c_str());
  return exit_ok;
}

int cmd_zeros(const CommonArgs& args) {
  const cafdi::ConfigDocument doc = load_config(args);
  const cafdi::Matrix d = cafdi::Matrix::Zero(doc.plant.p(), doc.plant.m());
  const cafdi::ZeroSet zs =
      cafdi::invariant_zeros(doc.plant.a_s, doc.plant.b_s, doc.plant.c_s, d);

  cafdi::Json j;
  j["normal_rank"] = zs.normal_rank;
  j["rank_deficient_everywhere"] = zs.rank_deficient_everywhere;
  cafdi::Json zeros = cafdi::Json::array();
  for (const auto& z : zs.zeros) zeros.push_back(cafdi::Json::array({z.real(), z.imag()}));
  j["zeros"] = std::move(zeros);
  j["minimum_phase"] = zs.minimum_phase();

  const std::string text = j.dump(2) + "\n";
  std::fputs(text.c_str(), stdout);
  if (!args.out_prefix.empty()) write_text(args.out_prefix + ".zeros.json", text);
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simultaneous cyber-attack and fault detection toolkit"};
  app.require_subcommand(1);

  CommonArgs design_args, run_args, calibrate_args, tpr_args, zeros_args;

  CLI::App* design = app.add_subcommand("design", "Design a detector bank and verify its conditions");
  add_common(design, design_args);

  CLI::App* run = app.add_subcommand("run", "Simulate a scenario and report detections");
  add_common(run, run_args);
  std::string run_scenario, run_thresholds;
  std::optional<double> run_dt, run_t_end;
  bool run_no_noise = false;
  run->add_option("--scenario", run_scenario, "Named scenario to simulate");
  run->add_option("--thresholds", run_thresholds, "Thresholds JSON from a calibrate run");
  run->add_option("--dt", run_dt, "Sample period override (s)");
  run->add_option("--t-end", run_t_end, "Simulation horizon override (s)");
  run->add_flag("--no-noise", run_no_noise, "Disable process and measurement noise");

  CLI::App* calibrate = app.add_subcommand("calibrate", "Calibrate residual thresholds from healthy runs");
  add_common(calibrate, calibrate_args);
  std::optional<int> calibrate_runs;
  std::optional<double> calibrate_dt, calibrate_t_end;
  bool calibrate_no_noise = false;
  calibrate->add_option("--runs", calibrate_runs, "Number of healthy calibration runs");
  calibrate->add_option("--dt", calibrate_dt, "Sample period override (s)");
  calibrate->add_option("--t-end", calibrate_t_end, "Run horizon override (s)");
  calibrate->add_flag("--no-noise", calibrate_no_noise, "Disable noise (degenerate calibration)");

  CLI::App* tpr = app.add_subcommand("tpr", "Monte-Carlo true-positive-rate tables");
  add_common(tpr, tpr_args);
  std::optional<int> tpr_runs;
  std::string tpr_thresholds;
  std::optional<double> tpr_dt;
  bool tpr_no_noise = false;
  tpr->add_option("--runs", tpr_runs, "Trials per anomaly combination");
  tpr->add_option("--thresholds", tpr_thresholds, "Thresholds JSON from a calibrate run");
  tpr->add_option("--dt", tpr_dt, "Sample period override (s)");
  tpr->add_flag("--no-noise", tpr_no_noise, "Disable noise in the trials");

  CLI::App* zeros = app.add_subcommand("zeros", "Dump the invariant zeros of the configured plant");
  add_common(zeros, zeros_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }

  try {
    if (design->parsed()) return cmd_design(design_args);
    if (run->parsed()) {
      return cmd_run(run_args, run_scenario, run_thresholds, run_dt, run_t_end,
                     run_no_noise);
    }
    if (calibrate->parsed()) {
      return cmd_calibrate(calibrate_args, calibrate_runs, calibrate_dt,
                           calibrate_t_end, calibrate_no_noise);
    }
    if (tpr->parsed()) {
      return cmd_tpr(tpr_args, tpr_runs, tpr_thresholds, tpr_dt, tpr_no_noise);
    }
    if (zeros->parsed()) return cmd_zeros(zeros_args);
  } catch (const cafdi::DesignError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_infeasible;
  } catch (const cafdi::AttackError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_infeasible;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_usage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return exit_usage;
}
