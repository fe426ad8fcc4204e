#pragma once

#include <cafdi/eval.hpp>
#include <cafdi/preset.hpp>

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace cafdi {

// Insertion-ordered JSON keeps serialized documents stable and diff-friendly.
using Json = nlohmann::ordered_json;

/* ----------------------------- document model ----------------------------- */

struct EvalConfig {
  double margin = 1.1;
  double floor = 1e-6;
  int calibration_runs = 100;
  int debounce = 1;
  double tpr_onset = 1.0;
  double tpr_t_end = 10.0;
};

// One injected signal in a declarative timeline.
struct EventSpec {
  std::string signal;  // a_u | a_y | a_c | f1 | f2
  std::string kind;    // bias | sine | exponential | zero-dynamics | covert
  double t0 = 0.0;
  Vector magnitude;    // bias level / sine amplitude
  double omega = 1.0;
  double phase = 0.0;
  Vector direction;    // exponential direction
  double rate = 0.1;
  double scale = 1.0;  // zero-dynamics / exponential scaling
};

struct TimelineSpec {
  double t_end = 30.0;
  std::vector<EventSpec> events;
};

struct ConfigDocument {
  PlantModel plant;
  AuxiliarySensorModel aux;
  Matrix d_ac;
  DesignOptions design;
  std::optional<DetectorBank> bank;     // pinned gains; absent: design first
  std::string scenario;                 // named built-in scenario, may be empty
  std::optional<TimelineSpec> timeline; // declarative custom timeline
  SimConfig sim;
  EvalConfig eval;

  Index n_c() const { return d_ac.cols(); }
};

/* ------------------------------ JSON helpers ------------------------------ */

namespace detail {

[[noreturn]] inline void config_error(const std::string& msg) {
  throw std::invalid_argument("config: " + msg);
}

inline void require_object(const Json& j, const std::string& where) {
  if (!j.is_object()) config_error("'" + where + "' must be an object");
}

// Rejects unknown keys and reports missing required ones by full path.
inline void check_keys(const Json& j, const std::string& where,
                       const std::vector<std::string>& required,
                       const std::vector<std::string>& optional) {
  require_object(j, where);
  for (const auto& item : j.items()) {
    const std::string& key = item.key();
    const bool known =
        std::find(required.begin(), required.end(), key) != required.end() ||
        std::find(optional.begin(), optional.end(), key) != optional.end();
    if (!known) config_error("unknown key '" + key + "' in '" + where + "'");
  }
  for (const std::string& key : required) {
    if (!j.contains(key)) config_error("missing field '" + where + "." + key + "'");
  }
}

inline double number_at(const Json& j, const std::string& where) {
  if (!j.is_number()) config_error("'" + where + "' must be a number");
  return j.get<double>();
}

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& j, Index rows, Index cols,
                               const std::string& field) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows) {
    config_error("'" + field + "' must be a " + std::to_string(rows) + "x" +
                 std::to_string(cols) + " matrix (nested row arrays)");
  }
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      config_error("'" + field + "' row " + std::to_string(i) + " must have " +
                   std::to_string(cols) + " entries");
    }
    for (Index k = 0; k < cols; ++k) {
      m(i, k) = number_at(row[static_cast<std::size_t>(k)],
                          field + "[" + std::to_string(i) + "]");
    }
  }
  return m;
}

inline Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Vector vector_from_json(const Json& j, Index size, const std::string& field) {
  if (!j.is_array() || (size >= 0 && static_cast<Index>(j.size()) != size)) {
    config_error("'" + field + "' must be an array of " + std::to_string(size) +
                 " numbers");
  }
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) {
    v(i) = number_at(j[static_cast<std::size_t>(i)], field);
  }
  return v;
}

inline Json poles_to_json(const std::vector<Complex>& poles) {
  Json out = Json::array();
  for (const Complex& z : poles) out.push_back(Json::array({z.real(), z.imag()}));
  return out;
}

inline std::vector<Complex> poles_from_json(const Json& j, const std::string& field) {
  if (!j.is_array()) config_error("'" + field + "' must be an array of [re, im] pairs");
  std::vector<Complex> out;
  for (const Json& item : j) {
    if (!item.is_array() || item.size() != 2) {
      config_error("'" + field + "' entries must be [re, im] pairs");
    }
    out.emplace_back(number_at(item[0], field), number_at(item[1], field));
  }
  return out;
}

}  // namespace detail

/* --------------------------- bank serialization ---------------------------- */

inline Json bank_to_json(const DetectorBank& bank) {
  Json j;
  for (Category cat : all_categories) {
    const SideFilter& side = bank.side(cat);
    const UIODetector& uio = bank.uio(cat);
    Json channel;
    channel["h"] = detail::matrix_to_json(uio.h);
    channel["k1"] = detail::matrix_to_json(uio.k1);
    channel["l"] = detail::matrix_to_json(uio.l);
    channel["f_p"] = detail::matrix_to_json(side.f_p);
    channel["t_p"] = detail::matrix_to_json(side.t_p);
    channel["k_p"] = detail::matrix_to_json(side.k_p);
    channel["l_p"] = detail::matrix_to_json(side.l_p);
    j[category_name(cat)] = std::move(channel);
  }
  return j;
}

// Rebuilds a bank from its independent gains; derived observer blocks are
// recomputed, so a loaded bank is bit-identical to the designed one.
inline DetectorBank bank_from_json(const AugmentedModel& aug, const Matrix& d_ac,
                                   const Json& j) {
  detail::check_keys(j, "bank", {"AA", "SA", "AF", "SF"}, {});
  const Index an = aug.state_dim();
  const Index n = aug.dims.n;
  const Index p = aug.dims.p;
  DetectorBank bank;
  bank.d_ac = d_ac;
  for (Category cat : all_categories) {
    const std::string where = std::string("bank.") + category_name(cat);
    const Json& channel = j.at(category_name(cat));
    detail::check_keys(channel, where,
                       {"h", "k1", "l", "f_p", "t_p", "k_p", "l_p"}, {});
    const Matrix h = detail::matrix_from_json(channel.at("h"), an, p, where + ".h");
    const Matrix k1 = detail::matrix_from_json(channel.at("k1"), an, p, where + ".k1");
    const Matrix l = detail::matrix_from_json(channel.at("l"), an, n, where + ".l");
    SideFilter side;
    side.category = cat;
    side.f_p = detail::matrix_from_json(channel.at("f_p"), n, n, where + ".f_p");
    side.t_p = detail::matrix_from_json(channel.at("t_p"), n, n, where + ".t_p");
    side.k_p = detail::matrix_from_json(channel.at("k_p"), n, p, where + ".k_p");
    side.l_p = detail::matrix_from_json(channel.at("l_p"), n, n, where + ".l_p");
    bank.side_filters[static_cast<int>(cat)] = side;
    bank.detectors[static_cast<int>(cat)] = assemble_uio(aug, cat, h, k1, l);
  }
  return bank;
}

/* -------------------------- document serialization ------------------------ */

inline Json serialize_config(const ConfigDocument& doc) {
  Json j;
  Json dims;
  dims["n"] = doc.plant.n();
  dims["m"] = doc.plant.m();
  dims["p"] = doc.plant.p();
  dims["q"] = doc.plant.q();
  dims["m_f"] = doc.plant.m_f();
  dims["p_f"] = doc.plant.p_f();
  dims["m_a"] = doc.plant.m_a();
  dims["p_a"] = doc.plant.p_a();
  dims["n_a"] = doc.aux.dim();
  dims["n_c"] = doc.n_c();
  j["dims"] = std::move(dims);

  Json plant;
  plant["a_s"] = detail::matrix_to_json(doc.plant.a_s);
  plant["b_s"] = detail::matrix_to_json(doc.plant.b_s);
  plant["c_s"] = detail::matrix_to_json(doc.plant.c_s);
  plant["n_s"] = detail::matrix_to_json(doc.plant.n_s);
  plant["l1"] = detail::matrix_to_json(doc.plant.l1);
  plant["l2"] = detail::matrix_to_json(doc.plant.l2);
  plant["s_a"] = detail::matrix_to_json(doc.plant.s_a);
  plant["d_a"] = detail::matrix_to_json(doc.plant.d_a);
  plant["q_cov"] = detail::matrix_to_json(doc.plant.q_cov);
  plant["r_cov"] = detail::matrix_to_json(doc.plant.r_cov);
  j["plant"] = std::move(plant);

  Json aux;
  aux["a_a"] = detail::matrix_to_json(doc.aux.a_a);
  aux["l2_a"] = detail::matrix_to_json(doc.aux.l2_a);
  aux["n_a"] = detail::matrix_to_json(doc.aux.n_a);
  aux["c_a"] = detail::matrix_to_json(doc.aux.c_a);
  j["aux"] = std::move(aux);

  j["d_ac"] = detail::matrix_to_json(doc.d_ac);

  Json design;
  design["seed"] = doc.design.seed;
  design["retries"] = doc.design.retries;
  design["outer_retries"] = doc.design.outer_retries;
  if (!doc.design.uio_poles.empty()) {
    design["poles"] = detail::poles_to_json(doc.design.uio_poles);
  }
  j["design"] = std::move(design);

  if (doc.bank) j["bank"] = bank_to_json(*doc.bank);
  if (!doc.scenario.empty()) j["scenario"] = doc.scenario;

  if (doc.timeline) {
    Json tl;
    tl["t_end"] = doc.timeline->t_end;
    Json events = Json::array();
    for (const EventSpec& ev : doc.timeline->events) {
      Json e;
      e["signal"] = ev.signal;
      e["kind"] = ev.kind;
      e["t0"] = ev.t0;
      if (ev.kind == "bias") {
        e["magnitude"] = detail::vector_to_json(ev.magnitude);
      } else if (ev.kind == "sine") {
        e["magnitude"] = detail::vector_to_json(ev.magnitude);
        e["omega"] = ev.omega;
        e["phase"] = ev.phase;
      } else if (ev.kind == "exponential") {
        e["direction"] = detail::vector_to_json(ev.direction);
        e["rate"] = ev.rate;
        e["scale"] = ev.scale;
      } else if (ev.kind == "zero-dynamics") {
        e["scale"] = ev.scale;
      }
      events.push_back(std::move(e));
    }
    tl["events"] = std::move(events);
    j["timeline"] = std::move(tl);
  }

  Json sim;
  sim["dt"] = doc.sim.dt;
  sim["t_end"] = doc.sim.t_end;
  sim["seed"] = doc.sim.seed;
  sim["noise"] = doc.sim.noise_on;
  sim["integrator"] =
      doc.sim.integrator == SimConfig::Integrator::zoh ? "zoh" : "rk4";
  if (doc.sim.x0) sim["x0"] = detail::vector_to_json(*doc.sim.x0);
  if (doc.sim.filter_x0) sim["filter_x0"] = detail::vector_to_json(*doc.sim.filter_x0);
  j["sim"] = std::move(sim);

  Json eval;
  eval["margin"] = doc.eval.margin;
  eval["floor"] = doc.eval.floor;
  eval["calibration_runs"] = doc.eval.calibration_runs;
  eval["debounce"] = doc.eval.debounce;
  eval["tpr_onset"] = doc.eval.tpr_onset;
  eval["tpr_t_end"] = doc.eval.tpr_t_end;
  j["eval"] = std::move(eval);
  return j;
}

inline ConfigDocument parse_config(const Json& j) {
  detail::check_keys(j, "(top level)", {"dims", "plant", "aux", "d_ac"},
                     {"design", "bank", "scenario", "timeline", "sim", "eval"});

  const Json& dims = j.at("dims");
  detail::check_keys(dims, "dims",
                     {"n", "m", "p", "q", "m_f", "p_f", "m_a", "p_a", "n_a", "n_c"}, {});
  auto dim_of = [&](const char* key) {
    const Json& v = dims.at(key);
    if (!v.is_number_integer() || v.get<long>() < 0) {
      detail::config_error(std::string("'dims.") + key +
                           "' must be a non-negative integer");
    }
    return static_cast<Index>(v.get<long>());
  };
  const Index n = dim_of("n"), m = dim_of("m"), p = dim_of("p"), q = dim_of("q");
  const Index m_f = dim_of("m_f"), p_f = dim_of("p_f");
  const Index m_a = dim_of("m_a"), p_a = dim_of("p_a");
  const Index n_a = dim_of("n_a"), n_c = dim_of("n_c");

  ConfigDocument doc;
  const Json& plant = j.at("plant");
  detail::check_keys(plant, "plant",
                     {"a_s", "b_s", "c_s", "n_s", "l1", "l2", "s_a", "d_a",
                      "q_cov", "r_cov"},
                     {});
  doc.plant.a_s = detail::matrix_from_json(plant.at("a_s"), n, n, "plant.a_s");
  doc.plant.b_s = detail::matrix_from_json(plant.at("b_s"), n, m, "plant.b_s");
  doc.plant.c_s = detail::matrix_from_json(plant.at("c_s"), p, n, "plant.c_s");
  doc.plant.n_s = detail::matrix_from_json(plant.at("n_s"), n, q, "plant.n_s");
  doc.plant.l1 = detail::matrix_from_json(plant.at("l1"), n, m_f, "plant.l1");
  doc.plant.l2 = detail::matrix_from_json(plant.at("l2"), p, p_f, "plant.l2");
  doc.plant.s_a = detail::matrix_from_json(plant.at("s_a"), m, m_a, "plant.s_a");
  doc.plant.d_a = detail::matrix_from_json(plant.at("d_a"), p, p_a, "plant.d_a");
  doc.plant.q_cov = detail::matrix_from_json(plant.at("q_cov"), q, q, "plant.q_cov");
  doc.plant.r_cov = detail::matrix_from_json(plant.at("r_cov"), p, p, "plant.r_cov");

  const Json& aux = j.at("aux");
  detail::check_keys(aux, "aux", {"a_a", "l2_a", "n_a", "c_a"}, {});
  doc.aux.a_a = detail::matrix_from_json(aux.at("a_a"), n_a, n_a, "aux.a_a");
  doc.aux.l2_a = detail::matrix_from_json(aux.at("l2_a"), n_a, p_f, "aux.l2_a");
  doc.aux.n_a = detail::matrix_from_json(aux.at("n_a"), n_a, p, "aux.n_a");
  doc.aux.c_a = detail::matrix_from_json(aux.at("c_a"), p, n_a, "aux.c_a");

  doc.d_ac = detail::matrix_from_json(j.at("d_ac"), n, n_c, "d_ac");

  if (j.contains("design")) {
    const Json& design = j.at("design");
    detail::check_keys(design, "design", {},
                       {"seed", "retries", "outer_retries", "poles"});
    if (design.contains("seed")) doc.design.seed = design.at("seed").get<std::uint64_t>();
    if (design.contains("retries")) doc.design.retries = design.at("retries").get<int>();
    if (design.contains("outer_retries")) {
      doc.design.outer_retries = design.at("outer_retries").get<int>();
    }
    if (design.contains("poles")) {
      doc.design.uio_poles = detail::poles_from_json(design.at("poles"), "design.poles");
    }
  }

  if (j.contains("scenario")) {
    const Json& sc = j.at("scenario");
    if (!sc.is_string()) detail::config_error("'scenario' must be a string");
    doc.scenario = sc.get<std::string>();
  }

  if (j.contains("timeline")) {
    const Json& tl = j.at("timeline");
    detail::check_keys(tl, "timeline", {"events"}, {"t_end"});
    TimelineSpec spec;
    if (tl.contains("t_end")) spec.t_end = detail::number_at(tl.at("t_end"), "timeline.t_end");
    const Json& events = tl.at("events");
    if (!events.is_array()) detail::config_error("'timeline.events' must be an array");
    for (std::size_t i = 0; i < events.size(); ++i) {
      const std::string where = "timeline.events[" + std::to_string(i) + "]";
      const Json& e = events[i];
      detail::check_keys(e, where, {"signal", "kind"},
                         {"t0", "magnitude", "omega", "phase", "direction",
                          "rate", "scale"});
      EventSpec ev;
      ev.signal = e.at("signal").get<std::string>();
      ev.kind = e.at("kind").get<std::string>();
      if (e.contains("t0")) ev.t0 = detail::number_at(e.at("t0"), where + ".t0");
      if (e.contains("magnitude")) {
        ev.magnitude = detail::vector_from_json(e.at("magnitude"), -1, where + ".magnitude");
      }
      if (e.contains("omega")) ev.omega = detail::number_at(e.at("omega"), where + ".omega");
      if (e.contains("phase")) ev.phase = detail::number_at(e.at("phase"), where + ".phase");
      if (e.contains("direction")) {
        ev.direction = detail::vector_from_json(e.at("direction"), -1, where + ".direction");
      }
      if (e.contains("rate")) ev.rate = detail::number_at(e.at("rate"), where + ".rate");
      if (e.contains("scale")) ev.scale = detail::number_at(e.at("scale"), where + ".scale");
      spec.events.push_back(std::move(ev));
    }
    doc.timeline = std::move(spec);
  }

  if (j.contains("sim")) {
    const Json& sim = j.at("sim");
    detail::check_keys(sim, "sim", {},
                       {"dt", "t_end", "seed", "noise", "integrator", "x0", "filter_x0"});
    if (sim.contains("dt")) doc.sim.dt = detail::number_at(sim.at("dt"), "sim.dt");
    if (sim.contains("t_end")) doc.sim.t_end = detail::number_at(sim.at("t_end"), "sim.t_end");
    if (sim.contains("seed")) doc.sim.seed = sim.at("seed").get<std::uint64_t>();
    if (sim.contains("noise")) {
      if (!sim.at("noise").is_boolean()) detail::config_error("'sim.noise' must be a boolean");
      doc.sim.noise_on = sim.at("noise").get<bool>();
    }
    if (sim.contains("integrator")) {
      const std::string kind = sim.at("integrator").get<std::string>();
      if (kind == "zoh") {
        doc.sim.integrator = SimConfig::Integrator::zoh;
      } else if (kind == "rk4") {
        doc.sim.integrator = SimConfig::Integrator::rk4;
      } else {
        detail::config_error("'sim.integrator' must be \"zoh\" or \"rk4\"");
      }
    }
    if (sim.contains("x0")) {
      doc.sim.x0 = detail::vector_from_json(sim.at("x0"), n + n_a, "sim.x0");
    }
    if (sim.contains("filter_x0")) {
      doc.sim.filter_x0 = detail::vector_from_json(
          sim.at("filter_x0"), 8 * n + 4 * (n + n_a), "sim.filter_x0");
    }
  }

  if (j.contains("eval")) {
    const Json& ev = j.at("eval");
    detail::check_keys(ev, "eval", {},
                       {"margin", "floor", "calibration_runs", "debounce",
                        "tpr_onset", "tpr_t_end"});
    if (ev.contains("margin")) doc.eval.margin = detail::number_at(ev.at("margin"), "eval.margin");
    if (ev.contains("floor")) doc.eval.floor = detail::number_at(ev.at("floor"), "eval.floor");
    if (ev.contains("calibration_runs")) {
      doc.eval.calibration_runs = ev.at("calibration_runs").get<int>();
    }
    if (ev.contains("debounce")) doc.eval.debounce = ev.at("debounce").get<int>();
    if (ev.contains("tpr_onset")) {
      doc.eval.tpr_onset = detail::number_at(ev.at("tpr_onset"), "eval.tpr_onset");
    }
    if (ev.contains("tpr_t_end")) {
      doc.eval.tpr_t_end = detail::number_at(ev.at("tpr_t_end"), "eval.tpr_t_end");
    }
  }

  if (j.contains("bank")) {
    const AugmentedModel aug = build_augmented(doc.plant, doc.aux);
    doc.bank = bank_from_json(aug, doc.d_ac, j.at("bank"));
  }
  return doc;
}

/* --------------------------- timeline materialization ---------------------- */

// Turns declarative events into signal generators bound to the model.
inline ScenarioTimeline timeline_from_spec(const AugmentedModel& aug, Index n_c,
                                           const TimelineSpec& spec, double dt) {
  ScenarioTimeline tl = healthy_timeline(aug, n_c, spec.t_end);
  tl.name = "custom";
  auto signal_dim = [&](const std::string& signal) -> Index {
    if (signal == "a_u") return aug.dims.m_a;
    if (signal == "a_y") return aug.dims.p_a;
    if (signal == "a_c") return n_c;
    if (signal == "f1") return aug.dims.m_f;
    if (signal == "f2") return aug.dims.p_f;
    detail::config_error("unknown timeline signal '" + signal +
                         "' (expected a_u, a_y, a_c, f1, or f2)");
  };
  auto slot = [&](const std::string& signal) -> SignalGenerator& {
    if (signal == "a_u") return tl.a_u;
    if (signal == "a_y") return tl.a_y;
    if (signal == "a_c") return tl.a_c;
    if (signal == "f1") return tl.f1;
    if (signal == "f2") return tl.f2;
    detail::config_error("unknown timeline signal '" + signal + "'");
  };

  std::set<std::string> seen;
  const EventSpec* covert_event = nullptr;
  for (const EventSpec& ev : spec.events) {
    const Index dim = signal_dim(ev.signal);
    if (!seen.insert(ev.signal).second) {
      detail::config_error("duplicate timeline event for signal '" + ev.signal + "'");
    }
    if (ev.kind == "covert") {
      if (ev.signal != "a_y") {
        detail::config_error("covert events must target signal 'a_y'");
      }
      covert_event = &ev;
      continue;
    }
    if (ev.kind == "bias") {
      if (ev.magnitude.size() != dim) {
        detail::config_error("bias event on '" + ev.signal + "' needs a magnitude of length " +
                             std::to_string(dim));
      }
      slot(ev.signal) = constant_signal(ev.magnitude, ev.t0);
    } else if (ev.kind == "sine") {
      if (ev.magnitude.size() != dim) {
        detail::config_error("sine event on '" + ev.signal + "' needs a magnitude of length " +
                             std::to_string(dim));
      }
      slot(ev.signal) = sine_signal(ev.magnitude, ev.omega, ev.phase, ev.t0);
    } else if (ev.kind == "exponential") {
      if (ev.direction.size() != dim) {
        detail::config_error("exponential event on '" + ev.signal +
                             "' needs a direction of length " + std::to_string(dim));
      }
      SignalGenerator g;
      g.kind = SignalGenerator::Kind::exponential;
      g.t0 = ev.t0;
      g.dim = dim;
      g.magnitude = ev.scale * ev.direction;
      g.rate = ev.rate;
      slot(ev.signal) = g;
    } else if (ev.kind == "zero-dynamics") {
      if (ev.signal != "a_u") {
        detail::config_error("zero-dynamics events must target signal 'a_u'");
      }
      slot(ev.signal) = zero_dynamics_attack(aug.plant, ev.scale, ev.t0);
    } else {
      detail::config_error("unknown event kind '" + ev.kind +
                           "' (expected bias, sine, exponential, zero-dynamics, or covert)");
    }
  }
  if (covert_event) {
    if (tl.a_u.kind == SignalGenerator::Kind::none) {
      detail::config_error("covert a_y event requires an a_u event to mask");
    }
    tl.a_y = covert_attack(aug, tl.a_u, dt);
  }
  return tl;
}

/* ------------------------------ preset loading ----------------------------- */

inline ConfigDocument benchmark_config() {
  ConfigDocument doc;
  doc.plant = benchmark_plant();
  doc.aux = benchmark_aux();
  doc.d_ac = benchmark_d_ac();
  doc.bank = benchmark_bank(build_augmented(doc.plant, doc.aux));
  doc.sim.t_end = 30.0;
  return doc;
}

inline ConfigDocument config_from_preset(const std::string& name) {
  if (name == benchmark_preset_name) return benchmark_config();
  detail::config_error("unknown preset '" + name + "' (available: " +
                       std::string(benchmark_preset_name) + ")");
}

/* ----------------------------- report documents ---------------------------- */

inline Json thresholds_to_json(const ThresholdSet& th) {
  Json j;
  Json raw, effective, degenerate;
  for (Category cat : all_categories) {
    const int c = static_cast<int>(cat);
    raw[category_name(cat)] = th.raw[c];
    effective[category_name(cat)] = th.effective(cat);
    degenerate[category_name(cat)] = th.degenerate[c];
  }
  j["eta_raw"] = std::move(raw);
  j["eta"] = std::move(effective);
  j["degenerate"] = std::move(degenerate);
  j["floor"] = th.floor;
  j["margin"] = th.margin;
  j["n_runs"] = th.n_runs;
  j["base_seed"] = th.base_seed;
  return j;
}

inline ThresholdSet thresholds_from_json(const Json& j) {
  detail::check_keys(j, "thresholds",
                     {"eta_raw", "eta", "degenerate", "floor", "margin",
                      "n_runs", "base_seed"},
                     {});
  ThresholdSet th;
  th.floor = detail::number_at(j.at("floor"), "thresholds.floor");
  th.margin = detail::number_at(j.at("margin"), "thresholds.margin");
  th.n_runs = j.at("n_runs").get<int>();
  th.base_seed = j.at("base_seed").get<std::uint64_t>();
  for (Category cat : all_categories) {
    const int c = static_cast<int>(cat);
    th.raw[c] = detail::number_at(j.at("eta_raw").at(category_name(cat)),
                                  "thresholds.eta_raw");
    th.degenerate[c] = j.at("degenerate").at(category_name(cat)).get<bool>();
  }
  return th;
}

inline Json detection_to_json(const DetectionReport& report) {
  Json j;
  Json verdict = Json::array();
  for (Category cat : report.detected_categories()) verdict.push_back(category_name(cat));
  j["verdict"] = std::move(verdict);
  Json channels;
  for (Category cat : all_categories) {
    const int c = static_cast<int>(cat);
    Json ch;
    ch["detected"] = report.detected[c];
    if (report.detected[c]) {
      ch["first_crossing"] = report.first_crossing[c];
    } else {
      ch["first_crossing"] = nullptr;
    }
    ch["max_res_norm"] = report.max_res_norm[c];
    ch["threshold"] = report.threshold_used[c];
    channels[category_name(cat)] = std::move(ch);
  }
  j["channels"] = std::move(channels);
  return j;
}

inline Json conditions_to_json(const ConditionReport& report) {
  Json j;
  j["ok"] = report.ok();
  Json checks = Json::array();
  for (const ConditionCheck& check : report.checks) {
    Json c;
    c["id"] = check.id;
    c["description"] = check.description;
    c["pass"] = check.pass;
    c["residual"] = check.residual;
    if (!check.zeros.empty()) c["zeros"] = detail::poles_to_json(check.zeros);
    checks.push_back(std::move(c));
  }
  j["conditions"] = std::move(checks);
  return j;
}

inline Json tpr_to_json(const std::array<TprTable, 4>& tables) {
  Json out = Json::array();
  for (const TprTable& table : tables) {
    Json t;
    t["table"] = category_name(table.target);
    Json rows = Json::array();
    for (const TprRow& row : table.rows) {
      Json r;
      r["combo"] = row.label;
      r["tp"] = row.true_positives;
      r["fn"] = row.false_negatives();
      r["tpr"] = row.tpr;
      rows.push_back(std::move(r));
    }
    t["rows"] = std::move(rows);
    out.push_back(std::move(t));
  }
  Json j;
  j["tables"] = std::move(out);
  return j;
}

inline std::string tpr_to_csv(const std::array<TprTable, 4>& tables) {
  std::string out = "table,combo,tp,fn,tpr\n";
  char line[160];
  for (const TprTable& table : tables) {
    for (const TprRow& row : table.rows) {
      std::snprintf(line, sizeof(line), "%s,%s,%d,%d,%.6f\n",
                    category_name(table.target), row.label.c_str(),
                    row.true_positives, row.false_negatives(), row.tpr);
      out += line;
    }
  }
  return out;
}

}  // namespace cafdi
