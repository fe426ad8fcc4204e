#pragma once

#include <cafdi/design.hpp>
#include <cafdi/threat.hpp>

#include <string>
#include <vector>

namespace cafdi {

// Built-in benchmark model: a four-state plant with two actuators, two primary
// sensors, and a three-state auxiliary sensor whose output channel cannot be
// reached by the actuator or sensor attacks. Preset id: "paper-siv".
inline constexpr const char* benchmark_preset_name = "paper-siv";

inline PlantModel benchmark_plant() {
  PlantModel plant;
  plant.a_s = Matrix(4, 4);
  plant.a_s << -1, 0, 1, 0,
                0, -3, 0, 1,
                0, 0, -2, 0,
                0, 0, 0, -2;
  plant.b_s = Matrix(4, 2);
  plant.b_s << -2, -1,
                0, -2,
                0, -3,
               -4, 0;
  plant.c_s = Matrix(2, 4);
  plant.c_s << 0.2, 0, 0, 0,
               0, 0.2, 0, 0;
  plant.n_s = Matrix(4, 1);
  plant.n_s << 1, 1, 1, 1;
  plant.l1 = Matrix(4, 1);
  plant.l1 << -2, 0, 0, -4;
  plant.l2 = Matrix(2, 1);
  plant.l2 << 1, 1;
  plant.s_a = Matrix::Identity(2, 2);
  plant.d_a = 0.2 * Matrix::Identity(2, 2);
  plant.q_cov = Matrix(1, 1);
  plant.q_cov << 0.01;
  plant.r_cov = 0.02 * Matrix::Identity(2, 2);
  return plant;
}

inline AuxiliarySensorModel benchmark_aux() {
  AuxiliarySensorModel aux;
  aux.a_a = Matrix(3, 3);
  aux.a_a << -1, 0, 0,
              0, -2, 0,
              0, 0, -3;
  aux.l2_a = Matrix(3, 1);
  aux.l2_a << 1, 0, 0;
  aux.n_a = Matrix(3, 2);
  aux.n_a << 0, 0,
             1, 0,
             0, 1;
  aux.c_a = Matrix(2, 3);
  aux.c_a << 1, 1, 1,
             1, 1, 1;
  return aux;
}

// Which components of the cross-filter channel the communication link may
// alter: the first two, matching the two plant measurements.
inline Matrix benchmark_d_ac() {
  Matrix d_ac = Matrix::Zero(4, 4);
  d_ac(0, 0) = 1.0;
  d_ac(1, 1) = 1.0;
  return d_ac;
}

inline AugmentedModel benchmark_model() {
  return build_augmented(benchmark_plant(), benchmark_aux());
}

namespace detail {

inline Matrix benchmark_side_f_p() {
  Matrix f_p = Matrix::Zero(4, 4);
  f_p.diagonal() << -3, -2, -4, -5;
  return f_p;
}

inline Matrix benchmark_side_l_p() {
  Matrix l_p(4, 4);
  l_p << 0, 0, 4, -1,
         0, 0, 3, -2,
         0, 0, 2, -3,
         0, 0, 5, -1;
  return l_p;
}

inline Matrix benchmark_t_p_aa() {
  Matrix t_p(4, 4);
  t_p << 1, 1, 1, 1,
         1, 2, 3, 1,
         2, 0, 0, -4,
         0, 1, 0, 0;
  return t_p;
}

// Rows of this map annihilate the actuator-attack gain: t_p * b_s == 0.
inline Matrix benchmark_t_p_sa() {
  Matrix t_p(4, 4);
  t_p << -2, 1, 0, 1,
         -2, -2, 2, 1,
         -4, -1, 2, 2,
          0, 3, -2, 0;
  return t_p;
}

inline Matrix benchmark_k_p_sa() {
  Matrix k_p = Matrix::Zero(4, 2);
  k_p(2, 0) = 5.0;
  k_p(3, 1) = 5.0;
  return k_p;
}

inline Matrix benchmark_h_attack() {
  Matrix h(7, 2);
  h << 5, -5,
       0, 0,
       0, 0,
       10, -10,
       0, 1,
       0, 0,
       0, 0;
  return h;
}

inline Matrix benchmark_k1_attack() {
  Matrix k1(7, 2);
  k1 << 6, -2,
       -3, 1,
        6, 2,
        3, 1,
        3, 1,
        6, 2,
        3, 1;
  return k1;
}

// Cross-filter injection into the full observer: the plant rows reuse the
// side-filter gain, the auxiliary rows reuse its last three rows.
inline Matrix benchmark_l_attack() {
  const Matrix l_p = benchmark_side_l_p();
  Matrix l(7, 4);
  l.topRows(4) = l_p;
  l.bottomRows(3) = l_p.bottomRows(3);
  return l;
}

}  // namespace detail

// Detector bank with the attack channels pinned to hand-picked gains and the
// fault channels produced by the deterministic observer design. All gains are
// reproducible from source alone.
inline DetectorBank benchmark_bank(const AugmentedModel& aug) {
  DetectorBank bank;
  bank.d_ac = benchmark_d_ac();

  const Matrix h_attack = detail::benchmark_h_attack();
  const Matrix k1_attack = detail::benchmark_k1_attack();
  const Matrix l_attack = detail::benchmark_l_attack();

  SideFilter aa_side;
  aa_side.category = Category::AA;
  aa_side.f_p = detail::benchmark_side_f_p();
  aa_side.t_p = detail::benchmark_t_p_aa();
  aa_side.k_p = Matrix::Zero(4, 2);
  aa_side.l_p = detail::benchmark_side_l_p();

  SideFilter sa_side;
  sa_side.category = Category::SA;
  sa_side.f_p = detail::benchmark_side_f_p();
  sa_side.t_p = detail::benchmark_t_p_sa();
  sa_side.k_p = detail::benchmark_k_p_sa();
  sa_side.l_p = detail::benchmark_side_l_p();

  bank.side_filters[static_cast<int>(Category::AA)] = aa_side;
  bank.side_filters[static_cast<int>(Category::SA)] = sa_side;
  // The fault channels run without cross-filter feedback; their side filter
  // is a copy kept only so every channel carries the same interface.
  SideFilter af_side = aa_side;
  af_side.category = Category::AF;
  SideFilter sf_side = aa_side;
  sf_side.category = Category::SF;
  bank.side_filters[static_cast<int>(Category::AF)] = af_side;
  bank.side_filters[static_cast<int>(Category::SF)] = sf_side;

  bank.detectors[static_cast<int>(Category::AA)] =
      assemble_uio(aug, Category::AA, h_attack, k1_attack, l_attack);
  bank.detectors[static_cast<int>(Category::SA)] =
      assemble_uio(aug, Category::SA, h_attack, k1_attack, l_attack);

  const Index an = aug.state_dim();
  const Index n = aug.dims.n;
  const std::vector<Complex> poles = default_observer_poles(an);
  const Matrix eye = Matrix::Identity(an, an);
  const Matrix zero_l = Matrix::Zero(an, n);
  {
    const Matrix h_af = solve_decoupling_gain(aug, {aug.f2});
    const Matrix k1_af = place_observer_gain((eye - h_af * aug.c) * aug.a, aug.c, poles);
    bank.detectors[static_cast<int>(Category::AF)] =
        assemble_uio(aug, Category::AF, h_af, k1_af, zero_l);
  }
  {
    const Matrix h_sf = solve_decoupling_gain(aug, {aug.f1});
    const Matrix k1_sf = place_observer_gain((eye - h_sf * aug.c) * aug.a, aug.c, poles);
    bank.detectors[static_cast<int>(Category::SF)] =
        assemble_uio(aug, Category::SF, h_sf, k1_sf, zero_l);
  }
  return bank;
}

/* -------------------------------- scenarios ------------------------------- */

// A runnable attack/fault scenario: the timeline plus the bank it runs
// against (degraded scenarios swap in a weakened bank).
struct Scenario {
  std::string name;
  ScenarioTimeline timeline;
  DetectorBank bank;
};

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {
      "zero-dynamics", "covert", "faults", "simultaneous", "degraded-c9"};
  return names;
}

// Builds one of the named scenarios against the given model and bank.
// dt must match the simulation step: the covert generator integrates its own
// plant copy on that grid.
inline Scenario build_scenario(const std::string& name,
                               const AugmentedModel& aug,
                               const DetectorBank& bank, double dt) {
  Scenario sc;
  sc.name = name;
  sc.bank = bank;
  const Index n_c = bank.d_ac.cols();

  if (name == "zero-dynamics") {
    sc.timeline = healthy_timeline(aug, n_c, 20.0);
    sc.timeline.name = name;
    sc.timeline.a_u = zero_dynamics_attack(aug.plant, 1.0, 0.0);
    return sc;
  }
  if (name == "covert") {
    sc.timeline = healthy_timeline(aug, n_c, 20.0);
    sc.timeline.name = name;
    Vector level(2);
    level << 2, 1;
    sc.timeline.a_u = constant_signal(level, 10.0);
    sc.timeline.a_y = covert_attack(aug, sc.timeline.a_u, dt);
    return sc;
  }
  if (name == "faults") {
    sc.timeline = healthy_timeline(aug, n_c, 15.0);
    sc.timeline.name = name;
    sc.timeline.f1 = bias_fault(aug.dims.m_f, 40.0, 5.0);
    sc.timeline.f2 = bias_fault(aug.dims.p_f, 20.0, 10.0);
    return sc;
  }
  if (name == "simultaneous") {
    sc.timeline = healthy_timeline(aug, n_c, 15.0);
    sc.timeline.name = name;
    Vector level(2);
    level << 2, 1;
    sc.timeline.a_u = constant_signal(level, 0.0);
    sc.timeline.a_y = covert_attack(aug, sc.timeline.a_u, dt);
    sc.timeline.f1 = bias_fault(aug.dims.m_f, 40.0, 5.0);
    sc.timeline.f2 = bias_fault(aug.dims.p_f, 20.0, 10.0);
    return sc;
  }
  if (name == "degraded-c9") {
    sc.bank = degrade_condition9(bank, aug);
    sc.timeline = healthy_timeline(aug, n_c, 30.0);
    sc.timeline.name = name;
    const SideFilter& side = sc.bank.side_filters[static_cast<int>(Category::AA)];
    const UIODetector& uio = sc.bank.detectors[static_cast<int>(Category::AA)];
    sc.timeline.a_u = undetectable_controllable_attack(side, uio.l,
                                                       aug.plant.b_a_s(), 1.0, 0.0);
    return sc;
  }
  std::string valid;
  for (const std::string& n : scenario_names()) {
    if (!valid.empty()) valid += ", ";
    valid += n;
  }
  throw std::invalid_argument("unknown scenario '" + name +
                              "' (expected one of: " + valid + ")");
}

}  // namespace cafdi
