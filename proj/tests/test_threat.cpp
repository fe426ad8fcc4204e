#include <catch2/catch_amalgamated.hpp>

#include <cafdi/sim.hpp>
#include <cafdi/threat.hpp>

#include "testbench.hpp"

using bench::Matrix;
using bench::Vector;
using bench::max_abs_diff;
using cafdi::AttackError;
using cafdi::Category;
using cafdi::Index;
using cafdi::SignalGenerator;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::MessageMatches;

namespace {

// Largest real root of the benchmark plant's zero polynomial s^2 + 3s - 1.
constexpr double kUnstableZero = 0.302775637731995;

cafdi::SimConfig quiet_config(double t_end) {
  cafdi::SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = t_end;
  cfg.noise_on = false;
  return cfg;
}

}  // namespace

TEST_CASE("stateless generators are zero before onset and follow their waveform after") {
  const Vector level = Vector{{2.0, -1.0}};

  const SignalGenerator zero = cafdi::zero_signal(3);
  REQUIRE(zero.dim == 3);
  REQUIRE(zero.value(0.0).norm() == 0.0);
  REQUIRE(zero.value(100.0).norm() == 0.0);

  const SignalGenerator bias = cafdi::constant_signal(level, 5.0);
  REQUIRE(bias.value(4.999).norm() == 0.0);
  REQUIRE(max_abs_diff(bias.value(5.0), level) == 0.0);
  REQUIRE(max_abs_diff(bias.value(50.0), level) == 0.0);

  const SignalGenerator sine = cafdi::sine_signal(level, 2.0, 0.0, 1.0);
  REQUIRE(sine.value(0.999).norm() == 0.0);
  REQUIRE(sine.value(1.0).norm() == 0.0);
  // Quarter period after onset the sine reaches its amplitude.
  const double quarter = 1.0 + M_PI / 4.0;
  REQUIRE(max_abs_diff(sine.value(quarter), level) < 1e-12);

  const SignalGenerator fault = cafdi::bias_fault(1, 40.0, 5.0);
  REQUIRE(fault.dim == 1);
  REQUIRE(fault.value(4.999).norm() == 0.0);
  REQUIRE(fault.value(6.0)(0) == 40.0);
  REQUIRE_THROWS_AS(cafdi::bias_fault(1, std::nan(""), 0.0), std::invalid_argument);

  SignalGenerator combo;
  combo.kind = SignalGenerator::Kind::waveform_sum;
  combo.t0 = 2.0;
  combo.dim = 2;
  combo.magnitude = level;
  combo.state_direction = Vector{{0.5, 0.5}};
  combo.omega = 2.0;
  REQUIRE(combo.value(1.999).norm() == 0.0);
  const Vector expect = level + Vector{{0.5, 0.5}} * std::sin(2.0 * (3.0 - 2.0));
  REQUIRE(max_abs_diff(combo.value(3.0), expect) < 1e-12);
}

TEST_CASE("zero-dynamics attack rides the unstable plant zero") {
  const cafdi::PlantModel plant = bench::plant();
  const SignalGenerator g = cafdi::zero_dynamics_attack(plant, 1.0, 2.0);

  REQUIRE(g.kind == SignalGenerator::Kind::exponential);
  REQUIRE(g.dim == 2);
  REQUIRE(g.rate == Catch::Approx(kUnstableZero).margin(1e-9));
  REQUIRE(g.zero_location == g.rate);

  // s_a = I, so the injected direction is the zero's input direction itself,
  // normalized to unit length by construction.
  REQUIRE(g.magnitude.norm() == Catch::Approx(1.0).margin(1e-12));

  // (x0, u0) must annihilate the Rosenbrock pencil at the zero.
  const Vector x0 = g.state_direction;
  const Vector u0 = g.magnitude;
  const Vector top = (g.rate * Matrix::Identity(4, 4) - plant.a_s) * x0 - plant.b_s * u0;
  const Vector bottom = plant.c_s * x0;
  REQUIRE(top.norm() < 1e-8);
  REQUIRE(bottom.norm() < 1e-8);

  REQUIRE(g.value(1.999).norm() == 0.0);
  const Vector at_onset = g.value(2.0);
  REQUIRE(max_abs_diff(at_onset, g.magnitude) < 1e-12);
  const Vector later = g.value(3.0);
  REQUIRE(max_abs_diff(later, g.magnitude * std::exp(g.rate)) < 1e-12);

  // The scale multiplies the direction only.
  const SignalGenerator g3 = cafdi::zero_dynamics_attack(plant, 3.0, 2.0);
  REQUIRE(max_abs_diff(g3.magnitude, 3.0 * g.magnitude) < 1e-12);
  REQUIRE(g3.rate == g.rate);
}

TEST_CASE("zero-dynamics attack refuses a minimum-phase plant") {
  cafdi::PlantModel plant;
  plant.a_s = -Matrix::Identity(2, 2);
  plant.b_s = Matrix::Identity(2, 2);
  plant.c_s = Matrix::Identity(2, 2);
  plant.s_a = Matrix::Identity(2, 2);
  REQUIRE_THROWS_MATCHES(
      cafdi::zero_dynamics_attack(plant, 1.0, 0.0), AttackError,
      MessageMatches(ContainsSubstring("needs a real non-minimum-phase invariant zero")));
}

TEST_CASE("covert attack cancels its linked actuator attack at the operator console") {
  const cafdi::AugmentedModel aug = bench::augmented();
  const cafdi::DetectorBank bank = bench::pinned_bank(aug);
  const cafdi::SimConfig cfg = quiet_config(10.0);

  cafdi::ScenarioTimeline covert = cafdi::healthy_timeline(aug, bank.d_ac.cols(), cfg.t_end);
  covert.a_u = cafdi::constant_signal(Vector{{2.0, 1.0}}, 1.0);
  covert.a_y = cafdi::covert_attack(aug, covert.a_u, cfg.dt);
  REQUIRE(covert.a_y.t0 == covert.a_u.t0);

  const cafdi::ScenarioTimeline healthy = cafdi::healthy_timeline(aug, bank.d_ac.cols(), cfg.t_end);

  const cafdi::SimulationTrace run_covert = cafdi::simulate(aug, bank, covert, cfg);
  const cafdi::SimulationTrace run_healthy = cafdi::simulate(aug, bank, healthy, cfg);
  REQUIRE_FALSE(run_covert.truncated);

  // The console output y* is indistinguishable from the healthy run while the
  // physical output y_p drifts visibly under the actuator attack.
  const double gap_star = (run_covert.y_star - run_healthy.y_star).cwiseAbs().maxCoeff();
  const double gap_plant = (run_covert.y_p - run_healthy.y_p).cwiseAbs().maxCoeff();
  REQUIRE(gap_star < 1e-8);
  REQUIRE(gap_plant > 0.5);
  REQUIRE(gap_plant > 1e6 * gap_star);
}

TEST_CASE("covert attack rejects mismatched dimensions and a singular sensor signature") {
  cafdi::AugmentedModel aug = bench::augmented();

  SignalGenerator narrow = cafdi::constant_signal(Vector{{1.0}}, 0.0);
  REQUIRE_THROWS_MATCHES(cafdi::covert_attack(aug, narrow, 1e-3), std::invalid_argument,
                         MessageMatches(ContainsSubstring("linked attack dimension mismatch")));

  aug.plant.d_a(1, 1) = 0.0;
  const SignalGenerator a_u = cafdi::constant_signal(Vector{{2.0, 1.0}}, 0.0);
  REQUIRE_THROWS_MATCHES(cafdi::covert_attack(aug, a_u, 1e-3), AttackError,
                         MessageMatches(ContainsSubstring("not left invertible")));
}

TEST_CASE("replay value replays the recorded window through the signature inverse") {
  const cafdi::PlantModel plant = bench::plant();

  cafdi::OutputRecording rec;
  rec.t0 = 0.0;
  rec.dt = 0.1;
  rec.y = Matrix(2, 21);
  for (Index j = 0; j < 21; ++j) {
    rec.y(0, j) = double(j);
    rec.y(1, j) = 10.0 + double(j);
  }
  REQUIRE(rec.t_end() == Catch::Approx(2.0));

  const SignalGenerator a_u = cafdi::constant_signal(Vector{{2.0, 1.0}}, 1.0);
  const auto [a_y, passthrough] = cafdi::replay_attack(plant, rec, 1.0, 2.0, a_u);
  REQUIRE(a_y.kind == SignalGenerator::Kind::replay);
  REQUIRE(passthrough.kind == a_u.kind);
  REQUIRE(max_abs_diff(passthrough.magnitude, a_u.magnitude) == 0.0);

  // d_a = 0.2 I, so the injection maps through 5 I. At t = 1.5 the window
  // offset is the window length 1, landing on recorded sample 5.
  const Vector y_now = Vector{{1.0, 2.0}};
  const Vector v = a_y.replay_value(1.5, y_now);
  const Vector expect = 5.0 * (Vector{{5.0, 15.0}} - y_now);
  REQUIRE(max_abs_diff(v, expect) < 1e-12);

  REQUIRE(a_y.replay_value(0.5, y_now).norm() == 0.0);
  REQUIRE(a_y.replay_value(2.5, y_now).norm() == 0.0);

  REQUIRE_THROWS_AS(a_y.value(1.5), std::logic_error);
}

TEST_CASE("replay attack validates its window, recording, and signature") {
  const cafdi::PlantModel plant = bench::plant();
  const SignalGenerator a_u = cafdi::constant_signal(Vector{{2.0, 1.0}}, 1.0);

  cafdi::OutputRecording rec;
  rec.t0 = 0.0;
  rec.dt = 0.1;
  rec.y = Matrix::Zero(2, 21);

  REQUIRE_THROWS_MATCHES(cafdi::replay_attack(plant, rec, 2.0, 2.0, a_u), AttackError,
                         MessageMatches(ContainsSubstring("positive length")));

  cafdi::OutputRecording empty;
  REQUIRE_THROWS_MATCHES(cafdi::replay_attack(plant, empty, 1.0, 2.0, a_u), AttackError,
                         MessageMatches(ContainsSubstring("recording is empty")));

  cafdi::OutputRecording late = rec;
  late.t0 = 5.0;
  REQUIRE_THROWS_MATCHES(cafdi::replay_attack(plant, late, 1.0, 2.0, a_u), AttackError,
                         MessageMatches(ContainsSubstring("outside the recording")));

  cafdi::PlantModel singular = plant;
  singular.d_a(1, 1) = 0.0;
  REQUIRE_THROWS_MATCHES(cafdi::replay_attack(singular, rec, 1.0, 2.0, a_u), AttackError,
                         MessageMatches(ContainsSubstring("not left invertible")));
}

TEST_CASE("undetectable attack is infeasible against a compliant design") {
  const cafdi::AugmentedModel aug = bench::augmented();
  const cafdi::DetectorBank bank = bench::pinned_bank(aug);
  REQUIRE_THROWS_MATCHES(
      cafdi::undetectable_controllable_attack(bank.side_filters[0], bank.detectors[0].l,
                                              aug.plant.b_a_s(), 1.0, 0.0),
      AttackError,
      MessageMatches(ContainsSubstring("controllability subspace inside Ker(L) is zero")));
}

TEST_CASE("undetectable attack on a degraded design stays inside the residual kernel") {
  const cafdi::AugmentedModel aug = bench::augmented();
  const cafdi::DetectorBank degraded = cafdi::degrade_condition9(bench::pinned_bank(aug), aug);
  const cafdi::SideFilter& filt = degraded.side_filters[0];
  const Matrix l = degraded.detectors[0].l;
  const Matrix b_a_s = aug.plant.b_a_s();

  const SignalGenerator g =
      cafdi::undetectable_controllable_attack(filt, l, b_a_s, 1.0, 0.0);
  REQUIRE(g.kind == SignalGenerator::Kind::exponential);
  REQUIRE(g.dim == 2);
  REQUIRE(g.magnitude.norm() == Catch::Approx(1.0).margin(1e-9));

  // Drive the inter-filter error directly: e_p' = (F_p + L_p) e_p + T_p B_a a_u.
  // The forced trajectory must grow while staying invisible to the residual
  // map L.
  const Matrix f_bar = filt.f_p + filt.l_p;
  const Matrix gain = filt.t_p * b_a_s;
  const double dt = 1e-3;
  const cafdi::ZohPair zoh = cafdi::zoh_discretize(f_bar, gain, dt);

  Vector e_p = Vector::Zero(4);
  double max_state = 0.0;
  double max_seen = 0.0;
  for (int k = 0; k < 30000; ++k) {
    const double t = dt * double(k);
    e_p = zoh.ad * e_p + zoh.bd * g.value(t);
    max_state = std::max(max_state, e_p.norm());
    max_seen = std::max(max_seen, (l * e_p).cwiseAbs().maxCoeff());
  }
  REQUIRE(max_state > 0.1);
  REQUIRE(max_seen < 1e-6 * max_state);
  // The injected signal itself is anything but small by the end of the run.
  REQUIRE(g.value(30.0).norm() > 10.0);
}

TEST_CASE("communication link attack passes through the declared waveform") {
  const cafdi::AugmentedModel aug = bench::augmented();
  const cafdi::DetectorBank bank = bench::pinned_bank(aug);

  SignalGenerator narrow = cafdi::sine_signal(Vector{{1.0, 1.0}}, 2.0, 0.0, 1.0);
  REQUIRE_THROWS_MATCHES(cafdi::comm_link_attack(bank.d_ac, narrow), std::invalid_argument,
                         MessageMatches(ContainsSubstring("dimension must match d_ac columns")));

  const SignalGenerator wave = cafdi::sine_signal(Vector{{1.0, 1.0, 0.0, 0.0}}, 2.0, 0.0, 1.0);
  const SignalGenerator a_c = cafdi::comm_link_attack(bank.d_ac, wave);
  REQUIRE(a_c.kind == wave.kind);
  REQUIRE(max_abs_diff(a_c.magnitude, wave.magnitude) == 0.0);

  // Both comparison paths are built to annihilate the link signature, so a
  // compliant bank keeps every residual at numerical zero under the attack.
  cafdi::ScenarioTimeline tl = cafdi::healthy_timeline(aug, bank.d_ac.cols(), 10.0);
  tl.a_c = a_c;
  const cafdi::SimulationTrace trace = cafdi::simulate(aug, bank, tl, quiet_config(10.0));
  REQUIRE_FALSE(trace.truncated);
  for (int c = 0; c < 4; ++c) {
    REQUIRE(trace.channels[c].res_norm.maxCoeff() < 1e-9);
  }
}

TEST_CASE("covert generator starts from a silent internal state") {
  const cafdi::AugmentedModel aug = bench::augmented();
  const SignalGenerator a_u = cafdi::constant_signal(Vector{{2.0, 1.0}}, 1.0);
  SignalGenerator cov = cafdi::covert_attack(aug, a_u, 1e-3);
  REQUIRE(cov.covert_value().norm() == 0.0);

  // Advancing across the silent prefix keeps the state at zero; once the
  // linked attack is active the cancellation signal becomes nonzero.
  for (int k = 0; k < 500; ++k) cov.advance(1e-3 * double(k), 1e-3);
  REQUIRE(cov.covert_value().norm() == 0.0);
  for (int k = 500; k < 2500; ++k) cov.advance(1e-3 * double(k), 1e-3);
  REQUIRE(cov.covert_value().norm() > 1e-3);
}
