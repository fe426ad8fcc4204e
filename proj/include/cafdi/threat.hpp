#pragma once

#include <cafdi/design.hpp>
#include <cafdi/model.hpp>
#include <cafdi/numerics.hpp>

#include <cmath>
#include <memory>
#include <string>
#include <utility>

namespace cafdi {

// Output segment captured from an earlier run, used as replay material.
struct OutputRecording {
  double t0 = 0.0;  // time of the first column
  double dt = 0.0;
  Matrix y;  // p x N, one column per sample

  double t_end() const { return t0 + dt * double(y.cols() > 0 ? y.cols() - 1 : 0); }
};

// Time-indexed anomaly or command signal. Stateless kinds evaluate from the
// clock alone; the covert kind integrates an internal plant copy that the
// owning simulation advances step by step, and the replay kind reads the
// plant output measured online. Copying a generator resets nothing: state
// lives in plain members, so each simulation works on its own copy.
struct SignalGenerator {
  enum class Kind {
    none,          // identically zero
    bias,          // 0 before t0, constant after
    sine,          // amplitude .* sin(omega t + phase), active from t0
    exponential,   // direction * scale * e^{rate (t - t0)} after t0
    covert,        // sensor injection cancelling a linked actuator attack
    replay,        // sensor injection replaying a recorded output window
    waveform_sum,  // bias + sine, for composite link waveforms
  };

  Kind kind = Kind::none;
  double t0 = 0.0;
  Index dim = 0;

  Vector magnitude;  // bias level / sine amplitude / exponential direction
  double rate = 0.0;
  double omega = 0.0;
  double phase = 0.0;

  // Exponential bookkeeping for attacks built from an invariant zero.
  double zero_location = 0.0;
  Vector state_direction;

  // Covert members: plant-level copy x_cov' = a x_cov + b a_u, output c.
  std::shared_ptr<const SignalGenerator> linked_input;
  Matrix cov_a, cov_b, cov_c;
  Matrix injection_pinv;  // left inverse of the sensor-attack signature
  Vector cov_state;
  Matrix cov_ad, cov_bd;  // discretized pair, set by prepare()
  bool use_rk4 = false;

  // Replay members.
  OutputRecording recording;
  double window_start = 0.0;
  double window_end = 0.0;

  bool active_at(double t) const { return t >= t0; }

  // Value of a stateless signal (everything except covert and replay).
  Vector value(double t) const {
    switch (kind) {
      case Kind::none:
        return Vector::Zero(dim);
      case Kind::bias:
        return active_at(t) ? magnitude : Vector(Vector::Zero(dim));
      case Kind::sine: {
        if (!active_at(t)) return Vector::Zero(dim);
        return magnitude * std::sin(omega * (t - t0) + phase);
      }
      case Kind::exponential: {
        if (!active_at(t)) return Vector::Zero(dim);
        return magnitude * std::exp(rate * (t - t0));
      }
      case Kind::waveform_sum: {
        if (!active_at(t)) return Vector::Zero(dim);
        return magnitude + state_direction * std::sin(omega * (t - t0) + phase);
      }
      case Kind::covert:
        return covert_value();
      case Kind::replay:
        throw std::logic_error("replay signals need the measured output; use replay_value");
    }
    return Vector::Zero(dim);
  }

  // Covert injection from the current internal state.
  Vector covert_value() const {
    if (kind != Kind::covert) throw std::logic_error("not a covert generator");
    return -injection_pinv * (cov_c * cov_state);
  }

  Vector replay_value(double t, const Vector& y_p_now) const {
    if (kind != Kind::replay) throw std::logic_error("not a replay generator");
    if (t < window_start || t > window_end) return Vector::Zero(dim);
    const double delta = window_end - window_start;
    const double tr = t - delta;
    const double pos = (tr - recording.t0) / recording.dt;
    Index idx = static_cast<Index>(std::llround(pos));
    idx = std::max<Index>(0, std::min<Index>(idx, recording.y.cols() - 1));
    return injection_pinv * (recording.y.col(idx) - y_p_now);
  }

  // Bind the covert integrator to the simulation step. Must be called once
  // before the first advance; resets the internal state.
  void prepare(double dt, bool rk4) {
    if (kind != Kind::covert) return;
    use_rk4 = rk4;
    cov_state = Vector::Zero(cov_a.rows());
    if (!rk4) {
      const ZohPair pair = zoh_discretize(cov_a, cov_b, dt);
      cov_ad = pair.ad;
      cov_bd = pair.bd;
    }
  }

  // Advance the covert state across [t, t+dt] with the linked attack held
  // constant, mirroring the simulator's own input handling.
  void advance(double t, double dt) {
    if (kind != Kind::covert) return;
    const Vector a_u = linked_input ? linked_input->value(t) : Vector::Zero(cov_b.cols());
    if (!use_rk4) {
      cov_state = cov_ad * cov_state + cov_bd * a_u;
      return;
    }
    auto deriv = [&](const Vector& x) -> Vector { return cov_a * x + cov_b * a_u; };
    const Vector k1 = deriv(cov_state);
    const Vector k2 = deriv(cov_state + 0.5 * dt * k1);
    const Vector k3 = deriv(cov_state + 0.5 * dt * k2);
    const Vector k4 = deriv(cov_state + dt * k3);
    cov_state += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
};

inline SignalGenerator zero_signal(Index dim) {
  SignalGenerator g;
  g.kind = SignalGenerator::Kind::none;
  g.dim = dim;
  return g;
}

inline SignalGenerator constant_signal(const Vector& level, double t0 = 0.0) {
  SignalGenerator g;
  g.kind = SignalGenerator::Kind::bias;
  g.t0 = t0;
  g.dim = level.size();
  g.magnitude = level;
  return g;
}

inline SignalGenerator sine_signal(const Vector& amplitude, double omega, double phase = 0.0,
                                   double t0 = 0.0) {
  SignalGenerator g;
  g.kind = SignalGenerator::Kind::sine;
  g.t0 = t0;
  g.dim = amplitude.size();
  g.magnitude = amplitude;
  g.omega = omega;
  g.phase = phase;
  return g;
}

// Step fault on an f1 or f2 channel: zero before onset, constant after.
inline SignalGenerator bias_fault(Index dim, double magnitude, double t0) {
  if (!std::isfinite(magnitude)) throw std::invalid_argument("bias_fault: magnitude must be finite");
  SignalGenerator g;
  g.kind = SignalGenerator::Kind::bias;
  g.t0 = t0;
  g.dim = dim;
  g.magnitude = Vector::Constant(dim, magnitude);
  return g;
}

// Actuator attack along a real unstable invariant zero of the plant:
// a_u(t) = scale * u_0 e^{z (t-t0)}. The plant keeps its own state, so a
// small transient leaks into y_p at onset while y* stays near nominal.
inline SignalGenerator zero_dynamics_attack(const PlantModel& plant, double scale, double t0) {
  const Matrix d0 = Matrix::Zero(plant.p(), plant.m());
  const ZeroSet zs = invariant_zeros(plant.a_s, plant.b_s, plant.c_s, d0);
  double best = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (double z : zs.real_zeros()) {
    if (z > -1e-8 && z > best) {
      best = z;
      found = true;
    }
  }
  if (!found) {
    throw AttackError("zero-dynamics attack needs a real non-minimum-phase invariant zero");
  }
  const auto dir = real_zero_direction(plant.a_s, plant.b_s, plant.c_s, d0, best);
  if (!dir) {
    throw AttackError("invariant zero at " + std::to_string(best) +
                      " has no real input direction");
  }
  Vector x0 = dir->first;
  Vector u0 = dir->second;
  const double u0_norm = u0.norm();
  if (u0_norm <= 1e-12) {
    throw AttackError("invariant zero direction has no input component");
  }
  x0 /= u0_norm;
  u0 /= u0_norm;

  // The attack acts through the compromised channels: s_a xi = u_0.
  const Vector xi = pseudo_inverse(plant.s_a) * u0;
  if ((plant.s_a * xi - u0).norm() > 1e-8 * u0.norm()) {
    throw AttackError("attacked input channels cannot realize the zero input direction");
  }

  SignalGenerator g;
  g.kind = SignalGenerator::Kind::exponential;
  g.t0 = t0;
  g.dim = plant.m_a();
  g.magnitude = scale * xi;
  g.rate = best;
  g.zero_location = best;
  g.state_direction = x0;
  return g;
}

// Sensor injection that cancels the plant-output deviation caused by a_u at
// the C&C side: d_a a_y = -c_s x_cov with x_cov' = a_s x_cov + b_a_s a_u.
inline SignalGenerator covert_attack(const AugmentedModel& aug, const SignalGenerator& a_u,
                                     double dt) {
  const PlantModel& plant = aug.plant;
  if (a_u.dim != plant.m_a()) {
    throw std::invalid_argument("covert_attack: linked attack dimension mismatch");
  }
  if (rank_tol(plant.d_a) < plant.p_a() || plant.p_a() == 0) {
    throw AttackError(
        "covert attack infeasible: the sensor-attack signature is not left invertible, exact "
        "cancellation is impossible");
  }
  SignalGenerator g;
  g.kind = SignalGenerator::Kind::covert;
  g.t0 = a_u.t0;
  g.dim = plant.p_a();
  g.linked_input = std::make_shared<SignalGenerator>(a_u);
  g.cov_a = plant.a_s;
  g.cov_b = plant.b_a_s();
  g.cov_c = plant.c_s;
  g.injection_pinv = pseudo_inverse(plant.d_a);
  g.prepare(dt, false);
  return g;
}

// Replay pair: during [t_a, t_b] the C&C side sees the recorded segment
// shifted by the window length, while a_u acts on the plant.
inline std::pair<SignalGenerator, SignalGenerator> replay_attack(const PlantModel& plant,
                                                                 const OutputRecording& recorded,
                                                                 double t_a, double t_b,
                                                                 const SignalGenerator& a_u) {
  if (!(t_b > t_a)) throw AttackError("replay window must have positive length");
  const double delta = t_b - t_a;
  if (recorded.y.cols() == 0 || recorded.dt <= 0.0) {
    throw AttackError("replay recording is empty");
  }
  if (recorded.t0 > t_a - delta + 1e-12 ||
      recorded.t_end() < t_a - 1e-12 - recorded.dt) {
    throw AttackError("replay window is outside the recording");
  }
  if (rank_tol(plant.d_a) < plant.p_a() || plant.p_a() == 0) {
    throw AttackError("replay infeasible: the sensor-attack signature is not left invertible");
  }
  SignalGenerator a_y;
  a_y.kind = SignalGenerator::Kind::replay;
  a_y.t0 = t_a;
  a_y.dim = plant.p_a();
  a_y.recording = recorded;
  a_y.window_start = t_a;
  a_y.window_end = t_b;
  a_y.injection_pinv = pseudo_inverse(plant.d_a);
  return {a_y, a_u};
}

// Actuator attack invisible to the AA residual when the sensitivity rank
// condition fails: the attack image lies in a controllability subspace the
// residual map annihilates. Exponential growth makes the miss unambiguous.
inline SignalGenerator undetectable_controllable_attack(const SideFilter& filt, const Matrix& l,
                                                        const Matrix& b_a_s, double scale,
                                                        double t0) {
  const Matrix f_bar = filt.f_p + filt.l_p;
  const Matrix gain = filt.t_p * b_a_s;
  const SubspaceBasis r_star = controllability_subspace(f_bar, gain, l);
  if (r_star.dim() == 0) {
    throw AttackError(
        "attack infeasible: the largest controllability subspace inside Ker(L) is zero, the "
        "design satisfies the sensitivity rank condition");
  }

  SignalGenerator g;
  g.kind = SignalGenerator::Kind::exponential;
  g.t0 = t0;
  g.dim = gain.cols();
  g.rate = 0.1;

  // Reachable-set containment: every trajectory driven through gain stays
  // inside Ker(l), so any direction is stealthy; use the strongest one.
  const Index n = f_bar.rows();
  Matrix krylov(n, n * gain.cols());
  Matrix block = gain;
  for (Index k = 0; k < n; ++k) {
    krylov.middleCols(k * gain.cols(), gain.cols()) = block;
    block = f_bar * block;
  }
  const SubspaceBasis reach = range_basis(krylov);
  const double leak = reach.dim() ? (l * reach.basis).cwiseAbs().maxCoeff() : 0.0;
  if (leak <= 1e-9) {
    Eigen::JacobiSVD<Matrix> svd(gain, Eigen::ComputeFullV);
    g.magnitude = scale * svd.matrixV().col(0);
    return g;
  }

  // Otherwise ride a real zero of the error pencil; the direction keeps the
  // forced response inside Ker(l) up to a decaying transient.
  const ZeroSet zs = invariant_zeros(f_bar, gain, l, Matrix::Zero(l.rows(), gain.cols()));
  for (double z : zs.real_zeros()) {
    const auto dir = real_zero_direction(f_bar, gain, l, Matrix::Zero(l.rows(), gain.cols()), z);
    if (dir && dir->second.norm() > 1e-9) {
      g.rate = z;
      g.magnitude = scale * dir->second / dir->second.norm();
      g.state_direction = dir->first / dir->second.norm();
      g.zero_location = z;
      return g;
    }
  }
  throw AttackError("no real stealthy direction found for the degraded design");
}

// Passthrough link-attack waveform, dimension-checked against the signature.
inline SignalGenerator comm_link_attack(const Matrix& d_ac, const SignalGenerator& waveform) {
  if (waveform.dim != d_ac.cols()) {
    throw std::invalid_argument("comm_link_attack: waveform dimension must match d_ac columns");
  }
  return waveform;
}

// Full anomaly schedule for one run.
struct ScenarioTimeline {
  std::string name;
  SignalGenerator u_cmd;  // commanded input, default zero
  SignalGenerator a_u;
  SignalGenerator a_y;
  SignalGenerator a_c;
  SignalGenerator f1;
  SignalGenerator f2;
  double t_end = 30.0;
};

// Quiet timeline with every anomaly off.
inline ScenarioTimeline healthy_timeline(const AugmentedModel& aug, Index n_c, double t_end) {
  ScenarioTimeline tl;
  tl.name = "healthy";
  tl.u_cmd = zero_signal(aug.dims.m);
  tl.a_u = zero_signal(aug.dims.m_a);
  tl.a_y = zero_signal(aug.dims.p_a);
  tl.a_c = zero_signal(n_c);
  tl.f1 = zero_signal(aug.dims.m_f);
  tl.f2 = zero_signal(aug.dims.p_f);
  tl.t_end = t_end;
  return tl;
}

}  // namespace cafdi
