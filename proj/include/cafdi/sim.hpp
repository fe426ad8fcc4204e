#pragma once

#include <cafdi/design.hpp>
#include <cafdi/model.hpp>
#include <cafdi/threat.hpp>

#include <array>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace cafdi {

struct SimConfig {
  double dt = 0.001;
  double t_end = 30.0;
  std::uint64_t seed = 0;
  bool noise_on = true;
  enum class Integrator { zoh, rk4 };
  Integrator integrator = Integrator::zoh;
  std::optional<Vector> x0;         // augmented plant state, default zero
  std::optional<Vector> filter_x0;  // stacked [z_c; e_p; z] blocks, default zero
  bool lean = false;                // keep only the time grid and residual norms
};

// Per-category series; empty matrices when the run was lean.
struct ChannelTrace {
  Matrix z_c;   // n x N
  Matrix z_p;   // n x N
  Matrix e_p;   // n x N
  Matrix z;     // aug_n x N
  Matrix xhat;  // aug_n x N
  Matrix res;   // p x N
  Vector res_norm;
};

struct SimulationTrace {
  Vector t;
  Matrix x_s, x_a;       // true plant and auxiliary states
  Matrix y_p, y_star;    // plant-side and C&C-side outputs
  Matrix u, u_star;      // commanded and received inputs
  std::array<ChannelTrace, 4> channels;
  bool truncated = false;
  double truncated_at = 0.0;
  bool lean = false;

  Index samples() const { return t.size(); }
  const ChannelTrace& channel(Category c) const { return channels[static_cast<int>(c)]; }
};

namespace detail {

// Layout of the joint closed-loop state [x; z_c^l; e_p^l; z^l] and of the
// held input vector [u; a_u; a_y; a_c; f1; f2; w].
struct JointSystem {
  Matrix a;  // n_joint x n_joint
  Matrix b;  // n_joint x n_in
  Index n_joint = 0;
  Index off_zc = 0, off_ep = 0, off_z = 0;
  Index in_u = 0, in_au = 0, in_ay = 0, in_ac = 0, in_f1 = 0, in_f2 = 0, in_w = 0;
  Index n_in = 0;
};

inline JointSystem build_joint(const AugmentedModel& aug, const DetectorBank& bank) {
  const Index an = aug.state_dim();
  const Index n = aug.dims.n;
  const Index p = aug.dims.p;
  const Index m = aug.dims.m;
  const Index m_a = aug.dims.m_a;
  const Index p_a = aug.dims.p_a;
  const Index m_f = aug.dims.m_f;
  const Index p_f = aug.dims.p_f;
  const Index q = aug.dims.q;
  const Index n_c = bank.d_ac.cols();
  const Matrix b_a_s = aug.plant.b_a_s();

  JointSystem js;
  js.off_zc = an;
  js.off_ep = an + 4 * n;
  js.off_z = an + 8 * n;
  js.n_joint = an + 8 * n + 4 * an;
  js.in_u = 0;
  js.in_au = m;
  js.in_ay = m + m_a;
  js.in_ac = m + m_a + p_a;
  js.in_f1 = m + m_a + p_a + n_c;
  js.in_f2 = m + m_a + p_a + n_c + m_f;
  js.in_w = m + m_a + p_a + n_c + m_f + p_f;
  js.n_in = js.in_w + q + p;

  js.a = Matrix::Zero(js.n_joint, js.n_joint);
  js.b = Matrix::Zero(js.n_joint, js.n_in);

  js.a.topLeftCorner(an, an) = aug.a;
  js.b.block(0, js.in_u, an, m) = aug.b;
  js.b.block(0, js.in_au, an, m_a) = aug.b_a;
  js.b.block(0, js.in_f1, an, m_f) = aug.f1;
  js.b.block(0, js.in_f2, an, p_f) = aug.f2;
  js.b.block(0, js.in_w, an, q + p) = aug.n_mat;

  for (int i = 0; i < 4; ++i) {
    const SideFilter& filt = bank.side_filters[i];
    const UIODetector& uio = bank.detectors[i];
    const Index zc = js.off_zc + i * n;
    const Index ep = js.off_ep + i * n;
    const Index z = js.off_z + i * an;

    // z_c' = f_p z_c + k_p C x + t_p b_s u + k_p d_a a_y
    js.a.block(zc, zc, n, n) = filt.f_p;
    js.a.block(zc, 0, n, an) = filt.k_p * aug.c;
    js.b.block(zc, js.in_u, n, m) = filt.t_p * aug.plant.b_s;
    js.b.block(zc, js.in_ay, n, p_a) = filt.k_p * aug.plant.d_a;

    // e_p' = (f_p + l_p) e_p + t_p b_a_s a_u - k_p d_a a_y - l_p d_ac a_c
    js.a.block(ep, ep, n, n) = filt.f_p + filt.l_p;
    js.b.block(ep, js.in_au, n, m_a) = filt.t_p * b_a_s;
    js.b.block(ep, js.in_ay, n, p_a) = -filt.k_p * aug.plant.d_a;
    js.b.block(ep, js.in_ac, n, n_c) = -filt.l_p * bank.d_ac;

    // z' = f z + k C x + l e_p + t b u + t b_a a_u - l d_ac a_c
    js.a.block(z, z, an, an) = uio.f;
    js.a.block(z, 0, an, an) = uio.k * aug.c;
    js.a.block(z, ep, an, n) = uio.l;
    js.b.block(z, js.in_u, an, m) = uio.t * aug.b;
    js.b.block(z, js.in_au, an, m_a) = uio.t * aug.b_a;
    js.b.block(z, js.in_ac, an, n_c) = -uio.l * bank.d_ac;
  }
  return js;
}

// Symmetric square root of a PSD covariance, tolerant of zero modes.
inline Matrix psd_sqrt(const Matrix& cov) {
  if (cov.size() == 0) return cov;
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  Vector lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

inline void check_timeline_dims(const AugmentedModel& aug, const DetectorBank& bank,
                                const ScenarioTimeline& tl) {
  auto need = [](const SignalGenerator& g, Index dim, const char* name) {
    if (g.dim != dim) {
      throw std::invalid_argument(std::string("timeline signal ") + name +
                                  " has the wrong dimension");
    }
  };
  need(tl.u_cmd, aug.dims.m, "u");
  need(tl.a_u, aug.dims.m_a, "a_u");
  need(tl.a_y, aug.dims.p_a, "a_y");
  need(tl.a_c, bank.d_ac.cols(), "a_c");
  need(tl.f1, aug.dims.m_f, "f1");
  need(tl.f2, aug.dims.p_f, "f2");
}

}  // namespace detail

// Advance plant, auxiliary dynamics, the four mirrored filter pairs, and the
// four observers through one closed-form linear system. Inputs are held
// constant over each step; with the ZOH integrator the step map is exact.
inline SimulationTrace simulate(const AugmentedModel& aug, const DetectorBank& bank,
                                const ScenarioTimeline& timeline, const SimConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("simulate: dt must be positive");
  if (!(cfg.t_end >= cfg.dt)) throw std::invalid_argument("simulate: t_end must cover one step");
  detail::check_timeline_dims(aug, bank, timeline);

  const Index an = aug.state_dim();
  const Index n = aug.dims.n;
  const Index p = aug.dims.p;
  const detail::JointSystem js = detail::build_joint(aug, bank);

  const bool rk4 = cfg.integrator == SimConfig::Integrator::rk4;
  Matrix ad, bd;
  if (!rk4) {
    const ZohPair pair = zoh_discretize(js.a, js.b, cfg.dt);
    ad = pair.ad;
    bd = pair.bd;
  }

  ScenarioTimeline tl = timeline;  // private copy: generators carry state
  tl.a_y.prepare(cfg.dt, rk4);

  const Index steps = static_cast<Index>(std::llround(cfg.t_end / cfg.dt));
  const Index samples = steps + 1;

  Vector state = Vector::Zero(js.n_joint);
  if (cfg.x0) {
    if (cfg.x0->size() != an) throw std::invalid_argument("simulate: x0 must have the augmented size");
    state.head(an) = *cfg.x0;
  }
  if (cfg.filter_x0) {
    if (cfg.filter_x0->size() != js.n_joint - an) {
      throw std::invalid_argument("simulate: filter_x0 must cover the filter blocks");
    }
    state.tail(js.n_joint - an) = *cfg.filter_x0;
  }

  Matrix noise_sqrt;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Index n_w = aug.dims.q + p;
  if (cfg.noise_on) {
    Matrix cov = Matrix::Zero(n_w, n_w);
    cov.topLeftCorner(aug.dims.q, aug.dims.q) = aug.plant.q_cov;
    cov.bottomRightCorner(p, p) = aug.plant.r_cov;
    noise_sqrt = detail::psd_sqrt(cov) / std::sqrt(cfg.dt);
  }

  SimulationTrace trace;
  trace.lean = cfg.lean;
  trace.t = Vector::Zero(samples);
  if (!cfg.lean) {
    trace.x_s = Matrix::Zero(n, samples);
    trace.x_a = Matrix::Zero(an - n, samples);
    trace.y_p = Matrix::Zero(p, samples);
    trace.y_star = Matrix::Zero(p, samples);
    trace.u = Matrix::Zero(aug.dims.m, samples);
    trace.u_star = Matrix::Zero(aug.dims.m, samples);
  }
  for (int i = 0; i < 4; ++i) {
    ChannelTrace& ch = trace.channels[i];
    ch.res_norm = Vector::Zero(samples);
    if (!cfg.lean) {
      ch.z_c = Matrix::Zero(n, samples);
      ch.z_p = Matrix::Zero(n, samples);
      ch.e_p = Matrix::Zero(n, samples);
      ch.z = Matrix::Zero(an, samples);
      ch.xhat = Matrix::Zero(an, samples);
      ch.res = Matrix::Zero(p, samples);
    }
  }

  Vector input = Vector::Zero(js.n_in);
  Index recorded = samples;
  for (Index k = 0; k < samples; ++k) {
    const double t = double(k) * cfg.dt;
    if (!state.allFinite()) {
      trace.truncated = true;
      trace.truncated_at = (k > 0) ? double(k - 1) * cfg.dt : 0.0;
      recorded = k;
      break;
    }

    const Vector y_p = aug.c * state.head(an);
    const Vector u_val = tl.u_cmd.value(t);
    const Vector a_u = tl.a_u.value(t);
    Vector a_y;
    if (tl.a_y.kind == SignalGenerator::Kind::replay) {
      a_y = tl.a_y.replay_value(t, y_p);
    } else {
      a_y = tl.a_y.value(t);
    }
    const Vector a_c = tl.a_c.value(t);
    const Vector f1 = tl.f1.value(t);
    const Vector f2 = tl.f2.value(t);
    const Vector y_star = y_p + aug.plant.d_a * a_y;

    trace.t(k) = t;
    if (!cfg.lean) {
      trace.x_s.col(k) = state.head(n);
      trace.x_a.col(k) = state.segment(n, an - n);
      trace.y_p.col(k) = y_p;
      trace.y_star.col(k) = y_star;
      trace.u.col(k) = u_val;
      trace.u_star.col(k) = u_val + aug.plant.s_a * a_u;
    }
    for (int i = 0; i < 4; ++i) {
      ChannelTrace& ch = trace.channels[i];
      const Vector z = state.segment(js.off_z + i * an, an);
      const Vector xhat = z + bank.detectors[i].h * y_p;
      const Vector res = y_p - aug.c * xhat;
      ch.res_norm(k) = res.norm();
      if (!cfg.lean) {
        const Vector z_c = state.segment(js.off_zc + i * n, n);
        const Vector e_p = state.segment(js.off_ep + i * n, n);
        ch.z_c.col(k) = z_c;
        ch.e_p.col(k) = e_p;
        ch.z_p.col(k) = z_c + e_p;
        ch.z.col(k) = z;
        ch.xhat.col(k) = xhat;
        ch.res.col(k) = res;
      }
    }
    if (k == steps) break;

    input.segment(js.in_u, aug.dims.m) = u_val;
    input.segment(js.in_au, aug.dims.m_a) = a_u;
    input.segment(js.in_ay, aug.dims.p_a) = a_y;
    input.segment(js.in_ac, bank.d_ac.cols()) = a_c;
    input.segment(js.in_f1, aug.dims.m_f) = f1;
    input.segment(js.in_f2, aug.dims.p_f) = f2;
    if (cfg.noise_on) {
      Vector xi(n_w);
      for (Index i = 0; i < n_w; ++i) xi(i) = gauss(rng);
      input.segment(js.in_w, n_w) = noise_sqrt * xi;
    } else {
      input.segment(js.in_w, n_w).setZero();
    }

    if (!rk4) {
      state = ad * state + bd * input;
    } else {
      const Vector forcing = js.b * input;
      const Vector k1 = js.a * state + forcing;
      const Vector k2 = js.a * (state + 0.5 * cfg.dt * k1) + forcing;
      const Vector k3 = js.a * (state + 0.5 * cfg.dt * k2) + forcing;
      const Vector k4 = js.a * (state + cfg.dt * k3) + forcing;
      state += (cfg.dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    tl.a_y.advance(t, cfg.dt);
  }

  if (recorded < samples) {
    trace.t.conservativeResize(recorded);
    auto shrink = [recorded](Matrix& m) {
      if (m.size()) m.conservativeResize(Eigen::NoChange, recorded);
    };
    shrink(trace.x_s);
    shrink(trace.x_a);
    shrink(trace.y_p);
    shrink(trace.y_star);
    shrink(trace.u);
    shrink(trace.u_star);
    for (auto& ch : trace.channels) {
      ch.res_norm.conservativeResize(recorded);
      shrink(ch.z_c);
      shrink(ch.z_p);
      shrink(ch.e_p);
      shrink(ch.z);
      shrink(ch.xhat);
      shrink(ch.res);
    }
  }
  return trace;
}

/* ------------------------------ probes, export ---------------------------- */

struct ActiveSignals {
  bool a_u = false;
  bool a_y = false;
  bool a_c = false;
  bool f1 = false;
  bool f2 = false;
};

// Reference anomaly magnitudes used by the decoupling probe and the
// campaign grids: constant [2, 1] actuator attack, its covert sensor
// counterpart, unit sinusoidal link waveform, step faults of 40 and 20.
inline ScenarioTimeline probe_timeline(const AugmentedModel& aug, const DetectorBank& bank,
                                       const ActiveSignals& active, double onset, double t_end,
                                       double dt) {
  ScenarioTimeline tl = healthy_timeline(aug, bank.d_ac.cols(), t_end);
  tl.name = "probe";
  if (active.a_u) {
    Vector level(aug.dims.m_a);
    for (Index i = 0; i < level.size(); ++i) level(i) = (i == 0) ? 2.0 : 1.0;
    tl.a_u = constant_signal(level, onset);
  }
  if (active.a_y) {
    // Covert-style injection driven by a private copy of the reference
    // actuator attack; the plant itself is not driven unless a_u is active.
    Vector level(aug.dims.m_a);
    for (Index i = 0; i < level.size(); ++i) level(i) = (i == 0) ? 2.0 : 1.0;
    tl.a_y = covert_attack(aug, constant_signal(level, onset), dt);
  }
  if (active.a_c) {
    tl.a_c = sine_signal(Vector::Ones(bank.d_ac.cols()), 1.0, 0.0, onset);
  }
  if (active.f1 && aug.dims.m_f > 0) tl.f1 = bias_fault(aug.dims.m_f, 40.0, onset);
  if (active.f2 && aug.dims.p_f > 0) tl.f2 = bias_fault(aug.dims.p_f, 20.0, onset);
  return tl;
}

// Noise-free witness for the decoupling claims: run with the named anomaly
// set and return the largest residual norm of the chosen category.
inline double decoupling_probe(const AugmentedModel& aug, const DetectorBank& bank,
                               Category category, const ActiveSignals& active,
                               double t_end = 30.0, double dt = 0.001) {
  SimConfig cfg;
  cfg.dt = dt;
  cfg.t_end = t_end;
  cfg.noise_on = false;
  cfg.lean = true;
  const ScenarioTimeline tl = probe_timeline(aug, bank, active, 1.0, t_end, dt);
  const SimulationTrace trace = simulate(aug, bank, tl, cfg);
  return trace.channel(category).res_norm.maxCoeff();
}

// CSV export: residual vectors (suffixed per component when p > 1), their
// norms, and optionally the full input/output/state series.
inline void export_trace_csv(const SimulationTrace& trace, const std::string& path,
                             bool full_state = false) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");

  auto vec_headers = [](std::string base, Index rows) {
    std::vector<std::string> h;
    if (rows == 1) {
      h.push_back(base);
    } else {
      for (Index i = 0; i < rows; ++i) h.push_back(base + "_" + std::to_string(i));
    }
    return h;
  };

  std::vector<std::string> header{"t"};
  const bool have_vectors = !trace.lean;
  if (have_vectors) {
    for (int i = 0; i < 4; ++i) {
      const auto names = vec_headers(std::string("res_") + category_name(Category(i)),
                                     trace.channels[i].res.rows());
      header.insert(header.end(), names.begin(), names.end());
    }
  }
  for (int i = 0; i < 4; ++i) {
    header.push_back(std::string("nres_") + category_name(Category(i)));
  }
  if (full_state && !trace.lean) {
    for (const auto& [base, m] :
         std::initializer_list<std::pair<const char*, const Matrix*>>{{"y_p", &trace.y_p},
                                                                      {"y_star", &trace.y_star},
                                                                      {"u", &trace.u},
                                                                      {"u_star", &trace.u_star},
                                                                      {"x_s", &trace.x_s},
                                                                      {"x_a", &trace.x_a}}) {
      const auto names = vec_headers(base, m->rows());
      header.insert(header.end(), names.begin(), names.end());
    }
  }
  for (std::size_t i = 0; i < header.size(); ++i) {
    out << header[i] << (i + 1 < header.size() ? "," : "\n");
  }

  char buf[32];
  auto put = [&](double v, bool last) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf << (last ? "\n" : ",");
  };
  for (Index k = 0; k < trace.samples(); ++k) {
    put(trace.t(k), false);
    if (have_vectors) {
      for (int i = 0; i < 4; ++i) {
        const Matrix& res = trace.channels[i].res;
        for (Index r = 0; r < res.rows(); ++r) put(res(r, k), false);
      }
    }
    for (int i = 0; i < 4; ++i) {
      const bool last = (i == 3) && !(full_state && !trace.lean);
      put(trace.channels[i].res_norm(k), last);
    }
    if (full_state && !trace.lean) {
      const std::array<const Matrix*, 6> blocks{&trace.y_p, &trace.y_star, &trace.u,
                                                &trace.u_star, &trace.x_s, &trace.x_a};
      for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        const Matrix& m = *blocks[bi];
        for (Index r = 0; r < m.rows(); ++r) {
          put(m(r, k), bi + 1 == blocks.size() && r + 1 == m.rows());
        }
      }
    }
  }
}

}  // namespace cafdi
