#pragma once

#include <cafdi/numerics.hpp>

#include <sstream>
#include <string>
#include <vector>

namespace cafdi {

// Continuous-time plant
//   x_s' = a_s x_s + b_s u* + b_s s_a a_u + l1 f_1 + n_s w_s
//   y_p  = c_s x_s (+ sensor-fault and attack terms entering downstream)
// with the sensor-side anomaly signatures and noise covariances carried
// alongside.
struct PlantModel {
  Matrix a_s;    // n x n
  Matrix b_s;    // n x m
  Matrix c_s;    // p x n
  Matrix n_s;    // n x q process-noise input
  Matrix l1;     // n x m_f actuator-fault signature
  Matrix l2;     // p x p_f sensor-fault signature
  Matrix s_a;    // m x m_a attacked input channels
  Matrix d_a;    // p x p_a sensor-attack signature
  Matrix q_cov;  // q x q process-noise covariance
  Matrix r_cov;  // p x p measurement-noise covariance

  Index n() const { return a_s.rows(); }
  Index m() const { return b_s.cols(); }
  Index p() const { return c_s.rows(); }
  Index q() const { return n_s.cols(); }
  Index m_f() const { return l1.cols(); }
  Index p_f() const { return l2.cols(); }
  Index m_a() const { return s_a.cols(); }
  Index p_a() const { return d_a.cols(); }

  // Input channels reachable by the actuator attack.
  Matrix b_a_s() const { return b_s * s_a; }
};

// Stable auxiliary sensor dynamics that re-express the sensor fault as an
// input: x_a' = a_a x_a + l2_a f_2 + n_a v, measured through c_a.
struct AuxiliarySensorModel {
  Matrix a_a;   // (p_f+p) x (p_f+p)
  Matrix l2_a;  // (p_f+p) x p_f
  Matrix n_a;   // (p_f+p) x p
  Matrix c_a;   // p x (p_f+p)

  Index dim() const { return a_a.rows(); }
};

struct ModelDims {
  Index n = 0;
  Index m = 0;
  Index p = 0;
  Index q = 0;
  Index m_f = 0;
  Index p_f = 0;
  Index m_a = 0;
  Index p_a = 0;

  Index aug_n() const { return n + p_f + p; }
};

// Block assembly of plant and auxiliary dynamics:
//   x' = a x + b u* + b_a a_u + f1 f_1 + f2 f_2 + n_mat w,   y_p = c x
// where x stacks the physical state over the auxiliary state.
struct AugmentedModel {
  Matrix a;      // (n+p_f+p) square
  Matrix b;      // (n+p_f+p) x m
  Matrix b_a;    // (n+p_f+p) x m_a
  Matrix f1;     // (n+p_f+p) x m_f
  Matrix f2;     // (n+p_f+p) x p_f
  Matrix n_mat;  // (n+p_f+p) x (q+p)
  Matrix c;      // p x (n+p_f+p)
  ModelDims dims;
  PlantModel plant;
  AuxiliarySensorModel aux;

  Index state_dim() const { return dims.aug_n(); }
};

struct ValidationCheck {
  std::string name;
  bool pass = false;
  double residual = 0.0;  // numeric gap; 0 means exact
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool ok() const {
    for (const auto& chk : checks) {
      if (!chk.pass) return false;
    }
    return true;
  }

  const ValidationCheck* find(const std::string& name) const {
    for (const auto& chk : checks) {
      if (chk.name == name) return &chk;
    }
    return nullptr;
  }
};

namespace detail {

inline void require_dims(const Matrix& m, Index rows, Index cols, const char* field) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream msg;
    msg << field << ": expected " << rows << "x" << cols << ", got " << m.rows() << "x"
        << m.cols();
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace detail

inline AugmentedModel build_augmented(const PlantModel& plant, const AuxiliarySensorModel& aux) {
  const Index n = plant.n();
  const Index m = plant.m();
  const Index p = plant.p();
  const Index q = plant.q();
  const Index p_f = plant.p_f();
  if (n == 0) throw std::invalid_argument("a_s: plant state dimension is zero");
  detail::require_dims(plant.a_s, n, n, "a_s");
  detail::require_dims(plant.b_s, n, m, "b_s");
  detail::require_dims(plant.c_s, p, n, "c_s");
  detail::require_dims(plant.n_s, n, q, "n_s");
  detail::require_dims(plant.l1, n, plant.m_f(), "l1");
  detail::require_dims(plant.l2, p, p_f, "l2");
  detail::require_dims(plant.s_a, m, plant.m_a(), "s_a");
  detail::require_dims(plant.d_a, p, plant.p_a(), "d_a");
  detail::require_dims(plant.q_cov, q, q, "q_cov");
  detail::require_dims(plant.r_cov, p, p, "r_cov");
  const Index na = p_f + p;
  detail::require_dims(aux.a_a, na, na, "a_a");
  detail::require_dims(aux.l2_a, na, p_f, "l2_a");
  detail::require_dims(aux.n_a, na, p, "n_a");
  detail::require_dims(aux.c_a, p, na, "c_a");
  check_finite(plant.a_s, "a_s");
  check_finite(plant.b_s, "b_s");
  check_finite(plant.c_s, "c_s");
  check_finite(plant.n_s, "n_s");
  check_finite(plant.l1, "l1");
  check_finite(plant.l2, "l2");
  check_finite(plant.s_a, "s_a");
  check_finite(plant.d_a, "d_a");
  check_finite(plant.q_cov, "q_cov");
  check_finite(plant.r_cov, "r_cov");
  check_finite(aux.a_a, "a_a");
  check_finite(aux.l2_a, "l2_a");
  check_finite(aux.n_a, "n_a");
  check_finite(aux.c_a, "c_a");

  AugmentedModel aug;
  aug.dims = ModelDims{n, m, p, q, plant.m_f(), p_f, plant.m_a(), plant.p_a()};
  const Index an = aug.dims.aug_n();

  aug.a = Matrix::Zero(an, an);
  aug.a.topLeftCorner(n, n) = plant.a_s;
  aug.a.bottomRightCorner(na, na) = aux.a_a;

  aug.b = Matrix::Zero(an, m);
  aug.b.topRows(n) = plant.b_s;

  aug.b_a = Matrix::Zero(an, plant.m_a());
  aug.b_a.topRows(n) = plant.b_a_s();

  aug.f1 = Matrix::Zero(an, plant.m_f());
  aug.f1.topRows(n) = plant.l1;

  aug.f2 = Matrix::Zero(an, p_f);
  aug.f2.bottomRows(na) = aux.l2_a;

  aug.n_mat = Matrix::Zero(an, q + p);
  aug.n_mat.topLeftCorner(n, q) = plant.n_s;
  aug.n_mat.bottomRightCorner(na, p) = aux.n_a;

  aug.c = Matrix::Zero(p, an);
  aug.c.leftCols(n) = plant.c_s;
  aug.c.rightCols(na) = aux.c_a;

  aug.plant = plant;
  aug.aux = aux;
  return aug;
}

// Solvability and well-posedness checks. Failures are reported, not thrown,
// so a caller can inspect every gap at once.
inline ValidationReport validate(const AugmentedModel& aug) {
  ValidationReport report;
  auto add = [&report](std::string name, bool pass, double residual) {
    report.checks.push_back(ValidationCheck{std::move(name), pass, residual});
  };

  const Index r_f1 = rank_tol(aug.f1);
  const Index r_cf1 = rank_tol(aug.c * aug.f1);
  add("rank(C*F1) == rank(F1)", r_cf1 == r_f1, double(r_f1 - r_cf1));

  const Index r_f2 = rank_tol(aug.f2);
  const Index r_cf2 = rank_tol(aug.c * aug.f2);
  add("rank(C*F2) == rank(F2)", r_cf2 == r_f2, double(r_f2 - r_cf2));

  const double cross = (aug.f1.transpose() * aug.f2).cwiseAbs().maxCoeff();
  add("F1' * F2 == 0", cross <= 1e-12, cross);

  auto psd_gap = [](const Matrix& mtx) {
    const double asym = (mtx - mtx.transpose()).cwiseAbs().maxCoeff();
    Eigen::SelfAdjointEigenSolver<Matrix> es(mtx);
    const double min_eig = es.eigenvalues().minCoeff();
    return std::max(asym, std::max(0.0, -min_eig));
  };
  const double qgap = aug.plant.q_cov.size() ? psd_gap(aug.plant.q_cov) : 0.0;
  add("q_cov symmetric PSD", qgap <= 1e-10, qgap);
  const double rgap = aug.plant.r_cov.size() ? psd_gap(aug.plant.r_cov) : 0.0;
  add("r_cov symmetric PSD", rgap <= 1e-10, rgap);

  const Index r_sa = rank_tol(aug.plant.s_a);
  const Index r_bas = rank_tol(aug.plant.b_a_s());
  add("rank(B_s*S_a) == rank(S_a)", r_bas == r_sa, double(r_sa - r_bas));

  add("auxiliary dynamics Hurwitz", is_hurwitz(aug.aux.a_a), 0.0);

  // Steady-state gain of the auxiliary fault path must reproduce the
  // sensor-fault signature: c_a (-a_a)^-1 l2_a = l2.
  double dc_gap = 0.0;
  if (is_hurwitz(aug.aux.a_a) && aug.dims.p_f > 0) {
    const Matrix dc = aug.aux.c_a * (-aug.aux.a_a).partialPivLu().solve(aug.aux.l2_a);
    dc_gap = (dc - aug.plant.l2).cwiseAbs().maxCoeff();
  }
  add("auxiliary DC gain matches l2", dc_gap <= 1e-8, dc_gap);

  return report;
}

}  // namespace cafdi
