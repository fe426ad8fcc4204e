#pragma once

#include <cafdi/model.hpp>
#include <cafdi/numerics.hpp>

#include <array>
#include <string>
#include <vector>

namespace cafdi {

// Residual categories: actuator attack, sensor attack, actuator fault,
// sensor (pseudo actuator) fault.
enum class Category : int { AA = 0, SA = 1, AF = 2, SF = 3 };

inline constexpr std::array<Category, 4> all_categories{Category::AA, Category::SA, Category::AF,
                                                        Category::SF};

inline const char* category_name(Category c) {
  switch (c) {
    case Category::AA: return "AA";
    case Category::SA: return "SA";
    case Category::AF: return "AF";
    case Category::SF: return "SF";
  }
  return "?";
}

inline Category category_from_name(const std::string& name) {
  for (Category c : all_categories) {
    if (name == category_name(c)) return c;
  }
  throw std::invalid_argument("unknown residual category: " + name);
}

// Mirrored filter run on both sides of the communication link:
//   C&C side:   z_c' = f_p z_c + t_p b_s u + k_p y*
//   plant side: z_p' = f_p z_p + t_p b_s u* + k_p y_p + l_p (z_p - z_c - d_ac a_c)
// The two sides share one parameter set.
struct SideFilter {
  Category category = Category::AA;
  Matrix f_p;  // n x n
  Matrix t_p;  // n x n, applied to b_s and b_a_s
  Matrix k_p;  // n x p
  Matrix l_p;  // n x n
};

// Unknown-input observer on the plant side:
//   z' = f z + t b u* + k y_p + l (z_p - z_c - d_ac a_c),  xhat = z + h y_p
// with t = I - h c, f = a - h c a - k1 c, k2 = f h, k = k1 + k2.
struct UIODetector {
  Category category = Category::AA;
  Matrix h;   // aug_n x p
  Matrix t;   // aug_n x aug_n
  Matrix k1;  // aug_n x p
  Matrix k2;  // aug_n x p
  Matrix k;   // aug_n x p
  Matrix f;   // aug_n x aug_n
  Matrix l;   // aug_n x n
};

// One detector per category plus the communication-attack signature the
// inter-filter comparison is blind to.
struct DetectorBank {
  std::array<SideFilter, 4> side_filters;
  std::array<UIODetector, 4> detectors;
  Matrix d_ac;  // n x n_c

  const SideFilter& side(Category c) const { return side_filters[static_cast<int>(c)]; }
  SideFilter& side(Category c) { return side_filters[static_cast<int>(c)]; }
  const UIODetector& uio(Category c) const { return detectors[static_cast<int>(c)]; }
  UIODetector& uio(Category c) { return detectors[static_cast<int>(c)]; }
};

struct ConditionCheck {
  std::string id;           // e.g. "P1.C4"
  std::string description;  // what the condition demands
  bool pass = false;
  double residual = 0.0;
  std::vector<Complex> zeros;  // populated for pencil-based checks
};

struct ConditionReport {
  std::vector<ConditionCheck> checks;

  bool ok() const {
    for (const auto& chk : checks) {
      if (!chk.pass) return false;
    }
    return true;
  }

  const ConditionCheck* find(const std::string& id) const {
    for (const auto& chk : checks) {
      if (chk.id == id) return &chk;
    }
    return nullptr;
  }

  std::vector<std::string> failing() const {
    std::vector<std::string> out;
    for (const auto& chk : checks) {
      if (!chk.pass) out.push_back(chk.id);
    }
    return out;
  }
};

struct DesignOptions {
  std::uint64_t seed = 1;
  int retries = 100;        // randomized draws per synthesis step
  int outer_retries = 5;    // full redesigns when a later step fails
  std::vector<Complex> uio_poles;  // empty: -2, -3, ... down the diagonal
};

/* ------------------------- individual synthesis steps --------------------- */

// H such that (I - H c) annihilates every target column block:
// H = F (cF)^+ with F = [targets]; the free term on Ker((cF)') is left zero.
inline Matrix solve_decoupling_gain(const AugmentedModel& aug,
                                    const std::vector<Matrix>& targets) {
  const Index an = aug.state_dim();
  const Index p = aug.dims.p;
  Index total = 0;
  for (const Matrix& t : targets) {
    if (t.rows() != an) {
      throw std::invalid_argument("solve_decoupling_gain: target height must match the state");
    }
    total += t.cols();
  }
  if (total == 0) return Matrix::Zero(an, p);
  Matrix stacked(an, total);
  Index at = 0;
  for (const Matrix& t : targets) {
    stacked.middleCols(at, t.cols()) = t;
    at += t.cols();
  }
  const Matrix cf = aug.c * stacked;
  if (rank_tol(cf) != rank_tol(stacked)) {
    throw DesignError("decoupling infeasible: rank(C*F) < rank(F) for the fault signatures");
  }
  return stacked * pseudo_inverse(cf);
}

namespace detail {

inline Matrix zero_d(Index rows, Index cols) { return Matrix::Zero(rows, cols); }

// Left-invertibility of the map a_u -> l e_p through the filter-error
// dynamics: the pencil [sI - f, -l; c, 0] must keep normal rank
// state_dim + rank(l).
inline bool left_invertible(const Matrix& f, const Matrix& l, const Matrix& c) {
  const ZeroSet zs = invariant_zeros(f, l, c, zero_d(c.rows(), l.cols()));
  return zs.normal_rank == f.rows() + rank_tol(l);
}

}  // namespace detail

// Observer synthesis: decouple the targets, place the remaining observable
// spectrum, then draw an inter-filter injection gain l with l d_ac = 0 that
// keeps the attack-to-residual map left invertible.
inline UIODetector design_uio(const AugmentedModel& aug, const std::vector<Matrix>& targets,
                              const Matrix& d_ac, const std::vector<Complex>& poles,
                              Category category, std::uint64_t seed = 1, int retries = 100) {
  const Index an = aug.state_dim();
  const Index n = aug.dims.n;

  UIODetector uio;
  uio.category = category;
  uio.h = solve_decoupling_gain(aug, targets);
  uio.t = Matrix::Identity(an, an) - uio.h * aug.c;

  std::vector<Complex> use_poles = poles.empty() ? default_observer_poles(an) : poles;
  uio.k1 = place_observer_gain(uio.t * aug.a, aug.c, use_poles);
  uio.f = aug.a - uio.h * aug.c * aug.a - uio.k1 * aug.c;
  uio.k2 = uio.f * uio.h;
  uio.k = uio.k1 + uio.k2;
  if (!is_hurwitz(uio.f)) {
    throw DesignError("observer dynamics not Hurwitz after pole placement");
  }

  const bool needs_l = (category == Category::AA || category == Category::SA);
  if (!needs_l) {
    uio.l = Matrix::Zero(an, n);
    return uio;
  }

  if (d_ac.rows() != n) {
    throw std::invalid_argument("design_uio: d_ac must act on the physical state space");
  }
  const SubspaceBasis safe_rows = null_space_basis(d_ac.transpose());
  if (safe_rows.dim() == 0) {
    throw DesignError(
        "no nonzero L with L*D_ac = 0 exists; the link-attack signature spans the state "
        "space (rank(D_ac) < n is violated)");
  }

  std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(category)));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int attempt = 0; attempt < retries; ++attempt) {
    Matrix w(an, safe_rows.dim());
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = gauss(rng);
    const Matrix l = w * safe_rows.basis.transpose();
    if (rank_tol(l) != std::min<Index>(safe_rows.dim(), an)) continue;
    if ((l * d_ac).cwiseAbs().maxCoeff() > 1e-10) continue;
    if (!detail::left_invertible(uio.f, l, aug.c)) continue;
    uio.l = l;
    return uio;
  }
  throw DesignError("left-invertibility of (C, F, L) failed for every candidate L");
}

// Completes a full observer from its independent gains (h, k1, l), deriving
// t, f, k2, k from the structure identities. Used to load pinned banks.
inline UIODetector assemble_uio(const AugmentedModel& aug, Category category,
                                const Matrix& h, const Matrix& k1, const Matrix& l) {
  const Index an = aug.state_dim();
  const Index n = aug.dims.n;
  const Index p = aug.dims.p;
  detail::require_dims(h, an, p, "h");
  detail::require_dims(k1, an, p, "k1");
  detail::require_dims(l, an, n, "l");
  UIODetector uio;
  uio.category = category;
  uio.h = h;
  uio.t = Matrix::Identity(an, an) - h * aug.c;
  uio.k1 = k1;
  uio.f = aug.a - h * aug.c * aug.a - k1 * aug.c;
  uio.k2 = uio.f * uio.h;
  uio.k = uio.k1 + uio.k2;
  uio.l = l;
  if (!is_hurwitz(uio.f)) {
    throw DesignError("observer dynamics not Hurwitz for the supplied gains");
  }
  return uio;
}

// Plant/C&C side filter synthesis for the attack categories. The shared
// randomized search covers t_p (AA) or k_p (SA) together with l_p, under
// the link-blindness, stability, rank, and minimum-phase conditions.
inline SideFilter design_plant_filter(const AugmentedModel& aug, const UIODetector& uio,
                                      const Matrix& d_ac, Category category,
                                      const DesignOptions& opts = {}) {
  if (category != Category::AA && category != Category::SA) {
    throw std::invalid_argument("design_plant_filter: only the attack categories carry a search");
  }
  const Index n = aug.dims.n;
  const Index p = aug.dims.p;
  const Matrix b_a_s = aug.plant.b_a_s();

  SideFilter filt;
  filt.category = category;
  filt.f_p = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) filt.f_p(i, i) = -2.0 - double(i);

  const SubspaceBasis safe_rows = null_space_basis(d_ac.transpose());
  if (safe_rows.dim() == 0) {
    throw DesignError("no L_p with L_p*D_ac = 0 exists (rank(D_ac) < n is violated)");
  }

  std::mt19937_64 rng(mix_seed(opts.seed ^ 0xf117e2ULL, static_cast<std::uint64_t>(category)));
  std::uniform_int_distribution<int> entry(-5, 5);
  auto draw = [&](Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = double(entry(rng));
    return m;
  };

  for (int attempt = 0; attempt < opts.retries; ++attempt) {
    // l_p rows orthogonal to the link-attack image; first candidate is the
    // all-zero correction, which already suffices when f_p is stable.
    Matrix l_p = Matrix::Zero(n, n);
    if (attempt > 0) l_p = draw(n, safe_rows.dim()) * safe_rows.basis.transpose();
    const Matrix f_bar = filt.f_p + l_p;
    if (!is_hurwitz(f_bar)) continue;

    Matrix t_p, k_p, gain_to_error;
    if (category == Category::AA) {
      t_p = (attempt == 0) ? Matrix::Identity(n, n) : draw(n, n);
      k_p = Matrix::Zero(n, p);
      if (aug.plant.d_a.cols() > 0 && (k_p * aug.plant.d_a).cwiseAbs().maxCoeff() > 1e-10) continue;
      gain_to_error = t_p * b_a_s;
      if (rank_tol(gain_to_error) != rank_tol(b_a_s)) continue;
    } else {
      const SubspaceBasis left_null = null_space_basis(b_a_s.transpose());
      if (left_null.dim() == 0) {
        throw DesignError("T_p with T_p*B_a = 0 requires a rank-deficient attacked-input map");
      }
      t_p = draw(n, left_null.dim()) * left_null.basis.transpose();
      if ((t_p * b_a_s).cwiseAbs().maxCoeff() > 1e-10) continue;
      k_p = draw(n, p);
      gain_to_error = k_p * aug.plant.d_a;
      if (rank_tol(gain_to_error) != rank_tol(aug.plant.d_a)) continue;
    }

    // Sensitivity rank condition and minimum-phase requirement on the
    // error-to-residual pencil.
    if (rank_tol(uio.l * gain_to_error) != rank_tol(gain_to_error)) continue;
    const ZeroSet zs = invariant_zeros(f_bar, gain_to_error, uio.l,
                                       detail::zero_d(uio.l.rows(), gain_to_error.cols()));
    if (!zs.minimum_phase(1e-8)) continue;

    filt.t_p = t_p;
    filt.k_p = k_p;
    filt.l_p = l_p;
    return filt;
  }
  throw DesignError(std::string("side-filter search budget exhausted for ") +
                    category_name(category) +
                    " (rank or minimum-phase condition unsatisfied)");
}

/* ------------------------------- verification ----------------------------- */

namespace detail {

inline void add_check(ConditionReport& report, std::string id, std::string description, bool pass,
                      double residual, std::vector<Complex> zeros = {}) {
  report.checks.push_back(
      ConditionCheck{std::move(id), std::move(description), pass, residual, std::move(zeros)});
}

inline double rel_zero_gap(const Matrix& m, const Matrix& scale_ref) {
  const double scale = std::max(1.0, scale_ref.cwiseAbs().maxCoeff());
  return m.size() ? m.cwiseAbs().maxCoeff() / scale : 0.0;
}

// Shared structure checks for one detector: decoupling, gain identities,
// stability.
inline void check_uio_structure(ConditionReport& report, const std::string& prefix,
                                const AugmentedModel& aug, const UIODetector& uio,
                                bool decouple_f1, bool decouple_f2) {
  const Index an = aug.state_dim();
  const Matrix residual_t = uio.t - (Matrix::Identity(an, an) - uio.h * aug.c);
  const Matrix residual_k2 = uio.k2 - uio.f * uio.h;
  const Matrix residual_k = uio.k - uio.k1 - uio.k2;
  const Matrix residual_f = uio.f - (aug.a - uio.h * aug.c * aug.a - uio.k1 * aug.c);
  const double structure_gap =
      std::max({residual_t.cwiseAbs().maxCoeff(), residual_k2.cwiseAbs().maxCoeff(),
                residual_k.cwiseAbs().maxCoeff(), residual_f.cwiseAbs().maxCoeff()});

  int c = 1;
  if (decouple_f1) {
    const double gap = rel_zero_gap(uio.t * aug.f1, aug.f1);
    add_check(report, prefix + ".C" + std::to_string(c), "(I - H C) F1 = 0", gap <= 1e-9, gap);
  } else {
    const Index want = rank_tol(aug.f1);
    const Index got = rank_tol(uio.t * aug.f1);
    add_check(report, prefix + ".C" + std::to_string(c), "rank((I - H C) F1) = rank(F1)",
              got == want, double(want - got));
  }
  ++c;
  if (decouple_f2) {
    const double gap = rel_zero_gap(uio.t * aug.f2, aug.f2);
    add_check(report, prefix + ".C" + std::to_string(c), "(I - H C) F2 = 0", gap <= 1e-9, gap);
  } else {
    const Index want = rank_tol(aug.f2);
    const Index got = rank_tol(uio.t * aug.f2);
    add_check(report, prefix + ".C" + std::to_string(c), "rank((I - H C) F2) = rank(F2)",
              got == want, double(want - got));
  }
  add_check(report, prefix + ".C3", "T = I - H C, F = A - HCA - K1 C, K2 = F H, K = K1 + K2",
            structure_gap <= 1e-10, structure_gap);
}

}  // namespace detail

// Numerical evaluation of every design condition, category by category.
// Failures are data; nothing throws.
inline ConditionReport verify_conditions(const DetectorBank& bank, const AugmentedModel& aug) {
  ConditionReport report;
  const Index n = aug.dims.n;
  const Matrix b_a_s = aug.plant.b_a_s();

  const Index dac_rank = rank_tol(bank.d_ac);
  detail::add_check(report, "A3", "rank(D_ac) < n (link attack cannot span the state)",
                    dac_rank < n, double(dac_rank));

  for (Category cat : {Category::AA, Category::SA}) {
    const std::string prefix = (cat == Category::AA) ? "P1" : "P2";
    const UIODetector& uio = bank.uio(cat);
    const SideFilter& filt = bank.side(cat);
    const Matrix f_bar = filt.f_p + filt.l_p;

    detail::check_uio_structure(report, prefix, aug, uio, true, true);

    const double gap_ldac = (uio.l * bank.d_ac).size()
                                ? (uio.l * bank.d_ac).cwiseAbs().maxCoeff()
                                : 0.0;
    detail::add_check(report, prefix + ".C4", "L D_ac = 0", gap_ldac <= 1e-9, gap_ldac);

    const double gap_lpdac = (filt.l_p * bank.d_ac).size()
                                 ? (filt.l_p * bank.d_ac).cwiseAbs().maxCoeff()
                                 : 0.0;
    detail::add_check(report, prefix + ".C5", "L_p D_ac = 0", gap_lpdac <= 1e-9, gap_lpdac);

    if (cat == Category::AA) {
      const double gap_kpda = (filt.k_p * aug.plant.d_a).size()
                                  ? (filt.k_p * aug.plant.d_a).cwiseAbs().maxCoeff()
                                  : 0.0;
      detail::add_check(report, "P1.C6", "K_p D_a = 0", gap_kpda <= 1e-9, gap_kpda);
    } else {
      const double gap_tpba = (filt.t_p * b_a_s).size()
                                  ? (filt.t_p * b_a_s).cwiseAbs().maxCoeff()
                                  : 0.0;
      detail::add_check(report, "P2.C6", "T_p B_a = 0", gap_tpba <= 1e-9, gap_tpba);
    }

    const bool left_inv = detail::left_invertible(uio.f, uio.l, aug.c);
    detail::add_check(report, prefix + ".C7", "(C, F, L) left invertible", left_inv,
                      left_inv ? 0.0 : 1.0);

    // Error-to-residual pencil: input is the category's attack injection.
    const Matrix gain_to_error = (cat == Category::AA) ? Matrix(filt.t_p * b_a_s)
                                                       : Matrix(filt.k_p * aug.plant.d_a);
    const ZeroSet zs = invariant_zeros(f_bar, gain_to_error, uio.l,
                                       detail::zero_d(uio.l.rows(), gain_to_error.cols()));
    detail::add_check(report, prefix + ".C8",
                      std::string("minimum phase: [sI - (F_p+L_p), -") +
                          (cat == Category::AA ? "T_p B_a" : "K_p D_a") + "; L, 0]",
                      zs.minimum_phase(1e-8), 0.0, zs.zeros);

    // Both products can be exact zeros carrying only rounding residue, so the
    // rank cutoffs must see the scale of their factors.
    const Index want = rank_with_scale(gain_to_error, filt.t_p.norm() * aug.plant.b_a_s().norm() +
                                                          filt.k_p.norm() * aug.plant.d_a.norm());
    const Index got = rank_with_scale(uio.l * gain_to_error, uio.l.norm() * gain_to_error.norm());
    detail::add_check(report, prefix + ".C9",
                      (cat == Category::AA) ? "rank(L T_p B_a) = rank(T_p B_a)"
                                            : "rank(L K_p D_a) = rank(K_p D_a)",
                      got == want, double(want - got));

    const bool stable = is_hurwitz(uio.f) && is_hurwitz(f_bar);
    detail::add_check(report, prefix + ".C10", "F and F_p + L_p Hurwitz", stable,
                      stable ? 0.0 : 1.0);
  }

  for (Category cat : {Category::AF, Category::SF}) {
    const std::string prefix = (cat == Category::AF) ? "P3" : "P4";
    const UIODetector& uio = bank.uio(cat);
    const SideFilter& filt = bank.side(cat);

    // Fault detectors decouple the other fault channel and keep their own
    // visible; the inter-filter path is disabled.
    detail::check_uio_structure(report, prefix, aug, uio, cat == Category::SF,
                                cat == Category::AF);

    const double l_gap = uio.l.size() ? uio.l.cwiseAbs().maxCoeff() : 0.0;
    detail::add_check(report, prefix + ".C4", "L = 0", l_gap <= 1e-12, l_gap);

    const bool stable = is_hurwitz(uio.f) && is_hurwitz(filt.f_p + filt.l_p);
    detail::add_check(report, prefix + ".C5", "F and F_p + L_p Hurwitz", stable,
                      stable ? 0.0 : 1.0);

    const Matrix& target = (cat == Category::AF) ? aug.f1 : aug.f2;
    const Index want = rank_tol(target);
    const Index got = rank_tol(uio.t * target);
    detail::add_check(report, prefix + ".C6",
                      (cat == Category::AF) ? "rank(T F1) = rank(F1)" : "rank(T F2) = rank(F2)",
                      got == want, double(want - got));
  }

  return report;
}

/* --------------------------- geometric computation ------------------------ */

// Largest controllability subspace of (f, b) inside Ker(l):
//   V_0 = Ker(l),  V_k = V_0 n f^-1(V_{k-1} + Im(b))
//   W_0 = Im(b),   W_k = W_0 + f (W_{k-1} n Ker(l))
// and R* = V n W*. Both recursions are monotone, so the ambient dimension
// bounds the number of strict steps.
inline SubspaceBasis controllability_subspace(const Matrix& f, const Matrix& b, const Matrix& l) {
  if (f.rows() != f.cols()) throw std::invalid_argument("controllability_subspace: f must be square");
  if (b.rows() != f.rows() || l.cols() != f.rows()) {
    throw std::invalid_argument("controllability_subspace: b and l must act on the state space");
  }
  const Index n = f.rows();
  const SubspaceBasis v0 = null_space_basis(l);
  const SubspaceBasis w0 = range_basis(b);

  SubspaceBasis v = v0;
  bool v_converged = false;
  for (Index k = 0; k <= n; ++k) {
    const SubspaceBasis next = subspace_intersect(v0, preimage(f, subspace_sum(v, w0)));
    if (subspace_equal(next, v)) {
      v_converged = true;
      break;
    }
    v = next;
  }
  if (!v_converged) {
    throw std::runtime_error("controllability_subspace: V recursion did not converge");
  }

  SubspaceBasis w = w0;
  bool w_converged = false;
  for (Index k = 0; k <= n; ++k) {
    const SubspaceBasis clipped = subspace_intersect(w, v0);
    const SubspaceBasis next = subspace_sum(w0, SubspaceBasis{range_basis(f * clipped.basis).basis});
    if (subspace_equal(next, w)) {
      w_converged = true;
      break;
    }
    w = next;
  }
  if (!w_converged) {
    throw std::runtime_error("controllability_subspace: W recursion did not converge");
  }

  return subspace_intersect(v, w);
}

/* ------------------------------- bank assembly ---------------------------- */

// Design all four detectors. The fault detectors reuse the attack-side
// filter parameters; with l = 0 the side filters do not influence their
// residuals.
inline DetectorBank design_bank(const AugmentedModel& aug, const Matrix& d_ac,
                                const DesignOptions& opts = {}) {
  const ValidationReport model_report = validate(aug);
  for (const auto& chk : model_report.checks) {
    if (!chk.pass) {
      throw DesignError("model validation failed: " + chk.name);
    }
  }
  if (rank_tol(d_ac) >= aug.dims.n) {
    throw DesignError(
        "link-attack signature covers the whole state space; rank(D_ac) < n is required");
  }

  DetectorBank bank;
  bank.d_ac = d_ac;
  const std::vector<Matrix> both{aug.f1, aug.f2};

  for (Category cat : {Category::AA, Category::SA}) {
    bool done = false;
    std::string last_error;
    for (int outer = 0; outer < opts.outer_retries && !done; ++outer) {
      const std::uint64_t seed = mix_seed(opts.seed, 97 + 13 * static_cast<std::uint64_t>(cat) +
                                                         static_cast<std::uint64_t>(outer));
      try {
        UIODetector uio = design_uio(aug, both, d_ac, opts.uio_poles, cat, seed, opts.retries);
        DesignOptions side_opts = opts;
        side_opts.seed = seed;
        SideFilter filt = design_plant_filter(aug, uio, d_ac, cat, side_opts);
        bank.uio(cat) = std::move(uio);
        bank.side(cat) = std::move(filt);
        done = true;
      } catch (const DesignError& err) {
        last_error = err.what();
      }
    }
    if (!done) {
      throw DesignError(std::string("design failed for ") + category_name(cat) + ": " +
                        last_error);
    }
  }

  bank.uio(Category::AF) =
      design_uio(aug, {aug.f2}, d_ac, opts.uio_poles, Category::AF, opts.seed, opts.retries);
  bank.uio(Category::SF) =
      design_uio(aug, {aug.f1}, d_ac, opts.uio_poles, Category::SF, opts.seed, opts.retries);
  bank.side(Category::AF) = bank.side(Category::AA);
  bank.side(Category::AF).category = Category::AF;
  bank.side(Category::SF) = bank.side(Category::AA);
  bank.side(Category::SF).category = Category::SF;

  const ConditionReport report = verify_conditions(bank, aug);
  if (!report.ok()) {
    std::string ids;
    for (const std::string& id : report.failing()) ids += (ids.empty() ? "" : ", ") + id;
    throw DesignError("designed bank fails conditions: " + ids);
  }
  return bank;
}

// Deliberately break the attack-sensitivity rank condition of the AA channel
// by confining t_p b_a to Ker(l): replaces the last rows of t_p with a basis
// of the left null space of b_s, so the attack image collapses onto
// coordinates the residual map never sees.
inline DetectorBank degrade_condition9(const DetectorBank& bank, const AugmentedModel& aug) {
  const Matrix b_a_s = aug.plant.b_a_s();
  const Index n = aug.dims.n;
  const SubspaceBasis left_null = null_space_basis(b_a_s.transpose());
  const Index k = left_null.dim();
  if (k == 0) {
    throw DesignError("cannot degrade: the attacked-input map has full row rank");
  }
  DetectorBank degraded = bank;
  Matrix t_p = bank.side(Category::AA).t_p;
  for (Index i = 0; i < k && i < n; ++i) {
    t_p.row(n - 1 - i) = left_null.basis.col(i).transpose();
  }
  degraded.side(Category::AA).t_p = t_p;
  return degraded;
}

}  // namespace cafdi
