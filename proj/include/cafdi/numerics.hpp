#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cafdi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Complex = std::complex<double>;
using Index = Eigen::Index;

// Relative singular-value cutoff shared by all rank-revealing operations.
inline constexpr double default_rank_tol = 1e-9;

// A synthesis step could not satisfy its conditions (rank, stability,
// zero-location) within its search budget.
struct DesignError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An attack construction is impossible against the given model or design.
struct AttackError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void check_finite(const Matrix& m, const char* name) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(name) + " contains non-finite entries");
  }
}

// Deterministic per-run seed derivation (splitmix64 over base ^ index).
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t k) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/* ----------------------------- rank and bases ----------------------------- */

// Numerical rank: number of singular values above tol * sigma_max.
template <typename Derived>
Index rank_tol(const Eigen::MatrixBase<Derived>& expr, double tol = default_rank_tol) {
  using Scalar = typename Derived::Scalar;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Dense m = expr;
  if (!m.allFinite()) throw std::invalid_argument("rank_tol input contains non-finite entries");
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::JacobiSVD<Dense> svd(m);
  const auto& sv = svd.singularValues();
  if (sv(0) == 0.0) return 0;
  const double cut = tol * sv(0);
  Index r = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) ++r;
  }
  return r;
}

// Linear subspace of R^n held as an orthonormal column basis (n x dim).
// dim == 0 encodes the zero subspace; the ambient dimension is basis.rows().
struct SubspaceBasis {
  Matrix basis;

  Index ambient_dim() const { return basis.rows(); }
  Index dim() const { return basis.cols(); }

  // Membership test against the orthogonal projector onto the subspace.
  bool contains(const Vector& x, double tol = 1e-8) const {
    if (x.size() != basis.rows()) {
      throw std::invalid_argument("contains: vector does not live in the ambient space");
    }
    const Vector residual = x - basis * (basis.transpose() * x);
    return residual.norm() <= tol * std::max(1.0, x.norm());
  }

  Matrix projector() const { return basis * basis.transpose(); }
};

inline SubspaceBasis zero_subspace(Index ambient) {
  return SubspaceBasis{Matrix::Zero(ambient, 0)};
}

inline SubspaceBasis full_subspace(Index ambient) {
  return SubspaceBasis{Matrix::Identity(ambient, ambient)};
}

// Orthonormal basis of Ker(m). A matrix with no rows annihilates nothing,
// so its kernel is the full column space.
// Rank with the cutoff taken against an external scale as well as the matrix
// itself. A product of O(1) factors that should vanish exactly still carries
// O(eps) rounding residue; a purely relative cutoff would promote that
// residue to full rank.
inline Index rank_with_scale(const Matrix& m, double scale, double tol = default_rank_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  const double cut = tol * std::max(scale, sv(0));
  if (cut <= 0.0) return 0;
  Index r = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) ++r;
  }
  return r;
}

inline SubspaceBasis null_space_basis(const Matrix& m, double tol = default_rank_tol) {
  check_finite(m, "null_space_basis input");
  if (m.cols() == 0) return SubspaceBasis{Matrix::Zero(0, 0)};
  if (m.rows() == 0) return full_subspace(m.cols());
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  Index r = 0;
  if (sv(0) > 0.0) {
    const double cut = tol * sv(0);
    for (Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > cut) ++r;
    }
  }
  return SubspaceBasis{svd.matrixV().rightCols(m.cols() - r)};
}

// Orthonormal basis of Im(m).
inline SubspaceBasis range_basis(const Matrix& m, double tol = default_rank_tol) {
  check_finite(m, "range_basis input");
  if (m.rows() == 0) return SubspaceBasis{Matrix::Zero(0, 0)};
  if (m.cols() == 0) return zero_subspace(m.rows());
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  Index r = 0;
  if (sv(0) > 0.0) {
    const double cut = tol * sv(0);
    for (Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > cut) ++r;
    }
  }
  return SubspaceBasis{svd.matrixU().leftCols(r)};
}

inline SubspaceBasis subspace_sum(const SubspaceBasis& a, const SubspaceBasis& b,
                                  double tol = default_rank_tol) {
  if (a.ambient_dim() != b.ambient_dim()) {
    throw std::invalid_argument("subspace_sum: ambient dimensions differ");
  }
  Matrix stacked(a.ambient_dim(), a.dim() + b.dim());
  stacked << a.basis, b.basis;
  return range_basis(stacked, tol);
}

inline SubspaceBasis subspace_intersect(const SubspaceBasis& a, const SubspaceBasis& b,
                                        double tol = default_rank_tol) {
  if (a.ambient_dim() != b.ambient_dim()) {
    throw std::invalid_argument("subspace_intersect: ambient dimensions differ");
  }
  if (a.dim() == 0 || b.dim() == 0) return zero_subspace(a.ambient_dim());
  Matrix stacked(a.ambient_dim(), a.dim() + b.dim());
  stacked << a.basis, -b.basis;
  const SubspaceBasis kernel = null_space_basis(stacked, tol);
  if (kernel.dim() == 0) return zero_subspace(a.ambient_dim());
  return range_basis(a.basis * kernel.basis.topRows(a.dim()), tol);
}

// Preimage f^{-1}(S) = Ker((I - P_S) f) where P_S projects onto S.
inline SubspaceBasis preimage(const Matrix& f, const SubspaceBasis& s,
                              double tol = default_rank_tol) {
  check_finite(f, "preimage map");
  if (s.ambient_dim() != f.rows()) {
    throw std::invalid_argument("preimage: subspace does not live in the codomain of f");
  }
  const Matrix complement = Matrix::Identity(f.rows(), f.rows()) - s.projector();
  const Matrix g = complement * f;
  // The projector carries O(eps) rounding, so g never vanishes exactly even
  // when f maps everything into s. A purely relative cutoff would promote
  // that residue to full rank; clip it against the scale of f instead.
  Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cut = std::max(sv.size() > 0 ? tol * sv(0) : 0.0,
                              1e-12 * std::max(1.0, f.norm()));
  Index r = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) ++r;
  }
  return SubspaceBasis{svd.matrixV().rightCols(g.cols() - r)};
}

inline bool subspace_equal(const SubspaceBasis& a, const SubspaceBasis& b, double tol = 1e-8) {
  if (a.ambient_dim() != b.ambient_dim() || a.dim() != b.dim()) return false;
  return (a.projector() - b.projector()).cwiseAbs().maxCoeff() <= tol;
}

// Moore-Penrose pseudo-inverse with a relative singular-value cutoff.
inline Matrix pseudo_inverse(const Matrix& m, double tol = default_rank_tol) {
  check_finite(m, "pseudo_inverse input");
  if (m.rows() == 0 || m.cols() == 0) return Matrix::Zero(m.cols(), m.rows());
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  Vector inv = Vector::Zero(sv.size());
  if (sv(0) > 0.0) {
    const double cut = tol * sv(0);
    for (Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > cut) inv(i) = 1.0 / sv(i);
    }
  }
  return svd.matrixV().leftCols(sv.size()) * inv.asDiagonal() *
         svd.matrixU().leftCols(sv.size()).transpose();
}

/* ------------------------------ invariant zeros --------------------------- */

// Invariant zeros of (a, b, c, d): points where the system pencil
// [sI - a, -b; c, d] drops below its normal rank.
struct ZeroSet {
  std::vector<Complex> zeros;
  Index normal_rank = 0;
  // The pencil never reaches min(rows, cols) rank; every point is a "zero",
  // so the zero list is meaningless and left empty.
  bool rank_deficient_everywhere = false;

  // A zero on or right of the -margin axis disqualifies minimum phase.
  bool minimum_phase(double margin = 1e-8) const {
    if (rank_deficient_everywhere) return false;
    for (const Complex& z : zeros) {
      if (z.real() > -margin) return false;
    }
    return true;
  }

  std::vector<double> real_zeros(double imag_tol = 1e-8) const {
    std::vector<double> out;
    for (const Complex& z : zeros) {
      if (std::abs(z.imag()) <= imag_tol * std::max(1.0, std::abs(z))) out.push_back(z.real());
    }
    return out;
  }
};

namespace detail {

inline ComplexMatrix system_pencil(const Matrix& a, const Matrix& b, const Matrix& c,
                                   const Matrix& d, Complex s) {
  const Index n = a.rows();
  ComplexMatrix p(n + c.rows(), n + b.cols());
  p.topLeftCorner(n, n) = s * ComplexMatrix::Identity(n, n) - a.cast<Complex>();
  p.topRightCorner(n, b.cols()) = -b.cast<Complex>();
  p.bottomLeftCorner(c.rows(), n) = c.cast<Complex>();
  p.bottomRightCorner(c.rows(), b.cols()) = d.cast<Complex>();
  return p;
}

// Rank with unit-norm column equilibration. At evaluation points of large
// magnitude the pencil's state columns dwarf the input columns; equilibration
// keeps rank decisions scale-free. A column whose norm is negligible against
// the largest column is zeroed rather than normalized: blowing a vanishing
// column back up to unit length would hide exactly the rank drop it carries.
inline Index equilibrated_rank(const ComplexMatrix& m, double tol) {
  if (m.size() == 0) return 0;
  Eigen::VectorXd norms(m.cols());
  for (Index j = 0; j < m.cols(); ++j) norms(j) = m.col(j).norm();
  const double max_norm = norms.maxCoeff();
  if (max_norm == 0.0) return 0;
  ComplexMatrix scaled = m;
  for (Index j = 0; j < scaled.cols(); ++j) {
    if (norms(j) <= tol * max_norm) {
      scaled.col(j).setZero();
    } else {
      scaled.col(j) /= norms(j);
    }
  }
  return rank_tol(scaled, tol);
}

inline void check_system_dims(const Matrix& a, const Matrix& b, const Matrix& c,
                              const Matrix& d) {
  if (a.rows() != a.cols()) throw std::invalid_argument("system matrix a must be square");
  if (b.rows() != a.rows()) throw std::invalid_argument("b row count must match a");
  if (c.cols() != a.rows()) throw std::invalid_argument("c column count must match a");
  if (d.rows() != c.rows() || d.cols() != b.cols()) {
    throw std::invalid_argument("d must be conformable with c and b");
  }
  check_finite(a, "a");
  check_finite(b, "b");
  check_finite(c, "c");
  check_finite(d, "d");
}

// Finite generalized eigenvalues of the real pair (m, e).
// Newton polish of a candidate root of det(s*e - m) = 0. The derivative of
// log det along s is tr((s*e - m)^{-1} e), so each step costs one LU. QZ
// candidates land ~1e-9 off the root, which is enough to hide the rank drop
// of a sensitive pencil from the zero filter; polishing removes the offset.
inline Complex polish_pencil_root(const Matrix& m, const Matrix& e, Complex s, int iters = 12) {
  const ComplexMatrix mc = m.cast<Complex>();
  const ComplexMatrix ec = e.cast<Complex>();
  for (int it = 0; it < iters; ++it) {
    const ComplexMatrix p = s * ec - mc;
    Eigen::PartialPivLU<ComplexMatrix> lu(p);
    const Complex tr = lu.solve(ec).trace();
    if (!std::isfinite(tr.real()) || !std::isfinite(tr.imag())) break;
    if (std::abs(tr) < 1e-300) break;
    const Complex step = Complex(1.0, 0.0) / tr;
    if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
    s -= step;
    if (std::abs(step) <= 1e-14 * std::max(1.0, std::abs(s))) break;
  }
  return s;
}

inline std::vector<Complex> finite_gen_eigs(const Matrix& m, const Matrix& e) {
  Eigen::GeneralizedEigenSolver<Matrix> ges;
  ges.compute(m, e, false);
  std::vector<Complex> out;
  if (ges.info() != Eigen::Success) return out;
  const auto alphas = ges.alphas();
  const auto betas = ges.betas();
  for (Index i = 0; i < alphas.size(); ++i) {
    const double beta = betas(i);
    if (std::abs(beta) <= 1e-10 * std::max(1.0, std::abs(alphas(i)))) continue;
    const Complex s = alphas(i) / beta;
    if (std::isfinite(s.real()) && std::isfinite(s.imag()) && std::abs(s) < 1e8) {
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace detail

inline ZeroSet invariant_zeros(const Matrix& a, const Matrix& b, const Matrix& c,
                               const Matrix& d, double tol = default_rank_tol) {
  detail::check_system_dims(a, b, c, d);
  const Index n = a.rows();
  const Index rows = n + c.rows();
  const Index cols = n + b.cols();

  ZeroSet result;

  // Normal rank from random real evaluation points; a zero can hide at most
  // a measure-zero set of points, so the max over five draws is exact w.p. 1.
  std::mt19937_64 rng(0x5eed0c0ffeeULL);
  std::uniform_real_distribution<double> draw(-10.0, 10.0);
  std::vector<double> points;
  for (int i = 0; i < 5; ++i) points.push_back(draw(rng));
  Index normal_rank = 0;
  for (double s : points) {
    normal_rank = std::max(
        normal_rank,
        detail::equilibrated_rank(detail::system_pencil(a, b, c, d, Complex(s, 0.0)), tol));
  }
  result.normal_rank = normal_rank;
  if (normal_rank < std::min(rows, cols)) {
    result.rank_deficient_everywhere = true;
    return result;
  }
  if (normal_rank == 0) {
    result.rank_deficient_everywhere = true;
    return result;
  }

  // The pencil is s*E - M with E = diag(I, 0); its finite eigenvalues are
  // zero candidates. A rectangular or rank-deficient pencil is first
  // compressed by random projections, which preserves the finite spectrum
  // with probability one; spurious candidates are removed by the rank test.
  Matrix m(rows, cols), e(rows, cols);
  m.setZero();
  e.setZero();
  m.topLeftCorner(n, n) = a;
  m.topRightCorner(n, b.cols()) = b;
  m.bottomLeftCorner(c.rows(), n) = -c;
  m.bottomRightCorner(c.rows(), b.cols()) = -d;
  e.topLeftCorner(n, n) = Matrix::Identity(n, n);

  std::vector<Complex> candidates;
  const auto harvest = [&candidates](const Matrix& mc, const Matrix& ec) {
    for (const Complex& z : detail::finite_gen_eigs(mc, ec)) {
      candidates.push_back(detail::polish_pencil_root(mc, ec, z));
    }
  };
  if (rows == cols) {
    harvest(m, e);
  } else {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int attempt = 0; attempt < 2; ++attempt) {
      Matrix w1(normal_rank, rows), w2(cols, normal_rank);
      for (Index i = 0; i < w1.size(); ++i) w1.data()[i] = gauss(rng);
      for (Index i = 0; i < w2.size(); ++i) w2.data()[i] = gauss(rng);
      harvest(w1 * m * w2, w1 * e * w2);
    }
  }

  // True zeros cannot outgrow the pencil's entry scale by anything like this
  // factor; compression artifacts can.
  const double scale_cap = 1e6 * (1.0 + m.cwiseAbs().maxCoeff());

  std::vector<Complex> zeros;
  for (const Complex& s : candidates) {
    if (std::abs(s) > scale_cap) continue;
    if (detail::equilibrated_rank(detail::system_pencil(a, b, c, d, s), tol) < normal_rank) {
      zeros.push_back(s);
    }
  }

  // Cluster duplicates and snap near-real zeros onto the axis.
  std::sort(zeros.begin(), zeros.end(), [](const Complex& x, const Complex& y) {
    if (x.real() != y.real()) return x.real() < y.real();
    return x.imag() < y.imag();
  });
  std::vector<Complex> unique;
  for (const Complex& z : zeros) {
    Complex v = z;
    if (std::abs(v.imag()) <= 1e-8 * std::max(1.0, std::abs(v))) v = Complex(v.real(), 0.0);
    bool dup = false;
    for (const Complex& u : unique) {
      if (std::abs(u - v) <= 1e-6 * std::max(1.0, std::abs(u))) {
        dup = true;
        break;
      }
    }
    if (!dup) unique.push_back(v);
  }

  // Enforce conjugate closure.
  std::vector<Complex> closed = unique;
  for (const Complex& z : unique) {
    if (z.imag() == 0.0) continue;
    const Complex zc = std::conj(z);
    bool found = false;
    for (const Complex& u : closed) {
      if (std::abs(u - zc) <= 1e-6 * std::max(1.0, std::abs(zc))) {
        found = true;
        break;
      }
    }
    if (!found) closed.push_back(zc);
  }
  std::sort(closed.begin(), closed.end(), [](const Complex& x, const Complex& y) {
    if (x.real() != y.real()) return x.real() < y.real();
    return x.imag() < y.imag();
  });
  result.zeros = std::move(closed);
  return result;
}

// Right null direction (state; input) of the system pencil at s = z.
// Returns nothing when the pencil keeps full column rank at z.
struct ZeroDirection {
  Complex zero;
  ComplexVector state;
  ComplexVector input;
};

inline std::optional<ZeroDirection> zero_direction(const Matrix& a, const Matrix& b,
                                                   const Matrix& c, const Matrix& d, Complex z,
                                                   double tol = 1e-6) {
  detail::check_system_dims(a, b, c, d);
  const ComplexMatrix p = detail::system_pencil(a, b, c, d, z);
  Eigen::JacobiSVD<ComplexMatrix> svd(p, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const Index last = sv.size() - 1;
  if (p.rows() >= p.cols() && sv(last) > tol * std::max(1.0, sv(0))) return std::nullopt;
  ComplexVector v = svd.matrixV().col(p.cols() - 1);
  ZeroDirection dir;
  dir.zero = z;
  dir.state = v.head(a.rows());
  dir.input = v.tail(b.cols());
  return dir;
}

// Real null direction for a real zero: the complex direction is rotated by
// the phase of its largest entry; fails if a genuinely complex direction
// remains.
inline std::optional<std::pair<Vector, Vector>> real_zero_direction(
    const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& d, double z,
    double tol = 1e-6) {
  auto dir = zero_direction(a, b, c, d, Complex(z, 0.0), tol);
  if (!dir) return std::nullopt;
  ComplexVector v(dir->state.size() + dir->input.size());
  v << dir->state, dir->input;
  Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  const Complex phase = v(imax) / std::abs(v(imax));
  v /= phase;
  if (v.imag().norm() > 1e-6 * v.norm()) return std::nullopt;
  const Vector rv = v.real();
  return std::make_pair(Vector(rv.head(dir->state.size())), Vector(rv.tail(dir->input.size())));
}

/* ------------------------------ spectra, gains ---------------------------- */

// True when every eigenvalue satisfies Re(lambda) < -margin.
inline bool is_hurwitz(const Matrix& a, double margin = 0.0) {
  if (a.rows() != a.cols()) throw std::invalid_argument("is_hurwitz: matrix must be square");
  check_finite(a, "is_hurwitz input");
  if (a.rows() == 0) return true;
  Eigen::EigenSolver<Matrix> es(a, false);
  return es.eigenvalues().real().maxCoeff() < -margin;
}

inline std::vector<Complex> eigenvalues_of(const Matrix& a) {
  Eigen::EigenSolver<Matrix> es(a, false);
  std::vector<Complex> out(a.rows());
  for (Index i = 0; i < a.rows(); ++i) out[i] = es.eigenvalues()(i);
  std::sort(out.begin(), out.end(), [](const Complex& x, const Complex& y) {
    if (x.real() != y.real()) return x.real() < y.real();
    return x.imag() < y.imag();
  });
  return out;
}

// Greedy nearest matching distance between two equal-length spectra.
inline double spectrum_distance(std::vector<Complex> a, std::vector<Complex> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (const Complex& x : a) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t jbest = 0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double dist = std::abs(x - b[j]);
      if (dist < best) {
        best = dist;
        jbest = j;
      }
    }
    worst = std::max(worst, best);
    b.erase(b.begin() + static_cast<std::ptrdiff_t>(jbest));
  }
  return worst;
}

namespace detail {

// Real block-diagonal matrix carrying the requested spectrum; conjugate
// pairs become 2x2 rotation blocks. Requires a conjugate-closed list.
inline Matrix real_spectrum_block(const std::vector<Complex>& poles) {
  const Index n = static_cast<Index>(poles.size());
  std::vector<Complex> pending = poles;
  Matrix lambda = Matrix::Zero(n, n);
  Index at = 0;
  while (!pending.empty()) {
    const Complex z = pending.front();
    pending.erase(pending.begin());
    if (std::abs(z.imag()) <= 1e-12 * std::max(1.0, std::abs(z))) {
      lambda(at, at) = z.real();
      at += 1;
      continue;
    }
    bool found = false;
    for (std::size_t j = 0; j < pending.size(); ++j) {
      if (std::abs(pending[j] - std::conj(z)) <= 1e-9 * std::max(1.0, std::abs(z))) {
        pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(j));
        found = true;
        break;
      }
    }
    if (!found) throw std::invalid_argument("pole list is not conjugate-closed");
    lambda(at, at) = z.real();
    lambda(at, at + 1) = z.imag();
    lambda(at + 1, at) = -z.imag();
    lambda(at + 1, at + 1) = z.real();
    at += 2;
  }
  return lambda;
}

// Output-injection gain for an observable pair by eigenstructure assignment:
// on the dual system, solve the Sylvester equation a' x - x lambda = c' g for
// a random g, giving k' = g x^{-1} with spectrum(a' - c' k') = spectrum(lambda).
// The Sylvester equation needs spec(a) and the targets disjoint, so retries
// first shift the spectrum with a small random preliminary injection k0;
// unlike a rank-one Ackermann projection this keeps gain magnitudes moderate.
inline Matrix place_full_observable(const Matrix& a, const Matrix& c,
                                    const std::vector<Complex>& poles, std::mt19937_64& rng) {
  const Index n = a.rows();
  const Index p = c.rows();
  const Matrix lambda = real_spectrum_block(poles);
  const Matrix g_in = c.transpose();
  double scale = 1.0;
  for (const Complex& z : poles) scale = std::max(scale, std::abs(z));

  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int attempt = 0; attempt < 64; ++attempt) {
    Matrix k0 = Matrix::Zero(n, p);
    if (attempt > 0) {
      for (Index i = 0; i < k0.size(); ++i) k0.data()[i] = gauss(rng);
    }
    const Matrix f = (a - k0 * c).transpose();

    // vec form of f x - x lambda = g_in g: (I (x) f - lambda' (x) I) vec(x).
    Matrix sylvester(n * n, n * n);
    sylvester.setZero();
    for (Index j = 0; j < n; ++j) {
      sylvester.block(j * n, j * n, n, n) = f;
      for (Index i = 0; i < n; ++i) {
        sylvester.block(j * n, i * n, n, n) -=
            lambda(i, j) * Matrix::Identity(n, n);
      }
    }
    const auto solver = sylvester.partialPivLu();

    Matrix g(p, n);
    for (Index i = 0; i < g.size(); ++i) g.data()[i] = gauss(rng);
    Matrix rhs = g_in * g;
    Vector vec_rhs(n * n);
    for (Index j = 0; j < n; ++j) vec_rhs.segment(j * n, n) = rhs.col(j);
    const Vector vec_x = solver.solve(vec_rhs);
    Matrix x(n, n);
    for (Index j = 0; j < n; ++j) x.col(j) = vec_x.segment(j * n, n);
    if (!x.allFinite() || rank_tol(x, 1e-10) < n) continue;
    const Matrix k_dual = x.transpose().partialPivLu().solve(g.transpose()).transpose();
    if (!k_dual.allFinite()) continue;
    const Matrix gain = k0 + k_dual.transpose();
    const double err = spectrum_distance(eigenvalues_of(a - gain * c), poles);
    if (err <= 1e-6 * scale) return gain;
  }
  throw DesignError("pole placement failed: conditioning did not allow the requested spectrum");
}

}  // namespace detail

// Gain K with eig(a - K c) at the requested locations. Unobservable modes
// are detected through the observability staircase: each one stays fixed,
// consumes the nearest requested pole, and must already be stable.
inline Matrix place_observer_gain(const Matrix& a, const Matrix& c,
                                  const std::vector<Complex>& poles) {
  if (a.rows() != a.cols()) throw std::invalid_argument("place_observer_gain: a must be square");
  if (c.cols() != a.rows()) throw std::invalid_argument("place_observer_gain: c columns must match a");
  check_finite(a, "a");
  check_finite(c, "c");
  const Index n = a.rows();
  if (static_cast<Index>(poles.size()) != n) {
    throw std::invalid_argument("place_observer_gain: pole count must equal the state dimension");
  }
  std::mt19937_64 rng(0x9bde7a3ULL);
  Matrix obs(n * c.rows(), n);
  Matrix block = c;
  for (Index k = 0; k < n; ++k) {
    obs.middleRows(k * c.rows(), c.rows()) = block;
    block = block * a;
  }
  const SubspaceBasis unobs = null_space_basis(obs);
  const Index r = n - unobs.dim();
  if (r == n) {
    return detail::place_full_observable(a, c, poles, rng);
  }

  const SubspaceBasis observable_part = null_space_basis(unobs.basis.transpose());
  Matrix t(n, n);
  t << observable_part.basis, unobs.basis;
  const Matrix at = t.transpose() * a * t;
  const Matrix a11 = at.topLeftCorner(r, r);
  const Matrix a22 = at.bottomRightCorner(n - r, n - r);
  const Matrix c1 = (c * t).leftCols(r);

  std::vector<Complex> remaining = poles;
  for (const Complex& mode : eigenvalues_of(a22)) {
    if (mode.real() >= 0.0) {
      throw DesignError("unobservable mode at " + std::to_string(mode.real()) +
                        (mode.imag() != 0.0 ? " +- " + std::to_string(std::abs(mode.imag())) + "i"
                                            : std::string()) +
                        " is not stable; the pair is not detectable");
    }
    std::size_t jbest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < remaining.size(); ++j) {
      const double dist = std::abs(mode - remaining[j]);
      if (dist < best) {
        best = dist;
        jbest = j;
      }
    }
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(jbest));
  }

  Matrix gain = Matrix::Zero(n, c.rows());
  if (r > 0) {
    const Matrix k1 = detail::place_full_observable(a11, c1, remaining, rng);
    Matrix stacked = Matrix::Zero(n, c.rows());
    stacked.topRows(r) = k1;
    gain = t * stacked;
  }
  return gain;
}

inline Matrix place_observer_gain(const Matrix& a, const Matrix& c,
                                  const std::vector<double>& poles) {
  std::vector<Complex> cp(poles.size());
  for (std::size_t i = 0; i < poles.size(); ++i) cp[i] = Complex(poles[i], 0.0);
  return place_observer_gain(a, c, cp);
}

inline std::vector<Complex> default_observer_poles(Index n, double first = -2.0) {
  std::vector<Complex> out(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = Complex(first - double(i), 0.0);
  return out;
}

/* ------------------------------ discretization ---------------------------- */

// Exact zero-order-hold discretization via the augmented matrix exponential.
struct ZohPair {
  Matrix ad;
  Matrix bd;
};

inline ZohPair zoh_discretize(const Matrix& a, const Matrix& b, double dt) {
  if (a.rows() != a.cols()) throw std::invalid_argument("zoh_discretize: a must be square");
  if (b.rows() != a.rows()) throw std::invalid_argument("zoh_discretize: b rows must match a");
  if (!(dt > 0.0)) throw std::invalid_argument("zoh_discretize: dt must be positive");
  check_finite(a, "a");
  check_finite(b, "b");
  const Index n = a.rows();
  const Index m = b.cols();
  if (m == 0) {
    return ZohPair{(a * dt).exp(), Matrix::Zero(n, 0)};
  }
  Matrix aug = Matrix::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = a * dt;
  aug.topRightCorner(n, m) = b * dt;
  const Matrix e = aug.exp();
  return ZohPair{e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

}  // namespace cafdi
