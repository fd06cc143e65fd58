#pragma once

// Dense Hermitian eigensolver.
//
// The matrix is symmetrized, reduced to a real symmetric tridiagonal matrix by
// Householder reflections followed by a diagonal phase rotation, and the
// tridiagonal problem is solved by implicit-shift QL. The partial solver
// eig_smallest_k reuses the reduction and recovers eigenvectors by inverse
// iteration on the tridiagonal matrix.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "bandedge/error.hpp"

namespace bandedge {

template <typename Real>
using ComplexMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using ComplexVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using RealVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

template <typename Real>
struct EigenDecomposition {
  RealVector<Real> values;       // nondecreasing
  ComplexMatrix<Real> vectors;   // orthonormal columns, vectors.col(i) pairs with values(i)

  Eigen::Index order() const { return vectors.rows(); }
  Eigen::Index size() const { return values.size(); }
};

struct EigenOptions {
  int max_iterations_per_value = 60;
  // Eigenvalues closer than this (relative to the Frobenius norm) form a
  // degenerate cluster whose vectors are re-orthonormalized together.
  double cluster_relative_gap = 1e-9;
};

namespace detail {

template <typename Real>
struct Tridiagonal {
  RealVector<Real> diagonal;
  RealVector<Real> off;        // off(i) couples i and i+1; off(n-1) == 0
  ComplexMatrix<Real> basis;   // unitary Z with Z^* M Z = T (empty when not requested)
};

template <typename Derived>
void check_input(const Eigen::MatrixBase<Derived>& m) {
  require(m.rows() == m.cols(), ErrorCode::SizeMismatch, "eigensolver input must be square");
  require(m.rows() > 0, ErrorCode::SizeMismatch, "eigensolver input must be nonempty");
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(std::real(m(i, j))) || !std::isfinite(std::imag(m(i, j)))) {
        std::ostringstream os;
        os << "entry (" << i << ", " << j << ") is not finite";
        fail(ErrorCode::NonFiniteEntry, os.str());
      }
}

template <typename Real>
Tridiagonal<Real> tridiagonalize(ComplexMatrix<Real> a, bool want_basis) {
  using Complex = std::complex<Real>;
  const Eigen::Index n = a.rows();
  ComplexMatrix<Real> q;
  if (want_basis) q = ComplexMatrix<Real>::Identity(n, n);

  for (Eigen::Index k = 0; k + 2 < n; ++k) {
    const Eigen::Index m = n - k - 1;
    ComplexVector<Real> v = a.col(k).tail(m);
    const Real xnorm = v.norm();
    if (xnorm == Real(0)) continue;
    const Complex alpha = v(0);
    const Real abs_alpha = std::abs(alpha);
    const Complex phase = abs_alpha == Real(0) ? Complex(1) : alpha / abs_alpha;
    const Complex beta = -phase * xnorm;
    v(0) -= beta;
    const Real tau = Real(2) / v.squaredNorm();

    auto block = a.bottomRightCorner(m, m);
    ComplexVector<Real> p = tau * (block * v);
    const Real half_k = Real(0.5) * tau * std::real(v.dot(p));
    ComplexVector<Real> w = p - half_k * v;
    block.noalias() -= v * w.adjoint() + w * v.adjoint();

    a.col(k).tail(m).setZero();
    a.row(k).tail(m).setZero();
    a(k + 1, k) = beta;
    a(k, k + 1) = std::conj(beta);

    if (want_basis) {
      auto cols = q.rightCols(m);
      ComplexVector<Real> qv = cols * v;
      cols.noalias() -= tau * qv * v.adjoint();
    }
  }

  Tridiagonal<Real> t;
  t.diagonal.resize(n);
  t.off = RealVector<Real>::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) t.diagonal(i) = std::real(a(i, i));

  // Rotate the complex subdiagonal onto the nonnegative reals:
  // D^* T D with d_{k+1} = d_k * e_k / |e_k|.
  std::vector<Complex> d(static_cast<std::size_t>(n), Complex(1));
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const Complex e = a(k + 1, k);
    const Real mag = std::abs(e);
    t.off(k) = mag;
    d[k + 1] = mag == Real(0) ? d[k] : d[k] * (e / mag);
  }
  if (want_basis) {
    for (Eigen::Index j = 0; j < n; ++j) q.col(j) *= d[j];
    t.basis = std::move(q);
  }
  return t;
}

// Implicit-shift QL on (diag, off). Rotations are applied to the columns of z
// when z is non-null. The diagonal/off updates do not depend on z, so the
// values-only and vector paths produce identical eigenvalues.
template <typename Real>
void ql_implicit(RealVector<Real>& diag, RealVector<Real>& off, ComplexMatrix<Real>* z,
                 int max_iterations) {
  const Eigen::Index n = diag.size();
  const Real eps = std::numeric_limits<Real>::epsilon();
  const Real tiny = std::numeric_limits<Real>::min();
  for (Eigen::Index l = 0; l < n; ++l) {
    int iter = 0;
    Eigen::Index m = l;
    do {
      for (m = l; m + 1 < n; ++m) {
        const Real dd = std::abs(diag(m)) + std::abs(diag(m + 1));
        if (std::abs(off(m)) <= eps * dd || std::abs(off(m)) < tiny) break;
      }
      if (m != l) {
        if (iter++ == max_iterations) {
          std::ostringstream os;
          os << "QL iteration did not converge for eigenvalue " << l << " after " << max_iterations
             << " sweeps; residual off-diagonal " << std::abs(off(l));
          fail(ErrorCode::ConvergenceFailure, os.str());
        }
        Real g = (diag(l + 1) - diag(l)) / (Real(2) * off(l));
        Real r = std::hypot(g, Real(1));
        g = diag(m) - diag(l) + off(l) / (g + std::copysign(r, g));
        Real s = 1, c = 1, p = 0;
        Eigen::Index i = m - 1;
        bool deflated = false;
        for (; i >= l; --i) {
          const Real f = s * off(i);
          const Real b = c * off(i);
          r = std::hypot(f, g);
          off(i + 1) = r;
          if (r == Real(0)) {
            diag(i + 1) -= p;
            off(m) = 0;
            deflated = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = diag(i + 1) - p;
          r = (diag(i) - g) * s + Real(2) * c * b;
          p = s * r;
          diag(i + 1) = g + p;
          g = c * r - b;
          if (z != nullptr) {
            ComplexVector<Real> upper = z->col(i + 1);
            z->col(i + 1) = s * z->col(i) + c * upper;
            z->col(i) = c * z->col(i) - s * upper;
          }
        }
        if (deflated) continue;
        diag(l) -= p;
        off(l) = g;
        off(m) = 0;
      }
    } while (m != l);
  }
}

template <typename Real>
std::vector<Eigen::Index> ascending_order(const RealVector<Real>& values) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return values(a) < values(b); });
  return idx;
}

template <typename Real>
void orthonormalize_columns(ComplexMatrix<Real>& v, Eigen::Index first, Eigen::Index last) {
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index j = first; j < last; ++j) {
      for (Eigen::Index i = first; i < j; ++i) v.col(j) -= v.col(i).dot(v.col(j)) * v.col(i);
      const Real nrm = v.col(j).norm();
      if (nrm > Real(0)) v.col(j) /= nrm;
    }
  }
}

template <typename Real>
void reorthonormalize_clusters(const RealVector<Real>& values, ComplexMatrix<Real>& vectors,
                               Real gap) {
  Eigen::Index start = 0;
  const Eigen::Index k = values.size();
  for (Eigen::Index i = 1; i <= k; ++i) {
    if (i == k || values(i) - values(i - 1) >= gap) {
      if (i - start > 1) orthonormalize_columns(vectors, start, i);
      start = i;
    }
  }
}

// Solves (T - shift) y = rhs for symmetric tridiagonal T by Gaussian
// elimination with partial pivoting; zero pivots are replaced by `floor`.
template <typename Real>
void tridiagonal_shifted_solve(const RealVector<Real>& diag, const RealVector<Real>& off,
                               Real shift, Real floor, ComplexVector<Real>& rhs) {
  const Eigen::Index n = diag.size();
  // Row i of U holds u0 (diagonal), u1, u2 (two superdiagonals after pivoting).
  RealVector<Real> u0(n), u1 = RealVector<Real>::Zero(n), u2 = RealVector<Real>::Zero(n);
  RealVector<Real> lower = RealVector<Real>::Zero(n);
  std::vector<bool> swapped(static_cast<std::size_t>(n), false);

  Real cur0 = diag(0) - shift;
  Real cur1 = n > 1 ? off(0) : Real(0);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const Real below0 = off(i);
    const Real below1 = diag(i + 1) - shift;
    const Real below2 = i + 2 < n ? off(i + 1) : Real(0);
    if (std::abs(cur0) >= std::abs(below0)) {
      if (cur0 == Real(0)) cur0 = floor;
      u0(i) = cur0;
      u1(i) = cur1;
      u2(i) = 0;
      const Real mult = below0 / cur0;
      lower(i) = mult;
      cur0 = below1 - mult * cur1;
      cur1 = below2;
    } else {
      swapped[i] = true;
      u0(i) = below0;
      u1(i) = below1;
      u2(i) = below2;
      const Real mult = cur0 / below0;
      lower(i) = mult;
      cur0 = cur1 - mult * below1;
      cur1 = -mult * below2;
    }
  }
  if (cur0 == Real(0)) cur0 = floor;
  u0(n - 1) = cur0;

  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    if (swapped[i]) std::swap(rhs(i), rhs(i + 1));
    rhs(i + 1) -= lower(i) * rhs(i);
  }
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    std::complex<Real> acc = rhs(i);
    if (i + 1 < n) acc -= u1(i) * rhs(i + 1);
    if (i + 2 < n) acc -= u2(i) * rhs(i + 2);
    rhs(i) = acc / u0(i);
  }
}

}  // namespace detail

/// Full eigendecomposition of a Hermitian matrix. The input is symmetrized as
/// (M + M^*)/2 before reduction.
template <typename Derived>
auto eig_hermitian(const Eigen::MatrixBase<Derived>& m, const EigenOptions& options = {})
    -> EigenDecomposition<typename Eigen::NumTraits<typename Derived::Scalar>::Real> {
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  detail::check_input(m);
  const ComplexMatrix<Real> a = m.template cast<std::complex<Real>>();
  const ComplexMatrix<Real> sym = Real(0.5) * (a + a.adjoint());
  const Real frob = sym.norm();

  auto t = detail::tridiagonalize<Real>(sym, true);
  detail::ql_implicit<Real>(t.diagonal, t.off, &t.basis, options.max_iterations_per_value);

  const auto order = detail::ascending_order(t.diagonal);
  EigenDecomposition<Real> out;
  const Eigen::Index n = sym.rows();
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = t.diagonal(order[i]);
    out.vectors.col(i) = t.basis.col(order[i]);
  }
  detail::reorthonormalize_clusters(out.values, out.vectors,
                                    static_cast<Real>(options.cluster_relative_gap) * frob);
  return out;
}

/// Sorted eigenvalues only; bitwise identical to eig_hermitian(m).values.
template <typename Derived>
auto hermitian_eigenvalues(const Eigen::MatrixBase<Derived>& m, const EigenOptions& options = {})
    -> RealVector<typename Eigen::NumTraits<typename Derived::Scalar>::Real> {
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  detail::check_input(m);
  const ComplexMatrix<Real> a = m.template cast<std::complex<Real>>();
  auto t = detail::tridiagonalize<Real>(Real(0.5) * (a + a.adjoint()), false);
  detail::ql_implicit<Real>(t.diagonal, t.off, nullptr, options.max_iterations_per_value);
  std::sort(t.diagonal.data(), t.diagonal.data() + t.diagonal.size());
  return t.diagonal;
}

/// Sorted eigenvalues of the real symmetric tridiagonal matrix with the given
/// diagonal and first off-diagonal, by the same QL sweep.
template <typename Real>
RealVector<Real> tridiagonal_eigenvalues(RealVector<Real> diag, const RealVector<Real>& off,
                                         const EigenOptions& options = {}) {
  require(diag.size() > 0 && off.size() + 1 == diag.size(), ErrorCode::SizeMismatch,
          "off-diagonal must have one entry fewer than the diagonal");
  require(diag.allFinite() && off.allFinite(), ErrorCode::NonFiniteEntry, "tridiagonal matrix has non-finite entries");
  RealVector<Real> e = RealVector<Real>::Zero(diag.size());
  e.head(off.size()) = off;
  detail::ql_implicit<Real>(diag, e, nullptr, options.max_iterations_per_value);
  std::sort(diag.data(), diag.data() + diag.size());
  return diag;
}

/// The k smallest eigenpairs. Eigenvalues come from the same QL sweep as the
/// full solver; eigenvectors from inverse iteration on the tridiagonal form,
/// orthogonalized within clusters of close eigenvalues, then mapped back.
template <typename Derived>
auto eig_smallest_k(const Eigen::MatrixBase<Derived>& m, Eigen::Index k,
                    const EigenOptions& options = {})
    -> EigenDecomposition<typename Eigen::NumTraits<typename Derived::Scalar>::Real> {
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  using Complex = std::complex<Real>;
  detail::check_input(m);
  const Eigen::Index n = m.rows();
  require(k >= 1 && k <= n, ErrorCode::InvalidArgument, "eig_smallest_k requires 1 <= k <= N");

  const ComplexMatrix<Real> a = m.template cast<Complex>();
  const ComplexMatrix<Real> sym = Real(0.5) * (a + a.adjoint());
  const Real frob = sym.norm();
  auto t = detail::tridiagonalize<Real>(sym, true);

  RealVector<Real> diag = t.diagonal;
  RealVector<Real> off = t.off;
  detail::ql_implicit<Real>(diag, off, nullptr, options.max_iterations_per_value);
  std::sort(diag.data(), diag.data() + n);

  Real tnorm = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    tnorm = std::max(tnorm, std::abs(t.diagonal(i)) + t.off(i) + (i > 0 ? t.off(i - 1) : Real(0)));
  const Real eps = std::numeric_limits<Real>::epsilon();
  const Real floor = std::max(eps * tnorm, std::numeric_limits<Real>::min());
  const Real cluster_gap = Real(1e-3) * tnorm;

  ComplexMatrix<Real> y(n, k);
  Eigen::Index cluster_start = 0;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (j > 0 && diag(j) - diag(j - 1) >= cluster_gap) cluster_start = j;
    // Separate coincident shifts so that each solve sees a distinct pencil.
    Real shift = diag(j);
    if (j > cluster_start) {
      const Real prev = diag(j - 1);
      if (shift - prev < Real(10) * floor) shift = prev + Real(10) * floor;
    }
    ComplexVector<Real> v(n);
    for (Eigen::Index i = 0; i < n; ++i)
      v(i) = Complex(Real(1) + Real(0.5) * std::sin(Real(1 + i + 3 * j)), 0);
    for (int it = 0; it < 5; ++it) {
      for (Eigen::Index p = cluster_start; p < j; ++p) v -= y.col(p).dot(v) * y.col(p);
      v /= v.norm();
      detail::tridiagonal_shifted_solve<Real>(t.diagonal, t.off, shift, floor, v);
      for (Eigen::Index p = cluster_start; p < j; ++p) v -= y.col(p).dot(v) * y.col(p);
      v /= v.norm();
    }
    y.col(j) = v;
  }

  EigenDecomposition<Real> out;
  out.values = diag.head(k);
  out.vectors = t.basis * y;
  detail::reorthonormalize_clusters(out.values, out.vectors,
                                    static_cast<Real>(options.cluster_relative_gap) * frob);
  return out;
}

}  // namespace bandedge
