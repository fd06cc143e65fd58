// Shared fixtures and independent reference computations for the test suites.
// Nothing here calls the library's solver or assembly code, so agreement with
// the library is a genuine cross-check.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "bandedge/coupling.hpp"
#include "bandedge/floquet.hpp"
#include "bandedge/lattice_operator.hpp"
#include "bandedge/potential.hpp"

namespace testing {

using namespace bandedge;

/// Error code thrown by fn; fails the test if nothing is thrown.
template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::logic_error("expected a bandedge::Error");
}

inline Point pt(double x) {
  Point p(1);
  p << x;
  return p;
}

inline Point pt(double x, double y) {
  Point p(2);
  p << x, y;
  return p;
}

inline CouplingBounds default_bounds() { return {1.0, 3.0}; }

/// Sign-changing single site with net positive weight on the ground state.
inline SingleSite default_site(double scale = 1.0) {
  return build_single_site({Bump{pt(-0.25), 0.15, 1.0 * scale}, Bump{pt(0.25), 0.15, -0.5 * scale}}, 1);
}

inline BlochModel default_model(int n = 32, double lambda = 0.0, double scale = 1.0) {
  return BlochModel{CellGrid::unit(1, n), PeriodicBackground::cosine(1, 1.0, {1}), default_site(scale), lambda,
                    DisorderConfiguration::constant(1, default_bounds().lower, default_bounds())};
}

inline BlochModel free_model(int n, const SingleSite& site) {
  return BlochModel{CellGrid::unit(1, n), PeriodicBackground::zero(1), site, 0.0,
                    DisorderConfiguration::constant(1, 0.0, CouplingBounds{0.0, 1.0})};
}

inline Eigen::MatrixXcd random_hermitian(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      if (i == j) {
        m(i, i) = g(rng);
      } else {
        m(i, j) = {g(rng), g(rng)};
        m(j, i) = std::conj(m(i, j));
      }
    }
  return m;
}

// ---------------------------------------------------------------------------
// Characteristic polynomial oracle: det(M - x I) by Gaussian elimination with
// partial pivoting, roots bracketed on a fine scan and bisected.

inline double char_poly(const Eigen::MatrixXcd& m, double x) {
  Eigen::MatrixXcd a = m;
  const Eigen::Index n = a.rows();
  for (Eigen::Index i = 0; i < n; ++i) a(i, i) -= x;
  std::complex<double> det = 1.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index p = k;
    for (Eigen::Index r = k + 1; r < n; ++r)
      if (std::abs(a(r, k)) > std::abs(a(p, k))) p = r;
    if (std::abs(a(p, k)) == 0.0) return 0.0;
    if (p != k) {
      a.row(p).swap(a.row(k));
      det = -det;
    }
    det *= a(k, k);
    for (Eigen::Index r = k + 1; r < n; ++r) {
      const std::complex<double> f = a(r, k) / a(k, k);
      for (Eigen::Index c = k; c < n; ++c) a(r, c) -= f * a(k, c);
    }
  }
  return det.real();
}

inline std::vector<double> char_poly_roots(const Eigen::MatrixXcd& m, int scan_points = 200000) {
  double bound = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) bound = std::max(bound, m.row(i).cwiseAbs().sum());
  bound += 1.0;
  std::vector<double> roots;
  double x0 = -bound, p0 = char_poly(m, x0);
  for (int s = 1; s <= scan_points; ++s) {
    const double x1 = -bound + 2.0 * bound * s / scan_points;
    const double p1 = char_poly(m, x1);
    if (p0 == 0.0) roots.push_back(x0);
    else if ((p0 < 0.0) != (p1 < 0.0)) {
      double lo = x0, hi = x1, plo = p0;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double pm = char_poly(m, mid);
        if ((pm < 0.0) == (plo < 0.0)) {
          lo = mid;
          plo = pm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    x0 = x1;
    p0 = p1;
  }
  return roots;
}

// ---------------------------------------------------------------------------
// Adaptive Simpson quadrature.

inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                           double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, b, fa, fm, fb, whole, tol, 60);
}

/// Closed-form bump written out again, independent of the library's Bump.
inline double bump_formula(double x, double center, double radius, double amplitude) {
  const double r = std::abs(x - center) / radius;
  return r < 1.0 ? amplitude * std::exp(-1.0 / (1.0 - r * r)) : 0.0;
}

// ---------------------------------------------------------------------------
// Necklace counts by brute force over all tuples (d = 1) or arrays (d = 2).

inline std::vector<int> least_rotation(std::vector<int> v) {
  std::vector<int> best = v;
  for (std::size_t s = 1; s < v.size(); ++s) {
    std::rotate(v.begin(), v.begin() + 1, v.end());
    best = std::min(best, v);
  }
  return best;
}

inline bool has_smaller_period(const std::vector<int>& v) {
  const std::size_t n = v.size();
  for (std::size_t p = 1; p < n; ++p) {
    if (n % p) continue;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) ok = v[i] == v[(i + p) % n];
    if (ok) return true;
  }
  return false;
}

inline std::size_t brute_force_necklaces(int letters, int max_period) {
  std::set<std::vector<int>> classes;
  for (int len = 1; len <= max_period; ++len) {
    std::vector<int> t(static_cast<std::size_t>(len), 0);
    for (;;) {
      if (!has_smaller_period(t)) classes.insert(least_rotation(t));
      int i = len - 1;
      while (i >= 0 && ++t[static_cast<std::size_t>(i)] == letters) t[static_cast<std::size_t>(i--)] = 0;
      if (i < 0) break;
    }
  }
  return classes.size();
}

/// d = 2: arrays of extent (p, q) <= (P, Q) whose minimal rectangular period
/// is exactly (p, q), counted up to 2-d translation.
inline std::size_t brute_force_necklaces_2d(int letters, int max_p, int max_q) {
  std::set<std::pair<std::pair<int, int>, std::vector<int>>> classes;
  for (int p = 1; p <= max_p; ++p)
    for (int q = 1; q <= max_q; ++q) {
      const int n = p * q;
      std::vector<int> t(static_cast<std::size_t>(n), 0);
      auto at = [&](const std::vector<int>& v, int i, int j) {
        return v[static_cast<std::size_t>(((i % p + p) % p) * q + ((j % q + q) % q))];
      };
      for (;;) {
        bool minimal = true;
        for (int pp = 1; pp <= p && minimal; ++pp)
          for (int qq = 1; qq <= q && minimal; ++qq) {
            if (p % pp || q % qq || (pp == p && qq == q)) continue;
            bool periodic = true;
            for (int i = 0; i < p && periodic; ++i)
              for (int j = 0; j < q && periodic; ++j) periodic = at(t, i, j) == at(t, i % pp, j % qq);
            if (periodic) minimal = false;
          }
        if (minimal) {
          std::vector<int> best = t;
          for (int si = 0; si < p; ++si)
            for (int sj = 0; sj < q; ++sj) {
              std::vector<int> s(t.size());
              for (int i = 0; i < p; ++i)
                for (int j = 0; j < q; ++j) s[static_cast<std::size_t>(i * q + j)] = at(t, i + si, j + sj);
              best = std::min(best, s);
            }
          classes.insert({{p, q}, best});
        }
        int i = n - 1;
        while (i >= 0 && ++t[static_cast<std::size_t>(i)] == letters) t[static_cast<std::size_t>(i--)] = 0;
        if (i < 0) break;
      }
    }
  return classes.size();
}

// ---------------------------------------------------------------------------
// Per-link gauge Bloch Hamiltonian in d = 1, written from scratch: the phase
// e^{i theta h} sits on every forward link, acting on the periodic part.

inline Eigen::MatrixXcd per_link_hamiltonian_1d(int nodes, double h, const Eigen::VectorXd& potential,
                                                double theta) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(nodes, nodes);
  const std::complex<double> hop = -std::exp(std::complex<double>(0.0, theta * h)) / (h * h);
  for (int j = 0; j < nodes; ++j) {
    m(j, j) += 2.0 / (h * h) + potential(j);
    const int k = (j + 1) % nodes;
    m(j, k) += hop;
    m(k, j) += std::conj(hop);
  }
  return m;
}

/// Sorted spectrum by Eigen's own solver.
inline Eigen::VectorXd reference_eigenvalues(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

/// Free discrete dispersion at theta for n nodes per unit (lowest branch).
inline double free_discrete_e1(double theta, int n) {
  const double h = 1.0 / n;
  return (2.0 - 2.0 * std::cos(theta * h)) / (h * h);
}

}  // namespace testing
