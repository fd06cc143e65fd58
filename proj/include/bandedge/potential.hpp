#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "bandedge/error.hpp"

namespace bandedge {

/// Spatial points and quasimomenta live in R^d with d <= 2.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2, 1>;

/// Integer lattice vector (periods, box sizes, sites).
using LatticeVector = std::vector<int>;

/// amplitude * exp(-1 / (1 - r^2)), r = |x - center| / radius, zero for r >= 1.
struct Bump {
  Point center;
  double radius = 0.0;
  double amplitude = 0.0;

  double operator()(const Point& x) const;
  bool operator==(const Bump&) const = default;
};

/// Compactly supported single-site potential on the unit cell C0 = [-1/2, 1/2]^d.
class SingleSite {
 public:
  SingleSite(int dimension, std::vector<Bump> bumps);

  int dimension() const { return dimension_; }
  const std::vector<Bump>& bumps() const { return bumps_; }

  double operator()(const Point& x) const;
  double positive_part(const Point& x) const { return std::max((*this)(x), 0.0); }
  double negative_part(const Point& x) const { return std::min((*this)(x), 0.0); }

  /// Largest distance from the origin, per axis, reached by any bump support.
  double support_radius() const;

  /// c * f, built from rescaled bump amplitudes.
  SingleSite scaled(double factor) const;

  bool operator==(const SingleSite&) const = default;

 private:
  int dimension_;
  std::vector<Bump> bumps_;
};

/// Validates and assembles f from its bump list.
SingleSite build_single_site(const std::vector<Bump>& bumps, int dimension);

/// Midpoint rule for the integral of f over C0 with n cell-centered nodes per axis.
double cell_integral(const SingleSite& site, int points_per_axis);

/// One harmonic of a trigonometric polynomial:
/// cos_coef * cos(2 pi k.x) + sin_coef * sin(2 pi k.x).
struct FourierTerm {
  std::vector<int> wavevector;
  double cos_coef = 0.0;
  double sin_coef = 0.0;
  bool operator==(const FourierTerm&) const = default;
};

/// Z^d-periodic background W_per given as a trigonometric polynomial.
class PeriodicBackground {
 public:
  explicit PeriodicBackground(int dimension, double constant = 0.0, std::vector<FourierTerm> terms = {});

  static PeriodicBackground zero(int dimension) { return PeriodicBackground(dimension); }
  /// amplitude * cos(2 pi x) in d = 1, amplitude * cos(2 pi (k.x)) in general.
  static PeriodicBackground cosine(int dimension, double amplitude, std::vector<int> wavevector);

  int dimension() const { return dimension_; }
  double constant() const { return constant_; }
  const std::vector<FourierTerm>& terms() const { return terms_; }

  double operator()(const Point& x) const;

  PeriodicBackground shifted(double c) const;

  bool operator==(const PeriodicBackground&) const = default;

 private:
  int dimension_;
  double constant_;
  std::vector<FourierTerm> terms_;
};

struct CouplingBounds {
  double lower = 0.0;  // omega^-
  double upper = 1.0;  // omega^+
  bool contains(double w) const { return w >= lower && w <= upper; }
  bool operator==(const CouplingBounds&) const = default;
};

enum class ConfigKind { Constant, Periodic, Boxed };

/// Assignment of couplings to lattice sites. Periodic and constant
/// configurations are stored on their fundamental K-cell; boxed ones on the
/// box. Values are laid out row-major (last axis fastest).
class DisorderConfiguration {
 public:
  static DisorderConfiguration constant(int dimension, double value, CouplingBounds bounds);
  static DisorderConfiguration periodic(LatticeVector period, std::vector<double> values,
                                        CouplingBounds bounds);
  static DisorderConfiguration boxed(LatticeVector box, std::vector<double> values,
                                     CouplingBounds bounds);

  ConfigKind kind() const { return kind_; }
  int dimension() const { return static_cast<int>(extent_.size()); }
  /// Period (constant/periodic) or box size (boxed).
  const LatticeVector& extent() const { return extent_; }
  const std::vector<double>& values() const { return values_; }
  const CouplingBounds& bounds() const { return bounds_; }
  std::size_t site_count() const { return values_.size(); }

  /// Coupling at an arbitrary site; periodic kinds wrap, boxed kinds require
  /// the site to lie inside the box.
  double at(const LatticeVector& site) const;

  bool is_periodic() const { return kind_ != ConfigKind::Boxed; }
  bool is_constant_value(double w) const;

  /// Shifted views omega - omega^- and omega - omega^+.
  std::vector<double> shifted_from_lower() const;
  std::vector<double> shifted_from_upper() const;

  /// Translate of a periodic configuration by `shift` sites.
  DisorderConfiguration translated(const LatticeVector& shift) const;

  /// Least translate with respect to lexicographic order of the value tuple.
  DisorderConfiguration canonical() const;

  /// Boxed restriction to the leading sub-box.
  DisorderConfiguration restricted(const LatticeVector& box) const;

  bool operator==(const DisorderConfiguration&) const = default;

 private:
  DisorderConfiguration(ConfigKind kind, LatticeVector extent, std::vector<double> values,
                        CouplingBounds bounds);

  ConfigKind kind_;
  LatticeVector extent_;
  std::vector<double> values_;
  CouplingBounds bounds_;
};

/// Canonical ordering: lexicographic on the value tuple (a proper prefix comes
/// first), ties broken by the extent vector.
bool canonical_less(const DisorderConfiguration& a, const DisorderConfiguration& b);

struct EnumerationOptions {
  std::size_t cap = 1'000'000;
};

/// All periodic configurations over `alphabet` (a subset of the bounds) with
/// minimal period <= max_period per axis, one representative (the least
/// translate) per translation class, in canonical order.
std::vector<DisorderConfiguration> enumerate_periodic_configs(std::vector<double> alphabet,
                                                              const LatticeVector& max_period,
                                                              CouplingBounds bounds,
                                                              const EnumerationOptions& options = {});

/// Either a finite alphabet (uniform over its entries) or the uniform law on
/// the bounds interval.
using DisorderLaw = std::variant<std::vector<double>, CouplingBounds>;

DisorderConfiguration sample_random_config(std::uint64_t seed, const DisorderLaw& law,
                                           const LatticeVector& box, CouplingBounds bounds);

/// Flat row-major index of `site` inside `extent` (site must be in range).
std::size_t flat_index(const LatticeVector& site, const LatticeVector& extent);
LatticeVector unflatten(std::size_t index, const LatticeVector& extent);
std::size_t product(const LatticeVector& v);

}  // namespace bandedge
