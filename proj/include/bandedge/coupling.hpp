#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "bandedge/floquet.hpp"

namespace bandedge {

enum class Definiteness { PositiveDefinite, NegativeDefinite, Indefinite, NumericallySingular };

std::string_view to_string(Definiteness d);

/// A_{k,k'} = <f phi(., theta_k), phi(., theta_k')> over C0 with the grid
/// midpoint rule. Off-diagonal entries depend on the per-minimum phase
/// convention; the Hermitian-part spectrum and the class do not.
struct CouplingMatrix {
  Eigen::MatrixXcd entries;
  double lambda = 0.0;
  Definiteness definiteness = Definiteness::NumericallySingular;
  Eigen::VectorXd hermitian_eigenvalues;   // ascending
  std::vector<QuasiMomentum> points;
  double scale = 0.0;   // max_k of the integral of |f| |phi_k|^2, the yardstick for "zero"

  Eigen::Index order() const { return entries.rows(); }
};

Eigen::VectorXd hermitian_part_eigenvalues(const Eigen::MatrixXcd& a);

/// Eigenvalues of the Hermitian part within singular_tol * scale of zero count
/// as zero. scale <= 0 means the largest eigenvalue modulus.
Definiteness classify_definiteness(const Eigen::MatrixXcd& a, double singular_tol = 1e-8, double scale = 0.0);

CouplingMatrix coupling_matrix(const SingleSite& site, const MinimaSet& minima,
                               const std::vector<BlochState>& states, double singular_tol = 1e-8);

struct CouplingOptions {
  int n_theta = 129;
  MinimumSearchOptions search;
  double singular_tol = 1e-8;
};

/// Bands, minima, eigenfunctions and A for one unit-cell reference model.
CouplingMatrix coupling_for_model(const BlochModel& model, const CouplingOptions& options = {});

/// Which constant extreme configuration the scan perturbs around. Auto picks
/// omega^- when A(0) is positive-definite and omega^+ when negative-definite.
enum class ReferenceExtreme { Auto, Lower, Upper };

struct ThresholdEntry {
  double lambda = 0.0;
  CouplingMatrix coupling;
  double min_abs_eigenvalue = 0.0;
  double margin = 0.0;   // min eigenvalue (positive class) or -max eigenvalue (negative class)
};

struct ThresholdScan {
  std::vector<ThresholdEntry> entries;
  Definiteness class_at_zero = Definiteness::NumericallySingular;
  double reference_coupling = 0.0;   // omega used for the periodic reference operator
  double c0 = 0.0;                   // margin of A(0)
  double lambda0 = 0.0;              // largest ladder value with margin >= c0 / 2 all the way up
  double envelope_constant = 0.0;    // max over lambda > 0 of dist(A(lambda), A(0)) / lambda
  bool class_constant_to_lambda0 = true;
  bool order_change = false;         // m changed somewhere on the ladder
};

ThresholdScan lambda_threshold_scan(const BlochModel& base, const std::vector<double>& ladder,
                                    const CouplingOptions& options = {},
                                    ReferenceExtreme reference = ReferenceExtreme::Auto);

}  // namespace bandedge
