#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "bandedge/hermitian_eigen.hpp"
#include "bandedge/lattice_operator.hpp"

namespace bandedge {

/// Uniform tensor grid over the Brillouin zone of a K-supercell. Along axis i
/// the nodes are theta_j = (2 pi / K_i) (j - floor(N/2)) / N, j = 0..N-1, so
/// theta = 0 is always a node and the grid is closed under theta -> -theta
/// modulo the zone.
class ThetaGrid {
 public:
  ThetaGrid(int dimension, LatticeVector cell, int points_per_axis);

  int dimension() const { return dimension_; }
  const LatticeVector& cell() const { return cell_; }
  int points_per_axis() const { return n_; }
  Eigen::Index size() const { return size_; }
  double step(int axis) const;
  double max_step() const;

  QuasiMomentum at(Eigen::Index flat) const;
  /// Periodic neighbors (3^d - 1 of them, fewer if N is tiny).
  std::vector<Eigen::Index> neighbors(Eigen::Index flat) const;
  /// Index of the node that is the image of `flat` under theta -> -theta.
  Eigen::Index mirror(Eigen::Index flat) const;

  bool operator==(const ThetaGrid&) const = default;

 private:
  int dimension_;
  LatticeVector cell_;
  int n_;
  Eigen::Index size_;
};

/// Distance between quasimomenta on the torus of the given supercell.
double torus_distance(const QuasiMomentum& a, const QuasiMomentum& b, const LatticeVector& cell);

/// Spectra of one model at arbitrary quasimomenta, with the potential
/// diagonal assembled once.
class BandEvaluator {
 public:
  explicit BandEvaluator(BlochModel model);

  const BlochModel& model() const { return model_; }
  Eigen::VectorXd eigenvalues(const QuasiMomentum& theta) const;
  HermitianMatrix hamiltonian(const QuasiMomentum& theta) const;

 private:
  BlochModel model_;
  Eigen::VectorXd diagonal_;
};

struct BandStructure {
  ThetaGrid grid;
  Eigen::MatrixXd bands;             // bands(i, n) = E_{n+1}(theta_i), sorted per row
  std::optional<BlochModel> model;   // absent for externally supplied band data

  Eigen::Index band_count() const { return bands.cols(); }
  QuasiMomentum theta(Eigen::Index i) const { return grid.at(i); }
};

BandStructure compute_band_structure(const BlochModel& model, int n_theta, int n_bands);

/// Wraps raw samples (one row per grid node) as a band structure without a model.
BandStructure band_structure_from_data(ThetaGrid grid, Eigen::MatrixXd bands);

struct MinimumSearchOptions {
  double refine_tol = 1e-7;
  double merge_radius_steps = 3.0;
  double grouping_relative_tol = 1e-7;  // tolerance = this * (1 + |E_min|)
  double flat_fraction = 0.25;
  int max_iterations = 100;
  double min_stencil = 1e-4;
};

struct BandMinimum {
  QuasiMomentum theta;
  double energy = 0.0;
  Eigen::MatrixXd hessian;    // from the last local quadratic fit (theta units)
  double resolution = 0.0;    // a-priori error of `energy` w.r.t. the continuous infimum
  double second_band = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
};

struct MinimaSet {
  std::vector<BandMinimum> minima;
  double energy = 0.0;               // E_min
  double grouping_tolerance = 0.0;
  double merge_radius = 0.0;
  double resolution = 0.0;           // max over minima
  bool simple = true;                // E_2 - E_1 > 10 * grouping tolerance at every minimum
  std::optional<BlochModel> model;
  LatticeVector cell;

  std::size_t count() const { return minima.size(); }
};

/// Grid local minima, refined by iterated local quadratic fits, filtered to
/// the global minimum within the grouping tolerance and merged within the
/// merge radius. Throws FlatBandSuspected when too much of the grid sits at
/// the minimum.
MinimaSet find_band_minima(const BandStructure& band, const MinimumSearchOptions& options = {});

/// Refined lowest value of band 1 over the zone (no flatness or grouping logic).
BandMinimum lowest_band_minimum(const BandStructure& band, const MinimumSearchOptions& options = {});

/// Refinement of a single starting point; exposed for tests.
BandMinimum refine_minimum(const BandEvaluator& evaluator, const QuasiMomentum& start,
                           const Eigen::VectorXd& initial_step, const MinimumSearchOptions& options);

struct QuadraticFit {
  QuasiMomentum theta;
  Eigen::MatrixXd hessian;
  double min_hessian_eigenvalue = 0.0;
  double c_fit = 1.0;
  double delta = 0.0;
  std::size_t ball_points = 0;
};

struct QuadraticModel {
  std::vector<QuadraticFit> fits;
};

/// Least-squares quadratic fit of E_1 - E_min on the delta-ball around every
/// minimum and the smallest C with zeta / C <= E_1 - E_min <= C zeta there.
QuadraticModel quadratic_model(const BandStructure& band, const MinimaSet& minima, double delta,
                               double degeneracy_threshold = 1e-6);

struct BlochState {
  QuasiMomentum theta;
  int band = 1;
  double energy = 0.0;
  Eigen::VectorXcd values;   // grid function, h^d sum |phi|^2 = 1
  BlochModel model;
};

/// Normalized eigenfunction of band `band` at theta; the entry of largest
/// modulus (first one on ties) is made real and positive.
BlochState bloch_eigenfunction(const BlochModel& model, const QuasiMomentum& theta, int band = 1);

struct LambdaTrack {
  std::vector<double> ladder;
  std::vector<MinimaSet> sets;
  std::vector<double> displacement;   // per ladder entry, 0 at lambda = 0
  bool topology_change = false;
  std::vector<std::size_t> change_steps;
};

LambdaTrack track_minima_in_lambda(const BlochModel& model, const std::vector<double>& ladder,
                                   int n_theta, const MinimumSearchOptions& options = {});

}  // namespace bandedge
