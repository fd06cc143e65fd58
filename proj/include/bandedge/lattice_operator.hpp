#pragma once

#include <Eigen/Dense>

#include "bandedge/potential.hpp"

namespace bandedge {

/// Cell-centered grid on a K-supercell: per axis K_i * n nodes at
/// x_j = -1/2 + (j + 1/2) h, h = 1/n. Node j belongs to lattice site floor(j / n).
class CellGrid {
 public:
  static constexpr Eigen::Index kMaxNodes = 4096;

  CellGrid(int dimension, LatticeVector cell, int points_per_unit);
  static CellGrid unit(int dimension, int points_per_unit) {
    return CellGrid(dimension, LatticeVector(static_cast<std::size_t>(dimension), 1), points_per_unit);
  }

  int dimension() const { return dimension_; }
  const LatticeVector& cell() const { return cell_; }
  int points_per_unit() const { return n_; }
  double spacing() const { return 1.0 / n_; }
  int axis_points(int axis) const { return cell_[static_cast<std::size_t>(axis)] * n_; }
  Eigen::Index size() const { return size_; }
  /// Quadrature weight h^d.
  double cell_volume_element() const;

  Point node(Eigen::Index flat) const;
  LatticeVector node_site(Eigen::Index flat) const;
  /// node(flat) - node_site(flat), a point of C0.
  Point node_local(Eigen::Index flat) const;

  bool operator==(const CellGrid&) const = default;

 private:
  int dimension_;
  LatticeVector cell_;
  int n_;
  Eigen::Index size_;
};

using QuasiMomentum = Point;
using HermitianMatrix = Eigen::MatrixXcd;

/// Componentwise wrap of theta into [-pi/K_i, pi/K_i).
QuasiMomentum wrap_quasimomentum(const QuasiMomentum& theta, const LatticeVector& cell);

bool is_hermitian(const Eigen::MatrixXcd& m, double relative_tol = 1e-12);

/// Where the Bloch phase enters the discrete Laplacian. BoundaryPhase puts
/// e^{+-i theta_i K_i} on wrap-around links only (eigenvectors are the Bloch
/// functions themselves); PerLinkPhase puts e^{+-i theta_i h} on every link
/// (eigenvectors are the periodic parts). Both give the same spectrum.
enum class Gauge { BoundaryPhase, PerLinkPhase };

/// Everything that defines one periodic operator -Delta + W + lambda sum_g w_g f(. - g)
/// on a grid.
struct BlochModel {
  CellGrid grid;
  PeriodicBackground background;
  SingleSite site;
  double lambda;
  DisorderConfiguration config;

  /// Same model on a different grid (supercell or resolution change).
  BlochModel with_grid(CellGrid g) const;
  BlochModel with_lambda(double l) const;
  BlochModel with_config(DisorderConfiguration c) const;

  bool operator==(const BlochModel&) const = default;
};

/// Diagonal W(x_j) + lambda * w_{site(j)} * f(x_j - site(j)). The configuration
/// must be periodic with period dividing grid.cell, or boxed with box == grid.cell.
Eigen::VectorXd potential_diagonal(const CellGrid& grid, const PeriodicBackground& background,
                                   const SingleSite& site, double lambda,
                                   const DisorderConfiguration& config);

/// Finite-difference Bloch Hamiltonian with a precomputed potential diagonal.
HermitianMatrix bloch_hamiltonian(const CellGrid& grid, const Eigen::VectorXd& diagonal,
                                  const QuasiMomentum& theta, Gauge gauge = Gauge::BoundaryPhase);

HermitianMatrix assemble_bloch_hamiltonian(const CellGrid& grid, const PeriodicBackground& background,
                                           const SingleSite& site, double lambda,
                                           const DisorderConfiguration& config,
                                           const QuasiMomentum& theta,
                                           Gauge gauge = Gauge::BoundaryPhase);

inline HermitianMatrix assemble_bloch_hamiltonian(const BlochModel& model, const QuasiMomentum& theta,
                                                  Gauge gauge = Gauge::BoundaryPhase) {
  return assemble_bloch_hamiltonian(model.grid, model.background, model.site, model.lambda,
                                    model.config, theta, gauge);
}

/// Finite-difference Hamiltonian on a box of grid.cell unit cells with zero
/// Dirichlet data one spacing beyond the outermost nodes.
HermitianMatrix assemble_dirichlet_box(const CellGrid& grid, const PeriodicBackground& background,
                                       const SingleSite& site, double lambda,
                                       const DisorderConfiguration& config);

}  // namespace bandedge
