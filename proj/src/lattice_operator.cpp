#include "bandedge/lattice_operator.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace bandedge {

CellGrid::CellGrid(int dimension, LatticeVector cell, int points_per_unit)
    : dimension_(dimension), cell_(std::move(cell)), n_(points_per_unit), size_(1) {
  require(dimension_ == 1 || dimension_ == 2, ErrorCode::IncompatibleDimensions, "grid dimension must be 1 or 2");
  require(static_cast<int>(cell_.size()) == dimension_, ErrorCode::IncompatibleDimensions,
          "grid cell vector has wrong dimension");
  require(n_ >= 4, ErrorCode::InvalidArgument, "points per unit cell must be >= 4");
  for (int k : cell_) {
    require(k >= 1, ErrorCode::InvalidArgument, "supercell periods must be >= 1");
    size_ *= static_cast<Eigen::Index>(k) * n_;
  }
  require(size_ <= kMaxNodes, ErrorCode::ExplosionGuard,
          "grid has " + std::to_string(size_) + " nodes, above the dense limit of " + std::to_string(kMaxNodes));
}

double CellGrid::cell_volume_element() const { return std::pow(spacing(), dimension_); }

Point CellGrid::node(Eigen::Index flat) const {
  Point x(dimension_);
  const double h = spacing();
  for (int a = dimension_ - 1; a >= 0; --a) {
    const Eigen::Index m = axis_points(a);
    const Eigen::Index j = flat % m;
    flat /= m;
    x(a) = -0.5 + (static_cast<double>(j) + 0.5) * h;
  }
  return x;
}

LatticeVector CellGrid::node_site(Eigen::Index flat) const {
  LatticeVector s(static_cast<std::size_t>(dimension_));
  for (int a = dimension_ - 1; a >= 0; --a) {
    const Eigen::Index m = axis_points(a);
    s[static_cast<std::size_t>(a)] = static_cast<int>((flat % m) / n_);
    flat /= m;
  }
  return s;
}

Point CellGrid::node_local(Eigen::Index flat) const {
  Point x(dimension_);
  const double h = spacing();
  for (int a = dimension_ - 1; a >= 0; --a) {
    const Eigen::Index m = axis_points(a);
    const Eigen::Index j = (flat % m) % n_;
    flat /= m;
    x(a) = -0.5 + (static_cast<double>(j) + 0.5) * h;
  }
  return x;
}

QuasiMomentum wrap_quasimomentum(const QuasiMomentum& theta, const LatticeVector& cell) {
  QuasiMomentum out = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double period = 2.0 * std::numbers::pi / cell[static_cast<std::size_t>(i)];
    double t = std::fmod(theta(i) + 0.5 * period, period);
    if (t < 0) t += period;
    out(i) = t - 0.5 * period;
  }
  return out;
}

bool is_hermitian(const Eigen::MatrixXcd& m, double relative_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = m.cwiseAbs().maxCoeff();
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= relative_tol * scale;
}

BlochModel BlochModel::with_grid(CellGrid g) const {
  BlochModel m = *this;
  m.grid = std::move(g);
  return m;
}

BlochModel BlochModel::with_lambda(double l) const {
  BlochModel m = *this;
  m.lambda = l;
  return m;
}

BlochModel BlochModel::with_config(DisorderConfiguration c) const {
  BlochModel m = *this;
  m.config = std::move(c);
  return m;
}

Eigen::VectorXd potential_diagonal(const CellGrid& grid, const PeriodicBackground& background,
                                   const SingleSite& site, double lambda,
                                   const DisorderConfiguration& config) {
  const int d = grid.dimension();
  require(background.dimension() == d && site.dimension() == d && config.dimension() == d,
          ErrorCode::IncompatibleDimensions, "grid, background, single site and configuration dimensions differ");
  require(lambda >= 0.0 && std::isfinite(lambda), ErrorCode::InvalidArgument, "lambda must be finite and >= 0");
  for (int a = 0; a < d; ++a) {
    const int k = config.extent()[static_cast<std::size_t>(a)];
    const int cell = grid.cell()[static_cast<std::size_t>(a)];
    if (config.kind() == ConfigKind::Boxed) {
      require(k == cell, ErrorCode::SizeMismatch, "boxed configuration does not match the grid box");
    } else {
      require(cell % k == 0, ErrorCode::PeriodMismatch,
              "configuration period " + std::to_string(k) + " does not divide supercell " + std::to_string(cell));
    }
  }

  Eigen::VectorXd diag(grid.size());
  for (Eigen::Index j = 0; j < grid.size(); ++j) {
    double v = background(grid.node(j));
    if (lambda != 0.0) v += lambda * config.at(grid.node_site(j)) * site(grid.node_local(j));
    diag(j) = v;
  }
  return diag;
}

namespace {

// Adds the -Delta stencil. `wrap` enables periodic links; `phase(axis, forward_wrap)`
// is the factor multiplying the forward hop along `axis`.
template <typename PhaseFn>
void add_laplacian(const CellGrid& grid, HermitianMatrix& m, bool wrap, PhaseFn&& phase) {
  const int d = grid.dimension();
  const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
  const Eigen::Index n = grid.size();
  for (Eigen::Index j = 0; j < n; ++j) m(j, j) += 2.0 * d * inv_h2;

  Eigen::Index stride = 1;
  for (int a = d - 1; a >= 0; --a) {
    const Eigen::Index len = grid.axis_points(a);
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Index coord = (j / stride) % len;
      Eigen::Index fwd;
      bool crosses = false;
      if (coord + 1 < len) {
        fwd = j + stride;
      } else {
        if (!wrap) continue;
        fwd = j - (len - 1) * stride;
        crosses = true;
      }
      const std::complex<double> hop = -inv_h2 * phase(a, crosses);
      m(j, fwd) += hop;
      m(fwd, j) += std::conj(hop);
    }
    stride *= len;
  }
}

}  // namespace

HermitianMatrix bloch_hamiltonian(const CellGrid& grid, const Eigen::VectorXd& diagonal,
                                  const QuasiMomentum& theta, Gauge gauge) {
  require(theta.size() == grid.dimension(), ErrorCode::IncompatibleDimensions,
          "quasimomentum has wrong dimension");
  require(diagonal.size() == grid.size(), ErrorCode::SizeMismatch, "diagonal size does not match the grid");
  HermitianMatrix m = HermitianMatrix::Zero(grid.size(), grid.size());
  const double h = grid.spacing();
  if (gauge == Gauge::BoundaryPhase) {
    // u_{j + K n e_a} = e^{i theta_a K_a} u_j: the forward hop from the last node
    // lands on the first node and picks up that phase.
    add_laplacian(grid, m, true, [&](int a, bool crosses) {
      if (!crosses) return std::complex<double>(1.0);
      return std::polar(1.0, theta(a) * grid.cell()[static_cast<std::size_t>(a)]);
    });
  } else {
    add_laplacian(grid, m, true, [&](int a, bool) { return std::polar(1.0, theta(a) * h); });
  }
  m.diagonal() += diagonal.cast<std::complex<double>>();
  return m;
}

HermitianMatrix assemble_bloch_hamiltonian(const CellGrid& grid, const PeriodicBackground& background,
                                           const SingleSite& site, double lambda,
                                           const DisorderConfiguration& config,
                                           const QuasiMomentum& theta, Gauge gauge) {
  require(config.is_periodic(), ErrorCode::PeriodMismatch, "Bloch assembly needs a periodic configuration");
  return bloch_hamiltonian(grid, potential_diagonal(grid, background, site, lambda, config), theta, gauge);
}

HermitianMatrix assemble_dirichlet_box(const CellGrid& grid, const PeriodicBackground& background,
                                       const SingleSite& site, double lambda,
                                       const DisorderConfiguration& config) {
  if (config.kind() == ConfigKind::Boxed) {
    require(config.extent() == grid.cell(), ErrorCode::SizeMismatch, "boxed configuration does not match the box");
  }
  const Eigen::VectorXd diag = potential_diagonal(grid, background, site, lambda, config);
  HermitianMatrix m = HermitianMatrix::Zero(grid.size(), grid.size());
  add_laplacian(grid, m, false, [](int, bool) { return std::complex<double>(1.0); });
  m.diagonal() += diag.cast<std::complex<double>>();
  return m;
}

}  // namespace bandedge
