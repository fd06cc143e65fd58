#include "bandedge/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "bandedge/parallel.hpp"

namespace bandedge {

// ---------------------------------------------------------------------------
// Theta grid

ThetaGrid::ThetaGrid(int dimension, LatticeVector cell, int points_per_axis)
    : dimension_(dimension), cell_(std::move(cell)), n_(points_per_axis), size_(1) {
  require(dimension_ == 1 || dimension_ == 2, ErrorCode::IncompatibleDimensions, "theta grid dimension must be 1 or 2");
  require(static_cast<int>(cell_.size()) == dimension_, ErrorCode::IncompatibleDimensions,
          "theta grid cell has wrong dimension");
  require(n_ >= 1, ErrorCode::InvalidArgument, "theta grid needs at least one point per axis");
  for (int i = 0; i < dimension_; ++i) size_ *= n_;
}

double ThetaGrid::step(int axis) const {
  return 2.0 * std::numbers::pi / (cell_[static_cast<std::size_t>(axis)] * n_);
}

double ThetaGrid::max_step() const {
  double s = 0.0;
  for (int a = 0; a < dimension_; ++a) s = std::max(s, step(a));
  return s;
}

QuasiMomentum ThetaGrid::at(Eigen::Index flat) const {
  QuasiMomentum t(dimension_);
  for (int a = dimension_ - 1; a >= 0; --a) {
    const Eigen::Index j = flat % n_;
    flat /= n_;
    t(a) = step(a) * static_cast<double>(j - n_ / 2);
  }
  return t;
}

std::vector<Eigen::Index> ThetaGrid::neighbors(Eigen::Index flat) const {
  std::vector<Eigen::Index> coords(static_cast<std::size_t>(dimension_));
  Eigen::Index rest = flat;
  for (int a = dimension_ - 1; a >= 0; --a) {
    coords[static_cast<std::size_t>(a)] = rest % n_;
    rest /= n_;
  }
  std::vector<Eigen::Index> out;
  const int combos = dimension_ == 1 ? 3 : 9;
  for (int c = 0; c < combos; ++c) {
    Eigen::Index idx = 0;
    bool self = true;
    for (int a = 0; a < dimension_; ++a) {
      const int off = (dimension_ == 1 ? c : (a == 0 ? c / 3 : c % 3)) - 1;
      if (off != 0) self = false;
      const Eigen::Index j = ((coords[static_cast<std::size_t>(a)] + off) % n_ + n_) % n_;
      idx = idx * n_ + j;
    }
    if (!self && idx != flat && std::find(out.begin(), out.end(), idx) == out.end()) out.push_back(idx);
  }
  return out;
}

Eigen::Index ThetaGrid::mirror(Eigen::Index flat) const {
  Eigen::Index idx = 0;
  Eigen::Index rest = flat;
  std::vector<Eigen::Index> coords(static_cast<std::size_t>(dimension_));
  for (int a = dimension_ - 1; a >= 0; --a) {
    coords[static_cast<std::size_t>(a)] = rest % n_;
    rest /= n_;
  }
  for (int a = 0; a < dimension_; ++a) {
    const Eigen::Index centered = coords[static_cast<std::size_t>(a)] - n_ / 2;
    const Eigen::Index j = ((-centered + n_ / 2) % n_ + n_) % n_;
    idx = idx * n_ + j;
  }
  return idx;
}

double torus_distance(const QuasiMomentum& a, const QuasiMomentum& b, const LatticeVector& cell) {
  return wrap_quasimomentum(a - b, cell).norm();
}

// ---------------------------------------------------------------------------
// Band evaluation

BandEvaluator::BandEvaluator(BlochModel model)
    : model_(std::move(model)),
      diagonal_(potential_diagonal(model_.grid, model_.background, model_.site, model_.lambda, model_.config)) {
  require(model_.config.is_periodic(), ErrorCode::PeriodMismatch, "band computations need a periodic configuration");
}

HermitianMatrix BandEvaluator::hamiltonian(const QuasiMomentum& theta) const {
  return bloch_hamiltonian(model_.grid, diagonal_, theta);
}

Eigen::VectorXd BandEvaluator::eigenvalues(const QuasiMomentum& theta) const {
  return hermitian_eigenvalues(hamiltonian(theta));
}

BandStructure compute_band_structure(const BlochModel& model, int n_theta, int n_bands) {
  require(n_theta >= 8, ErrorCode::InvalidArgument, "band structure needs N_theta >= 8");
  require(n_bands >= 1 && n_bands <= model.grid.size(), ErrorCode::InvalidArgument,
          "band count must lie in [1, N]");
  const BandEvaluator evaluator(model);
  ThetaGrid grid(model.grid.dimension(), model.grid.cell(), n_theta);
  const auto rows = parallel_map(static_cast<std::size_t>(grid.size()), [&](std::size_t i) {
    return Eigen::VectorXd(evaluator.eigenvalues(grid.at(static_cast<Eigen::Index>(i))).head(n_bands));
  });
  Eigen::MatrixXd bands(grid.size(), n_bands);
  for (std::size_t i = 0; i < rows.size(); ++i) bands.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return BandStructure{std::move(grid), std::move(bands), model};
}

BandStructure band_structure_from_data(ThetaGrid grid, Eigen::MatrixXd bands) {
  require(bands.rows() == grid.size(), ErrorCode::SizeMismatch, "band data rows must match the theta grid");
  require(bands.cols() >= 1, ErrorCode::InvalidArgument, "band data needs at least one band");
  return BandStructure{std::move(grid), std::move(bands), std::nullopt};
}

// ---------------------------------------------------------------------------
// Local quadratic fits

namespace {

struct QuadraticCoefficients {
  double constant = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

// y ~ c + g.dx + dx^T H dx / 2 in the least-squares sense.
QuadraticCoefficients fit_quadratic(const std::vector<Eigen::VectorXd>& offsets, const std::vector<double>& y) {
  const Eigen::Index d = offsets.front().size();
  const Eigen::Index unknowns = 1 + d + d * (d + 1) / 2;
  Eigen::MatrixXd a(static_cast<Eigen::Index>(offsets.size()), unknowns);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(offsets.size()));
  for (std::size_t r = 0; r < offsets.size(); ++r) {
    const auto& dx = offsets[r];
    const auto row = static_cast<Eigen::Index>(r);
    Eigen::Index col = 0;
    a(row, col++) = 1.0;
    for (Eigen::Index i = 0; i < d; ++i) a(row, col++) = dx(i);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = i; j < d; ++j) a(row, col++) = i == j ? 0.5 * dx(i) * dx(i) : dx(i) * dx(j);
    rhs(row) = y[r];
  }
  const Eigen::VectorXd x = a.colPivHouseholderQr().solve(rhs);
  QuadraticCoefficients q;
  q.constant = x(0);
  q.gradient = x.segment(1, d);
  q.hessian.resize(d, d);
  Eigen::Index col = 1 + d;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i; j < d; ++j) {
      q.hessian(i, j) = x(col);
      q.hessian(j, i) = x(col);
      ++col;
    }
  return q;
}

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& h) { return hermitian_eigenvalues(h); }

bool lex_less(const QuasiMomentum& a, const QuasiMomentum& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

}  // namespace

BandMinimum refine_minimum(const BandEvaluator& evaluator, const QuasiMomentum& start,
                           const Eigen::VectorXd& initial_step, const MinimumSearchOptions& options) {
  const auto& cell = evaluator.model().grid.cell();
  const Eigen::Index d = start.size();
  const int stencil_points = d == 1 ? 3 : 9;

  QuasiMomentum center = start;
  Eigen::VectorXd center_values = evaluator.eigenvalues(center);
  double best = center_values(0);
  Eigen::VectorXd step = initial_step;
  Eigen::MatrixXd hessian = Eigen::MatrixXd::Zero(d, d);
  double predicted = 0.0;
  int it = 0;

  for (; it < options.max_iterations; ++it) {
    std::vector<Eigen::VectorXd> offsets;
    std::vector<double> values;
    QuasiMomentum best_stencil = center;
    double best_stencil_value = best;
    for (int c = 0; c < stencil_points; ++c) {
      Eigen::VectorXd o(d);
      if (d == 1) {
        o(0) = c - 1;
      } else {
        o(0) = c / 3 - 1;
        o(1) = c % 3 - 1;
      }
      const Eigen::VectorXd dx = step.cwiseProduct(o);
      double e = best;
      if (o.cwiseAbs().sum() != 0.0) {
        e = evaluator.eigenvalues(center + dx)(0);
        if (e < best_stencil_value) {
          best_stencil_value = e;
          best_stencil = center + dx;
        }
      }
      offsets.push_back(dx);
      values.push_back(e - best);
    }
    const auto fit = fit_quadratic(offsets, values);
    hessian = fit.hessian;

    Eigen::VectorXd newton;
    const Eigen::VectorXd hev = symmetric_eigenvalues(fit.hessian);
    if (hev.minCoeff() > 0.0) {
      newton = -fit.hessian.ldlt().solve(fit.gradient);
      for (Eigen::Index i = 0; i < d; ++i) newton(i) = std::clamp(newton(i), -step(i), step(i));
      predicted = newton.norm();
      if (predicted < options.refine_tol && best_stencil_value >= best) break;
    } else {
      newton = best_stencil - center;
      predicted = newton.norm();
    }

    QuasiMomentum candidate = center + newton;
    double candidate_value = predicted > 0.0 ? evaluator.eigenvalues(candidate)(0) : best;
    if (best_stencil_value < candidate_value) {
      candidate = best_stencil;
      candidate_value = best_stencil_value;
    }
    if (candidate_value < best) {
      const Eigen::VectorXd move = candidate - center;
      center = candidate;
      best = candidate_value;
      for (Eigen::Index i = 0; i < d; ++i)
        step(i) = std::clamp(2.0 * std::abs(move(i)), options.min_stencil, step(i));
      if (move.norm() < options.refine_tol) break;
    } else {
      if (step.maxCoeff() <= options.min_stencil) break;
      for (Eigen::Index i = 0; i < d; ++i) step(i) = std::max(0.25 * step(i), options.min_stencil);
    }
  }

  BandMinimum out;
  out.theta = wrap_quasimomentum(center, cell);
  const Eigen::VectorXd final_values = evaluator.eigenvalues(center);
  out.energy = std::min(best, final_values(0));
  if (final_values.size() > 1) out.second_band = final_values(1);
  out.hessian = hessian;
  const double curvature = std::max(0.0, symmetric_eigenvalues(hessian).maxCoeff());
  out.resolution = 0.5 * curvature * predicted * predicted + 1e-12 * (1.0 + std::abs(out.energy));
  out.iterations = it;
  return out;
}

namespace {

std::vector<Eigen::Index> grid_local_minima(const BandStructure& band) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < band.grid.size(); ++i) {
    const double e = band.bands(i, 0);
    bool is_min = true;
    for (Eigen::Index j : band.grid.neighbors(i))
      if (band.bands(j, 0) < e) {
        is_min = false;
        break;
      }
    if (is_min) out.push_back(i);
  }
  return out;
}

std::vector<BandMinimum> refined_candidates(const BandStructure& band, const MinimumSearchOptions& options) {
  const auto starts = grid_local_minima(band);
  if (!band.model) {
    std::vector<BandMinimum> raw;
    for (Eigen::Index i : starts) {
      BandMinimum m;
      m.theta = band.theta(i);
      m.energy = band.bands(i, 0);
      if (band.band_count() > 1) m.second_band = band.bands(i, 1);
      m.hessian = Eigen::MatrixXd::Zero(band.grid.dimension(), band.grid.dimension());
      raw.push_back(std::move(m));
    }
    return raw;
  }
  const BandEvaluator evaluator(*band.model);
  Eigen::VectorXd step(band.grid.dimension());
  for (int a = 0; a < band.grid.dimension(); ++a) step(a) = band.grid.step(a);
  return parallel_map(starts.size(), [&](std::size_t k) {
    return refine_minimum(evaluator, band.theta(starts[k]), step, options);
  });
}

}  // namespace

BandMinimum lowest_band_minimum(const BandStructure& band, const MinimumSearchOptions& options) {
  auto candidates = refined_candidates(band, options);
  require(!candidates.empty(), ErrorCode::InvalidArgument, "band has no grid local minimum");
  auto best = std::min_element(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    if (a.energy != b.energy) return a.energy < b.energy;
    return lex_less(a.theta, b.theta);
  });
  return *best;
}

MinimaSet find_band_minima(const BandStructure& band, const MinimumSearchOptions& options) {
  require(band.band_count() >= 1, ErrorCode::InvalidArgument, "band 1 is required");
  const double grid_min = band.bands.col(0).minCoeff();
  const double grid_tol = options.grouping_relative_tol * (1.0 + std::abs(grid_min));
  const auto near_min = (band.bands.col(0).array() <= grid_min + grid_tol).count();
  if (static_cast<double>(near_min) > options.flat_fraction * static_cast<double>(band.grid.size())) {
    std::ostringstream os;
    os << near_min << " of " << band.grid.size() << " grid points lie within " << grid_tol << " of the minimum";
    fail(ErrorCode::FlatBandSuspected, os.str());
  }

  auto candidates = refined_candidates(band, options);
  require(!candidates.empty(), ErrorCode::InvalidArgument, "band has no grid local minimum");
  double e_min = candidates.front().energy;
  for (const auto& c : candidates) e_min = std::min(e_min, c.energy);
  const double tol = options.grouping_relative_tol * (1.0 + std::abs(e_min));

  std::vector<BandMinimum> kept;
  for (auto& c : candidates)
    if (c.energy <= e_min + tol) kept.push_back(std::move(c));
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.energy != b.energy) return a.energy < b.energy;
    return lex_less(a.theta, b.theta);
  });

  MinimaSet out;
  out.cell = band.grid.cell();
  out.merge_radius = options.merge_radius_steps * band.grid.max_step();
  for (auto& c : kept) {
    const bool close = std::any_of(out.minima.begin(), out.minima.end(), [&](const BandMinimum& m) {
      return torus_distance(m.theta, c.theta, out.cell) <= out.merge_radius;
    });
    if (!close) out.minima.push_back(std::move(c));
  }
  std::sort(out.minima.begin(), out.minima.end(),
            [](const auto& a, const auto& b) { return lex_less(a.theta, b.theta); });

  out.energy = e_min;
  out.grouping_tolerance = tol;
  out.model = band.model;
  for (const auto& m : out.minima) {
    out.resolution = std::max(out.resolution, m.resolution);
    if (!std::isnan(m.second_band) && m.second_band - m.energy <= 10.0 * tol) out.simple = false;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quadratic model

QuadraticModel quadratic_model(const BandStructure& band, const MinimaSet& minima, double delta,
                               double degeneracy_threshold) {
  require(delta >= 3.0 * band.grid.max_step() - 1e-12, ErrorCode::InvalidArgument,
          "delta must cover at least 3 grid steps");
  QuadraticModel model;
  for (const auto& m : minima.minima) {
    std::vector<Eigen::VectorXd> offsets;
    std::vector<double> values;
    std::vector<double> zetas;
    std::vector<Eigen::Index> indices;
    for (Eigen::Index i = 0; i < band.grid.size(); ++i) {
      const Eigen::VectorXd dx = wrap_quasimomentum(band.theta(i) - m.theta, band.grid.cell());
      if (dx.norm() > delta) continue;
      offsets.push_back(dx);
      values.push_back(band.bands(i, 0) - minima.energy);
      zetas.push_back(dx.squaredNorm());
      indices.push_back(i);
    }
    require(offsets.size() >= static_cast<std::size_t>(1 + 2 * band.grid.dimension() + 1),
            ErrorCode::InvalidArgument, "delta-ball holds too few grid points for a quadratic fit");

    QuadraticFit fit;
    fit.theta = m.theta;
    fit.delta = delta;
    fit.ball_points = offsets.size();
    fit.hessian = fit_quadratic(offsets, values).hessian;
    fit.min_hessian_eigenvalue = symmetric_eigenvalues(fit.hessian).minCoeff();
    if (fit.min_hessian_eigenvalue < degeneracy_threshold) {
      std::ostringstream os;
      os << "Hessian at theta = " << m.theta.transpose() << " has smallest eigenvalue "
         << fit.min_hessian_eigenvalue;
      fail(ErrorCode::DegenerateMinimum, os.str());
    }

    std::ostringstream violations;
    bool violated = false;
    double c = 1.0;
    for (std::size_t k = 0; k < offsets.size(); ++k) {
      if (zetas[k] < 1e-24) continue;
      const double ratio = values[k] / zetas[k];
      if (!(ratio > 0.0)) {
        violated = true;
        violations << " [" << band.theta(indices[k]).transpose() << "]";
        continue;
      }
      c = std::max({c, ratio, 1.0 / ratio});
    }
    if (violated) fail(ErrorCode::SandwichViolation, "E_1 - E_min is not positive at theta =" + violations.str());
    fit.c_fit = c;
    model.fits.push_back(std::move(fit));
  }
  return model;
}

// ---------------------------------------------------------------------------
// Eigenfunctions

BlochState bloch_eigenfunction(const BlochModel& model, const QuasiMomentum& theta, int band) {
  require(band >= 1 && band <= model.grid.size(), ErrorCode::InvalidArgument, "band index out of range");
  const BandEvaluator evaluator(model);
  const auto dec = eig_smallest_k(evaluator.hamiltonian(theta), band);
  Eigen::VectorXcd phi = dec.vectors.col(band - 1) / std::sqrt(model.grid.cell_volume_element());

  Eigen::Index pivot = 0;
  double largest = -1.0;
  for (Eigen::Index j = 0; j < phi.size(); ++j) {
    const double mod = std::abs(phi(j));
    if (mod > largest) {
      largest = mod;
      pivot = j;
    }
  }
  if (largest > 0.0) phi *= std::conj(phi(pivot)) / largest;
  phi(pivot) = std::complex<double>(std::abs(phi(pivot)), 0.0);

  BlochState state{theta, band, dec.values(band - 1), std::move(phi), model};
  return state;
}

// ---------------------------------------------------------------------------
// Continuation in lambda

LambdaTrack track_minima_in_lambda(const BlochModel& model, const std::vector<double>& ladder,
                                   int n_theta, const MinimumSearchOptions& options) {
  require(!ladder.empty() && ladder.front() == 0.0, ErrorCode::InvalidArgument, "lambda ladder must start at 0");
  require(std::is_sorted(ladder.begin(), ladder.end()), ErrorCode::InvalidArgument,
          "lambda ladder must be ascending");
  LambdaTrack track;
  track.ladder = ladder;
  for (double lambda : ladder) {
    const auto band = compute_band_structure(model.with_lambda(lambda), n_theta, 2);
    track.sets.push_back(find_band_minima(band, options));
  }
  track.displacement.push_back(0.0);
  for (std::size_t s = 1; s < track.sets.size(); ++s) {
    const auto& prev = track.sets[s - 1];
    const auto& cur = track.sets[s];
    if (prev.count() != cur.count()) {
      track.topology_change = true;
      track.change_steps.push_back(s);
    }
    double worst = 0.0;
    for (const auto& p : cur.minima) {
      double nearest = std::numeric_limits<double>::infinity();
      for (const auto& q : prev.minima) nearest = std::min(nearest, torus_distance(p.theta, q.theta, cur.cell));
      worst = std::max(worst, nearest);
    }
    track.displacement.push_back(worst);
  }
  return track;
}

}  // namespace bandedge
