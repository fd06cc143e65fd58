#include "bandedge/coupling.hpp"

#include <algorithm>
#include <cmath>

#include "bandedge/parallel.hpp"

namespace bandedge {

std::string_view to_string(Definiteness d) {
  switch (d) {
    case Definiteness::PositiveDefinite: return "positive-definite";
    case Definiteness::NegativeDefinite: return "negative-definite";
    case Definiteness::Indefinite: return "indefinite";
    case Definiteness::NumericallySingular: return "numerically-singular";
  }
  return "unknown";
}

Eigen::VectorXd hermitian_part_eigenvalues(const Eigen::MatrixXcd& a) {
  require(a.rows() == a.cols() && a.rows() > 0, ErrorCode::SizeMismatch, "coupling matrix must be square");
  return hermitian_eigenvalues(Eigen::MatrixXcd(0.5 * (a + a.adjoint())));
}

Definiteness classify_definiteness(const Eigen::MatrixXcd& a, double singular_tol, double scale) {
  const Eigen::VectorXd ev = hermitian_part_eigenvalues(a);
  if (scale <= 0.0) scale = ev.cwiseAbs().maxCoeff();
  const double cut = singular_tol * scale;
  if (ev.minCoeff() > cut) return Definiteness::PositiveDefinite;
  if (ev.maxCoeff() < -cut) return Definiteness::NegativeDefinite;
  if ((ev.array().abs() <= cut).any()) return Definiteness::NumericallySingular;
  return Definiteness::Indefinite;
}

CouplingMatrix coupling_matrix(const SingleSite& site, const MinimaSet& minima,
                               const std::vector<BlochState>& states, double singular_tol) {
  require(!states.empty(), ErrorCode::InvalidArgument, "coupling matrix needs at least one eigenfunction");
  require(states.size() == minima.count(), ErrorCode::MismatchedModel,
          "eigenfunction count differs from the number of minima");
  const BlochModel& model = states.front().model;
  for (std::size_t k = 0; k < states.size(); ++k) {
    require(states[k].model == model, ErrorCode::MismatchedModel, "eigenfunctions come from different models");
    if (minima.model) require(*minima.model == model, ErrorCode::MismatchedModel,
                              "minima and eigenfunctions describe different models");
    require(torus_distance(states[k].theta, minima.minima[k].theta, model.grid.cell()) <= 1e-12,
            ErrorCode::MismatchedModel, "eigenfunction " + std::to_string(k) + " is not at the matching minimum");
    require(states[k].values.size() == model.grid.size(), ErrorCode::SizeMismatch,
            "eigenfunction length does not match the grid");
  }
  require(site.dimension() == model.grid.dimension(), ErrorCode::IncompatibleDimensions,
          "single site and grid dimensions differ");
  for (int k : model.grid.cell())
    require(k == 1, ErrorCode::IncompatibleDimensions, "coupling matrix is defined on the unit cell");

  const CellGrid& grid = model.grid;
  Eigen::VectorXd weights(grid.size());
  for (Eigen::Index j = 0; j < grid.size(); ++j) weights(j) = grid.cell_volume_element() * site(grid.node(j));

  const auto m = static_cast<Eigen::Index>(states.size());
  CouplingMatrix out;
  out.entries.resize(m, m);
  for (Eigen::Index k = 0; k < m; ++k)
    for (Eigen::Index kp = 0; kp < m; ++kp) {
      const auto& phi_k = states[static_cast<std::size_t>(k)].values;
      const auto& phi_kp = states[static_cast<std::size_t>(kp)].values;
      std::complex<double> sum = 0.0;
      for (Eigen::Index j = 0; j < grid.size(); ++j) sum += weights(j) * phi_k(j) * std::conj(phi_kp(j));
      out.entries(k, kp) = sum;
    }
  for (const auto& s : states) {
    double mass = 0.0;
    for (Eigen::Index j = 0; j < grid.size(); ++j) mass += std::abs(weights(j)) * std::norm(s.values(j));
    out.scale = std::max(out.scale, mass);
  }
  out.lambda = model.lambda;
  out.hermitian_eigenvalues = hermitian_part_eigenvalues(out.entries);
  out.definiteness = classify_definiteness(out.entries, singular_tol, out.scale);
  for (const auto& s : states) out.points.push_back(s.theta);
  return out;
}

CouplingMatrix coupling_for_model(const BlochModel& model, const CouplingOptions& options) {
  const auto band = compute_band_structure(model, options.n_theta, 2);
  const auto minima = find_band_minima(band, options.search);
  std::vector<BlochState> states;
  for (const auto& m : minima.minima) states.push_back(bloch_eigenfunction(model, m.theta, 1));
  return coupling_matrix(model.site, minima, states, options.singular_tol);
}

namespace {

double spectral_distance(const CouplingMatrix& a, const CouplingMatrix& b) {
  if (a.order() != b.order()) return std::numeric_limits<double>::quiet_NaN();
  return (a.hermitian_eigenvalues - b.hermitian_eigenvalues).cwiseAbs().maxCoeff();
}

double margin_for(const CouplingMatrix& a, Definiteness cls) {
  return cls == Definiteness::NegativeDefinite ? -a.hermitian_eigenvalues.maxCoeff()
                                               : a.hermitian_eigenvalues.minCoeff();
}

}  // namespace

ThresholdScan lambda_threshold_scan(const BlochModel& base, const std::vector<double>& ladder,
                                    const CouplingOptions& options, ReferenceExtreme reference) {
  require(!ladder.empty() && ladder.front() == 0.0, ErrorCode::InvalidArgument, "lambda ladder must start at 0");
  require(std::is_sorted(ladder.begin(), ladder.end()), ErrorCode::InvalidArgument, "lambda ladder must be ascending");
  const CouplingBounds bounds = base.config.bounds();
  const int d = base.grid.dimension();

  // A(0) does not depend on the configuration.
  const BlochModel at_zero =
      base.with_lambda(0.0).with_config(DisorderConfiguration::constant(d, bounds.lower, bounds));
  const CouplingMatrix a0 = coupling_for_model(at_zero, options);
  if (a0.definiteness != Definiteness::PositiveDefinite && a0.definiteness != Definiteness::NegativeDefinite)
    fail(ErrorCode::NotDefiniteAtZero,
         "A(0) is " + std::string(to_string(a0.definiteness)) + "; the threshold scan needs a definite A(0)");

  ThresholdScan scan;
  scan.class_at_zero = a0.definiteness;
  switch (reference) {
    case ReferenceExtreme::Lower: scan.reference_coupling = bounds.lower; break;
    case ReferenceExtreme::Upper: scan.reference_coupling = bounds.upper; break;
    case ReferenceExtreme::Auto:
      scan.reference_coupling =
          a0.definiteness == Definiteness::PositiveDefinite ? bounds.lower : bounds.upper;
      break;
  }
  const DisorderConfiguration ref_config = DisorderConfiguration::constant(d, scan.reference_coupling, bounds);
  scan.c0 = margin_for(a0, a0.definiteness);

  auto couplings = parallel_map(ladder.size(), [&](std::size_t i) {
    if (ladder[i] == 0.0) return a0;
    return coupling_for_model(base.with_lambda(ladder[i]).with_config(ref_config), options);
  });

  bool still_inside = true;
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    ThresholdEntry e;
    e.lambda = ladder[i];
    e.coupling = std::move(couplings[i]);
    e.min_abs_eigenvalue = e.coupling.hermitian_eigenvalues.cwiseAbs().minCoeff();
    e.margin = margin_for(e.coupling, scan.class_at_zero);
    if (e.coupling.order() != a0.order()) scan.order_change = true;
    if (still_inside) {
      if (e.coupling.definiteness == scan.class_at_zero && e.margin >= 0.5 * scan.c0)
        scan.lambda0 = e.lambda;
      else
        still_inside = false;
    }
    if (e.lambda > 0.0) {
      const double dist = spectral_distance(e.coupling, a0);
      if (!std::isnan(dist)) scan.envelope_constant = std::max(scan.envelope_constant, dist / e.lambda);
    }
    scan.entries.push_back(std::move(e));
  }
  for (const auto& e : scan.entries)
    if (e.lambda <= scan.lambda0 && e.coupling.definiteness != scan.class_at_zero)
      scan.class_constant_to_lambda0 = false;
  return scan;
}

}  // namespace bandedge
