#include "bandedge/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "bandedge/parallel.hpp"

namespace bandedge {

std::string_view to_string(Extreme e) { return e == Extreme::Lower ? "lower" : "upper"; }

double extreme_value(Extreme e, const CouplingBounds& bounds) {
  return e == Extreme::Lower ? bounds.lower : bounds.upper;
}

std::vector<double> default_alphabet(const CouplingBounds& bounds) {
  if (bounds.lower == bounds.upper) return {bounds.lower};
  return {bounds.lower, 0.5 * (bounds.lower + bounds.upper), bounds.upper};
}

LatticeVector default_max_period(int dimension) {
  require(dimension == 1 || dimension == 2, ErrorCode::InvalidArgument, "dimension must be 1 or 2");
  return dimension == 1 ? LatticeVector{3} : LatticeVector{2, 2};
}

ConfigurationSpectrum supercell_min_energy(const BlochModel& model, const DisorderConfiguration& config,
                                           const SupercellOptions& options) {
  require(config.is_periodic(), ErrorCode::InvalidArgument, "supercell spectra need a periodic configuration");
  require(config.dimension() == model.grid.dimension(), ErrorCode::IncompatibleDimensions,
          "configuration and grid dimensions differ");
  LatticeVector cell = config.extent();
  const BlochModel super = model.with_grid(CellGrid(model.grid.dimension(), cell, model.grid.points_per_unit()))
                               .with_config(config);
  const BandStructure band = compute_band_structure(super, options.n_theta, 2);
  const BandMinimum best = lowest_band_minimum(band, options.search);
  return ConfigurationSpectrum{config, model.lambda, best.energy, best.theta, best.resolution};
}

int grid_sign(const SingleSite& site, const CellGrid& grid) {
  bool pos = false, neg = false;
  const CellGrid unit = CellGrid::unit(grid.dimension(), grid.points_per_unit());
  for (Eigen::Index j = 0; j < unit.size(); ++j) {
    const double v = site(unit.node(j));
    pos = pos || v > 0.0;
    neg = neg || v < 0.0;
  }
  if (pos && neg) return 0;
  return neg ? -1 : 1;
}

namespace {

struct Setup {
  std::vector<double> alphabet;
  LatticeVector max_period;
};

Setup resolve(const BlochModel& model, const VerificationOptions& options) {
  Setup s;
  s.alphabet = options.alphabet.empty() ? default_alphabet(model.config.bounds()) : options.alphabet;
  s.max_period = options.max_period.empty() ? default_max_period(model.grid.dimension()) : options.max_period;
  return s;
}

void fill_comparison(VerificationReport& report, const BlochModel& model, const VerificationOptions& options) {
  const CouplingBounds bounds = model.config.bounds();
  const auto configs =
      enumerate_periodic_configs(report.alphabet, report.max_period, bounds, options.enumeration);
  report.spectra = parallel_map(configs.size(), [&](std::size_t i) {
    return supercell_min_energy(model, configs[i], options.supercell);
  });

  const double target = extreme_value(report.predicted, bounds);
  report.predicted_index = configs.size();
  for (std::size_t i = 0; i < configs.size(); ++i)
    if (configs[i].kind() == ConfigKind::Constant && configs[i].is_constant_value(target)) report.predicted_index = i;
  require(report.predicted_index < configs.size(), ErrorCode::InvalidArgument,
          "predicted extreme configuration is not among the enumerated ones");

  // Ordered reduction: first strict minimum in canonical order.
  report.argmin_index = 0;
  double sum_res = 0.0;
  for (std::size_t i = 0; i < report.spectra.size(); ++i) {
    sum_res += report.spectra[i].resolution;
    if (report.spectra[i].energy < report.spectra[report.argmin_index].energy) report.argmin_index = i;
  }
  report.budget = sum_res + options.absolute_floor;
  report.gap = report.spectra[report.argmin_index].energy - report.spectra[report.predicted_index].energy;
  report.pass = report.gap >= -report.budget;

  report.notes.push_back("finite subsample: " + std::to_string(configs.size()) +
                         " periodic configurations over the given alphabet and periods; the infimum over all "
                         "periodic configurations is not checked");
  report.notes.push_back("internal spectral edges: not verified");
}

}  // namespace

VerificationReport verify_min_location(const BlochModel& model, const VerificationOptions& options) {
  require(model.lambda >= 0.0, ErrorCode::InvalidArgument, "lambda must be nonnegative");
  const CouplingBounds bounds = model.config.bounds();
  const BlochModel at_zero = model.with_grid(CellGrid::unit(model.grid.dimension(), model.grid.points_per_unit()))
                                 .with_lambda(0.0)
                                 .with_config(DisorderConfiguration::constant(model.grid.dimension(), bounds.lower, bounds));
  const CouplingMatrix a0 = coupling_for_model(at_zero, options.coupling);
  if (a0.definiteness != Definiteness::PositiveDefinite && a0.definiteness != Definiteness::NegativeDefinite)
    fail(ErrorCode::NotApplicable, "A(0) is " + std::string(to_string(a0.definiteness)) +
                                       "; the minimum location statement needs a definite A(0)");

  const Setup s = resolve(model, options);
  VerificationReport report{.check = "min-location", .model = model, .lambda = model.lambda};
  report.class_at_zero = a0.definiteness;
  report.predicted = a0.definiteness == Definiteness::PositiveDefinite ? Extreme::Lower : Extreme::Upper;
  report.alphabet = s.alphabet;
  report.max_period = s.max_period;
  fill_comparison(report, model, options);
  return report;
}

VerificationReport monotone_case_oracle(const BlochModel& model, const VerificationOptions& options) {
  require(model.lambda >= 0.0, ErrorCode::InvalidArgument, "lambda must be nonnegative");
  const int sign = grid_sign(model.site, model.grid);
  if (sign == 0) fail(ErrorCode::NotFixedSign, "single site potential takes both signs on the grid");

  const Setup s = resolve(model, options);
  VerificationReport report{.check = "fixed-sign", .model = model, .lambda = model.lambda};
  report.predicted = sign > 0 ? Extreme::Lower : Extreme::Upper;
  report.alphabet = s.alphabet;
  report.max_period = s.max_period;
  fill_comparison(report, model, options);

  // Sitewise monotonicity: raising couplings moves every supercell eigenvalue
  // up (f >= 0) or down (f <= 0).
  std::vector<double> alphabet = s.alphabet;
  std::sort(alphabet.begin(), alphabet.end());
  const CouplingBounds bounds = model.config.bounds();
  const LatticeVector period = s.max_period;
  const std::size_t sites = product(period);
  const CellGrid grid(model.grid.dimension(), period, model.grid.points_per_unit());
  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);

  std::vector<std::pair<std::vector<double>, std::vector<double>>> draws;
  std::vector<QuasiMomentum> thetas;
  for (std::size_t p = 0; p < options.monotone_pairs; ++p) {
    std::vector<double> lo(sites), hi(sites);
    for (std::size_t i = 0; i < sites; ++i) {
      const std::size_t a = pick(rng), b = pick(rng);
      lo[i] = alphabet[std::min(a, b)];
      hi[i] = alphabet[std::max(a, b)];
    }
    QuasiMomentum theta(grid.dimension());
    for (int a = 0; a < grid.dimension(); ++a) theta(a) = angle(rng) / period[static_cast<std::size_t>(a)];
    draws.emplace_back(std::move(lo), std::move(hi));
    thetas.push_back(theta);
  }
  report.monotone_pairs = parallel_map(draws.size(), [&](std::size_t p) {
    MonotonePair pair{DisorderConfiguration::periodic(period, draws[p].first, bounds),
                      DisorderConfiguration::periodic(period, draws[p].second, bounds), thetas[p], 0.0};
    const auto e_lo = hermitian_eigenvalues(assemble_bloch_hamiltonian(grid, model.background, model.site,
                                                                       model.lambda, pair.lower, pair.theta));
    const auto e_hi = hermitian_eigenvalues(assemble_bloch_hamiltonian(grid, model.background, model.site,
                                                                       model.lambda, pair.upper, pair.theta));
    pair.max_violation = sign > 0 ? (e_lo - e_hi).maxCoeff() : (e_hi - e_lo).maxCoeff();
    return pair;
  });
  report.monotone_tolerance = options.monotone_tolerance;
  for (const auto& pair : report.monotone_pairs)
    if (pair.max_violation > options.monotone_tolerance) report.monotone_ok = false;
  report.pass = report.pass && report.monotone_ok;
  return report;
}

namespace {

struct FoldedBasis {
  Eigen::MatrixXcd vectors;   // N x prod(K)
  double gap = 0.0;
};

}  // namespace

std::vector<std::vector<ProjectionCheck>> projection_positivity_check(
    const BlochModel& model, const std::vector<DisorderConfiguration>& configs, Extreme extreme,
    const ProjectionOptions& options) {
  const int d = model.grid.dimension();
  const int n = model.grid.points_per_unit();
  const CouplingBounds bounds = model.config.bounds();
  const DisorderConfiguration extreme_config = DisorderConfiguration::constant(d, extreme_value(extreme, bounds), bounds);

  const BlochModel unit = model.with_grid(CellGrid::unit(d, n)).with_config(extreme_config);
  const double e_extreme =
      lowest_band_minimum(compute_band_structure(unit, options.unit_n_theta, 2), options.search).energy;

  std::map<LatticeVector, std::vector<FoldedBasis>> bases;
  for (const auto& c : configs) {
    require(c.is_periodic(), ErrorCode::InvalidArgument, "projection check needs periodic configurations");
    require(c.dimension() == d, ErrorCode::IncompatibleDimensions, "configuration and grid dimensions differ");
    bases.emplace(c.extent(), std::vector<FoldedBasis>{});
  }

  for (auto& [cell, list] : bases) {
    const ThetaGrid tgrid(d, cell, options.n_theta);
    const CellGrid grid(d, cell, n);
    const Eigen::VectorXd diag = potential_diagonal(grid, model.background, model.site, model.lambda, extreme_config);
    const auto folded = static_cast<Eigen::Index>(product(cell));
    list = parallel_map(static_cast<std::size_t>(tgrid.size()), [&](std::size_t t) {
      const HermitianMatrix h = bloch_hamiltonian(grid, diag, tgrid.at(static_cast<Eigen::Index>(t)));
      const auto eig = eig_smallest_k(h, std::min<Eigen::Index>(folded + 1, h.rows()));
      FoldedBasis b;
      b.vectors = eig.vectors.leftCols(folded);
      b.gap = folded < eig.values.size() ? eig.values(folded) - eig.values(folded - 1)
                                         : std::numeric_limits<double>::infinity();
      return b;
    });
  }

  return parallel_map(configs.size(), [&](std::size_t ci) {
    const DisorderConfiguration& config = configs[ci];
    const LatticeVector& cell = config.extent();
    const ThetaGrid tgrid(d, cell, options.n_theta);
    const CellGrid grid(d, cell, n);
    const Eigen::VectorXd diag = potential_diagonal(grid, model.background, model.site, model.lambda, config);
    const auto& list = bases.at(cell);
    std::vector<ProjectionCheck> out;
    for (Eigen::Index t = 0; t < tgrid.size(); ++t) {
      const FoldedBasis& b = list[static_cast<std::size_t>(t)];
      ProjectionCheck check{config, model.lambda, tgrid.at(t), static_cast<int>(b.vectors.cols()), b.gap,
                            b.gap > options.gap_threshold, 0.0};
      if (!check.gap_ok && options.throw_on_small_gap)
        fail(ErrorCode::GapTooSmall, "folded band gap " + std::to_string(b.gap) + " below threshold");
      HermitianMatrix h = bloch_hamiltonian(grid, diag, check.theta);
      h.diagonal().array() -= e_extreme;
      const Eigen::MatrixXcd reduced = b.vectors.adjoint() * h * b.vectors;
      check.min_eigenvalue = hermitian_eigenvalues(Eigen::MatrixXcd(0.5 * (reduced + reduced.adjoint())))(0);
      out.push_back(std::move(check));
    }
    return out;
  });
}

BoxSamplingSummary box_sampling_check(const BlochModel& model, double predicted_infimum, double budget,
                                      const BoxSamplingOptions& options) {
  require(!options.box_ladder.empty(), ErrorCode::InvalidArgument, "box ladder is empty");
  require(std::is_sorted(options.box_ladder.begin(), options.box_ladder.end()) && options.box_ladder.front() >= 1,
          ErrorCode::InvalidArgument, "box ladder must be ascending and positive");
  require(options.n_samples > 0, ErrorCode::InvalidArgument, "need at least one sample");
  const int d = model.grid.dimension();
  const int n = model.grid.points_per_unit();
  const CouplingBounds bounds = model.config.bounds();
  const DisorderLaw law = options.law ? *options.law : DisorderLaw{default_alphabet(bounds)};
  const LatticeVector largest(static_cast<std::size_t>(d), options.box_ladder.back());
  // Size guard up front rather than after sampling.
  (void)CellGrid(d, largest, n);

  BoxSamplingSummary summary;
  summary.predicted_infimum = predicted_infimum;
  summary.budget = budget;
  summary.samples = options.n_samples;

  std::vector<DisorderConfiguration> samples;
  for (std::size_t s = 0; s < options.n_samples; ++s)
    samples.push_back(sample_random_config(options.seed + s, law, largest, bounds));

  for (int L : options.box_ladder) {
    const LatticeVector box(static_cast<std::size_t>(d), L);
    const CellGrid grid(d, box, n);
    const auto energies = parallel_map(samples.size(), [&](std::size_t s) {
      const DisorderConfiguration c = samples[s].restricted(box);
      const HermitianMatrix h = assemble_dirichlet_box(grid, model.background, model.site, model.lambda, c);
      // In d = 1 the box matrix is already real tridiagonal.
      if (d == 1) return tridiagonal_eigenvalues<double>(h.diagonal().real(), h.diagonal(1).real())(0);
      return hermitian_eigenvalues(h)(0);
    });
    BoxLevel level{L, *std::min_element(energies.begin(), energies.end()),
                   *std::max_element(energies.begin(), energies.end()), 0};
    for (double e : energies)
      if (e < predicted_infimum - budget) ++level.violations;
    summary.levels.push_back(level);
  }
  summary.pass = true;
  for (std::size_t i = 0; i < summary.levels.size(); ++i) {
    if (summary.levels[i].violations > 0) summary.pass = false;
    if (i > 0 && summary.levels[i].min_energy > summary.levels[i - 1].min_energy + budget) summary.monotone = false;
  }
  summary.pass = summary.pass && summary.monotone;
  return summary;
}

}  // namespace bandedge
