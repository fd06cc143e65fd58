#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bandedge/coupling.hpp"
#include "bandedge/floquet.hpp"

namespace bandedge {

enum class Extreme { Lower, Upper };

std::string_view to_string(Extreme e);
double extreme_value(Extreme e, const CouplingBounds& bounds);

/// {omega^-, (omega^- + omega^+)/2, omega^+}.
std::vector<double> default_alphabet(const CouplingBounds& bounds);
/// 3 in d = 1, (2, 2) in d = 2.
LatticeVector default_max_period(int dimension);

struct ConfigurationSpectrum {
  DisorderConfiguration config;
  double lambda = 0.0;
  double energy = 0.0;        // refined minimum of the supercell first band
  QuasiMomentum theta;        // argmin over the supercell zone
  double resolution = 0.0;
};

struct SupercellOptions {
  int n_theta = 17;           // per axis, over the supercell zone
  MinimumSearchOptions search;
};

/// `model` supplies the grid resolution, W, f and lambda; its own
/// configuration is ignored in favor of `config`.
ConfigurationSpectrum supercell_min_energy(const BlochModel& model, const DisorderConfiguration& config,
                                           const SupercellOptions& options = {});

struct MonotonePair {
  DisorderConfiguration lower;   // sitewise <= upper
  DisorderConfiguration upper;
  QuasiMomentum theta;
  /// max_i (E_i(expected smaller) - E_i(expected larger)); <= tolerance when monotone.
  double max_violation = 0.0;
};

struct VerificationReport {
  std::string check;                              // "min-location" or "fixed-sign"
  BlochModel model;
  double lambda = 0.0;
  std::optional<Definiteness> class_at_zero;
  Extreme predicted = Extreme::Lower;
  std::vector<double> alphabet;
  LatticeVector max_period;
  std::vector<ConfigurationSpectrum> spectra;     // canonical configuration order
  std::size_t predicted_index = 0;
  std::size_t argmin_index = 0;
  double gap = 0.0;                               // E(argmin) - E(predicted)
  double budget = 0.0;
  std::vector<MonotonePair> monotone_pairs;
  double monotone_tolerance = 0.0;
  bool monotone_ok = true;
  bool pass = false;
  std::vector<std::string> notes;

  bool argmin_is_predicted() const { return argmin_index == predicted_index; }
};

struct VerificationOptions {
  std::vector<double> alphabet;   // empty: default_alphabet
  LatticeVector max_period;       // empty: default_max_period
  SupercellOptions supercell;
  CouplingOptions coupling;
  EnumerationOptions enumeration;
  double absolute_floor = 1e-8;
  // fixed-sign oracle only
  std::size_t monotone_pairs = 20;
  std::uint64_t seed = 1;
  double monotone_tolerance = 1e-10;
};

/// Minimum location check for an indefinite (or any) f with definite A(0).
VerificationReport verify_min_location(const BlochModel& model, const VerificationOptions& options = {});

/// Fixed-sign f: predicted extreme is omega^- for f >= 0 and omega^+ for
/// f <= 0 at every lambda; also checks sitewise monotonicity of supercell spectra.
VerificationReport monotone_case_oracle(const BlochModel& model, const VerificationOptions& options = {});

/// +1 if f >= 0 on the grid nodes, -1 if f <= 0, 0 if it takes both signs.
int grid_sign(const SingleSite& site, const CellGrid& grid);

struct ProjectionCheck {
  DisorderConfiguration config;
  double lambda = 0.0;
  QuasiMomentum theta;
  int subspace_dimension = 0;
  double gap = 0.0;              // folded band 1 to band 2 of the extreme operator
  bool gap_ok = true;
  double min_eigenvalue = 0.0;   // of P* (H_config - E_extreme) P
};

struct ProjectionOptions {
  int n_theta = 5;               // per axis, over the supercell zone
  double gap_threshold = 1e-6;
  bool throw_on_small_gap = false;
  MinimumSearchOptions search;
  int unit_n_theta = 65;         // for E_extreme
};

/// One list of per-theta checks per configuration. Configurations sharing a
/// period share the folded-band basis.
std::vector<std::vector<ProjectionCheck>> projection_positivity_check(
    const BlochModel& model, const std::vector<DisorderConfiguration>& configs, Extreme extreme,
    const ProjectionOptions& options = {});

struct BoxLevel {
  int box = 0;
  double min_energy = 0.0;
  double max_energy = 0.0;
  std::size_t violations = 0;
};

struct BoxSamplingOptions {
  std::vector<int> box_ladder{1, 2, 4, 8};
  std::size_t n_samples = 200;
  std::uint64_t seed = 1;
  std::optional<DisorderLaw> law;   // default: uniform on default_alphabet
};

struct BoxSamplingSummary {
  double predicted_infimum = 0.0;
  double budget = 0.0;
  std::size_t samples = 0;
  std::vector<BoxLevel> levels;
  bool monotone = true;     // min energy nonincreasing in L within budget
  bool pass = false;
};

/// Ground energies of Dirichlet boxes for random configurations. Each sample
/// is drawn once on the largest box and restricted to the smaller ones.
BoxSamplingSummary box_sampling_check(const BlochModel& model, double predicted_infimum, double budget,
                                      const BoxSamplingOptions& options = {});

}  // namespace bandedge
