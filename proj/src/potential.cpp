#include "bandedge/potential.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace bandedge {

std::size_t product(const LatticeVector& v) {
  std::size_t p = 1;
  for (int k : v) p *= static_cast<std::size_t>(k);
  return p;
}

std::size_t flat_index(const LatticeVector& site, const LatticeVector& extent) {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < extent.size(); ++i)
    idx = idx * static_cast<std::size_t>(extent[i]) + static_cast<std::size_t>(site[i]);
  return idx;
}

LatticeVector unflatten(std::size_t index, const LatticeVector& extent) {
  LatticeVector site(extent.size());
  for (std::size_t i = extent.size(); i-- > 0;) {
    site[i] = static_cast<int>(index % static_cast<std::size_t>(extent[i]));
    index /= static_cast<std::size_t>(extent[i]);
  }
  return site;
}

// ---------------------------------------------------------------------------
// Single site

double Bump::operator()(const Point& x) const {
  const double r = (x - center).norm() / radius;
  if (r >= 1.0) return 0.0;
  return amplitude * std::exp(-1.0 / (1.0 - r * r));
}

SingleSite::SingleSite(int dimension, std::vector<Bump> bumps)
    : dimension_(dimension), bumps_(std::move(bumps)) {}

double SingleSite::operator()(const Point& x) const {
  double sum = 0.0;
  for (const auto& b : bumps_) sum += b(x);
  return sum;
}

double SingleSite::support_radius() const {
  double r = 0.0;
  for (const auto& b : bumps_) r = std::max(r, b.center.cwiseAbs().maxCoeff() + b.radius);
  return r;
}

SingleSite SingleSite::scaled(double factor) const {
  std::vector<Bump> out = bumps_;
  for (auto& b : out) b.amplitude *= factor;
  return SingleSite(dimension_, std::move(out));
}

SingleSite build_single_site(const std::vector<Bump>& bumps, int dimension) {
  require(dimension == 1 || dimension == 2, ErrorCode::IncompatibleDimensions,
          "single site dimension must be 1 or 2");
  require(!bumps.empty(), ErrorCode::EmptySpec, "single site needs at least one bump");
  for (std::size_t i = 0; i < bumps.size(); ++i) {
    const auto& b = bumps[i];
    require(b.center.size() == dimension, ErrorCode::IncompatibleDimensions,
            "bump " + std::to_string(i) + " center has wrong dimension");
    require(b.radius > 0.0 && std::isfinite(b.radius), ErrorCode::InvalidArgument,
            "bump " + std::to_string(i) + " radius must be positive");
    require(std::isfinite(b.amplitude), ErrorCode::InvalidArgument,
            "bump " + std::to_string(i) + " amplitude must be finite");
    for (int a = 0; a < dimension; ++a) {
      if (std::abs(b.center(a)) + b.radius >= 0.5) {
        std::ostringstream os;
        os << "bump " << i << " (center " << b.center.transpose() << ", radius " << b.radius
           << ") reaches the cell boundary";
        fail(ErrorCode::BumpOutsideCell, os.str());
      }
    }
  }
  return SingleSite(dimension, bumps);
}

// ---------------------------------------------------------------------------
// Periodic background

double cell_integral(const SingleSite& site, int points_per_axis) {
  require(points_per_axis >= 1, ErrorCode::InvalidArgument, "need at least one node per axis");
  const int d = site.dimension();
  const double h = 1.0 / points_per_axis;
  const std::size_t total = d == 1 ? static_cast<std::size_t>(points_per_axis)
                                   : static_cast<std::size_t>(points_per_axis) * static_cast<std::size_t>(points_per_axis);
  double sum = 0.0;
  Point x(d);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    for (int a = d - 1; a >= 0; --a) {
      x(a) = -0.5 + (static_cast<double>(rest % static_cast<std::size_t>(points_per_axis)) + 0.5) * h;
      rest /= static_cast<std::size_t>(points_per_axis);
    }
    sum += site(x);
  }
  return sum * std::pow(h, d);
}

PeriodicBackground::PeriodicBackground(int dimension, double constant, std::vector<FourierTerm> terms)
    : dimension_(dimension), constant_(constant), terms_(std::move(terms)) {
  require(dimension == 1 || dimension == 2, ErrorCode::IncompatibleDimensions,
          "background dimension must be 1 or 2");
  for (const auto& t : terms_)
    require(static_cast<int>(t.wavevector.size()) == dimension, ErrorCode::IncompatibleDimensions,
            "Fourier wavevector has wrong dimension");
}

PeriodicBackground PeriodicBackground::cosine(int dimension, double amplitude, std::vector<int> wavevector) {
  return PeriodicBackground(dimension, 0.0, {FourierTerm{std::move(wavevector), amplitude, 0.0}});
}

double PeriodicBackground::operator()(const Point& x) const {
  // Reduce to the unit cell first so that lattice translates agree to rounding.
  Point frac = x;
  for (int i = 0; i < dimension_; ++i) frac(i) = x(i) - std::round(x(i));
  double v = constant_;
  for (const auto& t : terms_) {
    double phase = 0.0;
    for (int i = 0; i < dimension_; ++i) phase += t.wavevector[i] * frac(i);
    phase *= 2.0 * std::numbers::pi;
    if (t.cos_coef != 0.0) v += t.cos_coef * std::cos(phase);
    if (t.sin_coef != 0.0) v += t.sin_coef * std::sin(phase);
  }
  return v;
}

PeriodicBackground PeriodicBackground::shifted(double c) const {
  return PeriodicBackground(dimension_, constant_ + c, terms_);
}

// ---------------------------------------------------------------------------
// Configurations

DisorderConfiguration::DisorderConfiguration(ConfigKind kind, LatticeVector extent,
                                             std::vector<double> values, CouplingBounds bounds)
    : kind_(kind), extent_(std::move(extent)), values_(std::move(values)), bounds_(bounds) {
  require(bounds_.lower < bounds_.upper, ErrorCode::InvalidArgument,
          "coupling bounds must satisfy omega^- < omega^+");
  require(extent_.size() == 1 || extent_.size() == 2, ErrorCode::IncompatibleDimensions,
          "configuration dimension must be 1 or 2");
  for (int k : extent_) require(k >= 1, ErrorCode::InvalidArgument, "configuration extent must be >= 1");
  require(values_.size() == product(extent_), ErrorCode::SizeMismatch,
          "configuration value count does not match its extent");
  for (double w : values_) {
    if (!bounds_.contains(w)) {
      std::ostringstream os;
      os << "coupling " << w << " outside [" << bounds_.lower << ", " << bounds_.upper << "]";
      fail(ErrorCode::InvalidArgument, os.str());
    }
  }
}

DisorderConfiguration DisorderConfiguration::constant(int dimension, double value, CouplingBounds bounds) {
  return DisorderConfiguration(ConfigKind::Constant, LatticeVector(static_cast<std::size_t>(dimension), 1),
                               {value}, bounds);
}

DisorderConfiguration DisorderConfiguration::periodic(LatticeVector period, std::vector<double> values,
                                                      CouplingBounds bounds) {
  return DisorderConfiguration(ConfigKind::Periodic, std::move(period), std::move(values), bounds);
}

DisorderConfiguration DisorderConfiguration::boxed(LatticeVector box, std::vector<double> values,
                                                   CouplingBounds bounds) {
  return DisorderConfiguration(ConfigKind::Boxed, std::move(box), std::move(values), bounds);
}

double DisorderConfiguration::at(const LatticeVector& site) const {
  require(site.size() == extent_.size(), ErrorCode::IncompatibleDimensions, "site has wrong dimension");
  LatticeVector local(site.size());
  for (std::size_t i = 0; i < site.size(); ++i) {
    if (kind_ == ConfigKind::Boxed) {
      require(site[i] >= 0 && site[i] < extent_[i], ErrorCode::SizeMismatch, "site outside the box");
      local[i] = site[i];
    } else {
      const int k = extent_[i];
      local[i] = ((site[i] % k) + k) % k;
    }
  }
  return values_[flat_index(local, extent_)];
}

bool DisorderConfiguration::is_constant_value(double w) const {
  return std::all_of(values_.begin(), values_.end(), [w](double v) { return v == w; });
}

std::vector<double> DisorderConfiguration::shifted_from_lower() const {
  std::vector<double> out(values_);
  for (double& v : out) v -= bounds_.lower;
  return out;
}

std::vector<double> DisorderConfiguration::shifted_from_upper() const {
  std::vector<double> out(values_);
  for (double& v : out) v -= bounds_.upper;
  return out;
}

DisorderConfiguration DisorderConfiguration::translated(const LatticeVector& shift) const {
  require(is_periodic(), ErrorCode::InvalidArgument, "only periodic configurations can be translated");
  std::vector<double> out(values_.size());
  for (std::size_t idx = 0; idx < values_.size(); ++idx) {
    LatticeVector site = unflatten(idx, extent_);
    for (std::size_t i = 0; i < site.size(); ++i) site[i] += shift[i];
    out[idx] = at(site);
  }
  return DisorderConfiguration(kind_, extent_, std::move(out), bounds_);
}

DisorderConfiguration DisorderConfiguration::canonical() const {
  DisorderConfiguration best = *this;
  const std::size_t n = product(extent_);
  for (std::size_t t = 1; t < n; ++t) {
    DisorderConfiguration cand = translated(unflatten(t, extent_));
    if (std::lexicographical_compare(cand.values_.begin(), cand.values_.end(), best.values_.begin(),
                                     best.values_.end()))
      best = std::move(cand);
  }
  return best;
}

DisorderConfiguration DisorderConfiguration::restricted(const LatticeVector& box) const {
  require(kind_ == ConfigKind::Boxed, ErrorCode::InvalidArgument, "restriction applies to boxed configurations");
  require(box.size() == extent_.size(), ErrorCode::IncompatibleDimensions, "box has wrong dimension");
  for (std::size_t i = 0; i < box.size(); ++i)
    require(box[i] >= 1 && box[i] <= extent_[i], ErrorCode::SizeMismatch, "sub-box exceeds the box");
  std::vector<double> out(product(box));
  for (std::size_t idx = 0; idx < out.size(); ++idx) out[idx] = at(unflatten(idx, box));
  return boxed(box, std::move(out), bounds_);
}

bool canonical_less(const DisorderConfiguration& a, const DisorderConfiguration& b) {
  const auto& va = a.values();
  const auto& vb = b.values();
  if (std::lexicographical_compare(va.begin(), va.end(), vb.begin(), vb.end())) return true;
  if (std::lexicographical_compare(vb.begin(), vb.end(), va.begin(), va.end())) return false;
  return a.extent() < b.extent();
}

namespace {

// Digit tuple of a configuration on extent K, row-major.
using Digits = std::vector<int>;

int digit_at(const Digits& d, const LatticeVector& extent, const LatticeVector& site) {
  LatticeVector local(site.size());
  for (std::size_t i = 0; i < site.size(); ++i) local[i] = ((site[i] % extent[i]) + extent[i]) % extent[i];
  return d[flat_index(local, extent)];
}

bool invariant_under(const Digits& d, const LatticeVector& extent, std::size_t axis, int shift) {
  for (std::size_t idx = 0; idx < d.size(); ++idx) {
    LatticeVector site = unflatten(idx, extent);
    site[axis] += shift;
    if (digit_at(d, extent, site) != d[idx]) return false;
  }
  return true;
}

bool has_minimal_period(const Digits& d, const LatticeVector& extent) {
  for (std::size_t axis = 0; axis < extent.size(); ++axis)
    for (int p = 1; p < extent[axis]; ++p)
      if (extent[axis] % p == 0 && invariant_under(d, extent, axis, p)) return false;
  return true;
}

bool is_least_translate(const Digits& d, const LatticeVector& extent) {
  const std::size_t n = d.size();
  Digits shifted(n);
  for (std::size_t t = 1; t < n; ++t) {
    const LatticeVector shift = unflatten(t, extent);
    for (std::size_t idx = 0; idx < n; ++idx) {
      LatticeVector site = unflatten(idx, extent);
      for (std::size_t i = 0; i < site.size(); ++i) site[i] += shift[i];
      shifted[idx] = digit_at(d, extent, site);
    }
    if (shifted < d) return false;
  }
  return true;
}

}  // namespace

std::vector<DisorderConfiguration> enumerate_periodic_configs(std::vector<double> alphabet,
                                                              const LatticeVector& max_period,
                                                              CouplingBounds bounds,
                                                              const EnumerationOptions& options) {
  require(!alphabet.empty(), ErrorCode::InvalidArgument, "alphabet must be nonempty");
  require(max_period.size() == 1 || max_period.size() == 2, ErrorCode::IncompatibleDimensions,
          "max_period dimension must be 1 or 2");
  for (int k : max_period) require(k >= 1, ErrorCode::InvalidArgument, "max_period must be >= 1");
  std::sort(alphabet.begin(), alphabet.end());
  alphabet.erase(std::unique(alphabet.begin(), alphabet.end()), alphabet.end());
  for (double w : alphabet)
    require(bounds.contains(w), ErrorCode::InvalidArgument, "alphabet entry outside the coupling bounds");

  const std::size_t letters = alphabet.size();
  const std::size_t raw_cap = options.cap * 64;

  // Every period vector with 1 <= K_i <= max_period_i.
  std::vector<LatticeVector> periods;
  const std::size_t combos = product(max_period);
  for (std::size_t c = 0; c < combos; ++c) {
    LatticeVector k = unflatten(c, max_period);
    for (int& ki : k) ++ki;
    periods.push_back(std::move(k));
  }

  std::size_t raw_total = 0;
  for (const auto& k : periods) {
    double count = std::pow(static_cast<double>(letters), static_cast<double>(product(k)));
    if (count > static_cast<double>(raw_cap) || raw_total + static_cast<std::size_t>(count) > raw_cap)
      fail(ErrorCode::ExplosionGuard, "periodic enumeration exceeds the configured cap");
    raw_total += static_cast<std::size_t>(count);
  }

  std::vector<DisorderConfiguration> out;
  for (const auto& k : periods) {
    const std::size_t sites = product(k);
    Digits digits(sites, 0);
    for (;;) {
      if (has_minimal_period(digits, k) && is_least_translate(digits, k)) {
        if (out.size() >= options.cap)
          fail(ErrorCode::ExplosionGuard, "deduplicated configuration count exceeds the cap");
        std::vector<double> values(sites);
        for (std::size_t i = 0; i < sites; ++i) values[i] = alphabet[static_cast<std::size_t>(digits[i])];
        if (sites == 1)
          out.push_back(DisorderConfiguration::constant(static_cast<int>(k.size()), values[0], bounds));
        else
          out.push_back(DisorderConfiguration::periodic(k, std::move(values), bounds));
      }
      // Odometer increment, last site fastest.
      std::size_t pos = sites;
      while (pos > 0) {
        --pos;
        if (static_cast<std::size_t>(++digits[pos]) < letters) break;
        digits[pos] = 0;
        if (pos == 0) {
          pos = sites + 1;
          break;
        }
      }
      if (pos == sites + 1) break;
    }
  }
  std::sort(out.begin(), out.end(), canonical_less);
  return out;
}

DisorderConfiguration sample_random_config(std::uint64_t seed, const DisorderLaw& law,
                                           const LatticeVector& box, CouplingBounds bounds) {
  require(box.size() == 1 || box.size() == 2, ErrorCode::IncompatibleDimensions, "box dimension must be 1 or 2");
  for (int k : box) require(k >= 1, ErrorCode::InvalidArgument, "box must be >= 1 per axis");
  std::mt19937_64 rng(seed);
  std::vector<double> values(product(box));
  if (const auto* alphabet = std::get_if<std::vector<double>>(&law)) {
    require(!alphabet->empty(), ErrorCode::InvalidArgument, "alphabet must be nonempty");
    std::uniform_int_distribution<std::size_t> pick(0, alphabet->size() - 1);
    for (double& v : values) v = (*alphabet)[pick(rng)];
  } else {
    const auto& range = std::get<CouplingBounds>(law);
    require(range.lower >= bounds.lower && range.upper <= bounds.upper && range.lower < range.upper,
            ErrorCode::InvalidArgument, "continuous law must lie inside the coupling bounds");
    std::uniform_real_distribution<double> draw(range.lower, range.upper);
    for (double& v : values) v = draw(rng);
  }
  return DisorderConfiguration::boxed(box, std::move(values), bounds);
}

}  // namespace bandedge
