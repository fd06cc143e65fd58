#include "bandedge/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace bandedge {

Json to_json(const Point& p) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < p.size(); ++i) out.push_back(p(i));
  return out;
}

Json to_json(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

Json to_json(const Bump& b) {
  return Json{{"center", to_json(b.center)}, {"radius", b.radius}, {"amplitude", b.amplitude}};
}

Json to_json(const PeriodicBackground& w) {
  Json terms = Json::array();
  for (const auto& t : w.terms())
    terms.push_back(Json{{"wavevector", t.wavevector}, {"cos", t.cos_coef}, {"sin", t.sin_coef}});
  return Json{{"constant", w.constant()}, {"terms", terms}};
}

namespace {

std::string_view kind_name(ConfigKind k) {
  switch (k) {
    case ConfigKind::Constant: return "constant";
    case ConfigKind::Periodic: return "periodic";
    case ConfigKind::Boxed: return "boxed";
  }
  return "unknown";
}

}  // namespace

Json to_json(const DisorderConfiguration& c) {
  return Json{{"kind", kind_name(c.kind())}, {"extent", c.extent()}, {"values", c.values()}};
}

Json to_json(const BlochModel& m) {
  Json bumps = Json::array();
  for (const auto& b : m.site.bumps()) bumps.push_back(to_json(b));
  return Json{{"dimension", m.grid.dimension()},
              {"cell", m.grid.cell()},
              {"points_per_unit", m.grid.points_per_unit()},
              {"background", to_json(m.background)},
              {"bumps", bumps},
              {"omega_lower", m.config.bounds().lower},
              {"omega_upper", m.config.bounds().upper},
              {"lambda", m.lambda},
              {"config", to_json(m.config)}};
}

Json to_json(const BandMinimum& m) {
  Json second = std::isfinite(m.second_band) ? Json(m.second_band) : Json(nullptr);
  return Json{{"theta", to_json(m.theta)},      {"energy", m.energy},
              {"hessian", to_json(m.hessian)},  {"resolution", m.resolution},
              {"second_band", second},          {"iterations", m.iterations}};
}

Json to_json(const MinimaSet& s) {
  Json list = Json::array();
  for (const auto& m : s.minima) list.push_back(to_json(m));
  return Json{{"count", s.count()},
              {"energy", s.energy},
              {"grouping_tolerance", s.grouping_tolerance},
              {"merge_radius", s.merge_radius},
              {"resolution", s.resolution},
              {"simple", s.simple},
              {"minima", list}};
}

Json to_json(const QuadraticFit& f) {
  return Json{{"theta", to_json(f.theta)},
              {"hessian", to_json(f.hessian)},
              {"min_hessian_eigenvalue", f.min_hessian_eigenvalue},
              {"c_fit", f.c_fit},
              {"delta", f.delta},
              {"ball_points", f.ball_points}};
}

Json to_json(const CouplingMatrix& a) {
  Json entries = Json::array();
  for (Eigen::Index r = 0; r < a.entries.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < a.entries.cols(); ++c)
      row.push_back(Json::array({a.entries(r, c).real(), a.entries(r, c).imag()}));
    entries.push_back(std::move(row));
  }
  Json points = Json::array();
  for (const auto& p : a.points) points.push_back(to_json(p));
  std::vector<double> ev(a.hermitian_eigenvalues.data(), a.hermitian_eigenvalues.data() + a.hermitian_eigenvalues.size());
  return Json{{"order", a.order()},
              {"lambda", a.lambda},
              {"class", to_string(a.definiteness)},
              {"hermitian_eigenvalues", ev},
              {"scale", a.scale},
              {"points", points},
              {"entries", entries}};
}

Json to_json(const ThresholdScan& s) {
  Json entries = Json::array();
  for (const auto& e : s.entries) {
    Json j = to_json(e.coupling);
    j["min_abs_eigenvalue"] = e.min_abs_eigenvalue;
    j["margin"] = e.margin;
    entries.push_back(std::move(j));
  }
  return Json{{"class_at_zero", to_string(s.class_at_zero)},
              {"reference_coupling", s.reference_coupling},
              {"c0", s.c0},
              {"lambda0_estimate", s.lambda0},
              {"envelope_constant", s.envelope_constant},
              {"class_constant_to_lambda0", s.class_constant_to_lambda0},
              {"order_change", s.order_change},
              {"ladder", entries}};
}

Json to_json(const ConfigurationSpectrum& s) {
  return Json{{"config", to_json(s.config)},
              {"lambda", s.lambda},
              {"energy", s.energy},
              {"theta", to_json(s.theta)},
              {"resolution", s.resolution}};
}

Json to_json(const VerificationReport& r) {
  Json spectra = Json::array();
  for (const auto& s : r.spectra) spectra.push_back(to_json(s));
  Json out{{"check", r.check},
           {"lambda", r.lambda},
           {"class_at_zero", r.class_at_zero ? Json(to_string(*r.class_at_zero)) : Json(nullptr)},
           {"predicted_extreme", to_string(r.predicted)},
           {"alphabet", r.alphabet},
           {"max_period", r.max_period},
           {"predicted_index", r.predicted_index},
           {"argmin_index", r.argmin_index},
           {"argmin_is_predicted", r.argmin_is_predicted()},
           {"argmin_config", to_json(r.spectra.at(r.argmin_index).config)},
           {"gap", r.gap},
           {"budget", r.budget},
           {"verdict", r.pass ? "pass" : "fail"},
           {"spectra", spectra}};
  if (r.check == "fixed-sign") {
    Json pairs = Json::array();
    for (const auto& p : r.monotone_pairs)
      pairs.push_back(Json{{"lower", p.lower.values()},
                           {"upper", p.upper.values()},
                           {"theta", to_json(p.theta)},
                           {"max_violation", p.max_violation}});
    out["monotone"] = Json{{"tolerance", r.monotone_tolerance}, {"ok", r.monotone_ok}, {"pairs", pairs}};
  }
  out["notes"] = r.notes;
  return out;
}

Json to_json(const ProjectionCheck& c) {
  return Json{{"theta", to_json(c.theta)},
              {"subspace_dimension", c.subspace_dimension},
              {"gap", c.gap},
              {"gap_ok", c.gap_ok},
              {"min_eigenvalue", c.min_eigenvalue}};
}

Json to_json(const BoxSamplingSummary& s) {
  Json levels = Json::array();
  for (const auto& l : s.levels)
    levels.push_back(Json{{"box", l.box},
                          {"min_energy", l.min_energy},
                          {"max_energy", l.max_energy},
                          {"violations", l.violations}});
  return Json{{"predicted_infimum", s.predicted_infimum},
              {"budget", s.budget},
              {"samples", s.samples},
              {"monotone", s.monotone},
              {"verdict", s.pass ? "pass" : "fail"},
              {"levels", levels}};
}

std::string format_number(double x) { return Json(x).dump(); }

void write_bands_csv(std::ostream& os, const BandStructure& band) {
  const int d = band.grid.dimension();
  for (int a = 0; a < d; ++a) os << (a ? "," : "") << "theta_" << (a + 1);
  for (Eigen::Index n = 0; n < band.band_count(); ++n) os << ",E" << (n + 1);
  os << '\n';
  for (Eigen::Index i = 0; i < band.grid.size(); ++i) {
    const QuasiMomentum t = band.theta(i);
    for (int a = 0; a < d; ++a) os << (a ? "," : "") << format_number(t(a));
    for (Eigen::Index n = 0; n < band.band_count(); ++n) os << ',' << format_number(band.bands(i, n));
    os << '\n';
  }
}

void write_bands_svg(std::ostream& os, const BandStructure& band, const MinimaSet* minima) {
  require(band.grid.dimension() == 1, ErrorCode::IncompatibleDimensions, "band plots are drawn for d = 1 only");
  constexpr double width = 640, height = 420, left = 60, right = 20, top = 20, bottom = 40;
  const double t_lo = -std::numbers::pi / band.grid.cell()[0];
  const double t_hi = -t_lo;
  const double e_lo = band.bands.minCoeff();
  const double e_hi = band.bands.maxCoeff();
  const double e_span = e_hi > e_lo ? e_hi - e_lo : 1.0;
  auto px = [&](double t) { return left + (t - t_lo) / (t_hi - t_lo) * (width - left - right); };
  auto py = [&](double e) { return height - bottom - (e - e_lo) / e_span * (height - top - bottom); };
  auto num = [](double v) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(2);
    s << v;
    return s.str();
  };

  // Grid nodes are not sorted by theta (the zone wraps), so sort once.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(band.grid.size()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return band.theta(a)(0) < band.theta(b)(0); });

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<g stroke=\"black\" stroke-width=\"1\">\n";
  os << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - right << "\" y2=\""
     << height - bottom << "\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << height - bottom << "\"/>\n";
  os << "</g>\n";
  os << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<text x=\"" << left << "\" y=\"" << height - bottom + 16 << "\" text-anchor=\"middle\">" << num(t_lo) << "</text>\n";
  os << "<text x=\"" << px(0.0) << "\" y=\"" << height - bottom + 16 << "\" text-anchor=\"middle\">0</text>\n";
  os << "<text x=\"" << width - right << "\" y=\"" << height - bottom + 16 << "\" text-anchor=\"middle\">" << num(t_hi) << "</text>\n";
  os << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 6 << "\" text-anchor=\"middle\">theta</text>\n";
  os << "<text x=\"" << left - 6 << "\" y=\"" << py(e_lo) << "\" text-anchor=\"end\">" << num(e_lo) << "</text>\n";
  os << "<text x=\"" << left - 6 << "\" y=\"" << py(e_hi) + 10 << "\" text-anchor=\"end\">" << num(e_hi) << "</text>\n";
  os << "</g>\n";
  for (Eigen::Index n = 0; n < band.band_count(); ++n) {
    os << "<polyline fill=\"none\" stroke=\"" << (n == 0 ? "#1f4e9c" : "#777777") << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < order.size(); ++k)
      os << (k ? " " : "") << num(px(band.theta(order[k])(0))) << ',' << num(py(band.bands(order[k], n)));
    os << "\"/>\n";
  }
  if (minima)
    for (const auto& m : minima->minima)
      os << "<circle cx=\"" << num(px(m.theta(0))) << "\" cy=\"" << num(py(m.energy))
         << "\" r=\"4\" fill=\"#c0392b\"/>\n";
  os << "</svg>\n";
}

void write_verification_csv(std::ostream& os, const std::vector<VerificationReport>& reports) {
  os << "check,lambda,config,energy,resolution,is_predicted,is_argmin\n";
  for (const auto& r : reports)
    for (std::size_t i = 0; i < r.spectra.size(); ++i) {
      const auto& s = r.spectra[i];
      std::string values;
      for (std::size_t k = 0; k < s.config.values().size(); ++k)
        values += (k ? " " : "") + format_number(s.config.values()[k]);
      os << r.check << ',' << format_number(r.lambda) << ",\"" << values << "\"," << format_number(s.energy) << ','
         << format_number(s.resolution) << ',' << (i == r.predicted_index) << ',' << (i == r.argmin_index) << '\n';
    }
}

void write_json_file(const std::string& path, const Json& doc) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::InvalidArgument, "cannot write " + path);
  out << doc.dump(2) << '\n';
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::MissingUpstream, "cannot read " + path);
  return Json::parse(in);
}

}  // namespace bandedge
