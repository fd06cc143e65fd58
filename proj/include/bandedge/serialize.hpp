#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "bandedge/coupling.hpp"
#include "bandedge/floquet.hpp"
#include "bandedge/verifier.hpp"

namespace bandedge {

using Json = nlohmann::ordered_json;

Json to_json(const Point& p);
Json to_json(const Eigen::MatrixXd& m);    // row-major nested arrays
Json to_json(const Bump& b);
Json to_json(const PeriodicBackground& w);
Json to_json(const DisorderConfiguration& c);
Json to_json(const BlochModel& m);         // includes the configuration
Json to_json(const BandMinimum& m);
Json to_json(const MinimaSet& s);
Json to_json(const QuadraticFit& f);
Json to_json(const CouplingMatrix& a);     // entries as [re, im] pairs
Json to_json(const ThresholdScan& s);
Json to_json(const ConfigurationSpectrum& s);
Json to_json(const VerificationReport& r);
Json to_json(const ProjectionCheck& c);
Json to_json(const BoxSamplingSummary& s);

/// Number formatting shared by every text artifact (shortest round-trip form).
std::string format_number(double x);

/// theta_1[,theta_2],E1,...,En with one row per grid node.
void write_bands_csv(std::ostream& os, const BandStructure& band);

/// d = 1 only: band curves over the zone with the minima marked.
void write_bands_svg(std::ostream& os, const BandStructure& band, const MinimaSet* minima);

/// One row per configuration of every report.
void write_verification_csv(std::ostream& os, const std::vector<VerificationReport>& reports);

/// Writes `doc.dump(2)` plus a newline.
void write_json_file(const std::string& path, const Json& doc);
Json read_json_file(const std::string& path);

}  // namespace bandedge
