#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "omlab/ballmass.hpp"
#include "omlab/omfit.hpp"
#include "omlab/verify.hpp"

namespace omlab {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportSchema = "omlab-report/1";
inline constexpr const char* kCsvVersion = "omlab-csv/1";

/// Finite numbers as numbers; infinities and NaN as the strings "+inf", "-inf", "nan".
Json json_number(double v);

Json to_json(const LinearFit& f);
Json to_json(const OMDifferenceEstimate& e);
Json to_json(const DimensionFit& f);
Json to_json(const SmallBallFit& f);
Json to_json(const AnchorReport& a);
Json to_json(const TransformReport& r);
Json to_json(const DivergenceReport& r);
Json to_json(const RigidityReport& r);
Json to_json(const BallMassEstimate& e);

/// Fixed-width text tables for terminals.
void write_text(std::ostream& out, const TransformReport& r);
void write_text(std::ostream& out, const DivergenceReport& r);
void write_text(std::ostream& out, const RigidityReport& r);
void write_text(std::ostream& out, const OMDifferenceEstimate& e);
void write_text(std::ostream& out, const DimensionFit& f);
void write_text(std::ostream& out, const SmallBallFit& f);

/// CSV tables; the first line is a comment carrying the CSV version and the
/// config digest.
void write_radius_csv(std::ostream& out, const std::vector<RadiusSample>& samples, const std::string& digest);
/// Two-column plot data: r, log-ratio.
void write_log_ratio_plot(std::ostream& out, const std::vector<RadiusSample>& samples, const std::string& digest);
/// Two-column plot data: log r, log mass.
void write_log_mass_plot(std::ostream& out, const std::vector<SmallBallPoint>& points, const std::string& digest);

}  // namespace omlab
