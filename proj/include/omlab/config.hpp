#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "omlab/ballmass.hpp"
#include "omlab/omfit.hpp"
#include "omlab/spaces.hpp"
#include "omlab/verify.hpp"

namespace omlab {

/// section -> key -> raw value
using RawConfig = std::map<std::string, std::map<std::string, std::string>>;

/// A validated experiment. Every field expression is parsed and evaluated,
/// every number range-checked, before any ball mass is computed.
struct ExperimentConfig {
    RawConfig raw;
    std::string digest;  // SHA-256 of the canonical resolved config

    std::shared_ptr<const SampledSpace> space;
    std::optional<ScalarField> U, V, f, h, U2;
    bool conformal = false;  // metric.conformal = U
    bool tilt = false;       // measure.tilt = V

    RadiusSchedule schedule;
    std::vector<double> smallball_radii;
    SmallBallOptions smallball;

    PairList pairs;
    std::vector<std::string> pair_names;
    std::optional<std::size_t> anchor, anchor2;

    HarnessOptions harness;
    double p = 0.0;
    double c = 0.0;
    double sign = 1.0;
    std::string out_dir = "out";
    std::string prefix;

    MetricSpec metric() const;
    MeasureSpec measure() const;
};

/// Parses INI text. `overrides` are "section.key=value" strings applied
/// before validation. Throws InputError naming the offending key.
RawConfig parse_raw_config(const std::string& text, const std::vector<std::string>& overrides = {});

/// Canonical "section.key=value" lines, sorted; worker count and output
/// location are left out because they do not change results.
std::string canonical_config(const RawConfig& raw);
std::string sha256_hex(const std::string& data);

ExperimentConfig build_config(const RawConfig& raw);
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Names every accepted key, for error messages and the README.
const std::map<std::string, std::vector<std::string>>& config_schema();

}  // namespace omlab
