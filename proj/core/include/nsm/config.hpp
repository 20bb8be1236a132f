#pragma once

// Scenario configuration: one YAML document per run. See docs/config.md for
// the schema and every default.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nsm/dynamics.hpp"
#include "nsm/escape.hpp"
#include "nsm/estimates.hpp"
#include "nsm/selfgrav.hpp"

namespace nsm {

enum class ScenarioKind { criterion, evolve, escape, born, two_detector, estimates };

std::string to_string(ScenarioKind k);
/// Accepts "two-detector" and "two_detector".
ScenarioKind scenario_kind_from_string(std::string_view s);

struct CriterionParams {
  selfgrav::Geometry geometry = selfgrav::SphereGeometry{};
  double a_max = 0.0;  // m/s^2
  double kappa = 1.0;
  selfgrav::FrequencyConvention convention = selfgrav::FrequencyConvention::nominal;
  std::optional<double> spread;  // m; checks the quadratic potential's validity

  bool operator==(const CriterionParams&) const = default;
};

struct EvolveParams {
  dynamics::EvolveConfig run;

  bool operator==(const EvolveParams&) const = default;
};

struct EscapeParams {
  escape::SaddleModel model;
  std::vector<double> forces{1e-3, 3.16e-3, 1e-2, 3.16e-2, 1e-1};
  std::vector<std::uint64_t> samples{30'000'000, 13'000'000, 5'600'000, 2'400'000, 1'000'000};
  double horizon = 20.0;
  escape::EscapeOptions options;

  bool operator==(const EscapeParams&) const = default;
};

struct BornParams {
  escape::SaddleModel model;
  double force_ref = 4e-3;
  double bias = 0.02;
  std::uint64_t samples = 2'000'000;
  double horizon = 20.0;
  std::vector<double> amplitudes_sq{0.0625, 0.125, 0.25, 0.5, 1.0};
  escape::EscapeOptions options;

  bool operator==(const BornParams&) const = default;
};

struct DetectorParams {
  escape::Regime regime = escape::Regime::biased;
  double p_ref = 0.5;  // detection probability at |c|^2 = 1

  bool operator==(const DetectorParams&) const = default;
};

struct TwoDetectorParams {
  double weight_plus = 0.5;
  std::uint64_t trials = 100'000;
  DetectorParams first;
  DetectorParams second;

  bool operator==(const TwoDetectorParams&) const = default;
};

struct EstimatesParams {
  estimates::EstimateInputs inputs;

  bool operator==(const EstimatesParams&) const = default;
};

using ScenarioParams = std::variant<CriterionParams, EvolveParams, EscapeParams, BornParams,
                                    TwoDetectorParams, EstimatesParams>;

struct OutputSpec {
  std::string dir = "out";
  char delimiter = ',';

  bool operator==(const OutputSpec&) const = default;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  OutputSpec output;
  ScenarioParams params;

  ScenarioKind kind() const { return static_cast<ScenarioKind>(params.index()); }
  bool operator==(const ScenarioConfig&) const = default;
};

/// Parses and validates a YAML document. `expected` fills in a missing `kind`
/// and must agree with a present one. Throws ConfigError naming unknown keys,
/// missing keys, or the violated bound.
ScenarioConfig parse_config(std::string_view text,
                            std::optional<ScenarioKind> expected = std::nullopt);

ScenarioConfig load_config(const std::string& path,
                           std::optional<ScenarioKind> expected = std::nullopt);

/// Checks every range constraint; parse_config calls this.
void validate(const ScenarioConfig& config);

/// YAML with every field written out; parse_config(serialize(c)) == c.
std::string serialize(const ScenarioConfig& config);

}  // namespace nsm
