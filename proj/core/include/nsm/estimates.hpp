#pragma once

// Order-of-magnitude classicality estimates in SI units: the size a
// condensed-matter sphere needs to hold out a given acceleration, the
// acceleration of the electron liquid carrying an avalanche, the slab length
// such a liquid would need, and the mass at which the self-energy phase
// reaches order unity over an interferometer's time of flight.

#include <optional>
#include <string>
#include <vector>

#include "nsm/selfgrav.hpp"

namespace nsm::estimates {

struct SphereEstimate {
  double min_radius = 0.0;  // m, margin = 1
  double min_mass = 0.0;    // kg
};

SphereEstimate sphere_classicality_estimate(
    double density, double a_max, double kappa = 1.0,
    selfgrav::FrequencyConvention convention = selfgrav::FrequencyConvention::nominal);

struct AvalancheSpec {
  double electrons = 1e7;
  double cross_section = 1e-9;  // m^2
  double transfer_time = 1e-8;  // s
  double carrier_density = 1e30;  // 1/m^3
  double carrier_mass = 9.1093837015e-31;  // kg

  void validate() const;
  bool operator==(const AvalancheSpec&) const = default;
};

struct AvalancheEstimate {
  double drift_speed = 0.0;   // m/s
  double acceleration = 0.0;  // m/s^2
  double mass_density = 0.0;  // kg/m^3
};

AvalancheEstimate avalanche_acceleration(const AvalancheSpec& spec);

/// Mass at which (6/5) kappa G M^2 / R(M) * t / hbar equals `target_phase`,
/// with R(M) = (3 M / (4 pi rho))^(1/3).
double interferometric_mass(double density, double time_of_flight, double target_phase,
                            double kappa = 1.0);

/// Self-energy phase (6/5) kappa G M^2 / R(M) * t / hbar of a sphere of mass M.
double self_energy_phase(double mass, double density, double time_of_flight, double kappa = 1.0);

struct SlabEstimate {
  double confining_acceleration = 0.0;  // omega^2 L / 2 for the given slab, m/s^2
  double margin = 0.0;
  /// Length at which the confining acceleration reaches a_max when the
  /// cross-section is extrapolated to d ~ L, outside the long-slab regime.
  double required_length = 0.0;
};

SlabEstimate slab_classicality_estimate(const selfgrav::SlabGeometry& geom, double a_max,
                                        double kappa = 1.0);

struct EstimateRow {
  std::string name;
  double value = 0.0;
  std::string unit;
  std::optional<double> quoted;  // round number quoted in the literature, if any
  std::string provenance;        // inputs the value was computed from
};

struct EstimateInputs {
  double condensed_density = 1e4;  // kg/m^3
  double afm_acceleration = 1e-9;  // m/s^2
  AvalancheSpec avalanche;
  double time_of_flight = 1e-2;    // s
  double target_phase = 1.0;       // rad
  double lead_length = 1.0;        // m; square cross-section taken from the avalanche spec
  std::vector<double> kappas{1.0, 1e3, 1e6};

  bool operator==(const EstimateInputs&) const = default;
};

/// Every headline number with its inputs, for each enhancement factor.
std::vector<EstimateRow> reproduce_estimates(const EstimateInputs& inputs = {});

}  // namespace nsm::estimates
