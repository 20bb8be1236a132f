#include "nsm/estimates.hpp"

#include <cmath>
#include <sstream>

#include "nsm/constants.hpp"
#include "nsm/errors.hpp"

namespace nsm::estimates {

using constants::G;
using constants::hbar;
using constants::pi;

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be finite and > 0");
}

std::string g(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

SphereEstimate sphere_classicality_estimate(double density, double a_max, double kappa,
                                            selfgrav::FrequencyConvention convention) {
  require_positive(density, "density");
  require_positive(a_max, "a_max");
  // Any radius gives the frequency; the margin is linear in R.
  const auto profile = selfgrav::sphere_profile({1.0, density}, kappa, convention);
  const auto margin = selfgrav::classicality_margin(profile, a_max);
  SphereEstimate e;
  e.min_radius = margin.min_size;
  e.min_mass = 4.0 / 3.0 * pi * std::pow(e.min_radius, 3) * density;
  return e;
}

void AvalancheSpec::validate() const {
  require_positive(electrons, "electrons");
  require_positive(cross_section, "cross_section");
  require_positive(transfer_time, "transfer_time");
  require_positive(carrier_density, "carrier_density");
  require_positive(carrier_mass, "carrier_mass");
}

AvalancheEstimate avalanche_acceleration(const AvalancheSpec& spec) {
  spec.validate();
  AvalancheEstimate e;
  e.drift_speed = spec.electrons / (spec.carrier_density * spec.cross_section * spec.transfer_time);
  e.acceleration = e.drift_speed / spec.transfer_time;
  e.mass_density = spec.carrier_density * spec.carrier_mass;
  return e;
}

double self_energy_phase(double mass, double density, double time_of_flight, double kappa) {
  require_positive(density, "density");
  require_positive(time_of_flight, "time_of_flight");
  if (!(mass >= 0.0)) throw ConfigError("mass must be >= 0");
  if (mass == 0.0) return 0.0;
  const double radius = std::cbrt(3.0 * mass / (4.0 * pi * density));
  return 6.0 / 5.0 * kappa * G * mass * mass / radius * time_of_flight / hbar;
}

double interferometric_mass(double density, double time_of_flight, double target_phase,
                            double kappa) {
  require_positive(density, "density");
  require_positive(time_of_flight, "time_of_flight");
  require_positive(target_phase, "target_phase");
  require_positive(kappa, "kappa");
  // phase = K M^(5/3) with K = (6/5) kappa G t / hbar * (4 pi rho / 3)^(1/3).
  const double k = 6.0 / 5.0 * kappa * G * time_of_flight / hbar * std::cbrt(4.0 * pi * density / 3.0);
  return std::pow(target_phase / k, 3.0 / 5.0);
}

SlabEstimate slab_classicality_estimate(const selfgrav::SlabGeometry& geom, double a_max,
                                        double kappa) {
  require_positive(a_max, "a_max");
  const auto profile = selfgrav::slab_profile(geom, kappa);
  SlabEstimate e;
  e.confining_acceleration = profile.grav_freq_sq * profile.validity_radius;
  e.margin = e.confining_acceleration / a_max;
  const double f = selfgrav::shape_factor(geom.side_a / geom.side_b);
  e.required_length = 2.0 * a_max / (kappa * G * geom.density * f);
  return e;
}

std::vector<EstimateRow> reproduce_estimates(const EstimateInputs& in) {
  std::vector<EstimateRow> rows;
  const std::string afm = "rho0=" + g(in.condensed_density) + " kg/m^3, a_max=" +
                          g(in.afm_acceleration) + " m/s^2";
  const auto& av = in.avalanche;
  const auto aval = avalanche_acceleration(av);
  const std::string aval_src = "N=" + g(av.electrons) + ", A=" + g(av.cross_section) +
                               " m^2, t=" + g(av.transfer_time) + " s, n=" +
                               g(av.carrier_density) + " m^-3";

  rows.push_back({"avalanche_drift_speed", aval.drift_speed, "m/s", std::nullopt, aval_src});
  rows.push_back({"avalanche_acceleration", aval.acceleration, "m/s^2", 1e2, aval_src});
  rows.push_back({"electron_liquid_density", aval.mass_density, "kg/m^3", 1.0,
                  "n=" + g(av.carrier_density) + " m^-3, m=" + g(av.carrier_mass) + " kg"});

  for (double kappa : in.kappas) {
    const std::string k = "kappa=" + g(kappa);
    const bool newtonian = kappa == 1.0;
    const auto sphere = sphere_classicality_estimate(in.condensed_density, in.afm_acceleration, kappa);
    rows.push_back({"sphere_min_radius[" + k + "]", sphere.min_radius, "m",
                    newtonian ? std::optional(1e-3) : std::nullopt, afm + ", " + k});
    rows.push_back({"sphere_min_mass[" + k + "]", sphere.min_mass, "kg",
                    newtonian ? std::optional(1e-5) : std::nullopt, afm + ", " + k});

    const double side = std::sqrt(av.cross_section);
    const selfgrav::SlabGeometry lead{side, side, in.lead_length, aval.mass_density};
    const auto slab = slab_classicality_estimate(lead, aval.acceleration, kappa);
    const std::string lead_src = "a=b=" + g(side) + " m, L=" + g(in.lead_length) +
                                 " m, rho0=" + g(aval.mass_density) + " kg/m^3, a_max=" +
                                 g(aval.acceleration) + " m/s^2, " + k;
    rows.push_back({"lead_confining_acceleration[" + k + "]", slab.confining_acceleration, "m/s^2",
                    std::nullopt, lead_src});
    rows.push_back({"lead_required_length[" + k + "]", slab.required_length, "m", std::nullopt,
                    lead_src + ", d~L extrapolation"});

    const double mass = interferometric_mass(in.condensed_density, in.time_of_flight,
                                             in.target_phase, kappa);
    rows.push_back({"interferometric_mass[" + k + "]", mass, "kg",
                    newtonian ? std::optional(1e-14) : std::nullopt,
                    "rho0=" + g(in.condensed_density) + " kg/m^3, t=" + g(in.time_of_flight) +
                        " s, phase=" + g(in.target_phase) + " rad, " + k});
  }
  return rows;
}

}  // namespace nsm::estimates
