#pragma once

// Two-branch centre-of-mass dynamics in dimensionless units (hbar = M =
// omega_gr = 1). Each branch psi_+/- evolves under
//
//   i d/dt psi = [ -1/2 d^2/dx^2 - (F_pm + F_0) x + 1/2 (x - x*)^2 ] psi
//
// where x* = |c+|^2 <x>_+ + |c-|^2 <x>_- is the common centre, refreshed
// every step. The harmonic term is switched off for gravity-free controls.
// The spatially constant part of the self-potential, V0 + 1/2 Delta^2, is
// carried as a separately accumulated global phase.

#include <complex>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "nsm/selfgrav.hpp"

namespace nsm::dynamics {

using Complex = std::complex<double>;
using Wavefunction = std::vector<Complex>;

struct GridSpec {
  std::size_t points = 1024;  // power of two, >= 64
  double extent = 32.0;       // domain is [-extent, extent)
  double dt = 1e-3;
  std::size_t steps = 1000;

  double dx() const { return 2.0 * extent / static_cast<double>(points); }
  double x(std::size_t j) const { return -extent + static_cast<double>(j) * dx(); }
  void validate() const;

  bool operator==(const GridSpec&) const = default;
};

struct QuasiSpinAmplitudes {
  Complex c_plus{1.0, 0.0};
  Complex c_minus{0.0, 0.0};

  double weight_plus() const { return std::norm(c_plus); }
  double weight_minus() const { return std::norm(c_minus); }
  /// Throws ConfigError unless |c+|^2 + |c-|^2 = 1 within 1e-12.
  void validate() const;

  bool operator==(const QuasiSpinAmplitudes&) const = default;
};

/// Constant forces; the potentials are V_pm = -F_pm x and V_0 = -F_0 x.
struct MeasurementForces {
  double plus = 0.0;
  double minus = 0.0;
  double common = 0.0;

  /// Ehrenfest-averaged force on the compound.
  double averaged(const QuasiSpinAmplitudes& a) const {
    return a.weight_plus() * plus + a.weight_minus() * minus + common;
  }

  bool operator==(const MeasurementForces&) const = default;
};

struct BranchState {
  Wavefunction psi_plus;
  Wavefunction psi_minus;
  QuasiSpinAmplitudes amplitudes;
  double time = 0.0;
  double phase = 0.0;  // accumulated global phase, radians
};

struct BranchMoments {
  double norm = 0.0;
  double mean = 0.0;
  double spread = 0.0;     // standard deviation of |psi|^2
  double edge_mass = 0.0;  // probability in the outer 5% of the grid on each side
};

struct StateDiagnostics {
  BranchMoments plus;
  BranchMoments minus;
  double center = 0.0;           // x*
  double separation = 0.0;       // <x>_+ - <x>_-
  double compound_spread = 0.0;  // std dev of |c+|^2 |psi+|^2 + |c-|^2 |psi-|^2
  double gravity_force = 0.0;    // -(w+ (<x>_+ - x*) + w- (<x>_- - x*)), identically zero
};

BranchMoments moments(const Wavefunction& psi, const GridSpec& grid);
StateDiagnostics diagnose(const BranchState& state, const GridSpec& grid);

struct Scaling {
  double length = 0.0;  // lambda = sqrt(hbar / (M omega)), m
  double time = 0.0;    // tau = 1 / omega, s
  double force = 0.0;   // M lambda omega^2, N
  double energy = 0.0;  // hbar omega, J
  double validity_radius = 0.0;  // profile validity radius in units of lambda
};

/// Unit system in which the self-gravity well is 1/2 (x - x*)^2.
/// Throws ConfigError for a profile with omega^2 = 0 (run gravity-free instead).
Scaling nondimensionalize(const selfgrav::BodyProfile& profile);

/// Both branches start as psi ~ exp(-(x - center)^2 / (2 width^2)), so each
/// branch spread is width / sqrt(2). Throws ConfigError when fewer than 8 grid
/// points cover `width` or the Gaussian tail beyond the domain edge exceeds 1e-12.
BranchState init_gaussian(const GridSpec& grid, double center, double width,
                          const QuasiSpinAmplitudes& amplitudes);

struct StepSettings {
  bool gravity_on = true;
  double well_depth = 0.0;  // V0 in units of hbar omega, enters the phase only
  double edge_tolerance = 1e-6;
};

/// Strang-split propagator: half kinetic step in Fourier space, full
/// potential step with x* taken from the current density, half kinetic step.
class SplitStepPropagator {
 public:
  SplitStepPropagator(const GridSpec& grid, const MeasurementForces& forces,
                      StepSettings settings = {});
  ~SplitStepPropagator();
  SplitStepPropagator(SplitStepPropagator&&) noexcept;
  SplitStepPropagator& operator=(SplitStepPropagator&&) noexcept;
  SplitStepPropagator(const SplitStepPropagator&) = delete;
  SplitStepPropagator& operator=(const SplitStepPropagator&) = delete;

  /// Advances one step; `start` must describe `state` on entry. Returns the
  /// diagnostics of the new state. Throws AccuracyError when a populated branch
  /// puts more than edge_tolerance of its mass into the outer 5% of the grid.
  StateDiagnostics advance(BranchState& state, const StateDiagnostics& start) const;
  StateDiagnostics advance(BranchState& state) const;

  /// Mean-field energy sum_pm |c_pm|^2 <T + V_ext>_pm + 1/2 Delta^2 (gravity on).
  double energy(const BranchState& state) const;

  const GridSpec& grid() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One split-operator step (builds a propagator; prefer SplitStepPropagator in loops).
BranchState step(const BranchState& state, const MeasurementForces& forces, bool gravity_on,
                 const GridSpec& grid);

struct DynamicsRecord {
  double time = 0.0;
  double mean_plus = 0.0;
  double mean_minus = 0.0;
  double center = 0.0;
  double separation = 0.0;
  double spread_plus = 0.0;
  double spread_minus = 0.0;
  double compound_spread = 0.0;
  double gravity_force = 0.0;
  double compound_acceleration = 0.0;  // averaged measurement force (M = 1)
  double phase = 0.0;
  double norm_plus = 0.0;
  double norm_minus = 0.0;
  double energy = 0.0;
};

struct TimeSeries {
  std::vector<DynamicsRecord> records;
  QuasiSpinAmplitudes amplitudes;
  MeasurementForces forces;
  double sample_interval = 0.0;
  double dt = 0.0;
};

struct EvolveConfig {
  GridSpec grid;
  double center = 0.0;
  double width = 1.0;
  QuasiSpinAmplitudes amplitudes;
  MeasurementForces forces;
  bool gravity_on = true;
  double well_depth = 0.0;
  /// Dimensionless validity radius of the quadratic self-potential; displacements
  /// from x* or spreads above 10% of it warn, above it throw RegimeError.
  double validity_radius = 1e6;
  std::size_t sample_every = 10;

  bool operator==(const EvolveConfig&) const = default;
};

struct RunResult {
  TimeSeries series;
  BranchState final_state;
  std::vector<std::string> warnings;
};

RunResult run(const EvolveConfig& config);

struct EhrenfestAudit {
  std::size_t samples = 0;
  double max_gravity_force = 0.0;
  double gravity_tolerance = 1e-10;
  double expected_acceleration = 0.0;
  double max_acceleration_error = 0.0;  // relative to the force scale
  double acceleration_tolerance = 0.0;  // 1000 dt^2
  bool gravity_ok = false;
  bool acceleration_ok = false;

  bool ok() const { return gravity_ok && acceleration_ok; }
};

/// Checks the vanishing compound gravity force and compares the central
/// finite-difference acceleration of x* with the averaged measurement force.
EhrenfestAudit ehrenfest_audit(const TimeSeries& series);

}  // namespace nsm::dynamics
