#pragma once

// Schematic threshold detector: a classical particle in the open well
//
//   V(xi, r) = a xi - b xi^3 + c r^2 - F xi
//
// where F is the Ehrenfest-averaged measurement force tilting the well.
// The saddle sits at xi_s = sqrt((a - F) / 3b). A particle prepared at the
// untilted saddle energy escapes only through the small region the tilt
// opens around the saddle; Monte Carlo sampling of that process gives the
// escape rate and its power law in F.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace nsm::escape {

struct SaddleModel {
  double a = 1.0;
  double b = 1.0;
  double c = 1.0;
  double m = 1.0;
  double force = 0.0;  // mean measurement force, >= 0

  void validate() const;
  bool operator==(const SaddleModel&) const = default;
};

double saddle_potential(const SaddleModel& model, double xi, double r_perp);

struct SaddlePoint {
  double xi = 0.0;
  double height = 0.0;
};

/// Exact saddle of the tilted potential; requires force < a.
SaddlePoint saddle_point(const SaddleModel& model);

/// Saddle height with no tilt, the threshold energy of the detector.
double threshold_energy(const SaddleModel& model);

/// First-order lowering of the saddle by the tilt, sqrt(a / 3b) F.
double barrier_lowering(const SaddleModel& model);

/// Radius of the disc around the saddle through which crossing is allowed,
/// (a / (3 b c^2))^(1/4) F^(1/2).
double crossing_circle(const SaddleModel& model);

/// Speed bound for crossing particles, (4 a / (3 b m^2))^(1/4) F^(1/2).
double max_crossing_speed(const SaddleModel& model);

enum class Ensemble {
  /// Positions uniform over the well interior, isotropic momentum of the
  /// magnitude fixed by the energy.
  configuration_uniform,
  /// Microcanonical (Liouville) measure: configuration density ~ K^((n-2)/2).
  liouville,
};

std::string to_string(Ensemble e);
Ensemble ensemble_from_string(const std::string& s);

struct EscapeOptions {
  int dofs = 3;  // 2: xi plus one transverse coordinate; 3: xi plus two
  Ensemble ensemble = Ensemble::configuration_uniform;
  double dt = 3e-4;
  /// Skip trajectories whose conserved transverse energy exceeds the energy
  /// available above the saddle; they can never escape.
  bool prune_trapped = true;
  unsigned threads = 1;
  double max_energy_drift = 1e-6;  // relative, per trajectory
  double confidence = 0.95;

  bool operator==(const EscapeOptions&) const = default;
};

struct EscapeEstimate {
  double force = 0.0;
  double energy = 0.0;
  double horizon = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t crossings = 0;
  std::uint64_t integrated = 0;       // trajectories actually integrated
  double escape_probability = 0.0;    // crossings / samples
  double probability_half_width = 0.0;
  double rate = 0.0;                  // crossings / (samples * horizon)
  double half_width = 0.0;            // confidence half-width of rate
  double upper_bound = 0.0;           // one-sided bound, meaningful when crossings == 0
  double max_energy_drift = 0.0;
  std::vector<std::string> warnings;

  bool operator==(const EscapeEstimate&) const = default;
};

/// Samples `samples` initial conditions at `energy` inside the well, integrates
/// each with velocity Verlet up to `horizon`, and counts first crossings of
/// xi = 2 xi_s (untilted). The random stream is split per block of sample
/// indices, so results do not depend on the thread count.
/// Throws AccuracyError if any trajectory drifts in energy beyond the limit.
EscapeEstimate monte_carlo_escape(const SaddleModel& model, double energy, std::uint64_t samples,
                                  double horizon, std::uint64_t seed,
                                  const EscapeOptions& options = {});

struct RatePoint {
  double force = 0.0;
  double rate = 0.0;
};

struct ExponentFit {
  double exponent = 0.0;
  double standard_error = 0.0;
  double ci_low = 0.0;   // 95%
  double ci_high = 0.0;
  double log_prefactor = 0.0;
  std::size_t points_used = 0;
  std::vector<std::string> warnings;
};

/// Least-squares slope of log(rate) against log(force). Nonpositive rates
/// are dropped with a warning; fewer than 3 usable points throws ConfigError.
ExponentFit exponent_fit(std::span<const RatePoint> points);

struct SweepPoint {
  double force = 0.0;
  std::uint64_t samples = 0;
};

/// Escape estimates for several forces at the threshold energy of `base`,
/// each point seeded from (seed, index).
std::vector<EscapeEstimate> rate_sweep(const SaddleModel& base, std::span<const SweepPoint> points,
                                       double horizon, std::uint64_t seed,
                                       const EscapeOptions& options = {});

enum class Regime { threshold, biased };

std::string to_string(Regime r);
Regime regime_from_string(const std::string& s);

/// Proportionality constants of the detection law, measured by Monte Carlo.
struct DetectorCalibration {
  double force_ref = 0.0;        // force delivered at |c+|^2 = 1
  double bias = 0.0;             // energy above threshold in the biased regime
  double p_ref_threshold = 0.0;  // escape probability at force_ref, threshold energy
  double p_ref_biased = 0.0;     // baseline-subtracted escape probability at force_ref
  double baseline = 0.0;         // biased-regime escape probability at zero force
  double threshold_exponent = 1.5;
};

DetectorCalibration calibrate_detector(const SaddleModel& base, double force_ref, double bias,
                                       std::uint64_t samples, double horizon, std::uint64_t seed,
                                       const EscapeOptions& options = {});

/// Calibration with fixed reference probabilities, for idealized detectors.
DetectorCalibration ideal_detector(double p_ref_threshold, double p_ref_biased);

struct DetectorResponse {
  double amplitude_sq = 0.0;
  Regime regime = Regime::threshold;
  double bias = 0.0;
  double discriminator = 0.0;  // baseline removed by the discriminator
  double probability = 0.0;
};

/// threshold: p = p_ref (|c+|^2)^(3/2); biased: p = p_ref |c+|^2. Clamped to [0, 1].
DetectorResponse detection_probability(double amplitude_sq, const DetectorCalibration& calibration,
                                       Regime regime);

struct DetectorSpec {
  DetectorCalibration calibration;
  Regime regime = Regime::biased;
};

struct JointStatistics {
  std::uint64_t trials = 0;
  double p1 = 0.0;  // detector 1 single-detector probability (driven by |c+|^2)
  double p2 = 0.0;  // detector 2 single-detector probability (driven by |c-|^2)
  double only_first = 0.0;
  double only_second = 0.0;
  double both = 0.0;
  double neither = 0.0;
  double both_sigma = 0.0;  // binomial standard error of `both` around p1 p2
};

/// Two independent detectors watching the two branches of one particle.
/// Nothing couples their outcomes, so both can fire.
JointStatistics two_detector_trial(double weight_plus, const DetectorSpec& first,
                                   const DetectorSpec& second, std::uint64_t trials,
                                   std::uint64_t seed);

}  // namespace nsm::escape
