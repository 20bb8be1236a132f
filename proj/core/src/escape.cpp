#include "nsm/escape.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/tools/roots.hpp>

#include "nsm/errors.hpp"

namespace nsm::escape {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

constexpr std::uint64_t block_size = 4096;

std::mt19937_64 block_engine(std::uint64_t seed, std::uint64_t block) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

void SaddleModel::validate() const {
  for (double v : {a, b, c, m}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("saddle model needs a, b, c, m > 0");
  }
  if (!(force >= 0.0) || !std::isfinite(force)) throw ConfigError("measurement force must be >= 0");
}

double saddle_potential(const SaddleModel& model, double xi, double r_perp) {
  return model.a * xi - model.b * xi * xi * xi + model.c * r_perp * r_perp - model.force * xi;
}

SaddlePoint saddle_point(const SaddleModel& model) {
  model.validate();
  if (model.force >= model.a) {
    throw ConfigError("force " + fmt(model.force) + " >= a removes the saddle");
  }
  const double slope = model.a - model.force;
  SaddlePoint s;
  s.xi = std::sqrt(slope / (3.0 * model.b));
  s.height = 2.0 / 3.0 * slope * s.xi;
  return s;
}

double threshold_energy(const SaddleModel& model) {
  SaddleModel untilted = model;
  untilted.force = 0.0;
  return saddle_point(untilted).height;
}

double barrier_lowering(const SaddleModel& model) {
  model.validate();
  return std::sqrt(model.a / (3.0 * model.b)) * model.force;
}

double crossing_circle(const SaddleModel& model) {
  model.validate();
  return std::pow(model.a / (3.0 * model.b * model.c * model.c), 0.25) * std::sqrt(model.force);
}

double max_crossing_speed(const SaddleModel& model) {
  model.validate();
  return std::pow(4.0 * model.a / (3.0 * model.b * model.m * model.m), 0.25) *
         std::sqrt(model.force);
}

std::string to_string(Ensemble e) {
  return e == Ensemble::configuration_uniform ? "configuration_uniform" : "liouville";
}

Ensemble ensemble_from_string(const std::string& s) {
  if (s == "configuration_uniform") return Ensemble::configuration_uniform;
  if (s == "liouville") return Ensemble::liouville;
  throw ConfigError("unknown ensemble '" + s + "' (expected configuration_uniform | liouville)");
}

namespace {

struct Phase {
  std::array<double, 3> q{};  // xi, x, y
  std::array<double, 3> p{};
};

class Trajectories {
 public:
  Trajectories(const SaddleModel& model, double energy, double horizon, const EscapeOptions& opt)
      : model_(model), opt_(opt), energy_(energy), horizon_(horizon) {
    const SaddlePoint sp = saddle_point(model);
    xi_hi_ = sp.xi;
    escape_xi_ = 2.0 * std::sqrt(model.a / (3.0 * model.b));
    open_energy_ = energy - sp.height;
    energy_scale_ = std::max(std::abs(energy), threshold_energy(model));

    const double v_min = -sp.height;  // well bottom at -xi_s
    if (!(energy > v_min)) throw ConfigError("energy lies below the bottom of the well");
    k_max_ = energy - v_min;
    r_max_ = std::sqrt(k_max_ / model.c);

    // Left turning point on the axis: a' xi - b xi^3 = E with xi < -xi_s.
    const double slope = model.a - model.force;
    auto axis = [&](double xi) { return slope * xi - model.b * xi * xi * xi - energy; };
    double lo = -2.0 * sp.xi;
    while (axis(lo) < 0.0) lo *= 2.0;
    boost::math::tools::eps_tolerance<double> tol(50);
    const auto root = boost::math::tools::bisect(axis, lo, -sp.xi, tol);
    xi_lo_ = root.first;
  }

  struct Outcome {
    std::uint64_t crossings = 0;
    std::uint64_t integrated = 0;
    double max_drift = 0.0;
  };

  Outcome run_block(std::uint64_t seed, std::uint64_t block, std::uint64_t count) const {
    auto rng = block_engine(seed, block);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int n = opt_.dofs;

    Outcome out;
    for (std::uint64_t i = 0; i < count; ++i) {
      Phase s;
      double kinetic = 0.0;
      for (;;) {
        s.q[0] = xi_lo_ + (xi_hi_ - xi_lo_) * unit(rng);
        s.q[1] = r_max_ * (2.0 * unit(rng) - 1.0);
        s.q[2] = n == 3 ? r_max_ * (2.0 * unit(rng) - 1.0) : 0.0;
        kinetic = energy_ - potential(s.q);
        if (kinetic <= 0.0) continue;
        // Momentum-shell volume in 3 dof grows as K^(1/2); in 2 dof it is flat.
        if (opt_.ensemble == Ensemble::liouville && n == 3 &&
            unit(rng) > std::sqrt(kinetic / k_max_)) {
          continue;
        }
        break;
      }
      std::array<double, 3> dir{gauss(rng), gauss(rng), n == 3 ? gauss(rng) : 0.0};
      const double len = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
      const double pmag = std::sqrt(2.0 * model_.m * kinetic);
      for (int k = 0; k < 3; ++k) s.p[k] = pmag * dir[k] / len;

      if (opt_.prune_trapped) {
        const double r2 = s.q[1] * s.q[1] + s.q[2] * s.q[2];
        const double transverse =
            model_.c * r2 + (s.p[1] * s.p[1] + s.p[2] * s.p[2]) / (2.0 * model_.m);
        if (transverse > open_energy_ + 1e-6 * energy_scale_) continue;
      }
      ++out.integrated;
      double drift = 0.0;
      if (integrate(s, drift)) ++out.crossings;
      out.max_drift = std::max(out.max_drift, drift);
    }
    return out;
  }

 private:
  double potential(const std::array<double, 3>& q) const {
    return saddle_potential(model_, q[0], 0.0) + model_.c * (q[1] * q[1] + q[2] * q[2]);
  }

  std::array<double, 3> force(const std::array<double, 3>& q) const {
    return {-(model_.a - model_.force) + 3.0 * model_.b * q[0] * q[0], -2.0 * model_.c * q[1],
            -2.0 * model_.c * q[2]};
  }

  double hamiltonian(const Phase& s) const {
    return (s.p[0] * s.p[0] + s.p[1] * s.p[1] + s.p[2] * s.p[2]) / (2.0 * model_.m) +
           potential(s.q);
  }

  // Velocity Verlet until the first crossing of the escape plane or the horizon.
  bool integrate(Phase& s, double& drift) const {
    const double dt = opt_.dt;
    const double e0 = hamiltonian(s);
    const auto steps = static_cast<std::uint64_t>(std::ceil(horizon_ / dt));
    auto f = force(s.q);
    for (std::uint64_t k = 0; k < steps; ++k) {
      for (int j = 0; j < 3; ++j) s.p[j] += 0.5 * dt * f[j];
      for (int j = 0; j < 3; ++j) s.q[j] += dt * s.p[j] / model_.m;
      f = force(s.q);
      for (int j = 0; j < 3; ++j) s.p[j] += 0.5 * dt * f[j];
      if (s.q[0] > escape_xi_) return true;
      drift = std::max(drift, std::abs(hamiltonian(s) - e0) / energy_scale_);
    }
    return false;
  }

  SaddleModel model_;
  EscapeOptions opt_;
  double energy_;
  double horizon_;
  double xi_lo_ = 0.0;
  double xi_hi_ = 0.0;
  double r_max_ = 0.0;
  double k_max_ = 0.0;
  double escape_xi_ = 0.0;
  double open_energy_ = 0.0;
  double energy_scale_ = 1.0;
};

}  // namespace

EscapeEstimate monte_carlo_escape(const SaddleModel& model, double energy, std::uint64_t samples,
                                  double horizon, std::uint64_t seed,
                                  const EscapeOptions& options) {
  model.validate();
  if (options.dofs != 2 && options.dofs != 3) throw ConfigError("dofs must be 2 or 3");
  if (samples == 0) throw ConfigError("samples must be > 0");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be > 0");
  if (!(options.dt > 0.0) || options.dt > horizon) throw ConfigError("dt must lie in (0, horizon]");
  if (!(options.confidence > 0.0 && options.confidence < 1.0)) {
    throw ConfigError("confidence must lie in (0, 1)");
  }

  EscapeEstimate est;
  est.force = model.force;
  est.energy = energy;
  est.horizon = horizon;
  est.samples = samples;
  if (samples < 1000) est.warnings.push_back("fewer than 1000 samples");
  if (energy > threshold_energy(model) * (1.0 + 1e-12)) {
    est.warnings.push_back("energy above the untilted saddle: the well is open without force");
  }

  const Trajectories traj(model, energy, horizon, options);
  const std::uint64_t blocks = (samples + block_size - 1) / block_size;
  std::vector<Trajectories::Outcome> outcomes(blocks);
  auto work = [&](std::uint64_t b) {
    const std::uint64_t count = std::min(block_size, samples - b * block_size);
    outcomes[b] = traj.run_block(seed, b, count);
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads,
                                                           static_cast<unsigned>(blocks)));
  if (threads == 1) {
    for (std::uint64_t b = 0; b < blocks; ++b) work(b);
  } else {
    std::atomic<std::uint64_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::uint64_t b = next++; b < blocks; b = next++) work(b);
      });
    }
  }

  for (const auto& o : outcomes) {
    est.crossings += o.crossings;
    est.integrated += o.integrated;
    est.max_energy_drift = std::max(est.max_energy_drift, o.max_drift);
  }
  if (est.max_energy_drift > options.max_energy_drift) {
    throw AccuracyError("integrator energy drift " + fmt(est.max_energy_drift) +
                        " exceeds the limit " + fmt(options.max_energy_drift) + "; reduce dt");
  }

  const auto n = static_cast<double>(samples);
  const double z = boost::math::quantile(boost::math::normal(),
                                         0.5 + 0.5 * options.confidence);
  est.escape_probability = static_cast<double>(est.crossings) / n;
  const double p = est.escape_probability;
  est.probability_half_width = z * std::sqrt(p * (1.0 - p) / n);
  est.rate = p / horizon;
  est.half_width = est.probability_half_width / horizon;
  // Upper bound from zero observed events at the chosen confidence.
  est.upper_bound = est.crossings == 0 ? -std::log(1.0 - options.confidence) / (n * horizon)
                                       : est.rate + est.half_width;
  return est;
}

ExponentFit exponent_fit(std::span<const RatePoint> points) {
  ExponentFit fit;
  std::vector<std::pair<double, double>> xy;
  for (const auto& pt : points) {
    if (pt.force > 0.0 && pt.rate > 0.0 && std::isfinite(pt.rate)) {
      xy.emplace_back(std::log(pt.force), std::log(pt.rate));
    } else {
      fit.warnings.push_back("dropped point with force " + fmt(pt.force) + " and rate " +
                             fmt(pt.rate));
    }
  }
  if (xy.size() < 3) throw ConfigError("exponent fit needs at least 3 positive rates");
  if (xy.size() < 5) fit.warnings.push_back("fewer than 5 usable force values");

  const auto [lo, hi] = std::minmax_element(xy.begin(), xy.end());
  if (hi->first - lo->first < 2.0 * std::log(10.0)) {
    fit.warnings.push_back("forces span less than two decades");
  }

  const auto n = static_cast<double>(xy.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : xy) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : xy) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0.0) throw ConfigError("exponent fit needs at least two distinct forces");
  fit.exponent = sxy / sxx;
  fit.log_prefactor = my - fit.exponent * mx;
  double ssr = 0.0;
  for (const auto& [x, y] : xy) {
    const double r = y - fit.log_prefactor - fit.exponent * x;
    ssr += r * r;
  }
  fit.points_used = xy.size();
  fit.standard_error = std::sqrt(ssr / (n - 2.0) / sxx);
  const double t = boost::math::quantile(boost::math::students_t(n - 2.0), 0.975);
  fit.ci_low = fit.exponent - t * fit.standard_error;
  fit.ci_high = fit.exponent + t * fit.standard_error;
  return fit;
}

std::vector<EscapeEstimate> rate_sweep(const SaddleModel& base, std::span<const SweepPoint> points,
                                       double horizon, std::uint64_t seed,
                                       const EscapeOptions& options) {
  const double energy = threshold_energy(base);
  std::vector<EscapeEstimate> out;
  out.reserve(points.size());
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::vector<std::uint32_t> seeds(2 * points.size());
  seq.generate(seeds.begin(), seeds.end());
  for (std::size_t i = 0; i < points.size(); ++i) {
    SaddleModel model = base;
    model.force = points[i].force;
    const std::uint64_t s = (static_cast<std::uint64_t>(seeds[2 * i]) << 32) | seeds[2 * i + 1];
    out.push_back(monte_carlo_escape(model, energy, points[i].samples, horizon, s, options));
  }
  return out;
}

std::string to_string(Regime r) { return r == Regime::threshold ? "threshold" : "biased"; }

Regime regime_from_string(const std::string& s) {
  if (s == "threshold") return Regime::threshold;
  if (s == "biased") return Regime::biased;
  throw ConfigError("unknown regime '" + s + "' (expected threshold | biased)");
}

DetectorCalibration calibrate_detector(const SaddleModel& base, double force_ref, double bias,
                                       std::uint64_t samples, double horizon, std::uint64_t seed,
                                       const EscapeOptions& options) {
  if (!(force_ref > 0.0)) throw ConfigError("reference force must be > 0");
  if (!(bias > 0.0)) throw ConfigError("bias must be > 0");
  DetectorCalibration cal;
  cal.force_ref = force_ref;
  cal.bias = bias;

  const double threshold = threshold_energy(base);
  SaddleModel driven = base;
  driven.force = force_ref;
  SaddleModel idle = base;
  idle.force = 0.0;

  cal.p_ref_threshold =
      monte_carlo_escape(driven, threshold, samples, horizon, seed, options).escape_probability;
  const double on = monte_carlo_escape(driven, threshold + bias, samples, horizon, seed + 1, options)
                        .escape_probability;
  cal.baseline = monte_carlo_escape(idle, threshold + bias, samples, horizon, seed + 2, options)
                     .escape_probability;
  cal.p_ref_biased = std::max(0.0, on - cal.baseline);
  return cal;
}

DetectorCalibration ideal_detector(double p_ref_threshold, double p_ref_biased) {
  for (double p : {p_ref_threshold, p_ref_biased}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("reference probabilities must lie in [0, 1]");
  }
  DetectorCalibration cal;
  cal.p_ref_threshold = p_ref_threshold;
  cal.p_ref_biased = p_ref_biased;
  return cal;
}

DetectorResponse detection_probability(double amplitude_sq, const DetectorCalibration& calibration,
                                       Regime regime) {
  if (!(amplitude_sq >= 0.0 && amplitude_sq <= 1.0)) {
    throw ConfigError("|c+|^2 must lie in [0, 1]");
  }
  DetectorResponse r;
  r.amplitude_sq = amplitude_sq;
  r.regime = regime;
  if (regime == Regime::threshold) {
    r.probability =
        calibration.p_ref_threshold * std::pow(amplitude_sq, calibration.threshold_exponent);
  } else {
    r.bias = calibration.bias;
    r.discriminator = calibration.baseline;
    r.probability = calibration.p_ref_biased * amplitude_sq;
  }
  r.probability = std::clamp(r.probability, 0.0, 1.0);
  return r;
}

JointStatistics two_detector_trial(double weight_plus, const DetectorSpec& first,
                                   const DetectorSpec& second, std::uint64_t trials,
                                   std::uint64_t seed) {
  if (!(weight_plus >= 0.0 && weight_plus <= 1.0)) throw ConfigError("|c+|^2 must lie in [0, 1]");
  if (trials == 0) throw ConfigError("trials must be > 0");

  JointStatistics j;
  j.trials = trials;
  j.p1 = detection_probability(weight_plus, first.calibration, first.regime).probability;
  j.p2 = detection_probability(1.0 - weight_plus, second.calibration, second.regime).probability;

  std::mt19937_64 rng1 = block_engine(seed, 1);
  std::mt19937_64 rng2 = block_engine(seed, 2);
  std::bernoulli_distribution fire1(j.p1);
  std::bernoulli_distribution fire2(j.p2);
  std::uint64_t counts[2][2] = {{0, 0}, {0, 0}};
  for (std::uint64_t t = 0; t < trials; ++t) {
    ++counts[fire1(rng1) ? 1 : 0][fire2(rng2) ? 1 : 0];
  }
  const auto n = static_cast<double>(trials);
  j.both = static_cast<double>(counts[1][1]) / n;
  j.only_first = static_cast<double>(counts[1][0]) / n;
  j.only_second = static_cast<double>(counts[0][1]) / n;
  j.neither = static_cast<double>(counts[0][0]) / n;
  const double q = j.p1 * j.p2;
  j.both_sigma = std::sqrt(q * (1.0 - q) / n);
  return j;
}

}  // namespace nsm::escape
