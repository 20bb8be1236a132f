#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "nsm/errors.hpp"
#include "nsm/escape.hpp"

using namespace nsm;
using namespace nsm::escape;

namespace {

SaddleModel unit_model(double force = 0.0) { return {1.0, 1.0, 1.0, 1.0, force}; }

double binomial_sigma(const EscapeEstimate& e) {
  const double p = e.escape_probability;
  return std::sqrt(p * (1.0 - p) / static_cast<double>(e.samples));
}

}  // namespace

TEST(Saddle, PotentialAtOrigin) {
  for (double f : {0.0, 0.1, 0.5}) EXPECT_EQ(saddle_potential(unit_model(f), 0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(saddle_potential({2.0, 3.0, 4.0, 1.0, 0.5}, 1.0, 0.5), 2.0 - 3.0 + 1.0 - 0.5);
}

TEST(Saddle, UntiltedStationaryPoint) {
  const SaddleModel m{2.0, 0.5, 1.0, 1.0, 0.0};
  const auto s = saddle_point(m);
  EXPECT_DOUBLE_EQ(s.xi, std::sqrt(2.0 / 1.5));
  EXPECT_DOUBLE_EQ(s.height, 2.0 * 2.0 / 3.0 * std::sqrt(2.0 / 1.5));
  EXPECT_DOUBLE_EQ(threshold_energy(m), s.height);
  // The potential is stationary there.
  const double h = 1e-6;
  const double slope = (saddle_potential(m, s.xi + h, 0.0) - saddle_potential(m, s.xi - h, 0.0)) / (2 * h);
  EXPECT_NEAR(slope, 0.0, 1e-9);
}

TEST(Saddle, FirstOrderLowering) {
  const auto m0 = unit_model();
  const double h0 = saddle_point(m0).height;
  for (double f : {1e-3, 1e-2, 1e-1}) {
    const auto m = unit_model(f);
    const double exact = h0 - saddle_point(m).height;
    const double residual = std::abs(exact - barrier_lowering(m));
    // Second-order remainder F^2 / (4 sqrt(3 a b)).
    EXPECT_LT(residual, f * f) << "F=" << f;
    EXPECT_GT(residual, 0.1 * f * f) << "F=" << f;
  }
  EXPECT_THROW(saddle_point(unit_model(1.0)), ConfigError);
}

TEST(CrossingCircle, Values) {
  EXPECT_EQ(crossing_circle(unit_model()), 0.0);
  EXPECT_NEAR(crossing_circle(unit_model(0.01)), 0.0759836, 1e-7);
  EXPECT_DOUBLE_EQ(crossing_circle(unit_model(0.04)), 2.0 * crossing_circle(unit_model(0.01)));
}

TEST(CrossingSpeed, Values) {
  EXPECT_EQ(max_crossing_speed(unit_model()), 0.0);
  EXPECT_NEAR(max_crossing_speed(unit_model(0.01)), 0.107457, 1e-6);
  for (double f : {1e-3, 0.05}) {
    const SaddleModel m{1.5, 0.7, 2.0, 0.3, f};
    const double v = max_crossing_speed(m);
    EXPECT_NEAR(0.5 * m.m * v * v / barrier_lowering(m), 1.0, 1e-14);
  }
}

TEST(MonteCarlo, ClosedWellNeverEscapes) {
  EscapeOptions o;
  const auto e = monte_carlo_escape(unit_model(), threshold_energy(unit_model()), 100000, 20.0, 7, o);
  EXPECT_EQ(e.crossings, 0u);
  EXPECT_EQ(e.rate, 0.0);
  EXPECT_GT(e.upper_bound, 0.0);
  o.prune_trapped = false;
  const auto full = monte_carlo_escape(unit_model(), threshold_energy(unit_model()), 1500, 20.0, 7, o);
  EXPECT_EQ(full.crossings, 0u);
  EXPECT_EQ(full.integrated, 1500u);
  EXPECT_LT(full.max_energy_drift, 1e-6);
}

TEST(MonteCarlo, PruningDoesNotChangeCounts) {
  for (int dofs : {2, 3}) {
    EscapeOptions on;
    on.dofs = dofs;
    EscapeOptions off = on;
    off.prune_trapped = false;
    const auto m = unit_model(0.1);
    const double e = threshold_energy(m);
    const auto a = monte_carlo_escape(m, e, 3000, 20.0, 11, on);
    const auto b = monte_carlo_escape(m, e, 3000, 20.0, 11, off);
    EXPECT_GT(a.crossings, 0u);
    EXPECT_EQ(a.crossings, b.crossings) << "dofs=" << dofs;
    EXPECT_LT(a.integrated, b.integrated);
  }
}

TEST(MonteCarlo, Deterministic) {
  const auto m = unit_model(0.05);
  const double e = threshold_energy(m);
  EscapeOptions o;
  const auto a = monte_carlo_escape(m, e, 50000, 20.0, 42, o);
  const auto b = monte_carlo_escape(m, e, 50000, 20.0, 42, o);
  EXPECT_EQ(a, b);
  o.threads = 3;
  EXPECT_EQ(monte_carlo_escape(m, e, 50000, 20.0, 42, o), a);
  const auto c = monte_carlo_escape(m, e, 50000, 20.0, 43, EscapeOptions{});
  EXPECT_NE(c.crossings, a.crossings);
}

TEST(MonteCarlo, DoublingAdmittedFluxDoublesRate) {
  const double f = 0.02;
  const double e = threshold_energy(unit_model());
  const auto lo = monte_carlo_escape(unit_model(f), e, 2'000'000, 20.0, 5);
  const auto hi = monte_carlo_escape(unit_model(f * std::cbrt(4.0)), e, 2'000'000, 20.0, 6);
  const double ratio = hi.rate / lo.rate;
  const double sigma = ratio * std::hypot(binomial_sigma(lo) / lo.escape_probability,
                                          binomial_sigma(hi) / hi.escape_probability);
  EXPECT_NEAR(ratio, 2.0, 3.0 * sigma);
}

TEST(MonteCarlo, RateMonotoneInForce) {
  std::vector<SweepPoint> pts{{0.01, 400000}, {0.03, 400000}, {0.1, 400000}};
  const auto est = rate_sweep(unit_model(), pts, 20.0, 3);
  for (std::size_t i = 1; i < est.size(); ++i) {
    EXPECT_GT(est[i].rate, est[i - 1].rate);
    EXPECT_LT(est[i].max_energy_drift, 1e-6);
  }
}

TEST(MonteCarlo, DriftGuard) {
  EscapeOptions o;
  o.dt = 5e-3;
  const auto m = unit_model(0.1);
  EXPECT_THROW(monte_carlo_escape(m, threshold_energy(m), 2000, 20.0, 1, o), AccuracyError);
}

TEST(MonteCarlo, ReferenceExponent) {
  std::vector<SweepPoint> pts{
      {1e-3, 1'500'000}, {3.16e-3, 600'000}, {1e-2, 300'000}, {3.16e-2, 100'000}, {1e-1, 50'000}};
  const auto est = rate_sweep(unit_model(), pts, 20.0, 2024);
  std::vector<RatePoint> rates;
  for (const auto& e : est) rates.push_back({e.force, e.rate});
  const auto fit = exponent_fit(rates);
  EXPECT_GE(fit.exponent, 1.4);
  EXPECT_LE(fit.exponent, 1.6);
  EXPECT_EQ(fit.points_used, 5u);
}

// Microcanonical weighting favours fast particles near the saddle; its
// exponent tends to 2 rather than 3/2.
TEST(MonteCarlo, LiouvilleEnsembleExponent) {
  EscapeOptions o;
  o.ensemble = Ensemble::liouville;
  std::vector<SweepPoint> pts{{1e-2, 1'000'000}, {3.16e-2, 300'000}, {1e-1, 100'000}};
  const auto est = rate_sweep(unit_model(), pts, 20.0, 99, o);
  std::vector<RatePoint> rates;
  for (const auto& e : est) rates.push_back({e.force, e.rate});
  const auto fit = exponent_fit(rates);
  EXPECT_GT(fit.exponent, 1.7);
  EXPECT_LT(fit.exponent, 2.1);
}

TEST(ExponentFit, SyntheticPowerLaws) {
  std::vector<RatePoint> three_halves, linear;
  for (double f : {1e-3, 3e-3, 1e-2, 3e-2, 1e-1}) {
    three_halves.push_back({f, 0.7 * std::pow(f, 1.5)});
    linear.push_back({f, 0.7 * f});
  }
  const auto a = exponent_fit(three_halves);
  EXPECT_NEAR(a.exponent, 1.5, 1e-9);
  EXPECT_NEAR(std::exp(a.log_prefactor), 0.7, 1e-9);
  EXPECT_NEAR(exponent_fit(linear).exponent, 1.0, 1e-9);
  EXPECT_LE(a.ci_low, 1.5);
  EXPECT_GE(a.ci_high, 1.5);
}

TEST(ExponentFit, DropsZeroRatesAndNeedsThreePoints) {
  std::vector<RatePoint> pts{{1e-3, 0.0}, {1e-2, 1e-3}, {1e-1, 3e-2}, {2e-1, 9e-2}};
  const auto fit = exponent_fit(pts);
  EXPECT_EQ(fit.points_used, 3u);
  EXPECT_FALSE(fit.warnings.empty());
  pts.pop_back();
  EXPECT_THROW(exponent_fit(pts), ConfigError);
}

TEST(Detection, PowerLaws) {
  const auto cal = ideal_detector(0.4, 0.6);
  for (auto regime : {Regime::threshold, Regime::biased}) {
    EXPECT_EQ(detection_probability(0.0, cal, regime).probability, 0.0);
    double previous = -1.0;
    for (double x : {0.01, 0.1, 0.3, 0.7, 1.0}) {
      const double p = detection_probability(x, cal, regime).probability;
      EXPECT_GT(p, previous);
      previous = p;
    }
  }
  auto ratio = [&](Regime r) {
    return detection_probability(0.25, cal, r).probability / detection_probability(1.0, cal, r).probability;
  };
  EXPECT_DOUBLE_EQ(ratio(Regime::threshold), 0.125);
  EXPECT_DOUBLE_EQ(ratio(Regime::biased), 0.25);
  const double slope_thr = std::log(detection_probability(0.1, cal, Regime::threshold).probability /
                                    detection_probability(0.01, cal, Regime::threshold).probability) /
                           std::log(10.0);
  const double slope_bia = std::log(detection_probability(0.1, cal, Regime::biased).probability /
                                    detection_probability(0.01, cal, Regime::biased).probability) /
                           std::log(10.0);
  EXPECT_NEAR(slope_thr, 1.5, 1e-12);
  EXPECT_NEAR(slope_bia, 1.0, 1e-12);
  EXPECT_THROW(detection_probability(1.5, cal, Regime::biased), ConfigError);
  EXPECT_THROW(ideal_detector(1.5, 0.0), ConfigError);
}

TEST(Detection, CalibrationFromMonteCarlo) {
  const auto cal = calibrate_detector(unit_model(), 0.02, 0.02, 400000, 20.0, 8);
  EXPECT_GT(cal.p_ref_threshold, 0.0);
  EXPECT_GT(cal.baseline, 0.0);
  EXPECT_GT(cal.p_ref_biased, 0.0);
  EXPECT_DOUBLE_EQ(detection_probability(0.25, cal, Regime::biased).probability,
                   0.25 * cal.p_ref_biased);
}

TEST(TwoDetector, IndependentFiring) {
  DetectorSpec d{ideal_detector(0.8, 0.8), Regime::biased};
  const auto j = two_detector_trial(0.5, d, d, 100000, 17);
  EXPECT_DOUBLE_EQ(j.p1, 0.4);
  EXPECT_NEAR(j.both, j.p1 * j.p2, 3.0 * j.both_sigma);
  EXPECT_GT(j.both, 0.0);
  const double n = static_cast<double>(j.trials);
  EXPECT_NEAR(j.both + j.only_first, j.p1, 3.0 * std::sqrt(j.p1 * (1 - j.p1) / n));
  EXPECT_NEAR(j.both + j.only_second, j.p2, 3.0 * std::sqrt(j.p2 * (1 - j.p2) / n));
  EXPECT_NEAR(j.both + j.only_first + j.only_second + j.neither, 1.0, 1e-12);
}

TEST(TwoDetector, FactorizesForAllSplits) {
  for (double w : {0.1, 0.3, 0.5, 0.8}) {
    for (auto regime : {Regime::threshold, Regime::biased}) {
      DetectorSpec d{ideal_detector(0.9, 0.9), regime};
      const auto j = two_detector_trial(w, d, d, 50000, 100 + static_cast<std::uint64_t>(w * 10));
      EXPECT_NEAR(j.both, j.p1 * j.p2, 3.0 * j.both_sigma) << "w=" << w;
    }
  }
}

TEST(TwoDetector, DegenerateDetectors) {
  const DetectorSpec always{ideal_detector(1.0, 1.0), Regime::biased};
  const DetectorSpec never{ideal_detector(0.0, 0.0), Regime::biased};
  const auto j = two_detector_trial(1.0, always, never, 1000, 1);
  EXPECT_EQ(j.only_first, 1.0);
  EXPECT_EQ(j.both, 0.0);
}

TEST(Names, RoundTrip) {
  for (auto e : {Ensemble::configuration_uniform, Ensemble::liouville}) {
    EXPECT_EQ(ensemble_from_string(to_string(e)), e);
  }
  for (auto r : {Regime::threshold, Regime::biased}) EXPECT_EQ(regime_from_string(to_string(r)), r);
  EXPECT_THROW(regime_from_string("linear"), ConfigError);
}
