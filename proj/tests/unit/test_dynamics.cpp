#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "nsm/constants.hpp"
#include "nsm/dynamics.hpp"
#include "nsm/errors.hpp"

using namespace nsm;
using namespace nsm::dynamics;

namespace {

constexpr double pi = constants::pi;

QuasiSpinAmplitudes equal_split() {
  const double h = std::sqrt(0.5);
  return {{h, 0.0}, {h, 0.0}};
}

QuasiSpinAmplitudes weights(double w) { return {{std::sqrt(w), 0.0}, {std::sqrt(1.0 - w), 0.0}}; }

EvolveConfig split_run(double force, bool gravity, double t_end, double dt = 1e-3) {
  EvolveConfig c;
  c.grid = {1024, 32.0, dt, static_cast<std::size_t>(std::llround(t_end / dt))};
  c.amplitudes = equal_split();
  c.forces = {force, -force, 0.0};
  c.gravity_on = gravity;
  c.sample_every = 10;
  return c;
}

double max_separation(const TimeSeries& s) {
  double m = 0.0;
  for (const auto& r : s.records) m = std::max(m, std::abs(r.separation));
  return m;
}

double max_energy_drift(const TimeSeries& s) {
  double m = 0.0;
  for (const auto& r : s.records) m = std::max(m, std::abs(r.energy - s.records.front().energy));
  return m;
}

}  // namespace

TEST(Scaling, UnitProfile) {
  selfgrav::BodyProfile p;
  p.mass = 1.0;
  p.grav_freq_sq = 1.0;
  p.validity_radius = 2.0;
  const auto s = nondimensionalize(p);
  EXPECT_DOUBLE_EQ(s.time, 1.0);
  EXPECT_DOUBLE_EQ(s.length, std::sqrt(constants::hbar));
  EXPECT_DOUBLE_EQ(s.validity_radius, 2.0 / std::sqrt(constants::hbar));
}

TEST(Scaling, MillimetreSphere) {
  const auto s = nondimensionalize(selfgrav::sphere_profile({1.5e-3, 1e4}));
  EXPECT_NEAR(s.length / 3.0217286e-14, 1.0, 1e-7);
  EXPECT_NEAR(s.validity_radius, 4.964e10, 1e7);
}

TEST(Scaling, DoublingMassHalvesLengthSquared) {
  selfgrav::BodyProfile p;
  p.mass = 1.0;
  p.grav_freq_sq = 4.0;
  const double l1 = nondimensionalize(p).length;
  p.mass = 2.0;
  const double l2 = nondimensionalize(p).length;
  EXPECT_NEAR(l2 * l2 / (l1 * l1), 0.5, 1e-15);
}

TEST(Scaling, RejectsGravityFreeProfile) {
  EXPECT_THROW(nondimensionalize(selfgrav::BodyProfile{}), ConfigError);
}

TEST(InitGaussian, SpreadAndNorm) {
  const GridSpec g{1024, 32.0, 1e-3, 1};
  for (double w : {0.7, 1.0, 2.5}) {
    const auto s = init_gaussian(g, 1.0, w, equal_split());
    const auto d = diagnose(s, g);
    EXPECT_NEAR(d.plus.spread, w / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(d.plus.norm, 1.0, 1e-14);
    EXPECT_NEAR(d.minus.norm, 1.0, 1e-14);
    EXPECT_NEAR(d.plus.mean, 1.0, 1e-12);
  }
}

TEST(InitGaussian, SingleBranchCentre) {
  const GridSpec g{512, 16.0, 1e-3, 1};
  const auto s = init_gaussian(g, -2.0, 1.0, {{1.0, 0.0}, {0.0, 0.0}});
  const auto d = diagnose(s, g);
  EXPECT_EQ(d.center, d.plus.mean);
}

TEST(InitGaussian, Preconditions) {
  const GridSpec g{64, 32.0, 1e-3, 1};
  EXPECT_THROW(init_gaussian(g, 0.0, 1.0, equal_split()), ConfigError);  // 1 point per width
  const GridSpec wide{1024, 8.0, 1e-3, 1};
  EXPECT_THROW(init_gaussian(wide, 6.0, 1.0, equal_split()), ConfigError);  // tails at the edge
  EXPECT_THROW(init_gaussian(wide, 0.0, 1.0, {{1.0, 0.0}, {1.0, 0.0}}), ConfigError);
  EXPECT_THROW((GridSpec{1000, 8.0, 1e-3, 1}.validate()), ConfigError);
}

TEST(Step, FreeSpreadingFollowsWidthLaw) {
  const GridSpec g{2048, 40.0, 1e-3, 1};
  BranchState s = init_gaussian(g, 0.0, 1.0, equal_split());
  const SplitStepPropagator prop(g, {}, StepSettings{.gravity_on = false});
  const double d0 = 1.0 / std::sqrt(2.0);
  double worst = 0.0;
  for (int n = 1; n <= 2000; ++n) {
    const auto d = prop.advance(s);
    if (n % 100 == 0) {
      const double t = n * g.dt;
      const double law = d0 * std::sqrt(1.0 + std::pow(t / (2.0 * d0 * d0), 2));
      worst = std::max(worst, std::abs(d.plus.spread - law));
    }
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Step, SingleStepMatchesPropagator) {
  const GridSpec g{256, 16.0, 1e-3, 1};
  const auto s0 = init_gaussian(g, 0.5, 1.0, weights(0.3));
  const MeasurementForces f{0.2, -0.1, 0.05};
  const auto s1 = step(s0, f, true, g);
  BranchState s2 = s0;
  SplitStepPropagator(g, f).advance(s2);
  EXPECT_EQ(s1.psi_plus, s2.psi_plus);
  EXPECT_EQ(s1.psi_minus, s2.psi_minus);
  EXPECT_EQ(s1.time, s2.time);
}

TEST(Step, SelfCentredBranchDoesNotMove) {
  EvolveConfig c;
  c.grid = {1024, 32.0, 1e-3, 3000};
  c.center = 3.0;
  c.width = 1.4;
  c.amplitudes = {{1.0, 0.0}, {0.0, 0.0}};
  const auto r = run(c);
  for (const auto& rec : r.series.records) EXPECT_NEAR(rec.center, 3.0, 1e-10);
}

TEST(Step, SeparationFollowsEhrenfestSolution) {
  const double F = 0.25;
  const double dt = 1e-3;
  auto c = split_run(F, true, pi, dt);
  c.sample_every = 1;
  const auto r = run(c);
  const auto& last = r.series.records.back();
  const double s_exact = 2.0 * F * (1.0 - std::cos(last.time));
  EXPECT_LT(std::abs(last.separation - s_exact) / s_exact, 1e-3);
  EXPECT_NEAR(last.separation, 4.0 * F, 4.0 * F * 1e-3);
}

TEST(Run, ConfinementDichotomy) {
  const double F = 0.5;
  const auto on = run(split_run(F, true, 20.0 * pi));
  const double bound = 4.0 * F;
  EXPECT_NEAR(max_separation(on.series), bound, 0.05 * bound);
  EXPECT_NEAR(max_separation(on.series), bound, 0.01 * bound);
  // Bounded over all ten periods.
  EXPECT_LT(max_separation(on.series), 1.01 * bound);

  auto c = split_run(F, false, 10.0);
  c.grid.extent = 128.0;
  c.grid.points = 4096;
  const auto off = run(c);
  EXPECT_GT(max_separation(off.series), 10.0 * bound);
  EXPECT_NEAR(off.series.records.back().separation, F * 100.0, 1e-6);
}

TEST(Run, CoherentWidthIsStationary) {
  EvolveConfig c;
  c.grid = {1024, 32.0, 1e-3, 10000};
  c.center = 1.0;
  c.amplitudes = {{1.0, 0.0}, {0.0, 0.0}};
  c.forces = {0.3, 0.0, 0.0};
  const auto r = run(c);
  for (const auto& rec : r.series.records) EXPECT_NEAR(rec.spread_plus, 1.0 / std::sqrt(2.0), 1e-4);
}

TEST(Run, NormsConservedAndAmplitudesUntouched) {
  auto c = split_run(0.4, true, 10.0);
  c.amplitudes = weights(0.3);
  const auto r = run(c);
  for (const auto& rec : r.series.records) {
    EXPECT_NEAR(rec.norm_plus, 1.0, 1e-8);
    EXPECT_NEAR(rec.norm_minus, 1.0, 1e-8);
  }
  EXPECT_EQ(r.final_state.amplitudes, c.amplitudes);
}

TEST(Run, RelabelingSymmetry) {
  EvolveConfig a;
  a.grid = {512, 24.0, 1e-3, 2000};
  a.amplitudes = weights(0.3);
  a.forces = {0.4, -0.1, 0.02};
  EvolveConfig b = a;
  std::swap(b.amplitudes.c_plus, b.amplitudes.c_minus);
  std::swap(b.forces.plus, b.forces.minus);
  const auto ra = run(a).series.records;
  const auto rb = run(b).series.records;
  ASSERT_EQ(ra.size(), rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    EXPECT_EQ(ra[i].mean_plus, rb[i].mean_minus);
    EXPECT_EQ(ra[i].mean_minus, rb[i].mean_plus);
    EXPECT_EQ(ra[i].spread_plus, rb[i].spread_minus);
    EXPECT_EQ(ra[i].center, rb[i].center);
    EXPECT_EQ(ra[i].separation, -rb[i].separation);
    EXPECT_EQ(ra[i].compound_spread, rb[i].compound_spread);
    EXPECT_EQ(ra[i].phase, rb[i].phase);
    EXPECT_EQ(ra[i].energy, rb[i].energy);
  }
}

TEST(Run, PhaseAccumulatesWellDepthAndSpread) {
  EvolveConfig c;
  c.grid = {512, 24.0, 1e-3, 1000};
  c.amplitudes = {{1.0, 0.0}, {0.0, 0.0}};
  c.well_depth = -3.0;
  const auto r = run(c);
  // Coherent packet: Delta^2 = 1/2 throughout.
  EXPECT_NEAR(r.final_state.phase, -(-3.0 + 0.25) * 1.0, 1e-7);
}

TEST(Run, EnergyDriftScalesWithStepSquared) {
  std::vector<double> drift;
  for (double dt : {1e-2, 1e-3, 1e-4}) {
    EvolveConfig c;
    c.grid = {512, 24.0, dt, static_cast<std::size_t>(std::llround(2.0 / dt))};
    c.width = 2.0;
    c.amplitudes = equal_split();
    c.forces = {0.3, -0.3, 0.0};
    c.sample_every = std::max<std::size_t>(1, c.grid.steps / 200);
    drift.push_back(max_energy_drift(run(c).series));
  }
  const double r1 = drift[0] / drift[1];
  const double r2 = drift[1] / drift[2];
  EXPECT_GT(r1, 70.0);
  EXPECT_LT(r1, 130.0);
  EXPECT_GT(r2, 70.0);
  EXPECT_LT(r2, 130.0);
  // Per unit time at dt = 1e-3, relative to the energy scale.
  EXPECT_LT(drift[1] / 2.0, 1e-6);
}

TEST(Run, EdgeGuard) {
  auto c = split_run(2.0, false, 10.0);
  c.grid.extent = 16.0;
  c.grid.points = 512;
  EXPECT_THROW(run(c), AccuracyError);
}

TEST(Run, RegimeGuard) {
  auto c = split_run(0.5, true, 4.0);
  c.validity_radius = 0.5;
  EXPECT_THROW(run(c), RegimeError);
  c.validity_radius = 5.0;
  EXPECT_FALSE(run(c).warnings.empty());
  c.gravity_on = false;
  c.validity_radius = 0.5;
  EXPECT_NO_THROW(run(c));
}

TEST(Audit, GravityForceVanishes) {
  auto c = split_run(0.3, true, 5.0);
  c.amplitudes = weights(0.7);
  const auto a = ehrenfest_audit(run(c).series);
  EXPECT_LE(a.max_gravity_force, 1e-10);
  EXPECT_TRUE(a.gravity_ok);
}

TEST(Audit, UnequalAmplitudeAcceleration) {
  EvolveConfig c;
  c.grid = {1024, 48.0, 1e-3, 4000};
  c.amplitudes = weights(0.3);
  c.forces = {1.0, 0.0, 0.0};
  const auto a = ehrenfest_audit(run(c).series);
  EXPECT_DOUBLE_EQ(a.expected_acceleration, 0.3);
  EXPECT_LT(a.max_acceleration_error, 1e-3);
  EXPECT_TRUE(a.ok());
}

TEST(Audit, SpinIndependentForce) {
  for (double w : {0.1, 0.5, 0.9}) {
    EvolveConfig c;
    c.grid = {1024, 48.0, 1e-3, 3000};
    c.amplitudes = weights(w);
    c.forces = {0.5, 0.5, 0.0};
    const auto a = ehrenfest_audit(run(c).series);
    EXPECT_NEAR(a.expected_acceleration, 0.5, 1e-15);
    EXPECT_TRUE(a.ok()) << "w=" << w << " err=" << a.max_acceleration_error;
  }
}

TEST(Audit, NeedsThreeSamples) {
  TimeSeries s;
  s.sample_interval = 1.0;
  EXPECT_THROW(ehrenfest_audit(s), ConfigError);
}
