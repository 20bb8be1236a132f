#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nsm/constants.hpp"
#include "nsm/errors.hpp"
#include "nsm/selfgrav.hpp"

using namespace nsm;
using namespace nsm::selfgrav;

namespace {

constexpr double G = constants::G;
constexpr double pi = constants::pi;

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

const SphereGeometry mm_sphere{1.5e-3, 1e4};

}  // namespace

TEST(ShapeFactor, SquareCrossSection) { EXPECT_NEAR(shape_factor(1.0), 4.205, 1e-3); }

TEST(ShapeFactor, MatchesHighPrecisionValues) {
  // 30-digit evaluations of the closed form.
  EXPECT_NEAR(shape_factor(1.0), 4.2047533376, 1e-9);
  EXPECT_NEAR(shape_factor(2.0), 3.6540376493, 1e-9);
  EXPECT_NEAR(shape_factor(100.0), 0.23205425891, 1e-10);
  EXPECT_NEAR(shape_factor(100.0), 0.2320, 5e-4);
  EXPECT_LT(rel(shape_factor(1e4), 0.0041614083334), 1e-9);
  EXPECT_LT(rel(shape_factor(1e6), 6.0034632287e-5), 1e-9);
}

TEST(ShapeFactor, ReciprocalSymmetry) {
  EXPECT_DOUBLE_EQ(shape_factor(2.0), shape_factor(0.5));
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> exponent(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const double x = std::pow(10.0, exponent(rng));
    EXPECT_LE(rel(shape_factor(x), shape_factor(1.0 / x)), 4 * std::numeric_limits<double>::epsilon())
        << "x=" << x;
  }
}

TEST(ShapeFactor, ApproachesLogAsymptote) {
  double previous = std::numeric_limits<double>::infinity();
  for (double x : {1e2, 1e4, 1e6}) {
    const double ratio = x * shape_factor(x) / (4.0 * std::log(x));
    EXPECT_GT(ratio, 1.0);
    EXPECT_LT(ratio, previous);
    previous = ratio;
  }
  EXPECT_NEAR(1e6 * shape_factor(1e6) / (4.0 * std::log(1e6)), 1.0864, 1e-4);
}

TEST(ShapeFactor, RejectsNonPositive) {
  EXPECT_THROW(shape_factor(0.0), ConfigError);
  EXPECT_THROW(shape_factor(-1.0), ConfigError);
}

TEST(SphereProfile, MillimetreSphere) {
  const auto p = sphere_profile(mm_sphere);
  EXPECT_LT(rel(p.mass, 1.41371669e-4), 1e-8);
  EXPECT_LT(rel(p.grav_freq_sq, 6.6743e-7), 1e-12);
  EXPECT_LT(rel(p.well_depth, -1.06713775e-15), 1e-8);
  EXPECT_EQ(p.validity_radius, 1.5e-3);
  EXPECT_DOUBLE_EQ(p.stiffness(), p.mass * p.grav_freq_sq);
}

TEST(SphereProfile, OverlapConvention) {
  const auto nominal = sphere_profile(mm_sphere);
  const auto overlap = sphere_profile(mm_sphere, 1.0, FrequencyConvention::overlap);
  EXPECT_DOUBLE_EQ(overlap.grav_freq_sq, 4.0 * pi / 3.0 * nominal.grav_freq_sq);
  EXPECT_EQ(overlap.well_depth, nominal.well_depth);
}

TEST(SphereProfile, EmptyBody) {
  const auto p = sphere_profile({1e-3, 0.0});
  EXPECT_EQ(p.mass, 0.0);
  EXPECT_EQ(p.well_depth, 0.0);
  EXPECT_EQ(p.grav_freq_sq, 0.0);
  EXPECT_TRUE(classicality_margin(p, 1.0).never_classical);
}

TEST(SphereProfile, LinearInKappa) {
  const auto base = sphere_profile(mm_sphere);
  for (double kappa : {1e3, 1e6}) {
    const auto p = sphere_profile(mm_sphere, kappa);
    EXPECT_LT(rel(p.grav_freq_sq, kappa * base.grav_freq_sq), 1e-14);
    EXPECT_LT(rel(p.well_depth, kappa * base.well_depth), 1e-14);
    EXPECT_EQ(p.mass, base.mass);
    EXPECT_LT(rel(classicality_margin(p, 1e-9).margin,
                  kappa * classicality_margin(base, 1e-9).margin),
              1e-14);
  }
  EXPECT_NEAR(sphere_profile(mm_sphere, 1e6).grav_freq_sq, 0.66743, 1e-12);
}

TEST(SphereProfile, RejectsBadInput) {
  EXPECT_THROW(sphere_profile({-1.0, 1e4}), ConfigError);
  EXPECT_THROW(sphere_profile({1e-3, -1.0}), ConfigError);
  EXPECT_THROW(sphere_profile(mm_sphere, 0.5), ConfigError);
}

TEST(SlabProfile, SquareLead) {
  const SlabGeometry lead{3.16e-5, 3.16e-5, 1.0, 1.0};
  const auto p = slab_profile(lead);
  EXPECT_LT(rel(p.grav_freq_sq, 1.25415e-14), 1e-5);
  EXPECT_LT(rel(p.grav_freq_sq, G * lead.diagonal() * shape_factor(1.0)), 1e-14);
  EXPECT_EQ(p.validity_radius, 0.5);
  EXPECT_TRUE(p.warnings.empty());
}

TEST(SlabProfile, SideSwapInvariant) {
  const auto p = slab_profile({2e-5, 7e-5, 1.0, 3.0});
  const auto q = slab_profile({7e-5, 2e-5, 1.0, 3.0});
  EXPECT_DOUBLE_EQ(p.mass, q.mass);
  EXPECT_DOUBLE_EQ(p.well_depth, q.well_depth);
  EXPECT_LE(rel(p.grav_freq_sq, q.grav_freq_sq), 4 * std::numeric_limits<double>::epsilon());
}

TEST(SlabProfile, EmptyAndShortSlabs) {
  const auto empty = slab_profile({1e-3, 1e-3, 1.0, 0.0});
  EXPECT_EQ(empty.mass, 0.0);
  EXPECT_EQ(empty.well_depth, 0.0);
  EXPECT_EQ(empty.grav_freq_sq, 0.0);
  EXPECT_THROW(slab_profile({1.0, 1.0, 1.0, 1.0}), ConfigError);
  EXPECT_FALSE(slab_profile({1.0, 1.0, 5.0, 1.0}).warnings.empty());
}

TEST(QuadraticPotential, SpreadShift) {
  const auto p = sphere_profile(mm_sphere);
  EXPECT_EQ(quadratic_potential(p, {}, 0.0).spread_shift, 0.0);
  const auto q = quadratic_potential(p, {}, 1e-4);
  EXPECT_LT(rel(q.spread_shift, 4.71778e-19), 1e-5);
  EXPECT_EQ(q.stiffness, p.stiffness());
  EXPECT_TRUE(q.warnings.empty());
}

TEST(QuadraticPotential, ValidityGuard) {
  const auto p = sphere_profile(mm_sphere);
  EXPECT_FALSE(quadratic_potential(p, {}, 0.5e-3).warnings.empty());
  EXPECT_THROW(quadratic_potential(p, {}, 2e-3), RegimeError);
}

TEST(QuadraticPotential, ForceRestoresTowardCentre) {
  const auto q = quadratic_potential(sphere_profile(mm_sphere), {1.0, 0.0, 0.0}, 0.0);
  const auto f = q.force({1.5, 0.0, -1.0});
  EXPECT_LT(f[0], 0.0);
  EXPECT_EQ(f[1], 0.0);
  EXPECT_GT(f[2], 0.0);
  EXPECT_DOUBLE_EQ(q({1.0, 0.0, 0.0}), q.depth);
}

TEST(Classicality, MillimetreSphereSizeLimit) {
  const auto m = classicality_margin(sphere_profile(mm_sphere), 1e-9);
  EXPECT_LT(rel(m.min_size, 1.49828446e-3), 1e-8);
  EXPECT_GT(m.margin, 1.0);
}

TEST(Classicality, MarginTimesAccelerationIsConstant) {
  const auto p = sphere_profile(mm_sphere);
  const double ref = classicality_margin(p, 1.0).margin;
  for (double a : {1e-12, 1e-9, 1e-3, 1e3}) {
    EXPECT_LT(rel(classicality_margin(p, a).margin * a, ref), 1e-14);
  }
  EXPECT_LT(classicality_margin(p, 1e300).margin, 1e-290);
}

TEST(Classicality, ElectronLiquidNeedsAstronomicalSize) {
  const double rho = 1e30 * constants::electron_mass;
  const SlabGeometry lead{3.16e-5, 3.16e-5, 1.0, rho};
  const auto m = classicality_margin(slab_profile(lead), 1e2);
  EXPECT_LT(m.margin, 1e-15);
  // Diagonal needed at the given L; the length itself is in the estimates module.
  EXPECT_GT(m.min_size, 1e10);
}

TEST(OverlapOracle, CoincidentSpheres) {
  const double R = 1.5e-3, rho = 1e4;
  const double M = 4.0 / 3.0 * pi * R * R * R * rho;
  const auto e = overlap_energy_oracle(R, rho, 0.0);
  EXPECT_LT(rel(e.energy, -1.2 * G * M * M / R), 1e-6);
  EXPECT_LT(rel(e.energy, sphere_profile({R, rho}).well_depth), 1e-6);
}

TEST(OverlapOracle, TouchingSpheres) {
  const double R = 1.5e-3, rho = 1e4;
  const double M = 4.0 / 3.0 * pi * R * R * R * rho;
  EXPECT_LT(rel(overlap_energy_oracle(R, rho, 2.0 * R).energy, -G * M * M / (2.0 * R)), 1e-6);
  EXPECT_LT(rel(overlap_energy_oracle(R, rho, 5.0 * R).energy, -G * M * M / (5.0 * R)), 1e-6);
}

TEST(OverlapOracle, AgreesWithDepthAcrossScales) {
  for (double R : {1e-6, 1e-3, 1e-1}) {
    for (double rho : {1.0, 1e3, 1e5}) {
      EXPECT_LT(rel(overlap_energy_oracle(R, rho, 0.0).energy, sphere_profile({R, rho}).well_depth),
                1e-6)
          << "R=" << R << " rho=" << rho;
    }
  }
}

TEST(OverlapOracle, CurvatureGivesFourPiOverThree) {
  const double R = 1e-2, rho = 1e4;
  const auto fit = fit_overlap_curvature(R, rho);
  EXPECT_LT(rel(fit.grav_freq_sq, 4.0 * pi / 3.0 * G * rho), 1e-4);
  EXPECT_LT(rel(fit.depth, sphere_profile({R, rho}).well_depth), 1e-6);
}

TEST(OverlapOracle, EnergyRisesWithSeparation) {
  const double R = 1.0, rho = 1.0;
  double previous = overlap_energy_oracle(R, rho, 0.0).energy;
  for (double s : {0.1, 0.5, 1.0, 1.5, 2.0, 3.0}) {
    const double e = overlap_energy_oracle(R, rho, s).energy;
    EXPECT_GT(e, previous);
    previous = e;
  }
}
