#pragma once

// Gravitational self-interaction of rigid bodies: mass, well depth and
// gravitational frequency of spheres and long slabs, the quadratic
// effective potential felt by a nearly localized centre of mass, and the
// classicality margin omega_gr^2 * R / a_max.
//
// All quantities are SI. The enhancement factor kappa multiplies G.

#include <array>
#include <string>
#include <variant>
#include <vector>

namespace nsm::selfgrav {

/// Prefactor convention for the sphere's gravitational frequency.
///   nominal: omega^2 = kappa G rho
///   overlap: omega^2 = (4 pi / 3) kappa G rho, the curvature of the exact
///           overlap energy of two uniform spheres.
enum class FrequencyConvention { nominal, overlap };

std::string to_string(FrequencyConvention c);
FrequencyConvention frequency_convention_from_string(const std::string& s);

struct SphereGeometry {
  double radius = 0.0;   // m
  double density = 0.0;  // kg/m^3

  bool operator==(const SphereGeometry&) const = default;
};

struct SlabGeometry {
  double side_a = 0.0;   // m
  double side_b = 0.0;   // m
  double length = 0.0;   // m
  double density = 0.0;  // kg/m^3

  /// Cross-section diagonal, used as the slab "diameter".
  double diagonal() const;

  bool operator==(const SlabGeometry&) const = default;
};

using Geometry = std::variant<SphereGeometry, SlabGeometry>;

struct BodyProfile {
  double mass = 0.0;          // kg
  double well_depth = 0.0;    // J, <= 0
  double grav_freq_sq = 0.0;  // 1/s^2
  double validity_radius = 0.0;  // m; R for spheres, L/2 for slabs
  double kappa = 1.0;
  FrequencyConvention convention = FrequencyConvention::nominal;
  Geometry geometry;
  std::vector<std::string> warnings;

  double stiffness() const { return mass * grav_freq_sq; }
};

BodyProfile sphere_profile(const SphereGeometry& geom, double kappa = 1.0,
                           FrequencyConvention convention = FrequencyConvention::nominal);

/// Long slab of cross-section a x b and length L >> a, b (axial displacements).
BodyProfile slab_profile(const SlabGeometry& geom, double kappa = 1.0);

/// Slab shape factor f(x) for aspect ratio x = a/b. f(1) ~ 4.205,
/// f(x) = f(1/x), f(x) -> (4/x) ln x for x >> 1.
double shape_factor(double x);

using Vec3 = std::array<double, 3>;

/// V(r) = V0 + 1/2 k |r - r*|^2 + 1/2 k Delta^2 with k = M omega^2.
struct QuadraticPotential {
  Vec3 center{};
  double stiffness = 0.0;      // kg/s^2
  double depth = 0.0;          // J
  double spread_shift = 0.0;   // J
  double validity_radius = 0.0;  // m
  std::vector<std::string> warnings;

  double operator()(const Vec3& r) const;
  /// Restoring force -k (r - r*).
  Vec3 force(const Vec3& r) const;
};

/// Throws RegimeError if spread > validity radius; warns above 10% of it.
QuadraticPotential quadratic_potential(const BodyProfile& profile, const Vec3& center,
                                       double spread);

struct ClassicalityMargin {
  double margin = 0.0;     // omega^2 * validity_radius / a_max
  double min_size = 0.0;   // m; sphere radius, or slab cross-section diagonal, at margin = 1
  bool never_classical = false;  // omega^2 == 0
};

ClassicalityMargin classicality_margin(const BodyProfile& profile, double a_max);

struct OverlapEstimate {
  double energy = 0.0;          // J
  double error_estimate = 0.0;  // J, |E(panels) - E(2 panels)|
};

/// Newtonian interaction energy of two identical uniform spheres (radius R,
/// density rho) whose centres are a distance s apart, by two-dimensional
/// Gauss-Legendre quadrature of the sphere potential over the partner's
/// volume. `panels` is the number of subintervals per smooth piece.
/// Throws AccuracyError if the relative error estimate exceeds `rel_tol`.
OverlapEstimate overlap_energy_oracle(double radius, double density, double separation,
                                      int panels = 8, double rel_tol = 1e-9);

struct CurvatureFit {
  double depth = 0.0;         // J, fitted U(0)
  double grav_freq_sq = 0.0;  // 1/s^2, from U ~ U0 + 1/2 M omega^2 s^2
  double cubic = 0.0;         // J/m^3
};

/// Least-squares fit of U(s) = U0 + c2 s^2 + c3 s^3 to the overlap oracle over
/// s in [0, fraction * R].
CurvatureFit fit_overlap_curvature(double radius, double density, double fraction = 0.05,
                                   int samples = 21, int panels = 8);

}  // namespace nsm::selfgrav
