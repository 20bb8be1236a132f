#include "nsm/selfgrav.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "nsm/constants.hpp"
#include "nsm/errors.hpp"

namespace nsm::selfgrav {

namespace {

using constants::G;
using constants::pi;

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }
bool finite_pos(double v) { return std::isfinite(v) && v > 0.0; }

void check_kappa(double kappa) {
  if (!std::isfinite(kappa) || kappa < 1.0) {
    throw ConfigError("gravity enhancement kappa must be finite and >= 1");
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::string to_string(FrequencyConvention c) {
  return c == FrequencyConvention::nominal ? "nominal" : "overlap";
}

FrequencyConvention frequency_convention_from_string(const std::string& s) {
  if (s == "nominal") return FrequencyConvention::nominal;
  if (s == "overlap") return FrequencyConvention::overlap;
  throw ConfigError("unknown frequency convention '" + s + "' (expected nominal | overlap)");
}

double SlabGeometry::diagonal() const { return std::hypot(side_a, side_b); }

BodyProfile sphere_profile(const SphereGeometry& geom, double kappa,
                           FrequencyConvention convention) {
  if (!finite_pos(geom.radius)) throw ConfigError("sphere radius must be finite and > 0");
  if (!finite_nonneg(geom.density)) throw ConfigError("sphere density must be finite and >= 0");
  check_kappa(kappa);

  const double g = kappa * G;
  const double R = geom.radius;
  BodyProfile p;
  p.geometry = geom;
  p.kappa = kappa;
  p.convention = convention;
  p.mass = 4.0 / 3.0 * pi * R * R * R * geom.density;
  p.well_depth = -6.0 / 5.0 * g * p.mass * p.mass / R;
  const double prefactor = convention == FrequencyConvention::nominal ? 1.0 : 4.0 * pi / 3.0;
  p.grav_freq_sq = prefactor * g * geom.density;
  p.validity_radius = R;
  return p;
}

BodyProfile slab_profile(const SlabGeometry& geom, double kappa) {
  if (!finite_pos(geom.side_a) || !finite_pos(geom.side_b)) {
    throw ConfigError("slab sides must be finite and > 0");
  }
  if (!finite_pos(geom.length)) throw ConfigError("slab length must be finite and > 0");
  if (!finite_nonneg(geom.density)) throw ConfigError("slab density must be finite and >= 0");
  check_kappa(kappa);

  const double d = geom.diagonal();
  const double L = geom.length;
  if (L <= d) {
    throw ConfigError("slab length " + fmt(L) + " m must exceed the cross-section diagonal " +
                      fmt(d) + " m");
  }

  BodyProfile p;
  p.geometry = geom;
  p.kappa = kappa;
  if (L < 10.0 * std::max(geom.side_a, geom.side_b)) {
    p.warnings.push_back("slab length is below 10x the larger side; long-slab formulas are "
                         "outside their intended regime");
  }
  const double g = kappa * G;
  p.mass = geom.side_a * geom.side_b * L * geom.density;
  p.well_depth = -2.0 * std::log(L / d) * g * p.mass * p.mass / L;
  p.grav_freq_sq = g * geom.density * (d / L) * shape_factor(geom.side_a / geom.side_b);
  p.validity_radius = 0.5 * L;
  return p;
}

double shape_factor(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError("shape factor needs a finite x > 0");
  const double u = 1.0 / x;
  const double sx = std::sqrt(1.0 + x * x);
  const double su = std::sqrt(1.0 + u * u);
  // x^2 - x sqrt(1+x^2) rewritten as -x / (x + sqrt(1+x^2)) to avoid cancellation.
  const double cx = x / (x + sx);
  const double cu = u / (u + su);
  const double bracket = 2.0 * su * std::asinh(x) + 2.0 * sx * std::asinh(u) -
                         2.0 / 3.0 * (2.0 - cx - cu);
  return 2.0 / (x + u) * bracket;
}

double QuadraticPotential::operator()(const Vec3& r) const {
  double d2 = 0.0;
  for (std::size_t i = 0; i < 3; ++i) d2 += (r[i] - center[i]) * (r[i] - center[i]);
  return depth + 0.5 * stiffness * d2 + spread_shift;
}

Vec3 QuadraticPotential::force(const Vec3& r) const {
  Vec3 f{};
  for (std::size_t i = 0; i < 3; ++i) f[i] = -stiffness * (r[i] - center[i]);
  return f;
}

QuadraticPotential quadratic_potential(const BodyProfile& profile, const Vec3& center,
                                       double spread) {
  if (!finite_nonneg(spread)) throw ConfigError("spread must be finite and >= 0");
  if (spread > profile.validity_radius) {
    throw RegimeError("spread " + fmt(spread) + " m exceeds the validity radius " +
                      fmt(profile.validity_radius) + " m of the quadratic form");
  }
  QuadraticPotential q;
  q.center = center;
  q.stiffness = profile.stiffness();
  q.depth = profile.well_depth;
  q.spread_shift = 0.5 * q.stiffness * spread * spread;
  q.validity_radius = profile.validity_radius;
  if (spread > 0.1 * profile.validity_radius) {
    q.warnings.push_back("spread exceeds 10% of the validity radius");
  }
  return q;
}

ClassicalityMargin classicality_margin(const BodyProfile& profile, double a_max) {
  if (!finite_pos(a_max)) throw ConfigError("a_max must be finite and > 0");
  ClassicalityMargin m;
  if (profile.grav_freq_sq <= 0.0) {
    m.never_classical = true;
    m.min_size = std::numeric_limits<double>::infinity();
    return m;
  }
  m.margin = profile.grav_freq_sq * profile.validity_radius / a_max;
  // omega^2 R is linear in the body's size at fixed shape and density.
  if (const auto* s = std::get_if<SphereGeometry>(&profile.geometry)) {
    m.min_size = s->radius / m.margin;
  } else {
    const auto& slab = std::get<SlabGeometry>(profile.geometry);
    m.min_size = slab.diagonal() / m.margin;
  }
  return m;
}

namespace {

// Potential of a uniform sphere of mass M and radius R at distance r from its centre.
double sphere_potential(double mass, double R, double r) {
  if (r < R) return -G * mass * (3.0 * R * R - r * r) / (2.0 * R * R * R);
  return -G * mass / r;
}

template <class F>
double composite_gauss(F&& f, double a, double b, int panels) {
  using boost::math::quadrature::gauss;
  const double h = (b - a) / panels;
  double sum = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double lo = a + i * h;
    sum += gauss<double, 20>::integrate(f, lo, i + 1 == panels ? b : lo + h);
  }
  return sum;
}

double overlap_energy(double R, double rho, double s, int panels) {
  const double mass = 4.0 / 3.0 * pi * R * R * R * rho;

  // Average of the first sphere's potential over a shell of radius u about the
  // second centre. The kink of the potential at r = R sits at mu_k.
  auto shell = [&](double u) {
    auto phi = [&](double mu) {
      const double r2 = std::max(0.0, s * s + u * u + 2.0 * s * u * mu);
      return sphere_potential(mass, R, std::sqrt(r2));
    };
    if (s == 0.0 || u == 0.0) return 2.0 * sphere_potential(mass, R, std::max(s, u));
    const double mu_k = (R * R - s * s - u * u) / (2.0 * s * u);
    if (mu_k > -1.0 && mu_k < 1.0) {
      return composite_gauss(phi, -1.0, mu_k, panels) + composite_gauss(phi, mu_k, 1.0, panels);
    }
    return composite_gauss(phi, -1.0, 1.0, panels);
  };
  auto radial = [&](double u) { return 2.0 * pi * u * u * shell(u); };

  std::vector<double> cuts{0.0, R};
  for (double c : {std::abs(R - s), R + s}) {
    if (c > 0.0 && c < R) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += composite_gauss(radial, cuts[i], cuts[i + 1], panels);
  }
  return rho * total;
}

}  // namespace

OverlapEstimate overlap_energy_oracle(double radius, double density, double separation,
                                      int panels, double rel_tol) {
  if (!finite_pos(radius)) throw ConfigError("oracle radius must be finite and > 0");
  if (!finite_nonneg(density)) throw ConfigError("oracle density must be finite and >= 0");
  if (!finite_nonneg(separation)) throw ConfigError("oracle separation must be finite and >= 0");
  if (panels < 1) throw ConfigError("oracle needs at least one panel per piece");

  OverlapEstimate est;
  est.energy = overlap_energy(radius, density, separation, panels);
  const double refined = overlap_energy(radius, density, separation, 2 * panels);
  est.error_estimate = std::abs(refined - est.energy);
  est.energy = refined;
  if (est.error_estimate > rel_tol * std::abs(est.energy)) {
    throw AccuracyError("overlap quadrature did not converge: estimate " + fmt(est.energy) +
                        " J with error " + fmt(est.error_estimate) + " J");
  }
  return est;
}

CurvatureFit fit_overlap_curvature(double radius, double density, double fraction, int samples,
                                   int panels) {
  if (samples < 4) throw ConfigError("curvature fit needs at least 4 samples");
  if (!(fraction > 0.0) || fraction > 1.0) throw ConfigError("fit fraction must lie in (0, 1]");

  const double mass = 4.0 / 3.0 * pi * radius * radius * radius * density;
  const double scale = G * mass * mass / radius;
  if (scale == 0.0) return {};

  // Fit in x = s/R and U/scale to keep the normal equations well conditioned.
  Eigen::MatrixXd A(samples, 3);
  Eigen::VectorXd y(samples);
  for (int i = 0; i < samples; ++i) {
    const double x = fraction * i / (samples - 1);
    A(i, 0) = 1.0;
    A(i, 1) = x * x;
    A(i, 2) = x * x * x;
    y(i) = overlap_energy_oracle(radius, density, x * radius, panels).energy / scale;
  }
  const Eigen::Vector3d c = A.colPivHouseholderQr().solve(y);

  CurvatureFit fit;
  fit.depth = c(0) * scale;
  const double c2 = c(1) * scale / (radius * radius);
  fit.grav_freq_sq = 2.0 * c2 / mass;
  fit.cubic = c(2) * scale / (radius * radius * radius);
  return fit;
}

}  // namespace nsm::selfgrav
