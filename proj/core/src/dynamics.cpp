#include "nsm/dynamics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <mutex>
#include <sstream>

#include <fftw3.h>

#include "nsm/constants.hpp"
#include "nsm/errors.hpp"

namespace nsm::dynamics {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class FftPlan {
 public:
  FftPlan(std::size_t n, int sign) {
    std::vector<Complex> scratch(n);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, sign,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan_ == nullptr) throw AccuracyError("FFTW failed to create a plan");
  }
  ~FftPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  void operator()(Wavefunction& psi) const {
    auto* buf = reinterpret_cast<fftw_complex*>(psi.data());
    fftw_execute_dft(plan_, buf, buf);
  }

 private:
  fftw_plan plan_ = nullptr;
};

std::vector<double> wavenumbers(const GridSpec& grid) {
  const std::size_t n = grid.points;
  const double dk = 2.0 * constants::pi / (2.0 * grid.extent);
  std::vector<double> k(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto signed_j = j < n / 2 ? static_cast<double>(j)
                                    : static_cast<double>(j) - static_cast<double>(n);
    k[j] = signed_j * dk;
  }
  return k;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

void GridSpec::validate() const {
  if (points < 64 || !std::has_single_bit(points)) {
    throw ConfigError("grid points must be a power of two >= 64");
  }
  if (!(extent > 0.0) || !std::isfinite(extent)) throw ConfigError("grid extent must be > 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time step dt must be > 0");
}

void QuasiSpinAmplitudes::validate() const {
  const double total = weight_plus() + weight_minus();
  if (!std::isfinite(total) || std::abs(total - 1.0) > 1e-12) {
    throw ConfigError("amplitudes must satisfy |c+|^2 + |c-|^2 = 1 (got " + fmt(total) + ")");
  }
}

BranchMoments moments(const Wavefunction& psi, const GridSpec& grid) {
  const std::size_t n = psi.size();
  const std::size_t edge = n / 20;
  double m0 = 0.0, m1 = 0.0, m2 = 0.0, outer = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double x = grid.x(j);
    const double rho = std::norm(psi[j]);
    m0 += rho;
    m1 += rho * x;
    m2 += rho * x * x;
    if (j < edge || j >= n - edge) outer += rho;
  }
  BranchMoments m;
  const double dx = grid.dx();
  m.norm = m0 * dx;
  if (m0 > 0.0) {
    m.mean = m1 / m0;
    m.spread = std::sqrt(std::max(0.0, m2 / m0 - m.mean * m.mean));
    m.edge_mass = outer / m0;
  }
  return m;
}

StateDiagnostics diagnose(const BranchState& state, const GridSpec& grid) {
  StateDiagnostics d;
  d.plus = moments(state.psi_plus, grid);
  d.minus = moments(state.psi_minus, grid);
  const double wp = state.amplitudes.weight_plus();
  const double wm = state.amplitudes.weight_minus();
  d.center = wp * d.plus.mean + wm * d.minus.mean;
  d.separation = d.plus.mean - d.minus.mean;
  const double dp = d.plus.mean - d.center;
  const double dm = d.minus.mean - d.center;
  d.gravity_force = -(wp * dp + wm * dm);
  const double var = wp * (d.plus.spread * d.plus.spread + dp * dp) +
                     wm * (d.minus.spread * d.minus.spread + dm * dm);
  d.compound_spread = std::sqrt(std::max(0.0, var));
  return d;
}

Scaling nondimensionalize(const selfgrav::BodyProfile& profile) {
  if (!(profile.grav_freq_sq > 0.0) || !(profile.mass > 0.0)) {
    throw ConfigError("cannot nondimensionalize a profile without self-gravity; run the "
                      "gravity-free mode instead");
  }
  const double omega = std::sqrt(profile.grav_freq_sq);
  Scaling s;
  s.time = 1.0 / omega;
  s.length = std::sqrt(constants::hbar / (profile.mass * omega));
  s.force = profile.mass * s.length * profile.grav_freq_sq;
  s.energy = constants::hbar * omega;
  s.validity_radius = profile.validity_radius / s.length;
  return s;
}

BranchState init_gaussian(const GridSpec& grid, double center, double width,
                          const QuasiSpinAmplitudes& amplitudes) {
  grid.validate();
  amplitudes.validate();
  if (!(width > 0.0) || !std::isfinite(width)) throw ConfigError("packet width must be > 0");
  if (width / grid.dx() < 8.0) {
    throw ConfigError("packet width " + fmt(width) + " is resolved by fewer than 8 grid points");
  }
  const double gap = std::min(center + grid.extent, grid.extent - center);
  if (!(gap > 0.0) || 0.5 * std::erfc(gap / width) > 1e-12) {
    throw ConfigError("packet tails exceed 1e-12 at the domain edge; enlarge the extent");
  }

  Wavefunction psi(grid.points);
  double sum = 0.0;
  for (std::size_t j = 0; j < grid.points; ++j) {
    const double u = (grid.x(j) - center) / width;
    psi[j] = std::exp(-0.5 * u * u);
    sum += std::norm(psi[j]);
  }
  const double scale = 1.0 / std::sqrt(sum * grid.dx());
  for (auto& v : psi) v *= scale;

  BranchState s;
  s.psi_plus = psi;
  s.psi_minus = std::move(psi);
  s.amplitudes = amplitudes;
  return s;
}

struct SplitStepPropagator::Impl {
  GridSpec grid;
  MeasurementForces forces;
  StepSettings settings;
  std::vector<double> k;
  std::vector<Complex> half_kick;  // exp(-i k^2 dt / 4) / N
  FftPlan forward;
  FftPlan backward;

  Impl(const GridSpec& g, const MeasurementForces& f, StepSettings s)
      : grid(g), forces(f), settings(s), k(wavenumbers(g)), half_kick(g.points),
        forward(g.points, FFTW_FORWARD), backward(g.points, FFTW_BACKWARD) {
    const double inv_n = 1.0 / static_cast<double>(g.points);
    for (std::size_t j = 0; j < g.points; ++j) {
      half_kick[j] = std::polar(inv_n, -0.25 * k[j] * k[j] * g.dt);
    }
  }

  void kinetic_half(Wavefunction& psi) const {
    forward(psi);
    for (std::size_t j = 0; j < psi.size(); ++j) psi[j] *= half_kick[j];
    backward(psi);
  }

  void potential(Wavefunction& psi, double force, double center) const {
    const double dt = grid.dt;
    for (std::size_t j = 0; j < psi.size(); ++j) {
      const double x = grid.x(j);
      double v = -force * x;
      if (settings.gravity_on) v += 0.5 * (x - center) * (x - center);
      psi[j] *= std::polar(1.0, -v * dt);
    }
  }

  double kinetic_energy(const Wavefunction& psi) const {
    Wavefunction tmp = psi;
    forward(tmp);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < tmp.size(); ++j) {
      const double p = std::norm(tmp[j]);
      num += 0.5 * k[j] * k[j] * p;
      den += p;
    }
    return den > 0.0 ? num / den : 0.0;
  }
};

SplitStepPropagator::SplitStepPropagator(const GridSpec& grid, const MeasurementForces& forces,
                                         StepSettings settings)
    : impl_(std::make_unique<Impl>(grid, forces, settings)) {
  grid.validate();
}

SplitStepPropagator::~SplitStepPropagator() = default;
SplitStepPropagator::SplitStepPropagator(SplitStepPropagator&&) noexcept = default;
SplitStepPropagator& SplitStepPropagator::operator=(SplitStepPropagator&&) noexcept = default;

const GridSpec& SplitStepPropagator::grid() const { return impl_->grid; }

StateDiagnostics SplitStepPropagator::advance(BranchState& state) const {
  return advance(state, diagnose(state, impl_->grid));
}

StateDiagnostics SplitStepPropagator::advance(BranchState& state,
                                              const StateDiagnostics& start) const {
  const Impl& p = *impl_;
  const auto& amps = state.amplitudes;

  p.kinetic_half(state.psi_plus);
  p.kinetic_half(state.psi_minus);

  // The potential step leaves |psi|^2 unchanged, so x* is evaluated once here.
  const double center = amps.weight_plus() * moments(state.psi_plus, p.grid).mean +
                        amps.weight_minus() * moments(state.psi_minus, p.grid).mean;
  p.potential(state.psi_plus, p.forces.plus + p.forces.common, center);
  p.potential(state.psi_minus, p.forces.minus + p.forces.common, center);

  p.kinetic_half(state.psi_plus);
  p.kinetic_half(state.psi_minus);
  state.time += p.grid.dt;

  const StateDiagnostics end = diagnose(state, p.grid);
  if (p.settings.gravity_on) {
    const double s0 = start.compound_spread * start.compound_spread;
    const double s1 = end.compound_spread * end.compound_spread;
    state.phase -= (p.settings.well_depth + 0.25 * (s0 + s1)) * p.grid.dt;
  }

  for (const auto& [weight, m, label] :
       {std::tuple{amps.weight_plus(), end.plus, "+"}, std::tuple{amps.weight_minus(), end.minus, "-"}}) {
    if (weight > 0.0 && m.edge_mass > p.settings.edge_tolerance) {
      throw AccuracyError(std::string("branch ") + label + " reached the grid edge at t=" +
                          fmt(state.time) + " (edge mass " + fmt(m.edge_mass) + ")");
    }
  }
  return end;
}

double SplitStepPropagator::energy(const BranchState& state) const {
  const Impl& p = *impl_;
  const auto d = diagnose(state, p.grid);
  const double wp = state.amplitudes.weight_plus();
  const double wm = state.amplitudes.weight_minus();
  const double e_plus =
      p.kinetic_energy(state.psi_plus) - (p.forces.plus + p.forces.common) * d.plus.mean;
  const double e_minus =
      p.kinetic_energy(state.psi_minus) - (p.forces.minus + p.forces.common) * d.minus.mean;
  double e = wp * e_plus + wm * e_minus;
  if (p.settings.gravity_on) e += 0.5 * d.compound_spread * d.compound_spread;
  return e;
}

BranchState step(const BranchState& state, const MeasurementForces& forces, bool gravity_on,
                 const GridSpec& grid) {
  SplitStepPropagator prop(grid, forces, StepSettings{.gravity_on = gravity_on});
  BranchState next = state;
  prop.advance(next);
  return next;
}

namespace {

DynamicsRecord make_record(const BranchState& s, const StateDiagnostics& d,
                           const MeasurementForces& forces, double energy) {
  DynamicsRecord r;
  r.time = s.time;
  r.mean_plus = d.plus.mean;
  r.mean_minus = d.minus.mean;
  r.center = d.center;
  r.separation = d.separation;
  r.spread_plus = d.plus.spread;
  r.spread_minus = d.minus.spread;
  r.compound_spread = d.compound_spread;
  r.gravity_force = d.gravity_force;
  r.compound_acceleration = forces.averaged(s.amplitudes);
  r.phase = s.phase;
  r.norm_plus = d.plus.norm;
  r.norm_minus = d.minus.norm;
  r.energy = energy;
  return r;
}

// Largest displacement from x* of a populated branch, or its spread.
double regime_extent(const BranchState& s, const StateDiagnostics& d) {
  double ext = d.compound_spread;
  if (s.amplitudes.weight_plus() > 0.0) {
    ext = std::max({ext, std::abs(d.plus.mean - d.center), d.plus.spread});
  }
  if (s.amplitudes.weight_minus() > 0.0) {
    ext = std::max({ext, std::abs(d.minus.mean - d.center), d.minus.spread});
  }
  return ext;
}

}  // namespace

RunResult run(const EvolveConfig& config) {
  if (config.sample_every == 0) throw ConfigError("sample_every must be >= 1");
  if (!(config.validity_radius > 0.0)) throw ConfigError("validity radius must be > 0");

  RunResult result;
  BranchState state = init_gaussian(config.grid, config.center, config.width, config.amplitudes);
  const SplitStepPropagator prop(
      config.grid, config.forces,
      StepSettings{.gravity_on = config.gravity_on, .well_depth = config.well_depth});

  auto& series = result.series;
  series.amplitudes = config.amplitudes;
  series.forces = config.forces;
  series.dt = config.grid.dt;
  series.sample_interval = config.grid.dt * static_cast<double>(config.sample_every);
  series.records.reserve(config.grid.steps / config.sample_every + 2);

  bool warned = false;
  auto check_regime = [&](const StateDiagnostics& d) {
    if (!config.gravity_on) return;
    const double ext = regime_extent(state, d);
    if (ext > config.validity_radius) {
      throw RegimeError("branch displacement/spread " + fmt(ext) + " exceeds the validity radius " +
                        fmt(config.validity_radius) + " at t=" + fmt(state.time));
    }
    if (!warned && ext > 0.1 * config.validity_radius) {
      result.warnings.push_back("branch displacement/spread exceeded 10% of the validity radius "
                                "at t=" + fmt(state.time));
      warned = true;
    }
  };

  StateDiagnostics diag = diagnose(state, config.grid);
  series.records.push_back(make_record(state, diag, config.forces, prop.energy(state)));
  for (std::size_t n = 1; n <= config.grid.steps; ++n) {
    diag = prop.advance(state, diag);
    check_regime(diag);
    if (n % config.sample_every == 0) {
      series.records.push_back(make_record(state, diag, config.forces, prop.energy(state)));
    }
  }
  result.final_state = std::move(state);
  return result;
}

EhrenfestAudit ehrenfest_audit(const TimeSeries& series) {
  const auto& rec = series.records;
  if (rec.size() < 3) throw ConfigError("Ehrenfest audit needs at least 3 samples");
  if (!(series.sample_interval > 0.0)) throw ConfigError("series has no sample interval");

  EhrenfestAudit a;
  a.samples = rec.size();
  for (const auto& r : rec) a.max_gravity_force = std::max(a.max_gravity_force, std::abs(r.gravity_force));
  a.gravity_ok = a.max_gravity_force <= a.gravity_tolerance;

  a.expected_acceleration = series.forces.averaged(series.amplitudes);
  const double scale = std::max({std::abs(a.expected_acceleration), std::abs(series.forces.plus),
                                 std::abs(series.forces.minus), std::abs(series.forces.common),
                                 1e-300});
  const double h = series.sample_interval;
  for (std::size_t i = 1; i + 1 < rec.size(); ++i) {
    const double acc = (rec[i + 1].center - 2.0 * rec[i].center + rec[i - 1].center) / (h * h);
    a.max_acceleration_error =
        std::max(a.max_acceleration_error, std::abs(acc - a.expected_acceleration) / scale);
  }
  a.acceleration_tolerance = 1000.0 * series.dt * series.dt;
  a.acceleration_ok = a.max_acceleration_error <= a.acceleration_tolerance;
  return a;
}

}  // namespace nsm::dynamics
