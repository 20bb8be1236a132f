#include "nsm/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include <boost/version.hpp>
#include <fftw3.h>
#include <yaml-cpp/yaml.h>

#include "nsm/constants.hpp"

#ifndef NSM_VERSION
#define NSM_VERSION "0.0.0"
#endif

namespace nsm {

namespace fs = std::filesystem;

std::string version() { return NSM_VERSION; }

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

Table::Table(std::vector<Column> columns) : columns_(std::move(columns)) {}

Table::Row Table::row() {
  cells_.emplace_back();
  cells_.back().reserve(columns_.size());
  return Row(cells_.back());
}

Table::Row& Table::Row::operator<<(double v) {
  cells_->push_back(format_number(v));
  return *this;
}

Table::Row& Table::Row::operator<<(std::uint64_t v) {
  cells_->push_back(std::to_string(v));
  return *this;
}

Table::Row& Table::Row::operator<<(const std::string& v) {
  cells_->push_back(v);
  return *this;
}

namespace {

std::string quote(const std::string& cell, char delimiter) {
  if (cell.find_first_of(std::string{delimiter, '"', '\n', '\r'}) == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string Table::render(char delimiter) const {
  std::string out;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i) out += delimiter;
    out += quote(columns_[i].name + " [" + columns_[i].unit + "]", delimiter);
  }
  out += '\n';
  for (const auto& r : cells_) {
    if (r.size() != columns_.size()) throw std::logic_error("table row has the wrong width");
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += delimiter;
      out += quote(r[i], delimiter);
    }
    out += '\n';
  }
  return out;
}

namespace {

constexpr const char* dimless = "dimensionless";

// What one scenario produced, before anything touches the disk.
struct Outcome {
  std::string table_name;
  Table table{{}};
  YAML::Node summary{YAML::NodeType::Map};
  std::vector<std::string> warnings;
};

YAML::Node number_node(double v) { return YAML::Node(format_number(v)); }

void add_warnings(Outcome& o, const std::vector<std::string>& w) {
  o.warnings.insert(o.warnings.end(), w.begin(), w.end());
}

Outcome run_criterion(const CriterionParams& p) {
  using namespace selfgrav;
  Outcome o;
  o.table_name = "profile";
  o.table = Table({{"quantity", "label"}, {"value", "unit column"}, {"unit", "label"}});
  const bool sphere = std::holds_alternative<SphereGeometry>(p.geometry);
  const BodyProfile profile = sphere
                                  ? sphere_profile(std::get<SphereGeometry>(p.geometry), p.kappa,
                                                   p.convention)
                                  : slab_profile(std::get<SlabGeometry>(p.geometry), p.kappa);
  add_warnings(o, profile.warnings);
  const auto margin = classicality_margin(profile, p.a_max);

  auto put = [&](const std::string& name, double v, const std::string& unit) {
    o.table.row() << name << v << unit;
    o.summary[name] = number_node(v);
  };
  put("mass", profile.mass, "kg");
  put("well_depth", profile.well_depth, "J");
  put("grav_freq_sq", profile.grav_freq_sq, "1/s^2");
  put("grav_freq", std::sqrt(profile.grav_freq_sq), "rad/s");
  put("stiffness", profile.stiffness(), "kg/s^2");
  put("validity_radius", profile.validity_radius, "m");
  put("confining_acceleration", profile.grav_freq_sq * profile.validity_radius, "m/s^2");
  put("a_max", p.a_max, "m/s^2");
  put("margin", margin.margin, dimless);
  put("min_size", margin.min_size, "m");
  put("kappa", p.kappa, dimless);
  if (!sphere) {
    const auto& g = std::get<SlabGeometry>(p.geometry);
    put("shape_factor", shape_factor(g.side_a / g.side_b), dimless);
  }
  const auto scale = dynamics::nondimensionalize(profile);
  put("length_unit", scale.length, "m");
  put("time_unit", scale.time, "s");
  put("force_unit", scale.force, "N");
  put("energy_unit", scale.energy, "J");
  if (p.spread) {
    const auto pot = quadratic_potential(profile, {0.0, 0.0, 0.0}, *p.spread);
    add_warnings(o, pot.warnings);
    put("spread", *p.spread, "m");
    put("spread_shift", pot.spread_shift, "J");
  }
  o.summary["geometry"] = sphere ? "sphere" : "slab";
  o.summary["convention"] = to_string(p.convention);
  o.summary["classical"] = margin.margin > 1.0;
  return o;
}

Outcome run_evolve(const EvolveParams& p) {
  Outcome o;
  o.table_name = "timeseries";
  const auto result = dynamics::run(p.run);
  add_warnings(o, result.warnings);
  o.table = Table({{"time", dimless},
                   {"mean_plus", dimless},
                   {"mean_minus", dimless},
                   {"center", dimless},
                   {"separation", dimless},
                   {"spread_plus", dimless},
                   {"spread_minus", dimless},
                   {"compound_spread", dimless},
                   {"gravity_force", dimless},
                   {"compound_acceleration", dimless},
                   {"phase", "rad"},
                   {"norm_plus", dimless},
                   {"norm_minus", dimless},
                   {"energy", dimless}});
  double max_sep = 0.0;
  double norm_dev = 0.0;
  double energy_dev = 0.0;
  const auto& rec = result.series.records;
  for (const auto& r : rec) {
    o.table.row() << r.time << r.mean_plus << r.mean_minus << r.center << r.separation
                  << r.spread_plus << r.spread_minus << r.compound_spread << r.gravity_force
                  << r.compound_acceleration << r.phase << r.norm_plus << r.norm_minus << r.energy;
    max_sep = std::max(max_sep, std::abs(r.separation));
    norm_dev = std::max({norm_dev, std::abs(r.norm_plus - rec.front().norm_plus),
                         std::abs(r.norm_minus - rec.front().norm_minus)});
    energy_dev = std::max(energy_dev, std::abs(r.energy - rec.front().energy));
  }
  const auto& f = p.run.forces;
  const double relative = std::abs(f.plus - f.minus);
  const double t_end = rec.empty() ? 0.0 : rec.back().time;
  // Relative coordinate: s'' = F+ - F- (- s with gravity), starting at rest.
  const double bound = p.run.gravity_on ? 2.0 * relative : 0.5 * relative * t_end * t_end;

  auto& s = o.summary;
  s["units"] = "hbar = M = omega_gr = 1";
  s["gravity"] = p.run.gravity_on;
  s["samples"] = rec.size();
  s["final_time"] = number_node(t_end);
  s["max_separation"] = number_node(max_sep);
  s[p.run.gravity_on ? "analytic_max_separation" : "analytic_free_separation"] = number_node(bound);
  s["max_norm_deviation"] = number_node(norm_dev);
  s["max_energy_deviation"] = number_node(energy_dev);
  s["phase_spread"] = "compound";
  if (rec.size() >= 3) {
    const auto audit = dynamics::ehrenfest_audit(result.series);
    YAML::Node a;
    a["max_gravity_force"] = number_node(audit.max_gravity_force);
    a["gravity_tolerance"] = number_node(audit.gravity_tolerance);
    a["expected_acceleration"] = number_node(audit.expected_acceleration);
    a["max_acceleration_error"] = number_node(audit.max_acceleration_error);
    a["acceleration_tolerance"] = number_node(audit.acceleration_tolerance);
    a["ok"] = audit.ok();
    s["ehrenfest_audit"] = a;
  }
  return o;
}

Outcome run_escape(const EscapeParams& p, std::uint64_t seed) {
  Outcome o;
  o.table_name = "rates";
  std::vector<escape::SweepPoint> points;
  for (std::size_t i = 0; i < p.forces.size(); ++i) points.push_back({p.forces[i], p.samples[i]});
  const auto est = escape::rate_sweep(p.model, points, p.horizon, seed, p.options);

  o.table = Table({{"force", dimless},
                   {"samples", "count"},
                   {"crossings", "count"},
                   {"integrated", "count"},
                   {"escape_probability", dimless},
                   {"probability_half_width", dimless},
                   {"rate", "1/time (dimensionless)"},
                   {"rate_half_width", "1/time (dimensionless)"},
                   {"rate_upper_bound", "1/time (dimensionless)"},
                   {"max_energy_drift", dimless}});
  std::vector<escape::RatePoint> rates;
  for (const auto& e : est) {
    o.table.row() << e.force << e.samples << e.crossings << e.integrated << e.escape_probability
                  << e.probability_half_width << e.rate << e.half_width << e.upper_bound
                  << e.max_energy_drift;
    rates.push_back({e.force, e.rate});
    add_warnings(o, e.warnings);
  }
  auto& s = o.summary;
  s["threshold_energy"] = number_node(escape::threshold_energy(p.model));
  s["ensemble"] = to_string(p.options.ensemble);
  s["dofs"] = p.options.dofs;
  std::size_t positive = 0;
  for (const auto& r : rates) positive += r.rate > 0.0 ? 1 : 0;
  if (positive >= 3) {
    const auto fit = escape::exponent_fit(rates);
    add_warnings(o, fit.warnings);
    YAML::Node f;
    f["exponent"] = number_node(fit.exponent);
    f["standard_error"] = number_node(fit.standard_error);
    f["ci95_low"] = number_node(fit.ci_low);
    f["ci95_high"] = number_node(fit.ci_high);
    f["log_prefactor"] = number_node(fit.log_prefactor);
    f["points_used"] = fit.points_used;
    s["fit"] = f;
  } else {
    s["fit"] = "not enough force points with crossings";
  }
  return o;
}

Outcome run_born(const BornParams& p, std::uint64_t seed) {
  Outcome o;
  o.table_name = "detection";
  const auto cal = escape::calibrate_detector(p.model, p.force_ref, p.bias, p.samples, p.horizon,
                                              seed, p.options);
  o.table = Table({{"amplitude_sq", dimless},
                   {"force", dimless},
                   {"p_threshold", dimless},
                   {"p_biased", dimless},
                   {"ratio_threshold", dimless},
                   {"ratio_biased", dimless}});
  for (double x : p.amplitudes_sq) {
    const double thr = escape::detection_probability(x, cal, escape::Regime::threshold).probability;
    const double bia = escape::detection_probability(x, cal, escape::Regime::biased).probability;
    const double r_thr = cal.p_ref_threshold > 0.0 ? thr / cal.p_ref_threshold : std::nan("");
    const double r_bia = cal.p_ref_biased > 0.0 ? bia / cal.p_ref_biased : std::nan("");
    o.table.row() << x << x * p.force_ref << thr << bia << r_thr << r_bia;
  }
  if (cal.p_ref_threshold == 0.0) o.warnings.push_back("no threshold crossings at force_ref");
  if (cal.p_ref_biased == 0.0) o.warnings.push_back("biased response not above baseline");
  auto& s = o.summary;
  s["force_ref"] = number_node(cal.force_ref);
  s["bias"] = number_node(cal.bias);
  s["p_ref_threshold"] = number_node(cal.p_ref_threshold);
  s["p_ref_biased"] = number_node(cal.p_ref_biased);
  s["baseline"] = number_node(cal.baseline);
  s["threshold_exponent"] = number_node(cal.threshold_exponent);
  return o;
}

Outcome run_two_detector(const TwoDetectorParams& p, std::uint64_t seed) {
  Outcome o;
  o.table_name = "joint";
  auto spec = [](const DetectorParams& d) {
    escape::DetectorSpec s;
    s.regime = d.regime;
    s.calibration = escape::ideal_detector(d.p_ref, d.p_ref);
    return s;
  };
  const auto j = escape::two_detector_trial(p.weight_plus, spec(p.first), spec(p.second), p.trials,
                                            seed);
  o.table = Table({{"outcome", "label"}, {"frequency", dimless}, {"independent", dimless}});
  o.table.row() << "both" << j.both << j.p1 * j.p2;
  o.table.row() << "only_first" << j.only_first << j.p1 * (1.0 - j.p2);
  o.table.row() << "only_second" << j.only_second << (1.0 - j.p1) * j.p2;
  o.table.row() << "neither" << j.neither << (1.0 - j.p1) * (1.0 - j.p2);

  auto& s = o.summary;
  s["trials"] = j.trials;
  s["p1"] = number_node(j.p1);
  s["p2"] = number_node(j.p2);
  s["both"] = number_node(j.both);
  s["both_sigma"] = number_node(j.both_sigma);
  const double z = j.both_sigma > 0.0 ? (j.both - j.p1 * j.p2) / j.both_sigma : 0.0;
  s["both_z"] = number_node(z);
  s["independent_within_3sigma"] = std::abs(z) <= 3.0;
  s["anticorrelated"] = false;
  return o;
}

Outcome run_estimates(const EstimatesParams& p) {
  Outcome o;
  o.table_name = "estimates";
  o.table = Table({{"name", "label"},
                   {"value", "unit column"},
                   {"unit", "label"},
                   {"quoted", "unit column"},
                   {"ratio_to_quoted", dimless},
                   {"provenance", "label"}});
  for (const auto& r : estimates::reproduce_estimates(p.inputs)) {
    auto row = o.table.row();
    row << r.name << r.value << r.unit;
    if (r.quoted) {
      row << *r.quoted << r.value / *r.quoted;
      o.summary[r.name] = number_node(r.value);
    } else {
      row << "" << "";
    }
    row << r.provenance;
  }
  return o;
}

Outcome dispatch(const ScenarioConfig& c) {
  return std::visit(
      [&](const auto& p) -> Outcome {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, CriterionParams>) return run_criterion(p);
        if constexpr (std::is_same_v<T, EvolveParams>) return run_evolve(p);
        if constexpr (std::is_same_v<T, EscapeParams>) return run_escape(p, c.seed);
        if constexpr (std::is_same_v<T, BornParams>) return run_born(p, c.seed);
        if constexpr (std::is_same_v<T, TwoDetectorParams>) return run_two_detector(p, c.seed);
        if constexpr (std::is_same_v<T, EstimatesParams>) return run_estimates(p);
      },
      c.params);
}

std::string emit(const YAML::Node& node) {
  YAML::Emitter e;
  e << node;
  return std::string(e.c_str()) + "\n";
}

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

YAML::Node manifest(const ScenarioConfig& c, const Outcome& o,
                    const std::vector<fs::path>& files, std::chrono::system_clock::time_point start,
                    double seconds) {
  YAML::Node m;
  m["kind"] = to_string(c.kind());
  m["seed"] = std::to_string(c.seed);
  m["config"] = YAML::Load(serialize(c));
  YAML::Node k;
  k["G"] = number_node(constants::G);
  k["hbar"] = number_node(constants::hbar);
  k["electron_mass"] = number_node(constants::electron_mass);
  k["source"] = "CODATA 2018";
  m["constants"] = k;
  YAML::Node v;
  v["nsm"] = version();
  v["fftw"] = fftw_version;
  v["boost"] = BOOST_LIB_VERSION;
  v["compiler"] = __VERSION__;
  m["versions"] = v;
  m["started_utc"] = utc_timestamp(start);
  m["wall_clock_seconds"] = number_node(seconds);
  for (const auto& f : files) m["artifacts"].push_back(f.filename().string());
  for (const auto& w : o.warnings) m["warnings"].push_back(w);
  return m;
}

void write_file(const fs::path& path, const std::string& content, std::vector<fs::path>& written) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  written.push_back(path);
  out << content;
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

ExecutionResult execute(const ScenarioConfig& config) {
  ExecutionResult result;
  result.directory = config.output.dir;
  std::vector<fs::path> written;
  bool created_dir = false;
  const auto start = std::chrono::system_clock::now();
  const auto t0 = std::chrono::steady_clock::now();
  try {
    validate(config);
    Outcome o = dispatch(config);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::error_code ec;
    if (!fs::exists(result.directory, ec)) {
      created_dir = fs::create_directories(result.directory, ec);
      if (ec) throw IoError("cannot create " + result.directory.string() + ": " + ec.message());
    } else if (!fs::is_directory(result.directory, ec)) {
      throw IoError(result.directory.string() + " is not a directory");
    }

    const auto ext = config.output.delimiter == ',' ? ".csv" : ".tsv";
    const fs::path table = result.directory / (o.table_name + ext);
    const fs::path summary = result.directory / "summary.yaml";
    const fs::path manifest_path = result.directory / "manifest.yaml";
    YAML::Node summary_doc = o.summary;
    summary_doc["kind"] = to_string(config.kind());
    for (const auto& w : o.warnings) summary_doc["warnings"].push_back(w);

    write_file(table, o.table.render(config.output.delimiter), written);
    write_file(summary, emit(summary_doc), written);
    const std::vector<fs::path> listed{table, summary};
    write_file(manifest_path, emit(manifest(config, o, listed, start, seconds)), written);

    result.artifacts = written;
    result.warnings = std::move(o.warnings);
    return result;
  } catch (const Error& e) {
    result.code = e.code();
    result.message = e.what();
  } catch (const YAML::Exception& e) {
    result.code = ExitCode::io;
    result.message = std::string("YAML emitter: ") + e.what();
  } catch (const fs::filesystem_error& e) {
    result.code = ExitCode::io;
    result.message = e.what();
  } catch (const std::exception& e) {
    result.code = ExitCode::accuracy;
    result.message = std::string("internal failure: ") + e.what();
  }
  std::error_code ec;
  for (const auto& f : written) fs::remove(f, ec);
  if (created_dir) fs::remove(result.directory, ec);  // only succeeds when empty
  result.artifacts.clear();
  return result;
}

}  // namespace nsm
