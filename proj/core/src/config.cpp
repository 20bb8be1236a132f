#include "nsm/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "nsm/errors.hpp"

namespace nsm {

namespace {

std::string num(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

// Tracks which keys of one mapping were read, so leftovers can be reported.
class Section {
 public:
  Section(YAML::Node node, std::string path, std::vector<std::string>& unknown)
      : node_(std::move(node)), path_(std::move(path)), unknown_(&unknown) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) {
      throw ConfigError(where() + " must be a mapping");
    }
  }
  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;

  ~Section() {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.Scalar();
      if (!used_.count(key)) unknown_->push_back(qualify(key));
    }
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return node_ && node_.IsMap() && node_[key] && !node_[key].IsNull();
  }

  YAML::Node raw(const std::string& key) {
    used_.insert(key);
    return node_[key];
  }

  Section child(const std::string& key) {
    used_.insert(key);
    YAML::Node n = has(key) ? node_[key] : YAML::Node();
    return Section(n, qualify(key), *unknown_);
  }

  double number(const std::string& key, double fallback) {
    return has(key) ? to_number(node_[key], qualify(key)) : fallback;
  }
  double number(const std::string& key) {
    require(key);
    return to_number(node_[key], qualify(key));
  }
  std::uint64_t count(const std::string& key, std::uint64_t fallback) {
    return has(key) ? to_count(node_[key], qualify(key)) : fallback;
  }
  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    try {
      return node_[key].as<bool>();
    } catch (const YAML::Exception&) {
      throw ConfigError(qualify(key) + " must be true or false");
    }
  }
  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    if (!node_[key].IsScalar()) throw ConfigError(qualify(key) + " must be a scalar");
    return node_[key].as<std::string>();
  }
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) {
    if (!has(key)) return fallback;
    std::vector<double> out;
    const auto n = node_[key];
    if (n.IsScalar()) return {to_number(n, qualify(key))};
    if (!n.IsSequence()) throw ConfigError(qualify(key) + " must be a number or a list of numbers");
    for (std::size_t i = 0; i < n.size(); ++i) {
      out.push_back(to_number(n[i], qualify(key) + "[" + std::to_string(i) + "]"));
    }
    return out;
  }
  std::vector<std::uint64_t> counts(const std::string& key,
                                    const std::vector<std::uint64_t>& fallback) {
    if (!has(key)) return fallback;
    const auto n = node_[key];
    if (n.IsScalar()) return {to_count(n, qualify(key))};
    if (!n.IsSequence()) throw ConfigError(qualify(key) + " must be a count or a list of counts");
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < n.size(); ++i) {
      out.push_back(to_count(n[i], qualify(key) + "[" + std::to_string(i) + "]"));
    }
    return out;
  }
  dynamics::Complex complex(const std::string& key, dynamics::Complex fallback) {
    if (!has(key)) return fallback;
    const auto n = node_[key];
    if (n.IsScalar()) return {to_number(n, qualify(key)), 0.0};
    if (!n.IsSequence() || n.size() != 2) {
      throw ConfigError(qualify(key) + " must be a number or a [re, im] pair");
    }
    return {to_number(n[0], qualify(key) + "[0]"), to_number(n[1], qualify(key) + "[1]")};
  }

  void require(const std::string& key) {
    if (!has(key)) throw ConfigError("missing required key " + qualify(key));
  }

  std::string qualify(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  std::string where() const { return path_.empty() ? "document" : path_; }

  static double to_number(const YAML::Node& n, const std::string& name) {
    if (!n.IsScalar()) throw ConfigError(name + " must be a number");
    const auto s = n.as<std::string>();
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [end, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || end != last) {
      try {
        v = n.as<double>();  // .inf, .nan
      } catch (const YAML::Exception&) {
        throw ConfigError(name + " must be a number (got '" + s + "')");
      }
    }
    return v;
  }

  static std::uint64_t to_count(const YAML::Node& n, const std::string& name) {
    if (!n.IsScalar()) throw ConfigError(name + " must be a non-negative integer");
    const auto s = n.as<std::string>();
    std::uint64_t u = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), u);
    if (ec == std::errc{} && end == s.data() + s.size()) return u;
    const double v = to_number(n, name);
    if (!(v >= 0.0) || v != std::floor(v) || v >= 18446744073709551616.0) {
      throw ConfigError(name + " must be a non-negative integer (got '" + s + "')");
    }
    return static_cast<std::uint64_t>(v);
  }

  YAML::Node node_;
  std::string path_;
  std::vector<std::string>* unknown_;
  std::set<std::string> used_;
};

escape::SaddleModel parse_model(Section& s) {
  escape::SaddleModel m;
  auto model = s.child("model");
  m.a = model.number("a", m.a);
  m.b = model.number("b", m.b);
  m.c = model.number("c", m.c);
  m.m = model.number("m", m.m);
  return m;
}

escape::EscapeOptions parse_escape_options(Section& s) {
  escape::EscapeOptions o;
  o.dt = s.number("dt", o.dt);
  const auto dofs = s.count("dofs", static_cast<std::uint64_t>(o.dofs));
  if (dofs != 2 && dofs != 3) throw ConfigError(s.qualify("dofs") + " must be 2 or 3");
  o.dofs = static_cast<int>(dofs);
  o.ensemble = escape::ensemble_from_string(s.text("ensemble", to_string(o.ensemble)));
  o.prune_trapped = s.flag("prune_trapped", o.prune_trapped);
  const auto threads = s.count("threads", o.threads);
  if (threads == 0 || threads > 1024) throw ConfigError(s.qualify("threads") + " must lie in [1, 1024]");
  o.threads = static_cast<unsigned>(threads);
  o.max_energy_drift = s.number("max_energy_drift", o.max_energy_drift);
  o.confidence = s.number("confidence", o.confidence);
  return o;
}

CriterionParams parse_criterion(Section& s) {
  CriterionParams p;
  const auto geometry = s.text("geometry", "sphere");
  if (geometry == "sphere") {
    selfgrav::SphereGeometry g;
    g.radius = s.number("radius");
    g.density = s.number("density");
    p.geometry = g;
  } else if (geometry == "slab") {
    selfgrav::SlabGeometry g;
    g.side_a = s.number("side_a");
    g.side_b = s.number("side_b");
    g.length = s.number("length");
    g.density = s.number("density");
    p.geometry = g;
  } else {
    throw ConfigError(s.qualify("geometry") + " must be sphere or slab (got '" + geometry + "')");
  }
  p.a_max = s.number("a_max");
  p.kappa = s.number("kappa", p.kappa);
  p.convention = selfgrav::frequency_convention_from_string(
      s.text("convention", to_string(p.convention)));
  if (s.has("spread")) p.spread = s.number("spread");
  return p;
}

EvolveParams parse_evolve(Section& s) {
  EvolveParams p;
  auto& r = p.run;
  {
    auto grid = s.child("grid");
    r.grid.points = grid.count("points", r.grid.points);
    r.grid.extent = grid.number("extent", r.grid.extent);
    r.grid.dt = grid.number("dt", r.grid.dt);
    r.grid.steps = grid.count("steps", r.grid.steps);
    r.sample_every = grid.count("sample_every", r.sample_every);
  }
  {
    auto packet = s.child("packet");
    r.center = packet.number("center", r.center);
    r.width = packet.number("width", r.width);
  }
  {
    auto amps = s.child("amplitudes");
    const bool by_weight = amps.has("weight_plus");
    if (by_weight && (amps.has("c_plus") || amps.has("c_minus"))) {
      throw ConfigError(amps.qualify("weight_plus") + " excludes c_plus and c_minus");
    }
    if (by_weight) {
      const double w = amps.number("weight_plus");
      if (!(w >= 0.0 && w <= 1.0)) {
        throw ConfigError(amps.qualify("weight_plus") + " must lie in [0, 1] (got " + num(w) + ")");
      }
      r.amplitudes.c_plus = {std::sqrt(w), 0.0};
      r.amplitudes.c_minus = {std::sqrt(1.0 - w), 0.0};
    } else {
      r.amplitudes.c_plus = amps.complex("c_plus", r.amplitudes.c_plus);
      r.amplitudes.c_minus = amps.complex("c_minus", r.amplitudes.c_minus);
    }
  }
  {
    auto forces = s.child("forces");
    r.forces.plus = forces.number("plus", r.forces.plus);
    r.forces.minus = forces.number("minus", r.forces.minus);
    r.forces.common = forces.number("common", r.forces.common);
  }
  r.gravity_on = s.flag("gravity", r.gravity_on);
  r.well_depth = s.number("well_depth", r.well_depth);
  r.validity_radius = s.number("validity_radius", r.validity_radius);
  return p;
}

EscapeParams parse_escape(Section& s) {
  EscapeParams p;
  p.model = parse_model(s);
  p.forces = s.numbers("forces", p.forces);
  p.samples = s.counts("samples", p.samples);
  p.horizon = s.number("horizon", p.horizon);
  p.options = parse_escape_options(s);
  if (p.samples.size() == 1 && p.forces.size() > 1) {
    p.samples.assign(p.forces.size(), p.samples.front());
  }
  return p;
}

BornParams parse_born(Section& s) {
  BornParams p;
  p.model = parse_model(s);
  p.force_ref = s.number("force_ref", p.force_ref);
  p.bias = s.number("bias", p.bias);
  p.samples = s.count("samples", p.samples);
  p.horizon = s.number("horizon", p.horizon);
  p.amplitudes_sq = s.numbers("amplitudes_sq", p.amplitudes_sq);
  p.options = parse_escape_options(s);
  return p;
}

DetectorParams parse_detector(Section& s) {
  DetectorParams d;
  d.regime = escape::regime_from_string(s.text("regime", to_string(d.regime)));
  d.p_ref = s.number("p_ref", d.p_ref);
  return d;
}

TwoDetectorParams parse_two_detector(Section& s) {
  TwoDetectorParams p;
  p.weight_plus = s.number("weight_plus", p.weight_plus);
  p.trials = s.count("trials", p.trials);
  {
    auto first = s.child("first");
    p.first = parse_detector(first);
  }
  {
    auto second = s.child("second");
    p.second = parse_detector(second);
  }
  return p;
}

EstimatesParams parse_estimates(Section& s) {
  EstimatesParams p;
  auto& in = p.inputs;
  in.condensed_density = s.number("density", in.condensed_density);
  in.afm_acceleration = s.number("a_max", in.afm_acceleration);
  in.time_of_flight = s.number("time_of_flight", in.time_of_flight);
  in.target_phase = s.number("target_phase", in.target_phase);
  in.lead_length = s.number("lead_length", in.lead_length);
  in.kappas = s.numbers("kappas", in.kappas);
  auto av = s.child("avalanche");
  in.avalanche.electrons = av.number("electrons", in.avalanche.electrons);
  in.avalanche.cross_section = av.number("cross_section", in.avalanche.cross_section);
  in.avalanche.transfer_time = av.number("transfer_time", in.avalanche.transfer_time);
  in.avalanche.carrier_density = av.number("carrier_density", in.avalanche.carrier_density);
  in.avalanche.carrier_mass = av.number("carrier_mass", in.avalanche.carrier_mass);
  return p;
}

// Range checks with the violated bound in the message.
void positive(double v, const std::string& name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(name + " must be finite and > 0 (got " + num(v) + ")");
  }
}
void non_negative(double v, const std::string& name) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw ConfigError(name + " must be finite and >= 0 (got " + num(v) + ")");
  }
}
void finite(double v, const std::string& name) {
  if (!std::isfinite(v)) throw ConfigError(name + " must be finite (got " + num(v) + ")");
}
void unit_interval(double v, const std::string& name) {
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(name + " must lie in [0, 1] (got " + num(v) + ")");
}

void validate_model(const escape::SaddleModel& m, const std::string& p) {
  positive(m.a, p + ".model.a");
  positive(m.b, p + ".model.b");
  positive(m.c, p + ".model.c");
  positive(m.m, p + ".model.m");
}

void validate_options(const escape::EscapeOptions& o, double horizon, const std::string& p) {
  positive(horizon, p + ".horizon");
  positive(o.dt, p + ".dt");
  if (o.dt > horizon) throw ConfigError(p + ".dt must be <= horizon (" + num(horizon) + ")");
  positive(o.max_energy_drift, p + ".max_energy_drift");
  if (!(o.confidence > 0.0 && o.confidence < 1.0)) {
    throw ConfigError(p + ".confidence must lie in (0, 1) (got " + num(o.confidence) + ")");
  }
}

struct Validator {
  void operator()(const CriterionParams& p) const {
    const std::string s = "criterion";
    if (const auto* g = std::get_if<selfgrav::SphereGeometry>(&p.geometry)) {
      positive(g->radius, s + ".radius");
      positive(g->density, s + ".density");
    } else {
      const auto& slab = std::get<selfgrav::SlabGeometry>(p.geometry);
      positive(slab.side_a, s + ".side_a");
      positive(slab.side_b, s + ".side_b");
      positive(slab.length, s + ".length");
      positive(slab.density, s + ".density");
      if (!(slab.length > slab.diagonal())) {
        throw ConfigError(s + ".length must exceed the cross-section diagonal " +
                          num(slab.diagonal()) + " m (got " + num(slab.length) + ")");
      }
    }
    positive(p.a_max, s + ".a_max");
    if (!(p.kappa >= 1.0) || !std::isfinite(p.kappa)) {
      throw ConfigError(s + ".kappa must be >= 1 (got " + num(p.kappa) + ")");
    }
    if (p.spread) non_negative(*p.spread, s + ".spread");
  }

  void operator()(const EvolveParams& p) const {
    const auto& r = p.run;
    const std::string s = "evolve";
    const auto pts = r.grid.points;
    if (pts < 64 || (pts & (pts - 1)) != 0) {
      throw ConfigError(s + ".grid.points must be a power of two >= 64 (got " + std::to_string(pts) + ")");
    }
    positive(r.grid.extent, s + ".grid.extent");
    positive(r.grid.dt, s + ".grid.dt");
    if (r.grid.steps == 0) throw ConfigError(s + ".grid.steps must be >= 1");
    if (r.sample_every == 0) throw ConfigError(s + ".grid.sample_every must be >= 1");
    finite(r.center, s + ".packet.center");
    positive(r.width, s + ".packet.width");
    const double total = r.amplitudes.weight_plus() + r.amplitudes.weight_minus();
    if (!(std::abs(total - 1.0) <= 1e-12)) {
      throw ConfigError(s + ".amplitudes must satisfy |c_plus|^2 + |c_minus|^2 = 1 within 1e-12 (got " +
                        num(total) + ")");
    }
    finite(r.forces.plus, s + ".forces.plus");
    finite(r.forces.minus, s + ".forces.minus");
    finite(r.forces.common, s + ".forces.common");
    finite(r.well_depth, s + ".well_depth");
    positive(r.validity_radius, s + ".validity_radius");
  }

  void operator()(const EscapeParams& p) const {
    const std::string s = "escape";
    validate_model(p.model, s);
    if (p.forces.empty()) throw ConfigError(s + ".forces must not be empty");
    if (p.samples.size() != p.forces.size()) {
      throw ConfigError(s + ".samples must have one entry per force (" +
                        std::to_string(p.forces.size()) + ") or be a single count");
    }
    for (std::size_t i = 0; i < p.forces.size(); ++i) {
      const auto name = s + ".forces[" + std::to_string(i) + "]";
      non_negative(p.forces[i], name);
      if (!(p.forces[i] < p.model.a)) {
        throw ConfigError(name + " must be < model.a (" + num(p.model.a) + ")");
      }
      if (p.samples[i] == 0) throw ConfigError(s + ".samples[" + std::to_string(i) + "] must be >= 1");
    }
    validate_options(p.options, p.horizon, s);
  }

  void operator()(const BornParams& p) const {
    const std::string s = "born";
    validate_model(p.model, s);
    positive(p.force_ref, s + ".force_ref");
    if (!(p.force_ref < p.model.a)) {
      throw ConfigError(s + ".force_ref must be < model.a (" + num(p.model.a) + ")");
    }
    positive(p.bias, s + ".bias");
    if (p.samples == 0) throw ConfigError(s + ".samples must be >= 1");
    if (p.amplitudes_sq.empty()) throw ConfigError(s + ".amplitudes_sq must not be empty");
    for (std::size_t i = 0; i < p.amplitudes_sq.size(); ++i) {
      unit_interval(p.amplitudes_sq[i], s + ".amplitudes_sq[" + std::to_string(i) + "]");
    }
    validate_options(p.options, p.horizon, s);
  }

  void operator()(const TwoDetectorParams& p) const {
    const std::string s = "two-detector";
    unit_interval(p.weight_plus, s + ".weight_plus");
    if (p.trials == 0) throw ConfigError(s + ".trials must be >= 1");
    unit_interval(p.first.p_ref, s + ".first.p_ref");
    unit_interval(p.second.p_ref, s + ".second.p_ref");
  }

  void operator()(const EstimatesParams& p) const {
    const std::string s = "estimates";
    const auto& in = p.inputs;
    positive(in.condensed_density, s + ".density");
    positive(in.afm_acceleration, s + ".a_max");
    positive(in.time_of_flight, s + ".time_of_flight");
    positive(in.target_phase, s + ".target_phase");
    positive(in.lead_length, s + ".lead_length");
    if (in.kappas.empty()) throw ConfigError(s + ".kappas must not be empty");
    for (std::size_t i = 0; i < in.kappas.size(); ++i) {
      const auto name = s + ".kappas[" + std::to_string(i) + "]";
      if (!(in.kappas[i] >= 1.0) || !std::isfinite(in.kappas[i])) {
        throw ConfigError(name + " must be >= 1 (got " + num(in.kappas[i]) + ")");
      }
    }
    const auto& av = in.avalanche;
    positive(av.electrons, s + ".avalanche.electrons");
    positive(av.cross_section, s + ".avalanche.cross_section");
    positive(av.transfer_time, s + ".avalanche.transfer_time");
    positive(av.carrier_density, s + ".avalanche.carrier_density");
    positive(av.carrier_mass, s + ".avalanche.carrier_mass");
    const double d = std::sqrt(2.0 * av.cross_section);
    if (!(in.lead_length > d)) {
      throw ConfigError(s + ".lead_length must exceed the lead diagonal " + num(d) + " m");
    }
  }
};

// Emitter helpers: numbers in shortest round-trip form.
YAML::Emitter& put(YAML::Emitter& e, const char* key, double v) {
  return e << YAML::Key << key << YAML::Value << num(v);
}
YAML::Emitter& put(YAML::Emitter& e, const char* key, std::uint64_t v) {
  return e << YAML::Key << key << YAML::Value << std::to_string(v);
}
YAML::Emitter& put(YAML::Emitter& e, const char* key, const std::string& v) {
  return e << YAML::Key << key << YAML::Value << v;
}
YAML::Emitter& put(YAML::Emitter& e, const char* key, bool v) {
  return e << YAML::Key << key << YAML::Value << (v ? "true" : "false");
}
void put_list(YAML::Emitter& e, const char* key, const std::vector<double>& v) {
  e << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double x : v) e << num(x);
  e << YAML::EndSeq;
}
void put_complex(YAML::Emitter& e, const char* key, dynamics::Complex c) {
  e << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq << num(c.real())
    << num(c.imag()) << YAML::EndSeq;
}

void emit_model(YAML::Emitter& e, const escape::SaddleModel& m) {
  e << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  put(e, "a", m.a);
  put(e, "b", m.b);
  put(e, "c", m.c);
  put(e, "m", m.m);
  e << YAML::EndMap;
}

void emit_options(YAML::Emitter& e, const escape::EscapeOptions& o) {
  put(e, "dt", o.dt);
  put(e, "dofs", static_cast<std::uint64_t>(o.dofs));
  put(e, "ensemble", to_string(o.ensemble));
  put(e, "prune_trapped", o.prune_trapped);
  put(e, "threads", static_cast<std::uint64_t>(o.threads));
  put(e, "max_energy_drift", o.max_energy_drift);
  put(e, "confidence", o.confidence);
}

struct Emit {
  YAML::Emitter& e;

  void operator()(const CriterionParams& p) const {
    if (const auto* g = std::get_if<selfgrav::SphereGeometry>(&p.geometry)) {
      put(e, "geometry", std::string("sphere"));
      put(e, "radius", g->radius);
      put(e, "density", g->density);
    } else {
      const auto& s = std::get<selfgrav::SlabGeometry>(p.geometry);
      put(e, "geometry", std::string("slab"));
      put(e, "side_a", s.side_a);
      put(e, "side_b", s.side_b);
      put(e, "length", s.length);
      put(e, "density", s.density);
    }
    put(e, "a_max", p.a_max);
    put(e, "kappa", p.kappa);
    put(e, "convention", to_string(p.convention));
    if (p.spread) put(e, "spread", *p.spread);
  }

  void operator()(const EvolveParams& p) const {
    const auto& r = p.run;
    e << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
    put(e, "points", static_cast<std::uint64_t>(r.grid.points));
    put(e, "extent", r.grid.extent);
    put(e, "dt", r.grid.dt);
    put(e, "steps", static_cast<std::uint64_t>(r.grid.steps));
    put(e, "sample_every", static_cast<std::uint64_t>(r.sample_every));
    e << YAML::EndMap;
    e << YAML::Key << "packet" << YAML::Value << YAML::BeginMap;
    put(e, "center", r.center);
    put(e, "width", r.width);
    e << YAML::EndMap;
    e << YAML::Key << "amplitudes" << YAML::Value << YAML::BeginMap;
    put_complex(e, "c_plus", r.amplitudes.c_plus);
    put_complex(e, "c_minus", r.amplitudes.c_minus);
    e << YAML::EndMap;
    e << YAML::Key << "forces" << YAML::Value << YAML::BeginMap;
    put(e, "plus", r.forces.plus);
    put(e, "minus", r.forces.minus);
    put(e, "common", r.forces.common);
    e << YAML::EndMap;
    put(e, "gravity", r.gravity_on);
    put(e, "well_depth", r.well_depth);
    put(e, "validity_radius", r.validity_radius);
  }

  void operator()(const EscapeParams& p) const {
    emit_model(e, p.model);
    put_list(e, "forces", p.forces);
    e << YAML::Key << "samples" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (auto n : p.samples) e << std::to_string(n);
    e << YAML::EndSeq;
    put(e, "horizon", p.horizon);
    emit_options(e, p.options);
  }

  void operator()(const BornParams& p) const {
    emit_model(e, p.model);
    put(e, "force_ref", p.force_ref);
    put(e, "bias", p.bias);
    put(e, "samples", p.samples);
    put(e, "horizon", p.horizon);
    put_list(e, "amplitudes_sq", p.amplitudes_sq);
    emit_options(e, p.options);
  }

  void operator()(const TwoDetectorParams& p) const {
    put(e, "weight_plus", p.weight_plus);
    put(e, "trials", p.trials);
    for (auto [key, d] : {std::pair{"first", &p.first}, std::pair{"second", &p.second}}) {
      e << YAML::Key << key << YAML::Value << YAML::BeginMap;
      put(e, "regime", to_string(d->regime));
      put(e, "p_ref", d->p_ref);
      e << YAML::EndMap;
    }
  }

  void operator()(const EstimatesParams& p) const {
    const auto& in = p.inputs;
    put(e, "density", in.condensed_density);
    put(e, "a_max", in.afm_acceleration);
    put(e, "time_of_flight", in.time_of_flight);
    put(e, "target_phase", in.target_phase);
    put(e, "lead_length", in.lead_length);
    put_list(e, "kappas", in.kappas);
    e << YAML::Key << "avalanche" << YAML::Value << YAML::BeginMap;
    put(e, "electrons", in.avalanche.electrons);
    put(e, "cross_section", in.avalanche.cross_section);
    put(e, "transfer_time", in.avalanche.transfer_time);
    put(e, "carrier_density", in.avalanche.carrier_density);
    put(e, "carrier_mass", in.avalanche.carrier_mass);
    e << YAML::EndMap;
  }
};

}  // namespace

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::criterion: return "criterion";
    case ScenarioKind::evolve: return "evolve";
    case ScenarioKind::escape: return "escape";
    case ScenarioKind::born: return "born";
    case ScenarioKind::two_detector: return "two-detector";
    case ScenarioKind::estimates: return "estimates";
  }
  return "unknown";
}

ScenarioKind scenario_kind_from_string(std::string_view s) {
  if (s == "criterion") return ScenarioKind::criterion;
  if (s == "evolve") return ScenarioKind::evolve;
  if (s == "escape") return ScenarioKind::escape;
  if (s == "born") return ScenarioKind::born;
  if (s == "two-detector" || s == "two_detector") return ScenarioKind::two_detector;
  if (s == "estimates") return ScenarioKind::estimates;
  throw ConfigError("unknown scenario kind '" + std::string(s) +
                    "' (expected criterion | evolve | escape | born | two-detector | estimates)");
}

ScenarioConfig parse_config(std::string_view text, std::optional<ScenarioKind> expected) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& ex) {
    throw ConfigError(std::string("malformed configuration: ") + ex.what());
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  if (!root.IsMap()) throw ConfigError("configuration must be a mapping at the top level");

  std::vector<std::string> unknown;
  ScenarioConfig cfg;
  {
    Section top(root, "", unknown);
    std::optional<ScenarioKind> kind;
    if (top.has("kind")) kind = scenario_kind_from_string(top.text("kind", ""));
    if (kind && expected && *kind != *expected) {
      throw ConfigError("configuration kind '" + to_string(*kind) + "' does not match subcommand '" +
                        to_string(*expected) + "'");
    }
    if (!kind) kind = expected;
    if (!kind) throw ConfigError("missing required key kind");

    cfg.seed = top.count("seed", cfg.seed);
    {
      auto out = top.child("output");
      cfg.output.dir = out.text("dir", cfg.output.dir);
      const auto delim = out.text("delimiter", std::string(1, cfg.output.delimiter));
      if (delim == "\\t" || delim == "tab") {
        cfg.output.delimiter = '\t';
      } else if (delim.size() == 1 && (delim == "," || delim == ";" || delim == "\t" || delim == " ")) {
        cfg.output.delimiter = delim[0];
      } else {
        throw ConfigError("output.delimiter must be one of ',', ';', tab or space (got '" + delim + "')");
      }
    }

    const auto name = to_string(*kind);
    // Sections for the other kinds are reported as unknown keys.
    if (*kind == ScenarioKind::criterion) top.require(name);
    auto section = top.child(name);
    switch (*kind) {
      case ScenarioKind::criterion: cfg.params = parse_criterion(section); break;
      case ScenarioKind::evolve: cfg.params = parse_evolve(section); break;
      case ScenarioKind::escape: cfg.params = parse_escape(section); break;
      case ScenarioKind::born: cfg.params = parse_born(section); break;
      case ScenarioKind::two_detector: cfg.params = parse_two_detector(section); break;
      case ScenarioKind::estimates: cfg.params = parse_estimates(section); break;
    }
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError("unknown configuration keys: " + list);
  }
  validate(cfg);
  return cfg;
}

ScenarioConfig load_config(const std::string& path, std::optional<ScenarioKind> expected) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read configuration file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), expected);
}

void validate(const ScenarioConfig& config) {
  if (config.output.dir.empty()) throw ConfigError("output.dir must not be empty");
  std::visit(Validator{}, config.params);
}

std::string serialize(const ScenarioConfig& config) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  put(e, "kind", to_string(config.kind()));
  put(e, "seed", config.seed);
  e << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  put(e, "dir", config.output.dir);
  put(e, "delimiter", config.output.delimiter == '\t' ? std::string("tab")
                                                      : std::string(1, config.output.delimiter));
  e << YAML::EndMap;
  e << YAML::Key << to_string(config.kind()) << YAML::Value << YAML::BeginMap;
  std::visit(Emit{e}, config.params);
  e << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace nsm
