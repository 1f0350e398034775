#include "hymflow/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace hymflow {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return x;
}

long long to_int(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split(v, ',')) out.push_back(to_double(key, item));
  return out;
}

PlaneFluxes to_fluxes(const std::string& key, const std::string& v) {
  const auto items = split(v, ',');
  if (items.empty() || items.size() > 2) throw ConfigError(key + ": expected 1 or 2 fluxes");
  PlaneFluxes f{0, 0};
  for (size_t i = 0; i < items.size(); ++i) f[i] = static_cast<int>(to_int(key, items[i]));
  return f;
}

template <typename Parse>
auto named(const std::string& key, const std::string& v, Parse parse) {
  try {
    return parse(v);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      {"geometry.n", [](RunConfig& c, auto& k, auto& v) { c.n = static_cast<int>(to_int(k, v)); }},
      {"geometry.N", [](RunConfig& c, auto& k, auto& v) { c.N = static_cast<int>(to_int(k, v)); }},
      {"geometry.periods", [](RunConfig& c, auto& k, auto& v) { c.periods = to_list(k, v); }},
      {"metric.kind",
       [](RunConfig& c, auto& k, auto& v) { c.metric_kind = named(k, v, parse_metric_kind); }},
      {"metric.amplitude",
       [](RunConfig& c, auto& k, auto& v) { c.metric_amplitude = to_double(k, v); }},
      {"bundle.kind",
       [](RunConfig& c, auto& k, auto& v) { c.bundle.kind = named(k, v, parse_bundle_kind); }},
      {"bundle.flux", [](RunConfig& c, auto& k, auto& v) { c.bundle.flux = to_fluxes(k, v); }},
      {"bundle.summands",
       [](RunConfig& c, auto& k, auto& v) {
         c.bundle.parts.clear();
         for (const auto& item : split(v, ';')) {
           BundleSpec part;
           part.kind = BundleKind::flux_line;
           part.flux = to_fluxes(k, item);
           c.bundle.parts.push_back(part);
         }
       }},
      {"bundle.amplitude",
       [](RunConfig& c, auto& k, auto& v) { c.bundle.amplitude = to_double(k, v); }},
      {"bundle.mode",
       [](RunConfig& c, auto& k, auto& v) { c.bundle.mode = static_cast<int>(to_int(k, v)); }},
      {"bundle.perturbation",
       [](RunConfig& c, auto& k, auto& v) { c.perturbation = to_double(k, v); }},
      {"bundle.perturbation_mode",
       [](RunConfig& c, auto& k, auto& v) {
         c.perturbation_mode = static_cast<int>(to_int(k, v));
       }},
      {"flow.formulation",
       [](RunConfig& c, auto& k, auto& v) { c.formulation = named(k, v, parse_formulation); }},
      {"flow.dt",
       [](RunConfig& c, auto& k, auto& v) { c.flow.dt = v == "auto" ? 0.0 : to_double(k, v); }},
      {"flow.t_end", [](RunConfig& c, auto& k, auto& v) { c.flow.t_end = to_double(k, v); }},
      {"flow.cfl", [](RunConfig& c, auto& k, auto& v) { c.flow.cfl = to_double(k, v); }},
      {"flow.scheme",
       [](RunConfig& c, auto& k, auto& v) { c.flow.scheme = named(k, v, parse_scheme); }},
      {"flow.record_every",
       [](RunConfig& c, auto& k, auto& v) {
         c.flow.record_every = static_cast<int>(to_int(k, v));
       }},
      {"flow.checkpoint_every",
       [](RunConfig& c, auto& k, auto& v) {
         c.flow.checkpoint_every = static_cast<int>(to_int(k, v));
       }},
      {"flow.blowup_factor",
       [](RunConfig& c, auto& k, auto& v) { c.flow.blowup_factor = to_double(k, v); }},
      {"flow.seed",
       [](RunConfig& c, auto& k, auto& v) { c.seed = static_cast<std::uint64_t>(to_int(k, v)); }},
      {"diagnostics.eps1", [](RunConfig& c, auto& k, auto& v) { c.eps1 = to_double(k, v); }},
      {"diagnostics.sigma_radius",
       [](RunConfig& c, auto& k, auto& v) { c.sigma_radius = to_double(k, v); }},
      {"diagnostics.phi_radii", [](RunConfig& c, auto& k, auto& v) { c.phi_radii = to_list(k, v); }},
      {"diagnostics.phi_points",
       [](RunConfig& c, auto& k, auto& v) {
         c.phi_points.clear();
         for (const auto& item : split(v, ';')) c.phi_points.push_back(to_list(k, item));
       }},
      {"diagnostics.phi_R", [](RunConfig& c, auto& k, auto& v) { c.phi_R = to_double(k, v); }},
      {"diagnostics.phi_t0", [](RunConfig& c, auto& k, auto& v) { c.phi_t0 = to_double(k, v); }},
      {"diagnostics.phi_C", [](RunConfig& c, auto& k, auto& v) { c.phi_C = to_double(k, v); }},
      {"diagnostics.kernel_exponent",
       [](RunConfig& c, auto& k, auto& v) { c.kernel_exponent = static_cast<int>(to_int(k, v)); }},
      {"diagnostics.torsion_check",
       [](RunConfig& c, auto& k, auto& v) { c.torsion_check = to_bool(k, v); }},
      {"diagnostics.energy_check",
       [](RunConfig& c, auto& k, auto& v) { c.energy_check = to_bool(k, v); }},
      {"diagnostics.max_principle_check",
       [](RunConfig& c, auto& k, auto& v) { c.max_principle_check = to_bool(k, v); }},
      {"diagnostics.sigma_check",
       [](RunConfig& c, auto& k, auto& v) { c.sigma_check = to_bool(k, v); }},
      {"diagnostics.he_target", [](RunConfig& c, auto& k, auto& v) { c.he_target = to_double(k, v); }},
      {"output.directory", [](RunConfig& c, auto&, auto& v) { c.out_dir = v; }},
      {"output.formats",
       [](RunConfig& c, auto& k, auto& v) {
         c.write_csv = c.write_checkpoint = c.write_summary = false;
         for (const auto& f : split(v, ',')) {
           if (f == "csv") c.write_csv = true;
           else if (f == "checkpoint") c.write_checkpoint = true;
           else if (f == "summary") c.write_summary = true;
           else throw ConfigError(k + ": unknown format '" + f + "'");
         }
       }},
  };
  return table;
}

}  // namespace

Formulation parse_formulation(const std::string& name) {
  if (name == "metric") return Formulation::metric;
  if (name == "connection") return Formulation::connection;
  throw std::invalid_argument("unknown formulation '" + name + "'");
}

std::string to_string(Formulation f) {
  return f == Formulation::metric ? "metric" : "connection";
}

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  std::set<std::string> seen;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(number) + ": expected 'section.key = value'");
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.find('.') == std::string::npos || value.empty()) {
      throw ConfigError("line " + std::to_string(number) + ": expected 'section.key = value'");
    }
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw ConfigError("line " + std::to_string(number) + ": unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw ConfigError("line " + std::to_string(number) + ": duplicate key '" + key + "'");
    }
    it->second(config, key, value);
  }
  validate(config);
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void validate(const RunConfig& c) {
  if (c.n != 1 && c.n != 2) throw ConfigError("geometry.n: must be 1 or 2");
  if (c.N < 8 || (c.N & (c.N - 1)) != 0) {
    throw ConfigError("geometry.N: must be a power of two, at least 8");
  }
  if (!c.periods.empty()) {
    if (static_cast<int>(c.periods.size()) != 2 * c.n) {
      throw ConfigError("geometry.periods: needs " + std::to_string(2 * c.n) + " entries");
    }
    for (double p : c.periods)
      if (!(p > 0.0)) throw ConfigError("geometry.periods: must be positive");
  }
  if (c.metric_kind == MetricKind::gauduchon_nonkahler && c.n != 2) {
    throw ConfigError("metric.kind: gauduchon_nonkahler requires geometry.n = 2");
  }
  if (c.metric_amplitude < 0.0) throw ConfigError("metric.amplitude: must be non-negative");
  if (c.bundle.kind == BundleKind::direct_sum && c.bundle.parts.empty()) {
    throw ConfigError("bundle.summands: required for direct_sum");
  }
  if (c.bundle.kind != BundleKind::direct_sum && !c.bundle.parts.empty()) {
    throw ConfigError("bundle.summands: only valid for direct_sum");
  }
  auto check_flux = [&](const PlaneFluxes& f) {
    if (c.n == 1 && f[1] != 0) throw ConfigError("bundle.flux: second plane flux needs n = 2");
  };
  check_flux(c.bundle.flux);
  for (const auto& p : c.bundle.parts) check_flux(p.flux);
  if (c.bundle.mode < 1) throw ConfigError("bundle.mode: must be positive");
  if (c.perturbation < 0.0) throw ConfigError("bundle.perturbation: must be non-negative");
  if (c.perturbation_mode < 1) throw ConfigError("bundle.perturbation_mode: must be positive");
  if (c.perturbation > 0.0 && c.formulation == Formulation::connection) {
    throw ConfigError("bundle.perturbation: only the metric formulation perturbs H");
  }
  if (c.flow.dt < 0.0) throw ConfigError("flow.dt: must be positive or auto");
  if (!(c.flow.t_end > 0.0)) throw ConfigError("flow.t_end: must be positive");
  if (!(c.flow.cfl > 0.0)) throw ConfigError("flow.cfl: must be positive");
  if (c.flow.record_every < 1) throw ConfigError("flow.record_every: must be at least 1");
  if (c.flow.checkpoint_every < 0) throw ConfigError("flow.checkpoint_every: must be >= 0");
  if (!(c.flow.blowup_factor > 1.0)) throw ConfigError("flow.blowup_factor: must exceed 1");
  if (!(c.eps1 > 0.0)) throw ConfigError("diagnostics.eps1: must be positive");
  if (c.sigma_radius < 0.0) throw ConfigError("diagnostics.sigma_radius: must be non-negative");
  for (double r : c.phi_radii)
    if (!(r > 0.0)) throw ConfigError("diagnostics.phi_radii: must be positive");
  for (const auto& p : c.phi_points) {
    if (static_cast<int>(p.size()) != 2 * c.n) {
      throw ConfigError("diagnostics.phi_points: each point needs " + std::to_string(2 * c.n) +
                        " coordinates");
    }
  }
  if (!c.phi_radii.empty() && c.phi_points.empty()) {
    throw ConfigError("diagnostics.phi_points: required when phi_radii is set");
  }
  if (c.kernel_exponent < 0) throw ConfigError("diagnostics.kernel_exponent: must be >= 0");
  if (c.he_target < 0.0) throw ConfigError("diagnostics.he_target: must be non-negative");
  if (c.out_dir.empty()) throw ConfigError("output.directory: must not be empty");
}

}  // namespace hymflow
