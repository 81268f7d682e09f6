#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "rfharvest/calibration.hpp"
#include "rfharvest/detail/text.hpp"
#include "rfharvest/engine.hpp"
#include "rfharvest/error.hpp"

// Scenario files are INI-like:
//
//   [source]
//   preset = ribbon_dipole
//   [storage]
//   cap1.c = 1.5        # dotted sub-keys inside a section
//
// Every field is addressed by "<section>.<key>", which is also the path
// accepted by sweeps.

namespace rfharvest {

inline const std::vector<std::string>& scenario_sections() {
  static const std::vector<std::string> s{"source", "frontend", "storage", "management", "engine"};
  return s;
}

inline void apply_frontend_preset(Scenario& s, const std::string& name) {
  const auto& p = frontend_preset(name);
  s.frontend_preset = name;
  s.frontend.rectifier = p.params;
  s.frontend.tank = p.tank;
  s.frontend.carrier = p.carrier;
}

inline void apply_source_preset(Scenario& s, const std::string& name) {
  const auto preset = antenna_preset(name);
  s.source.preset = name;
  if (const auto* c = std::get_if<ConstantSource>(&preset.model)) {
    s.source.kind = SourceKind::Constant;
    s.source.level = c->level;
  } else if (const auto* f = std::get_if<BoundedFluctuation>(&preset.model)) {
    s.source.kind = SourceKind::Fluctuation;
    s.source.lo = f->lo;
    s.source.hi = f->hi;
    s.source.dwell = f->dwell;
  }
}

/// Shipped defaults: ribbon-dipole fluctuation, half the power reflected,
/// calibrated zero-Vt chain at 100 MHz, realistic leakage, node managed.
inline Scenario default_scenario() {
  Scenario s;
  apply_source_preset(s, "ribbon_dipole");
  s.frontend.reflection.gamma_sq = 0.5;
  apply_frontend_preset(s, "zerovt_100MHz");
  return s;
}

struct KeyDef {
  std::string key;
  std::string help;
  std::function<void(Scenario&, std::string_view)> set;
  std::function<std::string(const Scenario&)> get;
  bool is_preset = false;
  bool is_late = false;  // applied after all other keys
};

namespace detail {

inline std::string fmt_num(double v) { return fmt::format("{}", v); }

inline double need_number(std::string_view key, std::string_view v, bool allow_inf = false) {
  const auto d = parse_double(v);
  if (!d || std::isnan(*d) || (!allow_inf && std::isinf(*d))) {
    throw ConfigError(fmt::format("{}: expected a number, got '{}'", key, v));
  }
  return *d;
}

template <class Q, class Access>
KeyDef quantity_key(std::string key, std::string help, Access access, bool allow_inf = false) {
  KeyDef k;
  k.key = key;
  k.help = std::move(help);
  k.set = [access, key, allow_inf](Scenario& s, std::string_view v) {
    access(s) = Q{need_number(key, v, allow_inf)};
  };
  k.get = [access](const Scenario& s) { return fmt_num(access(const_cast<Scenario&>(s)).value()); };
  return k;
}

template <class Access>
KeyDef double_key(std::string key, std::string help, Access access) {
  KeyDef k;
  k.key = key;
  k.help = std::move(help);
  k.set = [access, key](Scenario& s, std::string_view v) { access(s) = need_number(key, v); };
  k.get = [access](const Scenario& s) { return fmt_num(access(const_cast<Scenario&>(s))); };
  return k;
}

template <class Access>
KeyDef bool_key(std::string key, std::string help, Access access) {
  KeyDef k;
  k.key = key;
  k.help = std::move(help);
  k.set = [access, key](Scenario& s, std::string_view v) {
    const auto b = parse_bool(v);
    if (!b) throw ConfigError(fmt::format("{}: expected true/false, got '{}'", key, v));
    access(s) = *b;
  };
  k.get = [access](const Scenario& s) { return std::string(access(const_cast<Scenario&>(s)) ? "true" : "false"); };
  return k;
}

inline long long need_int(std::string_view key, std::string_view v) {
  auto i = parse_int(v);
  if (!i) {
    // Sweep ranges come through as doubles; accept integral ones.
    const auto d = parse_double(v);
    if (d && std::isfinite(*d) && std::floor(*d) == *d) i = static_cast<long long>(*d);
  }
  if (!i) throw ConfigError(fmt::format("{}: expected an integer, got '{}'", key, v));
  return *i;
}

inline void add_cap(std::vector<KeyDef>& keys, const std::string& base, Supercap StorageConfig::*cap) {
  keys.push_back(quantity_key<Capacitance>(base + ".c", "capacitance, F",
                                           [cap](Scenario& s) -> Capacitance& { return (s.storage.*cap).c; }));
  keys.push_back(quantity_key<Resistance>(
      base + ".r_leak", "self-discharge resistance, ohm (inf = none)",
      [cap](Scenario& s) -> Resistance& { return (s.storage.*cap).r_leak; }, true));
  keys.push_back(quantity_key<Voltage>(base + ".v0", "initial voltage, V",
                                       [cap](Scenario& s) -> Voltage& { return (s.storage.*cap).v; }));
  keys.push_back(quantity_key<Voltage>(
      base + ".v_max", "voltage ceiling, V", [cap](Scenario& s) -> Voltage& { return (s.storage.*cap).v_max; },
      true));
}

inline void add_conv(std::vector<KeyDef>& keys, const std::string& base, DcDcConverter StorageConfig::*conv) {
  keys.push_back(quantity_key<Voltage>(base + ".v_startup", "startup voltage, V",
                                       [conv](Scenario& s) -> Voltage& { return (s.storage.*conv).v_startup; }));
  keys.push_back(quantity_key<Voltage>(base + ".v_min_operate", "minimum operating voltage, V",
                                       [conv](Scenario& s) -> Voltage& { return (s.storage.*conv).v_min_operate; }));
  keys.push_back(quantity_key<Voltage>(base + ".v_out", "output setpoint, V",
                                       [conv](Scenario& s) -> Voltage& { return (s.storage.*conv).v_out_setpoint; }));
  keys.push_back(double_key(base + ".efficiency", "conversion efficiency",
                            [conv](Scenario& s) -> double& { return (s.storage.*conv).efficiency; }));
}

inline void add_profile(std::vector<KeyDef>& keys, const std::string& role, LoadProfile NodeProfiles::*row) {
  const std::string base = "management.profile." + role;
  keys.push_back(quantity_key<Voltage>(base + ".v", "budget rail voltage, V",
                                       [row](Scenario& s) -> Voltage& { return (s.management.node.profiles.*row).v; }));
  keys.push_back(quantity_key<Current>(base + ".i", "budget current, A",
                                       [row](Scenario& s) -> Current& { return (s.management.node.profiles.*row).i; }));
  keys.push_back(quantity_key<Duration>(
      base + ".t", "active time, s", [row](Scenario& s) -> Duration& { return (s.management.node.profiles.*row).t; }));
}

inline std::vector<KeyDef> build_registry() {
  std::vector<KeyDef> keys;

  // Presets come first: they expand into the keys that follow, which may
  // then override individual fields.
  KeyDef src_preset;
  src_preset.key = "source.preset";
  src_preset.help = "antenna preset: monopole | ribbon_dipole | none";
  src_preset.is_preset = true;
  src_preset.set = [](Scenario& s, std::string_view v) {
    const std::string name(trim(v));
    if (name == "none" || name.empty()) {
      s.source.preset.clear();
    } else {
      try {
        apply_source_preset(s, name);
      } catch (const Error& e) {
        throw ConfigError(std::string("source.preset: ") + e.what());
      }
    }
  };
  src_preset.get = [](const Scenario& s) { return s.source.preset.empty() ? std::string("none") : s.source.preset; };
  keys.push_back(src_preset);

  KeyDef fe_preset;
  fe_preset.key = "frontend.preset";
  fe_preset.help = "calibrated rectifier set: schottky_100MHz | zerovt_100MHz | zerovt_900MHz | none";
  fe_preset.is_preset = true;
  fe_preset.set = [](Scenario& s, std::string_view v) {
    const std::string name(trim(v));
    if (name == "none" || name.empty()) {
      s.frontend_preset.clear();
    } else {
      try {
        apply_frontend_preset(s, name);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("frontend.preset: ") + e.what());
      }
    }
  };
  fe_preset.get = [](const Scenario& s) { return s.frontend_preset.empty() ? std::string("none") : s.frontend_preset; };
  keys.push_back(fe_preset);

  KeyDef kind;
  kind.key = "source.kind";
  kind.help = "constant | fluctuation | trace";
  kind.set = [](Scenario& s, std::string_view v) {
    const auto t = trim(v);
    if (t == "constant") {
      s.source.kind = SourceKind::Constant;
    } else if (t == "fluctuation") {
      s.source.kind = SourceKind::Fluctuation;
    } else if (t == "trace") {
      s.source.kind = SourceKind::Trace;
    } else {
      throw ConfigError(fmt::format("source.kind: expected constant|fluctuation|trace, got '{}'", t));
    }
  };
  kind.get = [](const Scenario& s) -> std::string {
    switch (s.source.kind) {
      case SourceKind::Constant: return "constant";
      case SourceKind::Fluctuation: return "fluctuation";
      case SourceKind::Trace: return "trace";
    }
    return "constant";
  };
  keys.push_back(kind);

  auto dbm_key = [](std::string key, std::string help, PowerDbm SourceSpec::*field) {
    KeyDef k;
    k.key = key;
    k.help = std::move(help);
    k.set = [field, key](Scenario& s, std::string_view v) { s.source.*field = PowerDbm{need_number(key, v)}; };
    k.get = [field](const Scenario& s) { return fmt_num((s.source.*field).value()); };
    return k;
  };
  keys.push_back(dbm_key("source.level_dbm", "constant level, dBm", &SourceSpec::level));
  keys.push_back(dbm_key("source.lo_dbm", "fluctuation lower bound, dBm", &SourceSpec::lo));
  keys.push_back(dbm_key("source.hi_dbm", "fluctuation upper bound, dBm", &SourceSpec::hi));
  keys.push_back(quantity_key<Duration>("source.dwell_s", "fluctuation dwell window, s",
                                        [](Scenario& s) -> Duration& { return s.source.dwell; }));
  KeyDef trace;
  trace.key = "source.trace_file";
  trace.help = "CSV trace (time_s,power_dbm)";
  trace.set = [](Scenario& s, std::string_view v) { s.source.trace_file = std::string(trim(v)); };
  trace.get = [](const Scenario& s) { return s.source.trace_file; };
  keys.push_back(trace);
  keys.push_back(bool_key("source.hold_last", "hold the last trace sample past its end",
                          [](Scenario& s) -> bool& { return s.source.hold_last; }));

  keys.push_back(double_key("frontend.gamma_sq", "reflected power fraction |Gamma|^2",
                            [](Scenario& s) -> double& { return s.frontend.reflection.gamma_sq; }));
  keys.push_back(quantity_key<Frequency>("frontend.carrier_hz", "carrier frequency, Hz",
                                         [](Scenario& s) -> Frequency& { return s.frontend.carrier; }));
  keys.push_back(bool_key("frontend.ideal", "lossless power conversion into cap1",
                          [](Scenario& s) -> bool& { return s.frontend.ideal; }));
  KeyDef tank;
  tank.key = "frontend.tank";
  tank.help = "resonant tank in circuit";
  tank.set = [](Scenario& s, std::string_view v) {
    const auto b = parse_bool(v);
    if (!b) throw ConfigError(fmt::format("frontend.tank: expected true/false, got '{}'", v));
    if (*b && !s.frontend.tank) s.frontend.tank = ResonantTank{};
    if (!*b) s.frontend.tank.reset();
  };
  tank.get = [](const Scenario& s) { return std::string(s.frontend.tank ? "true" : "false"); };
  tank.is_late = true;  // so "tank = false" wins over tank_f0_hz / tank_q
  keys.push_back(tank);
  auto tank_field = [](std::string key, std::string help, auto setter, auto getter) {
    KeyDef k;
    k.key = key;
    k.help = std::move(help);
    k.set = [key, setter](Scenario& s, std::string_view v) {
      if (!s.frontend.tank) s.frontend.tank = ResonantTank{};
      setter(*s.frontend.tank, need_number(key, v));
    };
    k.get = [getter](const Scenario& s) { return fmt_num(getter(s.frontend.tank.value_or(ResonantTank{}))); };
    return k;
  };
  keys.push_back(tank_field(
      "frontend.tank_f0_hz", "tank resonant frequency, Hz", [](ResonantTank& t, double x) { t.f0 = Frequency{x}; },
      [](const ResonantTank& t) { return t.f0.value(); }));
  keys.push_back(tank_field(
      "frontend.tank_q", "tank quality factor", [](ResonantTank& t, double x) { t.q = x; },
      [](const ResonantTank& t) { return t.q; }));

  KeyDef device;
  device.key = "frontend.device";
  device.help = "schottky | zerovt";
  device.set = [](Scenario& s, std::string_view v) {
    try {
      s.frontend.rectifier.device = rectifier_device_from_string(std::string(trim(v)));
    } catch (const Error& e) {
      throw ConfigError(std::string("frontend.device: ") + e.what());
    }
  };
  device.get = [](const Scenario& s) { return to_string(s.frontend.rectifier.device); };
  keys.push_back(device);
  KeyDef stages;
  stages.key = "frontend.stages";
  stages.help = "multiplier stage count";
  stages.set = [](Scenario& s, std::string_view v) {
    s.frontend.rectifier.stages = static_cast<int>(need_int("frontend.stages", v));
  };
  stages.get = [](const Scenario& s) { return std::to_string(s.frontend.rectifier.stages); };
  keys.push_back(stages);
  keys.push_back(quantity_key<Voltage>("frontend.v_drop", "per-half-stage conduction drop, V",
                                       [](Scenario& s) -> Voltage& { return s.frontend.rectifier.v_drop; }));
  keys.push_back(double_key("frontend.alpha", "per-stage degradation factor",
                            [](Scenario& s) -> double& { return s.frontend.rectifier.alpha; }));
  keys.push_back(quantity_key<Resistance>("frontend.r_in", "multiplier RF input resistance, ohm",
                                          [](Scenario& s) -> Resistance& { return s.frontend.rectifier.r_in; }));
  keys.push_back(quantity_key<Resistance>(
      "frontend.r_out_per_stage", "output resistance per stage, ohm",
      [](Scenario& s) -> Resistance& { return s.frontend.rectifier.r_out_per_stage; }));

  add_cap(keys, "storage.cap1", &StorageConfig::cap1);
  add_cap(keys, "storage.cap2", &StorageConfig::cap2);
  add_conv(keys, "storage.conv1", &StorageConfig::conv1);
  add_conv(keys, "storage.conv2", &StorageConfig::conv2);
  keys.push_back(quantity_key<Voltage>("storage.transfer.start_v", "cap1 voltage that starts the pump, V",
                                       [](Scenario& s) -> Voltage& { return s.storage.transfer.start_v; }));
  keys.push_back(quantity_key<Voltage>("storage.transfer.stop_v", "cap1 voltage that stops the pump, V",
                                       [](Scenario& s) -> Voltage& { return s.storage.transfer.stop_v; }));
  keys.push_back(quantity_key<Current>("storage.transfer.pump_current", "pump input current, A",
                                       [](Scenario& s) -> Current& { return s.storage.transfer.pump_current; }));

  keys.push_back(bool_key("management.enabled", "simulate the node's loads and state machine",
                          [](Scenario& s) -> bool& { return s.management.enabled; }));
  keys.push_back(quantity_key<Duration>("management.wake_period_s", "monitor wake period, s",
                                        [](Scenario& s) -> Duration& { return s.management.node.monitor.wake_period; }));
  keys.push_back(quantity_key<Duration>(
      "management.check_duration_s", "monitor voltage check length, s",
      [](Scenario& s) -> Duration& { return s.management.node.monitor.check_duration; }));
  keys.push_back(quantity_key<Current>("management.i_sleep", "monitor power-save current, A",
                                       [](Scenario& s) -> Current& { return s.management.node.monitor.i_sleep; }));
  keys.push_back(quantity_key<Current>("management.i_active", "monitor active current, A",
                                       [](Scenario& s) -> Current& { return s.management.node.monitor.i_active; }));
  keys.push_back(quantity_key<Voltage>(
      "management.v_min_operate", "monitor minimum supply, V",
      [](Scenario& s) -> Voltage& { return s.management.node.monitor.v_min_operate; }));
  KeyDef go;
  go.key = "management.go_threshold";
  go.help = "cap2 voltage needed to start a cycle, V (auto = from the budget)";
  go.set = [](Scenario& s, std::string_view v) {
    if (trim(v) == "auto") {
      s.management.go_threshold.reset();
    } else {
      s.management.go_threshold = Voltage{need_number("management.go_threshold", v)};
    }
  };
  go.get = [](const Scenario& s) {
    return s.management.go_threshold ? fmt_num(s.management.go_threshold->value()) : std::string("auto");
  };
  keys.push_back(go);
  keys.push_back(quantity_key<Resistance>("management.switch_r_on", "load switch on-resistance, ohm",
                                          [](Scenario& s) -> Resistance& { return s.management.node.switch_r_on; }));
  add_profile(keys, "monitor", &NodeProfiles::monitor);
  add_profile(keys, "controller", &NodeProfiles::controller);
  add_profile(keys, "sensor", &NodeProfiles::sensor);
  add_profile(keys, "zigbee", &NodeProfiles::zigbee);

  keys.push_back(quantity_key<Duration>("engine.dt_coarse", "idle time step, s",
                                        [](Scenario& s) -> Duration& { return s.engine.dt_coarse; }));
  keys.push_back(quantity_key<Duration>("engine.dt_fine", "active time step, s",
                                        [](Scenario& s) -> Duration& { return s.engine.dt_fine; }));
  keys.push_back(quantity_key<Duration>("engine.t_end", "simulated horizon, s",
                                        [](Scenario& s) -> Duration& { return s.engine.t_end; }));
  KeyDef stop_tx;
  stop_tx.key = "engine.stop_after_tx";
  stop_tx.help = "stop after this many transmissions (none = never)";
  stop_tx.set = [](Scenario& s, std::string_view v) {
    if (trim(v) == "none") {
      s.engine.stop_after_tx.reset();
    } else {
      s.engine.stop_after_tx = static_cast<int>(need_int("engine.stop_after_tx", v));
    }
  };
  stop_tx.get = [](const Scenario& s) {
    return s.engine.stop_after_tx ? std::to_string(*s.engine.stop_after_tx) : std::string("none");
  };
  keys.push_back(stop_tx);
  KeyDef until_j;
  until_j.key = "engine.until_joules";
  until_j.help = "stop once cap1 + cap2 store this much, J (none = never)";
  until_j.set = [](Scenario& s, std::string_view v) {
    if (trim(v) == "none") {
      s.engine.until_joules.reset();
    } else {
      s.engine.until_joules = Energy{need_number("engine.until_joules", v)};
    }
  };
  until_j.get = [](const Scenario& s) {
    return s.engine.until_joules ? fmt_num(s.engine.until_joules->value()) : std::string("none");
  };
  keys.push_back(until_j);
  KeyDef seed;
  seed.key = "engine.seed";
  seed.help = "source RNG seed";
  seed.set = [](Scenario& s, std::string_view v) {
    const auto i = need_int("engine.seed", v);
    if (i < 0) throw ConfigError("engine.seed: must be non-negative");
    s.seed = static_cast<std::uint64_t>(i);
  };
  seed.get = [](const Scenario& s) { return std::to_string(s.seed); };
  keys.push_back(seed);
  return keys;
}

}  // namespace detail

inline const std::vector<KeyDef>& scenario_keys() {
  static const std::vector<KeyDef> keys = detail::build_registry();
  return keys;
}

inline const KeyDef* find_key(std::string_view key) {
  for (const auto& k : scenario_keys()) {
    if (k.key == key) return &k;
  }
  return nullptr;
}

/// Sets one dotted key; unknown keys and bad values raise ConfigError.
inline void set_scenario_value(Scenario& s, std::string_view key, std::string_view value) {
  const auto* k = find_key(key);
  if (!k) throw ConfigError(fmt::format("unknown scenario key '{}'", key));
  k->set(s, value);
}

inline std::string get_scenario_value(const Scenario& s, std::string_view key) {
  const auto* k = find_key(key);
  if (!k) throw ConfigError(fmt::format("unknown scenario key '{}'", key));
  return k->get(s);
}

struct LoadedScenario {
  Scenario scenario;
  std::set<std::string> explicit_keys;
  std::string path;
};

inline LoadedScenario parse_scenario(std::istream& in, const std::string& where = "<scenario>") {
  struct Entry {
    std::string key;
    std::string value;
    int line;
  };
  std::vector<Entry> entries;
  std::string section;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find_first_of("#;"); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(where, line_no, "unterminated section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      const auto& secs = scenario_sections();
      if (std::find(secs.begin(), secs.end(), section) == secs.end()) {
        throw ParseError(where, line_no, "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(where, line_no, "expected 'key = value'");
    if (section.empty()) throw ParseError(where, line_no, "key outside of any section");
    const std::string key = section + "." + std::string(detail::trim(line.substr(0, eq)));
    const std::string value(detail::trim(line.substr(eq + 1)));
    if (!find_key(key)) throw ParseError(where, line_no, "unknown key '" + key + "'");
    for (const auto& e : entries) {
      if (e.key == key) throw ParseError(where, line_no, "duplicate key '" + key + "'");
    }
    entries.push_back({key, value, line_no});
  }

  LoadedScenario out;
  out.scenario = default_scenario();
  out.path = where;
  auto apply = [&](const Entry& e) {
    try {
      set_scenario_value(out.scenario, e.key, e.value);
    } catch (const ConfigError& err) {
      throw ParseError(where, e.line, err.what());
    }
    out.explicit_keys.insert(e.key);
  };
  for (const auto& e : entries) {
    if (find_key(e.key)->is_preset) apply(e);
  }
  for (const auto& e : entries) {
    const auto* k = find_key(e.key);
    if (!k->is_preset && !k->is_late) apply(e);
  }
  for (const auto& e : entries) {
    if (find_key(e.key)->is_late) apply(e);
  }
  return out;
}

inline LoadedScenario parse_scenario_string(const std::string& text, const std::string& where = "<scenario>") {
  std::istringstream in(text);
  return parse_scenario(in, where);
}

inline LoadedScenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  auto out = parse_scenario(in, path);
  // Trace paths are relative to the scenario file.
  auto& tf = out.scenario.source.trace_file;
  if (!tf.empty() && std::filesystem::path(tf).is_relative()) {
    const auto candidate = std::filesystem::path(path).parent_path() / tf;
    if (std::filesystem::exists(candidate)) tf = candidate.string();
  }
  return out;
}

/// Writes every key, grouped by section. Parsing the result gives back an
/// equivalent scenario.
inline std::string serialize_scenario(const Scenario& s) {
  std::string out;
  for (const auto& sec : scenario_sections()) {
    out += "[" + sec + "]\n";
    for (const auto& k : scenario_keys()) {
      if (k.key.rfind(sec + ".", 0) != 0) continue;
      out += fmt::format("{} = {}\n", k.key.substr(sec.size() + 1), k.get(s));
    }
    out += "\n";
  }
  return out;
}

struct Assumption {
  std::string key;
  std::string value;
  std::string source;  // "default" or "preset <name>"
  std::string help;
};

/// Every value in effect that the scenario file did not set itself.
inline std::vector<Assumption> assumptions(const LoadedScenario& ls) {
  std::vector<Assumption> out;
  const auto& s = ls.scenario;
  const Scenario base = default_scenario();
  for (const auto& k : scenario_keys()) {
    if (ls.explicit_keys.count(k.key)) continue;
    std::string origin = "default";
    const bool front = k.key.rfind("frontend.", 0) == 0;
    const bool src = k.key.rfind("source.", 0) == 0;
    if (!k.is_preset && front && !s.frontend_preset.empty() && ls.explicit_keys.count("frontend.preset")) {
      origin = "preset " + s.frontend_preset;
    } else if (!k.is_preset && src && !s.source.preset.empty() && ls.explicit_keys.count("source.preset")) {
      origin = "preset " + s.source.preset;
    } else if (k.get(s) != k.get(base)) {
      origin = "derived";
    }
    out.push_back({k.key, k.get(s), origin, k.help});
  }
  return out;
}

/// Persisted calibration sets, one section per set.
inline std::string serialize_presets(const std::vector<CalibratedSet>& sets) {
  std::string out;
  for (const auto& set : sets) {
    const auto& p = set.params;
    out += fmt::format("[preset.{}]\n", set.name);
    out += fmt::format("device = {}\n", to_string(p.device));
    out += fmt::format("stages = {}\n", p.stages);
    out += fmt::format("carrier_hz = {}\n", set.carrier.value());
    out += fmt::format("tank = {}\n", set.tank ? "true" : "false");
    if (set.tank) {
      out += fmt::format("tank_f0_hz = {}\n", set.tank->f0.value());
      out += fmt::format("tank_q = {}\n", set.tank->q);
    }
    out += fmt::format("v_drop = {}\n", p.v_drop.value());
    out += fmt::format("alpha = {}\n", p.alpha);
    out += fmt::format("r_in = {}\n", p.r_in.value());
    out += fmt::format("r_out_per_stage = {}\n", p.r_out_per_stage.value());
    out += fmt::format("free_parameter = {}\n", set.free_parameter);
    for (std::size_t i = 0; i < set.results.size(); ++i) {
      const auto& r = set.results[i];
      out += fmt::format("target{}_dbm = {}\n", i, r.target.value());
      out += fmt::format("achieved{}_dbm = {:.6f}\n", i, r.achieved.value());
      out += fmt::format("residual{}_db = {:.6f}\n", i, r.residual_db);
    }
    out += "\n";
  }
  return out;
}

}  // namespace rfharvest
