#pragma once

#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "rfharvest/calibration.hpp"
#include "rfharvest/detail/text.hpp"
#include "rfharvest/engine.hpp"
#include "rfharvest/error.hpp"
#include "rfharvest/report.hpp"
#include "rfharvest/scenario.hpp"
#include "rfharvest/sweep.hpp"

namespace rfharvest {

enum ExitCode : int {
  kExitOk = 0,
  kExitError = 1,
  kExitConfig = 2,
  kExitConsistency = 3,
  kExitCalibration = 4,
};

struct RunOptions {
  std::string scenario;
  std::string trace;
  std::optional<std::uint64_t> seed;
  std::optional<double> until_s;
  std::optional<double> until_joules;
  std::optional<int> until_tx;
};

namespace detail {

inline int report_error(std::ostream& err, const std::exception& e) {
  err << "error: " << e.what() << "\n";
  if (dynamic_cast<const ConsistencyError*>(&e)) return kExitConsistency;
  if (dynamic_cast<const CalibrationFailure*>(&e)) return kExitCalibration;
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  return kExitError;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  return f;
}

}  // namespace detail

inline LoadedScenario load_or_default(const std::string& path) {
  if (path.empty()) {
    LoadedScenario ls;
    ls.scenario = default_scenario();
    ls.path = "<defaults>";
    return ls;
  }
  return load_scenario_file(path);
}

inline int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    auto ls = load_or_default(opt.scenario);
    auto& s = ls.scenario;
    if (opt.seed) {
      s.seed = *opt.seed;
      ls.explicit_keys.insert("engine.seed");
    }
    if (opt.until_s) {
      s.engine.t_end = Duration{*opt.until_s};
      ls.explicit_keys.insert("engine.t_end");
    }
    if (opt.until_joules) {
      s.engine.until_joules = Energy{*opt.until_joules};
      ls.explicit_keys.insert("engine.until_joules");
    }
    if (opt.until_tx) {
      s.engine.stop_after_tx = *opt.until_tx;
      ls.explicit_keys.insert("engine.stop_after_tx");
    }

    Engine engine(s);
    SimResult r;
    if (!opt.trace.empty()) {
      auto f = detail::open_output(opt.trace);
      f << kTraceHeader << '\n';
      r = engine.run([&](const TraceRow& row) { f << format_trace_row(row) << '\n'; });
      if (!f) throw Error("failed writing trace '" + opt.trace + "'");
    } else {
      r = engine.run();
    }
    out << run_report(ls, r, engine);
    return kExitOk;
  } catch (const std::exception& e) {
    return detail::report_error(err, e);
  }
}

inline int cmd_budget(const std::string& scenario, std::ostream& out, std::ostream& err) {
  try {
    const auto ls = load_or_default(scenario);
    out << budget_table(ls.scenario.management.node.profiles);
    return kExitOk;
  } catch (const std::exception& e) {
    return detail::report_error(err, e);
  }
}

/// "[name@]device:stages:f_hz:dbm[:tank]", e.g. "zerovt:25:100e6:-37:tank".
inline CalibrationTarget parse_calibration_target(const std::string& spec) {
  std::string body = spec;
  std::string name;
  if (const auto at = spec.find('@'); at != std::string::npos) {
    name = spec.substr(0, at);
    body = spec.substr(at + 1);
  }
  const auto parts = detail::split(body, ':');
  if (parts.size() < 4 || parts.size() > 5) {
    throw ConfigError("bad calibration target '" + spec + "', expected device:stages:f_hz:dbm[:tank]");
  }
  CalibrationTarget t;
  t.set_name = name;
  try {
    t.device = rectifier_device_from_string(std::string(detail::trim(parts[0])));
  } catch (const Error& e) {
    throw ConfigError("bad calibration target '" + spec + "': " + e.what());
  }
  const auto stages = detail::parse_int(parts[1]);
  const auto f = detail::parse_double(parts[2]);
  const auto dbm = detail::parse_double(parts[3]);
  if (!stages || *stages < 1 || !f || !(*f > 0.0) || !dbm || !std::isfinite(*dbm)) {
    throw ConfigError("bad calibration target '" + spec + "'");
  }
  t.stages = static_cast<int>(*stages);
  t.f = Frequency{*f};
  t.threshold = PowerDbm{*dbm};
  if (parts.size() == 5) {
    if (detail::trim(parts[4]) != "tank") throw ConfigError("bad calibration target '" + spec + "': expected 'tank'");
    t.tank = ResonantTank{};
  }
  const auto d = device_defaults(t.device);
  t.fixed = PartialRectifierParams{std::nullopt, d.alpha, d.r_in, d.r_out_per_stage};
  return t;
}

struct CalibrateOptions {
  std::string preset;  // "paper" or empty
  std::vector<std::string> targets;
  std::string out;
};

inline int cmd_calibrate(const CalibrateOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    std::vector<CalibrationTarget> targets;
    if (!opt.preset.empty()) {
      if (opt.preset != "paper") throw ConfigError("unknown calibration preset '" + opt.preset + "' (expected paper)");
      targets = paper_calibration_targets();
    }
    for (const auto& t : opt.targets) targets.push_back(parse_calibration_target(t));
    if (targets.empty()) throw ConfigError("calibrate: give --preset paper or at least one --target");

    const auto sets = calibrate_sensitivity(targets);
    out << fmt::format("{:<18} {:<8} {:>6} {:>9} {:>5} {:>10} {:>10} {:>12} {:>10}\n", "set", "device", "stages",
                       "f (MHz)", "tank", "free", "value", "target dBm", "residual");
    for (const auto& s : sets) {
      const auto& p = s.params;
      const double value = s.free_parameter == "v_drop" ? p.v_drop.value()
                           : s.free_parameter == "alpha" ? p.alpha
                                                         : p.r_in.value();
      for (const auto& r : s.results) {
        out << fmt::format("{:<18} {:<8} {:>6} {:>9g} {:>5} {:>10} {:>10.6g} {:>12g} {:>+9.4f} dB\n", s.name,
                           to_string(p.device), p.stages, s.carrier.value() / 1e6, s.tank ? "yes" : "no",
                           s.free_parameter, value, r.target.value(), r.residual_db);
      }
    }
    if (!opt.out.empty()) {
      auto f = detail::open_output(opt.out);
      f << serialize_presets(sets);
      out << "wrote " << opt.out << "\n";
    }
    return kExitOk;
  } catch (const std::exception& e) {
    return detail::report_error(err, e);
  }
}

struct SweepOptions {
  std::string scenario;
  std::string sweep;  // KEY=V1,V2,...
  std::string out;
  std::optional<std::uint64_t> seed;
};

inline int cmd_sweep(const SweepOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    const auto eq = opt.sweep.find('=');
    if (eq == std::string::npos) throw ConfigError("--sweep expects KEY=V1,V2,...");
    const std::string key(detail::trim(std::string_view(opt.sweep).substr(0, eq)));
    const auto values = parse_sweep_values(std::string_view(opt.sweep).substr(eq + 1));
    auto ls = load_or_default(opt.scenario);
    if (opt.seed) ls.scenario.seed = *opt.seed;
    const auto points = sweep(ls.scenario, key, values);
    const auto csv = sweep_csv(points);
    if (opt.out.empty()) {
      out << csv;
    } else {
      auto f = detail::open_output(opt.out);
      f << csv;
      out << fmt::format("wrote {} rows to {}\n", points.size(), opt.out);
    }
    return kExitOk;
  } catch (const std::exception& e) {
    return detail::report_error(err, e);
  }
}

}  // namespace rfharvest
