#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "rfharvest/analog_frontend.hpp"
#include "rfharvest/error.hpp"
#include "rfharvest/quantities.hpp"

namespace rfharvest {

/// Output voltage the sensor electronics need from the rectifier.
inline constexpr Voltage kSensitivityVoltage{0.5};
inline constexpr double kCalibrationToleranceDb = 0.1;

/// Rectifier fields held fixed during calibration; unset fields are free.
struct PartialRectifierParams {
  std::optional<Voltage> v_drop;
  std::optional<double> alpha;
  std::optional<Resistance> r_in;
  std::optional<Resistance> r_out_per_stage;
};

/// A measured sensitivity point: the input level at which the cascade
/// just reaches kSensitivityVoltage open-circuit.
struct CalibrationTarget {
  std::string set_name;  // targets sharing a name are fitted by one parameter set
  RectifierDevice device = RectifierDevice::ZeroVtMosfet;
  int stages = 25;
  Frequency f{100e6};
  PowerDbm threshold{-37.0};
  std::optional<ResonantTank> tank;
  PartialRectifierParams fixed;
};

struct TargetResult {
  PowerDbm target;
  PowerDbm achieved;
  double residual_db = 0.0;
  Voltage v_at_target;
  Voltage v_below_target;  // at target - 1 dB
};

struct CalibratedSet {
  std::string name;
  RectifierParams params;
  std::optional<ResonantTank> tank;
  Frequency carrier{100e6};
  std::string free_parameter;
  std::vector<TargetResult> results;
};

/// Starting values for parameters that are free but not searched.
inline RectifierParams device_defaults(RectifierDevice d) {
  RectifierParams p;
  p.device = d;
  if (d == RectifierDevice::Schottky) {
    p.stages = 20;
    p.v_drop = Voltage{0.2};
    p.r_in = Resistance{2e3};
  } else {
    p.stages = 25;
    p.v_drop = Voltage{0.05};
    p.r_in = Resistance{5e3};
  }
  p.alpha = 0.7;
  p.r_out_per_stage = Resistance{1e3};
  return p;
}

/// Lowest input level whose open-circuit output reaches v_target; nullopt
/// when even +40 dBm does not.
inline std::optional<PowerDbm> sensitivity_threshold(const RectifierParams& params,
                                                     const std::optional<ResonantTank>& tank, Frequency f,
                                                     Voltage v_target = kSensitivityVoltage) {
  double lo = -150.0;
  double hi = 40.0;
  auto reaches = [&](double dbm) { return open_circuit_at(params, tank, f, PowerDbm{dbm}) >= v_target; };
  if (!reaches(hi)) return std::nullopt;
  if (reaches(lo)) return PowerDbm{lo};
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    (reaches(mid) ? hi : lo) = mid;
  }
  return PowerDbm{hi};
}

namespace detail {

// Bisection on a monotone predicate over [lo, hi]; returns the end of the
// final bracket on which `good` holds. `geometric` bisects in log space.
inline double bisect(double lo, double hi, bool good_at_hi, const std::function<bool(double)>& good, bool geometric) {
  for (int i = 0; i < 200; ++i) {
    const double mid = geometric ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const bool g = good(mid);
    if (g == good_at_hi) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return good_at_hi ? hi : lo;
}

inline std::string describe(const CalibrationTarget& t) {
  return fmt::format("{} ({}, {} stages, {:g} MHz, {:g} dBm)", t.set_name, to_string(t.device), t.stages,
                     t.f.value() / 1e6, t.threshold.value());
}

inline std::string default_set_name(const CalibrationTarget& t) {
  return fmt::format("{}_{:g}MHz", to_string(t.device), t.f.value() / 1e6);
}

}  // namespace detail

/// Fits one rectifier parameter set per target group so that each target's
/// threshold is reproduced within kCalibrationToleranceDb. The searched
/// parameter is the first free one among v_drop, alpha and r_in.
inline std::vector<CalibratedSet> calibrate_sensitivity(std::vector<CalibrationTarget> targets) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<CalibrationTarget>> groups;
  for (auto& t : targets) {
    if (t.set_name.empty()) t.set_name = detail::default_set_name(t);
    if (!groups.count(t.set_name)) order.push_back(t.set_name);
    groups[t.set_name].push_back(t);
  }

  std::vector<CalibratedSet> out;
  for (const auto& name : order) {
    const auto& group = groups[name];
    const auto& first = group.front();
    for (const auto& t : group) {
      if (t.device != first.device || t.f != first.f || t.stages != first.stages) {
        throw CalibrationFailure("targets in set '" + name + "' disagree on device, stage count or frequency: " +
                                 detail::describe(t));
      }
    }

    RectifierParams p = device_defaults(first.device);
    p.stages = first.stages;
    const auto& fx = first.fixed;
    if (fx.v_drop) p.v_drop = *fx.v_drop;
    if (fx.alpha) p.alpha = *fx.alpha;
    if (fx.r_in) p.r_in = *fx.r_in;
    if (fx.r_out_per_stage) p.r_out_per_stage = *fx.r_out_per_stage;

    const auto v_at = [&](const RectifierParams& q) {
      return open_circuit_at(q, first.tank, first.f, first.threshold);
    };
    const auto reaches = [&](RectifierParams q) { return v_at(q) >= kSensitivityVoltage; };

    CalibratedSet set;
    set.name = name;
    set.tank = first.tank;
    set.carrier = first.f;

    if (!fx.v_drop) {
      set.free_parameter = "v_drop";
      const double v_peak = input_amplitude(dbm_to_watts(first.threshold), p, first.tank, first.f).value();
      auto q = p;
      q.v_drop = Voltage{0.0};
      if (!reaches(q)) throw CalibrationFailure("no bracket for v_drop: " + detail::describe(first));
      p.v_drop = Voltage{detail::bisect(
          0.0, v_peak, false,
          [&](double x) {
            auto r = p;
            r.v_drop = Voltage{x};
            return reaches(r);
          },
          false)};
    } else if (!fx.alpha) {
      set.free_parameter = "alpha";
      auto q = p;
      q.alpha = 1.0;
      if (!reaches(q)) throw CalibrationFailure("no bracket for alpha: " + detail::describe(first));
      p.alpha = detail::bisect(
          1e-9, 1.0, true,
          [&](double x) {
            auto r = p;
            r.alpha = x;
            return reaches(r);
          },
          false);
    } else if (!fx.r_in) {
      set.free_parameter = "r_in";
      auto q = p;
      q.r_in = Resistance{1e9};
      if (!reaches(q)) throw CalibrationFailure("no bracket for r_in: " + detail::describe(first));
      p.r_in = Resistance{detail::bisect(
          1e-3, 1e9, true,
          [&](double x) {
            auto r = p;
            r.r_in = Resistance{x};
            return reaches(r);
          },
          true)};
    } else {
      throw CalibrationFailure("no free parameter among v_drop, alpha, r_in: " + detail::describe(first));
    }
    set.params = p;

    for (const auto& t : group) {
      TargetResult r;
      r.target = t.threshold;
      const auto achieved = sensitivity_threshold(p, t.tank, t.f);
      r.v_at_target = open_circuit_at(p, t.tank, t.f, t.threshold);
      r.v_below_target = open_circuit_at(p, t.tank, t.f, t.threshold - 1.0);
      r.achieved = achieved.value_or(PowerDbm{INFINITY});
      r.residual_db = r.achieved - r.target;
      const bool ok = achieved && std::abs(r.residual_db) <= kCalibrationToleranceDb &&
                      r.v_at_target >= kSensitivityVoltage && r.v_below_target < kSensitivityVoltage;
      if (!ok) {
        throw CalibrationFailure(fmt::format("target violated: {} (achieved {:.3f} dBm)", detail::describe(t),
                                             r.achieved.value()));
      }
      set.results.push_back(r);
    }
    out.push_back(std::move(set));
  }
  return out;
}

/// Single-group form: every target is fitted by one parameter set built on `fixed`.
inline RectifierParams calibrate_sensitivity(std::vector<CalibrationTarget> targets,
                                             const PartialRectifierParams& fixed) {
  if (targets.empty()) throw CalibrationFailure("no calibration targets given");
  for (auto& t : targets) {
    t.set_name = "fit";
    t.fixed = fixed;
  }
  return calibrate_sensitivity(std::move(targets)).front().params;
}

/// The three published sensitivity points: a 20-stage Schottky cascade
/// without the tank, and the 25-stage zero-threshold cascade at 100 MHz
/// (with the 9 dB tank) and 900 MHz (tank bypassed).
inline std::vector<CalibrationTarget> paper_calibration_targets() {
  const auto fixed_for = [](RectifierDevice d) {
    const auto p = device_defaults(d);
    return PartialRectifierParams{std::nullopt, p.alpha, p.r_in, p.r_out_per_stage};
  };
  return {
      {"schottky_100MHz", RectifierDevice::Schottky, 20, Frequency{100e6}, PowerDbm{-18.0}, std::nullopt,
       fixed_for(RectifierDevice::Schottky)},
      {"zerovt_100MHz", RectifierDevice::ZeroVtMosfet, 25, Frequency{100e6}, PowerDbm{-37.0}, ResonantTank{},
       fixed_for(RectifierDevice::ZeroVtMosfet)},
      {"zerovt_900MHz", RectifierDevice::ZeroVtMosfet, 25, Frequency{900e6}, PowerDbm{-25.0}, std::nullopt,
       fixed_for(RectifierDevice::ZeroVtMosfet)},
  };
}

inline const std::vector<CalibratedSet>& paper_presets() {
  static const std::vector<CalibratedSet> presets = calibrate_sensitivity(paper_calibration_targets());
  return presets;
}

inline const CalibratedSet& frontend_preset(const std::string& name) {
  for (const auto& p : paper_presets()) {
    if (p.name == name) return p;
  }
  throw ConfigError("unknown frontend preset '" + name + "' (expected schottky_100MHz|zerovt_100MHz|zerovt_900MHz)");
}

}  // namespace rfharvest
