#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "rfharvest/error.hpp"
#include "rfharvest/quantities.hpp"

namespace rfharvest {

/// Power reflection fraction |Gamma|^2 at the unmatched antenna/rectifier interface.
struct ReflectionModel {
  double gamma_sq = 0.0;
};

/// Series-tuned LC tank; its voltage magnification at resonance equals q.
struct ResonantTank {
  Frequency f0{100e6};
  double q = 2.8183829312644537;  // 9 dB voltage gain
};

enum class RectifierDevice { Schottky, ZeroVtMosfet };

inline std::string to_string(RectifierDevice d) {
  return d == RectifierDevice::Schottky ? "schottky" : "zerovt";
}

inline RectifierDevice rectifier_device_from_string(const std::string& s) {
  if (s == "schottky") return RectifierDevice::Schottky;
  if (s == "zerovt" || s == "zerovt_mosfet") return RectifierDevice::ZeroVtMosfet;
  throw ConfigError("unknown rectifier device '" + s + "' (expected schottky|zerovt)");
}

/// Behavioral parameters of an N-stage voltage-doubler cascade.
struct RectifierParams {
  int stages = 25;
  RectifierDevice device = RectifierDevice::ZeroVtMosfet;
  Voltage v_drop{0.05};  // effective conduction drop per half stage
  double alpha = 0.7;    // geometric degradation of each further stage
  Resistance r_in{5e3};  // effective RF input resistance
  Resistance r_out_per_stage{1e3};
};

/// Thevenin view of the rectifier as seen by the first storage capacitor.
struct FrontendOutput {
  Voltage v_oc;
  Resistance r_out;
};

inline void validate(const ReflectionModel& r) {
  if (!(r.gamma_sq >= 0.0 && r.gamma_sq <= 1.0)) throw InvalidQuantity("gamma_sq must lie in [0, 1]");
}

inline void validate(const ResonantTank& t) {
  if (!(t.f0.value() > 0.0)) throw InvalidQuantity("tank f0 must be positive");
  if (!(t.q > 0.0)) throw InvalidQuantity("tank q must be positive");
}

inline void validate(const RectifierParams& p) {
  if (p.stages < 1) throw InvalidQuantity("rectifier needs at least one stage");
  if (!(p.alpha > 0.0 && p.alpha <= 1.0)) throw InvalidQuantity("rectifier alpha must lie in (0, 1]");
  if (!(p.v_drop.value() >= 0.0)) throw InvalidQuantity("rectifier v_drop must be non-negative");
  if (!(p.r_in.value() > 0.0)) throw InvalidQuantity("rectifier r_in must be positive");
  if (!(p.r_out_per_stage.value() >= 0.0)) throw InvalidQuantity("rectifier r_out_per_stage must be non-negative");
}

inline PowerWatts delivered_power(PowerWatts p_avail, ReflectionModel refl) {
  return p_avail * (1.0 - refl.gamma_sq);
}

/// Capacitor-voltage magnification of a series RLC driven at f.
inline double tank_gain(const ResonantTank& tank, Frequency f) {
  if (!(f.value() > 0.0)) throw DomainError("tank_gain: frequency must be positive");
  const double x = f / tank.f0;
  const double detune = x - 1.0 / x;
  return tank.q / std::sqrt(1.0 + tank.q * tank.q * detune * detune);
}

/// Voltage gain ahead of the multiplier; unity when no tank is fitted.
inline double chain_gain(const std::optional<ResonantTank>& tank, Frequency f) {
  return tank ? tank_gain(*tank, f) : 1.0;
}

/// Peak sinusoidal amplitude at the multiplier input when p_del dissipates in r_in.
inline Voltage input_amplitude(PowerWatts p_del, const RectifierParams& params, const std::optional<ResonantTank>& tank,
                               Frequency f) {
  const double untuned = std::sqrt(2.0 * std::max(0.0, p_del.value()) * params.r_in.value());
  return Voltage{chain_gain(tank, f) * untuned};
}

/// Sum of the first n stage contributions relative to one stage: (1 - a^n)/(1 - a).
inline double stage_sum_factor(double alpha, int n) {
  if (alpha >= 1.0) return static_cast<double>(n);
  return (1.0 - std::pow(alpha, n)) / (1.0 - alpha);
}

inline Voltage stage_contribution(const RectifierParams& params, Voltage v_peak) {
  return Voltage{std::max(0.0, 2.0 * (v_peak.value() - params.v_drop.value()))};
}

inline FrontendOutput rectifier_open_circuit(const RectifierParams& params, Voltage v_peak) {
  const Voltage s = stage_contribution(params, v_peak);
  return {s * stage_sum_factor(params.alpha, params.stages), params.r_out_per_stage * static_cast<double>(params.stages)};
}

/// Voltage added by stage n+1 on top of an n-stage cascade.
inline Voltage marginal_stage_gain(const RectifierParams& params, Voltage v_peak, int n) {
  return stage_contribution(params, v_peak) * std::pow(params.alpha, n);
}

/// Thevenin charging current; the rectifier blocks reverse flow. A zero
/// output resistance is treated as an unlimited source above v_oc.
inline Current charging_current(const FrontendOutput& out, Voltage v_cap) {
  const double headroom = out.v_oc.value() - v_cap.value();
  if (headroom <= 0.0) return Current{0.0};
  if (out.r_out.value() <= 0.0) return Current{INFINITY};
  return Current{headroom / out.r_out.value()};
}

/// Complete frontend description used by the engine.
struct FrontendChain {
  ReflectionModel reflection;
  std::optional<ResonantTank> tank = ResonantTank{};
  RectifierParams rectifier;
  Frequency carrier{100e6};
  // When set, the rectifier is a lossless power converter: all delivered RF
  // power reaches the first capacitor regardless of its voltage.
  bool ideal = false;
};

struct FrontendState {
  PowerWatts p_delivered;
  Voltage v_peak;
  FrontendOutput out;
};

inline FrontendState evaluate_frontend(const FrontendChain& chain, PowerWatts p_avail) {
  FrontendState st;
  st.p_delivered = delivered_power(p_avail, chain.reflection);
  st.v_peak = input_amplitude(st.p_delivered, chain.rectifier, chain.tank, chain.carrier);
  st.out = rectifier_open_circuit(chain.rectifier, st.v_peak);
  return st;
}

/// Open-circuit output for an available input level, with no reflection.
inline Voltage open_circuit_at(const RectifierParams& params, const std::optional<ResonantTank>& tank, Frequency f,
                               PowerDbm p) {
  return rectifier_open_circuit(params, input_amplitude(dbm_to_watts(p), params, tank, f)).v_oc;
}

}  // namespace rfharvest
