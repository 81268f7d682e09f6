#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "rfharvest/error.hpp"
#include "rfharvest/quantities.hpp"

namespace rfharvest {

struct Supercap {
  std::string name;
  Capacitance c{1.0};
  Voltage v{0.0};
  Resistance r_leak{INFINITY};  // self-discharge I = v / r_leak
  Voltage v_max{INFINITY};

  Energy energy() const { return cap_energy(c, v); }
};

inline void validate(const Supercap& s) {
  if (!(s.c.value() > 0.0)) throw InvalidQuantity(s.name + ": capacitance must be positive");
  if (!(s.r_leak.value() > 0.0)) throw InvalidQuantity(s.name + ": leakage resistance must be positive");
  if (!(s.v.value() >= 0.0)) throw InvalidQuantity(s.name + ": voltage must be non-negative");
  if (!(s.v_max.value() > 0.0)) throw InvalidQuantity(s.name + ": v_max must be positive");
}

/// Energies moved during one capacitor step. Signs follow the flow: positive
/// into the capacitor.
struct CapFlows {
  Voltage v_new;
  Energy via_current;  // from the current term
  Energy via_power;    // from the power term
  Energy leaked;
};

/// Advances a capacitor under a net terminal current and a net terminal
/// power. Every flow is evaluated at the step-midpoint voltage, which makes
/// E(v_new) - E(v) = via_current + via_power - leaked hold exactly. If the
/// demand exceeds what the capacitor holds, it empties and the outflows are
/// scaled down so the balance still closes.
inline CapFlows integrate_cap(const Supercap& cap, Current i_net, PowerWatts p_net, Duration dt) {
  const double c = cap.c.value();
  const double v = cap.v.value();
  const double h = dt.value();
  const double g = std::isinf(cap.r_leak.value()) ? 0.0 : 1.0 / cap.r_leak.value();
  const double i = i_net.value();
  const double p = p_net.value();

  if (i == 0.0 && p == 0.0 && g == 0.0) return {cap.v, Energy{0.0}, Energy{0.0}, Energy{0.0}};
  if (p == 0.0) {
    // Linear case; solved directly to avoid cancellation in the quadratic.
    const double u = (2.0 * c * v + i * h) / (2.0 * c + g * h);
    const double v_new = 2.0 * u - v;
    if (u >= 0.0 && v_new >= 0.0) return {Voltage{v_new}, Energy{i * u * h}, Energy{0.0}, Energy{g * u * u * h}};
  }

  // Midpoint voltage u solves (2c + g h) u^2 - (2 c v + i h) u - p h = 0.
  const double a = 2.0 * c + g * h;
  const double b = 2.0 * c * v + i * h;
  const double disc = b * b + 4.0 * a * p * h;
  if (disc >= 0.0) {
    const double u = (b + std::sqrt(disc)) / (2.0 * a);
    const double v_new = 2.0 * u - v;
    if (u >= 0.0 && v_new >= 0.0) {
      return {Voltage{v_new}, Energy{i * u * h}, Energy{p * h}, Energy{g * u * u * h}};
    }
  }

  // Demand cannot be met: the capacitor empties within the step.
  const double e0 = 0.5 * c * (v * v);
  const double want_i = std::max(0.0, -i * v * h);
  const double want_p = std::max(0.0, -p * h);
  const double in_i = std::max(0.0, i * v * h);
  const double in_p = std::max(0.0, p * h);
  const double available = e0 + in_i + in_p;
  const double want = want_i + want_p;
  const double k = want > 0.0 ? available / want : 0.0;
  return {Voltage{0.0}, Energy{in_i - k * want_i}, Energy{in_p - k * want_p}, Energy{0.0}};
}

/// Single-current capacitor update; returns the new state and the energy lost to leakage.
inline std::pair<Supercap, Energy> cap_step(const Supercap& cap, Current i_in, Duration dt) {
  if (!(dt.value() > 0.0)) throw InvalidQuantity("cap_step: dt must be positive");
  const auto f = integrate_cap(cap, i_in, PowerWatts{0.0}, dt);
  Supercap next = cap;
  next.v = f.v_new;
  return {next, f.leaked};
}

struct DcDcConverter {
  Voltage v_startup{0.5};
  Voltage v_min_operate{0.3};
  Voltage v_out_setpoint{2.45};
  double efficiency = 0.9;
  bool enabled = false;
  bool running = false;
};

inline void validate(const DcDcConverter& c) {
  if (c.v_startup < c.v_min_operate) throw InvalidQuantity("converter v_min_operate must not exceed v_startup");
  if (!(c.efficiency > 0.0 && c.efficiency <= 1.0)) throw InvalidQuantity("converter efficiency must lie in (0, 1]");
}

/// Startup/undervoltage hysteresis: starting needs v_startup, running
/// continues down to v_min_operate.
inline DcDcConverter dcdc_update_running(DcDcConverter conv, Voltage v_in) {
  conv.running = conv.enabled && (conv.running || v_in >= conv.v_startup) && v_in >= conv.v_min_operate;
  return conv;
}

inline Current dcdc_input_current(const DcDcConverter& conv, Voltage v_in, Current i_load) {
  if (!conv.running) throw ConverterOff("dcdc_input_current: converter is not running");
  return Current{conv.v_out_setpoint.value() * i_load.value() / (conv.efficiency * v_in.value())};
}

/// Input-side power for a load specified by its own (V, I) budget.
inline PowerWatts dcdc_input_power(const DcDcConverter& conv, PowerWatts p_load) {
  if (!conv.running) throw ConverterOff("dcdc_input_power: converter is not running");
  return p_load / conv.efficiency;
}

struct TransferPolicy {
  Voltage start_v{0.5};
  Voltage stop_v{0.3};
  Current pump_current{1e-3};
};

inline void validate(const TransferPolicy& p) {
  if (!(p.stop_v < p.start_v)) throw InvalidQuantity("transfer stop_v must be below start_v");
  if (!(p.pump_current.value() > 0.0)) throw InvalidQuantity("transfer pump_current must be positive");
}

struct TransferResult {
  Supercap cap1;
  Supercap cap2;
  DcDcConverter conv1;
  Energy extracted;  // left cap1
  Energy moved;      // reached cap2
  Energy lost;       // dissipated in the converter
};

/// One step of the cap1 -> cap2 pump. Pumping starts at the higher of the
/// policy/converter start thresholds, drains cap1 no lower than stop_v and
/// never raises cap2 above its v_max.
inline TransferResult transfer_step(const Supercap& cap1, const Supercap& cap2, DcDcConverter conv1,
                                    const TransferPolicy& pol, Duration dt) {
  if (!(dt.value() > 0.0)) throw InvalidQuantity("transfer_step: dt must be positive");
  TransferResult r{cap1, cap2, conv1, Energy{0.0}, Energy{0.0}, Energy{0.0}};

  const Voltage start = std::max(conv1.v_startup, pol.start_v);
  const Voltage stop = std::max(conv1.v_min_operate, pol.stop_v);
  const Voltage v1 = cap1.v;
  r.conv1.running = conv1.enabled && (conv1.running || v1 >= start) && v1 >= stop;
  if (!r.conv1.running) return r;

  const Energy e1 = cap1.energy();
  const Energy e2 = cap2.energy();
  Voltage v1_new = v1 - Voltage{pol.pump_current.value() * dt.value() / cap1.c.value()};
  bool drained = false;
  if (v1_new <= stop) {
    v1_new = stop;
    drained = true;
  }
  Energy extracted = e1 - cap_energy(cap1.c, v1_new);

  const Energy room = std::isinf(cap2.v_max.value()) ? Energy{INFINITY} : cap_energy(cap2.c, cap2.v_max) - e2;
  if (room.value() <= 0.0) return r;  // cap2 full, pump idles
  if (extracted * conv1.efficiency > room) {
    extracted = room / conv1.efficiency;
    v1_new = voltage_for_energy(cap1.c, e1 - extracted);
  }

  r.extracted = extracted;
  r.moved = extracted * conv1.efficiency;
  r.lost = extracted - r.moved;
  r.cap1.v = v1_new;
  r.cap2.v = voltage_for_energy(cap2.c, e2 + r.moved);
  if (drained) r.conv1.running = false;
  return r;
}

}  // namespace rfharvest
