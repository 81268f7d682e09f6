#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rfharvest/error.hpp"
#include "rfharvest/quantities.hpp"
#include "rfharvest/storage.hpp"

namespace rfharvest {

/// One row of the node's power budget: a device drawing i at rail v for t.
struct LoadProfile {
  std::string name;
  Voltage v;
  Current i;
  Duration t;

  PowerWatts power() const { return v * i; }
  Energy energy() const { return v * i * t; }
};

/// Budget rows of one transmission cycle, keyed by the role each plays in the
/// sequence. The 10 s microcontroller row is the monitor's voltage check;
/// the 8 s row is the central controller's active window.
struct NodeProfiles {
  LoadProfile monitor{"monitor", Voltage{1.8}, Current{0.01e-3}, Duration{10.0}};
  LoadProfile controller{"controller", Voltage{1.8}, Current{0.01e-3}, Duration{8.0}};
  LoadProfile sensor{"sensor", Voltage{3.3}, Current{0.55e-3}, Duration{5.0}};
  LoadProfile zigbee{"zigbee", Voltage{3.3}, Current{35e-3}, Duration{2.7}};

  std::vector<LoadProfile> list() const { return {monitor, controller, sensor, zigbee}; }
};

inline std::vector<LoadProfile> table1_profiles() { return NodeProfiles{}.list(); }

inline Energy cycle_energy(const std::vector<LoadProfile>& profiles) {
  if (profiles.empty()) throw InvalidQuantity("cycle_energy: profile list is empty");
  Energy total{0.0};
  for (const auto& p : profiles) total += p.energy();
  return total;
}

/// Lowest capacitor voltage from which e_cycle can be delivered through a
/// converter of efficiency eff without dropping below v_floor.
inline Voltage required_go_voltage(Energy e_cycle, Capacitance c, Voltage v_floor, double eff) {
  if (!(eff > 0.0 && eff <= 1.0)) throw InvalidQuantity("required_go_voltage: efficiency must lie in (0, 1]");
  if (!(c.value() > 0.0)) throw InvalidQuantity("required_go_voltage: capacitance must be positive");
  return Voltage{std::sqrt(v_floor.value() * v_floor.value() + 2.0 * e_cycle.value() / (c.value() * eff))};
}

struct MonitorConfig {
  Duration wake_period{604800.0};
  Current i_sleep{0.6e-6};
  Current i_active{10e-6};
  Voltage v_min_operate{1.8};
  Duration check_duration{10.0};
  Voltage go_threshold{1.8};
};

inline void validate(const MonitorConfig& m) {
  if (!(m.wake_period.value() > 0.0)) throw InvalidQuantity("monitor wake_period must be positive");
  if (!(m.check_duration.value() >= 0.0)) throw InvalidQuantity("monitor check_duration must be non-negative");
  if (m.go_threshold < m.v_min_operate) throw InvalidQuantity("monitor go_threshold must be >= v_min_operate");
}

/// go_threshold default: enough charge for a full cycle, but never below the
/// voltage at which the monitor itself can run.
inline Voltage default_go_threshold(const NodeProfiles& profiles, const MonitorConfig& mon, Capacitance cap2,
                                    Voltage conv_floor, double conv_efficiency) {
  const Voltage cycle = required_go_voltage(cycle_energy(profiles.list()), cap2, conv_floor, conv_efficiency);
  return std::max(cycle, mon.v_min_operate);
}

struct LoadSwitch {
  Resistance r_on{0.045};
  bool closed = false;

  PowerWatts conduction_loss(Current i) const {
    return closed ? PowerWatts{i.value() * i.value() * r_on.value()} : PowerWatts{0.0};
  }
};

enum class NodeState { Cold, Sleep, Check, Boot, Handoff, Measure, Transmit, Shutdown };

inline const char* to_string(NodeState s) {
  switch (s) {
    case NodeState::Cold: return "cold";
    case NodeState::Sleep: return "sleep";
    case NodeState::Check: return "check";
    case NodeState::Boot: return "boot";
    case NodeState::Handoff: return "handoff";
    case NodeState::Measure: return "measure";
    case NodeState::Transmit: return "transmit";
    case NodeState::Shutdown: return "shutdown";
  }
  return "?";
}

inline bool is_cycle_state(NodeState s) {
  return s == NodeState::Boot || s == NodeState::Handoff || s == NodeState::Measure || s == NodeState::Transmit ||
         s == NodeState::Shutdown;
}

/// States that need the fine time step.
inline bool is_active_state(NodeState s) { return s == NodeState::Check || is_cycle_state(s); }

struct NodeStateMachine {
  NodeState state = NodeState::Cold;
  Duration phase_start{0.0};  // clock at which the current state was entered
  std::uint64_t next_wake = 1;  // index k of the next k * wake_period boundary
  bool monitor_drives_enable = false;
  bool controller_drives_enable = false;
  LoadSwitch sensor_switch;
  LoadSwitch zigbee_switch;

  bool enable_line() const { return monitor_drives_enable || controller_drives_enable; }
};

struct NodeConfig {
  MonitorConfig monitor;
  NodeProfiles profiles;
  Resistance switch_r_on{0.045};
};

/// Boot, handoff and shutdown share whatever part of the controller's active
/// window is not spent measuring or transmitting.
struct CyclePhases {
  Duration boot;
  Duration handoff;
  Duration shutdown;
};

inline CyclePhases cycle_phases(const NodeProfiles& p) {
  const double overhead = std::max(0.0, (p.controller.t - p.sensor.t - p.zigbee.t).value() / 3.0);
  return {Duration{overhead}, Duration{overhead}, Duration{overhead}};
}

/// What the node draws during the next step.
struct LoadDemand {
  Current monitor{0.0};  // straight from cap2
  PowerWatts controller{0.0};
  PowerWatts sensor{0.0};
  PowerWatts zigbee{0.0};
  PowerWatts switches{0.0};

  PowerWatts converter_load() const { return controller + sensor + zigbee + switches; }
};

struct MonitorStepResult {
  NodeStateMachine sm;
  Current drawn;
};

namespace detail {
inline constexpr double kPhaseEps = 1e-6;

inline bool phase_done(const NodeStateMachine& sm, Duration clock, Duration length) {
  return (clock - sm.phase_start).value() >= length.value() - kPhaseEps;
}

inline void enter(NodeStateMachine& sm, NodeState s, Duration clock) {
  sm.state = s;
  sm.phase_start = clock;
}
}  // namespace detail

/// Voltage-monitor automaton for the idle states (Cold, Sleep, Check). The
/// returned current is drawn from cap2 during the step starting at `clock`.
inline MonitorStepResult monitor_step(const MonitorConfig& cfg, NodeStateMachine sm, Voltage v_cap2, Duration clock) {
  if (is_cycle_state(sm.state)) {
    throw IllegalTransition("monitor_step: node is inside a transmission cycle");
  }
  if (v_cap2 < cfg.v_min_operate) {
    detail::enter(sm, NodeState::Cold, clock);
    sm.monitor_drives_enable = false;
    return {sm, Current{0.0}};
  }
  const double period = cfg.wake_period.value();
  const auto boundary_index = [&] {
    return static_cast<std::uint64_t>(std::floor(clock.value() / period + detail::kPhaseEps)) + 1;
  };

  if (sm.state == NodeState::Cold) {
    detail::enter(sm, NodeState::Sleep, clock);
    sm.next_wake = boundary_index();
  }
  if (sm.state == NodeState::Sleep) {
    if (clock.value() >= static_cast<double>(sm.next_wake) * period - detail::kPhaseEps) {
      detail::enter(sm, NodeState::Check, clock);
      sm.next_wake = boundary_index();
    } else {
      return {sm, cfg.i_sleep};
    }
  }
  // Check
  if (detail::phase_done(sm, clock, cfg.check_duration)) {
    if (v_cap2 >= cfg.go_threshold) {
      detail::enter(sm, NodeState::Boot, clock);
      sm.monitor_drives_enable = true;
      return {sm, cfg.i_active};
    }
    detail::enter(sm, NodeState::Sleep, clock);
    return {sm, cfg.i_sleep};
  }
  return {sm, cfg.i_active};
}

struct NodeEvents {
  bool transmitted = false;
  bool cycle_completed = false;
  bool brownout = false;
  NodeState brownout_phase = NodeState::Cold;
};

struct NodeStepResult {
  NodeStateMachine sm;
  DcDcConverter conv2;
  LoadDemand demand;
  NodeEvents events;
};

/// Advances the whole node (monitor plus controller sequence) to `clock` and
/// returns the demand for the step that starts there.
inline NodeStepResult node_step(const NodeConfig& cfg, NodeStateMachine sm, DcDcConverter conv2, Voltage v_cap2,
                                Duration clock) {
  NodeStepResult r{sm, conv2, {}, {}};
  auto& s = r.sm;
  const auto& prof = cfg.profiles;
  const auto phases = cycle_phases(prof);
  const bool monitor_alive = v_cap2 >= cfg.monitor.v_min_operate;

  auto abort_cycle = [&] {
    r.events.brownout = true;
    r.events.brownout_phase = s.state;
    s.sensor_switch.closed = false;
    s.zigbee_switch.closed = false;
    s.monitor_drives_enable = false;
    s.controller_drives_enable = false;
    r.conv2.enabled = false;
    r.conv2.running = false;
    detail::enter(s, NodeState::Cold, clock);
  };

  if (is_cycle_state(s.state)) {
    // Finish every phase whose time is up.
    bool advanced = true;
    while (advanced && is_cycle_state(s.state)) {
      advanced = false;
      switch (s.state) {
        case NodeState::Boot:
          if (detail::phase_done(s, clock, phases.boot)) {
            s.controller_drives_enable = true;  // controller grabs the enable pin first
            detail::enter(s, NodeState::Handoff, clock);
            advanced = true;
          }
          break;
        case NodeState::Handoff:
          if (detail::phase_done(s, clock, phases.handoff)) {
            s.monitor_drives_enable = false;  // monitor goes back to power-save
            s.sensor_switch.closed = true;
            detail::enter(s, NodeState::Measure, clock);
            advanced = true;
          }
          break;
        case NodeState::Measure:
          if (detail::phase_done(s, clock, prof.sensor.t)) {
            s.sensor_switch.closed = false;
            s.zigbee_switch.closed = true;
            detail::enter(s, NodeState::Transmit, clock);
            advanced = true;
          }
          break;
        case NodeState::Transmit:
          if (detail::phase_done(s, clock, prof.zigbee.t)) {
            s.zigbee_switch.closed = false;
            r.events.transmitted = true;
            detail::enter(s, NodeState::Shutdown, clock);
            advanced = true;
          }
          break;
        case NodeState::Shutdown:
          if (detail::phase_done(s, clock, phases.shutdown)) {
            s.controller_drives_enable = false;
            r.conv2.enabled = false;
            r.conv2.running = false;
            r.events.cycle_completed = true;
            detail::enter(s, monitor_alive ? NodeState::Sleep : NodeState::Cold, clock);
            advanced = true;
          }
          break;
        default:
          break;
      }
    }
  }

  if (is_cycle_state(s.state)) {
    r.conv2.enabled = s.enable_line();
    r.conv2 = dcdc_update_running(r.conv2, v_cap2);
    if (!r.conv2.running) {
      abort_cycle();
    }
  }

  if (!is_cycle_state(s.state)) {
    const auto m = monitor_step(cfg.monitor, s, v_cap2, clock);
    s = m.sm;
    r.demand.monitor = m.drawn;
    if (s.state == NodeState::Boot) {
      // Monitor just raised the enable line; the converter has to start now.
      r.conv2.enabled = true;
      r.conv2 = dcdc_update_running(r.conv2, v_cap2);
      if (!r.conv2.running) {
        abort_cycle();
        r.demand.monitor = Current{0.0};
      }
    }
  }

  if (is_cycle_state(s.state)) {
    const bool monitor_awake = s.state == NodeState::Boot || s.state == NodeState::Handoff;
    if (v_cap2 >= cfg.monitor.v_min_operate) {
      r.demand.monitor = monitor_awake ? cfg.monitor.i_active : cfg.monitor.i_sleep;
    } else {
      r.demand.monitor = Current{0.0};
    }
    r.demand.controller = prof.controller.power();
    if (s.sensor_switch.closed) {
      s.sensor_switch.r_on = cfg.switch_r_on;
      r.demand.sensor = prof.sensor.power();
      r.demand.switches += s.sensor_switch.conduction_loss(prof.sensor.i);
    }
    if (s.zigbee_switch.closed) {
      s.zigbee_switch.r_on = cfg.switch_r_on;
      r.demand.zigbee = prof.zigbee.power();
      r.demand.switches += s.zigbee_switch.conduction_loss(prof.zigbee.i);
    }
  }

  return r;
}

struct CycleReport {
  Duration start;
  Duration end;
  std::map<std::string, Energy> energy_by_profile;  // load side, before converter losses
  Energy total_drawn{0.0};
  Energy converter_loss{0.0};
  Energy leaked{0.0};
  bool transmitted = false;
  bool success = false;
  std::optional<NodeState> brownout_phase;
  Voltage v_before;
  Voltage v_after;
  Voltage v_min_during;
};

/// Energy attribution of one cap2 step given the node's demand.
struct DemandEnergies {
  Energy monitor{0.0};
  Energy controller{0.0};
  Energy sensor{0.0};
  Energy zigbee{0.0};
  Energy switches{0.0};
  Energy converter_loss{0.0};
  Energy leaked{0.0};
};

/// Steps cap2 under the node demand; converter input power is load / efficiency.
inline std::pair<Supercap, DemandEnergies> draw_demand(const Supercap& cap2, const DcDcConverter& conv2,
                                                       const LoadDemand& d, PowerWatts p_in_extra, Duration dt) {
  const PowerWatts load = d.converter_load();
  const PowerWatts p_in = load.value() > 0.0 ? dcdc_input_power(conv2, load) : PowerWatts{0.0};
  const auto f = integrate_cap(cap2, -d.monitor, p_in_extra - p_in, dt);
  Supercap next = cap2;
  next.v = f.v_new;

  DemandEnergies e;
  e.leaked = f.leaked;
  e.monitor = -f.via_current;
  const double requested = (p_in * dt).value();
  const double delivered = (p_in_extra * dt).value() - f.via_power.value();
  const double k = requested > 0.0 ? delivered / requested : 0.0;
  e.controller = d.controller * dt * k;
  e.sensor = d.sensor * dt * k;
  e.zigbee = d.zigbee * dt * k;
  e.switches = d.switches * dt * k;
  e.converter_loss = Energy{delivered} - (e.controller + e.sensor + e.zigbee + e.switches);
  return {next, e};
}

/// Runs one transmission cycle from Boot to completion or brown-out, drawing
/// only from cap2 (no harvesting).
inline CycleReport run_cycle(const NodeConfig& cfg, NodeStateMachine& sm, DcDcConverter& conv2, Supercap& cap2,
                             Duration dt, Duration clock = Duration{0.0}) {
  if (sm.state != NodeState::Boot || !sm.enable_line()) {
    throw IllegalTransition("run_cycle: node must be in Boot with the enable line raised");
  }
  if (!conv2.enabled || !conv2.running) {
    throw IllegalTransition("run_cycle: converter 2 must be enabled and running");
  }
  CycleReport rep;
  rep.start = clock;
  rep.v_before = cap2.v;
  rep.v_min_during = cap2.v;
  for (const char* k : {"monitor", "controller", "sensor", "zigbee", "switches"}) rep.energy_by_profile[k] = Energy{0.0};

  Duration t = clock;
  while (true) {
    auto step = node_step(cfg, sm, conv2, cap2.v, t);
    sm = step.sm;
    conv2 = step.conv2;
    rep.transmitted = rep.transmitted || step.events.transmitted;
    if (step.events.brownout) rep.brownout_phase = step.events.brownout_phase;
    if (step.events.cycle_completed) rep.success = true;
    if (!is_cycle_state(sm.state)) break;

    auto [next, e] = draw_demand(cap2, conv2, step.demand, PowerWatts{0.0}, dt);
    cap2 = next;
    rep.energy_by_profile["monitor"] += e.monitor;
    rep.energy_by_profile["controller"] += e.controller;
    rep.energy_by_profile["sensor"] += e.sensor;
    rep.energy_by_profile["zigbee"] += e.zigbee;
    rep.energy_by_profile["switches"] += e.switches;
    rep.converter_loss += e.converter_loss;
    rep.leaked += e.leaked;
    rep.v_min_during = std::min(rep.v_min_during, cap2.v);
    t += dt;
  }
  for (const auto& [k, e] : rep.energy_by_profile) rep.total_drawn += e;
  rep.end = t;
  rep.v_after = cap2.v;
  return rep;
}

}  // namespace rfharvest
