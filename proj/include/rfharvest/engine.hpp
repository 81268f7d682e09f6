#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "rfharvest/analog_frontend.hpp"
#include "rfharvest/error.hpp"
#include "rfharvest/ledger.hpp"
#include "rfharvest/power_mgmt.hpp"
#include "rfharvest/quantities.hpp"
#include "rfharvest/rf_environment.hpp"
#include "rfharvest/storage.hpp"

namespace rfharvest {

enum class SourceKind { Constant, Fluctuation, Trace };

/// Flat, file-friendly description of the RF source; build_source turns it
/// into a model.
struct SourceSpec {
  SourceKind kind = SourceKind::Constant;
  std::string preset;  // "", "monopole" or "ribbon_dipole"
  PowerDbm level{-37.0};
  PowerDbm lo{-43.0};
  PowerDbm hi{-33.0};
  Duration dwell{60.0};
  std::string trace_file;
  bool hold_last = true;
  std::optional<TracePlayback> trace;  // takes precedence over trace_file
};

inline RfSourceModel build_source(const SourceSpec& spec, std::uint64_t seed) {
  RfSourceModel model;
  switch (spec.kind) {
    case SourceKind::Constant:
      model = ConstantSource{spec.level};
      break;
    case SourceKind::Fluctuation:
      model = BoundedFluctuation{spec.lo, spec.hi, spec.dwell, seed};
      break;
    case SourceKind::Trace:
      if (spec.trace) {
        auto t = *spec.trace;
        t.hold_last = spec.hold_last;
        model = std::move(t);
      } else {
        if (spec.trace_file.empty()) throw ConfigError("trace source needs source.trace_file");
        model = load_trace_file(spec.trace_file, spec.hold_last);
      }
      break;
  }
  validate(model);
  return model;
}

struct StorageConfig {
  Supercap cap1{"cap1", Capacitance{1.5}, Voltage{0.0}, Resistance{2e5}, Voltage{4.5}};
  Supercap cap2{"cap2", Capacitance{1.0}, Voltage{0.0}, Resistance{2e6}, Voltage{4.5}};
  DcDcConverter conv1{Voltage{0.5}, Voltage{0.3}, Voltage{2.45}, 0.9, true, false};
  DcDcConverter conv2{Voltage{0.5}, Voltage{0.3}, Voltage{2.45}, 0.9, false, false};
  TransferPolicy transfer;
};

struct ManagementConfig {
  bool enabled = true;
  NodeConfig node;
  std::optional<Voltage> go_threshold;  // unset: derived from the budget
};

struct EngineConfig {
  Duration dt_coarse{1.0};
  Duration dt_fine{1e-3};
  Duration t_end{60.0 * kSecondsPerDay};
  std::optional<int> stop_after_tx;
  std::optional<Energy> until_joules;  // stop once cap1 + cap2 hold this much
};

struct Scenario {
  SourceSpec source;
  std::string frontend_preset;  // informational once expanded into `frontend`
  FrontendChain frontend;
  StorageConfig storage;
  ManagementConfig management;
  EngineConfig engine;
  std::uint64_t seed = 0;
};

/// One trace row, written after every step.
struct TraceRow {
  double t_s;
  double p_avail_dbm;
  double v_cap1;
  double v_cap2;
  NodeState state;
  double e_harvested_j;
  double e_consumed_j;
  double e_leaked_j;
};

using TraceSink = std::function<void(const TraceRow&)>;

inline constexpr const char* kTraceHeader = "t_s,p_avail_dbm,v_cap1,v_cap2,state,e_harvested_j,e_consumed_j,e_leaked_j";

inline std::string format_trace_row(const TraceRow& r) {
  return fmt::format("{:.3f},{:.4f},{:.6g},{:.6g},{},{:.5g},{:.5g},{:.5g}", r.t_s, r.p_avail_dbm, r.v_cap1, r.v_cap2,
                     to_string(r.state), r.e_harvested_j, r.e_consumed_j, r.e_leaked_j);
}

struct SimResult {
  std::optional<Duration> time_to_first_transmission;
  int transmissions = 0;
  int cycles_started = 0;
  int cycles_completed = 0;
  int brownouts = 0;
  std::optional<Duration> time_to_target_energy;
  Duration t_final{0.0};
  Voltage v_cap1;
  Voltage v_cap2;
  EnergyLedger ledger;
  std::uint64_t steps = 0;
  std::uint64_t trace_rows = 0;
  std::vector<std::string> diagnostics;
};

struct SimState {
  std::int64_t t_ns = 0;
  Supercap cap1;
  Supercap cap2;
  DcDcConverter conv1;
  DcDcConverter conv2;
  NodeStateMachine sm;
  EnergyLedger ledger;
  double last_p_dbm = 0.0;
  Voltage v_node{0.0};  // cap2 voltage the node saw in the last step
  int transmissions = 0;
  int cycles_started = 0;
  int cycles_completed = 0;
  int brownouts = 0;
  std::optional<Duration> first_tx;
  std::optional<Duration> target_reached;

  Duration clock() const { return Duration{static_cast<double>(t_ns) / 1e9}; }
  Energy stored() const { return cap1.energy() + cap2.energy(); }
};

inline std::int64_t to_ticks(Duration d) { return static_cast<std::int64_t>(std::llround(d.value() * 1e9)); }

inline void validate(const Scenario& s) {
  validate(s.frontend.reflection);
  if (s.frontend.tank) validate(*s.frontend.tank);
  validate(s.frontend.rectifier);
  if (!(s.frontend.carrier.value() > 0.0)) throw InvalidQuantity("carrier frequency must be positive");
  validate(s.storage.cap1);
  validate(s.storage.cap2);
  validate(s.storage.conv1);
  validate(s.storage.conv2);
  validate(s.storage.transfer);
  if (!(s.engine.dt_fine.value() > 0.0) || to_ticks(s.engine.dt_fine) < 1)
    throw InvalidQuantity("engine dt_fine must be at least 1 ns");
  if (s.engine.dt_coarse < s.engine.dt_fine) throw InvalidQuantity("engine requires dt_fine <= dt_coarse");
  if (!(s.engine.t_end.value() > 0.0)) throw InvalidQuantity("engine t_end must be positive");
  for (const auto& p : s.management.node.profiles.list()) {
    if (p.v.value() < 0.0 || p.i.value() < 0.0 || p.t.value() < 0.0)
      throw InvalidQuantity("load profile '" + p.name + "' has a negative field");
  }
}

/// Time integrator for one scenario: two fixed step sizes, coarse while the
/// node idles and fine while it is checking or running a cycle.
class Engine {
 public:
  explicit Engine(Scenario scenario) : sc_(std::move(scenario)) {
    validate(sc_);
    source_ = build_source(sc_.source, sc_.seed);
    node_ = sc_.management.node;
    const auto& st = sc_.storage;
    node_.monitor.go_threshold = sc_.management.go_threshold.value_or(
        default_go_threshold(node_.profiles, node_.monitor, st.cap2.c, st.conv2.v_min_operate, st.conv2.efficiency));
    validate(node_.monitor);

    s_.cap1 = st.cap1;
    s_.cap2 = st.cap2;
    s_.conv1 = st.conv1;
    s_.conv2 = st.conv2;
    s_.ledger.stored_initial = s_.stored();
  }

  const Scenario& scenario() const { return sc_; }
  const NodeConfig& node_config() const { return node_; }
  const SimState& state() const { return s_; }

  /// Step size the run loop would use next.
  Duration next_dt() const {
    const bool fine = sc_.management.enabled && is_active_state(s_.sm.state);
    return fine ? sc_.engine.dt_fine : sc_.engine.dt_coarse;
  }

  void step(Duration dt) {
    if (!(dt.value() > 0.0)) throw InvalidQuantity("step: dt must be positive");
    auto& L = s_.ledger;
    const Duration t = s_.clock();

    const PowerDbm p_dbm = sample_power(source_, t);
    s_.last_p_dbm = p_dbm.value();
    const PowerWatts p_avail = dbm_to_watts(p_dbm);
    const FrontendState fs = evaluate_frontend(sc_.frontend, p_avail);
    L.rf_available += p_avail * dt;
    L.rf_delivered += fs.p_delivered * dt;
    L.reflected += (p_avail - fs.p_delivered) * dt;

    // Rectifier into cap1: Thevenin-limited, and never more than the RF power delivered.
    const Energy budget = fs.p_delivered * dt;
    CapFlows f1;
    const bool full = s_.cap1.v >= s_.cap1.v_max;
    if (full || fs.p_delivered.value() <= 0.0) {
      f1 = integrate_cap(s_.cap1, Current{0.0}, PowerWatts{0.0}, dt);
    } else if (sc_.frontend.ideal) {
      f1 = integrate_cap(s_.cap1, Current{0.0}, fs.p_delivered, dt);
    } else {
      const Current i_t = charging_current(fs.out, s_.cap1.v);
      if (i_t.value() <= 0.0) {
        f1 = integrate_cap(s_.cap1, Current{0.0}, PowerWatts{0.0}, dt);
      } else {
        if (std::isfinite(i_t.value())) f1 = integrate_cap(s_.cap1, i_t, PowerWatts{0.0}, dt);
        if (!std::isfinite(i_t.value()) || f1.via_current > budget) {
          f1 = integrate_cap(s_.cap1, Current{0.0}, fs.p_delivered, dt);
        }
      }
    }
    s_.cap1.v = f1.v_new;
    L.harvested += f1.via_current + f1.via_power;
    L.leaked_cap1 += f1.leaked;

    const TransferResult tr = transfer_step(s_.cap1, s_.cap2, s_.conv1, sc_.storage.transfer, dt);
    s_.cap1 = tr.cap1;
    s_.cap2 = tr.cap2;
    s_.conv1 = tr.conv1;
    L.converter1_loss += tr.lost;

    LoadDemand demand;
    if (sc_.management.enabled) {
      const bool was_cycle = is_cycle_state(s_.sm.state);
      s_.v_node = s_.cap2.v;
      auto ns = node_step(node_, s_.sm, s_.conv2, s_.cap2.v, t);
      s_.sm = ns.sm;
      s_.conv2 = ns.conv2;
      demand = ns.demand;
      if (!was_cycle && is_cycle_state(s_.sm.state)) ++s_.cycles_started;
      if (ns.events.transmitted) {
        ++s_.transmissions;
        if (!s_.first_tx) s_.first_tx = t;
      }
      if (ns.events.cycle_completed) ++s_.cycles_completed;
      if (ns.events.brownout) ++s_.brownouts;
    }
    auto [cap2, e] = draw_demand(s_.cap2, s_.conv2, demand, PowerWatts{0.0}, dt);
    s_.cap2 = cap2;
    L.leaked_cap2 += e.leaked;
    L.converter2_loss += e.converter_loss;
    L.load_monitor += e.monitor;
    L.load_controller += e.controller;
    L.load_sensor += e.sensor;
    L.load_zigbee += e.zigbee;
    L.load_switches += e.switches;

    s_.t_ns += to_ticks(dt);
    L.stored_delta = s_.stored() - L.stored_initial;
    if (!L.balanced()) {
      throw ConsistencyError(fmt::format("energy ledger out of balance at t = {:.3f} s: residual {:.6g} J (scale {:.6g} J)",
                                         s_.clock().value(), L.residual().value(), L.scale().value()));
    }
    if (sc_.engine.until_joules && !s_.target_reached && s_.stored() >= *sc_.engine.until_joules) {
      s_.target_reached = s_.clock();
    }
  }

  bool finished() const {
    const auto& e = sc_.engine;
    if (s_.t_ns >= to_ticks(e.t_end)) return true;
    if (e.stop_after_tx && s_.transmissions >= *e.stop_after_tx) return true;
    if (e.until_joules && s_.target_reached) return true;
    return false;
  }

  SimResult run(const TraceSink& sink = {}) {
    SimResult r;
    while (!finished()) {
      step(next_dt());
      ++r.steps;
      if (sink) {
        const auto& L = s_.ledger;
        sink(TraceRow{s_.clock().value(), s_.last_p_dbm, s_.cap1.v.value(), s_.cap2.v.value(), s_.sm.state,
                      L.harvested.value(), (L.total_load() + L.converter_loss()).value(), L.leaked().value()});
        ++r.trace_rows;
      }
    }
    r.time_to_first_transmission = s_.first_tx;
    r.transmissions = s_.transmissions;
    r.cycles_started = s_.cycles_started;
    r.cycles_completed = s_.cycles_completed;
    r.brownouts = s_.brownouts;
    r.time_to_target_energy = s_.target_reached;
    r.t_final = s_.clock();
    r.v_cap1 = s_.cap1.v;
    r.v_cap2 = s_.cap2.v;
    r.ledger = s_.ledger;
    r.diagnostics = diagnostics();
    return r;
  }

 private:
  std::vector<std::string> diagnostics() const {
    std::vector<std::string> out;
    const auto& L = s_.ledger;
    const double t = s_.clock().value();
    if (t <= 0.0) return out;
    const double p_in = L.rf_delivered.value() / t;
    const double p_harv = L.harvested.value() / t;
    if (sc_.management.enabled) {
      const double p_sleep = (node_.monitor.i_sleep * node_.monitor.v_min_operate).value();
      if (p_sleep > p_in) {
        out.push_back(fmt::format(
            "quiescent deficit: monitor sleep draw {:.4g} W (at {:.2f} V) exceeds mean delivered RF power {:.4g} W",
            p_sleep, node_.monitor.v_min_operate.value(), p_in));
      }
      if (L.load_monitor.value() > 0.0 && L.load_monitor > L.harvested) {
        out.push_back(fmt::format("monitor consumed {:.4g} J, more than the {:.4g} J harvested (mean {:.4g} W)",
                                  L.load_monitor.value(), L.harvested.value(), p_harv));
      }
    }
    const double p_leak = L.leaked().value() / t;
    if (p_leak > p_harv && L.leaked().value() > 0.0) {
      out.push_back(fmt::format("leakage {:.4g} W exceeds mean harvested power {:.4g} W", p_leak, p_harv));
    }
    return out;
  }

  Scenario sc_;
  RfSourceModel source_;
  NodeConfig node_;
  SimState s_;
};

inline SimResult run(const Scenario& scenario, const TraceSink& sink = {}) { return Engine(scenario).run(sink); }

}  // namespace rfharvest
