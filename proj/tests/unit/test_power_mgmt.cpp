#include <catch_amalgamated.hpp>

#include <cmath>

#include "rfharvest/power_mgmt.hpp"

using namespace rfharvest;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct BootedNode {
  NodeStateMachine sm;
  DcDcConverter conv2{Voltage{0.5}, Voltage{0.3}, Voltage{2.45}, 0.9, true, false};
  Supercap cap2{"cap2", Capacitance{1.0}, Voltage{0.0}, Resistance{INFINITY}, Voltage{4.5}};
};

BootedNode booted(double v) {
  BootedNode n;
  n.cap2.v = Voltage{v};
  n.sm.state = NodeState::Boot;
  n.sm.monitor_drives_enable = true;
  n.conv2 = dcdc_update_running(n.conv2, n.cap2.v);
  return n;
}

// Energy a cycle actually pulls out of cap2 below the monitor's supply
// floor: the converter-side rows plus switch conduction, over efficiency.
double cycle_input_energy(const NodeConfig& cfg, double eff) {
  const auto& p = cfg.profiles;
  const double loads = (p.controller.energy() + p.sensor.energy() + p.zigbee.energy()).value();
  const double sw = cfg.switch_r_on.value() *
                    (p.sensor.i.value() * p.sensor.i.value() * p.sensor.t.value() +
                     p.zigbee.i.value() * p.zigbee.i.value() * p.zigbee.t.value());
  return (loads + sw) / eff;
}

}  // namespace

TEST_CASE("budget rows", "[power_mgmt]") {
  const auto rows = table1_profiles();
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].name == "monitor");
  CHECK_THAT(rows[0].energy().value(), WithinRel(1.8e-4, 1e-12));
  CHECK_THAT(rows[1].energy().value(), WithinRel(1.44e-4, 1e-12));
  CHECK_THAT(rows[2].energy().value(), WithinRel(9.075e-3, 1e-12));
  CHECK_THAT(rows[3].energy().value(), WithinRel(0.31185, 1e-12));
  // oracle: hand sum of the four V*I*T products
  const double total = 1.8 * 1e-5 * 10 + 1.8 * 1e-5 * 8 + 3.3 * 0.55e-3 * 5 + 3.3 * 35e-3 * 2.7;
  CHECK_THAT(cycle_energy(rows).value(), WithinRel(total, 1e-12));
  CHECK(cycle_energy(rows).value() >= 0.315);
  CHECK(cycle_energy(rows).value() <= 0.325);
  CHECK(std::round(cycle_energy(rows).value() * 100.0) / 100.0 == 0.32);
}

TEST_CASE("cycle energy linearity and edge cases", "[power_mgmt]") {
  auto rows = table1_profiles();
  const double base = cycle_energy(rows).value();
  for (auto& r : rows) r.t = r.t * 2.0;
  CHECK_THAT(cycle_energy(rows).value(), WithinRel(2.0 * base, 1e-12));
  rows.push_back({"idle", Voltage{3.3}, Current{0.0}, Duration{100.0}});
  CHECK_THAT(cycle_energy(rows).value(), WithinRel(2.0 * base, 1e-12));
  CHECK_THROWS_AS(cycle_energy({}), InvalidQuantity);
}

TEST_CASE("required go voltage", "[power_mgmt]") {
  CHECK(required_go_voltage(Energy{0.0}, Capacitance{1.0}, Voltage{0.3}, 0.9).value() == Catch::Approx(0.3));
  CHECK_THAT(required_go_voltage(Energy{0.32}, Capacitance{1.0}, Voltage{0.3}, 0.9).value(), WithinAbs(0.8951, 1e-4));
  CHECK_THAT(required_go_voltage(Energy{0.32}, Capacitance{1.0}, Voltage{0.3}, 1.0).value(), WithinAbs(0.8544, 1e-4));
  // inverse check through usable_energy
  const Voltage v = required_go_voltage(Energy{0.32}, Capacitance{1.0}, Voltage{0.3}, 0.9);
  CHECK_THAT(0.9 * usable_energy(Capacitance{1.0}, v, Voltage{0.3}).value(), WithinRel(0.32, 1e-12));
  CHECK_THROWS_AS(required_go_voltage(Energy{0.32}, Capacitance{1.0}, Voltage{0.3}, 0.0), InvalidQuantity);
}

TEST_CASE("default go threshold is floored by the monitor supply", "[power_mgmt]") {
  const NodeConfig cfg;
  CHECK(default_go_threshold(cfg.profiles, cfg.monitor, Capacitance{1.0}, Voltage{0.3}, 0.9).value() == 1.8);
  CHECK_THAT(default_go_threshold(cfg.profiles, cfg.monitor, Capacitance{0.01}, Voltage{0.3}, 0.9).value(),
             WithinRel(required_go_voltage(cycle_energy(cfg.profiles.list()), Capacitance{0.01}, Voltage{0.3}, 0.9)
                           .value(),
                       1e-12));
}

TEST_CASE("monitor below its supply floor is cold and draws nothing", "[power_mgmt]") {
  const MonitorConfig cfg;
  NodeStateMachine sm;
  sm.state = NodeState::Sleep;
  const auto r = monitor_step(cfg, sm, Voltage{1.0}, Duration{100.0});
  CHECK(r.sm.state == NodeState::Cold);
  CHECK(r.drawn.value() == 0.0);
  CHECK_FALSE(r.sm.enable_line());
}

TEST_CASE("monitor sleeps mid-week", "[power_mgmt]") {
  const MonitorConfig cfg;
  const auto r = monitor_step(cfg, NodeStateMachine{}, Voltage{2.0}, Duration{3.0 * 86400.0});
  CHECK(r.sm.state == NodeState::Sleep);
  CHECK_THAT(r.drawn.value(), WithinRel(0.6e-6, 1e-12));
  CHECK(r.sm.next_wake == 1);
}

TEST_CASE("weekly check leads to boot when charged", "[power_mgmt]") {
  MonitorConfig cfg;
  cfg.go_threshold = Voltage{1.9};
  NodeStateMachine sm;
  sm = monitor_step(cfg, sm, Voltage{2.0}, Duration{10.0}).sm;
  REQUIRE(sm.state == NodeState::Sleep);
  auto r = monitor_step(cfg, sm, Voltage{2.0}, cfg.wake_period);
  CHECK(r.sm.state == NodeState::Check);
  CHECK_THAT(r.drawn.value(), WithinRel(10e-6, 1e-12));
  r = monitor_step(cfg, r.sm, Voltage{2.0}, cfg.wake_period + Duration{5.0});
  CHECK(r.sm.state == NodeState::Check);
  r = monitor_step(cfg, r.sm, Voltage{2.0}, cfg.wake_period + cfg.check_duration);
  CHECK(r.sm.state == NodeState::Boot);
  CHECK(r.sm.enable_line());
  CHECK(r.sm.monitor_drives_enable);
  CHECK_THROWS_AS(monitor_step(cfg, r.sm, Voltage{2.0}, cfg.wake_period + Duration{20.0}), IllegalTransition);
}

TEST_CASE("weekly check returns to sleep when undercharged", "[power_mgmt]") {
  MonitorConfig cfg;
  cfg.go_threshold = Voltage{2.5};
  NodeStateMachine sm = monitor_step(cfg, {}, Voltage{2.0}, Duration{0.0}).sm;
  sm = monitor_step(cfg, sm, Voltage{2.0}, cfg.wake_period).sm;
  REQUIRE(sm.state == NodeState::Check);
  sm = monitor_step(cfg, sm, Voltage{2.0}, cfg.wake_period + cfg.check_duration).sm;
  CHECK(sm.state == NodeState::Sleep);
  CHECK(sm.next_wake == 2);
  CHECK_FALSE(sm.enable_line());
}

TEST_CASE("run_cycle preconditions", "[power_mgmt]") {
  const NodeConfig cfg;
  auto n = booted(2.0);
  n.sm.state = NodeState::Sleep;
  CHECK_THROWS_AS(run_cycle(cfg, n.sm, n.conv2, n.cap2, Duration{1e-3}), IllegalTransition);
  n = booted(2.0);
  n.sm.monitor_drives_enable = false;
  CHECK_THROWS_AS(run_cycle(cfg, n.sm, n.conv2, n.cap2, Duration{1e-3}), IllegalTransition);
  n = booted(2.0);
  n.conv2.running = false;
  CHECK_THROWS_AS(run_cycle(cfg, n.sm, n.conv2, n.cap2, Duration{1e-3}), IllegalTransition);
}

TEST_CASE("full cycle from a well-charged cap", "[power_mgmt]") {
  const NodeConfig cfg;
  auto n = booted(2.0);
  const auto rep = run_cycle(cfg, n.sm, n.conv2, n.cap2, Duration{1e-3});
  CHECK(rep.success);
  CHECK(rep.transmitted);
  CHECK_FALSE(rep.brownout_phase);
  CHECK_THAT((rep.end - rep.start).value(), WithinAbs(cfg.profiles.controller.t.value(), 2e-3));
  CHECK_THAT(rep.energy_by_profile.at("sensor").value(), WithinRel(cfg.profiles.sensor.energy().value(), 1e-3));
  CHECK_THAT(rep.energy_by_profile.at("zigbee").value(), WithinRel(cfg.profiles.zigbee.energy().value(), 1e-3));
  CHECK_THAT(rep.energy_by_profile.at("controller").value(),
             WithinRel(cfg.profiles.controller.energy().value(), 1e-3));
  CHECK(rep.energy_by_profile.at("switches").value() <= 6e-5 * 2.7 * 1.001);
  double sum = 0.0;
  for (const auto& [k, e] : rep.energy_by_profile) sum += e.value();
  CHECK_THAT(rep.total_drawn.value(), WithinRel(sum, 1e-12));
  // oracle: cap energy drop = loads / eta (no leakage on this cap)
  const double drop = cap_energy(Capacitance{1.0}, rep.v_before).value() - cap_energy(Capacitance{1.0}, rep.v_after).value();
  CHECK_THAT(drop, WithinRel(rep.total_drawn.value() + rep.converter_loss.value(), 1e-9));
  CHECK_THAT(rep.converter_loss.value(),
             WithinRel((rep.total_drawn - rep.energy_by_profile.at("monitor")).value() * (1.0 / 0.9 - 1.0), 1e-6));

  // After shutdown: switches open, converter off, enable released.
  CHECK_FALSE(n.sm.sensor_switch.closed);
  CHECK_FALSE(n.sm.zigbee_switch.closed);
  CHECK_FALSE(n.sm.enable_line());
  CHECK_FALSE(n.conv2.running);
  CHECK(n.sm.state == NodeState::Sleep);
  const auto after = node_step(cfg, n.sm, n.conv2, n.cap2.v, rep.end);
  CHECK(after.demand.sensor.value() == 0.0);
  CHECK(after.demand.zigbee.value() == 0.0);
}

TEST_CASE("cycle from 0.5 V browns out during transmit", "[power_mgmt]") {
  const NodeConfig cfg;
  auto n = booted(0.5);
  const auto rep = run_cycle(cfg, n.sm, n.conv2, n.cap2, Duration{1e-3});
  CHECK_FALSE(rep.success);
  CHECK_FALSE(rep.transmitted);
  REQUIRE(rep.brownout_phase);
  CHECK(*rep.brownout_phase == NodeState::Transmit);
  CHECK(n.sm.state == NodeState::Cold);
  CHECK_FALSE(n.sm.sensor_switch.closed);
  CHECK_FALSE(n.sm.zigbee_switch.closed);
  CHECK_FALSE(n.conv2.running);
  CHECK_THAT(rep.v_after.value(), WithinAbs(0.3, 0.01));
}

TEST_CASE("cycle from the voltage matching its actual draw ends at the floor", "[power_mgmt]") {
  const NodeConfig cfg;
  const double e_in = cycle_input_energy(cfg, 0.9);
  const double v_go = std::sqrt(0.3 * 0.3 + 2.0 * e_in) + 1e-4;
  auto n = booted(v_go);
  const auto rep = run_cycle(cfg, n.sm, n.conv2, n.cap2, Duration{1e-3});
  CHECK(rep.success);
  CHECK(rep.transmitted);
  CHECK_THAT(rep.v_after.value(), WithinAbs(0.30, 0.01));
}

TEST_CASE("cycle from the rounded-budget go voltage ends near the floor", "[power_mgmt]") {
  const NodeConfig cfg;
  const Voltage v_go = required_go_voltage(Energy{0.32}, Capacitance{1.0}, Voltage{0.3}, 0.9);
  auto n = booted(v_go.value());
  const auto rep = run_cycle(cfg, n.sm, n.conv2, n.cap2, Duration{1e-3});
  CHECK_THAT(rep.v_after.value(), WithinAbs(0.30, 0.01));
  // The full budget draws slightly more than the rounded 0.32 J, so this
  // start voltage cannot carry the converter to the end of the cycle.
  CHECK(cycle_input_energy(cfg, 0.9) > usable_energy(Capacitance{1.0}, v_go, Voltage{0.3}).value());
}

TEST_CASE("enable line stays high from boot to shutdown", "[power_mgmt]") {
  const NodeConfig cfg;
  for (double v0 : {0.45, 0.6, 0.9, 2.0, 4.0}) {
    auto n = booted(std::max(v0, 0.5));
    n.cap2.v = Voltage{v0};
    Duration t{0.0};
    for (int i = 0; i < 20000; ++i) {
      const auto r = node_step(cfg, n.sm, n.conv2, n.cap2.v, t);
      n.sm = r.sm;
      n.conv2 = r.conv2;
      if (is_cycle_state(n.sm.state)) {
        REQUIRE(n.sm.enable_line());
        REQUIRE(n.conv2.running);
      }
      if (n.sm.state == NodeState::Measure || n.sm.state == NodeState::Transmit) REQUIRE(n.conv2.running);
      if (!n.sm.sensor_switch.closed) REQUIRE(r.demand.sensor.value() == 0.0);
      if (!n.sm.zigbee_switch.closed) REQUIRE(r.demand.zigbee.value() == 0.0);
      if (n.cap2.v < cfg.monitor.v_min_operate) REQUIRE(r.demand.monitor.value() == 0.0);
      if (!is_cycle_state(n.sm.state)) break;
      n.cap2 = draw_demand(n.cap2, n.conv2, r.demand, PowerWatts{0.0}, Duration{1e-3}).first;
      t += Duration{1e-3};
    }
    CHECK_FALSE(is_cycle_state(n.sm.state));
  }
}

TEST_CASE("switch conduction loss", "[power_mgmt]") {
  LoadSwitch s;
  CHECK(s.conduction_loss(Current{35e-3}).value() == 0.0);
  s.closed = true;
  CHECK_THAT(s.conduction_loss(Current{35e-3}).value(), WithinRel(35e-3 * 35e-3 * 0.045, 1e-12));
  CHECK(s.conduction_loss(Current{35e-3}).value() <= 6e-5);
}

TEST_CASE("node state names", "[power_mgmt]") {
  CHECK(std::string(to_string(NodeState::Transmit)) == "transmit");
  CHECK(is_active_state(NodeState::Check));
  CHECK_FALSE(is_active_state(NodeState::Sleep));
  CHECK(is_cycle_state(NodeState::Shutdown));
  CHECK_FALSE(is_cycle_state(NodeState::Check));
}
