#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "rfharvest/engine.hpp"
#include "rfharvest/power_mgmt.hpp"
#include "rfharvest/quantities.hpp"
#include "rfharvest/scenario.hpp"

namespace rfharvest {

/// Fixed-point text rounded half away from zero. Plain printf rounding works
/// on the binary value, which turns 0.009075 into 0.00907.
inline std::string fixed_half_up(double x, int places) {
  const double k = std::pow(10.0, places);
  const double r = std::round(x * k * (1.0 + 1e-12)) / k;
  return fmt::format("{:.{}f}", r, places);
}

inline std::string budget_table(const NodeProfiles& profiles) {
  std::string out;
  out += fmt::format("{:<12} {:>6} {:>8} {:>6} {:>9}\n", "Device", "V (V)", "I (mA)", "T (s)", "E (J)");
  for (const auto& p : profiles.list()) {
    out += fmt::format("{:<12} {:>6} {:>8} {:>6} {:>9}\n", p.name, fmt::format("{:g}", p.v.value()),
                       fmt::format("{:g}", p.i.value() * 1e3), fmt::format("{:g}", p.t.value()),
                       fixed_half_up(p.energy().value(), 5));
  }
  const Energy total = cycle_energy(profiles.list());
  out += fmt::format("{:<12} {:>6} {:>8} {:>6} {:>9}  ({} J)\n", "Total", "", "", "", fixed_half_up(total.value(), 5),
                     fixed_half_up(total.value(), 2));
  return out;
}

inline std::string format_duration(Duration t) {
  return fmt::format("{:.1f} s ({:.2f} days)", t.value(), to_days(t));
}

/// Why the report disagrees with the 11.7-day figure usually quoted for this
/// node: that figure does not follow from the stated 0.32 J and -37 dBm.
inline std::string harvest_time_note(Energy target, PowerDbm level) {
  const PowerWatts p = dbm_to_watts(level);
  const Duration t = target / p;
  const Duration quoted{11.7 * kSecondsPerDay};
  const Energy e_quoted = p * quoted;
  const PowerDbm p_quoted = watts_to_dbm(target / quoted);
  return fmt::format(
      "note: collecting {:.2f} J at a constant {:g} dBm ({:.4g} W) takes {:.4g} s = {:.2f} days.\n"
      "      The often-quoted 11.7 days is inconsistent with those inputs: in 11.7 days {:g} dBm\n"
      "      delivers only {:.3f} J, and collecting {:.2f} J in 11.7 days needs {:.1f} dBm.\n",
      target.value(), level.value(), p.value(), t.value(), to_days(t), level.value(), e_quoted.value(),
      target.value(), p_quoted.value());
}

inline std::string ledger_table(const EnergyLedger& L) {
  std::string out;
  auto row = [&](const std::string& name, Energy e) { out += fmt::format("  {:<22} {:>12.5g} J\n", name, e.value()); };
  row("rf available", L.rf_available);
  row("reflected", L.reflected);
  row("rf delivered", L.rf_delivered);
  row("rectifier loss", L.rectifier_loss());
  row("harvested", L.harvested);
  row("leaked cap1", L.leaked_cap1);
  row("leaked cap2", L.leaked_cap2);
  row("converter1 loss", L.converter1_loss);
  row("converter2 loss", L.converter2_loss);
  for (const auto& [name, e] : L.load_by_component()) row("load " + name, e);
  row("stored (initial)", L.stored_initial);
  row("stored delta", L.stored_delta);
  out += fmt::format("  {:<22} {:>12.3g} J (tolerance {:.3g} J)\n", "residual", L.residual().value(),
                     1e-6 * L.scale().value());
  return out;
}

inline std::string run_report(const LoadedScenario& ls, const SimResult& r, const Engine& engine) {
  const auto& s = ls.scenario;
  std::string out;
  out += fmt::format("scenario: {}\n\n", ls.path);
  out += "power budget\n";
  out += budget_table(s.management.node.profiles);
  out += "\nrun summary\n";
  out += fmt::format("  simulated time          {}\n", format_duration(r.t_final));
  out += fmt::format("  steps                   {}\n", r.steps);
  if (r.time_to_first_transmission) {
    out += fmt::format("  first transmission      {}\n", format_duration(*r.time_to_first_transmission));
  } else {
    out += "  first transmission      none\n";
  }
  out += fmt::format("  transmissions           {}\n", r.transmissions);
  out += fmt::format("  cycles started/done     {}/{} (brown-outs {})\n", r.cycles_started, r.cycles_completed,
                     r.brownouts);
  if (s.engine.until_joules) {
    out += fmt::format("  {:<24}{}\n", fmt::format("time to store {:.5g} J", s.engine.until_joules->value()),
                       r.time_to_target_energy ? format_duration(*r.time_to_target_energy) : std::string("not reached"));
  }
  out += fmt::format("  final v_cap1            {:.4f} V\n", r.v_cap1.value());
  out += fmt::format("  final v_cap2            {:.4f} V\n", r.v_cap2.value());
  if (s.management.enabled) {
    out += fmt::format("  go threshold            {:.4f} V\n", engine.node_config().monitor.go_threshold.value());
  }
  if (r.t_final.value() > 0.0) {
    out += fmt::format("  mean harvested power    {:.4g} W\n", r.ledger.harvested.value() / r.t_final.value());
  }
  out += "\nenergy ledger\n";
  out += ledger_table(r.ledger);

  if (s.engine.until_joules && s.source.kind == SourceKind::Constant) {
    out += "\n" + harvest_time_note(*s.engine.until_joules, s.source.level);
  }
  if (!r.diagnostics.empty()) {
    out += "\nwarnings\n";
    for (const auto& d : r.diagnostics) out += "  " + d + "\n";
  }

  out += "\nassumptions (values not set by the scenario file)\n";
  for (const auto& a : assumptions(ls)) {
    out += fmt::format("  {:<36} = {:<16} [{}]\n", a.key, a.value, a.source);
  }
  return out;
}

}  // namespace rfharvest
