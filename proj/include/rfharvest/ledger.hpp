#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "rfharvest/quantities.hpp"

namespace rfharvest {

/// Attribution of every joule that crossed the storage boundary during a run.
/// The upstream RF terms are informational; the balance starts at the
/// rectifier output (`harvested`).
struct EnergyLedger {
  Energy rf_available{0.0};
  Energy reflected{0.0};
  Energy rf_delivered{0.0};

  Energy harvested{0.0};
  Energy leaked_cap1{0.0};
  Energy leaked_cap2{0.0};
  Energy converter1_loss{0.0};
  Energy converter2_loss{0.0};

  Energy load_monitor{0.0};
  Energy load_controller{0.0};
  Energy load_sensor{0.0};
  Energy load_zigbee{0.0};
  Energy load_switches{0.0};

  Energy stored_initial{0.0};
  Energy stored_delta{0.0};

  Energy leaked() const { return leaked_cap1 + leaked_cap2; }
  Energy converter_loss() const { return converter1_loss + converter2_loss; }
  Energy rectifier_loss() const { return rf_delivered - harvested; }
  Energy total_load() const { return load_monitor + load_controller + load_sensor + load_zigbee + load_switches; }

  std::map<std::string, Energy> load_by_component() const {
    return {{"monitor", load_monitor},
            {"controller", load_controller},
            {"sensor", load_sensor},
            {"zigbee", load_zigbee},
            {"switches", load_switches}};
  }

  Energy residual() const { return harvested - leaked() - converter_loss() - total_load() - stored_delta; }

  // Relative tolerances are taken against the largest energy involved, so a
  // run that only drains a precharged capacitor still has a sensible scale.
  Energy scale() const {
    const double outflow = (leaked() + converter_loss() + total_load()).value();
    return Energy{std::max({harvested.value(), stored_initial.value(), outflow, 1e-12})};
  }

  bool balanced(double rel_tol = 1e-6) const { return std::abs(residual().value()) <= rel_tol * scale().value(); }
};

}  // namespace rfharvest
