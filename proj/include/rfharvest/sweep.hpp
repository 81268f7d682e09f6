#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "rfharvest/detail/text.hpp"
#include "rfharvest/engine.hpp"
#include "rfharvest/error.hpp"
#include "rfharvest/scenario.hpp"

namespace rfharvest {

struct SweepPoint {
  std::string value;
  SimResult result;
  Voltage v_oc;  // rectifier open-circuit output at the source's mean power
};

/// Expands "a,b,c" and "lo:hi:step" items (mixed freely) into values.
inline std::vector<std::string> parse_sweep_values(std::string_view spec) {
  std::vector<std::string> out;
  spec = detail::trim(spec);
  if (spec.empty()) return out;
  for (auto item : detail::split(spec, ',')) {
    item = detail::trim(item);
    if (item.empty()) continue;
    const auto parts = detail::split(item, ':');
    if (parts.size() == 1) {
      out.emplace_back(item);
      continue;
    }
    if (parts.size() != 3) throw ConfigError(fmt::format("bad sweep range '{}', expected lo:hi:step", item));
    const auto lo = detail::parse_double(parts[0]);
    const auto hi = detail::parse_double(parts[1]);
    const auto step = detail::parse_double(parts[2]);
    if (!lo || !hi || !step || !std::isfinite(*lo) || !std::isfinite(*hi) || !(*step != 0.0)) {
      throw ConfigError(fmt::format("bad sweep range '{}'", item));
    }
    const double n = std::floor((*hi - *lo) / *step + 1e-9);
    for (long long k = 0; k <= static_cast<long long>(n); ++k) {
      const double v = *lo + static_cast<double>(k) * *step;
      out.push_back(fmt::format("{}", std::abs(v) < 1e-12 * std::abs(*step) ? 0.0 : v));
    }
  }
  return out;
}

inline Voltage mean_power_open_circuit(const Scenario& s) {
  const auto model = build_source(s.source, s.seed);
  const Duration horizon = s.engine.t_end;
  // Sample on the dwell grid (or 1 s) with a cap on the number of points.
  const double dt = std::max(horizon.value() / 1e5, 1.0);
  const PowerWatts p = mean_power_watts(model, horizon, Duration{dt});
  return evaluate_frontend(s.frontend, p).out.v_oc;
}

/// One run per value, each on its own copy of the template; results keep
/// the input order.
inline std::vector<SweepPoint> sweep(const Scenario& base, const std::string& key,
                                     const std::vector<std::string>& values, bool parallel = true) {
  if (!find_key(key)) throw ConfigError(fmt::format("unknown sweep key '{}'", key));
  std::vector<Scenario> scenarios;
  scenarios.reserve(values.size());
  for (const auto& v : values) {
    Scenario s = base;
    set_scenario_value(s, key, v);
    validate(s);
    scenarios.push_back(std::move(s));
  }
  auto one = [](const Scenario& s, const std::string& v) {
    SweepPoint p;
    p.value = v;
    p.result = run(s);
    p.v_oc = mean_power_open_circuit(s);
    return p;
  };
  std::vector<SweepPoint> out(values.size());
  const std::size_t workers =
      parallel ? std::min<std::size_t>(values.size(), std::max(1u, std::thread::hardware_concurrency())) : 0;
  if (workers > 1) {
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> jobs;
    for (std::size_t w = 0; w < workers; ++w) {
      jobs.push_back(std::async(std::launch::async, [&] {
        for (std::size_t i = next++; i < values.size(); i = next++) out[i] = one(scenarios[i], values[i]);
      }));
    }
    for (auto& j : jobs) j.get();
  } else {
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = one(scenarios[i], values[i]);
  }
  return out;
}

inline constexpr const char* kSweepHeader = "value,time_to_first_tx_s,transmissions,final_v2,e_harvested_j,v_oc_v";

inline std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::string out = std::string(kSweepHeader) + "\n";
  for (const auto& p : points) {
    const auto& r = p.result;
    const std::string t = r.time_to_first_transmission ? fmt::format("{:.3f}", r.time_to_first_transmission->value()) : "";
    out += fmt::format("{},{},{},{:.6g},{:.5g},{:.6g}\n", p.value, t, r.transmissions, r.v_cap2.value(),
                       r.ledger.harvested.value(), p.v_oc.value());
  }
  return out;
}

}  // namespace rfharvest
