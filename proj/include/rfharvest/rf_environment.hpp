#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <string>
#include <variant>
#include <vector>

#include "rfharvest/detail/text.hpp"
#include "rfharvest/error.hpp"
#include "rfharvest/quantities.hpp"

namespace rfharvest {

struct ConstantSource {
  PowerDbm level{-37.0};
};

/// Piecewise-constant level drawn uniformly in dBm once per dwell window.
struct BoundedFluctuation {
  PowerDbm lo{-43.0};
  PowerDbm hi{-33.0};
  Duration dwell{60.0};
  std::uint64_t seed = 0;
};

struct TraceSample {
  Duration t;
  PowerDbm level;
};

struct TracePlayback {
  std::vector<TraceSample> samples;
  bool hold_last = true;
};

using RfSourceModel = std::variant<ConstantSource, BoundedFluctuation, TracePlayback>;

struct AntennaPreset {
  std::string name;
  RfSourceModel model;
};

namespace detail {

// splitmix64 finalizer; a keyed hash of (seed, window) gives a counter-based
// stream so any window can be sampled without generating its predecessors.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr double unit_interval(std::uint64_t seed, std::uint64_t counter) {
  const std::uint64_t bits = mix64(seed ^ mix64(counter));
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace detail

inline void validate(const RfSourceModel& model) {
  std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ConstantSource>) {
          if (!std::isfinite(m.level.value())) throw InvalidQuantity("constant source level must be finite");
        } else if constexpr (std::is_same_v<T, BoundedFluctuation>) {
          if (!std::isfinite(m.lo.value()) || !std::isfinite(m.hi.value()))
            throw InvalidQuantity("fluctuation bounds must be finite");
          if (m.hi < m.lo) throw OrderingError("fluctuation requires lo <= hi");
          if (!(m.dwell.value() > 0.0)) throw InvalidQuantity("fluctuation dwell must be positive");
        } else {
          if (m.samples.empty()) throw InvalidQuantity("trace playback needs at least one sample");
          for (std::size_t i = 1; i < m.samples.size(); ++i) {
            if (!(m.samples[i - 1].t < m.samples[i].t))
              throw OrderingError("trace timestamps must be strictly increasing");
          }
        }
      },
      model);
}

inline PowerDbm sample_power(const ConstantSource& m, Duration) { return m.level; }

inline PowerDbm sample_power(const BoundedFluctuation& m, Duration t) {
  const auto window = static_cast<std::uint64_t>(std::floor(t.value() / m.dwell.value()));
  const double u = detail::unit_interval(m.seed, window);
  return PowerDbm{std::min(m.hi.value(), m.lo.value() + (m.hi.value() - m.lo.value()) * u)};
}

inline PowerDbm sample_power(const TracePlayback& m, Duration t) {
  const auto& s = m.samples;
  if (t < s.front().t) throw OutOfTrace("time precedes the first trace sample");
  if (!m.hold_last && t > s.back().t) throw OutOfTrace("time is beyond the end of the trace");
  // Last sample whose timestamp is <= t.
  auto it = std::upper_bound(s.begin(), s.end(), t, [](Duration lhs, const TraceSample& x) { return lhs < x.t; });
  return std::prev(it)->level;
}

inline PowerDbm sample_power(const RfSourceModel& model, Duration t) {
  if (t.value() < 0.0) throw DomainError("sample_power: time must be non-negative");
  return std::visit([t](const auto& m) { return sample_power(m, t); }, model);
}

/// Mean of the linear power over the grid 0, dt, 2dt, ... < horizon.
inline PowerWatts mean_power_watts(const RfSourceModel& model, Duration horizon, Duration dt) {
  if (!(horizon.value() > 0.0) || !(dt.value() > 0.0)) {
    throw InvalidQuantity("mean_power_watts: horizon and dt must be positive");
  }
  const auto n = static_cast<std::uint64_t>(std::ceil(horizon.value() / dt.value()));
  double sum = 0.0;
  for (std::uint64_t k = 0; k < n; ++k) {
    sum += dbm_to_watts(sample_power(model, Duration{static_cast<double>(k) * dt.value()})).value();
  }
  return PowerWatts{sum / static_cast<double>(n)};
}

inline std::vector<AntennaPreset> antenna_presets() {
  return {
      {"monopole", ConstantSource{PowerDbm{-50.0}}},
      {"ribbon_dipole", BoundedFluctuation{PowerDbm{-43.0}, PowerDbm{-33.0}, Duration{60.0}, 0}},
  };
}

inline AntennaPreset antenna_preset(const std::string& name) {
  for (auto& p : antenna_presets()) {
    if (p.name == name) return p;
  }
  throw ConfigError("unknown antenna preset '" + name + "'");
}

/// Reads a `time_s,power_dbm` CSV with a mandatory header row.
inline TracePlayback load_trace_csv(std::istream& in, bool hold_last, const std::string& where = "<trace>") {
  TracePlayback trace;
  trace.hold_last = hold_last;
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    if (!header_seen) {
      if (body != "time_s,power_dbm") throw ParseError(where, lineno, "expected header 'time_s,power_dbm'");
      header_seen = true;
      continue;
    }
    const auto cols = detail::split(body, ',');
    if (cols.size() != 2) throw ParseError(where, lineno, "expected two columns");
    const auto t = detail::parse_double(cols[0]);
    const auto p = detail::parse_double(cols[1]);
    if (!t || !p || !std::isfinite(*t) || !std::isfinite(*p)) throw ParseError(where, lineno, "non-numeric field");
    if (!trace.samples.empty() && !(trace.samples.back().t.value() < *t))
      throw ParseError(where, lineno, "timestamps must be strictly increasing");
    trace.samples.push_back({Duration{*t}, PowerDbm{*p}});
  }
  if (!header_seen) throw ParseError(where, lineno, "missing header 'time_s,power_dbm'");
  if (trace.samples.empty()) throw ParseError(where, lineno, "trace has no samples");
  return trace;
}

inline TracePlayback load_trace_file(const std::string& path, bool hold_last) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file '" + path + "'");
  return load_trace_csv(in, hold_last, path);
}

}  // namespace rfharvest
