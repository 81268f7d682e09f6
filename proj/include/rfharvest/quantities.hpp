#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <limits>
#include <string>

#include "rfharvest/error.hpp"

namespace rfharvest {

// Linear SI quantity distinguished only by its tag type. Same-unit
// arithmetic is closed; cross-unit products are spelled out below so that
// only physically meaningful combinations compile.
template <class Tag>
class Quantity {
 public:
  constexpr Quantity() = default;
  constexpr explicit Quantity(double v) : value_(v) {}

  constexpr double value() const { return value_; }

  constexpr Quantity operator-() const { return Quantity{-value_}; }
  constexpr Quantity& operator+=(Quantity o) {
    value_ += o.value_;
    return *this;
  }
  constexpr Quantity& operator-=(Quantity o) {
    value_ -= o.value_;
    return *this;
  }
  constexpr Quantity& operator*=(double k) {
    value_ *= k;
    return *this;
  }

  friend constexpr Quantity operator+(Quantity a, Quantity b) { return Quantity{a.value_ + b.value_}; }
  friend constexpr Quantity operator-(Quantity a, Quantity b) { return Quantity{a.value_ - b.value_}; }
  friend constexpr Quantity operator*(Quantity a, double k) { return Quantity{a.value_ * k}; }
  friend constexpr Quantity operator*(double k, Quantity a) { return Quantity{a.value_ * k}; }
  friend constexpr Quantity operator/(Quantity a, double k) { return Quantity{a.value_ / k}; }
  friend constexpr double operator/(Quantity a, Quantity b) { return a.value_ / b.value_; }
  friend constexpr auto operator<=>(Quantity, Quantity) = default;

 private:
  double value_ = 0.0;
};

struct PowerTag {};
struct VoltageTag {};
struct CurrentTag {};
struct CapacitanceTag {};
struct EnergyTag {};
struct DurationTag {};
struct FrequencyTag {};
struct ResistanceTag {};

using PowerWatts = Quantity<PowerTag>;
using Voltage = Quantity<VoltageTag>;
using Current = Quantity<CurrentTag>;
using Capacitance = Quantity<CapacitanceTag>;
using Energy = Quantity<EnergyTag>;
using Duration = Quantity<DurationTag>;
using Frequency = Quantity<FrequencyTag>;
using Resistance = Quantity<ResistanceTag>;

constexpr PowerWatts operator*(Voltage v, Current i) { return PowerWatts{v.value() * i.value()}; }
constexpr PowerWatts operator*(Current i, Voltage v) { return v * i; }
constexpr Energy operator*(PowerWatts p, Duration t) { return Energy{p.value() * t.value()}; }
constexpr Energy operator*(Duration t, PowerWatts p) { return p * t; }
constexpr PowerWatts operator/(Energy e, Duration t) { return PowerWatts{e.value() / t.value()}; }
constexpr Duration operator/(Energy e, PowerWatts p) { return Duration{e.value() / p.value()}; }
constexpr Voltage operator*(Current i, Resistance r) { return Voltage{i.value() * r.value()}; }
constexpr Voltage operator*(Resistance r, Current i) { return i * r; }
constexpr Current operator/(Voltage v, Resistance r) { return Current{v.value() / r.value()}; }
constexpr Current operator/(PowerWatts p, Voltage v) { return Current{p.value() / v.value()}; }

inline constexpr double kSecondsPerDay = 86400.0;

constexpr double to_days(Duration t) { return t.value() / kSecondsPerDay; }

/// Power level in decibels referenced to one milliwatt. Only dB offsets are
/// meaningful arithmetic; everything else goes through dbm_to_watts.
class PowerDbm {
 public:
  constexpr PowerDbm() = default;
  constexpr explicit PowerDbm(double dbm) : value_(dbm) {}

  constexpr double value() const { return value_; }

  friend constexpr PowerDbm operator+(PowerDbm p, double db) { return PowerDbm{p.value_ + db}; }
  friend constexpr PowerDbm operator-(PowerDbm p, double db) { return PowerDbm{p.value_ - db}; }
  friend constexpr double operator-(PowerDbm a, PowerDbm b) { return a.value_ - b.value_; }
  friend constexpr auto operator<=>(PowerDbm, PowerDbm) = default;

 private:
  double value_ = 0.0;
};

inline PowerWatts dbm_to_watts(PowerDbm p) {
  if (!std::isfinite(p.value())) {
    throw InvalidQuantity("dbm_to_watts: power level must be finite");
  }
  return PowerWatts{std::pow(10.0, p.value() / 10.0) * 1e-3};
}

inline PowerDbm watts_to_dbm(PowerWatts p) {
  if (!(p.value() > 0.0)) {
    throw DomainError("watts_to_dbm: dBm is undefined for non-positive power");
  }
  return PowerDbm{10.0 * std::log10(p.value() / 1e-3)};
}

/// Stored energy of a capacitor, E = C V^2 / 2.
inline Energy cap_energy(Capacitance c, Voltage v) {
  if (!(c.value() > 0.0)) {
    throw InvalidQuantity("cap_energy: capacitance must be positive");
  }
  return Energy{0.5 * c.value() * (v.value() * v.value())};
}

/// Energy released when a capacitor discharges from v_hi down to v_lo.
inline Energy usable_energy(Capacitance c, Voltage v_hi, Voltage v_lo) {
  if (!(c.value() > 0.0)) {
    throw InvalidQuantity("usable_energy: capacitance must be positive");
  }
  if (v_lo.value() < 0.0 || v_hi < v_lo) {
    throw OrderingError("usable_energy: requires v_hi >= v_lo >= 0");
  }
  return Energy{0.5 * c.value() * (v_hi.value() * v_hi.value() - v_lo.value() * v_lo.value())};
}

/// Voltage at which a capacitor holds the given energy.
inline Voltage voltage_for_energy(Capacitance c, Energy e) {
  return Voltage{std::sqrt(std::max(0.0, 2.0 * e.value() / c.value()))};
}

}  // namespace rfharvest
