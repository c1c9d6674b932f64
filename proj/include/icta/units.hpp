#pragma once

#include <numbers>

namespace icta {

// CODATA 2018 exact SI values.
namespace constants {
inline constexpr double kPlanck = 6.62607015e-34;          // J s
inline constexpr double kHbar = kPlanck / (2.0 * std::numbers::pi);  // J s
inline constexpr double kElementaryCharge = 1.602176634e-19;  // C
inline constexpr double kBoltzmann = 1.380649e-23;          // J/K
}  // namespace constants

// Internally every frequency is angular (rad/s); the outside world speaks MHz.
namespace units {
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double mhz_to_rad(double mhz) { return mhz * 1e6 * kTwoPi; }
constexpr double rad_to_mhz(double rad_per_s) { return rad_per_s / kTwoPi / 1e6; }
constexpr double mk_to_kelvin(double mk) { return mk * 1e-3; }
constexpr double kelvin_to_mk(double kelvin) { return kelvin * 1e3; }

// Energy E expressed as E/h in MHz.
constexpr double joule_to_mhz(double joule) { return joule / constants::kPlanck / 1e6; }
constexpr double mhz_to_joule(double mhz) { return mhz * 1e6 * constants::kPlanck; }
}  // namespace units

}  // namespace icta
