#include "icta/physics.hpp"

#include <cmath>
#include <string>

#include "icta/error.hpp"
#include "icta/units.hpp"

namespace icta {

namespace {

void require_xi(double xi) {
  if (!(xi >= 0.0)) throw DomainError("Xi must be non-negative, got " + std::to_string(xi));
  if (xi >= 1.0)
    throw DivergenceError("gain diverges for Xi >= 1 (got " + std::to_string(xi) + ")");
}

}  // namespace

void DeviceParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw DomainError(std::string(name) + " must be strictly positive");
  };
  positive(omega_s, "omega_s");
  positive(omega_i, "omega_i");
  positive(kappa_s, "kappa_s");
  positive(kappa_i, "kappa_i");
  positive(z_s, "z_s");
  positive(z_i, "z_i");
  if (!(josephson_energy >= 0.0)) throw DomainError("josephson_energy must be >= 0");
  if (degenerate && (omega_s != omega_i || kappa_s != kappa_i || z_s != z_i))
    throw DomainError("degenerate device requires identical signal and idler parameters");
}

DeviceParams DeviceParams::single_mode(double omega, double kappa, double z, double ej) {
  DeviceParams p{omega, omega, kappa, kappa, z, z, ej, true};
  p.validate();
  return p;
}

BiasPoint BiasPoint::from_voltage(double volts) {
  return {2.0 * constants::kElementaryCharge * volts / constants::kHbar};
}

double BiasPoint::voltage() const {
  return omega_j * constants::kHbar / (2.0 * constants::kElementaryCharge);
}

double zero_point_phase(double impedance_ohm) {
  if (!(impedance_ohm >= 0.0))
    throw DomainError("impedance must be non-negative, got " + std::to_string(impedance_ohm));
  const double e = constants::kElementaryCharge;
  return std::sqrt(std::numbers::pi * (4.0 * e * e / constants::kPlanck) * impedance_ohm);
}

double coupling_rate(const DeviceParams& params) {
  return params.josephson_energy * zero_point_phase(params.z_s) * zero_point_phase(params.z_i) /
         (2.0 * constants::kHbar);
}

double coupling_xi(const DeviceParams& params) {
  params.validate();
  return 2.0 * coupling_rate(params) / std::sqrt(params.kappa_s * params.kappa_i);
}

double ej_critical(const DeviceParams& params) {
  params.validate();
  return constants::kHbar * std::sqrt(params.kappa_s * params.kappa_i) /
         (zero_point_phase(params.z_s) * zero_point_phase(params.z_i));
}

double ej_for_xi(const DeviceParams& params, double xi) {
  if (!(xi >= 0.0)) throw DomainError("Xi must be non-negative");
  return xi * ej_critical(params);
}

Detunings detunings(double omega_in, BiasPoint bias, const DeviceParams& params) {
  return {omega_in - params.omega_s, bias.omega_j - omega_in - params.omega_i};
}

std::complex<double> amplitude_gain(const Detunings& det, double xi, const DeviceParams& params) {
  require_xi(xi);
  using namespace std::complex_literals;
  const std::complex<double> tau_s = 1.0 + 2.0i * det.signal / params.kappa_s;
  const std::complex<double> tau_i = 1.0 + 2.0i * det.idler / params.kappa_i;
  const double xi2 = xi * xi;
  return (tau_s * tau_i + xi2) / (std::conj(tau_s) * tau_i - xi2);
}

double max_gain(double xi) {
  require_xi(xi);
  const double xi2 = xi * xi;
  return (1.0 + xi2) / (1.0 - xi2);
}

double xi_for_max_gain(double g0) {
  if (!(g0 >= 1.0)) throw DomainError("amplitude gain must be >= 1");
  if (std::isinf(g0)) throw DivergenceError("infinite gain requires Xi = 1");
  return std::sqrt((g0 - 1.0) / (g0 + 1.0));
}

std::complex<double> lorentzian_gain_approx(double delta, double kappa_eff, double g0) {
  if (!(kappa_eff > 0.0)) throw DomainError("kappa_eff must be positive");
  if (!(g0 >= 1.0)) throw DomainError("g0 must be >= 1");
  using namespace std::complex_literals;
  return g0 / (1.0 - 1.0i * g0 * delta / kappa_eff);
}

double kappa_eff(const DeviceParams& params, SweepKind kind) {
  params.validate();
  if (kind == SweepKind::kBias) return params.kappa_i;
  return 1.0 / (1.0 / params.kappa_s + 1.0 / params.kappa_i);
}

double bandwidth_analytic(const DeviceParams& params, double g0, SweepKind kind) {
  if (!(g0 > 1.0)) throw DomainError("bandwidth is undefined for g0 <= 1");
  return 2.0 * kappa_eff(params, kind) / g0;
}

double power_gain_db(std::complex<double> g) { return 20.0 * std::log10(std::abs(g)); }
double power_gain_db(double amplitude) { return 20.0 * std::log10(std::abs(amplitude)); }

}  // namespace icta
