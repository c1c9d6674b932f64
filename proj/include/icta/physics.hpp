#pragma once

#include <complex>

namespace icta {

// Two-mode device: signal and idler resonators coupled through a DC-biased
// Josephson junction. Frequencies and linewidths in rad/s, impedances in
// ohm, Josephson energy in joule.
struct DeviceParams {
  double omega_s = 0.0;
  double omega_i = 0.0;
  double kappa_s = 0.0;
  double kappa_i = 0.0;
  double z_s = 0.0;
  double z_i = 0.0;
  double josephson_energy = 0.0;
  // Signal and idler share one physical mode.
  bool degenerate = false;

  // Throws DomainError on non-positive rates/impedances, negative E_J or an
  // inconsistent degenerate flag.
  void validate() const;

  // Convenience for a degenerate single-mode device.
  static DeviceParams single_mode(double omega, double kappa, double z, double ej = 0.0);
};

// Josephson frequency omega_J = 2eV/hbar of the DC bias.
struct BiasPoint {
  double omega_j = 0.0;

  static BiasPoint from_voltage(double volts);
  double voltage() const;
};

struct Detunings {
  double signal = 0.0;  // omega_in - omega_S
  double idler = 0.0;   // omega_J - omega_in - omega_I
};

// Which linewidth enters the Lorentzian gain profile. The two scenarios
// redefine both the detuning variable and the width, so callers choose.
enum class SweepKind {
  kSignal,  // signal frequency at optimal bias: 1/kappa = 1/kappa_S + 1/kappa_I
  kBias,    // Josephson frequency at Delta_S = 0: kappa = kappa_I
};

// Zero-point phase fluctuation sqrt(pi (4e^2/h) Z) of a mode with impedance Z.
double zero_point_phase(double impedance_ohm);

// Coupling lambda = E_J phi_S phi_I / (2 hbar), rad/s.
double coupling_rate(const DeviceParams& params);

// Dimensionless pump strength Xi = 2 lambda / sqrt(kappa_S kappa_I). Returned
// as is even when >= 1; gain routines reject that.
double coupling_xi(const DeviceParams& params);

// Josephson energy at which Xi = 1 (E_J field of `params` is ignored).
double ej_critical(const DeviceParams& params);

// Josephson energy giving the requested Xi.
double ej_for_xi(const DeviceParams& params, double xi);

Detunings detunings(double omega_in, BiasPoint bias, const DeviceParams& params);

// Reflection amplitude gain
//   g = (tau_S tau_I + Xi^2) / (tau_S^* tau_I - Xi^2),  tau_x = 1 + 2i Delta_x / kappa_x.
std::complex<double> amplitude_gain(const Detunings& det, double xi, const DeviceParams& params);

// Peak amplitude gain (1 + Xi^2)/(1 - Xi^2).
double max_gain(double xi);

// Inverse of max_gain: the Xi reaching amplitude gain g0 >= 1.
double xi_for_max_gain(double g0);

// High-gain Lorentzian profile g0 / (1 - i g0 delta / kappa_eff).
std::complex<double> lorentzian_gain_approx(double delta, double kappa_eff, double g0);

double kappa_eff(const DeviceParams& params, SweepKind kind);

// 3 dB full width 2 kappa_eff / g0 (signal bandwidth for kSignal, optimal
// bias range in omega_J for kBias).
double bandwidth_analytic(const DeviceParams& params, double g0,
                          SweepKind kind = SweepKind::kSignal);

// 20 log10 |g|.
double power_gain_db(std::complex<double> g);
double power_gain_db(double amplitude);

}  // namespace icta
