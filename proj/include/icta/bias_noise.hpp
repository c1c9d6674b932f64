#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "icta/physics.hpp"
#include "icta/quadrature.hpp"
#include "icta/units.hpp"

namespace icta {

// One Lorentzian line of the Josephson-frequency distribution. `center` is
// the offset from the nominal bias, `fwhm` the full width at half maximum
// (both rad/s). A zero width is a point mass.
struct LorentzianComponent {
  double weight = 1.0;
  double center = 0.0;
  double fwhm = 0.0;
};

// Normalized Lorentzian mixture over omega_J around a nominal bias.
class BiasDistribution {
 public:
  // Weights must already sum to 1 within 1e-9.
  BiasDistribution(std::vector<LorentzianComponent> components, double nominal);

  // Rescales the weights to sum to 1.
  static BiasDistribution normalized(std::vector<LorentzianComponent> components,
                                     double nominal);
  static BiasDistribution single(double fwhm, double nominal, double center = 0.0);
  static BiasDistribution point(double nominal) { return single(0.0, nominal); }

  const std::vector<LorentzianComponent>& components() const noexcept { return components_; }
  double nominal() const noexcept { return nominal_; }
  bool is_point_mass() const noexcept;
  // Same shape around a different nominal bias.
  BiasDistribution recentered(double nominal) const;

  // Probability density in s/rad at absolute Josephson frequency omega_j.
  // A point-mass component contributes +inf at its center and 0 elsewhere.
  double density(double omega_j) const;

 private:
  std::vector<LorentzianComponent> components_;
  double nominal_;
};

// FWHM 2 k_B T (4e^2/hbar^2) Z0 of the thermally broadened Josephson line.
double fwhm_from_thermal(double temperature_k, double z0_ohm);
// Inverse of fwhm_from_thermal.
double temperature_from_fwhm(double fwhm, double z0_ohm);

// Bias-noise averaged response at one signal frequency.
struct AveragedResponse {
  double omega_in = 0.0;
  std::complex<double> mean_gain;  // <g>
  double mean_power = 1.0;         // <|g|^2>
  double gain_eff = 1.0;           // |<g>|^2
  double noise_out = 0.0;          // <|g|^2> - 1, photons
  double noise_ratio = 0.0;        // noise_out / (gain_eff - 1); NaN when gain_eff <= 1
  std::size_t panels = 0;          // quadrature panels used
};

// Noise ratio with the not-applicable sentinel (NaN) at gain_eff <= 1.
double noise_ratio(double noise_out, double gain_eff);

struct AveragingOptions {
  quadrature::AdaptiveOptions quadrature{};
};

// Adiabatic average of the instantaneous gain over the bias distribution.
AveragedResponse averaged_response(const DeviceParams& params, double xi, double omega_in,
                                   const BiasDistribution& dist,
                                   const AveragingOptions& opts = {});

// One averaged_response per grid point, in grid order. Grid must be sorted.
std::vector<AveragedResponse> frequency_sweep(const DeviceParams& params, double xi,
                                              const BiasDistribution& dist,
                                              std::span<const double> omega_grid,
                                              const AveragingOptions& opts = {});

// Full width where y >= max(y)/2, by linear interpolation between bracketing
// samples. Throws RangeError if the maximum sits on the edge or a side never
// drops below half.
double half_max_width(std::span<const double> x, std::span<const double> y);

// 3 dB bandwidth (rad/s) of the effective power gain along a sweep.
double extract_bandwidth(std::span<const AveragedResponse> curve);

struct TradeoffPoint {
  double xi = 0.0;
  AveragedResponse response;  // at the gain-maximizing signal frequency
  double gain_db = 0.0;
  double bandwidth = 0.0;  // rad/s; NaN when no 3 dB crossing inside the band
};

struct TradeoffOptions {
  AveragingOptions averaging{};
  double omega_tol = units::kTwoPi * 1e3;  // 1 kHz
  std::size_t bandwidth_points = 401;
};

// Signal frequency maximizing |<g>|^2 over [omega_S - kappa_S, omega_S + kappa_S]:
// coarse scan followed by golden-section refinement.
AveragedResponse optimal_response(const DeviceParams& params, double xi,
                                  const BiasDistribution& dist,
                                  const TradeoffOptions& opts = {});

// Numerical 3 dB bandwidth around an already located optimum.
double averaged_bandwidth(const DeviceParams& params, double xi, const BiasDistribution& dist,
                         const AveragedResponse& optimum, const TradeoffOptions& opts = {});

TradeoffPoint tradeoff_point(const DeviceParams& params, double xi,
                             const BiasDistribution& dist, const TradeoffOptions& opts = {});

// Gain, bandwidth and noise ratio along a Xi grid, sorted by effective gain.
std::vector<TradeoffPoint> gain_noise_tradeoff(const DeviceParams& params,
                                               const BiasDistribution& dist,
                                               std::span<const double> xi_grid,
                                               const TradeoffOptions& opts = {});

// Xi at which the optimal effective gain equals `gain_db` (bisection).
double xi_for_effective_gain(const DeviceParams& params, const BiasDistribution& dist,
                             double gain_db, const TradeoffOptions& opts = {});

// Largest optimal effective gain whose noise ratio stays <= r_max, found by
// bisection on Xi in [0, xi_max]. Returns the operating point at the crossing
// (or at xi_max when the ratio never exceeds r_max).
TradeoffPoint max_gain_within_noise_ratio(const DeviceParams& params,
                                          const BiasDistribution& dist, double r_max,
                                          double xi_max = 0.9999,
                                          const TradeoffOptions& opts = {});

struct MonteCarloResult {
  AveragedResponse response;
  std::size_t samples = 0;
  // Standard errors of Re<g>, Im<g>, <|g|^2>, and (delta method) gain_eff.
  double se_mean_re = 0.0;
  double se_mean_im = 0.0;
  double se_mean_power = 0.0;
  double se_gain_eff = 0.0;
};

// Independent check of averaged_response: inverse-CDF sampling of the mixture
// (component by weight, then center + fwhm/2 tan(pi (u - 1/2))). Bit-identical
// for a given seed.
MonteCarloResult monte_carlo_oracle(const DeviceParams& params, double xi, double omega_in,
                                    const BiasDistribution& dist, std::size_t n_samples,
                                    std::uint64_t seed);

}  // namespace icta
