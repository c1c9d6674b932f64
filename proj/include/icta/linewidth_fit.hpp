#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "icta/bias_noise.hpp"
#include "icta/error.hpp"

namespace icta {

// Emission PSD measured at a fixed probe frequency while sweeping the bias,
// expressed as Josephson frequency.
struct SpectrumRecord {
  std::vector<double> omega_j;  // rad/s, strictly increasing
  std::vector<double> psd;      // linear power units
  std::vector<double> sigma;    // optional per-point uncertainty (empty = unweighted)
  double probe_omega = 0.0;     // rad/s
  std::string label;

  void validate() const;
};

// Peak-normalized Lorentzian: amplitude at the center, FWHM in rad/s.
struct FitComponent {
  double amplitude = 0.0;
  double center = 0.0;
  double fwhm = 0.0;
};

struct FitUncertainty {
  double amplitude = 0.0;
  double center = 0.0;
  double fwhm = 0.0;
};

struct FitResult {
  std::vector<FitComponent> components;
  double background = 0.0;
  std::vector<FitUncertainty> uncertainties;
  double background_uncertainty = 0.0;
  double residual_norm = 0.0;  // ||(model - psd)/sigma||_2
  bool converged = false;
  int iterations = 0;
  // Residual norm after every accepted step, starting with the seed.
  std::vector<double> residual_history;

  // b + sum_k A_k (w_k/2)^2 / ((x - c_k)^2 + (w_k/2)^2)
  double evaluate(double omega_j) const;

  // Mixture weights from component areas A_k w_k pi / 2; centers become
  // offsets from `reference` (usually the probe frequency).
  BiasDistribution to_distribution(double reference, double nominal) const;
};

// Raised when the fit fails; carries the best parameters reached.
class FitError : public NumericalError {
 public:
  FitError(const std::string& what, FitResult best)
      : NumericalError(what), best_(std::move(best)) {}
  const FitResult& best() const noexcept { return best_; }

 private:
  FitResult best_;
};

struct FitSeed {
  double background = 0.0;
  std::vector<FitComponent> components;
};

struct FitOptions {
  int max_iterations = 200;
  double step_tol = 1e-8;
  double residual_tol = 1e-10;
  double gradient_tol = 1e-12;
  // Three-component fits only: side peaks placed symmetrically about the
  // central one with a shared amplitude and width.
  bool symmetric_sides = false;
};

// Initial guess: background at min(psd); peaks at the largest local maxima of
// the 5-point median-smoothed data; one shared FWHM from the half-maximum
// crossings of the tallest peak, floored at two grid steps.
FitSeed seed_parameters(const SpectrumRecord& data, std::size_t n_components);

// Least-squares Lorentzian-mixture fit by Levenberg-Marquardt with
// log-parameterized amplitudes and widths.
FitResult fit_mixture(const SpectrumRecord& data, std::size_t n_components,
                      const FitOptions& opts = {});

// Bias-impedance temperature matching a Josephson linewidth (kelvin).
double effective_temperature(double fwhm, double z0_ohm);

}  // namespace icta
