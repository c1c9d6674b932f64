#pragma once

#include <span>
#include <string>
#include <vector>

namespace icta {

enum class LoadLabel { kHot, kCold, kShort, kDeviceOn, kDeviceOff, kDeviceSuperconducting };

const char* to_string(LoadLabel label);

// Power measured by the readout chain versus frequency (rad/s), arbitrary
// linear units. `temperature` (K) is meaningful for the hot and cold loads.
struct LoadSpectrum {
  std::vector<double> omega;
  std::vector<double> power;
  double temperature = 0.0;
  LoadLabel label = LoadLabel::kCold;

  void validate() const;
};

// Readout chain referred to the microwave switch: P = gain * (n_load + noise).
struct CalibrationChain {
  std::vector<double> omega;
  std::vector<double> gain;   // power units per photon
  std::vector<double> noise;  // photons
  // One-way power transmission of the switch-to-device line, 0 < A <= 1.
  double attenuation = 1.0;
};

// Thermal occupancy including the vacuum half photon.
double planck_occupancy(double temperature_k, double omega);

// Two-load Y-factor inversion, exact for the linear model above.
CalibrationChain y_factor(const LoadSpectrum& hot, const LoadSpectrum& cold);

struct AttenuationResult {
  std::vector<double> per_frequency;  // one-way power transmission
  double linear = 1.0;                // band-mean transmission
  double loss_db = 0.0;               // band-mean one-way loss, positive dB
  double max_deviation_db = 0.0;
  bool flat = true;
  std::string warning;  // set when the flatness check fails
};

// The round trip through the line attenuates twice, so the one-way
// transmission is sqrt(gain_to_device / gain_to_switch).
AttenuationResult line_attenuation(std::span<const double> gain_to_device,
                                   std::span<const double> gain_to_switch,
                                   double flatness_db = 0.2);

// Same, from the device-off reflection and the switch short reflection.
AttenuationResult line_attenuation(const LoadSpectrum& device_off, const LoadSpectrum& short_ref,
                                   double flatness_db = 0.2);

// Device power gain referenced to the off state, P_on / P_off.
std::vector<double> referenced_gain(const LoadSpectrum& on, const LoadSpectrum& off);

struct OutputNoise {
  std::vector<double> photons;
  std::vector<std::string> warnings;
};

// Excess output noise of the device in photons: (P_on - P_sc) / (G_chain A).
// Values down to -0.05 photons are clipped to 0 with a warning.
OutputNoise device_output_noise(const LoadSpectrum& on, const LoadSpectrum& superconducting,
                                const CalibrationChain& chain);

struct CalibrationInputs {
  LoadSpectrum hot, cold, short_ref;
  LoadSpectrum device_on, device_off;       // with input tone
  LoadSpectrum device_on_noise, device_sc;  // no input tone
  double flatness_db = 0.2;
};

struct CalibratedDevice {
  CalibrationChain chain;
  AttenuationResult attenuation;
  std::vector<double> gain;         // linear power gain
  OutputNoise noise;                // photons at the device output
  std::vector<double> noise_ratio;  // relative to |g|^2 - 1; NaN where gain <= 1
};

// Y-factor -> line attenuation -> referenced gain -> output noise -> ratio.
// Errors carry the name of the failing stage.
CalibratedDevice calibrate_device(const CalibrationInputs& in);

}  // namespace icta
