#include "icta/calibration.hpp"

#include <cmath>
#include <sstream>

#include "icta/bias_noise.hpp"
#include "icta/error.hpp"
#include "icta/units.hpp"

namespace icta {

const char* to_string(LoadLabel label) {
  switch (label) {
    case LoadLabel::kHot: return "hot";
    case LoadLabel::kCold: return "cold";
    case LoadLabel::kShort: return "short";
    case LoadLabel::kDeviceOn: return "device_on";
    case LoadLabel::kDeviceOff: return "device_off";
    case LoadLabel::kDeviceSuperconducting: return "device_superconducting";
  }
  return "unknown";
}

void LoadSpectrum::validate() const {
  if (omega.empty()) throw DomainError(std::string(to_string(label)) + " spectrum is empty");
  if (omega.size() != power.size())
    throw DomainError(std::string(to_string(label)) + " spectrum: length mismatch");
  if ((label == LoadLabel::kHot || label == LoadLabel::kCold) && !(temperature > 0.0))
    throw DomainError(std::string(to_string(label)) + " load temperature must be positive");
  for (std::size_t k = 0; k < omega.size(); ++k)
    if (!std::isfinite(power[k]) || !(omega[k] > 0.0))
      throw DomainError(std::string(to_string(label)) + " spectrum: invalid sample " +
                        std::to_string(k));
}

namespace {

void require_same_grid(const LoadSpectrum& a, const LoadSpectrum& b) {
  a.validate();
  b.validate();
  if (a.omega.size() != b.omega.size())
    throw DomainError(std::string("frequency grids of ") + to_string(a.label) + " and " +
                      to_string(b.label) + " differ in length");
  for (std::size_t k = 0; k < a.omega.size(); ++k)
    if (a.omega[k] != b.omega[k]) {
      std::ostringstream msg;
      msg << "frequency grids of " << to_string(a.label) << " and " << to_string(b.label)
          << " differ at index " << k << " (" << units::rad_to_mhz(a.omega[k]) << " vs "
          << units::rad_to_mhz(b.omega[k]) << " MHz)";
      throw DomainError(msg.str());
    }
}

std::string at_mhz(double omega) {
  std::ostringstream s;
  s << units::rad_to_mhz(omega) << " MHz";
  return s.str();
}

}  // namespace

double planck_occupancy(double temperature_k, double omega) {
  if (!(temperature_k >= 0.0)) throw DomainError("temperature must be non-negative");
  if (!(omega > 0.0)) throw DomainError("frequency must be positive");
  if (temperature_k == 0.0) return 0.5;
  const double x = constants::kHbar * omega / (constants::kBoltzmann * temperature_k);
  return 1.0 / std::expm1(x) + 0.5;
}

CalibrationChain y_factor(const LoadSpectrum& hot, const LoadSpectrum& cold) {
  require_same_grid(hot, cold);
  if (hot.temperature == cold.temperature)
    throw DomainError("Y-factor requires T_hot > T_cold");
  if (hot.temperature < cold.temperature)
    throw InconsistencyError("Y-factor: hot load temperature is below the cold load temperature");
  CalibrationChain chain;
  chain.omega = hot.omega;
  for (std::size_t k = 0; k < hot.omega.size(); ++k) {
    const double w = hot.omega[k];
    if (!(hot.power[k] > cold.power[k]))
      throw InconsistencyError("Y-factor: hot power does not exceed cold power at " + at_mhz(w));
    const double n_hot = planck_occupancy(hot.temperature, w);
    const double n_cold = planck_occupancy(cold.temperature, w);
    const double g = (hot.power[k] - cold.power[k]) / (n_hot - n_cold);
    chain.gain.push_back(g);
    chain.noise.push_back(cold.power[k] / g - n_cold);
  }
  return chain;
}

AttenuationResult line_attenuation(std::span<const double> gain_to_device,
                                   std::span<const double> gain_to_switch, double flatness_db) {
  if (gain_to_device.size() != gain_to_switch.size() || gain_to_device.empty())
    throw DomainError("attenuation: gain curves must be non-empty and on a common band");
  AttenuationResult res;
  double mean_db = 0.0;
  std::vector<double> loss_db;
  for (std::size_t k = 0; k < gain_to_device.size(); ++k) {
    if (!(gain_to_device[k] > 0.0) || !(gain_to_switch[k] > 0.0))
      throw DomainError("attenuation: gains must be strictly positive");
    const double a = std::sqrt(gain_to_device[k] / gain_to_switch[k]);
    res.per_frequency.push_back(a);
    loss_db.push_back(-10.0 * std::log10(a));
    mean_db += loss_db.back();
  }
  mean_db /= static_cast<double>(loss_db.size());
  for (double l : loss_db) res.max_deviation_db = std::max(res.max_deviation_db, std::abs(l - mean_db));
  res.loss_db = mean_db;
  res.linear = std::pow(10.0, -mean_db / 10.0);
  res.flat = res.max_deviation_db < flatness_db;
  if (!res.flat) {
    std::ostringstream msg;
    msg << "line attenuation is not flat: deviates by " << res.max_deviation_db
        << " dB from the band mean (limit " << flatness_db << " dB)";
    res.warning = msg.str();
  }
  return res;
}

AttenuationResult line_attenuation(const LoadSpectrum& device_off, const LoadSpectrum& short_ref,
                                   double flatness_db) {
  require_same_grid(device_off, short_ref);
  return line_attenuation(device_off.power, short_ref.power, flatness_db);
}

std::vector<double> referenced_gain(const LoadSpectrum& on, const LoadSpectrum& off) {
  require_same_grid(on, off);
  std::vector<double> g;
  g.reserve(on.power.size());
  for (std::size_t k = 0; k < on.power.size(); ++k) {
    if (!(off.power[k] > 0.0))
      throw DomainError("off-state power must be positive (at " + at_mhz(off.omega[k]) + ")");
    g.push_back(on.power[k] / off.power[k]);
  }
  return g;
}

OutputNoise device_output_noise(const LoadSpectrum& on, const LoadSpectrum& superconducting,
                                const CalibrationChain& chain) {
  require_same_grid(on, superconducting);
  if (chain.omega != on.omega)
    throw DomainError("calibration chain does not cover the device frequency grid");
  if (!(chain.attenuation > 0.0 && chain.attenuation <= 1.0))
    throw DomainError("line attenuation must lie in (0, 1]");
  OutputNoise out;
  for (std::size_t k = 0; k < on.power.size(); ++k) {
    if (!(chain.gain[k] > 0.0))
      throw DomainError("chain gain must be positive (at " + at_mhz(on.omega[k]) + ")");
    double n = (on.power[k] - superconducting.power[k]) / (chain.gain[k] * chain.attenuation);
    if (n < -0.05)
      throw InconsistencyError("device output noise is negative (" + std::to_string(n) +
                               " photons) at " + at_mhz(on.omega[k]));
    if (n < 0.0) {
      out.warnings.push_back("clipped " + std::to_string(n) + " photons to 0 at " +
                             at_mhz(on.omega[k]));
      n = 0.0;
    }
    out.photons.push_back(n);
  }
  return out;
}

CalibratedDevice calibrate_device(const CalibrationInputs& in) {
  auto stage = [](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const InconsistencyError& e) {
      throw InconsistencyError(std::string(name) + ": " + e.what());
    } catch (const DomainError& e) {
      throw DomainError(std::string(name) + ": " + e.what());
    }
  };
  CalibratedDevice out;
  out.chain = stage("y_factor", [&] { return y_factor(in.hot, in.cold); });
  out.attenuation = stage("line_attenuation", [&] {
    return line_attenuation(in.device_off, in.short_ref, in.flatness_db);
  });
  out.chain.attenuation = out.attenuation.linear;
  out.gain = stage("referenced_gain", [&] { return referenced_gain(in.device_on, in.device_off); });
  stage("device_output_noise", [&] {
    if (in.device_on_noise.omega != in.hot.omega)
      throw DomainError("noise spectra are not on the calibration grid");
    out.noise = device_output_noise(in.device_on_noise, in.device_sc, out.chain);
    return 0;
  });
  if (in.device_on.omega != in.device_on_noise.omega)
    throw DomainError("noise_ratio: gain and noise spectra are on different grids");
  for (std::size_t k = 0; k < out.gain.size(); ++k)
    out.noise_ratio.push_back(noise_ratio(out.noise.photons[k], out.gain[k]));
  return out;
}

}  // namespace icta
