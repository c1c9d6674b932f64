#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "icta/io.hpp"

namespace icta {

// Resolved configuration shared by predict and sweep. Frequencies in MHz as on
// the command line; the echo in a results document is itself a valid config.
struct RunConfig {
  std::string device_source = "sample_A";
  io::DeviceSpec device = io::device_preset("sample_A");
  std::string dist_source = "low";
  std::vector<io::LineSpec> distribution = io::distribution_preset("low");
  std::optional<double> bias_mhz;  // nominal omega_J / 2pi; default omega_S + omega_I
  std::vector<double> xi_grid;
  std::vector<double> freq_grid_mhz;  // sweep only; default omega_S +- 2 kappa_S, 401 points
  double rel_tol = 1e-6;
  std::size_t bandwidth_points = 401;
  std::optional<double> max_noise_ratio;  // predict: also report max gain with R <= this
  std::size_t mc_samples = 0;             // sweep: Monte-Carlo cross-check columns
  std::uint64_t seed = 1;
  std::vector<io::InputDigest> inputs;

  // Throws ValidationError naming the offending field.
  void validate() const;
  DeviceParams params() const { return device.params(); }
  double nominal_bias() const;  // rad/s
};

// `spec` is a preset name or a device JSON file (digest recorded).
void set_device(RunConfig& cfg, const std::string& spec);
// Preset, lorentzian: spec, or JSON file (digest recorded).
void set_distribution(RunConfig& cfg, const std::string& spec);

io::Json config_to_json(const RunConfig& cfg);
RunConfig config_from_json(const io::Json& j);

io::ResultsDocument cmd_predict(const RunConfig& cfg);
io::ResultsDocument cmd_sweep(const RunConfig& cfg);

struct FitConfig {
  std::string input;
  std::size_t components = 1;
  std::optional<double> impedance_ohm;
  std::optional<double> probe_mhz;
  bool symmetric_sides = false;
  void validate() const;
};

io::ResultsDocument cmd_fit_linewidth(const FitConfig& cfg);

struct CalibrateConfig {
  std::string hot, cold, short_ref, device_on, device_off, device_sc, device_on_noise;
  double t_hot_mk = 0.0;
  double t_cold_mk = 0.0;
  double flatness_db = 0.2;
  void validate() const;
};

io::ResultsDocument cmd_calibrate(const CalibrateConfig& cfg);

}  // namespace icta
