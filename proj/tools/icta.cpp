#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "icta/commands.hpp"
#include "icta/error.hpp"

namespace {

enum ExitCode { kOk = 0, kValidation = 2, kNumerical = 3, kIo = 4 };

struct Common {
  std::string out;
  bool csv = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--out", c.out, "Results document path (default: $ICTA_OUTPUT_DIR/<command>.json)");
  app->add_flag("--csv", c.csv, "Also write one CSV file per result table");
}

struct RunFlags {
  std::string config, device = "sample_A", dist = "low", xi_grid, freq_grid;
  std::optional<double> bias_mhz, rel_tol, max_noise_ratio;
  std::optional<std::size_t> mc_samples;
  std::optional<std::uint64_t> seed;
};

void add_run_flags(CLI::App* app, RunFlags& f, bool sweep) {
  app->add_option("--config", f.config, "Start from a config (or results document) JSON file");
  app->add_option("--device", f.device, "Preset (sample_A, sample_B) or device JSON file");
  app->add_option("--dist", f.dist,
                  "Bias distribution: zero|low|medium|high, lorentzian:FWHM[,center[,weight]]"
                  "[+...] in MHz, or fit-result JSON file");
  app->add_option("--xi-grid", f.xi_grid, "Xi grid start:stop:n or comma list");
  app->add_option("--bias", f.bias_mhz, "Nominal Josephson frequency in MHz (default w_S + w_I)");
  app->add_option("--rel-tol", f.rel_tol, "Quadrature relative tolerance");
  if (sweep) {
    app->add_option("--freq-grid", f.freq_grid, "Signal frequency grid in MHz, start:stop:n");
    app->add_option("--mc-samples", f.mc_samples, "Monte-Carlo cross-check samples per point");
    app->add_option("--seed", f.seed, "Monte-Carlo seed");
  } else {
    app->add_option("--max-noise-ratio", f.max_noise_ratio,
                    "Also report the largest gain with noise ratio at or below this value");
  }
}

icta::RunConfig build_run_config(const RunFlags& f, const CLI::App& app) {
  icta::RunConfig cfg;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw icta::IoError("cannot open " + f.config);
    icta::io::Json j;
    try {
      j = icta::io::Json::parse(in);
    } catch (const icta::io::Json::parse_error& e) {
      throw icta::ParseError(f.config, 0, e.what());
    }
    cfg = icta::config_from_json(j.contains("config") ? j["config"] : j);
  }
  if (f.config.empty() || app.count("--device")) icta::set_device(cfg, f.device);
  if (f.config.empty() || app.count("--dist")) icta::set_distribution(cfg, f.dist);
  if (!f.xi_grid.empty()) cfg.xi_grid = icta::io::parse_grid(f.xi_grid, "xi_grid");
  if (!f.freq_grid.empty()) cfg.freq_grid_mhz = icta::io::parse_grid(f.freq_grid, "freq_grid");
  if (f.bias_mhz) cfg.bias_mhz = f.bias_mhz;
  if (f.rel_tol) cfg.rel_tol = *f.rel_tol;
  if (f.max_noise_ratio) cfg.max_noise_ratio = f.max_noise_ratio;
  if (f.mc_samples) cfg.mc_samples = *f.mc_samples;
  if (f.seed) cfg.seed = *f.seed;
  return cfg;
}

void emit(const icta::io::ResultsDocument& doc, const Common& c) {
  const auto path = icta::io::resolve_output_path(c.out, doc.command + ".json");
  icta::io::write_document(doc, path, c.csv);
  for (const auto& w : doc.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << doc.command << ": wrote " << path.string() << "\n";
  if (!doc.summary.empty()) std::cout << doc.summary.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Josephson parametric amplifier gain, noise and calibration toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(icta::io::kToolVersion));

  Common c_predict, c_sweep, c_fit, c_cal;
  RunFlags f_predict, f_sweep;
  auto* predict = app.add_subcommand("predict", "Gain, bandwidth and noise ratio versus Xi");
  add_run_flags(predict, f_predict, false);
  add_common(predict, c_predict);
  auto* sweep = app.add_subcommand("sweep", "Averaged gain and noise maps versus Xi and frequency");
  add_run_flags(sweep, f_sweep, true);
  add_common(sweep, c_sweep);

  icta::FitConfig fit_cfg;
  std::optional<double> impedance, probe;
  auto* fit = app.add_subcommand("fit-linewidth", "Lorentzian-mixture fit of a Josephson line");
  fit->add_option("input", fit_cfg.input, "CSV with columns wj_mhz,psd[,sigma]")->required();
  fit->add_option("--components", fit_cfg.components, "Number of Lorentzian components");
  fit->add_option("--impedance", impedance, "Bias impedance in ohm (reports temperatures)");
  fit->add_option("--probe", probe, "Probe frequency in MHz (recorded only)");
  fit->add_flag("--symmetric", fit_cfg.symmetric_sides, "Constrain 3-component side peaks symmetric");
  add_common(fit, c_fit);

  icta::CalibrateConfig cal_cfg;
  auto* cal = app.add_subcommand("calibrate", "Y-factor and on/off calibration of device spectra");
  cal->add_option("--hot", cal_cfg.hot, "Hot load spectrum CSV")->required();
  cal->add_option("--cold", cal_cfg.cold, "Cold load spectrum CSV")->required();
  cal->add_option("--short", cal_cfg.short_ref, "Tone reflected at the switch short CSV")->required();
  cal->add_option("--on", cal_cfg.device_on, "Tone reflected off the biased device CSV")->required();
  cal->add_option("--off", cal_cfg.device_off, "Tone reflected off the unbiased device CSV")->required();
  cal->add_option("--sc", cal_cfg.device_sc, "Noise with the junction superconducting CSV")->required();
  cal->add_option("--on-noise", cal_cfg.device_on_noise, "Noise with the device biased CSV")->required();
  cal->add_option("--t-hot", cal_cfg.t_hot_mk, "Hot load temperature in mK")->required();
  cal->add_option("--t-cold", cal_cfg.t_cold_mk, "Cold load temperature in mK")->required();
  cal->add_option("--flatness-db", cal_cfg.flatness_db, "Line attenuation flatness limit in dB");
  add_common(cal, c_cal);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  try {
    if (predict->parsed()) {
      emit(icta::cmd_predict(build_run_config(f_predict, *predict)), c_predict);
    } else if (sweep->parsed()) {
      emit(icta::cmd_sweep(build_run_config(f_sweep, *sweep)), c_sweep);
    } else if (fit->parsed()) {
      fit_cfg.impedance_ohm = impedance;
      fit_cfg.probe_mhz = probe;
      emit(icta::cmd_fit_linewidth(fit_cfg), c_fit);
    } else if (cal->parsed()) {
      emit(icta::cmd_calibrate(cal_cfg), c_cal);
    }
  } catch (const icta::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const icta::DomainError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kValidation;
  } catch (const icta::FitError& e) {
    std::cerr << "fit failed: " << e.what() << "\n";
    const auto& b = e.best();
    std::cerr << "  best residual norm " << b.residual_norm << " after " << b.iterations
              << " iterations\n";
    return kNumerical;
  } catch (const icta::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kIo;
  } catch (const icta::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const icta::Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kOk;
}
