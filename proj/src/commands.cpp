#include "icta/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "icta/error.hpp"
#include "icta/units.hpp"

namespace icta {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_file_spec(const std::string& spec, const std::vector<std::string>& presets) {
  if (std::find(presets.begin(), presets.end(), spec) != presets.end()) return false;
  if (spec.rfind("lorentzian:", 0) == 0) return false;
  return true;
}

void record_input(std::vector<io::InputDigest>& inputs, const std::string& role,
                  const std::string& path) {
  std::erase_if(inputs, [&](const io::InputDigest& d) { return d.role == role; });
  inputs.push_back({role, path, io::sha256_file(path)});
}

BiasDistribution make_distribution(const RunConfig& cfg) {
  return BiasDistribution::normalized(io::to_components(cfg.distribution), cfg.nominal_bias());
}

TradeoffOptions tradeoff_options(const RunConfig& cfg) {
  TradeoffOptions o;
  o.averaging.quadrature.rel_tol = cfg.rel_tol;
  o.bandwidth_points = cfg.bandwidth_points;
  return o;
}

io::ResultsDocument new_document(const std::string& command, io::Json config,
                                 std::vector<io::InputDigest> inputs) {
  io::ResultsDocument doc;
  doc.command = command;
  doc.config = std::move(config);
  doc.inputs = std::move(inputs);
  doc.timestamp = io::utc_timestamp();
  return doc;
}

double db10(double x) { return 10.0 * std::log10(x); }

}  // namespace

// ---- predict / sweep -------------------------------------------------------

void RunConfig::validate() const {
  try {
    params().validate();
  } catch (const DomainError& e) {
    throw ValidationError("device", e.what());
  }
  if (distribution.empty()) throw ValidationError("dist", "no components");
  for (std::size_t k = 0; k < xi_grid.size(); ++k) {
    const double xi = xi_grid[k];
    const std::string path = "xi_grid[" + std::to_string(k) + "]";
    if (!std::isfinite(xi) || xi < 0.0) throw ValidationError(path, "Xi must be >= 0");
    if (xi >= 1.0) throw ValidationError(path, "Xi must be below 1 (parametric instability)");
    if (k && !(xi > xi_grid[k - 1])) throw ValidationError(path, "grid must be strictly increasing");
  }
  for (std::size_t k = 0; k < freq_grid_mhz.size(); ++k) {
    const std::string path = "freq_grid[" + std::to_string(k) + "]";
    if (!(freq_grid_mhz[k] > 0.0) || !std::isfinite(freq_grid_mhz[k]))
      throw ValidationError(path, "frequency must be positive");
    if (k && !(freq_grid_mhz[k] > freq_grid_mhz[k - 1]))
      throw ValidationError(path, "grid must be strictly increasing");
  }
  if (bias_mhz && !(*bias_mhz > 0.0)) throw ValidationError("bias_mhz", "must be positive");
  if (!(rel_tol > 0.0) || rel_tol >= 1.0) throw ValidationError("rel_tol", "must lie in (0, 1)");
  if (bandwidth_points < 11) throw ValidationError("bandwidth_points", "must be at least 11");
  if (max_noise_ratio && !(*max_noise_ratio > 1.0))
    throw ValidationError("max_noise_ratio", "must exceed 1");
}

double RunConfig::nominal_bias() const {
  if (bias_mhz) return units::mhz_to_rad(*bias_mhz);
  const auto p = params();
  return p.omega_s + p.omega_i;
}

void set_device(RunConfig& cfg, const std::string& spec) {
  const auto presets = io::device_preset_names();
  if (!is_file_spec(spec, presets)) {
    cfg.device = io::device_preset(spec);
  } else {
    if (!std::filesystem::exists(spec))
      throw ValidationError("device", "'" + spec + "' is neither a preset nor a file");
    std::ifstream in(spec);
    io::Json j;
    try {
      j = io::Json::parse(in);
    } catch (const io::Json::parse_error& e) {
      throw ParseError(spec, 0, e.what());
    }
    cfg.device = io::device_from_json(j, "device");
    record_input(cfg.inputs, "device", spec);
  }
  cfg.device_source = spec;
}

void set_distribution(RunConfig& cfg, const std::string& spec) {
  cfg.distribution = io::parse_distribution(spec, "dist");
  if (is_file_spec(spec, io::distribution_preset_names())) record_input(cfg.inputs, "dist", spec);
  cfg.dist_source = spec;
}

io::Json config_to_json(const RunConfig& cfg) {
  io::Json j;
  j["device_source"] = cfg.device_source;
  j["device"] = io::device_to_json(cfg.device);
  j["dist_source"] = cfg.dist_source;
  j["distribution"] = io::distribution_to_json(cfg.distribution);
  j["bias_mhz"] = cfg.bias_mhz ? io::Json(*cfg.bias_mhz) : io::Json(nullptr);
  j["nominal_bias_mhz"] = units::rad_to_mhz(cfg.nominal_bias());
  j["xi_grid"] = cfg.xi_grid;
  j["freq_grid_mhz"] = cfg.freq_grid_mhz;
  j["rel_tol"] = cfg.rel_tol;
  j["bandwidth_points"] = cfg.bandwidth_points;
  j["max_noise_ratio"] = cfg.max_noise_ratio ? io::Json(*cfg.max_noise_ratio) : io::Json(nullptr);
  j["mc_samples"] = cfg.mc_samples;
  j["seed"] = cfg.seed;
  return j;
}

RunConfig config_from_json(const io::Json& j) {
  if (!j.is_object()) throw ValidationError("config", "must be an object");
  RunConfig cfg;
  auto number = [&](const char* key) -> double {
    const auto& v = j.at(key);
    if (!v.is_number()) throw ValidationError(key, "must be a number");
    return v.get<double>();
  };
  try {
    cfg.device_source = j.value("device_source", std::string("inline"));
    cfg.device = io::device_from_json(j.at("device"), "device");
    cfg.dist_source = j.value("dist_source", std::string("inline"));
    cfg.distribution = io::distribution_from_json(j.at("distribution"), "distribution");
    if (j.contains("bias_mhz") && !j["bias_mhz"].is_null()) cfg.bias_mhz = number("bias_mhz");
    if (j.contains("xi_grid")) cfg.xi_grid = j["xi_grid"].get<std::vector<double>>();
    if (j.contains("freq_grid_mhz")) cfg.freq_grid_mhz = j["freq_grid_mhz"].get<std::vector<double>>();
    if (j.contains("rel_tol")) cfg.rel_tol = number("rel_tol");
    if (j.contains("bandwidth_points")) cfg.bandwidth_points = j["bandwidth_points"].get<std::size_t>();
    if (j.contains("max_noise_ratio") && !j["max_noise_ratio"].is_null())
      cfg.max_noise_ratio = number("max_noise_ratio");
    if (j.contains("mc_samples")) cfg.mc_samples = j["mc_samples"].get<std::size_t>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  } catch (const io::Json::exception& e) {
    throw ValidationError("config", e.what());
  }
  cfg.validate();
  return cfg;
}

io::ResultsDocument cmd_predict(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.xi_grid.empty()) throw ValidationError("xi_grid", "empty grid");
  const auto dev = cfg.params();
  const auto dist = make_distribution(cfg);
  const auto ideal = BiasDistribution::point(cfg.nominal_bias());
  const auto opts = tradeoff_options(cfg);

  auto doc = new_document("predict", config_to_json(cfg), cfg.inputs);
  io::Table t{"tradeoff", {}}, ref{"ideal", {}};
  std::vector<double> xi, g0_db, gain_db, bw, ratio, sig, nout;
  std::vector<double> rgain, rbw, rratio;
  const auto noisy = gain_noise_tradeoff(dev, dist, cfg.xi_grid, opts);
  const auto clean = gain_noise_tradeoff(dev, ideal, cfg.xi_grid, opts);
  for (const auto& p : noisy) {
    xi.push_back(p.xi);
    g0_db.push_back(power_gain_db(max_gain(p.xi)));
    gain_db.push_back(p.gain_db);
    bw.push_back(units::rad_to_mhz(p.bandwidth));
    ratio.push_back(p.response.noise_ratio);
    sig.push_back(units::rad_to_mhz(p.response.omega_in));
    nout.push_back(p.response.noise_out);
  }
  std::vector<double> rxi;
  for (const auto& p : clean) {
    rxi.push_back(p.xi);
    rgain.push_back(p.gain_db);
    rbw.push_back(units::rad_to_mhz(p.bandwidth));
    rratio.push_back(p.response.noise_ratio);
  }
  t.columns = {{"xi", xi},          {"g0_db", g0_db},          {"gain_db", gain_db},
               {"bandwidth_mhz", bw}, {"noise_ratio", ratio}, {"signal_mhz", sig},
               {"noise_out_photons", nout}};
  ref.columns = {{"xi", rxi}, {"gain_db", rgain}, {"bandwidth_mhz", rbw}, {"noise_ratio", rratio}};
  doc.tables = {std::move(t), std::move(ref)};

  if (cfg.max_noise_ratio) {
    const auto p = max_gain_within_noise_ratio(dev, dist, *cfg.max_noise_ratio, 0.9999, opts);
    doc.summary["max_gain_within_noise_ratio"] = {
        {"noise_ratio_limit", *cfg.max_noise_ratio},
        {"xi", p.xi},
        {"gain_db", p.gain_db},
        {"noise_ratio", std::isfinite(p.response.noise_ratio) ? io::Json(p.response.noise_ratio) : io::Json(nullptr)},
        {"bandwidth_mhz", std::isfinite(p.bandwidth) ? io::Json(units::rad_to_mhz(p.bandwidth)) : io::Json(nullptr)}};
  }
  return doc;
}

io::ResultsDocument cmd_sweep(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.xi_grid.empty()) throw ValidationError("xi_grid", "empty grid");
  std::vector<double> grid_mhz = cfg.freq_grid_mhz;
  if (grid_mhz.empty()) {
    const double c = cfg.device.omega_s_mhz, k = cfg.device.kappa_s_mhz;
    for (int n = 0; n < 401; ++n) grid_mhz.push_back(c - 2.0 * k + 4.0 * k * n / 400.0);
  }
  std::vector<double> grid;
  for (double f : grid_mhz) grid.push_back(units::mhz_to_rad(f));
  const auto dev = cfg.params();
  const auto dist = make_distribution(cfg);
  AveragingOptions avg;
  avg.quadrature.rel_tol = cfg.rel_tol;

  auto doc = new_document("sweep", config_to_json(cfg), cfg.inputs);
  std::vector<double> m_xi, m_f, m_gain, m_power, m_nout, m_ratio, mc_gain, mc_power;
  std::vector<double> b_xi, b_g0, b_bw, b_prod;
  for (std::size_t k = 0; k < cfg.xi_grid.size(); ++k) {
    const double xi = cfg.xi_grid[k];
    const auto curve = frequency_sweep(dev, xi, dist, grid, avg);
    for (std::size_t n = 0; n < curve.size(); ++n) {
      const auto& r = curve[n];
      m_xi.push_back(xi);
      m_f.push_back(grid_mhz[n]);
      m_gain.push_back(db10(r.gain_eff));
      m_power.push_back(db10(r.mean_power));
      m_nout.push_back(r.noise_out);
      m_ratio.push_back(r.noise_ratio);
      if (cfg.mc_samples) {
        const auto mc = monte_carlo_oracle(dev, xi, grid[n], dist, cfg.mc_samples,
                                           cfg.seed + k * grid.size() + n);
        mc_gain.push_back(db10(mc.response.gain_eff));
        mc_power.push_back(db10(mc.response.mean_power));
      }
    }
    double bw = kNaN;
    try {
      bw = units::rad_to_mhz(extract_bandwidth(curve));
    } catch (const RangeError& e) {
      doc.warnings.push_back("xi=" + std::to_string(xi) + ": no 3 dB bandwidth on the grid (" + e.what() + ")");
    }
    b_xi.push_back(xi);
    b_g0.push_back(max_gain(xi));
    b_bw.push_back(bw);
    b_prod.push_back(bw * max_gain(xi));
  }
  io::Table map{"map", {{"xi", m_xi}, {"freq_mhz", m_f}, {"gain_db", m_gain},
                        {"mean_power_db", m_power}, {"noise_out_photons", m_nout},
                        {"noise_ratio", m_ratio}}};
  if (cfg.mc_samples) {
    map.columns.push_back({"mc_gain_db", mc_gain});
    map.columns.push_back({"mc_mean_power_db", mc_power});
  }
  io::Table bands{"bandwidth", {{"xi", b_xi}, {"g0", b_g0}, {"bandwidth_mhz", b_bw},
                                {"bandwidth_x_g0_mhz", b_prod}}};
  doc.tables = {std::move(map), std::move(bands)};
  return doc;
}

// ---- fit-linewidth ---------------------------------------------------------

void FitConfig::validate() const {
  if (input.empty()) throw ValidationError("input", "no input file");
  if (components < 1) throw ValidationError("components", "must be at least 1");
  if (symmetric_sides && components != 3)
    throw ValidationError("symmetric", "symmetric side peaks need exactly 3 components");
  if (impedance_ohm && !(*impedance_ohm > 0.0))
    throw ValidationError("impedance", "must be positive");
  if (probe_mhz && !(*probe_mhz > 0.0)) throw ValidationError("probe_mhz", "must be positive");
}

io::ResultsDocument cmd_fit_linewidth(const FitConfig& cfg) {
  cfg.validate();
  const auto data = io::read_linewidth_csv(cfg.input, cfg.probe_mhz ? units::mhz_to_rad(*cfg.probe_mhz) : 0.0);
  try {
    data.validate();
  } catch (const DomainError& e) {
    throw ValidationError("input", e.what());
  }
  FitOptions fo;
  fo.symmetric_sides = cfg.symmetric_sides;
  const auto fit = fit_mixture(data, cfg.components, fo);

  io::Json config;
  config["input"] = cfg.input;
  config["components"] = cfg.components;
  config["impedance_ohm"] = cfg.impedance_ohm ? io::Json(*cfg.impedance_ohm) : io::Json(nullptr);
  config["probe_mhz"] = cfg.probe_mhz ? io::Json(*cfg.probe_mhz) : io::Json(nullptr);
  config["symmetric_sides"] = cfg.symmetric_sides;
  auto doc = new_document("fit-linewidth", config, {{"input", cfg.input, io::sha256_file(cfg.input)}});

  // The distribution is expressed relative to the dominant (largest-area)
  // component, which then sits at the nominal bias.
  std::size_t main = 0;
  double best_area = -1.0;
  for (std::size_t k = 0; k < fit.components.size(); ++k) {
    const double area = fit.components[k].amplitude * fit.components[k].fwhm;
    if (area > best_area) best_area = area, main = k;
  }
  const double reference = fit.components[main].center;
  const auto dist = fit.to_distribution(reference, reference);

  std::vector<double> amp, amp_u, ctr, ctr_u, w, w_u, weight, temp;
  for (std::size_t k = 0; k < fit.components.size(); ++k) {
    const auto& c = fit.components[k];
    const auto& u = fit.uncertainties[k];
    amp.push_back(c.amplitude);
    amp_u.push_back(u.amplitude);
    ctr.push_back(units::rad_to_mhz(c.center));
    ctr_u.push_back(units::rad_to_mhz(u.center));
    w.push_back(units::rad_to_mhz(c.fwhm));
    w_u.push_back(units::rad_to_mhz(u.fwhm));
    weight.push_back(dist.components()[k].weight);
    temp.push_back(cfg.impedance_ohm ? units::kelvin_to_mk(effective_temperature(c.fwhm, *cfg.impedance_ohm)) : kNaN);
  }
  io::Table comps{"components", {{"amplitude", amp}, {"amplitude_err", amp_u}, {"center_mhz", ctr},
                                 {"center_err_mhz", ctr_u}, {"fwhm_mhz", w}, {"fwhm_err_mhz", w_u},
                                 {"weight", weight}, {"temperature_mk", temp}}};
  std::vector<double> x, y, model;
  for (std::size_t n = 0; n < data.omega_j.size(); ++n) {
    x.push_back(units::rad_to_mhz(data.omega_j[n]));
    y.push_back(data.psd[n]);
    model.push_back(fit.evaluate(data.omega_j[n]));
  }
  io::Table curve{"curve", {{"wj_mhz", x}, {"psd", y}, {"model", model}}};
  doc.tables = {std::move(comps), std::move(curve)};

  doc.summary["background"] = fit.background;
  doc.summary["background_err"] = fit.background_uncertainty;
  doc.summary["residual_norm"] = fit.residual_norm;
  doc.summary["converged"] = fit.converged;
  doc.summary["iterations"] = fit.iterations;
  doc.summary["reference_mhz"] = units::rad_to_mhz(reference);
  doc.summary["distribution"] = io::distribution_to_json(io::from_components(dist.components()));
  return doc;
}

// ---- calibrate -------------------------------------------------------------

void CalibrateConfig::validate() const {
  const std::pair<const char*, const std::string*> files[] = {
      {"hot", &hot},           {"cold", &cold},          {"short", &short_ref},
      {"on", &device_on},      {"off", &device_off},     {"sc", &device_sc},
      {"on_noise", &device_on_noise}};
  for (const auto& [name, path] : files)
    if (path->empty()) throw ValidationError(name, "input file required");
  if (!(t_hot_mk > 0.0)) throw ValidationError("t_hot_mk", "must be positive");
  if (!(t_cold_mk > 0.0)) throw ValidationError("t_cold_mk", "must be positive");
  if (!(flatness_db > 0.0)) throw ValidationError("flatness_db", "must be positive");
}

io::ResultsDocument cmd_calibrate(const CalibrateConfig& cfg) {
  cfg.validate();
  CalibrationInputs in;
  in.hot = io::read_load_spectrum(cfg.hot, LoadLabel::kHot, units::mk_to_kelvin(cfg.t_hot_mk));
  in.cold = io::read_load_spectrum(cfg.cold, LoadLabel::kCold, units::mk_to_kelvin(cfg.t_cold_mk));
  in.short_ref = io::read_load_spectrum(cfg.short_ref, LoadLabel::kShort);
  in.device_on = io::read_load_spectrum(cfg.device_on, LoadLabel::kDeviceOn);
  in.device_off = io::read_load_spectrum(cfg.device_off, LoadLabel::kDeviceOff);
  in.device_sc = io::read_load_spectrum(cfg.device_sc, LoadLabel::kDeviceSuperconducting);
  in.device_on_noise = io::read_load_spectrum(cfg.device_on_noise, LoadLabel::kDeviceOn);
  in.flatness_db = cfg.flatness_db;
  const auto res = calibrate_device(in);

  io::Json config{{"hot", cfg.hot},           {"cold", cfg.cold},
                  {"short", cfg.short_ref},   {"on", cfg.device_on},
                  {"off", cfg.device_off},    {"sc", cfg.device_sc},
                  {"on_noise", cfg.device_on_noise},
                  {"t_hot_mk", cfg.t_hot_mk}, {"t_cold_mk", cfg.t_cold_mk},
                  {"flatness_db", cfg.flatness_db}};
  std::vector<io::InputDigest> digests;
  for (const auto& [role, path] : std::vector<std::pair<std::string, std::string>>{
           {"hot", cfg.hot}, {"cold", cfg.cold}, {"short", cfg.short_ref}, {"on", cfg.device_on},
           {"off", cfg.device_off}, {"sc", cfg.device_sc}, {"on_noise", cfg.device_on_noise}})
    digests.push_back({role, path, io::sha256_file(path)});
  auto doc = new_document("calibrate", config, digests);

  std::vector<double> f, one_way_db, gain_db;
  for (std::size_t k = 0; k < in.hot.omega.size(); ++k) {
    f.push_back(units::rad_to_mhz(in.hot.omega[k]));
    one_way_db.push_back(-db10(res.attenuation.per_frequency[k]));
    gain_db.push_back(db10(res.gain[k]));
  }
  doc.tables = {
      {"chain", {{"freq_mhz", f}, {"chain_gain", res.chain.gain}, {"n_sys_photons", res.chain.noise},
                 {"line_loss_db", one_way_db}}},
      {"device", {{"freq_mhz", f}, {"gain_db", gain_db}, {"gain_linear", res.gain},
                  {"noise_out_photons", res.noise.photons}, {"noise_ratio", res.noise_ratio}}}};
  doc.summary["attenuation_linear"] = res.attenuation.linear;
  doc.summary["attenuation_db"] = res.attenuation.loss_db;
  doc.summary["attenuation_max_deviation_db"] = res.attenuation.max_deviation_db;
  doc.summary["attenuation_flat"] = res.attenuation.flat;
  if (!res.attenuation.flat) doc.warnings.push_back(res.attenuation.warning);
  for (const auto& w : res.noise.warnings) doc.warnings.push_back(w);
  return doc;
}

}  // namespace icta
