#include "icta/bias_noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "icta/error.hpp"
#include "icta/units.hpp"

namespace icta {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void validate_components(const std::vector<LorentzianComponent>& components) {
  if (components.empty()) throw DomainError("bias distribution needs at least one component");
  for (const auto& c : components) {
    if (!(c.weight > 0.0) || !std::isfinite(c.weight))
      throw DomainError("component weights must be positive");
    if (!(c.fwhm >= 0.0) || !std::isfinite(c.fwhm))
      throw DomainError("component FWHM must be non-negative");
    if (!std::isfinite(c.center)) throw DomainError("component center must be finite");
  }
}

void require_sorted(std::span<const double> grid, const char* what) {
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] > grid[k - 1]))
      throw DomainError(std::string(what) + " must be strictly increasing");
}

}  // namespace

BiasDistribution::BiasDistribution(std::vector<LorentzianComponent> components, double nominal)
    : components_(std::move(components)), nominal_(nominal) {
  validate_components(components_);
  if (!std::isfinite(nominal_)) throw DomainError("nominal bias must be finite");
  double total = 0.0;
  for (const auto& c : components_) total += c.weight;
  if (std::abs(total - 1.0) > 1e-9)
    throw DomainError("component weights sum to " + std::to_string(total) + ", expected 1");
}

BiasDistribution BiasDistribution::normalized(std::vector<LorentzianComponent> components,
                                              double nominal) {
  validate_components(components);
  double total = 0.0;
  for (const auto& c : components) total += c.weight;
  for (auto& c : components) c.weight /= total;
  return BiasDistribution(std::move(components), nominal);
}

BiasDistribution BiasDistribution::single(double fwhm, double nominal, double center) {
  return BiasDistribution({{1.0, center, fwhm}}, nominal);
}

bool BiasDistribution::is_point_mass() const noexcept {
  return std::all_of(components_.begin(), components_.end(),
                     [](const auto& c) { return c.fwhm == 0.0; });
}

BiasDistribution BiasDistribution::recentered(double nominal) const {
  return BiasDistribution(components_, nominal);
}

double BiasDistribution::density(double omega_j) const {
  double p = 0.0;
  for (const auto& c : components_) {
    const double x = omega_j - nominal_ - c.center;
    if (c.fwhm == 0.0) {
      if (x == 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    const double half = 0.5 * c.fwhm;
    p += c.weight * (half / kPi) / (x * x + half * half);
  }
  return p;
}

double fwhm_from_thermal(double temperature_k, double z0_ohm) {
  if (!(temperature_k >= 0.0)) throw DomainError("temperature must be non-negative");
  if (!(z0_ohm >= 0.0)) throw DomainError("bias impedance must be non-negative");
  const double e = constants::kElementaryCharge;
  const double hbar = constants::kHbar;
  return 2.0 * constants::kBoltzmann * temperature_k * (4.0 * e * e / (hbar * hbar)) * z0_ohm;
}

double temperature_from_fwhm(double fwhm, double z0_ohm) {
  if (!(fwhm >= 0.0)) throw DomainError("FWHM must be non-negative");
  if (!(z0_ohm > 0.0)) throw DomainError("bias impedance must be positive");
  const double e = constants::kElementaryCharge;
  const double hbar = constants::kHbar;
  return hbar * hbar * fwhm / (2.0 * constants::kBoltzmann * 4.0 * e * e * z0_ohm);
}

double noise_ratio(double noise_out, double gain_eff) {
  if (!(gain_eff > 1.0 + 1e-12)) return kNaN;
  return noise_out / (gain_eff - 1.0);
}

namespace {

AveragedResponse finish(double omega_in, std::complex<double> mean, double power,
                        std::size_t panels) {
  AveragedResponse r;
  r.omega_in = omega_in;
  r.mean_gain = mean;
  r.mean_power = power;
  r.gain_eff = std::norm(mean);
  r.noise_out = power - 1.0;
  r.noise_ratio = noise_ratio(r.noise_out, r.gain_eff);
  r.panels = panels;
  return r;
}

}  // namespace

AveragedResponse averaged_response(const DeviceParams& params, double xi, double omega_in,
                                   const BiasDistribution& dist, const AveragingOptions& opts) {
  params.validate();
  max_gain(xi);  // rejects Xi outside [0, 1)

  const double signal_detuning = omega_in - params.omega_s;
  // Idler detuning at the nominal bias; component offsets are added to it so
  // that only offsets, not absolute frequencies, enter the integrand.
  const double idler_base = dist.nominal() - omega_in - params.omega_i;

  // |g| peaks near Delta_I = 0 and near Delta_I = Delta_S kappa_I / kappa_S,
  // with a width set by kappa_I (1 - Xi^2) / 2.
  const double peaks[] = {0.0, signal_detuning * params.kappa_i / params.kappa_s};
  const double pole_scale = 0.5 * params.kappa_i * (1.0 - xi * xi);
  static constexpr double kLadder[] = {-32, -8, -2, -0.5, 0, 0.5, 2, 8, 32};

  std::complex<double> mean{};
  double power = 0.0;
  std::size_t panels = 0;
  for (const auto& comp : dist.components()) {
    const double base = idler_base + comp.center;
    if (comp.fwhm == 0.0) {
      const auto g = amplitude_gain({signal_detuning, base}, xi, params);
      mean += comp.weight * g;
      power += comp.weight * std::norm(g);
      continue;
    }
    const double half = 0.5 * comp.fwhm;
    // theta = atan((omega_J - center)/half) turns the Lorentzian weight into
    // the uniform density 1/pi on (-pi/2, pi/2).
    auto integrand = [&](double theta) {
      const auto g = amplitude_gain({signal_detuning, base + half * std::tan(theta)}, xi, params);
      return std::array<double, 3>{g.real() / kPi, g.imag() / kPi, std::norm(g) / kPi};
    };
    auto rel_error = [](const std::array<double, 3>& v, const std::array<double, 3>& e) {
      const double scale_g = std::max(std::hypot(v[0], v[1]), 1e-3 * std::sqrt(std::abs(v[2])));
      return std::max(std::hypot(e[0], e[1]) / scale_g, e[2] / std::abs(v[2]));
    };
    // Initial panel edges on a geometric ladder around the idler detunings
    // where |g| peaks, at the scale of the pole distance. Without them a
    // narrow gain peak can fall between the nodes of every panel.
    std::vector<double> breaks;
    for (double peak : peaks)
      for (double m : kLadder) breaks.push_back(std::atan((peak + m * pole_scale - base) / half));
    quadrature::AdaptiveResult<3> res;
    try {
      res = quadrature::integrate_adaptive<3>(integrand, -0.5 * kPi, 0.5 * kPi, rel_error,
                                              opts.quadrature, breaks);
    } catch (const NumericalError& err) {
      std::ostringstream msg;
      msg << err.what() << " (Xi=" << xi << ", omega_in/2pi=" << units::rad_to_mhz(omega_in)
          << " MHz, component fwhm/2pi=" << units::rad_to_mhz(comp.fwhm) << " MHz)";
      throw NumericalError(msg.str());
    }
    mean += comp.weight * std::complex<double>(res.value[0], res.value[1]);
    power += comp.weight * res.value[2];
    panels += res.panels;
  }
  return finish(omega_in, mean, power, panels);
}

std::vector<AveragedResponse> frequency_sweep(const DeviceParams& params, double xi,
                                              const BiasDistribution& dist,
                                              std::span<const double> omega_grid,
                                              const AveragingOptions& opts) {
  require_sorted(omega_grid, "signal frequency grid");
  std::vector<AveragedResponse> out;
  out.reserve(omega_grid.size());
  for (double w : omega_grid) out.push_back(averaged_response(params, xi, w, dist, opts));
  return out;
}

double half_max_width(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3)
    throw RangeError("need at least three matching samples to extract a width");
  const auto peak = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  if (peak == 0 || peak + 1 == y.size())
    throw RangeError("maximum lies on the edge of the grid");
  const double half = 0.5 * y[peak];

  std::size_t l = peak;
  while (l > 0 && y[l - 1] >= half) --l;
  if (l == 0) throw RangeError("no 3 dB crossing below the maximum inside the grid");
  std::size_t r = peak;
  while (r + 1 < y.size() && y[r + 1] >= half) ++r;
  if (r + 1 == y.size()) throw RangeError("no 3 dB crossing above the maximum inside the grid");

  auto cross = [&](std::size_t i, std::size_t j) {
    return x[i] + (half - y[i]) * (x[j] - x[i]) / (y[j] - y[i]);
  };
  return cross(r, r + 1) - cross(l - 1, l);
}

double extract_bandwidth(std::span<const AveragedResponse> curve) {
  std::vector<double> x, y;
  x.reserve(curve.size());
  y.reserve(curve.size());
  for (const auto& r : curve) {
    x.push_back(r.omega_in);
    y.push_back(r.gain_eff);
  }
  return half_max_width(x, y);
}

AveragedResponse optimal_response(const DeviceParams& params, double xi,
                                  const BiasDistribution& dist, const TradeoffOptions& opts) {
  const double lo = params.omega_s - params.kappa_s;
  const double hi = params.omega_s + params.kappa_s;
  auto eval = [&](double w) { return averaged_response(params, xi, w, dist, opts.averaging); };

  // Odd count puts omega_S itself on the scan.
  constexpr int kScan = 33;
  const double step = (hi - lo) / (kScan - 1);
  AveragedResponse best = eval(lo);
  int best_k = 0;
  for (int k = 1; k < kScan; ++k) {
    auto r = eval(lo + k * step);
    if (r.gain_eff > best.gain_eff) {
      best = r;
      best_k = k;
    }
  }

  double a = lo + std::max(best_k - 1, 0) * step;
  double b = lo + std::min(best_k + 1, kScan - 1) * step;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  auto rc = eval(c);
  auto rd = eval(d);
  while (b - a > opts.omega_tol) {
    if (rc.gain_eff > rd.gain_eff) {
      b = d;
      d = c;
      rd = rc;
      c = b - inv_phi * (b - a);
      rc = eval(c);
    } else {
      a = c;
      c = d;
      rc = rd;
      d = a + inv_phi * (b - a);
      rd = eval(d);
    }
  }
  for (const auto* r : {&rc, &rd})
    if (r->gain_eff > best.gain_eff) best = *r;
  return best;
}

double averaged_bandwidth(const DeviceParams& params, double xi, const BiasDistribution& dist,
                          const AveragedResponse& optimum, const TradeoffOptions& opts) {
  const double g0 = max_gain(xi);
  if (!(optimum.gain_eff > 2.0)) return kNaN;  // a 3 dB drop would fall below unity
  const double estimate = g0 > 1.0 ? bandwidth_analytic(params, g0) : params.kappa_s;
  const double limit = 3.0 * params.kappa_s;
  const std::size_t n = std::max<std::size_t>(opts.bandwidth_points | 1, 21);
  for (double half_span = std::min(2.0 * estimate, limit);; half_span *= 2.0) {
    half_span = std::min(half_span, limit);
    std::vector<double> grid(n);
    for (std::size_t k = 0; k < n; ++k)
      grid[k] = optimum.omega_in - half_span + 2.0 * half_span * k / (n - 1);
    const auto curve = frequency_sweep(params, xi, dist, grid, opts.averaging);
    try {
      return extract_bandwidth(curve);
    } catch (const RangeError&) {
      if (half_span >= limit) return kNaN;
    }
  }
}

TradeoffPoint tradeoff_point(const DeviceParams& params, double xi,
                             const BiasDistribution& dist, const TradeoffOptions& opts) {
  TradeoffPoint p;
  p.xi = xi;
  p.response = optimal_response(params, xi, dist, opts);
  p.gain_db = 10.0 * std::log10(p.response.gain_eff);
  p.bandwidth = averaged_bandwidth(params, xi, dist, p.response, opts);
  return p;
}

std::vector<TradeoffPoint> gain_noise_tradeoff(const DeviceParams& params,
                                               const BiasDistribution& dist,
                                               std::span<const double> xi_grid,
                                               const TradeoffOptions& opts) {
  for (double xi : xi_grid) max_gain(xi);
  std::vector<TradeoffPoint> out;
  out.reserve(xi_grid.size());
  for (double xi : xi_grid) out.push_back(tradeoff_point(params, xi, dist, opts));
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.response.gain_eff < b.response.gain_eff;
  });
  return out;
}

double xi_for_effective_gain(const DeviceParams& params, const BiasDistribution& dist,
                             double gain_db, const TradeoffOptions& opts) {
  if (!(gain_db > 0.0)) throw DomainError("target gain must be above 0 dB");
  const double target = std::pow(10.0, gain_db / 10.0);
  double lo = 0.0;
  double hi = 1.0 - 1e-9;
  if (optimal_response(params, hi, dist, opts).gain_eff < target)
    throw RangeError("effective gain of " + std::to_string(gain_db) +
                     " dB is not reachable below Xi = 1");
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (optimal_response(params, mid, dist, opts).gain_eff < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

TradeoffPoint max_gain_within_noise_ratio(const DeviceParams& params,
                                          const BiasDistribution& dist, double r_max,
                                          double xi_max, const TradeoffOptions& opts) {
  if (!(r_max > 1.0)) throw DomainError("noise-ratio bound must exceed 1");
  max_gain(xi_max);
  auto ratio = [&](double xi) { return optimal_response(params, xi, dist, opts).noise_ratio; };
  if (!(ratio(xi_max) > r_max)) return tradeoff_point(params, xi_max, dist, opts);
  double lo = 0.0;
  double hi = xi_max;
  while (hi - lo > 1e-8) {
    const double mid = 0.5 * (lo + hi);
    const double r = ratio(mid);
    // NaN (no gain) counts as below the bound.
    if (r > r_max)
      hi = mid;
    else
      lo = mid;
  }
  return tradeoff_point(params, lo, dist, opts);
}

MonteCarloResult monte_carlo_oracle(const DeviceParams& params, double xi, double omega_in,
                                    const BiasDistribution& dist, std::size_t n_samples,
                                    std::uint64_t seed) {
  params.validate();
  max_gain(xi);
  if (n_samples < 2) throw DomainError("Monte-Carlo oracle needs at least two samples");

  const auto& comps = dist.components();
  std::vector<double> cumulative;
  double acc = 0.0;
  for (const auto& c : comps) cumulative.push_back(acc += c.weight);

  std::mt19937_64 rng(seed);
  // 53-bit uniform on the open interval (0, 1).
  auto uniform = [&rng] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };

  const double signal_detuning = omega_in - params.omega_s;
  const double idler_base = dist.nominal() - omega_in - params.omega_i;
  double s_re = 0, s_im = 0, s_p = 0, s_rr = 0, s_ii = 0, s_ri = 0, s_pp = 0;
  for (std::size_t n = 0; n < n_samples; ++n) {
    const double pick = uniform() * acc;
    auto k = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin());
    if (k >= comps.size()) k = comps.size() - 1;
    const auto& c = comps[k];
    const double offset = c.center + 0.5 * c.fwhm * std::tan(kPi * (uniform() - 0.5));
    const auto g = amplitude_gain({signal_detuning, idler_base + offset}, xi, params);
    const double p = std::norm(g);
    s_re += g.real();
    s_im += g.imag();
    s_p += p;
    s_rr += g.real() * g.real();
    s_ii += g.imag() * g.imag();
    s_ri += g.real() * g.imag();
    s_pp += p * p;
  }
  const double n = static_cast<double>(n_samples);
  const double m_re = s_re / n, m_im = s_im / n, m_p = s_p / n;
  const double v_re = std::max(s_rr / n - m_re * m_re, 0.0) * n / (n - 1);
  const double v_ii = std::max(s_ii / n - m_im * m_im, 0.0) * n / (n - 1);
  const double c_ri = (s_ri / n - m_re * m_im) * n / (n - 1);
  const double v_p = std::max(s_pp / n - m_p * m_p, 0.0) * n / (n - 1);

  MonteCarloResult out;
  out.response = finish(omega_in, {m_re, m_im}, m_p, 0);
  out.samples = n_samples;
  out.se_mean_re = std::sqrt(v_re / n);
  out.se_mean_im = std::sqrt(v_ii / n);
  out.se_mean_power = std::sqrt(v_p / n);
  const double v_g =
      4.0 * (m_re * m_re * v_re + m_im * m_im * v_ii + 2.0 * m_re * m_im * c_ri) / n;
  out.se_gain_eff = std::sqrt(std::max(v_g, 0.0));
  return out;
}

}  // namespace icta
