#include <cmath>
#include <random>

#include "doctest.h"
#include "icta/bias_noise.hpp"
#include "icta/error.hpp"
#include "oracles.hpp"

using namespace icta;
using icta::testing::sample_a_like;
using icta::testing::sample_b_like;
using units::mhz_to_rad;
using units::rad_to_mhz;

namespace {

BiasDistribution medium_mixture(double nominal) {
  return BiasDistribution({{0.5, 0.0, mhz_to_rad(28.5)},
                           {0.25, mhz_to_rad(48), mhz_to_rad(45.8)},
                           {0.25, mhz_to_rad(-48), mhz_to_rad(45.8)}},
                          nominal);
}

double optimal_bias(const DeviceParams& p) { return p.omega_s + p.omega_i; }

}  // namespace

TEST_CASE("thermal linewidth") {
  CHECK(rad_to_mhz(fwhm_from_thermal(27.6e-3, 5)) == doctest::Approx(5.6).epsilon(0.01));
  CHECK(rad_to_mhz(fwhm_from_thermal(36.4e-3, 50)) == doctest::Approx(73.8).epsilon(0.01));
  CHECK(fwhm_from_thermal(0, 50) == 0.0);
  CHECK(temperature_from_fwhm(fwhm_from_thermal(0.0314, 7.5), 7.5) ==
        doctest::Approx(0.0314).epsilon(1e-13));
  CHECK_THROWS_AS(fwhm_from_thermal(-1, 5), DomainError);
  CHECK_THROWS_AS(temperature_from_fwhm(1e6, 0), DomainError);
}

TEST_CASE("distribution construction") {
  CHECK_THROWS_AS(BiasDistribution({{0.5, 0, 1e6}}, 0), DomainError);
  CHECK_THROWS_AS(BiasDistribution({}, 0), DomainError);
  CHECK_THROWS_AS(BiasDistribution::normalized({{-1, 0, 1e6}}, 0), DomainError);
  const auto d = BiasDistribution::normalized({{2, 0, 1e6}, {6, 1e6, 1e6}}, 0);
  CHECK(d.components()[0].weight == doctest::Approx(0.25));
  CHECK(BiasDistribution::point(3.0).is_point_mass());
}

TEST_CASE("density") {
  const double fwhm = mhz_to_rad(5.6);
  const auto d = BiasDistribution::single(fwhm, 1e10);
  const double peak = d.density(1e10);
  CHECK(peak == doctest::Approx(2 / (std::numbers::pi * fwhm)).epsilon(1e-14));
  CHECK(d.density(1e10 + fwhm / 2) == doctest::Approx(peak / 2).epsilon(1e-14));
  CHECK(d.density(1e10 - fwhm / 2) == doctest::Approx(peak / 2).epsilon(1e-14));

  // Three local maxima for the side-lobe mixture.
  const auto m = medium_mixture(0);
  int maxima = 0;
  const double step = mhz_to_rad(0.01);
  double prev2 = m.density(mhz_to_rad(-150) - step), prev = m.density(mhz_to_rad(-150));
  for (double x = mhz_to_rad(-150) + step; x <= mhz_to_rad(150); x += step) {
    const double cur = m.density(x);
    if (prev > prev2 && prev > cur) ++maxima;
    prev2 = prev;
    prev = cur;
    CHECK(cur >= 0.0);
  }
  CHECK(maxima == 3);

  const auto pm = BiasDistribution::point(5.0);
  CHECK(std::isinf(pm.density(5.0)));
  CHECK(pm.density(6.0) == 0.0);
}

TEST_CASE("averaged_response against high-precision references") {
  // References: direct 30-digit integration over omega_J (no substitution).
  struct Case {
    double xi, fwhm_mhz, shift_mhz, re, im, power, ratio;
  };
  const Case cases[] = {
      {0.8, 5.6, 0.0, 4.3265869365225391, 0.0, 19.481038536236328, 1.0429859911725197},
      {0.9, 73.8, 3.0, 3.9509295856765217, 0.94937155180400428, 32.461197985706736,
       2.0282955222901757},
      {0.6, 28.5, -7.0, 1.7760314648560905, -0.66567388137236118, 3.7557612454156198,
       1.060965267934923},
  };
  const auto p = sample_a_like();
  for (const auto& c : cases) {
    const auto d = BiasDistribution::single(mhz_to_rad(c.fwhm_mhz), optimal_bias(p));
    const auto r = averaged_response(p, c.xi, p.omega_s + mhz_to_rad(c.shift_mhz), d);
    CHECK(r.mean_gain.real() == doctest::Approx(c.re).epsilon(1e-6));
    CHECK(r.mean_gain.imag() == doctest::Approx(c.im).epsilon(1e-6).scale(std::abs(c.re)));
    CHECK(r.mean_power == doctest::Approx(c.power).epsilon(1e-6));
    CHECK(r.noise_ratio == doctest::Approx(c.ratio).epsilon(1e-5));
  }
}

TEST_CASE("averaged_response limits") {
  const auto p = sample_a_like();
  const double xi = 0.87;
  const auto zero = BiasDistribution::single(0.0, optimal_bias(p));
  auto r = averaged_response(p, xi, p.omega_s, zero);
  CHECK(r.gain_eff == doctest::Approx(max_gain(xi) * max_gain(xi)).epsilon(1e-14));
  CHECK(r.noise_ratio == doctest::Approx(1.0).epsilon(1e-12));

  // Vanishing width converges to the same point.
  const auto narrow = BiasDistribution::single(p.kappa_i * 1e-9, optimal_bias(p));
  r = averaged_response(p, xi, p.omega_s, narrow);
  CHECK(r.noise_ratio == doctest::Approx(1.0).epsilon(1e-6));

  const auto wide = BiasDistribution::single(mhz_to_rad(50), optimal_bias(p));
  r = averaged_response(p, 0.0, p.omega_s + mhz_to_rad(10), wide);
  CHECK(r.gain_eff == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.noise_out == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(std::isnan(r.noise_ratio));

  CHECK_THROWS_AS(averaged_response(p, 1.0, p.omega_s, wide), DivergenceError);
  CHECK_THROWS_AS(averaged_response(p, -0.2, p.omega_s, wide), DomainError);
}

TEST_CASE("low-noise operating point at 20 dB") {
  const auto p = sample_a_like();
  const auto d = BiasDistribution::single(mhz_to_rad(5.6), optimal_bias(p));
  const double xi = xi_for_effective_gain(p, d, 20.0);
  // Reference found with a 30-digit root solve at omega_in = omega_S.
  CHECK(xi == doctest::Approx(0.91567207555968132).epsilon(1e-6));
  const auto r = optimal_response(p, xi, d);
  CHECK(rad_to_mhz(r.omega_in - p.omega_s) == doctest::Approx(0.0).scale(1.0).epsilon(1e-3));
  CHECK(r.noise_ratio == doctest::Approx(1.1254980079681275).epsilon(1e-5));
  CHECK(r.noise_ratio <= 1.7);
}

TEST_CASE("frequency_sweep") {
  const auto p = sample_a_like();
  const double xi = xi_for_max_gain(10);
  const auto zero = BiasDistribution::point(optimal_bias(p));
  std::vector<double> grid;
  for (int k = -300; k <= 300; ++k) grid.push_back(p.omega_s + mhz_to_rad(0.1 * k));
  const auto curve = frequency_sweep(p, xi, zero, grid);
  REQUIRE(curve.size() == grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto g = amplitude_gain(detunings(grid[k], {optimal_bias(p)}, p), xi, p);
    CHECK(curve[k].gain_eff == doctest::Approx(std::norm(g)).epsilon(1e-9));
    CHECK(curve[k].omega_in == grid[k]);
  }
  CHECK(rad_to_mhz(extract_bandwidth(curve)) == doctest::Approx(13.476).epsilon(0.05));

  // With bias noise, operate at 20 dB of effective (averaged) gain.
  const auto low = BiasDistribution::single(mhz_to_rad(5.6), optimal_bias(p));
  const double xi_eff = xi_for_effective_gain(p, low, 20.0);
  const double w = rad_to_mhz(extract_bandwidth(frequency_sweep(p, xi_eff, low, grid)));
  CHECK(w >= 11.0);
  CHECK(w <= 14.0);
  // At the bare Xi the averaged peak is lower and the curve wider.
  CHECK(rad_to_mhz(extract_bandwidth(frequency_sweep(p, xi, low, grid))) > w);

  std::vector<double> unsorted{2.0, 1.0};
  CHECK_THROWS_AS(frequency_sweep(p, xi, zero, unsorted), DomainError);
}

TEST_CASE("half_max_width") {
  const double h = 1.7;
  std::vector<double> x, y;
  const double step = 0.05;
  for (int k = -200; k <= 200; ++k) {
    x.push_back(k * step + 0.013);
    y.push_back(1.0 / (1.0 + (x.back() / h) * (x.back() / h)));
  }
  CHECK(std::abs(half_max_width(x, y) - 2 * h) <= step * step);

  std::vector<double> mono(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) mono[k] = x[k];
  CHECK_THROWS_AS(half_max_width(x, mono), RangeError);
  std::vector<double> flat(x.size(), 1.0);
  flat[200] = 1.5;
  CHECK_THROWS_AS(half_max_width(x, flat), RangeError);
}

TEST_CASE("gain_noise_tradeoff") {
  const auto p = sample_a_like();
  const std::vector<double> xis{0.5, 0.8, 0.9, 0.95, 0.97};
  const auto ideal = gain_noise_tradeoff(p, BiasDistribution::point(optimal_bias(p)), xis);
  REQUIRE(ideal.size() == xis.size());
  for (const auto& pt : ideal) {
    CHECK(pt.response.noise_ratio == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(pt.gain_db == doctest::Approx(power_gain_db(max_gain(pt.xi))).epsilon(1e-9));
  }
  for (std::size_t k = 1; k < ideal.size(); ++k)
    CHECK(ideal[k].response.gain_eff >= ideal[k - 1].response.gain_eff);
  // Bandwidth x amplitude gain ~ 2 kappa_eff for the ideal amplifier at high gain.
  for (const auto& pt : ideal)
    if (max_gain(pt.xi) >= 10)
      CHECK(pt.bandwidth * max_gain(pt.xi) ==
            doctest::Approx(2 * kappa_eff(p, SweepKind::kSignal)).epsilon(0.10));

  CHECK_THROWS_AS(gain_noise_tradeoff(p, BiasDistribution::point(optimal_bias(p)),
                                      std::vector<double>{0.5, 1.0}),
                  DivergenceError);
}

TEST_CASE("noise ratio grows with distribution width") {
  const auto p = sample_b_like();
  const double xi = 0.9;
  double prev_quad = 0.0, prev_mc = 0.0;
  for (double fwhm : {0.0, 5.0, 15.0, 30.0, 60.0, 90.0}) {
    const auto d = BiasDistribution::single(mhz_to_rad(fwhm), optimal_bias(p));
    const double r = averaged_response(p, xi, p.omega_s, d).noise_ratio;
    const double r_mc = monte_carlo_oracle(p, xi, p.omega_s, d, 200000, 99).response.noise_ratio;
    CHECK(r >= prev_quad);
    CHECK(r_mc >= prev_mc - 0.01);
    prev_quad = r;
    prev_mc = r_mc;
  }
}

TEST_CASE("Monte-Carlo oracle agrees within three standard errors") {
  std::mt19937_64 rng(20240607);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int k = 0; k < 50; ++k) {
    const bool degenerate = u(rng) < 0.5;
    const auto p = degenerate ? sample_b_like() : sample_a_like();
    const double xi = 0.2 + 0.75 * u(rng);
    const double fwhm = mhz_to_rad(1.0 + 80.0 * u(rng));
    const double shift = mhz_to_rad(-30.0 + 60.0 * u(rng));
    const double center = mhz_to_rad(-20.0 + 40.0 * u(rng));
    const auto d = BiasDistribution({{1.0, center, fwhm}}, optimal_bias(p));
    const auto quad = averaged_response(p, xi, p.omega_s + shift, d);
    const auto mc = monte_carlo_oracle(p, xi, p.omega_s + shift, d, 100000, 1000 + k);
    CHECK(std::abs(mc.response.mean_gain.real() - quad.mean_gain.real()) <= 3 * mc.se_mean_re + 1e-12);
    CHECK(std::abs(mc.response.mean_gain.imag() - quad.mean_gain.imag()) <= 3 * mc.se_mean_im + 1e-12);
    CHECK(std::abs(mc.response.mean_power - quad.mean_power) <= 3 * mc.se_mean_power + 1e-12);
    ++checked;
  }
  CHECK(checked == 50);
}

TEST_CASE("Monte-Carlo oracle determinism and zero-width limit") {
  const auto p = sample_a_like();
  const auto d = medium_mixture(optimal_bias(p));
  const auto a = monte_carlo_oracle(p, 0.7, p.omega_s, d, 10000, 5);
  const auto b = monte_carlo_oracle(p, 0.7, p.omega_s, d, 10000, 5);
  CHECK(a.response.mean_gain == b.response.mean_gain);
  CHECK(a.response.mean_power == b.response.mean_power);
  const auto c = monte_carlo_oracle(p, 0.7, p.omega_s, d, 10000, 6);
  CHECK(c.response.mean_power != a.response.mean_power);

  const auto zero = monte_carlo_oracle(p, 0.7, p.omega_s, BiasDistribution::point(optimal_bias(p)),
                                       10000, 1);
  CHECK(zero.response.mean_gain.real() == doctest::Approx(max_gain(0.7)).epsilon(1e-12));
  CHECK(zero.se_mean_power == 0.0);
}

TEST_CASE("Jensen gap") {
  const auto p = sample_a_like();
  const auto exact = averaged_response(p, 0.9, p.omega_s, BiasDistribution::point(optimal_bias(p)));
  CHECK(exact.mean_power == exact.gain_eff);
  for (double xi : {0.3, 0.7, 0.95}) {
    for (double ratio : {1e-6, 0.1, 1.0}) {
      const auto d = BiasDistribution::single(ratio * p.kappa_i, optimal_bias(p));
      const auto r = averaged_response(p, xi, p.omega_s + mhz_to_rad(4), d);
      const double gap = r.mean_power - r.gain_eff;
      if (ratio < 1e-3) {
        // Lorentzian tails make the gap linear in the width.
        CHECK(gap >= -1e-6 * r.mean_power);
        CHECK(gap <= 1e-4 * r.mean_power);
      } else {
        CHECK(gap > 0.0);
        if (r.gain_eff > 1 + 1e-6) CHECK(r.noise_ratio >= 1.0);
      }
    }
  }
}

TEST_CASE("quadrature is stable under tolerance refinement") {
  const auto p = sample_b_like();
  const auto d = medium_mixture(optimal_bias(p));
  AveragingOptions fine;
  fine.quadrature.rel_tol = 1e-10;
  for (double xi : {0.5, 0.9, 0.99, 0.999}) {
    const auto a = averaged_response(p, xi, p.omega_s + mhz_to_rad(2), d);
    const auto b = averaged_response(p, xi, p.omega_s + mhz_to_rad(2), d, fine);
    CHECK(a.gain_eff == doctest::Approx(b.gain_eff).epsilon(1e-6));
    CHECK(a.mean_power == doctest::Approx(b.mean_power).epsilon(1e-6));
    CHECK(std::isfinite(a.mean_power));
  }
}

TEST_CASE("translation invariance") {
  const auto p = sample_a_like();
  const auto d = medium_mixture(optimal_bias(p));
  auto shifted = p;
  const double s = mhz_to_rad(137.25);
  shifted.omega_i += s;
  const auto ds = d.recentered(d.nominal() + s);
  for (double xi : {0.4, 0.9}) {
    const auto a = averaged_response(p, xi, p.omega_s + mhz_to_rad(3), d);
    const auto b = averaged_response(shifted, xi, p.omega_s + mhz_to_rad(3), ds);
    CHECK(b.gain_eff == doctest::Approx(a.gain_eff).epsilon(1e-9));
    CHECK(b.mean_power == doctest::Approx(a.mean_power).epsilon(1e-9));
  }
}

TEST_CASE("noise divergence sets in when bias range meets the distribution width") {
  struct Config {
    DeviceParams params;
    BiasDistribution dist;
    double fwhm;
  };
  const auto a = sample_a_like();
  const auto b = sample_b_like();
  const Config configs[] = {
      {a, BiasDistribution::single(mhz_to_rad(5.6), optimal_bias(a)), mhz_to_rad(5.6)},
      {b, medium_mixture(optimal_bias(b)), mhz_to_rad(28.5)},
      {b, BiasDistribution::single(mhz_to_rad(73.8), optimal_bias(b)), mhz_to_rad(73.8)},
  };
  for (const auto& c : configs) {
    const auto pt = max_gain_within_noise_ratio(c.params, c.dist, 3.0);
    CHECK(pt.response.noise_ratio == doctest::Approx(3.0).epsilon(1e-3));
    const double bias_range = bandwidth_analytic(c.params, max_gain(pt.xi), SweepKind::kBias);
    const double ratio = bias_range / c.fwhm;
    CHECK(ratio >= 0.2);
    CHECK(ratio <= 5.0);
  }
}
