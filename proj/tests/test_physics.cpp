#include <cmath>
#include <random>

#include "doctest.h"
#include "icta/error.hpp"
#include "icta/physics.hpp"
#include "icta/units.hpp"
#include "oracles.hpp"

using namespace icta;
using icta::testing::bias_sweep_power;
using icta::testing::full_width_half_max;
using icta::testing::sample_a_like;
using icta::testing::sample_b_like;
using icta::testing::signal_sweep_power;
using units::mhz_to_rad;
using units::rad_to_mhz;

TEST_CASE("constants are the exact SI values") {
  CHECK(constants::kPlanck == 6.62607015e-34);
  CHECK(constants::kElementaryCharge == 1.602176634e-19);
  CHECK(constants::kBoltzmann == 1.380649e-23);
  CHECK(2.0 * std::numbers::pi * constants::kHbar == doctest::Approx(constants::kPlanck).epsilon(1e-15));
}

TEST_CASE("zero_point_phase") {
  CHECK(std::round(zero_point_phase(400) * 100) / 100 == doctest::Approx(0.44));
  // Exact evaluation at 80 ohm is 0.1973 (the printed device table lists 0.19).
  CHECK(zero_point_phase(80) == doctest::Approx(0.197348).epsilon(1e-5));
  CHECK(zero_point_phase(0) == 0.0);
  CHECK(zero_point_phase(10) < zero_point_phase(11));
  CHECK_THROWS_AS(zero_point_phase(-1), DomainError);
}

TEST_CASE("coupling_xi and ej_critical") {
  const auto a = sample_a_like();
  const double ej_a = units::joule_to_mhz(ej_critical(a));
  CHECK(ej_a == doctest::Approx(760).epsilon(0.01));
  CHECK(units::joule_to_mhz(ej_critical(sample_b_like())) == doctest::Approx(4750.15).epsilon(1e-4));

  CHECK(coupling_xi(sample_a_like(units::mhz_to_joule(760))) == doctest::Approx(1.0).epsilon(0.01));
  CHECK(coupling_xi(sample_a_like(units::mhz_to_joule(380))) == doctest::Approx(0.5).epsilon(0.01));
  CHECK(coupling_xi(sample_a_like(0.0)) == 0.0);

  // Xi is linear in E_J and exactly 1 at the critical energy.
  auto crit = a;
  crit.josephson_energy = ej_critical(a);
  CHECK(coupling_xi(crit) == doctest::Approx(1.0).epsilon(1e-12));
  auto half = a;
  half.josephson_energy = 0.5 * crit.josephson_energy;
  CHECK(coupling_xi(half) == doctest::Approx(0.5).epsilon(1e-12));

  // Symmetric device: E_J = hbar kappa / phi^2.
  const auto b = sample_b_like();
  const double phi = zero_point_phase(80);
  CHECK(ej_critical(b) == doctest::Approx(constants::kHbar * b.kappa_s / (phi * phi)).epsilon(1e-13));
  CHECK(ej_for_xi(b, 0.3) == doctest::Approx(0.3 * ej_critical(b)).epsilon(1e-14));
}

TEST_CASE("device parameter validation") {
  auto p = sample_a_like();
  p.kappa_s = 0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = sample_a_like();
  p.degenerate = true;
  CHECK_THROWS_AS(p.validate(), DomainError);
  CHECK_NOTHROW(sample_b_like().validate());
}

TEST_CASE("bias point voltage round trip") {
  const auto bias = BiasPoint::from_voltage(22.65e-6);
  CHECK(bias.voltage() == doctest::Approx(22.65e-6).epsilon(1e-14));
  CHECK(rad_to_mhz(bias.omega_j) == doctest::Approx(2 * 1.602176634e-19 * 22.65e-6 / 6.62607015e-34 / 1e6).epsilon(1e-12));
}

TEST_CASE("detunings") {
  auto p = sample_a_like();
  auto d = detunings(p.omega_s, {p.omega_s + p.omega_i}, p);
  CHECK(d.signal == 0.0);
  CHECK(d.idler == 0.0);

  p.omega_i = mhz_to_rad(6181);
  d = detunings(mhz_to_rad(4771), {mhz_to_rad(10952)}, p);
  CHECK(rad_to_mhz(d.signal) == doctest::Approx(-29).epsilon(1e-9));
  CHECK(rad_to_mhz(d.idler) == doctest::Approx(0).epsilon(1e-9));

  p = sample_a_like();
  const double x = mhz_to_rad(3.3);
  d = detunings(p.omega_s + x, {p.omega_s + p.omega_i}, p);
  CHECK(d.signal == doctest::Approx(x));
  CHECK(d.idler == doctest::Approx(-x));
}

TEST_CASE("amplitude_gain examples") {
  const auto p = sample_a_like();
  for (double ds : {-50.0, 0.0, 17.0})
    for (double di : {-80.0, 0.0, 5.0})
      CHECK(std::abs(amplitude_gain({mhz_to_rad(ds), mhz_to_rad(di)}, 0.0, p)) ==
            doctest::Approx(1.0).epsilon(1e-14));

  const auto g3 = amplitude_gain({0, 0}, std::sqrt(0.5), p);
  CHECK(g3.real() == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(g3.imag() == doctest::Approx(0.0));
  CHECK(power_gain_db(g3) == doctest::Approx(9.5424).epsilon(1e-4));
  const auto g19 = amplitude_gain({0, 0}, std::sqrt(0.9), p);
  CHECK(g19.real() == doctest::Approx(19.0).epsilon(1e-13));
  CHECK(power_gain_db(g19) == doctest::Approx(25.575).epsilon(1e-4));

  CHECK_THROWS_AS(amplitude_gain({0, 0}, 1.0, p), DivergenceError);
  CHECK_THROWS_AS(amplitude_gain({0, 0}, -0.1, p), DomainError);
}

TEST_CASE("max_gain") {
  CHECK(max_gain(0) == 1.0);
  CHECK(max_gain(std::sqrt(0.5)) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(max_gain(std::sqrt(0.98)) == doctest::Approx(99.0).epsilon(1e-12));
  CHECK(power_gain_db(99.0) == doctest::Approx(39.91).epsilon(1e-3));
  CHECK_THROWS_AS(max_gain(1.0), DivergenceError);
  CHECK(xi_for_max_gain(max_gain(0.73)) == doctest::Approx(0.73).epsilon(1e-14));
}

TEST_CASE("lorentzian_gain_approx") {
  CHECK(lorentzian_gain_approx(0, 1e9, 12.0) == std::complex<double>(12.0, 0.0));
  const double k = mhz_to_rad(67.4);
  CHECK(std::abs(lorentzian_gain_approx(k / 20, k, 20)) == doctest::Approx(20 / std::sqrt(2.0)));
  CHECK(std::abs(lorentzian_gain_approx(mhz_to_rad(6.74), k, 10)) == doctest::Approx(7.0711).epsilon(1e-4));

  // Against the full gain at optimal bias with the same peak value.
  const auto p = sample_a_like();
  const double keff = kappa_eff(p, SweepKind::kSignal);
  const double xi = xi_for_max_gain(10);
  const double delta = keff / 10;
  const double exact = std::abs(amplitude_gain({delta, -delta}, xi, p));
  const double approx = std::abs(lorentzian_gain_approx(delta, keff, 10));
  CHECK(std::abs(exact - approx) / approx < 0.10);
}

TEST_CASE("bandwidth_analytic") {
  const auto p = sample_a_like();
  CHECK(rad_to_mhz(kappa_eff(p, SweepKind::kSignal)) == doctest::Approx(96.0 * 226 / 322).epsilon(1e-12));
  CHECK(rad_to_mhz(bandwidth_analytic(p, 10)) == doctest::Approx(13.476).epsilon(1e-3));
  CHECK(bandwidth_analytic(p, 20) == doctest::Approx(0.5 * bandwidth_analytic(p, 10)));
  const auto b = sample_b_like();
  CHECK(bandwidth_analytic(b, 7) == doctest::Approx(b.kappa_s / 7).epsilon(1e-14));
  CHECK(bandwidth_analytic(p, 10, SweepKind::kBias) == doctest::Approx(2 * p.kappa_i / 10));
  CHECK_THROWS_AS(bandwidth_analytic(p, 1.0), DomainError);

  // Numerical 3 dB width of |g|^2 at g0 = 10.
  const double xi = xi_for_max_gain(10);
  const double width = full_width_half_max(
      [&](double d) { return signal_sweep_power(p, xi, d); }, 0.0, mhz_to_rad(0.5));
  CHECK(rad_to_mhz(width) == doctest::Approx(13.476).epsilon(0.05));
}

TEST_CASE("gain-bandwidth product is constant at high gain") {
  const auto p = sample_a_like();
  const double keff = kappa_eff(p, SweepKind::kSignal);
  double lo = 1e300, hi = 0;
  for (double g0 : {10.0, 14.0, 20.0, 35.0, 60.0, 100.0, 300.0}) {
    const double xi = xi_for_max_gain(g0);
    const double width = full_width_half_max(
        [&](double d) { return signal_sweep_power(p, xi, d); }, 0.0, keff / g0 / 4);
    const double product = width * g0;
    CHECK(product == doctest::Approx(2 * keff).epsilon(0.10));
    lo = std::min(lo, product);
    hi = std::max(hi, product);
  }
  CHECK(hi / lo - 1 < 0.05);
}

TEST_CASE("conjugate detuning symmetry and quantum-limit consistency") {
  const auto p = sample_a_like();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> det(-300, 300), xi_dist(0, 0.999);
  for (int k = 0; k < 200; ++k) {
    const double d = mhz_to_rad(det(rng));
    const double xi = xi_dist(rng);
    CHECK(std::abs(amplitude_gain({d, -d}, xi, p)) ==
          doctest::Approx(std::abs(amplitude_gain({-d, d}, xi, p))).epsilon(1e-12));
    const double excess = std::norm(amplitude_gain({0, d}, xi, p)) - 1.0;
    CHECK(excess >= -1e-12);
    const double excess_s = std::norm(amplitude_gain({d, 0}, xi, p)) - 1.0;
    CHECK(excess_s >= -1e-12);
  }
}

TEST_CASE("max_gain matches amplitude_gain at resonance for random Xi") {
  const auto p = sample_a_like();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> xi_dist(0, 0.999);
  for (int k = 0; k < 100; ++k) {
    const double xi = xi_dist(rng);
    CHECK(std::abs(amplitude_gain({0, 0}, xi, p)) == doctest::Approx(max_gain(xi)).epsilon(1e-12));
  }
}

TEST_CASE("degenerate device: bias range approaches twice the signal bandwidth") {
  // Exact Eq.-4 widths give ratio ~ 2 sqrt(g0 / (g0 + 1)); the factor 2 is the
  // high-gain limit.
  const auto b = sample_b_like();
  double previous_gap = 1.0;
  for (double g0 : {10.0, 30.0, 100.0, 300.0}) {
    const double xi = xi_for_max_gain(g0);
    const double step = b.kappa_s / g0 / 8;
    const double signal = full_width_half_max(
        [&](double d) { return signal_sweep_power(b, xi, d); }, 0.0, step);
    const double bias = full_width_half_max(
        [&](double d) { return bias_sweep_power(b, xi, d); }, 0.0, step);
    const double ratio = bias / signal;
    CHECK(ratio == doctest::Approx(2.0 * std::sqrt(g0 / (g0 + 1))).epsilon(0.005));
    if (g0 >= 30) CHECK(ratio == doctest::Approx(2.0).epsilon(0.02));
    CHECK(std::abs(ratio - 2.0) < previous_gap);
    previous_gap = std::abs(ratio - 2.0);
  }
}

TEST_CASE("Lorentzian approximation converges as Xi approaches 1") {
  const auto p = sample_a_like();
  const double keff = kappa_eff(p, SweepKind::kSignal);
  double previous = 1e300;
  for (double xi : {0.9, 0.99, 0.999}) {
    const double g0 = max_gain(xi);
    double worst = 0;
    // Sup-norm over the 3 dB band, |delta| <= keff / g0.
    for (int k = -200; k <= 200; ++k) {
      const double d = keff / g0 * k / 200.0;
      const double exact = std::abs(amplitude_gain({d, -d}, xi, p));
      const double approx = std::abs(lorentzian_gain_approx(d, keff, g0));
      worst = std::max(worst, std::abs(exact - approx) / exact);
    }
    CHECK(worst < previous);
    previous = worst;
  }
  CHECK(previous < 1e-3);
}
