#include "icta/linewidth_fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace icta {

void SpectrumRecord::validate() const {
  if (omega_j.size() != psd.size())
    throw DomainError("spectrum: omega_j and psd lengths differ");
  if (!sigma.empty() && sigma.size() != psd.size())
    throw DomainError("spectrum: sigma length differs from psd");
  if (omega_j.size() < 8) throw DomainError("spectrum: at least 8 points required");
  for (std::size_t k = 0; k < psd.size(); ++k) {
    if (!std::isfinite(psd[k]) || !std::isfinite(omega_j[k]))
      throw DomainError("spectrum: non-finite sample at index " + std::to_string(k));
    if (k > 0 && !(omega_j[k] > omega_j[k - 1]))
      throw DomainError("spectrum: omega_j must be strictly increasing");
    if (!sigma.empty() && !(sigma[k] > 0.0))
      throw DomainError("spectrum: sigma must be positive");
  }
}

double FitResult::evaluate(double omega_j) const {
  double y = background;
  for (const auto& c : components) {
    const double h = 0.5 * c.fwhm;
    const double x = omega_j - c.center;
    y += c.amplitude * h * h / (x * x + h * h);
  }
  return y;
}

BiasDistribution FitResult::to_distribution(double reference, double nominal) const {
  std::vector<LorentzianComponent> comps;
  for (const auto& c : components)
    comps.push_back({c.amplitude * c.fwhm * std::numbers::pi / 2.0, c.center - reference, c.fwhm});
  return BiasDistribution::normalized(std::move(comps), nominal);
}

double effective_temperature(double fwhm, double z0_ohm) {
  if (!(z0_ohm > 0.0)) throw DomainError("bias impedance must be positive");
  return temperature_from_fwhm(fwhm, z0_ohm);
}

namespace {

std::vector<double> median5(const std::vector<double>& y) {
  const std::size_t n = y.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= 2 ? i - 2 : 0;
    const std::size_t hi = std::min(n - 1, i + 2);
    std::vector<double> w(y.begin() + static_cast<std::ptrdiff_t>(lo),
                          y.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
    std::nth_element(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(w.size() / 2), w.end());
    out[i] = w[w.size() / 2];
  }
  return out;
}

double median_of(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
  return v[v.size() / 2];
}

// Half-maximum crossing walking from `peak` in direction `dir`; NaN if none.
double half_crossing(const std::vector<double>& x, const std::vector<double>& s,
                     std::size_t peak, double level, int dir) {
  std::size_t i = peak;
  for (;;) {
    if ((dir < 0 && i == 0) || (dir > 0 && i + 1 == s.size()))
      return std::numeric_limits<double>::quiet_NaN();
    const std::size_t j = dir < 0 ? i - 1 : i + 1;
    if (s[j] <= level) return x[i] + (level - s[i]) * (x[j] - x[i]) / (s[j] - s[i]);
    i = j;
  }
}

}  // namespace

FitSeed seed_parameters(const SpectrumRecord& data, std::size_t n_components) {
  data.validate();
  if (n_components == 0) throw DomainError("n_components must be at least 1");
  const auto& x = data.omega_j;
  const std::size_t n = x.size();
  const auto s = median5(data.psd);

  FitSeed seed;
  seed.background = *std::min_element(data.psd.begin(), data.psd.end());

  // Noise level from the residual of the smoothing.
  std::vector<double> dev(n);
  for (std::size_t i = 0; i < n; ++i) dev[i] = std::abs(data.psd[i] - s[i]);
  const double noise = 1.4826 * median_of(dev);

  std::vector<std::size_t> candidates;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(s[i] > s[i - 1] && s[i] >= s[i + 1])) continue;
    bool dominant = true;
    for (std::size_t j = (i >= 2 ? i - 2 : 0); j <= std::min(n - 1, i + 2); ++j)
      if (s[j] > s[i]) dominant = false;
    if (dominant) candidates.push_back(i);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });

  const double step = (x.back() - x.front()) / static_cast<double>(n - 1);
  double fwhm = 2.0 * step;
  if (!candidates.empty()) {
    const std::size_t top = candidates.front();
    const double level = seed.background + 0.5 * (s[top] - seed.background);
    const double left = half_crossing(x, s, top, level, -1);
    const double right = half_crossing(x, s, top, level, +1);
    double width = std::numeric_limits<double>::quiet_NaN();
    if (std::isfinite(left) && std::isfinite(right))
      width = right - left;
    else if (std::isfinite(left))
      width = 2.0 * (x[top] - left);
    else if (std::isfinite(right))
      width = 2.0 * (right - x[top]);
    if (std::isfinite(width)) fwhm = std::max(width, 2.0 * step);
  }

  const double tallest = candidates.empty() ? 0.0 : s[candidates.front()] - seed.background;
  for (std::size_t i : candidates) {
    if (seed.components.size() == n_components) break;
    const double height = s[i] - seed.background;
    if (!(height > 0.0) || height < 0.01 * tallest || height < 3.0 * noise) continue;
    const bool separated = std::all_of(seed.components.begin(), seed.components.end(),
                                       [&](const auto& c) { return std::abs(x[i] - c.center) >= 0.5 * fwhm; });
    if (!separated) continue;
    // Center on the raw maximum inside the smoothing window.
    std::size_t at = i;
    for (std::size_t j = (i >= 2 ? i - 2 : 0); j <= std::min(n - 1, i + 2); ++j)
      if (data.psd[j] > data.psd[at]) at = j;
    seed.components.push_back({height, x[at], fwhm});
  }
  if (seed.components.size() < n_components) {
    std::ostringstream msg;
    msg << "found " << seed.components.size() << " local maxima but " << n_components
        << " components were requested; try --components " << std::max<std::size_t>(seed.components.size(), 1);
    throw DomainError(msg.str());
  }
  std::sort(seed.components.begin(), seed.components.end(),
            [](const auto& a, const auto& b) { return a.center < b.center; });
  return seed;
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Fit in normalized coordinates u = (omega - mid)/xscale, y/yscale.
// Full parameter layout: [b, (log A, c, log w) per component].
struct Problem {
  VectorXd u, y, inv_sigma;
  MatrixXd map;  // full = map * free
  std::size_t n_comp = 0;

  VectorXd residual(const VectorXd& full) const {
    VectorXd r(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      double f = full[0];
      for (std::size_t k = 0; k < n_comp; ++k) {
        const double amp = std::exp(full[1 + 3 * k]);
        const double h = 0.5 * std::exp(full[3 + 3 * k]);
        const double dx = u[i] - full[2 + 3 * k];
        f += amp * h * h / (dx * dx + h * h);
      }
      r[i] = (f - y[i]) * inv_sigma[i];
    }
    return r;
  }

  MatrixXd jacobian(const VectorXd& full) const {
    MatrixXd j(u.size(), full.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      j(i, 0) = inv_sigma[i];
      for (std::size_t k = 0; k < n_comp; ++k) {
        const double amp = std::exp(full[1 + 3 * k]);
        const double h = 0.5 * std::exp(full[3 + 3 * k]);
        const double dx = u[i] - full[2 + 3 * k];
        const double d = dx * dx + h * h;
        const double l = h * h / d;
        const auto c = static_cast<Eigen::Index>(1 + 3 * k);
        j(i, c) = amp * l * inv_sigma[i];
        j(i, c + 1) = amp * h * h * 2.0 * dx / (d * d) * inv_sigma[i];
        j(i, c + 2) = amp * 2.0 * l * (1.0 - l) * inv_sigma[i];
      }
    }
    return j * map;
  }
};

}  // namespace

FitResult fit_mixture(const SpectrumRecord& data, std::size_t n_components,
                      const FitOptions& opts) {
  data.validate();
  if (n_components == 0) throw DomainError("n_components must be at least 1");
  if (3 * n_components + 1 > data.psd.size())
    throw DomainError("too few points for " + std::to_string(n_components) + " components");
  const bool symmetric = opts.symmetric_sides;
  if (symmetric && n_components != 3)
    throw DomainError("symmetric side constraint needs exactly 3 components");

  const FitSeed seed = seed_parameters(data, n_components);

  const auto n = static_cast<Eigen::Index>(data.psd.size());
  const double mid = 0.5 * (data.omega_j.front() + data.omega_j.back());
  const double xscale = 0.5 * (data.omega_j.back() - data.omega_j.front());
  double yscale = 0.0;
  for (double v : data.psd) yscale = std::max(yscale, std::abs(v));

  Problem prob;
  prob.n_comp = n_components;
  prob.u.resize(n);
  prob.y.resize(n);
  prob.inv_sigma.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    prob.u[i] = (data.omega_j[k] - mid) / xscale;
    prob.y[i] = data.psd[k] / yscale;
    prob.inv_sigma[i] = data.sigma.empty() ? 1.0 : yscale / data.sigma[k];
  }

  const auto n_full = static_cast<Eigen::Index>(1 + 3 * n_components);
  VectorXd free;
  if (symmetric) {
    // free = [b, logA0, c0, logw0, logA_side, half_spacing, logw_side]
    prob.map = MatrixXd::Zero(n_full, 7);
    prob.map(0, 0) = 1;
    prob.map(4, 1) = 1;  // central peak is component index 1 after sorting
    prob.map(5, 2) = 1;
    prob.map(6, 3) = 1;
    prob.map(1, 4) = 1;
    prob.map(7, 4) = 1;
    prob.map(2, 2) = 1;
    prob.map(2, 5) = -1;
    prob.map(8, 2) = 1;
    prob.map(8, 5) = 1;
    prob.map(3, 6) = 1;
    prob.map(9, 6) = 1;
    const auto& c = seed.components;
    free.resize(7);
    free << seed.background / yscale, std::log(c[1].amplitude / yscale),
        (c[1].center - mid) / xscale, std::log(c[1].fwhm / xscale),
        0.5 * (std::log(c[0].amplitude / yscale) + std::log(c[2].amplitude / yscale)),
        0.5 * (c[2].center - c[0].center) / xscale, std::log(c[1].fwhm / xscale);
  } else {
    prob.map = MatrixXd::Identity(n_full, n_full);
    free.resize(n_full);
    free[0] = seed.background / yscale;
    for (std::size_t k = 0; k < n_components; ++k) {
      const auto& c = seed.components[k];
      const auto i = static_cast<Eigen::Index>(1 + 3 * k);
      free[i] = std::log(c.amplitude / yscale);
      free[i + 1] = (c.center - mid) / xscale;
      free[i + 2] = std::log(c.fwhm / xscale);
    }
  }

  auto to_result = [&](const VectorXd& fr, double cost) {
    const VectorXd full = prob.map * fr;
    FitResult res;
    res.background = full[0] * yscale;
    for (std::size_t k = 0; k < n_components; ++k) {
      const auto i = static_cast<Eigen::Index>(1 + 3 * k);
      res.components.push_back(
          {std::exp(full[i]) * yscale, mid + full[i + 1] * xscale, std::exp(full[i + 2]) * xscale});
    }
    res.residual_norm = std::sqrt(2.0 * cost) * yscale;
    return res;
  };

  VectorXd r = prob.residual(prob.map * free);
  double cost = 0.5 * r.squaredNorm();
  std::vector<double> history{std::sqrt(2.0 * cost) * yscale};
  double mu = 1e-3;
  bool converged = false;
  int iter = 0;
  MatrixXd jac = prob.jacobian(prob.map * free);

  auto fail = [&](const std::string& why) {
    FitResult best = to_result(free, cost);
    best.iterations = iter;
    best.residual_history = history;
    throw FitError(why, std::move(best));
  };

  for (; iter < opts.max_iterations && !converged; ++iter) {
    const MatrixXd a = jac.transpose() * jac;
    const VectorXd g = jac.transpose() * r;
    if (g.lpNorm<Eigen::Infinity>() <= opts.gradient_tol) {
      converged = true;
      break;
    }
    bool accepted = false;
    while (!accepted) {
      MatrixXd damped = a;
      for (Eigen::Index k = 0; k < a.rows(); ++k)
        damped(k, k) += mu * std::max(a(k, k), 1e-12);
      Eigen::LDLT<MatrixXd> ldlt(damped);
      if (ldlt.info() != Eigen::Success) fail("degenerate Jacobian in Levenberg-Marquardt step");
      const VectorXd step = ldlt.solve(-g);
      if (!step.allFinite()) fail("degenerate Jacobian in Levenberg-Marquardt step");
      const VectorXd trial = free + step;
      const VectorXd r_trial = prob.residual(prob.map * trial);
      const double cost_trial = 0.5 * r_trial.squaredNorm();
      if (std::isfinite(cost_trial) && cost_trial < cost) {
        const double drop = cost - cost_trial;
        const bool small_step = step.norm() <= opts.step_tol * (free.norm() + opts.step_tol);
        const bool small_drop = drop <= opts.residual_tol * cost;
        free = trial;
        r = r_trial;
        cost = cost_trial;
        history.push_back(std::sqrt(2.0 * cost) * yscale);
        jac = prob.jacobian(prob.map * free);
        mu = std::max(mu / 3.0, 1e-12);
        accepted = true;
        converged = small_step || small_drop;
      } else {
        mu *= 4.0;
        if (mu > 1e16) {
          // No downhill step left at machine precision: a minimum.
          accepted = true;
          converged = true;
        }
      }
    }
  }

  if (!converged) {
    std::ostringstream msg;
    msg << "Levenberg-Marquardt did not converge in " << opts.max_iterations
        << " iterations (residual norm " << std::sqrt(2.0 * cost) * yscale << ")";
    fail(msg.str());
  }

  FitResult res = to_result(free, cost);
  res.converged = true;
  res.iterations = iter;
  res.residual_history = history;

  // Covariance s^2 (J^T J)^-1 in free parameters, mapped to the full set.
  const MatrixXd a = jac.transpose() * jac;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(a);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double lmin = eig.eigenvalues().minCoeff();
  if (!(lmin > 1e-14 * lmax)) fail("degenerate Jacobian at the optimum (parameters not identifiable)");
  const auto dof = static_cast<double>(n - free.size());
  const double s2 = dof > 0 ? 2.0 * cost / dof : 0.0;
  const MatrixXd cov = prob.map * (s2 * a.inverse()) * prob.map.transpose();
  res.background_uncertainty = std::sqrt(cov(0, 0)) * yscale;
  for (std::size_t k = 0; k < n_components; ++k) {
    const auto i = static_cast<Eigen::Index>(1 + 3 * k);
    const auto& c = res.components[k];
    res.uncertainties.push_back({c.amplitude * std::sqrt(cov(i, i)),
                                 std::sqrt(cov(i + 1, i + 1)) * xscale,
                                 c.fwhm * std::sqrt(cov(i + 2, i + 2))});
  }

  // Report components in ascending center order.
  std::vector<std::size_t> order(n_components);
  for (std::size_t k = 0; k < n_components; ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a_, std::size_t b_) {
    return res.components[a_].center < res.components[b_].center;
  });
  FitResult sorted = res;
  for (std::size_t k = 0; k < n_components; ++k) {
    sorted.components[k] = res.components[order[k]];
    sorted.uncertainties[k] = res.uncertainties[order[k]];
  }
  return sorted;
}

}  // namespace icta
