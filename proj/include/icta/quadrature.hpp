#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <span>
#include <sstream>
#include <vector>

#include "icta/error.hpp"

namespace icta::quadrature {

// Gauss-Legendre nodes and weights on [-1, 1].
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Cached and thread-safe; order >= 1.
const Rule& gauss_legendre(std::size_t order);

struct AdaptiveOptions {
  std::size_t order = 257;
  double rel_tol = 1e-6;
  std::size_t max_panels = 4096;
};

template <std::size_t N>
struct AdaptiveResult {
  std::array<double, N> value{};
  std::array<double, N> error{};
  std::size_t panels = 0;
  double rel_error = 0.0;
};

namespace detail {

template <std::size_t N, class F>
std::array<double, N> apply_rule(const Rule& rule, F& f, double a, double b) {
  std::array<double, N> sum{};
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const std::array<double, N> v = f(mid + half * rule.nodes[k]);
    for (std::size_t j = 0; j < N; ++j) sum[j] += rule.weights[k] * v[j];
  }
  for (auto& s : sum) s *= half;
  return sum;
}

template <std::size_t N>
struct Panel {
  double a, b;
  std::array<double, N> left, right;  // rule applied to each half
  std::array<double, N> value;        // left + right
  std::array<double, N> error;        // |whole-panel rule - value|
  double score;
  bool operator<(const Panel& o) const { return score < o.score; }
};

}  // namespace detail

// Globally adaptive composite Gauss-Legendre integration of a vector-valued
// integrand over [a, b]. Each panel's error is the difference between the
// rule applied to the panel and to its two halves; the panel with the largest
// error is bisected until `rel_error(value, error) <= rel_tol`.
//
// `rel_error` maps (total value, total error) to a scalar relative error.
//
// `breaks` are extra interior points where the integrand is known to vary
// sharply; the initial panels end on them.
template <std::size_t N, class F, class Norm>
AdaptiveResult<N> integrate_adaptive(F&& f, double a, double b, Norm&& rel_error,
                                     const AdaptiveOptions& opts = {},
                                     std::span<const double> breaks = {}) {
  const Rule& rule = gauss_legendre(opts.order);
  auto make_panel = [&](double lo, double hi, const std::array<double, N>& whole) {
    const double mid = 0.5 * (lo + hi);
    detail::Panel<N> p{lo, hi, detail::apply_rule<N>(rule, f, lo, mid),
                       detail::apply_rule<N>(rule, f, mid, hi), {}, {}, 0.0};
    for (std::size_t j = 0; j < N; ++j) {
      p.value[j] = p.left[j] + p.right[j];
      p.error[j] = std::abs(whole[j] - p.value[j]);
      p.score = std::max(p.score, p.error[j]);
    }
    return p;
  };

  std::priority_queue<detail::Panel<N>> heap;
  AdaptiveResult<N> result;
  auto push = [&](detail::Panel<N> p) {
    for (std::size_t j = 0; j < N; ++j) {
      result.value[j] += p.value[j];
      result.error[j] += p.error[j];
    }
    heap.push(std::move(p));
  };
  std::vector<double> edges{a};
  for (double x : breaks)
    if (x > a && x < b) edges.push_back(x);
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  for (std::size_t k = 0; k + 1 < edges.size(); ++k)
    push(make_panel(edges[k], edges[k + 1],
                    detail::apply_rule<N>(rule, f, edges[k], edges[k + 1])));

  for (;;) {
    result.panels = heap.size();
    result.rel_error = rel_error(result.value, result.error);
    if (result.rel_error <= opts.rel_tol) break;
    if (heap.size() >= opts.max_panels) {
      std::ostringstream msg;
      msg << "adaptive quadrature did not converge: " << heap.size()
          << " panels, estimated relative error " << result.rel_error << " > " << opts.rel_tol;
      throw NumericalError(msg.str());
    }
    const detail::Panel<N> worst = heap.top();
    heap.pop();
    for (std::size_t j = 0; j < N; ++j) {
      result.value[j] -= worst.value[j];
      result.error[j] -= worst.error[j];
    }
    const double mid = 0.5 * (worst.a + worst.b);
    push(make_panel(worst.a, mid, worst.left));
    push(make_panel(mid, worst.b, worst.right));
  }

  // Re-sum to drop the drift of the running totals.
  result.value = {};
  result.error = {};
  while (!heap.empty()) {
    for (std::size_t j = 0; j < N; ++j) {
      result.value[j] += heap.top().value[j];
      result.error[j] += heap.top().error[j];
    }
    heap.pop();
  }
  result.rel_error = rel_error(result.value, result.error);
  return result;
}

}  // namespace icta::quadrature
