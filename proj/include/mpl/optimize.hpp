#ifndef MPL_OPTIMIZE_HPP
#define MPL_OPTIMIZE_HPP

// Limited-memory BFGS ascent with Armijo backtracking.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace mpl {

enum class OptimizeStatus {
  converged,   // gradient norm <= tolerance
  max_iters,
  unbounded,   // a coordinate left the divergence bound
  stalled,     // no acceptable step even along steepest ascent
  infeasible,  // objective is -inf at the starting point
};

inline std::string to_string(OptimizeStatus s) {
  switch (s) {
    case OptimizeStatus::converged: return "converged";
    case OptimizeStatus::max_iters: return "max-iters";
    case OptimizeStatus::unbounded: return "unbounded";
    case OptimizeStatus::stalled: return "stalled";
    case OptimizeStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

struct LbfgsOptions {
  double grad_tol = 1e-8;
  std::size_t max_iter = 500;
  std::size_t memory = 10;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  std::size_t max_backtracks = 60;
  double divergence_bound = std::numeric_limits<double>::infinity();
  // Size measure compared against divergence_bound; max |x_j| when empty.
  std::function<double(const std::vector<double>&)> magnitude;
};

struct OptimizeResult {
  std::vector<double> x;
  double value = -std::numeric_limits<double>::infinity();
  double grad_norm = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  std::vector<double> trace;  // objective after each accepted step, starting point first
  OptimizeStatus status = OptimizeStatus::infeasible;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

inline double max_abs(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace detail

/// Maximizes f. fg(x, grad) returns f(x) and writes the gradient; it may
/// return -inf, which the line search treats as a rejected trial point.
/// The trace is non-decreasing.
template <class Fn>
OptimizeResult maximize(Fn&& fg, std::vector<double> x, const LbfgsOptions& opt) {
  using detail::dot;
  OptimizeResult res;
  const std::size_t dim = x.size();
  std::vector<double> g(dim), g_new(dim), x_new(dim), d(dim);
  double f = fg(x, g);
  res.x = x;
  res.value = f;
  if (!std::isfinite(f)) return res;
  res.trace.push_back(f);
  res.grad_norm = detail::norm2(g);

  // Pairs are stored for the ascent problem: s = step, y = -(g_new - g).
  std::deque<std::vector<double>> S, Y;
  std::deque<double> rho;

  res.status = OptimizeStatus::max_iters;
  for (std::size_t iter = 0;; ++iter) {
    res.grad_norm = detail::norm2(g);
    if (res.grad_norm <= opt.grad_tol) {
      res.status = OptimizeStatus::converged;
      break;
    }
    if (iter == opt.max_iter) break;

    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      // two-loop recursion: d = H g
      d = g;
      std::vector<double> alpha(S.size());
      for (std::size_t i = S.size(); i-- > 0;) {
        alpha[i] = rho[i] * dot(S[i], d);
        for (std::size_t j = 0; j < dim; ++j) d[j] -= alpha[i] * Y[i][j];
      }
      if (!S.empty()) {
        const double gamma = dot(S.back(), Y.back()) / dot(Y.back(), Y.back());
        for (auto& v : d) v *= gamma;
      }
      for (std::size_t i = 0; i < S.size(); ++i) {
        const double beta = rho[i] * dot(Y[i], d);
        for (std::size_t j = 0; j < dim; ++j) d[j] += (alpha[i] - beta) * S[i][j];
      }
      double slope = dot(g, d);
      if (!(slope > 0.0)) {
        S.clear();
        Y.clear();
        rho.clear();
        d = g;
        slope = dot(g, g);
      }
      double step = S.empty() ? std::min(1.0, 1.0 / detail::norm2(d)) : 1.0;
      for (std::size_t bt = 0; bt <= opt.max_backtracks; ++bt, step *= opt.backtrack) {
        for (std::size_t j = 0; j < dim; ++j) x_new[j] = x[j] + step * d[j];
        const double f_new = fg(x_new, g_new);
        if (!std::isfinite(f_new)) continue;
        const bool armijo = f_new >= f + opt.armijo_c1 * step * slope;
        // At the roundoff floor the sufficient-increase test is noise; accept a
        // non-decreasing step that still shrinks the gradient.
        const bool floor_step = f_new >= f &&
                                f_new - f <= 1e-14 * (1.0 + std::abs(f)) &&
                                detail::norm2(g_new) < res.grad_norm;
        if (!armijo && !floor_step) continue;
        std::vector<double> s(dim), y(dim);
        for (std::size_t j = 0; j < dim; ++j) {
          s[j] = x_new[j] - x[j];
          y[j] = g[j] - g_new[j];
        }
        const double sy = dot(s, y);
        if (sy > 1e-12 * detail::norm2(s) * detail::norm2(y)) {
          S.push_back(std::move(s));
          Y.push_back(std::move(y));
          rho.push_back(1.0 / sy);
          if (S.size() > opt.memory) {
            S.pop_front();
            Y.pop_front();
            rho.pop_front();
          }
        }
        x.swap(x_new);
        g.swap(g_new);
        f = f_new;
        accepted = true;
        break;
      }
      if (!accepted) {
        if (S.empty()) break;  // steepest ascent already failed
        S.clear();
        Y.clear();
        rho.clear();
      }
    }
    if (!accepted) {
      res.status = OptimizeStatus::stalled;
      break;
    }
    res.iterations = iter + 1;
    res.trace.push_back(f);
    res.x = x;
    res.value = f;
    const double size = opt.magnitude ? opt.magnitude(x) : detail::max_abs(x);
    if (size > opt.divergence_bound) {
      res.grad_norm = detail::norm2(g);
      res.status = OptimizeStatus::unbounded;
      break;
    }
  }
  res.x = x;
  res.value = f;
  return res;
}

}  // namespace mpl

#endif  // MPL_OPTIMIZE_HPP
