#ifndef MPL_TESTS_ORACLES_HPP
#define MPL_TESTS_ORACLES_HPP

// Brute-force reference computations written without the library's
// projection maps, log-space helpers or closed forms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "mpl/models/fvbm.hpp"
#include "mpl/models/rbm.hpp"
#include "mpl/pl.hpp"
#include "mpl/random.hpp"

namespace oracle {

using Bits = std::vector<int>;

/// All of {0,1}^q with x1 as the most significant bit.
inline std::vector<Bits> all_binary(std::size_t q) {
  std::vector<Bits> out;
  for (std::uint64_t i = 0; i < (std::uint64_t{1} << q); ++i) {
    Bits x(q);
    for (std::size_t k = 0; k < q; ++k) x[k] = static_cast<int>(i >> (q - 1 - k) & 1U);
    out.push_back(x);
  }
  return out;
}

/// Ordered (left, right) disjoint non-empty mask pairs by double scan.
inline std::vector<std::pair<std::uint64_t, std::uint64_t>> partitions(std::size_t q) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  const std::uint64_t n = std::uint64_t{1} << q;
  for (std::uint64_t l = 1; l < n; ++l)
    for (std::uint64_t r = 1; r < n; ++r)
      if ((l & r) == 0) out.emplace_back(l, r);
  return out;
}

/// exp(x'Mx/2 + b'x) with the full matrix, normalized by direct summation.
inline std::vector<double> fvbm_joint(const mpl::models::FvbmParams& p) {
  std::vector<double> w;
  double z = 0.0;
  for (const auto& x : all_binary(p.q)) {
    double e = 0.0;
    for (std::size_t k = 0; k < p.q; ++k) {
      e += p.b[k] * x[k];
      for (std::size_t l = 0; l < p.q; ++l) e += 0.5 * x[k] * p.M[k * p.q + l] * x[l];
    }
    w.push_back(std::exp(e));
    z += w.back();
  }
  for (auto& v : w) v /= z;
  return w;
}

/// Visible marginal by summing exp(a'x + b'y + x'My) over all hidden y.
inline std::vector<double> rbm_hidden_sum(const mpl::models::RbmParams& p) {
  std::vector<double> w;
  double z = 0.0;
  const auto ys = all_binary(p.r);
  for (const auto& x : all_binary(p.q)) {
    double s = 0.0;
    for (const auto& y : ys) {
      double e = 0.0;
      for (std::size_t l = 0; l < p.q; ++l) e += p.a[l] * x[l];
      for (std::size_t j = 0; j < p.r; ++j) e += p.b[j] * y[j];
      for (std::size_t l = 0; l < p.q; ++l)
        for (std::size_t j = 0; j < p.r; ++j) e += x[l] * p.M[l * p.r + j] * y[j];
      s += std::exp(e);
    }
    w.push_back(s);
    z += s;
  }
  for (auto& v : w) v /= z;
  return w;
}

/// The two-term ratio exp(a_k xi + sum_l a_l x_l + sum_j log(1 + exp(...)))
/// summed over xi, evaluated literally with no cancellation.
inline double rbm_conditional_literal(const Bits& x, std::size_t k,
                                      const mpl::models::RbmParams& p) {
  auto term = [&](int xi) {
    Bits z = x;
    z[k] = xi;
    double e = 0.0;
    for (std::size_t l = 0; l < p.q; ++l) e += p.a[l] * z[l];
    for (std::size_t j = 0; j < p.r; ++j) {
      double c = p.b[j];
      for (std::size_t l = 0; l < p.q; ++l) c += p.M[l * p.r + j] * z[l];
      e += std::log(1.0 + std::exp(c));
    }
    return std::exp(e);
  };
  return term(x[k]) / (term(0) + term(1));
}

inline std::size_t binary_index(const Bits& x) {
  std::size_t i = 0;
  for (int v : x) i = 2 * i + static_cast<std::size_t>(v);
  return i;
}

/// P(x_k | rest) from a joint table over {0,1}^q.
inline double table_conditional(const std::vector<double>& joint, const Bits& x, std::size_t k) {
  Bits y = x;
  y[k] = 1 - x[k];
  const double px = joint[binary_index(x)];
  return px / (px + joint[binary_index(y)]);
}

/// Probability that a state drawn from the joint agrees with x on mask.
inline double agree_mass(const std::vector<double>& joint, std::size_t q, const Bits& x,
                         std::uint64_t mask) {
  double s = 0.0;
  const auto states = all_binary(q);
  for (std::size_t i = 0; i < states.size(); ++i) {
    bool ok = true;
    for (std::size_t k = 0; k < q && ok; ++k)
      if ((mask >> k & 1U) && states[i][k] != x[k]) ok = false;
    if (ok) s += joint[i];
  }
  return s;
}

/// Weighted PL by direct summation over the joint for every datum and term.
inline double log_pl(const std::vector<double>& joint, std::size_t q,
                     const std::vector<Bits>& data, const mpl::WeightScheme& w) {
  double total = 0.0;
  for (const auto& x : data) {
    for (const auto& [s, c] : w.marginals()) total += c * std::log(agree_mass(joint, q, x, s.mask()));
    for (const auto& [t, d] : w.conditionals())
      total += d * (std::log(agree_mass(joint, q, x, t.joint_mask())) -
                    std::log(agree_mass(joint, q, x, t.right().mask())));
  }
  return total;
}

/// Central differences with step h.
inline std::vector<double> central_diff(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// ||a - b||_2 / max(||a||_2, ||b||_2).
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? std::sqrt(d) : std::sqrt(d) / scale;
}

// Random instances from a fixed test stream.

inline mpl::models::FvbmParams random_fvbm(mpl::Philox4x64& g, std::size_t q, double scale) {
  auto p = mpl::models::FvbmParams::zeros(q);
  for (std::size_t k = 0; k < q; ++k)
    for (std::size_t l = k + 1; l < q; ++l) p.set_coupling(k, l, mpl::uniform(g, -scale, scale));
  for (auto& v : p.b) v = mpl::uniform(g, -scale, scale);
  return p;
}

inline mpl::models::RbmParams random_rbm(mpl::Philox4x64& g, std::size_t q, std::size_t r,
                                         double scale) {
  auto p = mpl::models::RbmParams::zeros(q, r);
  for (auto& v : p.M) v = mpl::uniform(g, -scale, scale);
  for (auto& v : p.a) v = mpl::uniform(g, -scale, scale);
  for (auto& v : p.b) v = mpl::uniform(g, -scale, scale);
  return p;
}

inline std::vector<Bits> random_binary_data(mpl::Philox4x64& g, std::size_t q, std::size_t n) {
  std::vector<Bits> out(n, Bits(q));
  for (auto& x : out)
    for (auto& v : x) v = mpl::uniform01(g) < 0.5 ? 0 : 1;
  return out;
}

inline std::vector<double> random_simplex(mpl::Philox4x64& g, std::size_t m) {
  std::vector<double> p(m);
  double s = 0.0;
  for (auto& v : p) s += v = 0.05 + mpl::uniform01(g);
  for (auto& v : p) v /= s;
  return p;
}

}  // namespace oracle

#endif  // MPL_TESTS_ORACLES_HPP
