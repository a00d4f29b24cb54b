#ifndef MPL_MODELS_RBM_HPP
#define MPL_MODELS_RBM_HPP

// Restricted Boltzmann machine with visible x in {0,1}^q and hidden y in {0,1}^r.
// The visible marginal is handled in softplus form, so no 2^r sums are needed:
//   log f(x) = a'x + sum_j softplus(m_j'x + b_j) - log omega.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mpl/error.hpp"
#include "mpl/models/fvbm.hpp"
#include "mpl/numeric.hpp"
#include "mpl/pmf.hpp"
#include "mpl/support.hpp"

namespace mpl::models {

struct RbmParams {
  std::size_t q = 0;
  std::size_t r = 0;
  std::vector<double> M;  // row-major q x r; column j is m_j
  std::vector<double> a;  // visible biases
  std::vector<double> b;  // hidden biases

  static RbmParams zeros(std::size_t q, std::size_t r) {
    return RbmParams{q, r, std::vector<double>(q * r, 0.0), std::vector<double>(q, 0.0),
                     std::vector<double>(r, 0.0)};
  }

  double w(std::size_t l, std::size_t j) const { return M[l * r + j]; }
  std::size_t free_count() const noexcept { return q * r + q + r; }

  void validate() const {
    if (q == 0) throw DomainError("rbm needs q >= 1");
    if (r == 0) throw DomainError("rbm needs r >= 1");
    if (M.size() != q * r || a.size() != q || b.size() != r)
      throw StructuralError("rbm parameter shapes");
    for (double v : M)
      if (!std::isfinite(v)) throw DomainError("rbm M must be finite");
    for (double v : a)
      if (!std::isfinite(v)) throw DomainError("rbm a must be finite");
    for (double v : b)
      if (!std::isfinite(v)) throw DomainError("rbm b must be finite");
  }
};

// Flat layout: M row-major, then a, then b.
inline std::vector<double> rbm_to_flat(const RbmParams& p) {
  std::vector<double> out(p.M);
  out.insert(out.end(), p.a.begin(), p.a.end());
  out.insert(out.end(), p.b.begin(), p.b.end());
  return out;
}

inline RbmParams rbm_from_flat(std::size_t q, std::size_t r, std::span<const double> theta) {
  auto p = RbmParams::zeros(q, r);
  if (theta.size() != p.free_count()) throw StructuralError("rbm flat vector has wrong length");
  auto it = theta.begin();
  for (auto& v : p.M) v = *it++;
  for (auto& v : p.a) v = *it++;
  for (auto& v : p.b) v = *it++;
  return p;
}

/// exp(a'x + b'y + x'My), the unnormalized joint weight of visible and hidden.
inline double rbm_joint_with_hidden(const State& x, const State& y, const RbmParams& p) {
  detail::check_binary(x, p.q);
  detail::check_binary(y, p.r);
  double e = 0.0;
  for (std::size_t l = 0; l < p.q; ++l) e += p.a[l] * x[l];
  for (std::size_t j = 0; j < p.r; ++j) {
    if (!y[j]) continue;
    e += p.b[j];
    for (std::size_t l = 0; l < p.q; ++l)
      if (x[l]) e += p.w(l, j);
  }
  return std::exp(e);
}

namespace detail {

// m_j'x + b_j for every hidden unit
inline void rbm_hidden_inputs(const State& x, const RbmParams& p, std::vector<double>& c) {
  c.assign(p.b.begin(), p.b.end());
  for (std::size_t l = 0; l < p.q; ++l)
    if (x[l])
      for (std::size_t j = 0; j < p.r; ++j) c[j] += p.w(l, j);
}

}  // namespace detail

/// log of the unnormalized visible marginal.
inline double rbm_log_unnormalized(const State& x, const RbmParams& p) {
  detail::check_binary(x, p.q);
  std::vector<double> c;
  detail::rbm_hidden_inputs(x, p, c);
  double e = 0.0;
  for (std::size_t l = 0; l < p.q; ++l) e += p.a[l] * x[l];
  for (double cj : c) e += softplus(cj);
  return e;
}

inline TabularPmf rbm_marginal(const RbmParams& p, std::size_t cap = kDefaultEnumerationCap) {
  p.validate();
  if (p.q > cap)
    throw CapacityError("exact rbm marginal refused for q = " + std::to_string(p.q));
  auto spec = SupportSpec::binary(p.q);
  std::vector<double> lw(static_cast<std::size_t>(spec.state_count()));
  for (std::uint64_t i = 0; i < spec.state_count(); ++i)
    lw[i] = rbm_log_unnormalized(state_at(spec, i), p);
  return TabularPmf::from_log_weights(std::move(spec), lw);
}

namespace detail {

// Log-odds of x_k = 1 against x_k = 0 with the other coordinates held at x.
// c0 receives the hidden inputs with x_k = 0.
inline double rbm_log_odds(const State& x, std::size_t k, const RbmParams& p,
                           std::vector<double>& c0) {
  rbm_hidden_inputs(x, p, c0);
  if (x[k])
    for (std::size_t j = 0; j < p.r; ++j) c0[j] -= p.w(k, j);
  double delta = p.a[k];
  for (std::size_t j = 0; j < p.r; ++j) delta += softplus(c0[j] + p.w(k, j)) - softplus(c0[j]);
  return delta;
}

}  // namespace detail

/// P(X_k = x_k | rest), k 0-based; the shared factors of the two-term ratio are cancelled.
inline double rbm_conditional(const State& x, std::size_t k, const RbmParams& p) {
  detail::check_binary(x, p.q);
  if (k >= p.q) throw DomainError("coordinate index out of range");
  std::vector<double> c0;
  const double delta = detail::rbm_log_odds(x, k, p, c0);
  return x[k] ? sigmoid(delta) : sigmoid(-delta);
}

inline double rbm_logpl_weighted(std::span<const State> states, std::span<const double> weights,
                                 const RbmParams& p, std::vector<double>* grad = nullptr) {
  const std::size_t q = p.q;
  const std::size_t r = p.r;
  if (grad) grad->assign(p.free_count(), 0.0);
  std::vector<double> c0;
  double total = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& x = states[i];
    detail::check_binary(x, q);
    const double w = weights[i];
    for (std::size_t k = 0; k < q; ++k) {
      const double delta = detail::rbm_log_odds(x, k, p, c0);
      total += w * (x[k] * delta - softplus(delta));
      if (!grad) continue;
      auto& g = *grad;
      const double res = w * (x[k] - sigmoid(delta));
      g[q * r + k] += res;  // a_k
      for (std::size_t j = 0; j < r; ++j) {
        const double s1 = sigmoid(c0[j] + p.w(k, j));
        const double ds = s1 - sigmoid(c0[j]);
        g[k * r + j] += res * s1;
        for (std::size_t l = 0; l < q; ++l)
          if (l != k && x[l]) g[l * r + j] += res * ds;
        g[q * r + q + j] += res * ds;  // b_j
      }
    }
  }
  return total;
}

inline double rbm_logpl(std::span<const State> data, const RbmParams& p) {
  p.validate();
  const std::vector<double> ones(data.size(), 1.0);
  return rbm_logpl_weighted(data, ones, p);
}

inline std::vector<double> rbm_logpl_grad(std::span<const State> data, const RbmParams& p) {
  p.validate();
  const std::vector<double> ones(data.size(), 1.0);
  std::vector<double> g;
  rbm_logpl_weighted(data, ones, p, &g);
  return g;
}

}  // namespace mpl::models

#endif  // MPL_MODELS_RBM_HPP
