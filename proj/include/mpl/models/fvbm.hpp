#ifndef MPL_MODELS_FVBM_HPP
#define MPL_MODELS_FVBM_HPP

// Fully-visible Boltzmann machine on {0,1}^q:
//   f(x) = exp(x'Mx / 2 + b'x) / zeta,  M symmetric with zero diagonal.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mpl/error.hpp"
#include "mpl/numeric.hpp"
#include "mpl/pmf.hpp"
#include "mpl/support.hpp"

namespace mpl::models {

inline constexpr std::size_t kDefaultEnumerationCap = 20;

struct FvbmParams {
  std::size_t q = 0;
  std::vector<double> M;  // row-major q x q
  std::vector<double> b;

  static FvbmParams zeros(std::size_t q) {
    return FvbmParams{q, std::vector<double>(q * q, 0.0), std::vector<double>(q, 0.0)};
  }

  double m(std::size_t k, std::size_t l) const { return M[k * q + l]; }
  void set_coupling(std::size_t k, std::size_t l, double v) {
    M[k * q + l] = v;
    M[l * q + k] = v;
  }

  std::size_t free_count() const noexcept { return q * (q - 1) / 2 + q; }

  void validate() const {
    if (q == 0) throw DomainError("fvbm needs q >= 1");
    if (M.size() != q * q || b.size() != q) throw StructuralError("fvbm parameter shapes");
    for (std::size_t k = 0; k < q; ++k) {
      if (M[k * q + k] != 0.0) throw DomainError("fvbm M must have a zero diagonal");
      if (!std::isfinite(b[k])) throw DomainError("fvbm b must be finite");
      for (std::size_t l = 0; l < q; ++l) {
        if (!std::isfinite(M[k * q + l])) throw DomainError("fvbm M must be finite");
        if (M[k * q + l] != M[l * q + k]) throw DomainError("fvbm M must be symmetric");
      }
    }
  }
};

// Flat layout: upper-triangle couplings (k < l, row-major), then biases.
inline std::vector<double> fvbm_to_flat(const FvbmParams& p) {
  std::vector<double> out;
  out.reserve(p.free_count());
  for (std::size_t k = 0; k < p.q; ++k)
    for (std::size_t l = k + 1; l < p.q; ++l) out.push_back(p.m(k, l));
  out.insert(out.end(), p.b.begin(), p.b.end());
  return out;
}

inline FvbmParams fvbm_from_flat(std::size_t q, std::span<const double> theta) {
  auto p = FvbmParams::zeros(q);
  if (theta.size() != p.free_count()) throw StructuralError("fvbm flat vector has wrong length");
  std::size_t i = 0;
  for (std::size_t k = 0; k < q; ++k)
    for (std::size_t l = k + 1; l < q; ++l) p.set_coupling(k, l, theta[i++]);
  for (std::size_t k = 0; k < q; ++k) p.b[k] = theta[i++];
  return p;
}

namespace detail {

inline void check_binary(const State& x, std::size_t q) {
  if (x.size() != q) throw DomainError("state has the wrong number of coordinates");
  for (std::size_t k = 0; k < q; ++k)
    if (x[k] != 0 && x[k] != 1)
      throw DomainError("coordinate x" + std::to_string(k + 1) + " is not binary");
}

// m_k'x + b_k
inline double fvbm_field(const State& x, std::size_t k, const FvbmParams& p) {
  double u = p.b[k];
  for (std::size_t l = 0; l < p.q; ++l)
    if (x[l]) u += p.M[k * p.q + l];
  return u;
}

}  // namespace detail

inline double fvbm_log_unnormalized(const State& x, const FvbmParams& p) {
  detail::check_binary(x, p.q);
  double e = 0.0;
  for (std::size_t k = 0; k < p.q; ++k) {
    if (!x[k]) continue;
    e += p.b[k];
    for (std::size_t l = k + 1; l < p.q; ++l)
      if (x[l]) e += p.m(k, l);
  }
  return e;
}

inline double fvbm_unnormalized(const State& x, const FvbmParams& p) {
  return std::exp(fvbm_log_unnormalized(x, p));
}

inline std::vector<double> fvbm_log_weights(const FvbmParams& p,
                                            std::size_t cap = kDefaultEnumerationCap) {
  p.validate();
  if (p.q > cap)
    throw CapacityError("exact fvbm normalization refused for q = " + std::to_string(p.q));
  const auto spec = SupportSpec::binary(p.q);
  std::vector<double> lw(static_cast<std::size_t>(spec.state_count()));
  for (std::uint64_t i = 0; i < spec.state_count(); ++i)
    lw[i] = fvbm_log_unnormalized(state_at(spec, i), p);
  return lw;
}

inline double fvbm_log_partition(const FvbmParams& p, std::size_t cap = kDefaultEnumerationCap) {
  return log_sum_exp(fvbm_log_weights(p, cap));
}

inline double fvbm_partition(const FvbmParams& p, std::size_t cap = kDefaultEnumerationCap) {
  return std::exp(fvbm_log_partition(p, cap));
}

inline TabularPmf fvbm_joint(const FvbmParams& p, std::size_t cap = kDefaultEnumerationCap) {
  const auto lw = fvbm_log_weights(p, cap);
  return TabularPmf::from_log_weights(SupportSpec::binary(p.q), lw);
}

/// P(X_k = x_k | rest), k 0-based.
inline double fvbm_conditional(const State& x, std::size_t k, const FvbmParams& p) {
  detail::check_binary(x, p.q);
  if (k >= p.q) throw DomainError("coordinate index out of range");
  const double u = detail::fvbm_field(x, k, p);
  return x[k] ? sigmoid(u) : sigmoid(-u);
}

/// Sum over weighted states of sum_k log P(x_k | rest). grad, when given, is
/// filled in the flat layout.
inline double fvbm_logpl_weighted(std::span<const State> states, std::span<const double> weights,
                                  const FvbmParams& p, std::vector<double>* grad = nullptr) {
  const std::size_t q = p.q;
  const std::size_t nc = q * (q - 1) / 2;
  if (grad) grad->assign(p.free_count(), 0.0);
  std::vector<double> resid(q);
  double total = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& x = states[i];
    detail::check_binary(x, q);
    const double w = weights[i];
    for (std::size_t k = 0; k < q; ++k) {
      const double u = detail::fvbm_field(x, k, p);
      total += w * (x[k] * u - softplus(u));
      resid[k] = x[k] - sigmoid(u);
    }
    if (!grad) continue;
    auto& g = *grad;
    std::size_t j = 0;
    for (std::size_t k = 0; k < q; ++k)
      for (std::size_t l = k + 1; l < q; ++l, ++j) g[j] += w * (resid[k] * x[l] + resid[l] * x[k]);
    for (std::size_t k = 0; k < q; ++k) g[nc + k] += w * resid[k];
  }
  return total;
}

inline double fvbm_logpl(std::span<const State> data, const FvbmParams& p) {
  p.validate();
  const std::vector<double> ones(data.size(), 1.0);
  return fvbm_logpl_weighted(data, ones, p);
}

inline std::vector<double> fvbm_logpl_grad(std::span<const State> data, const FvbmParams& p) {
  p.validate();
  const std::vector<double> ones(data.size(), 1.0);
  std::vector<double> g;
  fvbm_logpl_weighted(data, ones, p, &g);
  return g;
}

}  // namespace mpl::models

#endif  // MPL_MODELS_FVBM_HPP
