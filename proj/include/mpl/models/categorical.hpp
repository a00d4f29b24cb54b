#ifndef MPL_MODELS_CATEGORICAL_HPP
#define MPL_MODELS_CATEGORICAL_HPP

// Categorical distribution over the one-hot vectors e_1..e_q, embedded in
// {0,1}^q with zero mass off the one-hot states.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mpl/error.hpp"
#include "mpl/numeric.hpp"
#include "mpl/pmf.hpp"
#include "mpl/support.hpp"

namespace mpl::models {

struct CategoricalParams {
  std::vector<double> pi;

  std::size_t q() const noexcept { return pi.size(); }

  void validate() const {
    if (pi.empty()) throw DomainError("categorical needs q >= 1");
    double s = 0.0;
    for (double p : pi) {
      if (!(p > 0.0) || !std::isfinite(p)) throw DomainError("categorical pi_k must be > 0");
      s += p;
    }
    if (std::abs(s - 1.0) > kNormalizationTol) throw DomainError("categorical pi must sum to 1");
  }
};

/// Index of e_k (0-based k) in {0,1}^q.
inline std::uint64_t one_hot_index(std::size_t q, std::size_t k) {
  return std::uint64_t{1} << (q - 1 - k);
}

/// 0-based category of a one-hot datum; DomainError otherwise.
inline std::size_t one_hot_category(const State& x, std::size_t q) {
  if (x.size() != q) throw DomainError("datum has the wrong number of coordinates");
  std::size_t hot = q;
  for (std::size_t k = 0; k < q; ++k) {
    if (x[k] == 1) {
      if (hot != q) throw DomainError("datum is not one-hot");
      hot = k;
    } else if (x[k] != 0) {
      throw DomainError("datum is not binary");
    }
  }
  if (hot == q) throw DomainError("datum is not one-hot");
  return hot;
}

inline TabularPmf categorical_joint(const CategoricalParams& p) {
  p.validate();
  const std::size_t q = p.q();
  auto spec = SupportSpec::binary(q);
  std::vector<double> probs(static_cast<std::size_t>(spec.state_count()), 0.0);
  for (std::size_t k = 0; k < q; ++k) probs[one_hot_index(q, k)] = p.pi[k];
  return TabularPmf(std::move(spec), std::move(probs));
}

/// P(first q-1 coordinates = e_k | x_q = 0) for k < q-1.
inline std::vector<double> categorical_conditional_given_last_zero(const CategoricalParams& p) {
  p.validate();
  if (p.q() < 2) throw DomainError("conditional given x_q needs q >= 2");
  double denom = 0.0;
  for (std::size_t l = 0; l + 1 < p.q(); ++l) denom += p.pi[l];
  std::vector<double> out(p.q() - 1);
  for (std::size_t k = 0; k + 1 < p.q(); ++k) out[k] = p.pi[k] / denom;
  return out;
}

/// Joint log-likelihood plus the conditional term given x_q = 0, per datum.
inline double categorical_logpl(std::span<const State> data, const CategoricalParams& p) {
  p.validate();
  const std::size_t q = p.q();
  double head = 0.0;
  for (std::size_t l = 0; l + 1 < q; ++l) head += p.pi[l];
  const double log_head = q >= 2 ? std::log(head) : 0.0;
  double total = 0.0;
  for (const auto& x : data) {
    const std::size_t k = one_hot_category(x, q);
    const double lp = std::log(p.pi[k]);
    total += lp;
    if (k + 1 < q) total += lp - log_head;
  }
  return total;
}

inline double categorical_pseudoentropy(const CategoricalParams& p) {
  p.validate();
  double h = 0.0;
  for (double v : p.pi) h += neg_ylogy(v);
  if (p.q() >= 2)
    for (double r : categorical_conditional_given_last_zero(p)) h += neg_ylogy(r);
  return h;
}

// Flat coordinates: eta_k = log(pi_k / pi_q), k < q.
inline std::vector<double> categorical_to_flat(const CategoricalParams& p) {
  std::vector<double> eta(p.q() - 1);
  for (std::size_t k = 0; k + 1 < p.q(); ++k) eta[k] = std::log(p.pi[k] / p.pi.back());
  return eta;
}

inline CategoricalParams categorical_from_flat(std::span<const double> eta) {
  std::vector<double> logits(eta.begin(), eta.end());
  logits.push_back(0.0);
  const double lz = log_sum_exp(logits);
  CategoricalParams p{std::vector<double>(logits.size())};
  for (std::size_t k = 0; k < logits.size(); ++k) p.pi[k] = std::exp(logits[k] - lz);
  return p;
}

}  // namespace mpl::models

#endif  // MPL_MODELS_CATEGORICAL_HPP
