#ifndef MPL_NUMERIC_HPP
#define MPL_NUMERIC_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace mpl {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(1 + exp(a)) without overflow for large |a|.
inline double softplus(double a) {
  if (a > 0.0) return a + std::log1p(std::exp(-a));
  return std::log1p(std::exp(a));
}

inline double sigmoid(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// -y log y with 0 log 0 = 0.
inline double neg_ylogy(double y) { return y > 0.0 ? -y * std::log(y) : 0.0; }

inline double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return kNegInf;
  const double hi = *std::max_element(v.begin(), v.end());
  if (hi == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - hi);
  return hi + std::log(s);
}

}  // namespace mpl

#endif  // MPL_NUMERIC_HPP
