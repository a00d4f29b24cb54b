#ifndef MPL_SAMPLE_HPP
#define MPL_SAMPLE_HPP

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mpl/error.hpp"
#include "mpl/models/fvbm.hpp"
#include "mpl/models/rbm.hpp"
#include "mpl/numeric.hpp"
#include "mpl/pmf.hpp"
#include "mpl/random.hpp"

namespace mpl {

/// Inverse-CDF draws over the canonical state order, returned as dense indices.
inline std::vector<std::uint64_t> sample_exact_indices(const TabularPmf& f, std::size_t n,
                                                       const SeedSpec& seed,
                                                       std::uint64_t state_cap = kDefaultStateCap) {
  if (f.spec().state_count() > state_cap)
    throw CapacityError("exact sampling refused above " + std::to_string(state_cap) + " states");
  const auto p = f.probs();
  std::vector<double> cdf(p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) cdf[i] = acc += p[i];
  // last state with positive mass absorbs the rounding slack at the top
  std::size_t last = p.size() - 1;
  while (last > 0 && p[last] == 0.0) --last;
  auto g = make_stream(seed, Substream::data);
  std::vector<std::uint64_t> out(n);
  for (auto& v : out) {
    const double u = uniform01(g) * acc;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    v = std::min<std::uint64_t>(static_cast<std::uint64_t>(it - cdf.begin()), last);
  }
  return out;
}

inline std::vector<State> sample_exact(const TabularPmf& f, std::size_t n, const SeedSpec& seed) {
  std::vector<State> out;
  out.reserve(n);
  for (auto i : sample_exact_indices(f, n, seed)) out.push_back(state_at(f.spec(), i));
  return out;
}

struct GibbsConfig {
  std::size_t burn_in = 1000;        // sweeps discarded before the first draw
  std::size_t sweeps_per_draw = 1;   // one sweep = q single-site updates
};

namespace detail {

template <class OddsFn>
std::vector<State> systematic_gibbs(std::size_t q, std::size_t n, const GibbsConfig& cfg,
                                    const SeedSpec& seed, OddsFn&& log_odds) {
  if (cfg.sweeps_per_draw < 1) throw PreconditionError("sweeps_per_draw must be >= 1");
  auto g = make_stream(seed, Substream::data);
  State x(q);
  for (auto& v : x) v = uniform01(g) < 0.5 ? 1 : 0;
  auto sweep = [&] {
    for (std::size_t k = 0; k < q; ++k) x[k] = uniform01(g) < sigmoid(log_odds(x, k)) ? 1 : 0;
  };
  for (std::size_t s = 0; s < cfg.burn_in; ++s) sweep();
  std::vector<State> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < cfg.sweeps_per_draw; ++s) sweep();
    out.push_back(x);
  }
  return out;
}

}  // namespace detail

/// Systematic-scan Gibbs over the FVBM single-site conditionals.
inline std::vector<State> sample_gibbs(const models::FvbmParams& p, std::size_t n,
                                       const GibbsConfig& cfg, const SeedSpec& seed) {
  p.validate();
  return detail::systematic_gibbs(p.q, n, cfg, seed, [&](const State& x, std::size_t k) {
    return models::detail::fvbm_field(x, k, p);
  });
}

/// Visible-only Gibbs over the RBM single-site conditionals (hidden units summed out).
inline std::vector<State> sample_gibbs(const models::RbmParams& p, std::size_t n,
                                       const GibbsConfig& cfg, const SeedSpec& seed) {
  p.validate();
  std::vector<double> c0;
  return detail::systematic_gibbs(p.q, n, cfg, seed, [&](const State& x, std::size_t k) {
    return models::detail::rbm_log_odds(x, k, p, c0);
  });
}

/// Gibbs sweep started from given states; used to check that the exact joint is invariant.
inline std::vector<State> gibbs_sweep_from(const models::FvbmParams& p, std::vector<State> states,
                                           const SeedSpec& seed) {
  p.validate();
  auto g = make_stream(seed, Substream::data);
  for (auto& x : states)
    for (std::size_t k = 0; k < p.q; ++k)
      x[k] = uniform01(g) < sigmoid(models::detail::fvbm_field(x, k, p)) ? 1 : 0;
  return states;
}

// Samples CSV: header x1..xq, one state per row.
inline void write_samples_csv(std::ostream& os, std::size_t q, std::span<const State> data) {
  for (std::size_t k = 0; k < q; ++k) os << (k ? "," : "") << 'x' << (k + 1);
  os << '\n';
  for (const auto& x : data) {
    for (std::size_t k = 0; k < x.size(); ++k) os << (k ? "," : "") << x[k];
    os << '\n';
  }
}

inline std::vector<State> read_samples_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(is, line)) throw ParseError(lineno, "missing header");
  std::size_t q = 0;
  {
    std::stringstream hs(line);
    for (std::string col; std::getline(hs, col, ',');) {
      if (std::string(detail::trim(col)) != "x" + std::to_string(q + 1))
        throw ParseError(lineno, "header must be x1..xq");
      ++q;
    }
  }
  if (q == 0) throw ParseError(lineno, "header must be x1..xq");
  std::vector<State> out;
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    std::stringstream ls(line);
    State x;
    for (std::string cell; std::getline(ls, cell, ',');) {
      try {
        std::size_t used = 0;
        const auto t = std::string(detail::trim(cell));
        x.push_back(std::stoi(t, &used));
        if (used != t.size()) throw std::invalid_argument(t);
      } catch (const std::exception&) {
        throw ParseError(lineno, "non-integer cell '" + cell + "'");
      }
    }
    if (x.size() != q) throw ParseError(lineno, "wrong number of columns");
    out.push_back(std::move(x));
  }
  return out;
}

/// 64-bit FNV-1a, used to fingerprint parameter files in metadata.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

/// Sidecar "key value" lines in insertion order.
inline void write_metadata(std::ostream& os,
                           const std::vector<std::pair<std::string, std::string>>& kv) {
  for (const auto& [k, v] : kv) os << k << ' ' << v << '\n';
}

}  // namespace mpl

#endif  // MPL_SAMPLE_HPP
