#ifndef MPL_ESTIMATE_HPP
#define MPL_ESTIMATE_HPP

// Maximum pseudolikelihood fitting for the categorical, FVBM and RBM families
// and for a free probability table.
//
// The estimator is an argmax set. Fits return the best point found across
// restarts and flag near-ties; nothing here certifies uniqueness or global
// optimality, and parameter-space convergence is not implied by convergence of
// the fitted marginals and conditionals.

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <iomanip>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mpl/error.hpp"
#include "mpl/models/params_io.hpp"
#include "mpl/numeric.hpp"
#include "mpl/optimize.hpp"
#include "mpl/pl.hpp"
#include "mpl/pmf.hpp"
#include "mpl/random.hpp"

namespace mpl {

enum class Family { categorical, fvbm, rbm, tabular };

inline std::string to_string(Family f) {
  switch (f) {
    case Family::categorical: return "categorical";
    case Family::fvbm: return "fvbm";
    case Family::rbm: return "rbm";
    case Family::tabular: return "tabular";
  }
  return "unknown";
}

inline Family parse_family(const std::string& s) {
  if (s == "categorical") return Family::categorical;
  if (s == "fvbm") return Family::fvbm;
  if (s == "rbm") return Family::rbm;
  if (s == "tabular") return Family::tabular;
  throw DomainError("unknown family '" + s + "'");
}

struct ModelShape {
  Family family = Family::fvbm;
  std::size_t q = 0;
  std::size_t r = 0;  // rbm hidden units

  std::size_t dimension() const {
    switch (family) {
      case Family::categorical: return q - 1;
      case Family::fvbm: return q * (q - 1) / 2 + q;
      case Family::rbm: return q * r + q + r;
      case Family::tabular: break;
    }
    throw DomainError("tabular dimension depends on the support");
  }
};

/// The family's own closed-form objective: the categorical joint-plus-conditional
/// log-PL, or the sum of single-site conditional log-probabilities for FVBM/RBM.
struct NativeObjective {};

using ObjectiveSpec = std::variant<NativeObjective, WeightScheme>;

/// The weight scheme whose generic evaluation equals the native objective.
inline WeightScheme native_scheme(const ModelShape& shape) {
  switch (shape.family) {
    case Family::categorical: return scheme_example1(shape.q);
    case Family::fvbm:
    case Family::rbm: return scheme_full_conditionals(shape.q);
    case Family::tabular: break;
  }
  throw DomainError("tabular family has no native objective");
}

enum class InitPolicy { family_default, zero, given };

struct FitConfig {
  InitPolicy init = InitPolicy::family_default;
  std::vector<double> init_point;  // used with InitPolicy::given
  double grad_tol = 1e-8;          // on the objective per observation and unit weight
  std::size_t max_iter = 500;
  std::size_t lbfgs_memory = 10;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  std::size_t max_backtracks = 60;
  std::size_t restarts = 0;  // 0 selects the family default: 5 for rbm, 1 otherwise
  double restart_scale = 0.01;
  double divergence_bound = 15.0;  // on visible conditional log-odds at the data
  SeedSpec seed{};  // drives restart perturbations
  unsigned threads = 1;

  void validate() const {
    if (!(grad_tol > 0.0)) throw PreconditionError("gradient tolerance must be > 0");
    if (max_iter < 1) throw PreconditionError("max iterations must be >= 1");
    if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0)) throw PreconditionError("armijo c1 in (0,1)");
    if (!(backtrack > 0.0 && backtrack < 1.0)) throw PreconditionError("backtrack in (0,1)");
    if (!(divergence_bound > 0.0)) throw PreconditionError("divergence bound must be > 0");
  }

  std::size_t restart_count(Family f) const {
    if (restarts > 0) return restarts;
    return f == Family::rbm ? 5 : 1;
  }
};

enum class FitStatus { converged, max_iters, unbounded, stalled };

inline std::string to_string(FitStatus s) {
  switch (s) {
    case FitStatus::converged: return "converged";
    case FitStatus::max_iters: return "max-iters";
    case FitStatus::unbounded: return "unbounded";
    case FitStatus::stalled: return "stalled";
  }
  return "unknown";
}

struct RestartResult {
  std::vector<double> theta;
  double objective = kNegInf;  // raw sum, not the mean
  double initial_objective = kNegInf;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  FitStatus status = FitStatus::stalled;
  std::vector<double> trace;  // raw-sum objective per accepted step
};

struct FitReport {
  ModelShape shape;
  std::optional<models::ModelParams> params;  // parametric families
  std::optional<TabularPmf> table;            // tabular family
  std::vector<double> theta;
  double objective = kNegInf;
  double grad_norm = 0.0;  // of the normalized objective
  std::size_t iterations = 0;
  FitStatus status = FitStatus::stalled;
  std::vector<RestartResult> restarts;
  std::size_t best_restart = 0;
  std::size_t near_ties = 0;
  std::size_t n = 0;

  bool converged() const { return status == FitStatus::converged; }

  TabularPmf joint() const { return table ? *table : models::joint_table(*params); }
};

/// Distinct states in index order with their counts.
struct AggregatedData {
  std::vector<State> states;
  std::vector<double> counts;
  std::vector<std::uint64_t> indices;
};

inline AggregatedData aggregate(const SupportSpec& spec, std::span<const State> data) {
  auto idx = encode_states(spec, data);
  std::sort(idx.begin(), idx.end());
  AggregatedData out;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i == 0 || idx[i] != idx[i - 1]) {
      out.indices.push_back(idx[i]);
      out.states.push_back(state_at(spec, idx[i]));
      out.counts.push_back(0.0);
    }
    out.counts.back() += 1.0;
  }
  return out;
}

/// theta -> (raw-sum objective, gradient).
using ObjectiveFn = std::function<double(std::span<const double>, std::vector<double>&)>;

namespace detail {

// Chain rule from d/dp(x) to d/dtheta for p = softmax(E(x; theta)):
//   dL/dtheta = sum_x p(x) (g(x) - <p, g>) grad E(x).
inline std::vector<double> softmax_weights(std::span<const double> p, std::span<const double> g) {
  double gbar = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x)
    if (p[x] > 0.0) gbar += p[x] * g[x];
  std::vector<double> w(p.size(), 0.0);
  for (std::size_t x = 0; x < p.size(); ++x)
    if (p[x] > 0.0) w[x] = p[x] * (g[x] - gbar);
  return w;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  const double lz = log_sum_exp(logits);
  std::vector<double> p(logits.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(logits[i] - lz);
  return p;
}

inline ObjectiveFn native_objective(const ModelShape& shape, std::span<const State> data) {
  const auto spec = SupportSpec::binary(shape.q);
  switch (shape.family) {
    case Family::categorical: {
      const std::size_t q = shape.q;
      std::vector<double> nk(q, 0.0);
      for (const auto& x : data) nk[models::one_hot_category(x, q)] += 1.0;
      const double n = static_cast<double>(data.size());
      const double n_head = n - nk[q - 1];
      return [q, nk, n, n_head](std::span<const double> eta, std::vector<double>& g) {
        std::vector<double> all(eta.begin(), eta.end());
        all.push_back(0.0);
        const double A = log_sum_exp(all);
        const double B = log_sum_exp(std::span<const double>(all).first(q - 1));
        double v = -n * A - n_head * B;
        g.assign(q - 1, 0.0);
        for (std::size_t k = 0; k + 1 < q; ++k) {
          v += 2.0 * nk[k] * eta[k];
          g[k] = 2.0 * nk[k] - n * std::exp(eta[k] - A) - n_head * std::exp(eta[k] - B);
        }
        return v;
      };
    }
    case Family::fvbm: {
      auto agg = aggregate(spec, data);
      const std::size_t q = shape.q;
      return [agg = std::move(agg), q](std::span<const double> th, std::vector<double>& g) {
        const auto p = models::fvbm_from_flat(q, th);
        return models::fvbm_logpl_weighted(agg.states, agg.counts, p, &g);
      };
    }
    case Family::rbm: {
      auto agg = aggregate(spec, data);
      const std::size_t q = shape.q, r = shape.r;
      return [agg = std::move(agg), q, r](std::span<const double> th, std::vector<double>& g) {
        const auto p = models::rbm_from_flat(q, r, th);
        return models::rbm_logpl_weighted(agg.states, agg.counts, p, &g);
      };
    }
    case Family::tabular: break;
  }
  throw DomainError("tabular family needs a weight scheme");
}

inline ObjectiveFn scheme_objective(const ModelShape& shape, const SupportSpec& spec,
                                    std::span<const State> data, const WeightScheme& w) {
  auto pl = std::make_shared<PlObjective>(spec, data, w);
  const std::size_t q = spec.q();
  const auto states = static_cast<std::size_t>(spec.state_count());
  switch (shape.family) {
    case Family::categorical:
      return [pl, q, states](std::span<const double> eta, std::vector<double>& g) {
        const auto pi = models::categorical_from_flat(eta).pi;
        std::vector<double> p(states, 0.0);
        for (std::size_t k = 0; k < q; ++k) p[models::one_hot_index(q, k)] = pi[k];
        std::vector<double> gp;
        const double v = pl->evaluate(p, &gp);
        g.assign(q - 1, 0.0);
        if (!std::isfinite(v)) return v;
        const auto w = softmax_weights(p, gp);
        for (std::size_t k = 0; k + 1 < q; ++k) g[k] = w[models::one_hot_index(q, k)];
        return v;
      };
    case Family::fvbm: {
      const std::size_t nc = q * (q - 1) / 2;
      return [pl, q, nc, states](std::span<const double> th, std::vector<double>& g) {
        const auto params = models::fvbm_from_flat(q, th);
        const auto spec = SupportSpec::binary(q);
        std::vector<double> lw(states);
        std::vector<State> xs(states);
        for (std::size_t i = 0; i < states; ++i) {
          xs[i] = state_at(spec, i);
          lw[i] = models::fvbm_log_unnormalized(xs[i], params);
        }
        const auto p = softmax(lw);
        std::vector<double> gp;
        const double v = pl->evaluate(p, &gp);
        g.assign(th.size(), 0.0);
        if (!std::isfinite(v)) return v;
        const auto w = softmax_weights(p, gp);
        for (std::size_t i = 0; i < states; ++i) {
          const auto& x = xs[i];
          std::size_t j = 0;
          for (std::size_t k = 0; k < q; ++k)
            for (std::size_t l = k + 1; l < q; ++l, ++j)
              if (x[k] && x[l]) g[j] += w[i];
          for (std::size_t k = 0; k < q; ++k)
            if (x[k]) g[nc + k] += w[i];
        }
        return v;
      };
    }
    case Family::rbm: {
      const std::size_t r = shape.r;
      return [pl, q, r, states](std::span<const double> th, std::vector<double>& g) {
        const auto params = models::rbm_from_flat(q, r, th);
        const auto spec = SupportSpec::binary(q);
        std::vector<double> lw(states);
        std::vector<State> xs(states);
        for (std::size_t i = 0; i < states; ++i) {
          xs[i] = state_at(spec, i);
          lw[i] = models::rbm_log_unnormalized(xs[i], params);
        }
        const auto p = softmax(lw);
        std::vector<double> gp;
        const double v = pl->evaluate(p, &gp);
        g.assign(th.size(), 0.0);
        if (!std::isfinite(v)) return v;
        const auto w = softmax_weights(p, gp);
        std::vector<double> c;
        for (std::size_t i = 0; i < states; ++i) {
          const auto& x = xs[i];
          models::detail::rbm_hidden_inputs(x, params, c);
          for (std::size_t j = 0; j < r; ++j) {
            const double s = sigmoid(c[j]);
            for (std::size_t l = 0; l < q; ++l)
              if (x[l]) g[l * r + j] += w[i] * s;
            g[q * r + q + j] += w[i] * s;
          }
          for (std::size_t l = 0; l < q; ++l)
            if (x[l]) g[q * r + l] += w[i];
        }
        return v;
      };
    }
    case Family::tabular:
      return [pl](std::span<const double> z, std::vector<double>& g) {
        const auto p = softmax(z);
        std::vector<double> gp;
        const double v = pl->evaluate(p, &gp);
        if (!std::isfinite(v)) {
          g.assign(z.size(), 0.0);
          return v;
        }
        g = softmax_weights(p, gp);
        return v;
      };
  }
  throw DomainError("unknown family");
}

inline models::ModelParams params_from_flat(const ModelShape& shape, std::span<const double> th) {
  switch (shape.family) {
    case Family::categorical: return models::categorical_from_flat(th);
    case Family::fvbm: return models::fvbm_from_flat(shape.q, th);
    case Family::rbm: return models::rbm_from_flat(shape.q, shape.r, th);
    case Family::tabular: break;
  }
  throw DomainError("tabular family has no parameter object");
}

inline std::vector<double> default_init(const ModelShape& shape, std::span<const State> data,
                                        std::size_t dim) {
  std::vector<double> th(dim, 0.0);
  if (shape.family == Family::fvbm) {
    const std::size_t nc = shape.q * (shape.q - 1) / 2;
    const double n = static_cast<double>(data.size());
    for (std::size_t k = 0; k < shape.q; ++k) {
      double ones = 0.0;
      for (const auto& x : data) ones += x[k];
      const double f = ones / n;
      double b = f <= 0.0 ? -4.0 : f >= 1.0 ? 4.0 : logit(f);
      th[nc + k] = std::clamp(b, -4.0, 4.0);
    }
  }
  return th;
}

// Largest |log-odds| of a visible single-site conditional over the observed
// states. It diverges exactly when a fitted conditional degenerates at the
// data; saturated rbm hidden units alone do not move it.
inline double data_log_odds_magnitude(const ModelShape& shape, std::span<const State> states,
                                      const std::vector<double>& th) {
  double m = 0.0;
  switch (shape.family) {
    case Family::categorical:
      for (double v : th) m = std::max(m, std::abs(v));
      break;
    case Family::fvbm: {
      const auto p = models::fvbm_from_flat(shape.q, th);
      for (const auto& x : states)
        for (std::size_t k = 0; k < shape.q; ++k)
          m = std::max(m, std::abs(models::detail::fvbm_field(x, k, p)));
      break;
    }
    case Family::rbm: {
      const auto p = models::rbm_from_flat(shape.q, shape.r, th);
      std::vector<double> c0;
      for (const auto& x : states)
        for (std::size_t k = 0; k < shape.q; ++k)
          m = std::max(m, std::abs(models::detail::rbm_log_odds(x, k, p, c0)));
      break;
    }
    case Family::tabular: break;
  }
  return m;
}

inline FitStatus map_status(OptimizeStatus s) {
  switch (s) {
    case OptimizeStatus::converged: return FitStatus::converged;
    case OptimizeStatus::max_iters: return FitStatus::max_iters;
    case OptimizeStatus::unbounded: return FitStatus::unbounded;
    default: return FitStatus::stalled;
  }
}

inline double total_weight(const WeightScheme& w) {
  double t = 0.0;
  for (const auto& [s, c] : w.marginals()) t += c;
  for (const auto& [p, d] : w.conditionals()) t += d;
  return t;
}

// The optimizer sees the objective divided by n times the scheme's total
// weight, so the gradient tolerance means the same thing for every sample
// size and every positive rescaling of the weights.
inline FitReport run_fit(const ModelShape& shape, std::size_t dim, std::span<const State> data,
                         const ObjectiveFn& objective, double weight_mass, const FitConfig& cfg,
                         const std::function<std::string()>& describe_infeasible) {
  const double n = static_cast<double>(data.size()) * weight_mass;
  ObjectiveFn mean = [&objective, n](std::span<const double> th, std::vector<double>& g) {
    const double v = objective(th, g);
    for (auto& x : g) x /= n;
    return v / n;
  };
  LbfgsOptions opt;
  opt.grad_tol = cfg.grad_tol;
  opt.max_iter = cfg.max_iter;
  opt.memory = cfg.lbfgs_memory;
  opt.armijo_c1 = cfg.armijo_c1;
  opt.backtrack = cfg.backtrack;
  opt.max_backtracks = cfg.max_backtracks;
  opt.divergence_bound = shape.family == Family::tabular
                             ? std::numeric_limits<double>::infinity()
                             : cfg.divergence_bound;
  if (shape.family != Family::tabular) {
    auto distinct = std::make_shared<std::vector<State>>(
        aggregate(SupportSpec::binary(shape.q), data).states);
    opt.magnitude = [shape, distinct](const std::vector<double>& th) {
      return data_log_odds_magnitude(shape, *distinct, th);
    };
  }

  const std::size_t restarts = cfg.restart_count(shape.family);
  std::vector<std::vector<double>> inits(restarts);
  for (std::size_t i = 0; i < restarts; ++i) {
    std::vector<double> base;
    if (cfg.init == InitPolicy::given) {
      if (cfg.init_point.size() != dim)
        throw PreconditionError("initial point has length " +
                                std::to_string(cfg.init_point.size()) + ", expected " +
                                std::to_string(dim));
      base = cfg.init_point;
    } else if (cfg.init == InitPolicy::zero) {
      base.assign(dim, 0.0);
    } else {
      base = default_init(shape, data, dim);
    }
    // rbm perturbs every restart (zero is a saddle for hidden units); other
    // families keep restart 0 at the base point
    if (shape.family == Family::rbm || i > 0) {
      auto g = make_stream(SeedSpec{cfg.seed.master, cfg.seed.replicate}, Substream::init);
      // skip ahead to this restart's block of draws
      for (std::size_t s = 0; s < i * dim; ++s) g();
      for (auto& v : base) v += uniform(g, -cfg.restart_scale, cfg.restart_scale);
    }
    inits[i] = std::move(base);
  }

  auto run_one = [&](std::size_t i) {
    auto res = maximize(mean, inits[i], opt);
    RestartResult rr;
    rr.theta = res.x;
    rr.grad_norm = res.grad_norm;
    rr.iterations = res.iterations;
    if (res.status == OptimizeStatus::infeasible) {
      rr.status = FitStatus::stalled;
      return rr;
    }
    rr.status = map_status(res.status);
    std::vector<double> g;
    rr.objective = objective(res.x, g);
    rr.initial_objective = res.trace.front() * n;
    rr.trace.reserve(res.trace.size());
    for (double v : res.trace) rr.trace.push_back(v * n);
    return rr;
  };

  FitReport rep;
  rep.shape = shape;
  rep.n = data.size();
  if (cfg.threads > 1 && restarts > 1) {
    std::vector<std::future<RestartResult>> fut;
    for (std::size_t i = 0; i < restarts; ++i)
      fut.push_back(std::async(std::launch::async, run_one, i));
    for (auto& f : fut) rep.restarts.push_back(f.get());
  } else {
    for (std::size_t i = 0; i < restarts; ++i) rep.restarts.push_back(run_one(i));
  }

  std::size_t best = restarts;
  for (std::size_t i = 0; i < restarts; ++i) {
    if (rep.restarts[i].objective == kNegInf) continue;
    if (best == restarts || rep.restarts[i].objective > rep.restarts[best].objective) best = i;
  }
  if (best == restarts)
    throw FitError("every restart has a -inf objective: " + describe_infeasible());
  const auto& b = rep.restarts[best];
  rep.best_restart = best;
  rep.theta = b.theta;
  rep.objective = b.objective;
  rep.grad_norm = b.grad_norm;
  rep.iterations = b.iterations;
  rep.status = b.status;
  const double tie_tol = 1e-9 * std::max(1.0, std::abs(b.objective));
  for (std::size_t i = 0; i < restarts; ++i)
    if (i != best && std::abs(rep.restarts[i].objective - b.objective) <= tie_tol)
      ++rep.near_ties;
  return rep;
}

}  // namespace detail

/// MPL fit of a parametric family with either its native objective or any
/// weight scheme (the latter evaluates the exact joint, so q is capped).
inline FitReport fit_mpl(const ModelShape& shape, std::span<const State> data,
                         const ObjectiveSpec& objective, const FitConfig& cfg = {}) {
  cfg.validate();
  if (data.empty()) throw PreconditionError("fit needs at least one observation");
  if (shape.family == Family::tabular)
    throw PreconditionError("use fit_mpl_tabular for the free-table family");
  if (shape.family == Family::categorical && shape.q < 2)
    throw PreconditionError("categorical fit needs q >= 2");
  if (shape.family == Family::fvbm && shape.q < 1) throw PreconditionError("fvbm needs q >= 1");
  if (shape.family == Family::rbm && (shape.q < 1 || shape.r < 1))
    throw PreconditionError("rbm needs q >= 1 and r >= 1");
  const auto spec = SupportSpec::binary(shape.q);
  encode_states(spec, data);
  const std::size_t dim = shape.dimension();
  const bool native = std::holds_alternative<NativeObjective>(objective);
  const WeightScheme scheme = native ? native_scheme(shape) : std::get<WeightScheme>(objective);
  scheme.validate(shape.q);
  auto describe = [&] {
    const auto init = detail::default_init(shape, data, dim);
    const auto pv = log_pl(detail::params_from_flat(shape, init), data, scheme);
    if (!pv.offense) return std::string("objective is -inf");
    return "term " + to_string(pv.offense->term) + " at datum " +
           std::to_string(pv.offense->datum);
  };
  if (shape.family == Family::categorical) {
    // binary data off the one-hot states has probability zero under every pi
    for (const auto& x : data) {
      try {
        models::one_hot_category(x, shape.q);
      } catch (const DomainError&) {
        throw FitError("every restart has a -inf objective: " + describe());
      }
    }
  }

  ObjectiveFn fn;
  if (native) {
    fn = detail::native_objective(shape, data);
  } else {
    if (shape.q > models::kDefaultEnumerationCap)
      throw CapacityError("scheme objectives need the exact joint; q above the cap");
    fn = detail::scheme_objective(shape, spec, data, scheme);
  }
  auto rep = detail::run_fit(shape, dim, data, fn, detail::total_weight(scheme), cfg, describe);
  rep.params = detail::params_from_flat(shape, rep.theta);
  return rep;
}

inline constexpr std::uint64_t kTabularStateCap = std::uint64_t{1} << 12;

/// MPL over the whole probability simplex of spec (softmax coordinates).
inline FitReport fit_mpl_tabular(const SupportSpec& spec, std::span<const State> data,
                                 const WeightScheme& w, const FitConfig& cfg = {}) {
  cfg.validate();
  if (data.empty()) throw PreconditionError("fit needs at least one observation");
  if (spec.state_count() > kTabularStateCap)
    throw CapacityError("free-table fit refused above 4096 states");
  w.validate(spec.q());
  const ModelShape shape{Family::tabular, spec.q(), 0};
  const auto dim = static_cast<std::size_t>(spec.state_count());
  auto fn = detail::scheme_objective(shape, spec, data, w);
  auto describe = [&] {
    const auto pv = log_pl(TabularPmf::uniform(spec), data, w);
    return pv.offense ? "term " + to_string(pv.offense->term) : std::string("objective is -inf");
  };
  auto rep = detail::run_fit(shape, dim, data, fn, detail::total_weight(w), cfg, describe);
  rep.table = TabularPmf(spec, detail::softmax(rep.theta));
  return rep;
}

/// Key/value report followed by the parameter block (or the fitted table).
inline void write_fit_report(std::ostream& os, const FitReport& rep) {
  const auto old = os.precision(17);
  os << "status " << to_string(rep.status) << '\n'
     << "family " << to_string(rep.shape.family) << '\n'
     << "n " << rep.n << '\n'
     << "objective " << rep.objective << '\n'
     << "grad_norm " << rep.grad_norm << '\n'
     << "iterations " << rep.iterations << '\n'
     << "restarts " << rep.restarts.size() << '\n'
     << "best_restart " << rep.best_restart << '\n'
     << "near_ties " << rep.near_ties << '\n';
  for (std::size_t i = 0; i < rep.restarts.size(); ++i) {
    const auto& r = rep.restarts[i];
    os << "restart " << i << ' ' << r.objective << ' ' << r.grad_norm << ' ' << r.iterations
       << ' ' << to_string(r.status) << '\n';
  }
  if (rep.params) {
    os << "params\n";
    models::write_params(os, *rep.params);
  } else if (rep.table) {
    os << "table\n";
    write_pmf_csv(os, *rep.table);
  }
  os.precision(old);
}

}  // namespace mpl

#endif  // MPL_ESTIMATE_HPP
