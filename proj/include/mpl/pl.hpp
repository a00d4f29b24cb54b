#ifndef MPL_PL_HPP
#define MPL_PL_HPP

// Weighted pseudolikelihood
//
//   L(X_n) = sum_i sum_S c_S log f^S(x_i^S)
//          + sum_i sum_T d_T log f^T(x_i^left | x_i^right)
//
// its pseudo-entropy, and the named weight schemes.

#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mpl/error.hpp"
#include "mpl/models/params_io.hpp"
#include "mpl/numeric.hpp"
#include "mpl/pmf.hpp"
#include "mpl/support.hpp"

namespace mpl {

/// Sparse non-negative coefficients over subsets (c) and partitions (d).
/// Absent keys mean zero; storing zero erases the key.
class WeightScheme {
 public:
  void set_marginal(SubsetId s, double c) {
    check_coefficient(c);
    if (c == 0.0)
      c_.erase(s);
    else
      c_[s] = c;
  }

  void set_conditional(PartitionId t, double d) {
    check_coefficient(d);
    if (d == 0.0)
      d_.erase(t);
    else
      d_[t] = d;
  }

  double marginal_weight(SubsetId s) const {
    auto it = c_.find(s);
    return it == c_.end() ? 0.0 : it->second;
  }

  double conditional_weight(const PartitionId& t) const {
    auto it = d_.find(t);
    return it == d_.end() ? 0.0 : it->second;
  }

  const std::map<SubsetId, double>& marginals() const noexcept { return c_; }
  const std::map<PartitionId, double>& conditionals() const noexcept { return d_; }
  bool empty() const noexcept { return c_.empty() && d_.empty(); }

  /// Weighted terms in canonical order: subsets first, then partitions.
  std::vector<TermId> terms() const {
    std::vector<TermId> out;
    for (const auto& [s, c] : c_) out.emplace_back(s);
    for (const auto& [t, d] : d_) out.emplace_back(t);
    return out;
  }

  void validate(std::size_t q) const {
    if (empty()) throw DomainError("weight scheme needs at least one positive coefficient");
    for (const auto& [s, c] : c_)
      if (!s.fits(q)) throw DomainError("subset " + to_string(s) + " exceeds q");
    for (const auto& [t, d] : d_)
      if (!t.fits(q)) throw DomainError("partition " + to_string(t) + " exceeds q");
  }

  WeightScheme scaled(double lambda) const {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw DomainError("scheme scale must be positive");
    WeightScheme out;
    for (const auto& [s, c] : c_) out.c_[s] = lambda * c;
    for (const auto& [t, d] : d_) out.d_[t] = lambda * d;
    return out;
  }

  bool operator==(const WeightScheme&) const = default;

 private:
  static void check_coefficient(double v) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw DomainError("weight coefficients must be finite and non-negative");
  }

  std::map<SubsetId, double> c_;
  std::map<PartitionId, double> d_;
};

namespace detail {

inline CoordMask all_coords(std::size_t q) {
  if (q == 0 || q > kMaxCoordinates) throw DomainError("q out of range");
  return q == 64 ? ~CoordMask{0} : (CoordMask{1} << q) - 1;
}

}  // namespace detail

/// c = 1 on the full coordinate set: ordinary likelihood.
inline WeightScheme scheme_ml(std::size_t q) {
  WeightScheme w;
  w.set_marginal(SubsetId(detail::all_coords(q)), 1.0);
  return w;
}

inline WeightScheme scheme_composite_marginal(std::size_t q) {
  detail::all_coords(q);
  WeightScheme w;
  for (std::size_t k = 0; k < q; ++k) w.set_marginal(SubsetId(CoordMask{1} << k), 1.0);
  return w;
}

inline WeightScheme scheme_pairwise(std::size_t q) {
  detail::all_coords(q);
  if (q < 2) throw DomainError("pairwise scheme needs q >= 2");
  WeightScheme w;
  for (std::size_t k = 0; k < q; ++k)
    for (std::size_t l = k + 1; l < q; ++l)
      w.set_marginal(SubsetId((CoordMask{1} << k) | (CoordMask{1} << l)), 1.0);
  return w;
}

/// d = 1 on each ({k} | [q] \ {k}).
inline WeightScheme scheme_full_conditionals(std::size_t q) {
  const CoordMask all = detail::all_coords(q);
  if (q < 2) throw DomainError("full-conditionals scheme needs q >= 2");
  WeightScheme w;
  for (std::size_t k = 0; k < q; ++k) {
    const CoordMask bit = CoordMask{1} << k;
    w.set_conditional(PartitionId(SubsetId(bit), SubsetId(all & ~bit)), 1.0);
  }
  return w;
}

/// Joint likelihood plus the conditional of the first q-1 coordinates given x_q
/// (the categorical worked example).
inline WeightScheme scheme_example1(std::size_t q) {
  const CoordMask all = detail::all_coords(q);
  if (q < 2) throw DomainError("example1 scheme needs q >= 2");
  const CoordMask last = CoordMask{1} << (q - 1);
  WeightScheme w;
  w.set_marginal(SubsetId(all), 1.0);
  w.set_conditional(PartitionId(SubsetId(all & ~last), SubsetId(last)), 1.0);
  return w;
}

inline WeightScheme scheme_by_name(const std::string& name, std::size_t q) {
  if (name == "ml") return scheme_ml(q);
  if (name == "composite_marginal") return scheme_composite_marginal(q);
  if (name == "pairwise") return scheme_pairwise(q);
  if (name == "full_conditionals") return scheme_full_conditionals(q);
  if (name == "example1") return scheme_example1(q);
  throw DomainError("unknown scheme '" + name + "'");
}

// Scheme file: "c {1,3} 1.0" and "d {1}|{2,3} 0.5" lines, '#' comments.
inline void write_scheme(std::ostream& os, const WeightScheme& w) {
  const auto old = os.precision(17);
  for (const auto& [s, c] : w.marginals()) os << "c " << to_string(s) << ' ' << c << '\n';
  for (const auto& [t, d] : w.conditionals()) os << "d " << to_string(t) << ' ' << d << '\n';
  os.precision(old);
}

inline WeightScheme read_scheme(std::istream& is, std::size_t q) {
  WeightScheme w;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ss(line);
    std::string kind, id, value;
    if (!(ss >> kind)) continue;
    std::string extra;
    if (!(ss >> id >> value) || (ss >> extra))
      throw ParseError(lineno, "expected '<c|d> <id> <coefficient>'");
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw ParseError(lineno, "bad coefficient '" + value + "'");
    }
    try {
      if (kind == "c") {
        const auto s = parse_subset(id);
        if (!s.fits(q)) throw DomainError("subset " + id + " exceeds q");
        w.set_marginal(s, v);
      } else if (kind == "d") {
        const auto t = parse_partition(id);
        if (!t.fits(q)) throw DomainError("partition " + id + " exceeds q");
        w.set_conditional(t, v);
      } else {
        throw DomainError("unknown term kind '" + kind + "'");
      }
    } catch (const DomainError& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return w;
}

/// The term that made the objective -inf, and the first datum that hit it.
struct PlOffense {
  TermId term;
  std::size_t datum = 0;
};

struct PlValue {
  double total = 0.0;
  std::vector<std::pair<TermId, double>> breakdown;
  std::optional<PlOffense> offense;
};

/// Literal per-datum evaluation of the weighted PL on a joint table.
inline PlValue log_pl(const TabularPmf& f, std::span<const State> data, const WeightScheme& w) {
  w.validate(f.spec().q());
  const auto idx = encode_states(f.spec(), data);
  PlValue out;
  struct Prepared {
    double weight;
    std::vector<std::uint32_t> proj_a;  // subset, or left block
    std::vector<std::uint32_t> proj_b;  // right block
    std::vector<double> table;
    std::vector<std::uint8_t> defined;
    std::size_t left_count = 0;
  };
  std::vector<Prepared> prep;
  for (const auto& [s, c] : w.marginals()) {
    auto m = marginalize(f, s);
    prep.push_back({c, projection_map(f.spec(), s.mask()), {}, std::move(m.probs), {}, 0});
    out.breakdown.emplace_back(s, 0.0);
  }
  for (const auto& [t, d] : w.conditionals()) {
    auto ct = condition(f, t);
    const std::size_t nl = ct.left_count();
    prep.push_back({d, projection_map(f.spec(), t.left().mask()),
                    projection_map(f.spec(), t.right().mask()), std::move(ct.probs),
                    std::move(ct.defined), nl});
    out.breakdown.emplace_back(t, 0.0);
  }
  for (std::size_t i = 0; i < idx.size(); ++i) {
    double row_total = 0.0;
    for (std::size_t j = 0; j < prep.size(); ++j) {
      const auto& p = prep[j];
      double prob = 0.0;
      if (p.proj_b.empty()) {
        prob = p.table[p.proj_a[idx[i]]];
      } else {
        const auto r = p.proj_b[idx[i]];
        prob = p.defined[r] ? p.table[r * p.left_count + p.proj_a[idx[i]]] : 0.0;
      }
      const double v = prob > 0.0 ? p.weight * std::log(prob) : kNegInf;
      if (v == kNegInf && !out.offense) out.offense = PlOffense{out.breakdown[j].first, i};
      out.breakdown[j].second += v;
      row_total += v;
    }
    out.total += row_total;
  }
  return out;
}

inline PlValue log_pl(const models::ModelParams& params, std::span<const State> data,
                      const WeightScheme& w) {
  return log_pl(models::joint_table(params), data, w);
}

enum class EntropyForm {
  displayed,       // conditional blocks summed over right states unweighted
  right_weighted,  // each conditional row weighted by f^{right}
};

/// H(f) with 0 log 0 = 0; rows with a zero-probability conditioning event are skipped.
inline double pseudo_entropy(const TabularPmf& f, const WeightScheme& w,
                             EntropyForm form = EntropyForm::displayed) {
  w.validate(f.spec().q());
  double h = 0.0;
  for (const auto& [s, c] : w.marginals()) {
    double part = 0.0;
    for (double y : marginalize(f, s).probs) part += neg_ylogy(y);
    h += c * part;
  }
  for (const auto& [t, d] : w.conditionals()) {
    const auto ct = condition(f, t);
    double part = 0.0;
    for (std::size_t r = 0; r < ct.right_count(); ++r) {
      if (!ct.is_defined(r)) continue;
      double row = 0.0;
      for (double y : ct.row(r)) row += neg_ylogy(y);
      part += form == EntropyForm::right_weighted ? ct.right_probs[r] * row : row;
    }
    h += d * part;
  }
  return h;
}

struct EntropyBoundReport {
  std::size_t summands = 0;
  double max_term = 0.0;
  double min_term = 0.0;
  bool all_in_range = true;   // every -y log y in [0, 1/e]
  double entropy = 0.0;       // displayed-form H(f)
  double bound = 0.0;         // sum of coefficient x summand count / e
  bool finite = true;
};

inline constexpr double kEntropyTermMax = 1.0 / std::numbers::e;

/// Scans every -y log y summand of H(f) and certifies H(f) <= bound < inf.
inline EntropyBoundReport entropy_term_bound_check(const TabularPmf& f, const WeightScheme& w) {
  w.validate(f.spec().q());
  EntropyBoundReport rep;
  rep.min_term = kEntropyTermMax;
  auto scan = [&](double y) {
    const double t = neg_ylogy(y);
    ++rep.summands;
    rep.max_term = std::max(rep.max_term, t);
    rep.min_term = std::min(rep.min_term, t);
    if (!(t >= 0.0 && t <= kEntropyTermMax + 1e-15)) rep.all_in_range = false;
  };
  for (const auto& [s, c] : w.marginals()) {
    const auto m = marginalize(f, s);
    for (double y : m.probs) scan(y);
    rep.bound += c * static_cast<double>(m.probs.size()) * kEntropyTermMax;
  }
  for (const auto& [t, d] : w.conditionals()) {
    const auto ct = condition(f, t);
    for (std::size_t r = 0; r < ct.right_count(); ++r)
      if (ct.is_defined(r))
        for (double y : ct.row(r)) scan(y);
    rep.bound += d * static_cast<double>(ct.probs.size()) * kEntropyTermMax;
  }
  if (rep.summands == 0) rep.min_term = 0.0;
  rep.entropy = pseudo_entropy(f, w);
  rep.finite = std::isfinite(rep.entropy) && std::isfinite(rep.bound) &&
               rep.entropy <= rep.bound + 1e-12 && rep.all_in_range;
  return rep;
}

/// Count-based form of the weighted PL for repeated evaluation during fitting:
/// value and gradient with respect to every joint-table entry p(x).
class PlObjective {
 public:
  PlObjective(const SupportSpec& spec, std::span<const State> data, const WeightScheme& w)
      : spec_(spec), n_(data.size()) {
    w.validate(spec.q());
    const auto idx = encode_states(spec, data);
    for (const auto& [s, c] : w.marginals()) {
      Term t{s, c, projection_map(spec, s.mask()), {}, {}, {}};
      t.count_a.assign(static_cast<std::size_t>(spec.restrict(s.mask()).state_count()), 0.0);
      for (auto i : idx) t.count_a[t.proj_a[i]] += 1.0;
      terms_.push_back(std::move(t));
    }
    for (const auto& [p, d] : w.conditionals()) {
      Term t{p, d, projection_map(spec, p.joint_mask()), projection_map(spec, p.right().mask()),
             {}, {}};
      t.count_a.assign(static_cast<std::size_t>(spec.restrict(p.joint_mask()).state_count()), 0.0);
      t.count_b.assign(static_cast<std::size_t>(spec.restrict(p.right().mask()).state_count()),
                       0.0);
      for (auto i : idx) {
        t.count_a[t.proj_a[i]] += 1.0;
        t.count_b[t.proj_b[i]] += 1.0;
      }
      terms_.push_back(std::move(t));
    }
  }

  std::size_t sample_size() const noexcept { return n_; }
  const SupportSpec& spec() const noexcept { return spec_; }

  /// -inf when a datum lands on a zero-probability event; grad is then unspecified.
  double evaluate(std::span<const double> p, std::vector<double>* grad = nullptr) const {
    if (p.size() != spec_.state_count()) throw StructuralError("joint table size mismatch");
    if (grad) grad->assign(p.size(), 0.0);
    double total = 0.0;
    std::vector<double> ma, mb;
    for (const auto& t : terms_) {
      ma.assign(t.count_a.size(), 0.0);
      for (std::size_t x = 0; x < p.size(); ++x) ma[t.proj_a[x]] += p[x];
      double v = 0.0;
      for (std::size_t s = 0; s < ma.size(); ++s) {
        if (t.count_a[s] == 0.0) continue;
        if (!(ma[s] > 0.0)) return kNegInf;
        v += t.count_a[s] * std::log(ma[s]);
      }
      if (!t.proj_b.empty()) {
        mb.assign(t.count_b.size(), 0.0);
        for (std::size_t x = 0; x < p.size(); ++x) mb[t.proj_b[x]] += p[x];
        for (std::size_t s = 0; s < mb.size(); ++s) {
          if (t.count_b[s] == 0.0) continue;
          v -= t.count_b[s] * std::log(mb[s]);
        }
      }
      total += t.weight * v;
      if (!grad) continue;
      auto& g = *grad;
      for (std::size_t x = 0; x < p.size(); ++x) {
        const auto a = t.proj_a[x];
        double gx = t.count_a[a] > 0.0 ? t.count_a[a] / ma[a] : 0.0;
        if (!t.proj_b.empty()) {
          const auto b = t.proj_b[x];
          if (t.count_b[b] > 0.0) gx -= t.count_b[b] / mb[b];
        }
        g[x] += t.weight * gx;
      }
    }
    return total;
  }

 private:
  struct Term {
    TermId id;
    double weight;
    std::vector<std::uint32_t> proj_a;  // subset, or left-union-right
    std::vector<std::uint32_t> proj_b;  // right block (conditional terms only)
    std::vector<double> count_a;
    std::vector<double> count_b;
  };

  SupportSpec spec_;
  std::size_t n_;
  std::vector<Term> terms_;
};

}  // namespace mpl

#endif  // MPL_PL_HPP
