#ifndef MPL_PMF_HPP
#define MPL_PMF_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "mpl/error.hpp"
#include "mpl/numeric.hpp"
#include "mpl/support.hpp"

namespace mpl {

inline constexpr double kNormalizationTol = 1e-12;
inline constexpr std::uint64_t kDefaultStateCap = std::uint64_t{1} << 20;

namespace detail {

inline void check_distribution(std::span<const double> p, const std::string& what) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw DomainError(what + ": entries must be finite and non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kNormalizationTol)
    throw DomainError(what + ": entries sum to " + std::to_string(sum) + ", not 1");
}

}  // namespace detail

/// Exact probability table over an enumerated support.
class TabularPmf {
 public:
  TabularPmf(SupportSpec spec, std::vector<double> probs)
      : spec_(std::move(spec)), probs_(std::move(probs)) {
    if (probs_.size() != spec_.state_count())
      throw StructuralError("probability table size does not match the support");
    detail::check_distribution(probs_, "pmf");
  }

  /// Normalizes exp(log_weights) with a max shift; -inf entries get mass 0.
  static TabularPmf from_log_weights(SupportSpec spec, std::span<const double> log_weights) {
    const double lz = log_sum_exp(log_weights);
    if (!std::isfinite(lz)) throw DomainError("log weights do not normalize");
    std::vector<double> p(log_weights.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(log_weights[i] - lz);
    return TabularPmf(std::move(spec), std::move(p));
  }

  static TabularPmf uniform(SupportSpec spec) {
    const auto n = static_cast<std::size_t>(spec.state_count());
    return TabularPmf(std::move(spec), std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  const SupportSpec& spec() const noexcept { return spec_; }
  std::span<const double> probs() const noexcept { return probs_; }
  double operator[](std::uint64_t index) const { return probs_.at(index); }
  double prob(const State& x) const { return probs_[state_index(spec_, x)]; }

 private:
  SupportSpec spec_;
  std::vector<double> probs_;
};

struct MarginalTable {
  SubsetId subset;
  SupportSpec spec;  // restricted to subset
  std::vector<double> probs;
};

/// Rows indexed by right-block state, columns by left-block state.
struct ConditionalTable {
  PartitionId partition;
  SupportSpec left_spec;
  SupportSpec right_spec;
  std::vector<double> right_probs;  // f^{right}, the conditioning marginal
  std::vector<double> probs;        // row-major, right_count x left_count
  std::vector<std::uint8_t> defined;

  std::size_t left_count() const { return static_cast<std::size_t>(left_spec.state_count()); }
  std::size_t right_count() const { return static_cast<std::size_t>(right_spec.state_count()); }
  bool is_defined(std::size_t r) const { return defined.at(r) != 0; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(probs).subspan(r * left_count(), left_count());
  }
};

inline MarginalTable marginalize(const TabularPmf& f, SubsetId s) {
  if (!s.fits(f.spec().q())) throw DomainError("subset " + to_string(s) + " exceeds q");
  MarginalTable out{s, f.spec().restrict(s.mask()), {}};
  out.probs.assign(static_cast<std::size_t>(out.spec.state_count()), 0.0);
  const auto proj = projection_map(f.spec(), s.mask());
  const auto p = f.probs();
  for (std::size_t i = 0; i < p.size(); ++i) out.probs[proj[i]] += p[i];
  return out;
}

inline ConditionalTable condition(const TabularPmf& f, const PartitionId& t) {
  if (!t.fits(f.spec().q())) throw DomainError("partition " + to_string(t) + " exceeds q");
  ConditionalTable out{t, f.spec().restrict(t.left().mask()),
                       f.spec().restrict(t.right().mask()), {}, {}, {}};
  const std::size_t nl = out.left_count();
  const std::size_t nr = out.right_count();
  out.probs.assign(nl * nr, 0.0);
  out.right_probs.assign(nr, 0.0);
  out.defined.assign(nr, 0);
  const auto pl = projection_map(f.spec(), t.left().mask());
  const auto pr = projection_map(f.spec(), t.right().mask());
  const auto p = f.probs();
  for (std::size_t i = 0; i < p.size(); ++i) out.probs[pr[i] * nl + pl[i]] += p[i];
  for (std::size_t r = 0; r < nr; ++r) {
    double z = 0.0;
    for (std::size_t l = 0; l < nl; ++l) z += out.probs[r * nl + l];
    out.right_probs[r] = z;
    if (z > 0.0) {
      out.defined[r] = 1;
      for (std::size_t l = 0; l < nl; ++l) out.probs[r * nl + l] /= z;
    } else {
      for (std::size_t l = 0; l < nl; ++l)
        out.probs[r * nl + l] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

using TermId = std::variant<SubsetId, PartitionId>;

inline std::string to_string(const TermId& id) {
  return std::visit([](const auto& v) { return to_string(v); }, id);
}

inline bool fits(const TermId& id, std::size_t q) {
  return std::visit([q](const auto& v) { return v.fits(q); }, id);
}

/// Sample counts for one subset (over its restricted states) or one partition
/// (over right x left states, same layout as ConditionalTable).
struct EmpiricalTable {
  TermId id;
  std::vector<std::uint64_t> counts;
  std::uint64_t m = 0;

  std::vector<double> proportions() const {
    std::vector<double> out(counts.size(), 0.0);
    if (m == 0) return out;
    for (std::size_t i = 0; i < counts.size(); ++i)
      out[i] = static_cast<double>(counts[i]) / static_cast<double>(m);
    return out;
  }
};

/// Dense indices of data rows; out-of-support rows raise DomainError naming the row.
inline std::vector<std::uint64_t> encode_states(const SupportSpec& spec,
                                                std::span<const State> data) {
  std::vector<std::uint64_t> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    try {
      out.push_back(state_index(spec, data[i]));
    } catch (const DomainError& e) {
      throw DomainError("data row " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<EmpiricalTable> empirical_tables(const SupportSpec& spec,
                                                    std::span<const State> data,
                                                    std::span<const TermId> ids) {
  std::vector<EmpiricalTable> out;
  if (ids.empty()) return out;
  const auto idx = encode_states(spec, data);
  for (const auto& id : ids) {
    if (!fits(id, spec.q())) throw DomainError("term " + to_string(id) + " exceeds q");
    EmpiricalTable t{id, {}, data.size()};
    if (const auto* s = std::get_if<SubsetId>(&id)) {
      const auto proj = projection_map(spec, s->mask());
      t.counts.assign(static_cast<std::size_t>(spec.restrict(s->mask()).state_count()), 0);
      for (auto i : idx) ++t.counts[proj[i]];
    } else {
      const auto& p = std::get<PartitionId>(id);
      const auto pl = projection_map(spec, p.left().mask());
      const auto pr = projection_map(spec, p.right().mask());
      const auto nl = static_cast<std::size_t>(spec.restrict(p.left().mask()).state_count());
      const auto nr = static_cast<std::size_t>(spec.restrict(p.right().mask()).state_count());
      t.counts.assign(nl * nr, 0);
      for (auto i : idx) ++t.counts[pr[i] * nl + pl[i]];
    }
    out.push_back(std::move(t));
  }
  return out;
}

struct CompatibilityEntry {
  TermId id;
  double deviation = 0.0;
};

struct CompatibilityReport {
  std::vector<CompatibilityEntry> entries;
  double max_deviation = 0.0;
  bool pass = true;
};

/// Recomputes each claimed table from f and compares entrywise. A row defined
/// on one side and undefined on the other counts as infinite deviation.
inline CompatibilityReport compatibility_check(const TabularPmf& f,
                                               std::span<const MarginalTable> marginals,
                                               std::span<const ConditionalTable> conditionals,
                                               double tol) {
  CompatibilityReport rep;
  auto record = [&](TermId id, double dev) {
    rep.entries.push_back({id, dev});
    rep.max_deviation = std::max(rep.max_deviation, dev);
    if (!(dev <= tol)) rep.pass = false;
  };
  for (const auto& claimed : marginals) {
    if (!claimed.subset.fits(f.spec().q()))
      throw StructuralError("claimed marginal " + to_string(claimed.subset) + " exceeds q");
    const auto fresh = marginalize(f, claimed.subset);
    if (!(fresh.spec == claimed.spec) || fresh.probs.size() != claimed.probs.size())
      throw StructuralError("claimed marginal " + to_string(claimed.subset) +
                            " has the wrong shape");
    double dev = 0.0;
    for (std::size_t i = 0; i < fresh.probs.size(); ++i)
      dev = std::max(dev, std::abs(fresh.probs[i] - claimed.probs[i]));
    record(claimed.subset, dev);
  }
  for (const auto& claimed : conditionals) {
    if (!claimed.partition.fits(f.spec().q()))
      throw StructuralError("claimed conditional " + to_string(claimed.partition) +
                            " exceeds q");
    const auto fresh = condition(f, claimed.partition);
    if (!(fresh.left_spec == claimed.left_spec) || !(fresh.right_spec == claimed.right_spec) ||
        fresh.probs.size() != claimed.probs.size() ||
        fresh.defined.size() != claimed.defined.size())
      throw StructuralError("claimed conditional " + to_string(claimed.partition) +
                            " has the wrong shape");
    double dev = 0.0;
    for (std::size_t r = 0; r < fresh.right_count(); ++r) {
      if (fresh.is_defined(r) != claimed.is_defined(r)) {
        dev = std::numeric_limits<double>::infinity();
        break;
      }
      if (!fresh.is_defined(r)) continue;
      const auto a = fresh.row(r);
      const auto b = claimed.row(r);
      for (std::size_t l = 0; l < a.size(); ++l) dev = std::max(dev, std::abs(a[l] - b[l]));
    }
    record(claimed.partition, dev);
  }
  return rep;
}

// CSV: header x1..xq,probability; one row per state in index order.
inline void write_pmf_csv(std::ostream& os, const TabularPmf& f) {
  const auto& spec = f.spec();
  for (std::size_t k = 0; k < spec.q(); ++k) os << 'x' << (k + 1) << ',';
  os << "probability\n";
  const auto old = os.precision(17);
  for (std::uint64_t i = 0; i < spec.state_count(); ++i) {
    const State x = state_at(spec, i);
    for (int v : x) os << v << ',';
    os << f[i] << '\n';
  }
  os.precision(old);
}

/// Reads what write_pmf_csv wrote; the support is inferred from the rows, so
/// rows must list every state in canonical index order.
inline TabularPmf read_pmf_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(is, line)) throw ParseError(lineno, "missing header");
  std::size_t q = 0;
  {
    std::stringstream hs(line);
    std::string col;
    std::vector<std::string> cols;
    while (std::getline(hs, col, ',')) cols.push_back(std::string(detail::trim(col)));
    if (cols.size() < 2 || cols.back() != "probability")
      throw ParseError(lineno, "header must be x1..xq,probability");
    q = cols.size() - 1;
    for (std::size_t k = 0; k < q; ++k)
      if (cols[k] != "x" + std::to_string(k + 1))
        throw ParseError(lineno, "unexpected column '" + cols[k] + "'");
  }
  std::vector<State> states;
  std::vector<double> probs;
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    State x;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != q + 1) throw ParseError(lineno, "wrong number of columns");
    try {
      for (std::size_t k = 0; k < q; ++k) x.push_back(std::stoi(cells[k]));
      probs.push_back(std::stod(cells[q]));
    } catch (const std::exception&) {
      throw ParseError(lineno, "non-numeric cell");
    }
    states.push_back(std::move(x));
  }
  std::vector<std::vector<int>> values(q);
  for (const auto& x : states)
    for (std::size_t k = 0; k < q; ++k)
      if (std::find(values[k].begin(), values[k].end(), x[k]) == values[k].end())
        values[k].push_back(x[k]);
  SupportSpec spec(std::move(values));
  if (spec.state_count() != states.size())
    throw ParseError(lineno, "rows do not cover the product support exactly once");
  for (std::size_t i = 0; i < states.size(); ++i)
    if (state_at(spec, i) != states[i])
      throw ParseError(i + 2, "rows are not in canonical state order");
  return TabularPmf(std::move(spec), std::move(probs));
}

}  // namespace mpl

#endif  // MPL_PMF_HPP
