#ifndef MPL_HARNESS_HPP
#define MPL_HARNESS_HPP

// Monte Carlo consistency experiments: sample at a known truth over a grid of
// sample sizes, fit by MPL, and record the sup-norm error of every weighted
// marginal and conditional against the exact truth tables.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mpl/error.hpp"
#include "mpl/estimate.hpp"
#include "mpl/models/params_io.hpp"
#include "mpl/pl.hpp"
#include "mpl/pmf.hpp"
#include "mpl/random.hpp"
#include "mpl/sample.hpp"

namespace mpl {

// Config grammar, one "key = value" per line, '#' starts a comment:
//   family     = categorical | fvbm | rbm
//   q          = <int>
//   r          = <int>                        (rbm only)
//   truth      = zero | random <scale> | pi <p1> ... <pq> | file <path>
//   truth_seed = <u64>                        (random truth; default: seed)
//   scheme     = native | ml | composite_marginal | pairwise |
//                full_conditionals | example1 | file <path>
//   n_grid     = <n1> <n2> ...                (strictly increasing)
//   replicates = <int>
//   seed       = <u64>
//   threads    = <int>
//   out        = <dir>
//   restarts   = <int>                        (0: family default)
//   max_iter   = <int>
// Relative truth and scheme file paths are resolved against the config file's
// directory; out is relative to the working directory.
struct ExperimentConfig {
  Family family = Family::fvbm;
  std::size_t q = 0;
  std::size_t r = 0;
  std::string truth = "zero";
  std::optional<std::uint64_t> truth_seed;
  std::string scheme = "native";
  std::vector<std::size_t> n_grid;
  std::size_t replicates = 1;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out = ".";
  std::size_t restarts = 0;
  std::size_t max_iter = 500;
  std::filesystem::path base_dir = ".";

  ModelShape shape() const { return {family, q, r}; }

  void validate() const {
    if (family == Family::tabular) throw PreconditionError("experiments need a parametric family");
    if (q < 1) throw PreconditionError("q must be >= 1");
    if (family == Family::rbm && r < 1) throw PreconditionError("rbm needs r >= 1");
    if (n_grid.empty()) throw PreconditionError("n_grid is empty");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
      if (n_grid[i] < 1) throw PreconditionError("n_grid entries must be >= 1");
      if (i > 0 && n_grid[i] <= n_grid[i - 1])
        throw PreconditionError("n_grid must be strictly increasing");
    }
    if (replicates < 1) throw PreconditionError("replicates must be >= 1");
    if (threads < 1) throw PreconditionError("threads must be >= 1");
    if (max_iter < 1) throw PreconditionError("max_iter must be >= 1");
  }
};

namespace detail {

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream is{std::string(s)};
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

template <class T>
T parse_number(const std::string& s, std::size_t line, const std::string& key) {
  std::istringstream is(s);
  T v{};
  char extra;
  if (!(is >> v) || (is >> extra)) throw ParseError(line, "bad value '" + s + "' for " + key);
  return v;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(std::istream& is,
                                                const std::filesystem::path& base_dir = ".") {
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  std::string raw;
  std::size_t lineno = 0;
  bool have_family = false, have_q = false;
  while (std::getline(is, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const auto line = std::string(detail::trim(raw.substr(0, hash)));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(lineno, "expected 'key = value'");
    const auto key = std::string(detail::trim(line.substr(0, eq)));
    const auto val = std::string(detail::trim(line.substr(eq + 1)));
    if (val.empty()) throw ParseError(lineno, "missing value for " + key);
    if (key == "family") {
      try {
        cfg.family = parse_family(val);
      } catch (const DomainError& e) {
        throw ParseError(lineno, e.what());
      }
      have_family = true;
    } else if (key == "q") {
      cfg.q = detail::parse_number<std::size_t>(val, lineno, key);
      have_q = true;
    } else if (key == "r") {
      cfg.r = detail::parse_number<std::size_t>(val, lineno, key);
    } else if (key == "truth") {
      cfg.truth = val;
    } else if (key == "truth_seed") {
      cfg.truth_seed = detail::parse_number<std::uint64_t>(val, lineno, key);
    } else if (key == "scheme") {
      cfg.scheme = val;
    } else if (key == "n_grid") {
      cfg.n_grid.clear();
      for (const auto& w : detail::split_ws(val))
        cfg.n_grid.push_back(detail::parse_number<std::size_t>(w, lineno, key));
    } else if (key == "replicates") {
      cfg.replicates = detail::parse_number<std::size_t>(val, lineno, key);
    } else if (key == "seed") {
      cfg.seed = detail::parse_number<std::uint64_t>(val, lineno, key);
    } else if (key == "threads") {
      cfg.threads = detail::parse_number<unsigned>(val, lineno, key);
    } else if (key == "out") {
      cfg.out = val;
    } else if (key == "restarts") {
      cfg.restarts = detail::parse_number<std::size_t>(val, lineno, key);
    } else if (key == "max_iter") {
      cfg.max_iter = detail::parse_number<std::size_t>(val, lineno, key);
    } else {
      throw ParseError(lineno, "unknown key '" + key + "'");
    }
  }
  if (!have_family) throw ParseError(lineno, "missing key 'family'");
  if (!have_q) throw ParseError(lineno, "missing key 'q'");
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open config " + path.string());
  return parse_experiment_config(in, path.parent_path().empty() ? "." : path.parent_path());
}

/// Ground-truth parameters named by the config's truth line.
inline models::ModelParams make_truth(const ExperimentConfig& cfg) {
  const auto words = detail::split_ws(cfg.truth);
  if (words.empty()) throw PreconditionError("empty truth");
  const auto& kind = words[0];
  if (kind == "file") {
    if (words.size() != 2) throw PreconditionError("truth file needs one path");
    std::filesystem::path p = words[1];
    if (p.is_relative()) p = cfg.base_dir / p;
    std::ifstream in(p);
    if (!in) throw PreconditionError("cannot open truth file " + p.string());
    auto params = models::read_params(in);
    if (models::visible_count(params) != cfg.q) throw PreconditionError("truth file has wrong q");
    return params;
  }
  if (kind == "pi") {
    if (cfg.family != Family::categorical) throw PreconditionError("truth 'pi' is categorical only");
    if (words.size() != cfg.q + 1) throw PreconditionError("truth 'pi' needs q values");
    models::CategoricalParams p;
    for (std::size_t k = 1; k < words.size(); ++k) p.pi.push_back(std::stod(words[k]));
    p.validate();
    return p;
  }
  double scale = 0.0;
  if (kind == "random") {
    if (words.size() != 2) throw PreconditionError("truth 'random' needs a scale");
    scale = std::stod(words[1]);
    if (!(scale >= 0.0)) throw PreconditionError("truth scale must be >= 0");
  } else if (kind != "zero") {
    throw PreconditionError("unknown truth '" + kind + "'");
  }
  auto g = make_stream(SeedSpec{cfg.truth_seed.value_or(cfg.seed), 0}, Substream::truth);
  std::vector<double> th(cfg.shape().dimension());
  for (auto& v : th) v = scale > 0.0 ? uniform(g, -scale, scale) : 0.0;
  return detail::params_from_flat(cfg.shape(), th);
}

inline WeightScheme experiment_scheme(const ExperimentConfig& cfg) {
  if (cfg.scheme == "native") return native_scheme(cfg.shape());
  const auto words = detail::split_ws(cfg.scheme);
  if (words.size() == 2 && words[0] == "file") {
    std::filesystem::path p = words[1];
    if (p.is_relative()) p = cfg.base_dir / p;
    std::ifstream in(p);
    if (!in) throw PreconditionError("cannot open scheme file " + p.string());
    return read_scheme(in, cfg.q);
  }
  return scheme_by_name(cfg.scheme, cfg.q);
}

/// Sup-norm distance of one weighted term between a fitted and a true joint.
/// Conditional rows undefined under the truth are skipped; a row defined
/// under the truth but not under the fit counts as error 1.
inline double term_sup_error(const TabularPmf& fit, const TabularPmf& truth, const TermId& id) {
  double e = 0.0;
  if (const auto* s = std::get_if<SubsetId>(&id)) {
    const auto a = marginalize(fit, *s), b = marginalize(truth, *s);
    for (std::size_t i = 0; i < a.probs.size(); ++i) e = std::max(e, std::abs(a.probs[i] - b.probs[i]));
    return e;
  }
  const auto& t = std::get<PartitionId>(id);
  const auto a = condition(fit, t), b = condition(truth, t);
  for (std::size_t r = 0; r < b.right_count(); ++r) {
    if (!b.is_defined(r)) continue;
    if (!a.is_defined(r)) return 1.0;
    const auto ra = a.row(r), rb = b.row(r);
    for (std::size_t l = 0; l < ra.size(); ++l) e = std::max(e, std::abs(ra[l] - rb[l]));
  }
  return e;
}

/// Sup-norm parameter distance where the parameterization is identified
/// (categorical pi; FVBM couplings and biases); empty for rbm.
inline std::optional<double> param_error(const models::ModelParams& fit,
                                         const models::ModelParams& truth) {
  if (const auto* c = std::get_if<models::CategoricalParams>(&fit)) {
    const auto& t = std::get<models::CategoricalParams>(truth);
    double e = 0.0;
    for (std::size_t k = 0; k < c->pi.size(); ++k) e = std::max(e, std::abs(c->pi[k] - t.pi[k]));
    return e;
  }
  if (const auto* f = std::get_if<models::FvbmParams>(&fit)) {
    const auto a = models::fvbm_to_flat(*f);
    const auto b = models::fvbm_to_flat(std::get<models::FvbmParams>(truth));
    double e = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
    return e;
  }
  return std::nullopt;
}

struct ConvergenceRecord {
  std::size_t n = 0;
  std::size_t replicate = 0;
  std::vector<TermId> terms;
  std::vector<double> sup_errors;  // parallel to terms; NaN when the fit failed
  std::optional<double> param_error;
  std::string fit_status;  // FitStatus name, or "failed"
};

struct ExperimentResult {
  ExperimentConfig config;
  models::ModelParams truth;
  WeightScheme scheme;
  EntropyBoundReport entropy;
  std::vector<ConvergenceRecord> records;  // grid-major, then replicate
};

/// Stream key for cell (grid_index, replicate): distinct per cell.
inline SeedSpec cell_seed(const ExperimentConfig& cfg, std::size_t grid_index,
                          std::size_t replicate) {
  return SeedSpec{cfg.seed, grid_index * cfg.replicates + replicate};
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult res{cfg, make_truth(cfg), experiment_scheme(cfg), {}, {}};
  const auto truth_joint = models::joint_table(res.truth);
  // finite pseudo-entropy at the truth is the consistency hypothesis
  res.entropy = entropy_term_bound_check(truth_joint, res.scheme);
  if (!res.entropy.finite) throw DomainError("truth has non-finite pseudo-entropy");

  const auto terms = res.scheme.terms();
  const ObjectiveSpec objective =
      cfg.scheme == "native" ? ObjectiveSpec{NativeObjective{}} : ObjectiveSpec{res.scheme};
  const std::size_t cells = cfg.n_grid.size() * cfg.replicates;
  res.records.resize(cells);

  auto run_cell = [&](std::size_t cell) {
    const std::size_t gi = cell / cfg.replicates, rep = cell % cfg.replicates;
    const SeedSpec seed = cell_seed(cfg, gi, rep);
    auto& rec = res.records[cell];
    rec.n = cfg.n_grid[gi];
    rec.replicate = rep;
    rec.terms = terms;
    const auto data = sample_exact(truth_joint, rec.n, seed);
    FitConfig fc;
    fc.seed = seed;
    fc.restarts = cfg.restarts;
    fc.max_iter = cfg.max_iter;
    try {
      const auto fit = fit_mpl(cfg.shape(), data, objective, fc);
      const auto joint = fit.joint();
      for (const auto& id : terms) rec.sup_errors.push_back(term_sup_error(joint, truth_joint, id));
      rec.param_error = param_error(*fit.params, res.truth);
      rec.fit_status = to_string(fit.status);
    } catch (const FitError&) {
      rec.sup_errors.assign(terms.size(), std::numeric_limits<double>::quiet_NaN());
      rec.fit_status = "failed";
    }
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c; (c = next.fetch_add(1)) < cells;) run_cell(c);
  };
  const unsigned workers = std::min<std::size_t>(cfg.threads, cells);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return res;
}

namespace detail {

inline std::string fmt17(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::vector<std::string> csv_split(const std::string& line, std::size_t lineno) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError(lineno, "unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

}  // namespace detail

inline constexpr const char* kRecordsHeader =
    "family,scheme_id,n,replicate,term_kind,term_id,sup_error,param_error,fit_status";

/// One line per (record, weighted term), grid-major then replicate then term.
inline void write_records_csv(std::ostream& os, const ExperimentResult& res) {
  os << kRecordsHeader << '\n';
  const auto family = to_string(res.config.family);
  const auto scheme = detail::csv_quote(res.config.scheme);
  for (const auto& rec : res.records)
    for (std::size_t t = 0; t < rec.terms.size(); ++t) {
      const bool marginal = std::holds_alternative<SubsetId>(rec.terms[t]);
      os << family << ',' << scheme << ',' << rec.n << ',' << rec.replicate << ','
         << (marginal ? "marginal" : "conditional") << ','
         << detail::csv_quote(to_string(rec.terms[t])) << ','
         << detail::fmt17(rec.sup_errors[t]) << ','
         << (rec.param_error ? detail::fmt17(*rec.param_error) : "NA") << ','
         << rec.fit_status << '\n';
    }
}

inline void write_experiment_metadata(std::ostream& os, const ExperimentResult& res) {
  std::ostringstream truth;
  models::write_params(truth, res.truth);
  std::ostringstream grid;
  for (std::size_t i = 0; i < res.config.n_grid.size(); ++i)
    grid << (i ? " " : "") << res.config.n_grid[i];
  std::size_t nonconverged = 0;
  for (const auto& r : res.records) nonconverged += r.fit_status != "converged";
  write_metadata(os, {
                         {"generator", kGeneratorId},
                         {"family", to_string(res.config.family)},
                         {"q", std::to_string(res.config.q)},
                         {"r", std::to_string(res.config.r)},
                         {"truth", res.config.truth},
                         {"truth_params_fnv1a64", hex64(fnv1a64(truth.str()))},
                         {"scheme", res.config.scheme},
                         {"n_grid", grid.str()},
                         {"replicates", std::to_string(res.config.replicates)},
                         {"master_seed", std::to_string(res.config.seed)},
                         {"stream_key", "(master_seed, grid_index * replicates + replicate)"},
                         {"pseudo_entropy", detail::fmt17(res.entropy.entropy)},
                         {"pseudo_entropy_bound", detail::fmt17(res.entropy.bound)},
                         {"entropy_terms_in_range", res.entropy.all_in_range ? "yes" : "no"},
                         {"nonconverged_fits", std::to_string(nonconverged)},
                     });
}

/// Writes records.csv, records.meta and truth.params into dir.
inline void write_experiment(const std::filesystem::path& dir, const ExperimentResult& res) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw PreconditionError("cannot write " + (dir / name).string());
    return f;
  };
  auto rec = open("records.csv");
  write_records_csv(rec, res);
  auto meta = open("records.meta");
  write_experiment_metadata(meta, res);
  auto truth = open("truth.params");
  models::write_params(truth, res.truth);
}

// ---- summaries ----

struct RecordRow {
  std::string family, scheme_id, term_kind, term_id, fit_status;
  std::size_t n = 0, replicate = 0;
  double sup_error = 0.0;
  std::optional<double> param_error;
};

inline std::vector<RecordRow> read_records_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<RecordRow> rows;
  if (!std::getline(is, line)) return rows;
  ++lineno;
  if (detail::trim(line) != kRecordsHeader) throw ParseError(lineno, "unexpected records header");
  auto num = [&](const std::string& s) {
    if (s == "NA") return std::numeric_limits<double>::quiet_NaN();
    return detail::parse_number<double>(s, lineno, "error column");
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::csv_split(line, lineno);
    if (f.size() != 9) throw ParseError(lineno, "expected 9 columns");
    RecordRow r;
    r.family = f[0];
    r.scheme_id = f[1];
    r.n = detail::parse_number<std::size_t>(f[2], lineno, "n");
    r.replicate = detail::parse_number<std::size_t>(f[3], lineno, "replicate");
    r.term_kind = f[4];
    r.term_id = f[5];
    r.sup_error = num(f[6]);
    if (f[7] != "NA") r.param_error = num(f[7]);
    r.fit_status = f[8];
    rows.push_back(std::move(r));
  }
  return rows;
}

/// Type-7 sample quantile of sorted values.
inline double quantile_sorted(const std::vector<double>& v, double p) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct SummaryRow {
  std::string family, scheme_id, term_kind, term_id;
  std::size_t n = 0;
  std::size_t count = 0;        // replicates with a finite error
  std::size_t nonconverged = 0;
  double median = 0.0, q1 = 0.0, q3 = 0.0;
  bool monotone = false;  // medians strictly decrease along this series' grid
};

enum class SummaryStatus { ok, empty };

struct Summary {
  SummaryStatus status = SummaryStatus::empty;
  std::vector<SummaryRow> rows;  // series order of first appearance, n ascending
  bool all_terms_monotone = false;  // over marginal and conditional series
};

/// Median and IQR of each error per (series, n). Parameter errors form one
/// extra series per (family, scheme) with term_kind "parameter".
inline Summary summarize(const std::vector<RecordRow>& records) {
  Summary out;
  if (records.empty()) return out;
  using Key = std::tuple<std::string, std::string, std::string, std::string>;
  std::vector<Key> order;
  std::map<Key, std::map<std::size_t, std::pair<std::vector<double>, std::size_t>>> series;
  auto add = [&](Key k, std::size_t n, double v, bool converged) {
    if (!series.count(k)) order.push_back(k);
    auto& cell = series[k][n];
    if (!std::isnan(v)) cell.first.push_back(v);
    if (!converged) ++cell.second;
  };
  std::map<std::tuple<std::string, std::string, std::size_t, std::size_t>, bool> param_seen;
  for (const auto& r : records) {
    const bool conv = r.fit_status == "converged";
    add({r.family, r.scheme_id, r.term_kind, r.term_id}, r.n, r.sup_error, conv);
    if (r.param_error) {
      auto& seen = param_seen[{r.family, r.scheme_id, r.n, r.replicate}];
      if (!seen) add({r.family, r.scheme_id, "parameter", "theta"}, r.n, *r.param_error, conv);
      seen = true;
    }
  }
  out.status = SummaryStatus::ok;
  out.all_terms_monotone = true;
  for (const auto& key : order) {
    const auto first = out.rows.size();
    bool mono = true;
    double prev = std::numeric_limits<double>::infinity();
    for (auto& [n, cell] : series[key]) {
      auto& v = cell.first;
      std::sort(v.begin(), v.end());
      SummaryRow row{std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key),
                     n, v.size(), cell.second, quantile_sorted(v, 0.5), quantile_sorted(v, 0.25),
                     quantile_sorted(v, 0.75), false};
      if (!(row.median < prev)) mono = false;
      prev = row.median;
      out.rows.push_back(row);
    }
    for (auto i = first; i < out.rows.size(); ++i) out.rows[i].monotone = mono;
    if (std::get<2>(key) != "parameter" && !mono) out.all_terms_monotone = false;
  }
  return out;
}

inline void write_summary_csv(std::ostream& os, const Summary& s) {
  os << "family,scheme_id,term_kind,term_id,n,count,nonconverged,median,q1,q3,iqr,monotone\n";
  for (const auto& r : s.rows)
    os << r.family << ',' << detail::csv_quote(r.scheme_id) << ',' << r.term_kind << ','
       << detail::csv_quote(r.term_id) << ',' << r.n << ',' << r.count << ',' << r.nonconverged
       << ',' << detail::fmt17(r.median) << ',' << detail::fmt17(r.q1) << ','
       << detail::fmt17(r.q3) << ',' << detail::fmt17(r.q3 - r.q1) << ','
       << (r.monotone ? "yes" : "no") << '\n';
}

/// Long-format plot data: one row per (series, n) with the median and IQR band.
inline void write_plot_data(std::ostream& os, const Summary& s) {
  os << "series,n,median,lower,upper\n";
  for (const auto& r : s.rows)
    os << detail::csv_quote(r.term_kind + ":" + r.term_id) << ',' << r.n << ','
       << detail::fmt17(r.median) << ',' << detail::fmt17(r.q1) << ',' << detail::fmt17(r.q3)
       << '\n';
}

}  // namespace mpl

#endif  // MPL_HARNESS_HPP
