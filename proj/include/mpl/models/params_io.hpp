#ifndef MPL_MODELS_PARAMS_IO_HPP
#define MPL_MODELS_PARAMS_IO_HPP

// Plain-text parameter files:
//
//   family fvbm          # categorical | fvbm | rbm
//   q 3
//   r 2                  # rbm only
//   M 3 3                # "<name> <rows> <cols>", then <rows> lines
//   0 0.5 -1
//   ...
//   b 3                  # "<name> <len>", then one line of values
//   0.1 0.2 0.3
//
// Values are written with 17 significant digits so they read back exactly.
// '#' starts a comment.

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "mpl/error.hpp"
#include "mpl/models/categorical.hpp"
#include "mpl/models/fvbm.hpp"
#include "mpl/models/rbm.hpp"

namespace mpl::models {

using ModelParams = std::variant<CategoricalParams, FvbmParams, RbmParams>;

inline std::string family_name(const ModelParams& p) {
  switch (p.index()) {
    case 0: return "categorical";
    case 1: return "fvbm";
    default: return "rbm";
  }
}

inline std::size_t visible_count(const ModelParams& p) {
  switch (p.index()) {
    case 0: return std::get<CategoricalParams>(p).q();
    case 1: return std::get<FvbmParams>(p).q;
    default: return std::get<RbmParams>(p).q;
  }
}

/// Exact joint table of any family.
inline TabularPmf joint_table(const ModelParams& p) {
  switch (p.index()) {
    case 0: return categorical_joint(std::get<CategoricalParams>(p));
    case 1: return fvbm_joint(std::get<FvbmParams>(p));
    default: return rbm_marginal(std::get<RbmParams>(p));
  }
}

namespace detail {

inline void write_row(std::ostream& os, std::span<const double> v) {
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
  os << '\n';
}

inline void write_matrix(std::ostream& os, const char* name, std::span<const double> m,
                         std::size_t rows, std::size_t cols) {
  os << name << ' ' << rows << ' ' << cols << '\n';
  for (std::size_t i = 0; i < rows; ++i) write_row(os, m.subspan(i * cols, cols));
}

inline void write_vector(std::ostream& os, const char* name, std::span<const double> v) {
  os << name << ' ' << v.size() << '\n';
  write_row(os, v);
}

class LineReader {
 public:
  explicit LineReader(std::istream& is) : is_(is) {}

  // Next non-blank, comment-stripped line split into tokens; empty at EOF.
  std::vector<std::string> next() {
    std::string line;
    while (std::getline(is_, line)) {
      ++line_;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      std::istringstream ss(line);
      std::vector<std::string> toks;
      for (std::string t; ss >> t;) toks.push_back(t);
      if (!toks.empty()) return toks;
    }
    return {};
  }

  std::size_t line() const { return line_; }

  double number(const std::string& tok) const {
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ParseError(line_, "not a number: '" + tok + "'");
    }
  }

  std::size_t count(const std::string& tok) const {
    const double v = number(tok);
    if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
      throw ParseError(line_, "not a count: '" + tok + "'");
    return static_cast<std::size_t>(v);
  }

  std::vector<double> values(std::size_t expect) {
    const auto toks = next();
    if (toks.size() != expect)
      throw ParseError(line_, "expected " + std::to_string(expect) + " values, got " +
                                  std::to_string(toks.size()));
    std::vector<double> out;
    for (const auto& t : toks) out.push_back(number(t));
    return out;
  }

 private:
  std::istream& is_;
  std::size_t line_ = 0;
};

}  // namespace detail

inline void write_params(std::ostream& os, const ModelParams& params) {
  const auto old = os.precision(17);
  os << "family " << family_name(params) << '\n';
  if (const auto* c = std::get_if<CategoricalParams>(&params)) {
    os << "q " << c->q() << '\n';
    detail::write_vector(os, "pi", c->pi);
  } else if (const auto* f = std::get_if<FvbmParams>(&params)) {
    os << "q " << f->q << '\n';
    detail::write_matrix(os, "M", f->M, f->q, f->q);
    detail::write_vector(os, "b", f->b);
  } else {
    const auto& r = std::get<RbmParams>(params);
    os << "q " << r.q << '\n' << "r " << r.r << '\n';
    detail::write_matrix(os, "M", r.M, r.q, r.r);
    detail::write_vector(os, "a", r.a);
    detail::write_vector(os, "b", r.b);
  }
  os.precision(old);
}

inline ModelParams read_params(std::istream& is) {
  detail::LineReader in(is);
  std::string family;
  std::size_t q = 0;
  std::size_t r = 0;
  std::vector<double> pi, M, a, b;
  bool have_M = false;
  for (auto toks = in.next(); !toks.empty(); toks = in.next()) {
    const auto& key = toks[0];
    auto need = [&](std::size_t n) {
      if (toks.size() != n) throw ParseError(in.line(), "malformed '" + key + "' line");
    };
    if (key == "family") {
      need(2);
      family = toks[1];
    } else if (key == "q") {
      need(2);
      q = in.count(toks[1]);
    } else if (key == "r") {
      need(2);
      r = in.count(toks[1]);
    } else if (key == "M") {
      need(3);
      const auto rows = in.count(toks[1]);
      const auto cols = in.count(toks[2]);
      if (rows != q) throw ParseError(in.line(), "M must have q rows");
      M.clear();
      for (std::size_t i = 0; i < rows; ++i) {
        const auto row = in.values(cols);
        M.insert(M.end(), row.begin(), row.end());
      }
      have_M = true;
    } else if (key == "pi" || key == "a" || key == "b") {
      need(2);
      auto v = in.values(in.count(toks[1]));
      (key == "pi" ? pi : key == "a" ? a : b) = std::move(v);
    } else {
      throw ParseError(in.line(), "unknown key '" + key + "'");
    }
  }
  try {
    if (family == "categorical") {
      CategoricalParams p{pi};
      if (p.q() != q) throw StructuralError("pi length differs from q");
      p.validate();
      return p;
    }
    if (family == "fvbm") {
      if (!have_M) throw StructuralError("fvbm file lacks M");
      FvbmParams p{q, M, b};
      p.validate();
      return p;
    }
    if (family == "rbm") {
      if (!have_M) throw StructuralError("rbm file lacks M");
      RbmParams p{q, r, M, a, b};
      p.validate();
      return p;
    }
  } catch (const std::logic_error& e) {
    throw ParseError(in.line(), e.what());
  }
  throw ParseError(in.line(), "unknown or missing family '" + family + "'");
}

}  // namespace mpl::models

#endif  // MPL_MODELS_PARAMS_IO_HPP
