#ifndef MPL_SUPPORT_HPP
#define MPL_SUPPORT_HPP

// Finite product supports X in Z^q, the coordinate subsets S and the ordered
// two-block partitions T that index marginal and conditional terms.

#include <algorithm>
#include <bit>
#include <compare>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "mpl/error.hpp"

namespace mpl {

using State = std::vector<int>;
using CoordMask = std::uint64_t;

inline constexpr std::size_t kMaxCoordinates = 64;
inline constexpr std::size_t kDefaultSubsetCap = 20;
inline constexpr std::size_t kDefaultPartitionCap = 12;

/// Per-coordinate value sets; states are indexed in mixed radix with x1 as
/// the most significant digit, so binary (1,1,1) has index 7.
class SupportSpec {
 public:
  SupportSpec() = default;

  explicit SupportSpec(std::vector<std::vector<int>> values) : values_(std::move(values)) {
    if (values_.empty()) throw DomainError("support needs at least one coordinate");
    if (values_.size() > kMaxCoordinates)
      throw CapacityError("support has more than 64 coordinates");
    count_ = 1;
    for (std::size_t k = 0; k < values_.size(); ++k) {
      const auto& v = values_[k];
      if (v.empty())
        throw DomainError("coordinate x" + std::to_string(k + 1) + " has an empty value set");
      auto sorted = v;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw DomainError("coordinate x" + std::to_string(k + 1) + " has duplicate values");
      if (count_ > std::numeric_limits<std::uint64_t>::max() / v.size())
        throw CapacityError("state count overflows 64 bits");
      count_ *= v.size();
    }
    strides_.assign(values_.size(), 1);
    for (std::size_t k = values_.size() - 1; k > 0; --k)
      strides_[k - 1] = strides_[k] * values_[k].size();
  }

  static SupportSpec binary(std::size_t q) {
    return SupportSpec(std::vector<std::vector<int>>(q, std::vector<int>{0, 1}));
  }

  std::size_t q() const noexcept { return values_.size(); }
  const std::vector<int>& values(std::size_t k) const { return values_.at(k); }
  std::size_t radix(std::size_t k) const { return values_.at(k).size(); }
  std::uint64_t state_count() const noexcept { return count_; }
  std::uint64_t stride(std::size_t k) const { return strides_.at(k); }
  CoordMask full_mask() const noexcept {
    return q() == 64 ? ~CoordMask{0} : (CoordMask{1} << q()) - 1;
  }

  bool is_binary() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](const auto& v) { return v == std::vector<int>{0, 1}; });
  }

  /// Position of value in coordinate k's list, or npos.
  std::size_t position(std::size_t k, int value) const {
    const auto& v = values_.at(k);
    auto it = std::find(v.begin(), v.end(), value);
    return it == v.end() ? npos : static_cast<std::size_t>(it - v.begin());
  }

  /// Coordinates selected by mask, ascending.
  SupportSpec restrict(CoordMask mask) const {
    std::vector<std::vector<int>> out;
    for (std::size_t k = 0; k < q(); ++k)
      if (mask >> k & 1U) out.push_back(values_[k]);
    return SupportSpec(std::move(out));
  }

  bool operator==(const SupportSpec& o) const { return values_ == o.values_; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<std::vector<int>> values_;
  std::vector<std::uint64_t> strides_;
  std::uint64_t count_ = 0;
};

inline std::uint64_t state_index(const SupportSpec& spec, const State& x) {
  if (x.size() != spec.q())
    throw DomainError("state has " + std::to_string(x.size()) + " coordinates, expected " +
                      std::to_string(spec.q()));
  std::uint64_t idx = 0;
  for (std::size_t k = 0; k < spec.q(); ++k) {
    const std::size_t pos = spec.position(k, x[k]);
    if (pos == SupportSpec::npos)
      throw DomainError("coordinate x" + std::to_string(k + 1) + " value " +
                        std::to_string(x[k]) + " is outside the support");
    idx += pos * spec.stride(k);
  }
  return idx;
}

inline State state_at(const SupportSpec& spec, std::uint64_t index) {
  if (index >= spec.state_count())
    throw DomainError("state index " + std::to_string(index) + " out of range");
  State x(spec.q());
  for (std::size_t k = 0; k < spec.q(); ++k) {
    x[k] = spec.values(k)[index / spec.stride(k)];
    index %= spec.stride(k);
  }
  return x;
}

/// Maps every full-state index to its index in spec.restrict(mask).
inline std::vector<std::uint32_t> projection_map(const SupportSpec& spec, CoordMask mask) {
  if (spec.state_count() > std::numeric_limits<std::uint32_t>::max())
    throw CapacityError("support too large for a dense projection map");
  const auto n = static_cast<std::size_t>(spec.state_count());
  std::vector<std::uint64_t> sub_stride(spec.q(), 0);
  std::uint64_t s = 1;
  for (std::size_t k = spec.q(); k-- > 0;) {
    if (mask >> k & 1U) {
      sub_stride[k] = s;
      s *= spec.radix(k);
    }
  }
  std::vector<std::uint32_t> out(n);
  std::vector<std::size_t> digit(spec.q(), 0);
  std::uint64_t cur = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = static_cast<std::uint32_t>(cur);
    // odometer increment, least significant digit last
    for (std::size_t k = spec.q(); k-- > 0;) {
      if (++digit[k] < spec.radix(k)) {
        cur += sub_stride[k];
        break;
      }
      cur -= sub_stride[k] * (spec.radix(k) - 1);
      digit[k] = 0;
    }
  }
  return out;
}

/// Non-empty coordinate subset S, bit k set for coordinate k+1.
class SubsetId {
 public:
  explicit SubsetId(CoordMask mask) : mask_(mask) {
    if (mask == 0) throw DomainError("subset id must be non-empty");
  }

  /// From 1-based coordinates.
  static SubsetId of(std::initializer_list<std::size_t> coords) {
    CoordMask m = 0;
    for (std::size_t c : coords) {
      if (c == 0 || c > kMaxCoordinates) throw DomainError("coordinate out of range");
      m |= CoordMask{1} << (c - 1);
    }
    return SubsetId(m);
  }

  CoordMask mask() const noexcept { return mask_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(std::popcount(mask_)); }
  bool fits(std::size_t q) const noexcept {
    return q >= 64 || (mask_ >> q) == 0;
  }

  auto operator<=>(const SubsetId&) const = default;

 private:
  CoordMask mask_;
};

/// Ordered pair (left | right) of disjoint non-empty subsets.
class PartitionId {
 public:
  PartitionId(SubsetId left, SubsetId right) : left_(left), right_(right) {
    if ((left.mask() & right.mask()) != 0)
      throw DomainError("partition blocks must be disjoint");
  }

  SubsetId left() const noexcept { return left_; }
  SubsetId right() const noexcept { return right_; }
  CoordMask joint_mask() const noexcept { return left_.mask() | right_.mask(); }
  bool fits(std::size_t q) const noexcept { return left_.fits(q) && right_.fits(q); }

  auto operator<=>(const PartitionId&) const = default;

 private:
  SubsetId left_;
  SubsetId right_;
};

inline std::vector<SubsetId> enumerate_subsets(const SupportSpec& spec,
                                               std::size_t cap = kDefaultSubsetCap) {
  if (spec.q() > cap)
    throw CapacityError("subset enumeration refused for q = " + std::to_string(spec.q()) +
                        " (cap " + std::to_string(cap) + ")");
  std::vector<SubsetId> out;
  const CoordMask full = spec.full_mask();
  out.reserve(static_cast<std::size_t>(full));
  for (CoordMask m = 1; m <= full; ++m) out.emplace_back(m);
  return out;
}

/// All ordered (left, right) pairs, lexicographic in (left mask, right mask).
inline std::vector<PartitionId> enumerate_partitions(const SupportSpec& spec,
                                                     std::size_t cap = kDefaultPartitionCap) {
  if (spec.q() > cap)
    throw CapacityError("partition enumeration refused for q = " + std::to_string(spec.q()) +
                        " (cap " + std::to_string(cap) + ")");
  std::vector<PartitionId> out;
  const CoordMask full = spec.full_mask();
  for (CoordMask left = 1; left <= full; ++left) {
    const CoordMask rest = full & ~left;
    for (CoordMask right = 1; right <= rest; ++right)
      if ((right & ~rest) == 0) out.emplace_back(SubsetId(left), SubsetId(right));
  }
  return out;
}

// Canonical text: "{1,3}" and "{1}|{2,3}".
inline std::string to_string(SubsetId s) {
  std::string out = "{";
  bool first = true;
  for (std::size_t k = 0; k < kMaxCoordinates; ++k) {
    if (s.mask() >> k & 1U) {
      if (!first) out += ',';
      out += std::to_string(k + 1);
      first = false;
    }
  }
  return out + "}";
}

inline std::string to_string(const PartitionId& t) {
  return to_string(t.left()) + "|" + to_string(t.right());
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace detail

inline SubsetId parse_subset(std::string_view text) {
  text = detail::trim(text);
  if (text.size() < 2 || text.front() != '{' || text.back() != '}')
    throw DomainError("malformed subset id '" + std::string(text) + "'");
  text = text.substr(1, text.size() - 2);
  CoordMask mask = 0;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto tok = detail::trim(text.substr(0, comma));
    std::size_t c = 0;
    if (tok.empty()) throw DomainError("empty coordinate in subset id");
    for (char ch : tok) {
      if (ch < '0' || ch > '9') throw DomainError("bad coordinate '" + std::string(tok) + "'");
      c = c * 10 + static_cast<std::size_t>(ch - '0');
      if (c > kMaxCoordinates) throw DomainError("coordinate out of range");
    }
    if (c == 0) throw DomainError("coordinates are 1-based");
    const CoordMask bit = CoordMask{1} << (c - 1);
    if (mask & bit) throw DomainError("duplicate coordinate in subset id");
    mask |= bit;
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return SubsetId(mask);
}

inline PartitionId parse_partition(std::string_view text) {
  const auto bar = text.find('|');
  if (bar == std::string_view::npos)
    throw DomainError("partition id needs a '|' separator");
  return PartitionId(parse_subset(text.substr(0, bar)), parse_subset(text.substr(bar + 1)));
}

}  // namespace mpl

#endif  // MPL_SUPPORT_HPP
