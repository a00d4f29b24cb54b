#ifndef MPL_RANDOM_HPP
#define MPL_RANDOM_HPP

#include <array>
#include <cstdint>
#include <limits>

namespace mpl {

inline constexpr const char* kGeneratorId = "philox4x64-10/v1";

/// Counter-based Philox4x64 with 10 rounds (Salmon et al. 2011). Output
/// sequence matches numpy.random.Philox for the same key and counter: the
/// counter is incremented before each block of four words.
class Philox4x64 {
 public:
  using result_type = std::uint64_t;
  using Counter = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  Philox4x64(Key key, Counter counter) : key_(key), ctr_(counter) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (pos_ == 4) {
      increment();
      block_ = bijection(ctr_, key_);
      pos_ = 0;
    }
    return block_[pos_++];
  }

  static Counter bijection(Counter c, Key k) {
    __extension__ using u128 = unsigned __int128;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        k[0] += 0x9E3779B97F4A7C15ULL;
        k[1] += 0xBB67AE8584CAA73BULL;
      }
      const auto p0 = static_cast<u128>(0xD2E7470EE14C6C93ULL) * c[0];
      const auto p1 = static_cast<u128>(0xCA5A826395121157ULL) * c[2];
      const auto hi0 = static_cast<std::uint64_t>(p0 >> 64);
      const auto lo0 = static_cast<std::uint64_t>(p0);
      const auto hi1 = static_cast<std::uint64_t>(p1 >> 64);
      const auto lo1 = static_cast<std::uint64_t>(p1);
      c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
    return c;
  }

 private:
  void increment() {
    for (auto& w : ctr_)
      if (++w != 0) break;
  }

  Key key_;
  Counter ctr_;
  Counter block_{};
  int pos_ = 4;
};

/// (master, replicate) is the Philox key, so distinct pairs give distinct
/// keys. Counter word 3 selects a substream within a replicate.
struct SeedSpec {
  std::uint64_t master = 0;
  std::uint64_t replicate = 0;

  bool operator==(const SeedSpec&) const = default;
};

enum class Substream : std::uint64_t {
  data = 0,
  init = 1,
  truth = 2,
};

inline Philox4x64 make_stream(const SeedSpec& seed, Substream purpose = Substream::data) {
  return Philox4x64({seed.master, seed.replicate},
                    {0, 0, 0, static_cast<std::uint64_t>(purpose)});
}

/// Uniform on [0, 1) from the top 53 bits.
inline double uniform01(Philox4x64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform(Philox4x64& g, double lo, double hi) {
  return lo + (hi - lo) * uniform01(g);
}

}  // namespace mpl

#endif  // MPL_RANDOM_HPP
