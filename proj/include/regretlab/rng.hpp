#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace regretlab {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3"). Stateless: the output is a pure function of
/// (counter, key), which is what lets every consumer address its own draws.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static constexpr Counter block(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }
};

/// Named streams. Keeping them disjoint means playout draws never perturb
/// adversary draws and vice versa.
enum class Stream : std::uint32_t {
  kLearner = 1,
  kAdversary = 2,
  kPlayout = 3,
  kAdversarySimulation = 4,
  kRelaxation = 5,
  kTree = 6,
  kOracle = 7,
  kBench = 8,
};

namespace detail {

constexpr std::uint32_t kSignTag = 0x00000000u;
constexpr std::uint32_t kGaussTag = 0x40000000u;
constexpr std::uint32_t kUniformTag = 0x80000000u;
constexpr std::uint32_t kSequentialTag = 0xC0000000u;

inline double to_unit_open(std::uint32_t hi, std::uint32_t lo) noexcept {
  // 53 random bits mapped to (0, 1).
  const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace detail

/// Random noise addressed by (sample, position). Two evaluations that use the
/// same field and the same (sample, position) see the same value, so Monte
/// Carlo estimates for different prefixes automatically share their draws.
class NoiseField {
 public:
  NoiseField() = default;
  NoiseField(std::uint64_t seed, Stream stream, std::uint32_t substream = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(static_cast<std::uint32_t>(stream) & 0x3FFFFFFFu),
        substream_(substream) {}

  NoiseField with_substream(std::uint32_t substream) const {
    NoiseField f = *this;
    f.substream_ = substream;
    return f;
  }

  std::uint32_t substream() const { return substream_; }

  /// 128 sign bits for positions [128*block, 128*block + 128).
  Philox4x32::Counter sign_block(std::uint64_t sample, std::uint64_t block) const {
    return Philox4x32::block(
        {static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(sample), substream_,
         stream_ | detail::kSignTag | (static_cast<std::uint32_t>(block >> 32) << 24)},
        key_);
  }

  int sign(std::uint64_t sample, std::uint64_t pos) const {
    const auto b = sign_block(sample, pos >> 7);
    const std::uint32_t word = b[(pos >> 5) & 3u];
    return ((word >> (pos & 31u)) & 1u) ? 1 : -1;
  }

  double uniform(std::uint64_t sample, std::uint64_t pos) const {
    const auto b = Philox4x32::block({static_cast<std::uint32_t>(pos), static_cast<std::uint32_t>(sample),
                                      substream_, stream_ | detail::kUniformTag},
                                     key_);
    return detail::to_unit_open(b[0], b[1]);
  }

  /// Standard normal via Box-Muller on one Philox block.
  double gaussian(std::uint64_t sample, std::uint64_t pos) const {
    const auto b = Philox4x32::block({static_cast<std::uint32_t>(pos), static_cast<std::uint32_t>(sample),
                                      substream_, stream_ | detail::kGaussTag},
                                     key_);
    const double u1 = detail::to_unit_open(b[0], b[1]);
    const double u2 = detail::to_unit_open(b[2], b[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  Philox4x32::Key key_{0, 0};
  std::uint32_t stream_ = 0;
  std::uint32_t substream_ = 0;
};

/// Sequential generator over a counter-based stream. Satisfies
/// UniformRandomBitGenerator, so it also plugs into <random> if needed.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng() = default;
  CounterRng(std::uint64_t seed, Stream stream, std::uint32_t substream = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(static_cast<std::uint32_t>(stream) & 0x3FFFFFFFu),
        substream_(substream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (buffered_ == 0) {
      block_ = Philox4x32::block({static_cast<std::uint32_t>(position_), static_cast<std::uint32_t>(position_ >> 32),
                                  substream_, stream_ | detail::kSequentialTag},
                                 key_);
      ++position_;
      buffered_ = 2;
    }
    --buffered_;
    const std::size_t i = buffered_ == 1 ? 0 : 2;
    return (std::uint64_t{block_[i]} << 32) | block_[i + 1];
  }

  /// Uniform on (0, 1).
  double uniform() {
    const result_type x = (*this)();
    return detail::to_unit_open(static_cast<std::uint32_t>(x >> 32), static_cast<std::uint32_t>(x));
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  int sign() { return ((*this)() >> 63) ? 1 : -1; }

  bool bernoulli(double p) { return uniform() < p; }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

  std::uint64_t draws() const { return position_; }

 private:
  Philox4x32::Key key_{0, 0};
  std::uint32_t stream_ = 0;
  std::uint32_t substream_ = 0;
  std::uint64_t position_ = 0;
  Philox4x32::Counter block_{};
  int buffered_ = 0;
};

}  // namespace regretlab
