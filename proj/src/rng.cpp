#include "mobility/rng.hpp"

#include <cmath>
#include <numbers>

namespace mobility {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> Philox::block(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

Philox::Philox(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      stream_(stream) {}

void Philox::refill() {
  const std::array<std::uint32_t, 4> ctr{
      static_cast<std::uint32_t>(index_), static_cast<std::uint32_t>(index_ >> 32),
      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  buffer_ = block(ctr, key_);
  ++index_;
  used_ = 0;
}

Philox::result_type Philox::operator()() {
  if (used_ > 2) refill();
  const std::uint64_t lo = buffer_[used_];
  const std::uint64_t hi = buffer_[used_ + 1];
  used_ += 2;
  return (hi << 32) | lo;
}

double Philox::uniform() {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double Philox::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  const double u1 = uniform_open_low();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint32_t Philox::poisson(double mean) {
  if (mean <= 0.0) return 0;
  // Sequential inversion anchored at the mode keeps the pmf recursion away
  // from underflow for the moderate means used here (d up to a few hundred).
  const std::uint32_t mode = static_cast<std::uint32_t>(std::floor(mean));
  const double log_pmf_mode = mode * std::log(mean) - mean - std::lgamma(mode + 1.0);
  const double pmf_mode = std::exp(log_pmf_mode);
  double u = uniform();
  // Walk outward from the mode alternating up/down. The order is fixed, so
  // the map u -> k is a deterministic measure-preserving bijection.
  double up = pmf_mode;
  double down = pmf_mode;
  std::uint32_t k_up = mode;
  std::uint32_t k_down = mode;
  u -= pmf_mode;
  if (u < 0.0) return mode;
  for (;;) {
    bool progressed = false;
    {
      up *= mean / (k_up + 1.0);
      ++k_up;
      u -= up;
      if (u < 0.0) return k_up;
      progressed = progressed || up > 0.0;
    }
    if (k_down > 0) {
      down *= k_down / mean;
      --k_down;
      u -= down;
      if (u < 0.0) return k_down;
      progressed = progressed || down > 0.0;
    }
    if (!progressed) return k_up;
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view name, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(master) ^ fnv1a64(name)) ^ index);
}

}  // namespace mobility
