#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace mobility {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// The 64-bit seed is the key; the 128-bit counter is split into a 64-bit
/// stream id and a 64-bit block index. Output is a pure function of
/// (seed, stream, position), so results are identical on every platform.
class Philox {
 public:
  using result_type = std::uint64_t;
  static constexpr std::string_view algorithm = "philox4x32-10";

  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform in (0, 1].
  double uniform_open_low() { return 1.0 - uniform(); }
  double normal();
  std::uint32_t poisson(double mean);

  /// One raw Philox block.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                            std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t index_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);

/// Seed for run `index` of experiment `name` under `master`:
/// splitmix64(splitmix64(splitmix64(master) ^ fnv1a64(name)) ^ index).
std::uint64_t derive_seed(std::uint64_t master, std::string_view name, std::uint64_t index);

}  // namespace mobility
