#pragma once

#include <array>
#include <cstdint>

namespace spfti {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The 64-bit seed is the key; a 128-bit counter advances once per block of
/// four 32-bit outputs. Streams are therefore reproducible bit-for-bit on
/// any platform, and independent streams are obtained from distinct seeds
/// (see `derive_seed`).
class Philox {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0);

  /// One block for an explicit counter and key.
  static Block block(const Block& counter, std::array<std::uint32_t, 2> key);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller (both outputs used).
  double normal();

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  Block counter_{};
  Block buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Mixes a base seed with a purpose tag and indices into a new 64-bit seed
/// (SplitMix64 finalizer), used to give every trial its own stream.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag, std::uint64_t a = 0,
                          std::uint64_t b = 0);

}  // namespace spfti
