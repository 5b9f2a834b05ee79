#pragma once

#include <array>
#include <cstdint>
#include <utility>

namespace crossdiff {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A 128-bit
/// counter and a 64-bit key map to 128 random bits; no state is carried
/// between calls.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// What a draw is used for. Kept in the counter so that different uses of
/// the same (replica, species, particle, index) never share bits.
enum class Purpose : std::uint32_t {
  brownian = 0,
  initial = 1,
  projection = 2,
  resample = 3,
  synthetic = 4,
};

/// Key of a single draw.
struct NoiseKey {
  std::uint32_t replica = 0;
  std::uint32_t species = 0;
  std::uint32_t particle = 0;
  std::uint32_t index = 0;  ///< time step, rejection attempt, projection, ...
  Purpose purpose = Purpose::brownian;
};

/// Counter-based noise source. The same seed and key always give the same
/// numbers, independent of evaluation order or thread.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::array<std::uint32_t, 4> bits(const NoiseKey& key) const;

  /// Two independent uniforms in (0, 1).
  std::pair<double, double> uniform2(const NoiseKey& key) const;

  /// Two independent standard normals (Box-Muller on uniform2).
  std::pair<double, double> normal2(const NoiseKey& key) const;

 private:
  std::uint64_t seed_;
};

}  // namespace crossdiff
