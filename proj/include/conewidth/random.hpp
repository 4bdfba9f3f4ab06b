#pragma once

#include <cstdint>
#include <random>

namespace conewidth {

using Rng = std::mt19937_64;

// What a stream is used for. Part of the seed derivation so that, e.g., the
// design and the noise of one trial never share a stream.
enum class StreamRole : std::uint64_t {
  truth = 1,
  design = 2,
  noise = 3,
  width = 4,
  localized_width = 5,
  global_width = 6,
  rsc = 7,
  calibration = 8,
  generic = 9,
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Counter-based seed derivation: the seed of a stream depends only on
/// (master, index, role), never on scheduling order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                    StreamRole role) noexcept {
  std::uint64_t s = detail::splitmix64(master);
  s = detail::splitmix64(s ^ index);
  return detail::splitmix64(s ^ static_cast<std::uint64_t>(role));
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                    std::uint64_t sub_index, StreamRole role) noexcept {
  return derive_seed(derive_seed(master, index, role), sub_index, role);
}

inline Rng make_stream(std::uint64_t seed) { return Rng(seed); }

inline Rng make_stream(std::uint64_t master, std::uint64_t index, StreamRole role) {
  return Rng(derive_seed(master, index, role));
}

}  // namespace conewidth
