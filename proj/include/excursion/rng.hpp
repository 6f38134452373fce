#pragma once

#include <array>
#include <cstdint>

namespace excursion {

enum class NoiseStream : std::uint8_t { W = 0, Wprime = 1 };

// Bijective 64-bit finalizer (splitmix64).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed for one (replicate, stream) pair. For a fixed master seed the map is
// injective in (replicate, stream), so derived seeds never collide.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replicate,
                          NoiseStream stream) noexcept;

// Standard normal deviate attached to a lattice site. A pure function of the
// key and the site's global integer coordinates, so values do not depend on
// iteration order, box size or thread count.
double site_gaussian(std::uint64_t key, const std::array<std::int64_t, 3>& site) noexcept;

// Uniform (0, 1] deviate keyed like site_gaussian; used by tests and the
// Lilliefors table.
double keyed_uniform(std::uint64_t key, std::uint64_t counter) noexcept;

}  // namespace excursion
