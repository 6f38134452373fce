#include "excursion/rng.hpp"

#include <cmath>
#include <numbers>

namespace excursion {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replicate,
                          NoiseStream stream) noexcept {
  const std::uint64_t counter = (replicate << 1) | static_cast<std::uint64_t>(stream);
  return mix64(master ^ mix64(counter));
}

namespace {

constexpr double kTwoPow53 = 9007199254740992.0;

// Maps the top 53 bits to (0, 1].
double to_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 1.0) / kTwoPow53;
}

std::uint64_t site_counter(const std::array<std::int64_t, 3>& site) noexcept {
  // 21 bits per coordinate, offset to be non-negative.
  constexpr std::int64_t kOffset = std::int64_t{1} << 20;
  constexpr std::uint64_t kMask = (std::uint64_t{1} << 21) - 1;
  return (static_cast<std::uint64_t>(site[0] + kOffset) & kMask) << 42 |
         (static_cast<std::uint64_t>(site[1] + kOffset) & kMask) << 21 |
         (static_cast<std::uint64_t>(site[2] + kOffset) & kMask);
}

}  // namespace

double keyed_uniform(std::uint64_t key, std::uint64_t counter) noexcept {
  return to_unit(mix64(key ^ mix64(counter)));
}

double site_gaussian(std::uint64_t key, const std::array<std::int64_t, 3>& site) noexcept {
  const std::uint64_t a = mix64(key ^ mix64(site_counter(site)));
  const std::uint64_t b = mix64(a ^ 0xd1b54a32d192ed03ULL);
  const double u1 = to_unit(a);
  const double u2 = to_unit(b);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace excursion
