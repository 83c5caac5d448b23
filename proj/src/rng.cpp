#include "fidmag/rng.hpp"

namespace fidmag {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t trial, Stream stream) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ splitmix64(trial + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  return h;
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace fidmag
