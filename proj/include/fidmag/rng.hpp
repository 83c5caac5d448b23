#pragma once

#include <cstdint>
#include <random>

namespace fidmag {

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Named sub-streams so that, e.g., the field noise of a trial does not
/// depend on how many draws the polarimeter noise consumed.
enum class Stream : std::uint64_t {
  kFieldNoise = 1,
  kReferencePhase = 2,
  kDetectorNoise = 3,
  kPolarimeterNoise = 4,
  kHarmonicPhase = 5,
  kPhaseNoise = 6,
  kAuxiliary = 7,
};

/// Counter-based seed for (base seed, trial index, stream). Depends only on
/// its arguments, never on scheduling order.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t trial, Stream stream);

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

/// FNV-1a over bytes; stable across builds, used for provenance hashes.
std::uint64_t fnv1a(const void* data, std::size_t size,
                    std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace fidmag
