#pragma once

#include <cstdint>
#include <random>

namespace nanoqmc {

// Streams are std::mt19937_64 engines. Each stream is seeded from the master
// seed, a stream tag and an index through std::seed_seq, whose mixing
// algorithm is fixed by the standard, so derived seeds are portable.
enum class StreamTag : std::uint32_t {
  single_atom = 1,
  atom_pair = 2,
  site_sampling = 3,
  generic = 4,
};

std::uint64_t derive_seed(std::uint64_t master, StreamTag tag, std::uint64_t index);

// Uniform double in [0, 1) built from the top 53 bits of one draw.
inline double uniform01(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace nanoqmc
