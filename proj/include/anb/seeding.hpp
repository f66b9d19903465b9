#pragma once

#include <cstdint>
#include <initializer_list>

namespace anb {

// splitmix64 finaliser: derives independent stream seeds from one seed.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_values(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> values) {
  std::uint64_t h = mix_seed(seed, 0);
  for (auto v : values) {
    h = mix_seed(h ^ v, v);
  }
  return h;
}

} // namespace anb
