#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gfair {

// Named sub-stream of a root seed, stable across runs and platforms.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream);

inline std::mt19937_64 make_rng(std::uint64_t root, std::string_view stream) {
  return std::mt19937_64(derive_seed(root, stream));
}

}  // namespace gfair
